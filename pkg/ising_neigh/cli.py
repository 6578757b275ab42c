"""Command line entry point.

``ising-neigh simulate|select|cut|reduce|estimate|experiment``
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, NoReturn, Optional, Sequence

import pandas as pd

from ising_neigh import __version__
from ising_neigh.config import (
    DEFAULT_CUT,
    DEFAULT_DELTA,
    DEFAULT_KAPPA,
    DEFAULT_KEPT_CAP,
    DEFAULT_MAX_CARD,
    CutSpec,
    ExperimentConfig,
    SamplerConfig,
    Settings,
    parse_c_grid,
)
from ising_neigh.errors import InputError, IsingNeighError
from ising_neigh.harness import coverage_constants, emit, resolve_model, run_experiment
from ising_neigh.model import as_site_set
from ising_neigh.neighborhood import (
    cut_details,
    efficient_select,
    reduce_sites,
    screen,
    two_step_estimate,
)
from ising_neigh.sampler import load_samples, sample, save_samples
from ising_neigh.selection import CandidateCollection, select_model, slope_select

logger = logging.getLogger("ising_neigh")

DEFAULT_GRID = "0.01:10:50"


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the input-error code; 2 is reserved for capacity."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(InputError.exit_code, f"{self.prog}: error: {message}\n")


def _site_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(
            f"expected comma separated site ids, got '{text}'"
        ) from e


def _write_frame(frame: pd.DataFrame, out: Optional[str]) -> None:
    if out is None:
        frame.to_csv(sys.stdout, index=False)
        return
    try:
        frame.to_csv(out, index=False)
    except OSError as e:
        raise InputError(f"Cannot write {out}: {e}") from e


def _sites_text(sites: Sequence[int]) -> str:
    return " ".join(str(s) for s in sites)


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    model = resolve_model(args.model)
    config = SamplerConfig(
        seed=args.seed,
        burn_in=args.burn_in,
        thinning=args.thinning,
        scan=args.scan,
        exact_cap=args.exact_cap,
    )
    samples = sample(model, args.n, config, kind=args.sampler)
    save_samples(samples, args.out)
    logger.info("wrote %d samples over %d sites to %s", samples.n, samples.M, args.out)
    return 0


def cmd_select(args: argparse.Namespace, settings: Settings) -> int:
    samples = load_samples(args.samples)
    collection = CandidateCollection.for_site(
        samples.site_labels, args.site, args.max_card
    )
    if args.c is not None:
        result = select_model(
            samples, args.site, collection, args.c, args.delta, args.pen_form,
            with_ledger=True, workers=settings.threads,
        )
    else:
        result = slope_select(
            samples, args.site, collection, parse_c_grid(args.c_grid), args.measure,
            args.delta, args.pen_form, with_ledger=True, workers=settings.threads,
        )
    print(
        f"site={args.site} selected={_sites_text(result.chosen)} "
        f"C={result.C:.6g} score={result.score:.6g}"
    )
    if args.out:
        result.write_ledger(args.out)
    return 0


def cmd_cut(args: argparse.Namespace, settings: Settings) -> int:
    samples = load_samples(args.samples)
    spec = CutSpec.parse(args.cut, args.delta)
    result = cut_details(samples, args.site, args.set, spec)
    frame = pd.DataFrame(
        {
            "site": list(result.omegas),
            "omega": list(result.omegas.values()),
            "threshold": result.threshold,
            "kept": [j in result.kept for j in result.omegas],
        }
    )
    _write_frame(frame, args.out)
    return 0


def cmd_reduce(args: argparse.Namespace, settings: Settings) -> int:
    samples = load_samples(args.samples)
    universe = [s for s in samples.site_labels if s != args.site]
    if args.eta is not None:
        result = reduce_sites(samples, args.site, universe, args.eta)
    else:
        result = screen(
            samples, args.site, universe, args.delta, args.kappa,
            args.kept_cap, args.kept_target,
        )
    frame = result.frame()
    frame["eta"] = result.eta
    frame["eta_ms"] = result.eta_ms
    _write_frame(frame, args.out)
    return 0


def cmd_estimate(args: argparse.Namespace, settings: Settings) -> int:
    samples = load_samples(args.samples)
    grid = parse_c_grid(args.c_grid)
    if args.method == "efficient":
        universe = [s for s in samples.site_labels if s != args.site]
        result = efficient_select(
            samples, args.site, universe, args.delta, args.kappa, C_grid=grid,
            measure=args.measure, cap=args.kept_cap, kept_target=args.kept_target,
            workers=settings.threads,
        )
        frame = pd.DataFrame(
            [{
                "site": args.site,
                "method": "efficient",
                "kept": _sites_text(result.reduction.kept),
                "eta": result.reduction.eta,
                "selected": _sites_text(result.chosen),
                "estimate": _sites_text(result.chosen),
            }]
        )
    else:
        collection = CandidateCollection.for_site(
            samples.site_labels, args.site, args.max_card
        )
        spec = CutSpec.parse(args.cut, args.delta)
        two_step = two_step_estimate(
            samples, args.site, collection, grid, args.measure, spec, settings.threads
        )
        frame = pd.DataFrame(
            [{
                "site": args.site,
                "method": "select-cut",
                "C": two_step.selection.C,
                "selected": _sites_text(two_step.selection.chosen),
                "threshold": two_step.cut.threshold,
                "estimate": _sites_text(two_step.estimate),
            }]
        )
    _write_frame(frame, args.out)
    return 0


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    data = {}
    if args.config:
        data = ExperimentConfig.load(args.config).model_dump()
    elif not args.scenario:
        raise InputError("experiment needs --config or --scenario")
    overrides = {
        "scenario": args.scenario,
        "model": args.model,
        "site": args.site,
        "sample_sizes": args.n,
        "replicas": args.replicas,
        "seed": args.seed,
        "c_grid": args.c_grid,
        "measures": [args.measure] if args.measure else None,
        "cut": args.cut,
        "delta": args.delta,
        "kappa": args.kappa,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(data)


def cmd_experiment(args: argparse.Namespace, settings: Settings) -> int:
    config = _experiment_config(args)
    table = run_experiment(config, settings)
    coverage = None
    if config.scenario == "variance_coverage":
        coverage = coverage_constants(table, config.delta)
        for row in coverage.itertuples(index=False):
            logger.info("n=%d: empirical constant %.6g", row.n, row.empirical_constant)
    if args.out:
        emit(table, args.format, args.out)
        if args.format == "csv":
            aggregate_path = Path(args.out).with_suffix(".mean.csv")
            _write_frame(table.aggregates(), str(aggregate_path))
            if coverage is not None:
                coverage_path = Path(args.out).with_suffix(".coverage.csv")
                _write_frame(coverage, str(coverage_path))
    else:
        if args.format != "csv":
            raise InputError("--format svg needs --out")
        table.frame.to_csv(sys.stdout, index=False)
    return 0


def _add_samples_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", required=True, help="Sample file (text or .npz)")
    p.add_argument("--site", type=int, required=True, help="Target site id")
    p.add_argument(
        "--delta", type=float, default=DEFAULT_DELTA, help="Confidence parameter (> 1)"
    )
    p.add_argument("--out", help="Output CSV path (stdout when omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ising-neigh",
        description="Interaction neighborhood estimation for Ising models",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="More logging (repeatable)"
    )
    parser.add_argument("-q", "--quiet", action="store_true", help="Only log errors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Draw samples from a model")
    p.add_argument(
        "--model", required=True, help="Model file or bundled name (grid3x3, sparse200)"
    )
    p.add_argument("--n", type=int, required=True, help="Number of samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sampler", choices=["auto", "exact", "gibbs"], default="auto")
    p.add_argument("--burn-in", type=int, default=SamplerConfig().burn_in)
    p.add_argument("--thinning", type=int, default=SamplerConfig().thinning)
    p.add_argument("--scan", choices=["random", "systematic"], default="random")
    p.add_argument("--exact-cap", type=int, default=SamplerConfig().exact_cap)
    p.add_argument(
        "--out", required=True, help="Output sample file (.npz for the packed format)"
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("select", help="Penalized selection of a conditioning set")
    _add_samples_args(p)
    p.add_argument("--max-card", type=int, default=DEFAULT_MAX_CARD)
    p.add_argument(
        "--c", type=float, help="Fixed penalty constant (skips the slope heuristic)"
    )
    p.add_argument(
        "--c-grid", default=DEFAULT_GRID, help="low:high:points or comma separated list"
    )
    p.add_argument("--measure", choices=["dimension", "variance"], default="dimension")
    p.add_argument("--pen-form", choices=["standard", "gamma"], default="standard")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("cut", help="Cut weak sites out of a candidate set")
    _add_samples_args(p)
    p.add_argument(
        "--set", type=_site_list, required=True, help="Candidate set, comma separated"
    )
    p.add_argument("--cut", default=DEFAULT_CUT, help="sqrt:<c> or inverse:<c>")
    p.set_defaults(func=cmd_cut)

    p = sub.add_parser("reduce", help="Screen sites by pair correlation")
    _add_samples_args(p)
    p.add_argument("--eta", type=float, help="Fixed threshold (otherwise searched)")
    p.add_argument("--kappa", type=float, default=DEFAULT_KAPPA)
    p.add_argument("--kept-cap", type=int, default=DEFAULT_KEPT_CAP)
    p.add_argument("--kept-target", type=int, help="Keep exactly this many sites")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser(
        "estimate", help="Estimate the interaction neighborhood of a site"
    )
    _add_samples_args(p)
    p.add_argument(
        "--method", choices=["select-cut", "efficient"], default="select-cut"
    )
    p.add_argument("--max-card", type=int, default=DEFAULT_MAX_CARD)
    p.add_argument("--c-grid", default=DEFAULT_GRID)
    p.add_argument("--measure", choices=["dimension", "variance"], default="dimension")
    p.add_argument("--cut", default=DEFAULT_CUT)
    p.add_argument("--kappa", type=float, default=DEFAULT_KAPPA)
    p.add_argument("--kept-cap", type=int, default=DEFAULT_KEPT_CAP)
    p.add_argument("--kept-target", type=int)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("experiment", help="Run a simulation scenario")
    p.add_argument("--config", help="Experiment config JSON")
    p.add_argument("--scenario")
    p.add_argument("--model")
    p.add_argument("--site", type=int)
    p.add_argument("--n", type=_site_list, help="Comma separated sample sizes")
    p.add_argument("--replicas", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--c-grid")
    p.add_argument("--measure", choices=["dimension", "variance"])
    p.add_argument("--cut")
    p.add_argument("--delta", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "svg"], default="csv")
    p.set_defaults(func=cmd_experiment)
    return parser


def _configure_logging(args: argparse.Namespace, settings: Settings) -> None:
    if args.quiet:
        level = logging.ERROR
    elif args.verbose >= 2:
        level = logging.DEBUG
    elif args.verbose == 1:
        level = logging.INFO
    else:
        level = getattr(logging, settings.log_level, logging.WARNING)
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = Settings.from_env()
        _configure_logging(args, settings)
        return args.func(args, settings)
    except IsingNeighError as e:
        logger.error("%s", e)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
