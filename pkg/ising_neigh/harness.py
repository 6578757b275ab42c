"""Simulation scenarios, discovery rates, risk ratios and result tables."""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats as sps

from ising_neigh.config import ExperimentConfig, Settings
from ising_neigh.empirical import build_table, p_hat_min
from ising_neigh.errors import CapacityError, InputError
from ising_neigh.model import (
    IsingModel,
    SiteSet,
    as_site_set,
    load_model,
    model_from_document,
    random_sparse_model,
    ranked_partners,
    true_neighborhood,
)
from ising_neigh.neighborhood import cut_details, efficient_select, screen
from ising_neigh.oracle import VARIANCE_CONSTANT, RiskOracle, screening_sandwich
from ising_neigh.sampler import SampleSet, derive_seed, sample
from ising_neigh.selection import (
    CandidateCollection,
    calibrate_from_stats,
    evaluate_candidates,
    select_from_stats,
)

logger = logging.getLogger(__name__)

KEY_COLUMNS = ["scenario", "n", "replica", "seed", "sampler"]
ORACLE_SCENARIOS = {
    "fig2_variance",
    "fig3_riskratio",
    "fig4_on_discovery",
    "fig6_oracle_vs_truth",
    "fig7_8_select_cut",
    "variance_coverage",
}
# bundled model names and the target site each scenario uses by default
BUNDLED_MODELS = {"grid3x3": 4, "sparse200": 1}
TOP_RANKS = 5


def discovery_rates(
    estimated: Iterable[int], reference: Iterable[int], universe: Iterable[int]
) -> Tuple[float, float]:
    """Positive and negative discovery rates of ``estimated`` against ``reference``."""
    est, ref, uni = set(estimated), set(reference), set(universe)
    if not (est <= uni and ref <= uni):
        raise InputError("Estimated and reference sets must lie inside the universe")
    pdr = len(est & ref) / len(ref) if ref else 1.0
    negatives = uni - ref
    ndr = len(uni - (est | ref)) / len(negatives) if negatives else 1.0
    return pdr, ndr


@dataclass(frozen=True)
class RiskRatio:
    value: float
    degenerate: bool = False


def ratio_of(numerator: float, denominator: float) -> RiskRatio:
    if denominator == 0.0:
        logger.info("risk ratio with zero oracle risk reported as inf")
        return RiskRatio(math.inf, True)
    return RiskRatio(numerator / denominator)


def risk_ratio(
    samples: SampleSet,
    model: IsingModel,
    i: int,
    estimate: Sequence[int],
    collection: Iterable[SiteSet],
    oracle: Optional[RiskOracle] = None,
) -> RiskRatio:
    """Risk of ``estimate`` over the smallest risk reachable inside ``collection``."""
    oracle = oracle or RiskOracle(model, i)
    _, best = oracle.best(samples, collection)
    return ratio_of(oracle.risk(samples, as_site_set(estimate)), best)


def empirical_constant(ratios: Sequence[float], delta: float) -> float:
    """Smallest c such that at most a 1/delta fraction of ``ratios`` exceeds c."""
    if not ratios:
        raise InputError("No ratios to calibrate")
    ordered = sorted(ratios, reverse=True)
    allowed = math.floor(len(ordered) / delta)
    return float(ordered[allowed]) if allowed < len(ordered) else 0.0


class ResultTable:
    """One row per (n, replica) with metric columns, plus per-n means."""

    def __init__(self, frame: pd.DataFrame):
        if frame.empty:
            raise InputError("Result table is empty")
        self.frame = frame.reset_index(drop=True)

    @property
    def metrics(self) -> List[str]:
        return [c for c in self.frame.columns if c not in KEY_COLUMNS]

    def aggregates(self) -> pd.DataFrame:
        """Mean of every numeric metric per n, summed in row order."""
        numeric = [
            c for c in self.metrics if pd.api.types.is_numeric_dtype(self.frame[c])
        ]
        rows = []
        for n, group in self.frame.groupby("n", sort=True):
            row: Dict[str, float] = {"n": int(n), "replicas": len(group)}
            for column in numeric:
                values = group[column].astype(float).tolist()
                row[column] = math.fsum(values) / len(values)
            rows.append(row)
        return pd.DataFrame(rows)

    def to_csv(self, path: Union[str, Path]) -> None:
        try:
            self.frame.to_csv(path, index=False)
        except OSError as e:
            raise InputError(f"Cannot write results to {path}: {e}") from e

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "ResultTable":
        try:
            return cls(pd.read_csv(path, float_precision="round_trip"))
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise InputError(f"Cannot read results from {path}: {e}") from e

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ResultTable) and self.frame.equals(other.frame)


def regression_slope_t(table: ResultTable, column: str) -> Tuple[float, float]:
    """Slope of the per-n mean of ``column`` against n and its t-statistic."""
    agg = table.aggregates()
    if column not in agg.columns:
        raise InputError(f"Unknown metric column '{column}'")
    if len(agg) < 3:
        raise InputError("Need at least three sample sizes for a slope test")
    fit = sps.linregress(agg["n"].astype(float), agg[column].astype(float))
    if fit.stderr == 0:
        t_stat = 0.0 if fit.slope == 0 else math.copysign(math.inf, fit.slope)
        return float(fit.slope), t_stat
    return float(fit.slope), float(fit.slope / fit.stderr)


def emit(table: ResultTable, fmt: str, path: Union[str, Path]) -> Path:
    """Write the table as CSV, or an SVG of mean metric against n."""
    path = Path(path)
    if fmt == "csv":
        table.to_csv(path)
        return path
    if fmt != "svg":
        raise InputError(f"Unknown output format '{fmt}' (expected csv or svg)")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    agg = table.aggregates()
    columns = [c for c in agg.columns if c not in ("n", "replicas")]
    fig, ax = plt.subplots(figsize=(6, 4))
    for column in columns:
        ax.plot(agg["n"], agg[column], marker="o", label=column)
    ax.set_xlabel("n")
    ax.set_ylabel("mean over replicas")
    ax.set_title(str(table.frame["scenario"].iloc[0]))
    if columns:
        ax.legend(fontsize="small")
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise InputError(f"Cannot write plot to {path}: {e}") from e
    finally:
        plt.close(fig)
    return path


# --- scenarios ---------------------------------------------------------------------

def resolve_model(name: str) -> IsingModel:
    """Bundled model by name (``grid3x3``, ``sparse200``) or a model file path."""
    if name == "grid3x3":
        return load_bundled_model("grid3x3.json")
    if name == "sparse200":
        return random_sparse_model()
    return load_model(name)


def load_bundled_model(filename: str) -> IsingModel:
    try:
        bundled = resources.files("ising_neigh.examples").joinpath(filename)
        text = bundled.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"No bundled model named {filename}") from None
    return model_from_document(json.loads(text))


@dataclass
class ScenarioContext:
    config: ExperimentConfig
    model: IsingModel
    site: int
    universe: SiteSet
    collection: CandidateCollection
    truth: SiteSet
    oracle: Optional[RiskOracle]


def _context(config: ExperimentConfig) -> ScenarioContext:
    model = resolve_model(config.model)
    site = config.site if config.site is not None else BUNDLED_MODELS.get(config.model)
    if site is None:
        raise InputError("Experiment on a model file needs an explicit site")
    model.require_site(site)
    oracle = None
    if config.scenario in ORACLE_SCENARIOS:
        if model.size > config.sampler.exact_cap:
            raise CapacityError(
                f"Scenario {config.scenario} needs the exact oracle; model has "
                f"{model.size} sites, exact_cap is {config.sampler.exact_cap}"
            )
        oracle = RiskOracle(model, site, config.sampler.exact_cap)
        _ = oracle.joint
    universe = tuple(s for s in model.sites if s != site)
    return ScenarioContext(
        config=config,
        model=model,
        site=site,
        universe=universe,
        collection=CandidateCollection(universe, config.max_card),
        truth=true_neighborhood(model, site),
        oracle=oracle,
    )


def _calibrated(
    ctx: ScenarioContext, samples: SampleSet, stats, measure: str
) -> SiteSet:
    calibration = calibrate_from_stats(stats, samples.n, ctx.config.grid(), measure)
    return select_from_stats(stats, calibration.final_constant).chosen


def _oracle_risk(ctx: ScenarioContext, samples: SampleSet) -> float:
    return min(ctx.oracle.risk(samples, V) for V in ctx.collection)


def _fig2(ctx: ScenarioContext, samples: SampleSet) -> Dict:
    value = ctx.oracle.variance(samples, ctx.truth)
    return {"sqrt_n_variance": math.sqrt(samples.n) * value}


def _coverage(ctx: ScenarioContext, samples: SampleSet) -> Dict:
    table = build_table(samples, ctx.site, ctx.truth)
    phm = p_hat_min(table)
    rate = math.sqrt(math.log(ctx.config.delta * samples.n) / (samples.n * phm))
    value = ctx.oracle.variance(samples, ctx.truth, table)
    return {
        "variance": value,
        "rate": rate,
        "ratio": value / rate,
        "exceeds": bool(value > VARIANCE_CONSTANT * rate),
    }


def _stats(ctx: ScenarioContext, samples: SampleSet):
    return evaluate_candidates(samples, ctx.site, ctx.collection, ctx.config.delta)


def _fig3(ctx: ScenarioContext, samples: SampleSet) -> Dict:
    stats = _stats(ctx, samples)
    best = _oracle_risk(ctx, samples)
    row: Dict = {}
    for measure in ctx.config.measures:
        chosen = _calibrated(ctx, samples, stats, measure)
        ratio = ratio_of(ctx.oracle.risk(samples, chosen), best)
        row[f"risk_ratio_{measure}"] = ratio.value
        row[f"size_{measure}"] = len(chosen)
    return row


def _fig4(ctx: ScenarioContext, samples: SampleSet) -> Dict:
    stats = _stats(ctx, samples)
    reference, _ = ctx.oracle.best(samples, ctx.collection)
    row: Dict = {}
    for measure in ctx.config.measures:
        chosen = _calibrated(ctx, samples, stats, measure)
        pdr, ndr = discovery_rates(chosen, reference, ctx.universe)
        row[f"pdr_{measure}"], row[f"ndr_{measure}"] = pdr, ndr
    return row


def _fig5(ctx: ScenarioContext, samples: SampleSet) -> Dict:
    stats = _stats(ctx, samples)
    row: Dict = {}
    for measure in ctx.config.measures:
        chosen = _calibrated(ctx, samples, stats, measure)
        pdr, ndr = discovery_rates(chosen, ctx.truth, ctx.universe)
        row[f"pdr_{measure}"], row[f"ndr_{measure}"] = pdr, ndr
    return row


def _fig6(ctx: ScenarioContext, samples: SampleSet) -> Dict:
    reference, _ = ctx.oracle.best(samples, ctx.collection)
    pdr, ndr = discovery_rates(reference, ctx.truth, ctx.universe)
    return {"pdr": pdr, "ndr": ndr, "oracle_size": len(reference)}


def _fig7_8(ctx: ScenarioContext, samples: SampleSet) -> Dict:
    stats = _stats(ctx, samples)
    best = _oracle_risk(ctx, samples)
    spec = ctx.config.cut_spec()
    row: Dict = {}
    for measure in ctx.config.measures:
        selected = _calibrated(ctx, samples, stats, measure)
        estimate = cut_details(samples, ctx.site, selected, spec).kept
        for label, chosen in (("select", selected), ("cut", estimate)):
            pdr, ndr = discovery_rates(chosen, ctx.truth, ctx.universe)
            ratio = ratio_of(ctx.oracle.risk(samples, chosen), best)
            row[f"risk_ratio_{label}_{measure}"] = ratio.value
            row[f"pdr_{label}_{measure}"] = pdr
            row[f"ndr_{label}_{measure}"] = ndr
    return row


def _fig9(ctx: ScenarioContext, samples: SampleSet) -> Dict:
    config = ctx.config
    result = efficient_select(
        samples, ctx.site, ctx.universe, config.delta, config.kappa,
        C_grid=config.grid(), measure=config.measures[0], cap=config.kept_cap,
        kept_target=config.kept_target,
    )
    ranked = ranked_partners(ctx.model, ctx.site)[:TOP_RANKS]
    row: Dict = {
        "size": len(result.chosen),
        "kept": len(result.reduction.kept),
        "eta": result.reduction.eta,
    }
    for rank, j in enumerate(ranked, start=1):
        row[f"contains_{rank}"] = j in result.chosen
    return row


def _sandwich(ctx: ScenarioContext, samples: SampleSet) -> Dict:
    config = ctx.config
    reduction = screen(
        samples, ctx.site, ctx.universe, config.delta, config.kappa, cap=None
    )
    check = screening_sandwich(
        ctx.model, ctx.site, ctx.universe, reduction.kept, reduction.eta,
        samples.n, samples.M, config.delta,
    )
    return {"kept": len(reduction.kept), "eta": reduction.eta, "holds": check.holds}


SCENARIO_RUNNERS: Dict[str, Callable[[ScenarioContext, SampleSet], Dict]] = {
    "fig2_variance": _fig2,
    "fig3_riskratio": _fig3,
    "fig4_on_discovery": _fig4,
    "fig5_ini_discovery": _fig5,
    "fig6_oracle_vs_truth": _fig6,
    "fig7_8_select_cut": _fig7_8,
    "fig9_efficient": _fig9,
    "variance_coverage": _coverage,
    "reduction_sandwich": _sandwich,
}


def run_experiment(
    config: ExperimentConfig, settings: Optional[Settings] = None
) -> ResultTable:
    """Run every (n, replica) pair of the scenario and collect one row per pair."""
    settings = settings or Settings()
    ctx = _context(config)
    runner = SCENARIO_RUNNERS[config.scenario]
    tasks = [
        (n, replica, derive_seed(config.seed, k * config.replicas + replica))
        for k, n in enumerate(config.sample_sizes)
        for replica in range(config.replicas)
    ]

    def one(task: Tuple[int, int, int]) -> Dict:
        n, replica, seed = task
        samples = sample(ctx.model, n, config.sampler.with_seed(seed))
        logger.debug("%s: n=%d replica=%d seed=%d", config.scenario, n, replica, seed)
        row = {
            "scenario": config.scenario,
            "n": n,
            "replica": replica,
            "seed": seed,
            "sampler": samples.meta.sampler,
        }
        row.update(runner(ctx, samples))
        return row

    if settings.threads > 1:
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            rows = list(pool.map(one, tasks))
    else:
        rows = [one(task) for task in tasks]
    logger.info(
        "%s: %d rows over %d sample sizes",
        config.scenario, len(rows), len(config.sample_sizes),
    )
    return ResultTable(pd.DataFrame(rows))


def sandwich_frequency(table: ResultTable) -> Tuple[float, float]:
    """Violation frequency of the screening sandwich and its binomial standard error."""
    if "holds" not in table.frame.columns:
        raise InputError("Result table has no 'holds' column")
    violations = (~table.frame["holds"].astype(bool)).to_numpy(dtype=float)
    freq = float(violations.mean())
    return freq, math.sqrt(max(freq * (1 - freq), 0.0) / len(violations))


def containment_rates(table: ResultTable, n: Optional[int] = None) -> Dict[str, float]:
    """Frequency with which the efficient estimate contains each ranked partner."""
    frame = table.frame if n is None else table.frame[table.frame["n"] == n]
    columns = [c for c in frame.columns if c.startswith("contains_")]
    return {c: float(np.mean(frame[c].astype(float))) for c in columns}


def coverage_constants(table: ResultTable, delta: float) -> pd.DataFrame:
    """Per n, the smallest c with variance <= c * rate in all but a 1/delta share."""
    if "ratio" not in table.frame.columns:
        raise InputError("Result table has no 'ratio' column")
    rows = [
        {
            "n": int(n),
            "empirical_constant": empirical_constant(group["ratio"].tolist(), delta),
        }
        for n, group in table.frame.groupby("n", sort=True)
    ]
    return pd.DataFrame(rows)
