from __future__ import annotations

import json
import math
from importlib import resources
from typing import Any, Dict, List, Optional

import pandas as pd

from ising_neigh import __version__
from ising_neigh.config import (
    SCENARIOS,
    CutSpec,
    ExperimentConfig,
    SamplerConfig,
    Settings,
    parse_c_grid,
)
from ising_neigh.errors import InputError
from ising_neigh.harness import (
    coverage_constants,
    regression_slope_t,
    resolve_model,
    run_experiment as _run_experiment,
)
from ising_neigh.model import (
    IsingModel,
    interaction_range,
    model_constants,
    model_from_document,
    true_neighborhood,
)
from ising_neigh.neighborhood import (
    cut_details,
    efficient_select,
    reduce_sites,
    screen,
    two_step_estimate,
)
from ising_neigh.sampler import (
    SampleSet,
    load_samples,
    parse_samples_text,
    sample,
    samples_to_text,
    save_samples,
)
from ising_neigh.selection import CandidateCollection, select_model, slope_select

EXAMPLES = SCENARIOS


def _model(model: str, model_document: Optional[Dict[str, Any]]) -> IsingModel:
    if model_document is not None:
        return model_from_document(model_document)
    return resolve_model(model)


def _samples(samples_path: Optional[str], samples_text: Optional[str]) -> SampleSet:
    if samples_text is not None:
        return parse_samples_text(samples_text)
    if samples_path is not None:
        return load_samples(samples_path)
    raise InputError("Provide samples_path or samples_text")


def _workers() -> int:
    return Settings.from_env().threads


def _finite(value: Any) -> Any:
    # JSON responses reject inf and nan
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _records(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    return [
        {k: _finite(v) for k, v in row.items()}
        for row in frame.to_dict(orient="records")
    ]


def info() -> Dict[str, str]:
    """Return a short description of the package."""
    desc = (
        "Estimates interaction neighborhoods of sites in Ising models from i.i.d. "
        "samples. Provides penalized model selection with slope-heuristic "
        "calibration, the select-and-cut two-step estimator, correlation screening "
        "for large site sets, exact-enumeration oracles for small models, and a "
        "simulation harness with CSV/SVG output. "
        "Available via CLI (ising-neigh), stdio (ising-neigh-mcp) and HTTP."
    )
    return {"name": "ising-neigh", "version": __version__, "description": desc}


def model_summary(
    model: str = "grid3x3", model_document: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """Constants, interaction range and true neighborhoods of a model."""
    try:
        m = _model(model, model_document)
        constants = model_constants(m)
        return {
            "success": True,
            "sites": len(m.sites),
            "classical": m.is_classical,
            "interaction_range": interaction_range(m),
            "constants": {k: _finite(float(v)) for k, v in vars(constants).items()},
            "neighborhoods": {str(i): list(true_neighborhood(m, i)) for i in m.sites},
            "fingerprint": m.fingerprint,
            "error": None,
        }
    except Exception as e:
        return {"success": False, "error": str(e)}


def simulate(
    model: str = "grid3x3",
    n: int = 1000,
    seed: int = 0,
    sampler: str = "auto",
    burn_in: int = 1000,
    thinning: int = 100,
    out_path: Optional[str] = None,
    model_document: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """Draw n samples; written to out_path when given, returned as text otherwise."""
    try:
        m = _model(model, model_document)
        config = SamplerConfig(seed=seed, burn_in=burn_in, thinning=thinning)
        samples = sample(m, n, config, kind=sampler)
        result: Dict[str, Any] = {
            "success": True,
            "n": samples.n,
            "sites": list(samples.site_labels),
            "sampler": samples.meta.sampler,
            "error": None,
        }
        if out_path:
            save_samples(samples, out_path)
            result["samples_path"] = out_path
        else:
            result["samples_text"] = samples_to_text(samples)
        return result
    except Exception as e:
        return {"success": False, "error": str(e)}


def select(
    site: int,
    samples_path: Optional[str] = None,
    samples_text: Optional[str] = None,
    max_card: int = 8,
    C: Optional[float] = None,
    c_grid: str = "0.01:10:50",
    measure: str = "dimension",
    delta: float = 10.0,
    pen_form: str = "standard",
    ledger: bool = False,
) -> Dict[str, Any]:
    """Penalized selection; slope-calibrated unless a fixed C is given."""
    try:
        samples = _samples(samples_path, samples_text)
        collection = CandidateCollection.for_site(samples.site_labels, site, max_card)
        if C is not None:
            result = select_model(
                samples, site, collection, C, delta, pen_form,
                with_ledger=ledger, workers=_workers(),
            )
        else:
            result = slope_select(
                samples, site, collection, parse_c_grid(c_grid), measure, delta,
                pen_form, with_ledger=ledger, workers=_workers(),
            )
        out: Dict[str, Any] = {
            "success": True,
            "selected": list(result.chosen),
            "C": result.C,
            "score": result.score,
            "error": None,
        }
        if result.calibration is not None:
            out["jump_index"] = result.calibration.index
            out["c_min"] = result.calibration.c_min
        if ledger:
            out["ledger"] = _records(result.ledger_frame())
        return out
    except Exception as e:
        return {"success": False, "error": str(e)}


def cut(
    site: int,
    candidate: List[int],
    samples_path: Optional[str] = None,
    samples_text: Optional[str] = None,
    cut_spec: str = "inverse:0.3",
    delta: float = 10.0,
) -> Dict[str, Any]:
    """Remove candidate sites whose empirical omega is below the cut threshold."""
    try:
        samples = _samples(samples_path, samples_text)
        result = cut_details(samples, site, candidate, CutSpec.parse(cut_spec, delta))
        return {
            "success": True,
            "kept": list(result.kept),
            "threshold": result.threshold,
            "omegas": {str(j): w for j, w in result.omegas.items()},
            "error": None,
        }
    except Exception as e:
        return {"success": False, "error": str(e)}


def reduce(
    site: int,
    samples_path: Optional[str] = None,
    samples_text: Optional[str] = None,
    eta: Optional[float] = None,
    delta: float = 10.0,
    kappa: float = 1.0,
    kept_cap: int = 10,
    kept_target: Optional[int] = None,
) -> Dict[str, Any]:
    """Correlation screening around a site at a fixed or searched threshold."""
    try:
        samples = _samples(samples_path, samples_text)
        universe = [s for s in samples.site_labels if s != site]
        if eta is not None:
            result = reduce_sites(samples, site, universe, eta)
        else:
            result = screen(
                samples, site, universe, delta, kappa, kept_cap, kept_target
            )
        return {
            "success": True,
            "kept": list(result.kept),
            "eta": result.eta,
            "eta_ms": result.eta_ms,
            "correlations": {str(j): c for j, c in result.correlations.items()},
            "error": None,
        }
    except Exception as e:
        return {"success": False, "error": str(e)}


def estimate(
    site: int,
    samples_path: Optional[str] = None,
    samples_text: Optional[str] = None,
    method: str = "select-cut",
    max_card: int = 8,
    c_grid: str = "0.01:10:50",
    measure: str = "dimension",
    cut_spec: str = "inverse:0.3",
    delta: float = 10.0,
    kappa: float = 1.0,
    kept_cap: int = 10,
    kept_target: Optional[int] = None,
) -> Dict[str, Any]:
    """Neighborhood estimate by select-and-cut or by the efficient strategy."""
    try:
        samples = _samples(samples_path, samples_text)
        grid = parse_c_grid(c_grid)
        if method == "efficient":
            universe = [s for s in samples.site_labels if s != site]
            result = efficient_select(
                samples, site, universe, delta, kappa, C_grid=grid, measure=measure,
                cap=kept_cap, kept_target=kept_target, workers=_workers(),
            )
            return {
                "success": True,
                "method": method,
                "kept": list(result.reduction.kept),
                "eta": result.reduction.eta,
                "estimate": list(result.chosen),
                "error": None,
            }
        if method != "select-cut":
            return {
                "success": False,
                "error": f"Unknown method '{method}'. Use 'select-cut' or 'efficient'",
            }
        collection = CandidateCollection.for_site(samples.site_labels, site, max_card)
        two_step = two_step_estimate(
            samples, site, collection, grid, measure,
            CutSpec.parse(cut_spec, delta), _workers(),
        )
        return {
            "success": True,
            "method": method,
            "selected": list(two_step.selection.chosen),
            "C": two_step.selection.C,
            "threshold": two_step.cut.threshold,
            "estimate": list(two_step.estimate),
            "error": None,
        }
    except Exception as e:
        return {"success": False, "error": str(e)}


def _experiment_payload(config: ExperimentConfig) -> Dict[str, Any]:
    table = _run_experiment(config, Settings.from_env())
    payload: Dict[str, Any] = {
        "success": True,
        "scenario": config.scenario,
        "rows": len(table.frame),
        "aggregates": _records(table.aggregates()),
        "error": None,
    }
    if config.scenario == "fig2_variance" and len(config.sample_sizes) >= 3:
        slope, t = regression_slope_t(table, "sqrt_n_variance")
        payload["slope"], payload["t_statistic"] = _finite(slope), _finite(t)
    if config.scenario == "variance_coverage":
        constants = coverage_constants(table, config.delta)
        payload["empirical_constants"] = _records(constants)
    return payload


def run_experiment(
    scenario: str,
    model: str = "grid3x3",
    site: Optional[int] = None,
    sample_sizes: Optional[List[int]] = None,
    replicas: int = 20,
    seed: int = 0,
    config: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """Run a simulation scenario and return per-n means."""
    try:
        data: Dict[str, Any] = dict(config or {})
        data.update(
            {"scenario": scenario, "model": model, "replicas": replicas, "seed": seed}
        )
        if site is not None:
            data["site"] = site
        if sample_sizes is not None:
            data["sample_sizes"] = sample_sizes
        return _experiment_payload(ExperimentConfig.from_dict(data))
    except Exception as e:
        return {"success": False, "error": str(e)}


def run_example(example_name: str, replicas: Optional[int] = None) -> Dict[str, Any]:
    """Run one of the bundled desk-scale experiments.

    Returns a dict with keys: rc (int), output (str, per-n means as CSV).
    """
    if example_name not in EXAMPLES:
        available = ", ".join(EXAMPLES)
        return {
            "rc": 1,
            "output": (
                f"Unknown example '{example_name}'. Available examples: {available}"
            ),
        }
    try:
        examples = resources.files("ising_neigh.examples")
        bundled = examples.joinpath(f"{example_name}.json")
        text = bundled.read_text(encoding="utf-8")
        data = json.loads(text)
        if replicas is not None:
            data["replicas"] = replicas
        table = _run_experiment(ExperimentConfig.from_dict(data), Settings.from_env())
        return {"rc": 0, "output": table.aggregates().to_csv(index=False)}
    except Exception as e:
        return {"rc": 1, "output": f"Error running example: {str(e)}"}
