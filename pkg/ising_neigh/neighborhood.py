"""Cutting, two-step select-and-cut estimation and correlation screening."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from ising_neigh.config import DEFAULT_KEPT_CAP, CutSpec
from ising_neigh.empirical import (
    build_table,
    empirical_omega,
    p_hat_min,
    pair_correlations,
)
from ising_neigh.errors import InputError
from ising_neigh.model import SiteSet, as_site_set
from ising_neigh.sampler import SampleSet
from ising_neigh.selection import (
    CandidateCollection,
    ComplexityMeasure,
    SelectionResult,
    select_model,
    slope_select,
)

logger = logging.getLogger(__name__)


def cut_threshold(spec: CutSpec, n: int, phm: float) -> float:
    """c sqrt(ln(delta n) / (n p)) for the sqrt rule, c / (n p) for the inverse rule."""
    scale = n * phm
    if spec.kind == "sqrt":
        return spec.c * math.sqrt(math.log(spec.delta * n) / scale)
    return spec.c / scale


@dataclass(frozen=True)
class CutResult:
    kept: SiteSet
    threshold: float
    omegas: Dict[int, float]


def cut_details(
    samples: SampleSet, i: int, V: Sequence[int], spec: CutSpec
) -> CutResult:
    table = build_table(samples, i, V)
    threshold = cut_threshold(spec, samples.n, p_hat_min(table))
    omegas = {j: empirical_omega(table, j) for j in table.scope}
    kept = tuple(j for j in table.scope if omegas[j] > threshold)
    return CutResult(kept, threshold, omegas)


def cut(samples: SampleSet, i: int, V: Sequence[int], spec: CutSpec) -> SiteSet:
    """Sites j of V whose empirical omega exceeds the cut threshold."""
    return cut_details(samples, i, V, spec).kept


@dataclass
class TwoStepEstimate:
    selection: SelectionResult
    cut: CutResult

    @property
    def estimate(self) -> SiteSet:
        return self.cut.kept


def two_step_estimate(
    samples: SampleSet,
    i: int,
    collection: CandidateCollection,
    C_grid: Sequence[float],
    measure: ComplexityMeasure,
    spec: CutSpec,
    workers: int = 1,
) -> TwoStepEstimate:
    selection = slope_select(
        samples, i, collection, C_grid, measure, spec.delta, workers=workers
    )
    return TwoStepEstimate(selection, cut_details(samples, i, selection.chosen, spec))


def select_and_cut(
    samples: SampleSet,
    i: int,
    collection: CandidateCollection,
    C_grid: Sequence[float],
    measure: ComplexityMeasure,
    spec: CutSpec,
    workers: int = 1,
) -> SiteSet:
    """Slope-calibrated selection followed by the cut of weak sites."""
    two_step = two_step_estimate(
        samples, i, collection, C_grid, measure, spec, workers
    )
    return two_step.estimate


@dataclass(frozen=True)
class ReductionResult:
    """Sites whose pair correlation with the target exceeds ``eta``."""

    kept: SiteSet
    eta: float
    correlations: Dict[int, float]
    eta_ms: Optional[float] = None
    floor: Optional[float] = None

    def frame(self) -> pd.DataFrame:
        rows = sorted(self.correlations.items(), key=lambda kv: (-kv[1], kv[0]))
        return pd.DataFrame(
            {
                "site": [j for j, _ in rows],
                "correlation": [c for _, c in rows],
                "kept": [j in self.kept for j, _ in rows],
            }
        )


def reduce_sites(
    samples: SampleSet, i: int, universe: Sequence[int], eta: float
) -> ReductionResult:
    if eta < 0:
        raise InputError(f"eta must be non-negative, got {eta}")
    correlations = pair_correlations(samples, i, universe)
    kept = tuple(j for j in sorted(correlations) if correlations[j] > eta)
    return ReductionResult(kept, eta, correlations)


def eta_floor(n: int, M: int, delta: float) -> float:
    """3 sqrt(ln(6 M delta) / (2 n))."""
    if not delta > 1:
        raise InputError(f"delta must be > 1, got {delta}")
    return 3.0 * math.sqrt(math.log(6 * M * delta) / (2 * n))


def kept_limit(n: int, kappa: float, cap: Optional[int] = DEFAULT_KEPT_CAP) -> int:
    """Largest kept count strictly below kappa log2 n, bounded by ``cap``."""
    if kappa <= 0:
        raise InputError(f"kappa must be positive, got {kappa}")
    k = max(math.ceil(kappa * math.log2(n)) - 1, 0)
    return k if cap is None else min(k, cap)


def _kth_largest(values: Sequence[float], k: int) -> float:
    ordered = sorted(values, reverse=True)
    return ordered[k - 1] if 0 < k <= len(ordered) else -math.inf


def eta_for_count(correlations: Dict[int, float], k: int) -> float:
    """Threshold keeping the k largest correlations (fewer on ties at the boundary)."""
    if k < 0:
        raise InputError("kept count must be non-negative")
    return max(_kth_largest(list(correlations.values()), k + 1), 0.0)


def eta_ms_from_correlations(
    correlations: Dict[int, float], n: int, M: int, delta: float, kappa: float,
    cap: Optional[int] = DEFAULT_KEPT_CAP,
) -> float:
    floor = eta_floor(n, M, delta)
    k = kept_limit(n, kappa, cap)
    boundary = _kth_largest(list(correlations.values()), k + 1)
    return float(np.nextafter(max(floor, boundary), np.inf))


def eta_ms(
    samples: SampleSet, i: int, universe: Sequence[int], delta: float, kappa: float,
    cap: Optional[int] = DEFAULT_KEPT_CAP,
) -> float:
    """Smallest threshold above the noise floor keeping < kappa log2 n sites."""
    correlations = pair_correlations(samples, i, universe)
    return eta_ms_from_correlations(
        correlations, samples.n, samples.M, delta, kappa, cap
    )


def screen(
    samples: SampleSet, i: int, universe: Sequence[int], delta: float, kappa: float,
    cap: Optional[int] = DEFAULT_KEPT_CAP, kept_target: Optional[int] = None,
) -> ReductionResult:
    """Reduction at eta_ms, or at the threshold keeping ``kept_target`` sites."""
    correlations = pair_correlations(samples, i, universe)
    floor = eta_floor(samples.n, samples.M, delta)
    if kept_target is not None:
        eta = eta_for_count(correlations, kept_target)
        searched = None
    else:
        eta = eta_ms_from_correlations(
            correlations, samples.n, samples.M, delta, kappa, cap
        )
        searched = eta
    kept = tuple(j for j in sorted(correlations) if correlations[j] > eta)
    logger.debug(
        "reduction around site %d: eta=%.6g kept %d of %d",
        i, eta, len(kept), len(correlations),
    )
    return ReductionResult(kept, eta, correlations, eta_ms=searched, floor=floor)


@dataclass
class EfficientSelection(SelectionResult):
    reduction: Optional[ReductionResult] = field(default=None, repr=False)


def efficient_select(
    samples: SampleSet,
    i: int,
    universe: Sequence[int],
    delta: float,
    kappa: float = 1.0,
    C: Optional[float] = None,
    C_grid: Optional[Sequence[float]] = None,
    measure: ComplexityMeasure = "dimension",
    cap: Optional[int] = DEFAULT_KEPT_CAP,
    kept_target: Optional[int] = None,
    workers: int = 1,
) -> EfficientSelection:
    """Screen by pair correlation, then select among all subsets of the kept sites.

    Uses the penalty numerator ln(n^kappa delta). A fixed ``C`` takes precedence over
    ``C_grid``; with neither, raises InputError.
    """
    if C is None and C_grid is None:
        raise InputError("efficient_select needs a constant C or a C grid")
    reduction = screen(
        samples, i, as_site_set(universe), delta, kappa, cap, kept_target
    )
    collection = CandidateCollection.powerset(reduction.kept)
    if C is not None:
        result = select_model(
            samples, i, collection, C, delta, "efficient", kappa, workers=workers
        )
    else:
        result = slope_select(
            samples, i, collection, C_grid, measure, delta, "efficient", kappa,
            workers=workers,
        )
    return EfficientSelection(
        result.chosen, result.score, result.C, result.ledger, result.calibration,
        reduction,
    )
