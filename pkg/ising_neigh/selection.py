"""Penalized selection of a conditioning set and slope-heuristic calibration."""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Literal, Optional, Sequence, Tuple, Union

import pandas as pd

from ising_neigh.empirical import build_table, p_hat_min, sup_conditional
from ising_neigh.errors import InputError
from ising_neigh.model import SiteSet, as_site_set
from ising_neigh.sampler import SampleSet

logger = logging.getLogger(__name__)

ComplexityMeasure = Literal["dimension", "variance"]
PenaltyForm = Literal["standard", "gamma", "efficient"]

LEDGER_COLUMNS = ["V", "|V|", "sup", "p_hat_min", "penalty", "score"]


def enumerate_collection(universe: Sequence[int], m: int) -> Iterator[SiteSet]:
    """Subsets of ``universe`` of at most ``m`` sites, by size then lexicographic."""
    members = as_site_set(universe)
    if m < 0:
        raise InputError("max_card must be non-negative")
    for k in range(min(m, len(members)) + 1):
        yield from itertools.combinations(members, k)


@dataclass(frozen=True)
class CandidateCollection:
    """All subsets of ``universe`` with at most ``max_card`` sites."""

    universe: SiteSet
    max_card: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "universe", as_site_set(self.universe))
        if self.max_card < 0:
            raise InputError("max_card must be non-negative")

    @classmethod
    def for_site(
        cls, labels: Sequence[int], i: int, max_card: int
    ) -> "CandidateCollection":
        """Subsets of the observed window without the target site."""
        return cls(tuple(s for s in labels if s != i), max_card)

    @classmethod
    def powerset(cls, universe: Sequence[int]) -> "CandidateCollection":
        members = as_site_set(universe)
        return cls(members, len(members))

    @property
    def size(self) -> int:
        top = min(self.max_card, len(self.universe))
        return sum(math.comb(len(self.universe), k) for k in range(top + 1))

    def __iter__(self) -> Iterator[SiteSet]:
        return enumerate_collection(self.universe, self.max_card)

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True)
class CandidateStats:
    """Sample quantities of one candidate; independent of the constant C."""

    V: SiteSet
    sup: float
    p_hat_min: float
    penalty: float

    def score(self, C: float) -> float:
        return -self.sup + C * self.penalty

    def complexity(self, measure: ComplexityMeasure, n: int) -> float:
        if measure == "dimension":
            return float(len(self.V))
        return (n * self.p_hat_min) ** -0.5


@dataclass(frozen=True)
class LedgerRow:
    V: SiteSet
    sup: float
    p_hat_min: float
    penalty: float
    score: float


@dataclass
class SlopeCalibration:
    """Outcome of the jump search over a grid of constants."""

    grid: List[float]
    complexities: List[float]
    chosen: List[SiteSet]
    jumps: List[float]
    index: int
    c_min: float
    measure: ComplexityMeasure

    @property
    def final_constant(self) -> float:
        return 2.0 * self.c_min

    def profile(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "C": self.grid,
                "complexity": self.complexities,
                "size": [len(v) for v in self.chosen],
                "drop": [math.nan] + self.jumps,
            }
        )


@dataclass
class SelectionResult:
    """Selected set, its score and constant, with optional per-candidate ledger."""

    chosen: SiteSet
    score: float
    C: float
    ledger: Optional[List[LedgerRow]] = None
    calibration: Optional[SlopeCalibration] = field(default=None, repr=False)

    def ledger_frame(self) -> pd.DataFrame:
        if self.ledger is None:
            raise InputError("Selection was run without a ledger")
        return pd.DataFrame(
            [
                [
                    " ".join(str(s) for s in row.V),
                    len(row.V),
                    row.sup,
                    row.p_hat_min,
                    row.penalty,
                    row.score,
                ]
                for row in self.ledger
            ],
            columns=LEDGER_COLUMNS,
        )

    def write_ledger(self, path: Union[str, Path]) -> None:
        try:
            self.ledger_frame().to_csv(path, index=False, float_format="%.17g")
        except OSError as e:
            raise InputError(f"Cannot write ledger to {path}: {e}") from e


def penalty_numerator(
    form: PenaltyForm,
    n: int,
    delta: float,
    N_bound: int = 1,
    M: int = 1,
    kappa: float = 1.0,
) -> float:
    """Penalty numerator of the given form.

    standard: ln(delta n N); gamma: ln n (1 + log2 M) + ln delta;
    efficient: ln(n^kappa delta).
    """
    if not delta > 1:
        raise InputError(f"delta must be > 1, got {delta}")
    if form == "standard":
        if N_bound < 1:
            raise InputError("N_bound must be at least 1")
        return math.log(delta) + math.log(n) + math.log(N_bound)
    if form == "gamma":
        return math.log(n) * (1.0 + math.log2(max(M, 1))) + math.log(delta)
    if form == "efficient":
        return kappa * math.log(n) + math.log(delta)
    raise InputError(
        f"Unknown penalty form '{form}' (expected standard, gamma or efficient)"
    )


def penalty(
    samples: SampleSet,
    i: int,
    V: Sequence[int],
    delta: float,
    N_bound: int = 1,
    form: PenaltyForm = "standard",
    kappa: float = 1.0,
) -> float:
    """sqrt(numerator / (n p-hat-minus_V))."""
    numerator = penalty_numerator(form, samples.n, delta, N_bound, samples.M, kappa)
    phm = p_hat_min(build_table(samples, i, V))
    return math.sqrt(numerator / (samples.n * phm))


def evaluate_candidates(
    samples: SampleSet,
    i: int,
    collection: CandidateCollection,
    delta: float,
    form: PenaltyForm = "standard",
    kappa: float = 1.0,
    workers: int = 1,
) -> List[CandidateStats]:
    """Sup-norm, p-hat-minus and penalty of every candidate, in collection order."""
    samples.require_site(i)
    numerator = penalty_numerator(
        form, samples.n, delta, collection.size, samples.M, kappa
    )

    def one(V: SiteSet) -> CandidateStats:
        table = build_table(samples, i, V)
        phm = p_hat_min(table)
        pen = math.sqrt(numerator / (samples.n * phm))
        return CandidateStats(V, sup_conditional(table), phm, pen)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, collection))
    return [one(V) for V in collection]


def _argmin(stats: Sequence[CandidateStats], C: float) -> Tuple[CandidateStats, float]:
    if not stats:
        raise InputError("Candidate collection is empty")
    best = min(stats, key=lambda s: (s.score(C), len(s.V), s.V))
    return best, best.score(C)


def select_from_stats(
    stats: Sequence[CandidateStats], C: float, with_ledger: bool = False
) -> SelectionResult:
    if C < 0 or not math.isfinite(C):
        raise InputError(f"Penalty constant must be finite and non-negative, got {C}")
    best, score = _argmin(stats, C)
    ledger = None
    if with_ledger:
        ledger = [
            LedgerRow(s.V, s.sup, s.p_hat_min, s.penalty, s.score(C)) for s in stats
        ]
    return SelectionResult(best.V, score, C, ledger)


def select_model(
    samples: SampleSet,
    i: int,
    collection: CandidateCollection,
    C: float,
    delta: float,
    pen_form: PenaltyForm = "standard",
    kappa: float = 1.0,
    with_ledger: bool = False,
    workers: int = 1,
) -> SelectionResult:
    """argmin over V of -||P-hat_{i|V}|| + C pen(V).

    Ties go to the smaller, then the lexicographically first V.
    """
    stats = evaluate_candidates(samples, i, collection, delta, pen_form, kappa, workers)
    return select_from_stats(stats, C, with_ledger)


def _check_grid(C_grid: Sequence[float]) -> List[float]:
    grid = [float(c) for c in C_grid]
    if len(grid) < 2:
        raise InputError("C grid must contain at least two constants")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InputError("C grid must be strictly increasing")
    if grid[0] < 0:
        raise InputError("C grid constants must be non-negative")
    return grid


def max_drop_index(complexities: Sequence[float]) -> Tuple[int, List[float]]:
    """Index k of the largest drop complexities[k-1] - complexities[k].

    The last such k wins on ties.
    """
    drops = [a - b for a, b in zip(complexities, complexities[1:])]
    if not drops:
        raise InputError("Need at least two complexities to locate a jump")
    top = max(drops)
    k = max(idx for idx, d in enumerate(drops) if d == top) + 1
    return k, drops


def calibrate_from_stats(
    stats: Sequence[CandidateStats],
    n: int,
    C_grid: Sequence[float],
    measure: ComplexityMeasure,
) -> SlopeCalibration:
    grid = _check_grid(C_grid)
    chosen = [_argmin(stats, C)[0] for C in grid]
    complexities = [s.complexity(measure, n) for s in chosen]
    k, drops = max_drop_index(complexities)
    sizes = [len(s.V) for s in chosen]
    if any(b > a for a, b in zip(sizes, sizes[1:])):
        logger.debug("selected set size is not monotone along the C grid: %s", sizes)
    logger.debug(
        "slope heuristic (%s): largest drop %.6g at grid index %d, C=%.6g",
        measure, drops[k - 1], k, grid[k],
    )
    return SlopeCalibration(
        grid, complexities, [s.V for s in chosen], drops, k, grid[k], measure
    )


def slope_calibrate(
    samples: SampleSet,
    i: int,
    collection: CandidateCollection,
    C_grid: Sequence[float],
    measure: ComplexityMeasure = "dimension",
    delta: float = 10.0,
    pen_form: PenaltyForm = "standard",
    kappa: float = 1.0,
    workers: int = 1,
) -> SlopeCalibration:
    """Locate the largest complexity drop of the selected model along ``C_grid``."""
    _check_grid(C_grid)
    stats = evaluate_candidates(samples, i, collection, delta, pen_form, kappa, workers)
    return calibrate_from_stats(stats, samples.n, C_grid, measure)


def slope_select(
    samples: SampleSet,
    i: int,
    collection: CandidateCollection,
    C_grid: Sequence[float],
    measure: ComplexityMeasure = "dimension",
    delta: float = 10.0,
    pen_form: PenaltyForm = "standard",
    kappa: float = 1.0,
    with_ledger: bool = False,
    workers: int = 1,
) -> SelectionResult:
    """Selection with the constant set to twice the calibrated jump location."""
    _check_grid(C_grid)
    stats = evaluate_candidates(samples, i, collection, delta, pen_form, kappa, workers)
    calibration = calibrate_from_stats(stats, samples.n, C_grid, measure)
    result = select_from_stats(stats, calibration.final_constant, with_ledger)
    result.calibration = calibration
    return result
