"""Exact ground truth by full enumeration of small classical models."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from ising_neigh.config import DEFAULT_EXACT_CAP, DEFAULT_MAX_CARD
from ising_neigh.empirical import EmpiricalTable, build_table, p_hat_min
from ising_neigh.errors import CapacityError, InputError
from ising_neigh.model import (
    IsingModel,
    SiteSet,
    as_site_set,
    local_sums_for_codes,
    model_constants,
    potential_omega,
)
from ising_neigh.sampler import JointDistribution, SampleSet, joint_distribution
from ising_neigh.selection import enumerate_collection

logger = logging.getLogger(__name__)

# absolute constant of the variance bound; diagnostic only
VARIANCE_CONSTANT = 400.0


def project_codes(model: IsingModel, codes: np.ndarray, V: Sequence[int]) -> np.ndarray:
    """Re-encode full configuration codes onto the sorted sites of V (bit k <- V[k])."""
    out = np.zeros(codes.shape, dtype=np.uint64)
    for k, site in enumerate(V):
        pos = model.require_site(site)
        out |= ((codes >> pos) & 1).astype(np.uint64) << np.uint64(k)
    return out


def target_spins(model: IsingModel, codes: np.ndarray, i: int) -> np.ndarray:
    return np.where((codes >> model.require_site(i)) & 1, 1, -1).astype(np.int8)


@dataclass(frozen=True, eq=False)
class ExactConditional:
    """P_{i|V} for every pattern of V: ``plus[c]`` is P(x(i)=+1 | pattern c).

    ``marginal[c]`` is the probability of pattern c; zero-probability patterns
    carry 1/2.
    """

    target: int
    scope: SiteSet
    plus: np.ndarray
    marginal: np.ndarray

    def lookup(self, codes: np.ndarray, spins: np.ndarray) -> np.ndarray:
        p = self.plus[np.asarray(codes, dtype=np.int64)]
        return np.where(np.asarray(spins) == 1, p, 1.0 - p)

    def value(self, x) -> float:
        code = sum(1 << k for k, s in enumerate(self.scope) if x[s] == 1)
        p = float(self.plus[code])
        return p if x[self.target] == 1 else 1.0 - p


def _require_scope(model: IsingModel, i: int, V: Iterable[int]) -> SiteSet:
    scope = as_site_set(V)
    model.require_site(i)
    for j in scope:
        model.require_site(j)
    if i in scope:
        raise InputError(f"Target site {i} cannot belong to its own conditioning set")
    return scope


def exact_conditional_sub(
    model: IsingModel, i: int, V: Iterable[int], exact_cap: int = DEFAULT_EXACT_CAP,
    joint: Optional[JointDistribution] = None,
) -> ExactConditional:
    """P(x(i), x(V)) / P(x(V)) by exact summation of the joint table."""
    scope = _require_scope(model, i, V)
    joint = joint or joint_distribution(model, exact_cap)
    codes = joint.codes
    cond = project_codes(model, codes, scope).astype(np.int64)
    up = ((codes >> model.require_site(i)) & 1).astype(bool)
    size = 2 ** len(scope)
    marginal = np.bincount(cond, weights=joint.probabilities, minlength=size)
    plus_mass = np.bincount(cond[up], weights=joint.probabilities[up], minlength=size)
    plus = np.full(size, 0.5)
    seen = marginal > 0
    plus[seen] = plus_mass[seen] / marginal[seen]
    return ExactConditional(i, scope, plus, marginal)


def min_marginal(
    model: IsingModel, V: Iterable[int], exact_cap: int = DEFAULT_EXACT_CAP
) -> float:
    """Smallest probability of a pattern of V."""
    scope = as_site_set(V)
    joint = joint_distribution(model, exact_cap)
    cond = project_codes(model, joint.codes, scope).astype(np.int64)
    marginal = np.bincount(
        cond, weights=joint.probabilities, minlength=2 ** len(scope)
    )
    return float(marginal.min())


class RiskOracle:
    """Caches the enumerated full conditional of one target site.

    Risk, bias and variance evaluations against many candidate sets then cost one
    projection of the 2^|G| configuration codes each.
    """

    def __init__(self, model: IsingModel, i: int, exact_cap: int = DEFAULT_EXACT_CAP):
        if model.size > exact_cap:
            logger.warning(
                "exact oracle refused: %d sites exceed exact_cap=%d",
                model.size, exact_cap,
            )
            raise CapacityError(
                f"Exact oracle needs at most {exact_cap} sites, model has {model.size}"
            )
        model.require_site(i)
        self.model = model
        self.target = i
        self.exact_cap = exact_cap
        self.codes = np.arange(2 ** model.size, dtype=np.int64)
        self.spins = target_spins(model, self.codes, i)
        self.full = expit(local_sums_for_codes(model, i, self.codes))

    @cached_property
    def joint(self) -> JointDistribution:
        return joint_distribution(self.model, self.exact_cap)

    def conditional(self, V: Iterable[int]) -> ExactConditional:
        return exact_conditional_sub(
            self.model, self.target, V, self.exact_cap, self.joint
        )

    def bias(self, V: Iterable[int]) -> float:
        exact = self.conditional(V)
        projected = project_codes(self.model, self.codes, exact.scope)
        sub = exact.lookup(projected, self.spins)
        return float(np.max(np.abs(sub - self.full)))

    def risk(
        self, samples: SampleSet, V: Iterable[int],
        table: Optional[EmpiricalTable] = None,
    ) -> float:
        table = table or build_table(samples, self.target, V)
        projected = project_codes(self.model, self.codes, table.scope)
        estimate = table.lookup(projected, self.spins)
        return float(np.max(np.abs(estimate - self.full)))

    def variance(
        self, samples: SampleSet, V: Iterable[int],
        table: Optional[EmpiricalTable] = None,
    ) -> float:
        table = table or build_table(samples, self.target, V)
        exact = self.conditional(table.scope)
        cond = np.arange(2 ** len(table.scope), dtype=np.uint64)
        ones = np.ones(cond.shape, dtype=np.int8)
        p_hat = table.lookup(cond, ones)
        p = exact.plus
        # |p_hat - p| is the same for both target spins
        return float(np.max(np.abs(p_hat - p)))

    def sup_norm_full(self) -> float:
        return float(np.max(np.maximum(self.full, 1.0 - self.full)))

    def sup_norm_sub(self, V: Iterable[int]) -> float:
        plus = self.conditional(V).plus
        return float(np.max(np.maximum(plus, 1.0 - plus)))

    def true_omega(self, j: int) -> float:
        if j == self.target:
            raise InputError("true_omega needs a site different from the target")
        flipped = self.codes ^ (1 << self.model.require_site(j))
        return float(np.max(self.full - self.full[flipped]))

    def best(
        self, samples: SampleSet, collection: Iterable[SiteSet]
    ) -> Tuple[SiteSet, float]:
        """Risk-minimising candidate; ties go to smaller, then lexicographic first."""
        scored = [(self.risk(samples, V), len(V), tuple(V)) for V in collection]
        if not scored:
            raise InputError("Candidate collection is empty")
        value, _, V = min(scored)
        return V, value


def bias(
    model: IsingModel, i: int, V: Iterable[int], exact_cap: int = DEFAULT_EXACT_CAP
) -> float:
    """max over full configurations of |P_{i|V}(x) - P_{i|G}(x)|."""
    scope = _require_scope(model, i, V)
    return RiskOracle(model, i, exact_cap).bias(scope)


def true_omega_full(
    model: IsingModel, i: int, j: int, exact_cap: int = DEFAULT_EXACT_CAP
) -> float:
    """max over x of P_{i|G}(x) - P_{i|G}(x with j flipped)."""
    model.require_site(j)
    return RiskOracle(model, i, exact_cap).true_omega(j)


def risk(samples: SampleSet, model: IsingModel, i: int, V: Iterable[int],
         exact_cap: int = DEFAULT_EXACT_CAP) -> float:
    """L-infinity distance of P-hat_{i|V} to P_{i|G}, 1/2 on unobserved patterns."""
    scope = _require_scope(model, i, V)
    return RiskOracle(model, i, exact_cap).risk(samples, scope)


def variance_term(samples: SampleSet, model: IsingModel, i: int, V: Iterable[int],
                  exact_cap: int = DEFAULT_EXACT_CAP) -> float:
    """L-infinity distance of P-hat_{i|V} to P_{i|V} over the patterns of V u {i}."""
    scope = _require_scope(model, i, V)
    return RiskOracle(model, i, exact_cap).variance(samples, scope)


def oracle_model(
    samples: SampleSet, model: IsingModel, i: int, collection: Iterable[SiteSet],
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> SiteSet:
    """Candidate of smallest true risk."""
    return RiskOracle(model, i, exact_cap).best(samples, collection)[0]


def psi(
    model: IsingModel, samples: SampleSet, i: int, v: float,
    max_card: int = DEFAULT_MAX_CARD, exact_cap: int = DEFAULT_EXACT_CAP,
) -> float:
    """Smallest bias over V with p-hat-minus_V >= v^-2 and |V| <= max_card.

    Infinite when no set qualifies.

    Depends on the sample through p-hat-minus.
    """
    if v <= 0:
        raise InputError(f"v must be positive, got {v}")
    oracle = RiskOracle(model, i, exact_cap)
    bound = v ** -2
    universe = [s for s in samples.site_labels if s != i]
    best = math.inf
    for V in enumerate_collection(universe, max_card):
        if p_hat_min(build_table(samples, i, V)) >= bound:
            best = min(best, oracle.bias(V))
    return best


@dataclass(frozen=True)
class ScreeningSandwich:
    """Inclusion check lower <= kept <= upper for a reduction at threshold eta."""

    lower: SiteSet
    kept: SiteSet
    upper: SiteSet

    @property
    def holds(self) -> bool:
        return set(self.lower) <= set(self.kept) <= set(self.upper)


def screening_sandwich(
    model: IsingModel, i: int, universe: Sequence[int], kept: Sequence[int],
    eta: float, n: int, M: int, delta: float,
) -> ScreeningSandwich:
    """{j : omega(f) >= C1 (eta + t)} and {j : omega(f) >= C2 (eta - t)}.

    t is the screening floor.
    """
    constants = model_constants(model)
    t = 3.0 * math.sqrt(math.log(6 * M * delta) / (2 * n))
    omegas = {j: potential_omega(model, i, j) for j in as_site_set(universe) if j != i}
    lower = tuple(j for j, w in sorted(omegas.items()) if w >= constants.C1 * (eta + t))
    upper = tuple(j for j, w in sorted(omegas.items()) if w >= constants.C2 * (eta - t))
    return ScreeningSandwich(lower, as_site_set(kept), upper)

