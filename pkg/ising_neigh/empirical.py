"""Sample-based quantities: conditionals, p-hat-minus, sup-norms, omega, correlations.

Conditioning patterns over a scope V are encoded as unsigned integers: bit k is set
when the k-th site of the sorted scope carries spin +1. Conditionals are ratios of
integer counts; equal ratios therefore map to identical floats.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Tuple

import numpy as np

from ising_neigh.errors import CapacityError, InputError
from ising_neigh.model import Configuration, SiteSet, as_site_set
from ising_neigh.sampler import SampleSet

MAX_SCOPE_WIDTH = 62
# beyond this width a full pattern listing is refused
_LISTING_WIDTH = 20


@dataclass(frozen=True, eq=False)
class EmpiricalTable:
    """Pattern counts of (x(V), x(i)) over a sample set.

    ``cond_codes`` lists the observed conditioning patterns in increasing order,
    ``totals`` their counts and ``plus`` how many of those rows had x(i) = +1.
    """

    target: int
    scope: SiteSet
    n: int
    cond_codes: np.ndarray
    totals: np.ndarray
    plus: np.ndarray

    @property
    def width(self) -> int:
        return len(self.scope)

    @property
    def order(self) -> SiteSet:
        """Sorted sites of V u {i}, the canonical key order of :attr:`counts`."""
        return as_site_set(self.scope + (self.target,))

    @property
    def fully_observed(self) -> bool:
        return self.cond_codes.size == 2 ** self.width

    def encode(self, x: Configuration) -> Tuple[int, int]:
        """Conditioning code and target spin of a configuration defined on V u {i}."""
        code = 0
        for k, site in enumerate(self.scope):
            value = _spin(x, site)
            if value == 1:
                code |= 1 << k
        return code, _spin(x, self.target)

    def _locate(self, code: int) -> int:
        pos = int(np.searchsorted(self.cond_codes, np.uint64(code)))
        if pos < self.cond_codes.size and int(self.cond_codes[pos]) == code:
            return pos
        return -1

    def conditional_fraction(self, code: int, a: int) -> Fraction:
        """Exact P-hat(x(i) = a | pattern), 1/2 when the pattern is unobserved."""
        pos = self._locate(code)
        if pos < 0:
            return Fraction(1, 2)
        hits = int(self.plus[pos]) if a == 1 else int(self.totals[pos] - self.plus[pos])
        return Fraction(hits, int(self.totals[pos]))

    def lookup(self, codes: np.ndarray, spins: np.ndarray) -> np.ndarray:
        """Vectorised conditionals for arrays of conditioning codes and target spins."""
        codes = np.asarray(codes, dtype=np.uint64)
        spins = np.asarray(spins)
        out = np.full(codes.shape, 0.5)
        if self.cond_codes.size == 0:
            return out
        pos = np.searchsorted(self.cond_codes, codes)
        pos_c = np.minimum(pos, self.cond_codes.size - 1)
        found = self.cond_codes[pos_c] == codes
        plus_prob = self.plus[pos_c] / self.totals[pos_c]
        minus_prob = (self.totals[pos_c] - self.plus[pos_c]) / self.totals[pos_c]
        values = np.where(spins == 1, plus_prob, minus_prob)
        out[found] = values[found]
        return out

    @property
    def counts(self) -> Dict[Tuple[int, ...], int]:
        """Count of every pattern of V u {i}, keyed by spins in :attr:`order`."""
        if self.width > _LISTING_WIDTH:
            raise CapacityError(f"Refusing to list 2^{self.width + 1} patterns")
        slot = {site: k for k, site in enumerate(self.order)}
        out: Dict[Tuple[int, ...], int] = {}
        for code in range(2 ** self.width):
            pos = self._locate(code)
            for a in (1, -1):
                key = [0] * (self.width + 1)
                for k, site in enumerate(self.scope):
                    key[slot[site]] = 1 if (code >> k) & 1 else -1
                key[slot[self.target]] = a
                if pos < 0:
                    hits = 0
                elif a == 1:
                    hits = int(self.plus[pos])
                else:
                    hits = int(self.totals[pos] - self.plus[pos])
                out[tuple(key)] = hits
        return out


def _spin(x: Configuration, site: int) -> int:
    try:
        value = x[site]
    except KeyError:
        raise InputError(f"Configuration does not define site {site}") from None
    if value not in (1, -1):
        raise InputError(f"Spin at site {site} must be -1 or +1, got {value!r}")
    return int(value)


def pattern_codes(bits: np.ndarray, columns: Iterable[int]) -> np.ndarray:
    """Pack boolean columns into one uint64 code per row (bit k <- k-th column)."""
    code = np.zeros(bits.shape[0], dtype=np.uint64)
    for k, col in enumerate(columns):
        code |= bits[:, col].astype(np.uint64) << np.uint64(k)
    return code


def build_table(samples: SampleSet, i: int, V: Iterable[int]) -> EmpiricalTable:
    """Count the patterns of (x(V), x(i)) in one pass over the samples."""
    scope = as_site_set(V)
    if i in scope:
        raise InputError(f"Target site {i} cannot belong to its own candidate set")
    if len(scope) > MAX_SCOPE_WIDTH:
        raise CapacityError(
            f"Candidate set of {len(scope)} sites exceeds the "
            f"{MAX_SCOPE_WIDTH}-bit pattern key"
        )
    target_col = samples.require_site(i)
    columns = [samples.require_site(j) for j in scope]
    bits = samples.bits
    codes = pattern_codes(bits, columns)
    uniq, inverse, totals = np.unique(codes, return_inverse=True, return_counts=True)
    plus = np.bincount(
        inverse.ravel(), weights=bits[:, target_col], minlength=uniq.size
    )
    return EmpiricalTable(
        target=i,
        scope=scope,
        n=samples.n,
        cond_codes=uniq.astype(np.uint64),
        totals=totals.astype(np.int64),
        plus=np.rint(plus).astype(np.int64),
    )


def empirical_conditional(table: EmpiricalTable, x: Configuration) -> float:
    """P-hat_{i|V}(x) with the 1/2 convention on unobserved conditioning patterns."""
    code, a = table.encode(x)
    return float(table.conditional_fraction(code, a))


def p_hat_min(table: EmpiricalTable) -> float:
    """max(1/n, smallest empirical probability over all conditioning patterns of V)."""
    if table.width == 0:
        return 1.0
    if not table.fully_observed:
        return 1.0 / table.n
    return max(1.0 / table.n, float(table.totals.min()) / table.n)


def sup_conditional(table: EmpiricalTable) -> float:
    """Sup-norm of P-hat_{i|V}; never below 1/2."""
    best = np.maximum(table.plus, table.totals - table.plus) / table.totals
    return max(0.5, float(best.max()))


def empirical_omega(table: EmpiricalTable, j: int) -> float:
    """Largest change of P-hat_{i|V} when the spin at ``j`` is flipped."""
    try:
        k = table.scope.index(j)
    except ValueError:
        raise InputError(
            f"Site {j} is not in the table scope {list(table.scope)}"
        ) from None
    partners = table.cond_codes ^ np.uint64(1 << k)
    mine = table.plus / table.totals
    theirs = table.lookup(partners, np.ones(partners.shape, dtype=np.int8))
    return float(np.max(np.abs(mine - theirs), initial=0.0))


def pair_counts(samples: SampleSet, i: int) -> Tuple[int, np.ndarray, np.ndarray]:
    """Counts of x(i)=+1, of x(j)=+1 per column and of joint +1 per column."""
    col = samples.require_site(i)
    bits = samples.bits
    own = bits[:, col]
    per_site = bits.sum(axis=0, dtype=np.int64)
    joint = (bits & own[:, None]).sum(axis=0, dtype=np.int64)
    return int(own.sum()), per_site, joint


def pair_correlations(
    samples: SampleSet, i: int, universe: Iterable[int]
) -> Dict[int, float]:
    """|p-hat(i,j) - p-hat(i) p-hat(j)| for every j of ``universe``, in one pass."""
    sites = as_site_set(universe)
    if i in sites:
        raise InputError(f"Target site {i} cannot be screened against itself")
    c_i, per_site, joint = pair_counts(samples, i)
    n = samples.n
    out = {}
    for j in sites:
        col = samples.require_site(j)
        # exact integer numerator, single rounding at the division
        out[j] = abs(n * int(joint[col]) - c_i * int(per_site[col])) / (n * n)
    return out


def pair_correlation(samples: SampleSet, i: int, j: int) -> float:
    if i == j:
        raise InputError("pair_correlation needs two distinct sites")
    return pair_correlations(samples, i, (j,))[j]


def naive_conditional(samples: SampleSet, i: int, x: Mapping[int, int]) -> float:
    """Per-query scan over raw rows; reference for :func:`empirical_conditional`."""
    scope = [s for s in x if s != i]
    rows = samples.spins
    match = np.ones(samples.n, dtype=bool)
    for s in scope:
        match &= rows[:, samples.require_site(s)] == x[s]
    denom = int(match.sum())
    if denom == 0:
        return 0.5
    hits = int((match & (rows[:, samples.require_site(i)] == x[i])).sum())
    return float(Fraction(hits, denom))


def all_patterns(sites: SiteSet) -> Iterable[Dict[int, int]]:
    """Every configuration over ``sites``."""
    for values in itertools.product((1, -1), repeat=len(sites)):
        yield dict(zip(sites, values))
