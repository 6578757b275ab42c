"""Pairwise binary random fields (Ising models) and their closed-form quantities.

Spins take values in {-1, +1}. A potential entry ``f_{i,j}`` is stored as a 2x2
table indexed by ``[spin_index(a), spin_index(b)]`` with index 0 for +1 and 1 for -1.
Entries (i, j) and (j, i) are stored separately; absent entries mean f = 0.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import (
    Callable,
    Dict,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
from pydantic import BaseModel, ValidationError
from scipy.special import expit

from ising_neigh.errors import InputError, ModelError

Configuration = Mapping[int, int]
SiteSet = Tuple[int, ...]

# f(a, b) = J * a * b in table layout
_CLASSICAL = np.array([[1.0, -1.0], [-1.0, 1.0]])
_SYMMETRY_TOL = 1e-12


def spin_index(a: int) -> int:
    if a == 1:
        return 0
    if a == -1:
        return 1
    raise InputError(f"Spin values must be -1 or +1, got {a!r}")


def flip(x: Configuration, j: int) -> Dict[int, int]:
    """Return a copy of ``x`` with the spin at ``j`` reversed."""
    if j not in x:
        raise InputError(f"Site {j} is not part of the configuration")
    flipped = dict(x)
    flipped[j] = -x[j]
    return flipped


def as_site_set(sites: Iterable[int]) -> SiteSet:
    """Canonical sorted, duplicate-free tuple of site ids."""
    return tuple(sorted({int(s) for s in sites}))


@dataclass(frozen=True)
class PairwisePotential:
    """Sparse table of directed pair potentials f_{i,j}(a, b)."""

    entries: Mapping[Tuple[int, int], np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        cleaned: Dict[Tuple[int, int], np.ndarray] = {}
        for (i, j), table in self.entries.items():
            if i == j:
                raise ModelError(
                    f"Diagonal potential entry ({i}, {i}) is not allowed; f_ii = 0"
                )
            arr = np.array(table, dtype=float)
            if arr.shape != (2, 2) or not np.all(np.isfinite(arr)):
                raise ModelError(
                    f"Potential entry ({i}, {j}) must be a finite 2x2 table"
                )
            arr.setflags(write=False)
            cleaned[(int(i), int(j))] = arr
        object.__setattr__(self, "entries", cleaned)

    def table(self, i: int, j: int) -> np.ndarray:
        arr = self.entries.get((i, j))
        return arr if arr is not None else np.zeros((2, 2))

    @cached_property
    def _partners(self) -> Dict[int, Tuple[int, ...]]:
        out: Dict[int, List[int]] = {}
        for i, j in self.entries:
            out.setdefault(i, []).append(j)
        return {i: tuple(sorted(js)) for i, js in out.items()}

    def partners(self, i: int) -> Tuple[int, ...]:
        """Sites j with a stored entry (i, j)."""
        return self._partners.get(i, ())

    def sites(self) -> set:
        return {s for pair in self.entries for s in pair}


@dataclass(frozen=True, eq=False)
class IsingModel:
    """Finite Ising model: ordered sites, pair potential, optional external fields."""

    sites: Tuple[int, ...]
    potential: PairwisePotential
    fields: Mapping[int, float] = field(default_factory=dict)
    grid: Optional[Mapping[int, Tuple[int, int]]] = None

    def __post_init__(self) -> None:
        sites = tuple(int(s) for s in self.sites)
        if len(set(sites)) != len(sites):
            raise ModelError("Site ids must be unique")
        if not sites:
            raise ModelError("A model needs at least one site")
        object.__setattr__(self, "sites", sites)
        known = set(sites)
        unknown = self.potential.sites() - known
        if unknown:
            raise ModelError(f"Potential references unknown sites: {sorted(unknown)}")
        fields = {int(k): float(v) for k, v in self.fields.items()}
        if set(fields) - known:
            stray = sorted(set(fields) - known)
            raise ModelError(f"Fields reference unknown sites: {stray}")
        object.__setattr__(self, "fields", fields)
        if self.grid is not None:
            grid = {int(k): (int(v[0]), int(v[1])) for k, v in self.grid.items()}
            if set(grid) - known:
                raise ModelError("Grid geometry references unknown sites")
            object.__setattr__(self, "grid", grid)

    @property
    def size(self) -> int:
        return len(self.sites)

    @cached_property
    def index(self) -> Dict[int, int]:
        return {s: k for k, s in enumerate(self.sites)}

    def require_site(self, i: int) -> int:
        """Column position of site ``i``; raises InputError for unknown ids."""
        try:
            return self.index[i]
        except KeyError:
            raise InputError(f"Unknown site id {i!r}") from None

    def site_at(self, coordinate: Sequence[int]) -> int:
        """Site label placed at a grid coordinate."""
        if self.grid is None:
            raise InputError("Model has no grid geometry")
        target = (int(coordinate[0]), int(coordinate[1]))
        for site, coord in self.grid.items():
            if coord == target:
                return site
        raise InputError(f"No site at grid coordinate {target}")

    @cached_property
    def fingerprint(self) -> str:
        document = model_to_document(self, classical_form=False)
        canonical = json.dumps(document, sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def __hash__(self) -> int:
        return hash(self.fingerprint)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, IsingModel) and other.fingerprint == self.fingerprint

    @cached_property
    def is_classical(self) -> bool:
        """True when f_{ij}(a,b) = J_ij a b with J_ij = J_ji for every stored pair."""
        for (i, j), table in self.potential.entries.items():
            coupling = table[0, 0]
            expected = coupling * _CLASSICAL
            if not np.allclose(table, expected, rtol=0.0, atol=_SYMMETRY_TOL):
                return False
            back = self.potential.table(j, i)
            if not np.allclose(back, expected, rtol=0.0, atol=_SYMMETRY_TOL):
                return False
        return True

    def require_classical(self) -> None:
        if not self.is_classical:
            raise ModelError(
                "Model potential is not of the classical symmetric form J_ij*a*b; "
                "no joint Boltzmann measure is available"
            )

    @cached_property
    def couplings(self) -> np.ndarray:
        """Dense symmetric coupling matrix J aligned with ``sites`` (classical only)."""
        self.require_classical()
        matrix = np.zeros((self.size, self.size))
        for (i, j), table in self.potential.entries.items():
            matrix[self.index[i], self.index[j]] = table[0, 0]
        matrix.setflags(write=False)
        return matrix

    @cached_property
    def field_vector(self) -> np.ndarray:
        vec = np.array([self.fields.get(s, 0.0) for s in self.sites])
        vec.setflags(write=False)
        return vec


@dataclass(frozen=True)
class ModelConstants:
    """Constants derived from the interaction range r."""

    r: float
    temperature: float
    nu: float
    c_r_star: float
    C_r_star: float
    C1: float
    C2: float
    kappa_min: float


def _validate_configuration(model: IsingModel, x: Configuration) -> None:
    missing = set(model.sites) - set(x)
    if missing:
        raise InputError(f"Configuration is missing sites {sorted(missing)}")
    for site, value in x.items():
        if value not in (1, -1):
            raise InputError(f"Spin at site {site} must be -1 or +1, got {value!r}")


def g_difference(model: IsingModel, i: int, j: int, a: int, b: int) -> float:
    """g_{i,j}(a,b) = f_{i,j}(a,b) - f_{i,j}(-a,b)."""
    model.require_site(i)
    model.require_site(j)
    table = model.potential.table(i, j)
    ia, ib = spin_index(a), spin_index(b)
    return float(table[ia, ib] - table[1 - ia, ib])


def _g_table(model: IsingModel, i: int, j: int) -> np.ndarray:
    table = model.potential.table(i, j)
    return table - table[::-1, :]


def spins_from_codes(codes: np.ndarray, pos: int) -> np.ndarray:
    """Spin at column ``pos`` of enumerated configurations (bit set means +1)."""
    return ((np.asarray(codes) >> pos) & 1).astype(np.int8) * 2 - 1


def _accumulate(
    model: IsingModel, i: int, column: Callable[[int], np.ndarray]
) -> np.ndarray:
    pos = model.require_site(i)
    own = column(pos)
    a_idx = (own == -1).astype(np.intp)
    total = 2.0 * model.fields.get(i, 0.0) * own.astype(float)
    for j in model.potential.partners(i):
        g = _g_table(model, i, j)
        b_idx = (column(model.index[j]) == -1).astype(np.intp)
        total = total + g[a_idx, b_idx]
    return total


def local_sums(model: IsingModel, i: int, spins: np.ndarray) -> np.ndarray:
    """Exponent sum_j g_{i,j}(x(i), x(j)) (+ field term) for each row of ``spins``.

    ``spins`` is an (N, |sites|) array of +-1 aligned with ``model.sites``.
    """
    spins = np.asarray(spins)
    return _accumulate(model, i, lambda p: spins[:, p])


def local_sums_for_codes(model: IsingModel, i: int, codes: np.ndarray) -> np.ndarray:
    """Same as :func:`local_sums` for configurations given as codes over ``sites``."""
    return _accumulate(model, i, lambda p: spins_from_codes(codes, p))


def conditional_full(model: IsingModel, i: int, x: Configuration) -> float:
    """P_{i|G}(x): probability of the spin x(i) given all other spins."""
    _validate_configuration(model, x)
    row = np.array([[x[s] for s in model.sites]], dtype=np.int8)
    return float(expit(local_sums(model, i, row)[0]))


def potential_omega(model: IsingModel, i: int, j: int) -> float:
    """omega_{i,j}(f) = sup_{a,b} g_{i,j}(a,b) - g_{i,j}(a,-b)."""
    model.require_site(i)
    model.require_site(j)
    if i == j:
        raise InputError("potential_omega needs two distinct sites")
    g = _g_table(model, i, j)
    return float(np.max(np.abs(g[:, 0] - g[:, 1])))


def interaction_range(model: IsingModel) -> float:
    """r = sup_i sup_a sum_j max_b |f_{i,j}(a,b)|; the field is the i = j entry."""
    best = 0.0
    for i in model.sites:
        per_spin = np.full(2, abs(model.fields.get(i, 0.0)))
        for j in model.potential.partners(i):
            per_spin += np.abs(model.potential.table(i, j)).max(axis=1)
        best = max(best, float(per_spin.max()))
    return best


_LOG_TINY = math.log(np.finfo(float).tiny)
_LOG_HUGE = math.log(np.finfo(float).max) - 1e-6


def _bounded_exp(log_value: float) -> float:
    # positive and finite at any range r
    return math.exp(min(max(log_value, _LOG_TINY), _LOG_HUGE))


def _log_expm1(x: float) -> float:
    return x + math.log(-math.expm1(-x))


def model_constants(model: IsingModel) -> ModelConstants:
    """Closed-form constants of the bias and screening sandwiches at range r.

    Evaluated in log space and clamped to the positive finite floats.
    """
    r = interaction_range(model)
    if r <= 0.0:
        return ModelConstants(
            r=0.0, temperature=math.inf, nu=0.5, c_r_star=0.125, C_r_star=0.25,
            C1=8.0, C2=4.0, kappa_min=0.5,
        )
    log_4r = math.log(4 * r)
    log_1p_e2 = float(np.logaddexp(0.0, 2 * r))
    log_em1_4 = _log_expm1(4 * r)
    log_c = math.log(-math.expm1(-4 * r)) - 2 * r - log_4r - 3 * log_1p_e2
    log_C = 2 * r + log_em1_4 - log_4r - 2 * math.log1p(math.exp(-2 * r))
    return ModelConstants(
        r=r,
        temperature=1.0 / r,
        nu=_bounded_exp(-log_1p_e2),
        c_r_star=_bounded_exp(log_c),
        C_r_star=_bounded_exp(log_C),
        C1=_bounded_exp(log_4r + 3 * log_1p_e2 + 6 * r - log_em1_4),
        C2=_bounded_exp(log_4r + 2 * log_1p_e2 - 6 * r - log_em1_4),
        kappa_min=_bounded_exp(log_c - log_C),
    )


def true_neighborhood(model: IsingModel, i: int) -> SiteSet:
    """Sites j != i with omega_{i,j}(f) > 0."""
    model.require_site(i)
    return tuple(
        j
        for j in sorted(model.potential.partners(i))
        if j != i and potential_omega(model, i, j) > 0
    )


def ranked_partners(model: IsingModel, i: int) -> List[int]:
    """Interacting sites of ``i`` by decreasing omega_{i,j}(f), ties by site id."""
    neighbors = true_neighborhood(model, i)
    return sorted(neighbors, key=lambda j: (-potential_omega(model, i, j), j))


# --- construction helpers ----------------------------------------------------

def from_couplings(
    sites: Iterable[int],
    couplings: Union[
        Mapping[Tuple[int, int], float], Iterable[Tuple[int, int, float]]
    ],
    fields: Optional[Mapping[int, float]] = None,
    grid: Optional[Mapping[int, Tuple[int, int]]] = None,
) -> IsingModel:
    """Classical model f_{ij}(a,b) = J_ij a b (stored in both directions)."""
    if isinstance(couplings, Mapping):
        items = couplings.items()
    else:
        items = (((i, j), J) for i, j, J in couplings)
    entries: Dict[Tuple[int, int], np.ndarray] = {}
    for (i, j), J in items:
        if (i, j) in entries:
            raise InputError(f"Duplicate coupling entry ({i}, {j})")
        if J == 0:
            continue
        entries[(i, j)] = J * _CLASSICAL
        entries[(j, i)] = J * _CLASSICAL
    return IsingModel(
        tuple(sites), PairwisePotential(entries), dict(fields or {}), grid
    )


def grid_model(coupling: float = 0.2, size: int = 3) -> IsingModel:
    """Nearest-neighbour lattice on {-h..h}^2 (h = size // 2) with uniform coupling.

    Sites are labelled row-major from 0; the centre (0, 0) of the 3x3 grid is label 4.
    """
    half = size // 2
    span = range(-half, size - half)
    coords = [(r, c) for r in span for c in span]
    grid = {k: coord for k, coord in enumerate(coords)}
    label = {coord: k for k, coord in grid.items()}
    edges = []
    for (r, c), k in label.items():
        for dr, dc in ((0, 1), (1, 0)):
            other = label.get((r + dr, c + dc))
            if other is not None:
                edges.append((k, other, coupling))
    return from_couplings(range(len(coords)), edges, grid=grid)


def random_sparse_model(
    n_sites: int = 200,
    target: int = 1,
    target_degree: int = 16,
    extra_degree: int = 2,
    coupling_scale: float = 2.0,
    seed: int = 0,
) -> IsingModel:
    """Sparse classical model with |J_ij| drawn as |N(0, coupling_scale^2)|.

    Sites are labelled 1..n_sites; ``target`` interacts with exactly ``target_degree``
    sites and every other site gets ``extra_degree`` random partners among
    non-target sites.
    """
    if not 1 <= target <= n_sites or target_degree >= n_sites:
        raise InputError("target must be a valid site and target_degree < n_sites")
    rng = np.random.default_rng(seed)
    sites = list(range(1, n_sites + 1))
    others = [s for s in sites if s != target]
    pairs = set()
    for j in rng.choice(others, size=target_degree, replace=False):
        pairs.add((target, int(j)))
    for s in others:
        candidates = [o for o in others if o != s]
        for j in rng.choice(candidates, size=extra_degree, replace=False):
            pairs.add(tuple(sorted((s, int(j)))))
    couplings = {}
    for i, j in sorted(pairs):
        couplings[(i, j)] = float(abs(rng.normal(0.0, coupling_scale)))
    return from_couplings(sites, couplings)


# --- model documents -----------------------------------------------------------

class ModelDocument(BaseModel):
    """On-disk model file: sites, grid geometry, couplings, fields, general tables."""

    sites: List[int]
    grid: Optional[Dict[int, Tuple[int, int]]] = None
    couplings: List[Tuple[int, int, float]] = []
    fields: List[Tuple[int, float]] = []
    potentials: List[Tuple[int, int, List[List[float]]]] = []


def model_from_document(data: Mapping) -> IsingModel:
    try:
        doc = ModelDocument.model_validate(data)
    except ValidationError as e:
        raise InputError(f"Invalid model document: {e}") from e
    seen = set()
    entries: Dict[Tuple[int, int], np.ndarray] = {}
    for i, j, J in doc.couplings:
        if i == j:
            raise InputError(f"Coupling ({i}, {j}) links a site to itself")
        if (i, j) in seen or (j, i) in seen:
            raise InputError(f"Duplicate potential entry ({i}, {j})")
        seen.update({(i, j), (j, i)})
        entries[(i, j)] = J * _CLASSICAL
        entries[(j, i)] = J * _CLASSICAL
    for i, j, table in doc.potentials:
        if (i, j) in seen:
            raise InputError(f"Duplicate potential entry ({i}, {j})")
        seen.add((i, j))
        entries[(i, j)] = np.array(table, dtype=float)
    fields: Dict[int, float] = {}
    for i, H in doc.fields:
        if i in fields:
            raise InputError(f"Duplicate field entry for site {i}")
        fields[i] = H
    try:
        return IsingModel(
            tuple(doc.sites), PairwisePotential(entries), fields, doc.grid
        )
    except ModelError as e:
        raise InputError(str(e)) from e


def model_to_document(model: IsingModel, classical_form: bool = True) -> Dict:
    doc: Dict = {"sites": list(model.sites)}
    if model.grid is not None:
        doc["grid"] = {str(k): list(v) for k, v in sorted(model.grid.items())}
    if classical_form and model.is_classical:
        doc["couplings"] = [
            [i, j, float(t[0, 0])]
            for (i, j), t in sorted(model.potential.entries.items())
            if i < j
        ]
    else:
        doc["potentials"] = [
            [i, j, t.tolist()] for (i, j), t in sorted(model.potential.entries.items())
        ]
    doc["fields"] = [[i, h] for i, h in sorted(model.fields.items()) if h != 0.0]
    return doc


def load_model(path: Union[str, Path]) -> IsingModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise InputError(f"Cannot read model file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"Model file {path} is not valid JSON: {e}") from e
    return model_from_document(data)


def save_model(model: IsingModel, path: Union[str, Path]) -> None:
    text = json.dumps(model_to_document(model), indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8")
