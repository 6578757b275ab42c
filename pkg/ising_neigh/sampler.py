"""Exact and Gibbs sampling of Ising models, plus the sample file formats."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from numba import njit
from pydantic import BaseModel, ConfigDict, ValidationError
from scipy.special import logsumexp

from ising_neigh.config import SamplerConfig
from ising_neigh.errors import CapacityError, InputError
from ising_neigh.model import IsingModel, spins_from_codes

logger = logging.getLogger(__name__)

GENERATOR = "PCG64"
# retained states generated per kernel call
_RECORD_BLOCK = 256


class SampleMeta(BaseModel):
    """Provenance of a sample set; enough to regenerate it bit-exactly."""

    model_config = ConfigDict(frozen=True)

    seed: Optional[int] = None
    sampler: Literal["exact", "gibbs", "external"] = "external"
    burn_in: int = 0
    thinning: int = 1
    scan: str = "random"
    generator: str = GENERATOR
    model_hash: Optional[str] = None


@dataclass(frozen=True, eq=False)
class SampleSet:
    """n x M spin matrix over the observed sites, stored bit-packed by column."""

    site_labels: Tuple[int, ...]
    packed: np.ndarray
    n: int
    meta: SampleMeta = SampleMeta()

    def __post_init__(self) -> None:
        labels = tuple(int(s) for s in self.site_labels)
        if len(set(labels)) != len(labels):
            raise InputError("Sample site labels must be unique")
        if self.n < 1:
            raise InputError("A sample set needs at least one observation")
        object.__setattr__(self, "site_labels", labels)
        packed = np.ascontiguousarray(self.packed, dtype=np.uint8)
        if packed.shape != ((self.n + 7) // 8, len(labels)):
            raise InputError("Packed sample matrix does not match n and site labels")
        packed.setflags(write=False)
        object.__setattr__(self, "packed", packed)

    @classmethod
    def from_bits(
        cls,
        bits: np.ndarray,
        site_labels: Sequence[int],
        meta: Optional[SampleMeta] = None,
    ) -> "SampleSet":
        """Build from a boolean matrix where True means spin +1."""
        bits = np.asarray(bits, dtype=bool)
        if bits.ndim != 2 or bits.shape[1] != len(site_labels):
            raise InputError(
                "Sample matrix must be n x M with one column per site label"
            )
        if bits.shape[0] < 1:
            raise InputError("n must be at least 1")
        packed = np.packbits(bits, axis=0)
        return cls(tuple(site_labels), packed, bits.shape[0], meta or SampleMeta())

    @classmethod
    def from_spins(
        cls,
        spins: np.ndarray,
        site_labels: Sequence[int],
        meta: Optional[SampleMeta] = None,
    ) -> "SampleSet":
        spins = np.asarray(spins)
        if spins.size and not np.all((spins == 1) | (spins == -1)):
            raise InputError("Every sample entry must be -1 or +1")
        return cls.from_bits(spins == 1, site_labels, meta)

    @property
    def M(self) -> int:
        return len(self.site_labels)

    @cached_property
    def bits(self) -> np.ndarray:
        out = np.unpackbits(self.packed, axis=0, count=self.n).astype(bool)
        out.setflags(write=False)
        return out

    @cached_property
    def spins(self) -> np.ndarray:
        out = self.bits.astype(np.int8) * 2 - 1
        out.setflags(write=False)
        return out

    @cached_property
    def index(self) -> Dict[int, int]:
        return {s: k for k, s in enumerate(self.site_labels)}

    def require_site(self, i: int) -> int:
        try:
            return self.index[i]
        except KeyError:
            raise InputError(f"Site {i!r} is not observed in the sample set") from None

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, SampleSet)
            and other.site_labels == self.site_labels
            and other.n == self.n
            and np.array_equal(other.packed, self.packed)
            and other.meta == self.meta
        )

    __hash__ = None  # type: ignore[assignment]


def derive_seed(seed: int, index: int) -> int:
    """Per-replica seed: the base seed XOR the replica index."""
    return int(seed) ^ int(index)


# --- exact enumeration ---------------------------------------------------------

@dataclass(frozen=True)
class JointDistribution:
    """Boltzmann probabilities of all 2^|G| configurations.

    Configuration code c has spin +1 at ``sites[k]`` iff bit k of c is set.
    """

    sites: Tuple[int, ...]
    probabilities: np.ndarray

    @property
    def codes(self) -> np.ndarray:
        return np.arange(self.probabilities.size, dtype=np.int64)

    def as_dict(self) -> Dict[Tuple[int, ...], float]:
        """Map spin tuples (ordered as ``sites``) to probabilities."""
        out = {}
        for code, p in enumerate(self.probabilities):
            spins = tuple(1 if (code >> k) & 1 else -1 for k in range(len(self.sites)))
            out[spins] = float(p)
        return out


def _require_capacity(model: IsingModel, exact_cap: int) -> None:
    if model.size > exact_cap:
        raise CapacityError(
            f"Exact enumeration needs 2^{model.size} configurations; "
            f"exact_cap is {exact_cap} sites"
        )


def joint_distribution(model: IsingModel, exact_cap: int = 20) -> JointDistribution:
    """Normalized exp(sum_{i<j} J_ij x_i x_j + sum_i H_i x_i) per configuration."""
    _require_capacity(model, exact_cap)
    model.require_classical()
    codes = np.arange(2 ** model.size, dtype=np.int64)
    log_w = np.zeros(codes.size)
    J = model.couplings
    for a in range(model.size):
        h = model.field_vector[a]
        if h:
            log_w += h * spins_from_codes(codes, a)
        for b in range(a + 1, model.size):
            if J[a, b]:
                same = 1 - 2 * (((codes >> a) ^ (codes >> b)) & 1)
                log_w += J[a, b] * same
    probs = np.exp(log_w - logsumexp(log_w))
    probs /= probs.sum()
    probs.setflags(write=False)
    return JointDistribution(model.sites, probs)


def exact_sampler(
    model: IsingModel, n: int, config: Optional[SamplerConfig] = None
) -> SampleSet:
    """n i.i.d. draws by inverse CDF over the enumerated joint table."""
    config = config or SamplerConfig()
    if n < 1:
        raise InputError("n must be at least 1")
    joint = joint_distribution(model, config.exact_cap)
    rng = np.random.default_rng(config.seed)
    cdf = np.cumsum(joint.probabilities)
    cdf[-1] = 1.0
    codes = np.searchsorted(cdf, rng.random(n), side="right")
    codes = np.minimum(codes, cdf.size - 1)
    bits = ((codes[:, None] >> np.arange(model.size)) & 1).astype(bool)
    meta = SampleMeta(seed=config.seed, sampler="exact", model_hash=model.fingerprint)
    logger.debug(
        "exact sampler: %d draws over %d sites, seed=%d", n, model.size, config.seed
    )
    return SampleSet.from_bits(bits, model.sites, meta)


# --- Gibbs sampling ------------------------------------------------------------

@njit(cache=True)
def _gibbs_kernel(
    state, indptr, indices, weights, fields, order, uniforms, record_every, out
):
    recorded = 0
    for t in range(order.shape[0]):
        k = order[t]
        h = fields[k]
        for p in range(indptr[k], indptr[k + 1]):
            h += weights[p] * state[indices[p]]
        # P(x_k = +1 | rest) = 1 / (1 + exp(-2h)) = (1 + tanh h) / 2
        if uniforms[t] < 0.5 * (1.0 + math.tanh(h)):
            state[k] = 1
        else:
            state[k] = -1
        if record_every > 0 and (t + 1) % record_every == 0:
            out[recorded, :] = state
            recorded += 1
    return recorded


def _csr(model: IsingModel) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    J = model.couplings
    indptr = [0]
    indices, weights = [], []
    for a in range(model.size):
        nz = np.nonzero(J[a])[0]
        indices.extend(nz.tolist())
        weights.extend(J[a, nz].tolist())
        indptr.append(len(indices))
    return (
        np.asarray(indptr, dtype=np.int64),
        np.asarray(indices, dtype=np.int64),
        np.asarray(weights, dtype=np.float64),
    )


def _site_order(
    rng: np.random.Generator, size: int, sweeps: int, scan: str
) -> np.ndarray:
    if scan == "systematic":
        return np.tile(np.arange(size, dtype=np.int64), sweeps)
    return rng.integers(0, size, size=size * sweeps, dtype=np.int64)


def gibbs_sampler(
    model: IsingModel, n: int, config: Optional[SamplerConfig] = None
) -> SampleSet:
    """Single-chain Gibbs sampler.

    ``burn_in`` sweeps, then one recorded state every ``thinning`` sweeps.
    """
    config = config or SamplerConfig()
    if n < 1:
        raise InputError("n must be at least 1")
    model.require_classical()
    size = model.size
    indptr, indices, weights = _csr(model)
    fields = np.ascontiguousarray(model.field_vector, dtype=np.float64)
    rng = np.random.default_rng(config.seed)
    state = np.where(rng.random(size) < 0.5, 1, -1).astype(np.int8)
    empty = np.zeros((0, size), dtype=np.int8)

    if config.burn_in:
        order = _site_order(rng, size, config.burn_in, config.scan)
        _gibbs_kernel(
            state, indptr, indices, weights, fields, order, rng.random(order.size),
            0, empty,
        )

    out = np.empty((n, size), dtype=np.int8)
    done = 0
    while done < n:
        block = min(_RECORD_BLOCK, n - done)
        order = _site_order(rng, size, config.thinning * block, config.scan)
        _gibbs_kernel(
            state, indptr, indices, weights, fields, order, rng.random(order.size),
            config.thinning * size, out[done:done + block],
        )
        done += block

    meta = SampleMeta(
        seed=config.seed, sampler="gibbs", burn_in=config.burn_in,
        thinning=config.thinning, scan=config.scan, model_hash=model.fingerprint,
    )
    logger.debug(
        "gibbs sampler: %d states over %d sites, seed=%d burn_in=%d "
        "thinning=%d scan=%s",
        n, size, config.seed, config.burn_in, config.thinning, config.scan,
    )
    return SampleSet.from_spins(out, model.sites, meta)


def sample(model: IsingModel, n: int, config: Optional[SamplerConfig] = None,
           kind: str = "auto") -> SampleSet:
    """Exact sampler when the model fits ``exact_cap``, Gibbs otherwise."""
    config = config or SamplerConfig()
    if kind == "auto":
        kind = "exact" if model.size <= config.exact_cap else "gibbs"
    if kind == "exact":
        return exact_sampler(model, n, config)
    if kind == "gibbs":
        return gibbs_sampler(model, n, config)
    raise InputError(f"Unknown sampler kind '{kind}' (expected auto, exact or gibbs)")


# --- sample files ----------------------------------------------------------------

def save_samples(samples: SampleSet, path: Union[str, Path]) -> None:
    """Write ``.npz`` files bit-packed, anything else as comma separated text."""
    path = Path(path)
    try:
        if path.suffix == ".npz":
            np.savez_compressed(
                path,
                packed=samples.packed,
                sites=np.asarray(samples.site_labels, dtype=np.int64),
                n=np.int64(samples.n),
                meta=np.asarray(samples.meta.model_dump_json()),
            )
            return
        path.write_text(samples_to_text(samples), encoding="utf-8")
    except OSError as e:
        raise InputError(f"Cannot write samples to {path}: {e}") from e


def samples_to_text(samples: SampleSet) -> str:
    """Header line, ``# key=value`` meta lines, then one comma separated row a draw."""
    lines = ["sites: " + ",".join(str(s) for s in samples.site_labels)]
    for key, value in sorted(samples.meta.model_dump().items()):
        if value is not None:
            lines.append(f"# {key}={value}")
    for row in samples.spins:
        lines.append(",".join("+1" if v == 1 else "-1" for v in row))
    return "\n".join(lines) + "\n"


def load_samples(path: Union[str, Path]) -> SampleSet:
    path = Path(path)
    try:
        if path.suffix == ".npz":
            with np.load(path, allow_pickle=False) as data:
                meta = SampleMeta.model_validate_json(str(data["meta"]))
                sites = tuple(data["sites"].tolist())
                return SampleSet(sites, data["packed"], int(data["n"]), meta)
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"Cannot read samples from {path}: {e}") from e
    except (KeyError, ValueError, ValidationError) as e:
        raise InputError(f"Malformed binary sample file {path}: {e}") from e
    return parse_samples_text(text, source=str(path))


def parse_samples_text(text: str, source: str = "<text>") -> SampleSet:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith("sites:"):
        raise InputError(f"{source}: first line must be 'sites: id1,id2,...'")
    try:
        labels = [int(s) for s in lines[0][len("sites:"):].split(",") if s.strip()]
        meta: Dict[str, str] = {}
        rows = []
        for line in lines[1:]:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
                continue
            row = [int(v) for v in line.split(",")]
            if len(row) != len(labels):
                raise InputError(
                    f"{source}: row has {len(row)} entries, expected {len(labels)}"
                )
            rows.append(row)
        sample_meta = SampleMeta.model_validate(meta)
    except ValueError as e:
        raise InputError(f"{source}: malformed sample file: {e}") from e
    if not rows:
        raise InputError(f"{source}: no sample rows")
    return SampleSet.from_spins(np.array(rows, dtype=np.int8), labels, sample_meta)
