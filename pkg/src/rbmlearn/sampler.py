"""Observed-variable samples: exact inverse-CDF draws and a heat-bath Gibbs sampler.

Every random stream is a ``numpy.random.Philox`` counter-based generator
keyed by a ``SeedSequence``, so outputs replay identically across platforms.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import CapacityError, ParameterError
from .exact import ENUMERATION_LIMIT, ExactDistribution, check_capacity, observed_distribution
from .model import IsingModel

# Above this many draws sample_exact stores distinct rows with multiplicities.
MATERIALIZE_LIMIT = 10_000_000
SEED_LIMIT = 1 << 64


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator for ``seed``; ``stream`` selects an independent substream."""
    seed = int(seed)
    if not 0 <= seed < SEED_LIMIT:
        raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(stream))))


def model_id(model) -> str:
    """Short stable hash of a model's parameters, used as sample provenance."""
    from .io import dumps_model

    return hashlib.sha256(dumps_model(model).encode()).hexdigest()[:16]


def config_index(rows: np.ndarray) -> np.ndarray:
    """Bitmask index of each ±1 row (bit ``i`` set iff column ``i`` is +1)."""
    rows = np.asarray(rows)
    n = rows.shape[1]
    if n > 62:
        raise CapacityError("configuration index limited to 62 variables")
    weights = np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))
    return (rows > 0).astype(np.int64) @ weights


def rows_from_index(idx: np.ndarray, n: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)[:, None]
    return (((idx >> np.arange(n)) & 1) * 2 - 1).astype(np.int8)


@dataclass(frozen=True)
class SampleSet:
    """``M`` observed configurations with provenance.

    ``rows`` holds ±1 int8 rows. When ``counts`` is given the rows are
    distinct configurations and ``counts[r]`` is the multiplicity of row
    ``r``; this compressed form lets very large sample counts be held
    exactly without materializing every draw.
    """

    n_vars: int
    rows: np.ndarray
    seed: int = 0
    source: str = ""
    counts: np.ndarray | None = None

    def __post_init__(self):
        rows = np.asarray(self.rows)
        if rows.size == 0:
            rows = rows.reshape(0, int(self.n_vars))
        if rows.ndim != 2 or rows.shape[1] != self.n_vars:
            raise ParameterError(f"rows must have shape (M, {self.n_vars})")
        if not np.all((rows == 1) | (rows == -1)):
            raise ParameterError("sample entries must be +1 or -1")
        rows = rows.astype(np.int8)
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        if self.counts is not None:
            counts = np.asarray(self.counts, dtype=np.int64)
            if counts.shape != (rows.shape[0],) or np.any(counts < 0):
                raise ParameterError("counts must be nonnegative, one per row")
            counts.setflags(write=False)
            object.__setattr__(self, "counts", counts)

    @property
    def M(self) -> int:
        return int(self.counts.sum()) if self.counts is not None else self.rows.shape[0]

    @property
    def weights(self) -> np.ndarray:
        """Multiplicity of every stored row."""
        if self.counts is not None:
            return self.counts
        return np.ones(self.rows.shape[0], dtype=np.int64)

    def expanded(self) -> np.ndarray:
        """One row per draw."""
        if self.counts is None:
            return self.rows
        if self.M > MATERIALIZE_LIMIT:
            raise CapacityError(f"{self.M} rows exceed the materialization limit {MATERIALIZE_LIMIT}")
        return np.repeat(self.rows, self.counts, axis=0)

    def compressed(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct rows in bitmask order and their multiplicities."""
        if self.rows.shape[0] == 0:
            return self.rows, np.zeros(0, dtype=np.int64)
        idx = config_index(self.rows)
        uniq, inv = np.unique(idx, return_inverse=True)
        counts = np.bincount(inv, weights=None if self.counts is None else self.counts, minlength=uniq.size)
        return rows_from_index(uniq, self.n_vars), counts.astype(np.int64)

    def histogram(self) -> np.ndarray:
        """Count of every configuration, bitmask indexed (float to allow huge M)."""
        check_capacity(self.n_vars)
        return np.bincount(
            config_index(self.rows), weights=self.weights.astype(float), minlength=1 << self.n_vars
        )

    def column_means(self) -> np.ndarray:
        if self.M == 0:
            raise ParameterError("mean of an empty sample set")
        w = self.weights.astype(float)
        return (w @ self.rows.astype(float)) / w.sum()


MAX_COUNT = int(np.iinfo(np.int64).max)


def _draw_from(dist: ExactDistribution, M: int, rng: np.random.Generator, seed: int, source: str) -> SampleSet:
    n = dist.n_vars
    p = dist.probabilities()
    if M <= MATERIALIZE_LIMIT:
        cdf = np.cumsum(p)
        u = rng.random(M) * cdf[-1]
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), p.size - 1)
        return SampleSet(n, rows_from_index(idx, n), seed, source)
    if M > MAX_COUNT:
        raise CapacityError(f"M={M} exceeds the largest representable count {MAX_COUNT}")
    counts = rng.multinomial(M, p / p.sum())
    keep = np.flatnonzero(counts)
    return SampleSet(n, rows_from_index(keep, n), seed, source, counts[keep])


def sample_exact(model: IsingModel, M: int, seed: int, source: str | None = None) -> SampleSet:
    """``M`` i.i.d. draws from the observed marginal of ``model``.

    Draws use the inverse CDF of the enumerated table. Beyond
    :data:`MATERIALIZE_LIMIT` draws the multinomial count vector is sampled
    directly and the result is returned in compressed form.
    """
    M = int(M)
    if M < 0:
        raise ParameterError("M must be nonnegative")
    if model.n_nodes > ENUMERATION_LIMIT:
        raise CapacityError(f"{model.n_nodes} nodes exceed the enumeration bound of {ENUMERATION_LIMIT}")
    source = model_id(model) if source is None else source
    dist = observed_distribution(model)
    return _draw_from(dist, M, make_rng(seed), seed, source)


def sample_distribution(dist: ExactDistribution, M: int, seed: int, source: str = "") -> SampleSet:
    """``M`` i.i.d. draws from an explicit table."""
    if M < 0:
        raise ParameterError("M must be nonnegative")
    return _draw_from(dist, int(M), make_rng(seed), seed, source)


def sample_gibbs(
    model: IsingModel,
    M: int,
    burn_in: int = 1000,
    thinning: int = 10,
    seed: int = 0,
    n_chains: int | None = None,
    source: str | None = None,
) -> SampleSet:
    """Single-site heat-bath Gibbs sampling, returning observed coordinates.

    ``n_chains`` independent chains (default ``min(M, 512)``) start from
    uniform states and advance in lockstep; after ``burn_in`` sweeps each
    chain contributes one state every ``thinning`` sweeps. Row ``t * C + c``
    is the ``t``-th state of chain ``c``. Burn-in and thinning defaults are
    heuristics; correctness of the learners never depends on them.
    """
    M = int(M)
    if M < 0 or burn_in < 0 or thinning < 1:
        raise ParameterError("need M >= 0, burn_in >= 0 and thinning >= 1")
    source = model_id(model) if source is None else source
    obs = model.observed
    if M == 0:
        return SampleSet(len(obs), np.zeros((0, len(obs)), np.int8), seed, source)
    C = min(M, 512) if n_chains is None else int(n_chains)
    rng = make_rng(seed)
    n = model.n_nodes
    J = model.coupling_matrix()
    h = np.asarray(model.fields, dtype=float)
    x = rng.integers(0, 2, size=(C, n)).astype(float) * 2 - 1

    def sweep():
        u = rng.random((C, n))
        for i in range(n):
            local = x @ J[:, i] + h[i]
            x[:, i] = np.where(u[:, i] < expit(2.0 * local), 1.0, -1.0)

    for _ in range(burn_in):
        sweep()
    per_chain = -(-M // C)
    out = np.empty((per_chain, C, len(obs)), dtype=np.int8)
    for t in range(per_chain):
        for _ in range(thinning):
            sweep()
        out[t] = x[:, obs]
    return SampleSet(len(obs), out.reshape(-1, len(obs))[:M], seed, source)


def split_counts(counts: np.ndarray, fraction: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Assign each draw independently to the second part with probability ``fraction``."""
    second = rng.binomial(np.asarray(counts, dtype=np.int64), fraction)
    return counts - second, second
