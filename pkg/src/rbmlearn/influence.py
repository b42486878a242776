"""Discrete influence ``E[X_i | X_S = +1]``: empirical estimates, oracles and checks.

Learners talk to an *oracle*: any object with ``n_vars`` and
``influence_of(i, S) -> float | None`` (``None`` when the conditioning event
has no support). Three oracles are provided:

* :class:`~rbmlearn.exact.InfluenceTable` over exact probabilities or
  sample histograms (all subsets at once through a superset-sum transform);
* :class:`BitsetOracle`, which packs each sample column into 64-bit words
  so that a conditional mean costs ``O(M / 64)`` word operations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Protocol

import numpy as np

from .errors import AssumptionError, CapacityError, ParameterError
from .exact import ENUMERATION_LIMIT, InfluenceTable, observed_distribution
from .convert import observed_marginal
from .model import IsingModel, LearnerConfig, Rbm, Subset, as_subset
from .sampler import SampleSet


class InfluenceOracle(Protocol):
    n_vars: int

    def influence_of(self, i: int, S: Iterable[int]) -> float | None: ...


@dataclass(frozen=True)
class InfluenceEstimate:
    value: float
    support_count: int
    target: tuple[int, Subset]

    @property
    def defined(self) -> bool:
        return self.support_count > 0


def _check_target(n: int, i: int, S: Subset) -> None:
    if not 0 <= i < n or any(not 0 <= s < n for s in S):
        raise ParameterError(f"variable index out of range for n={n}")
    if i in S:
        raise ParameterError("target variable must not be in the conditioning set")


def empirical_influence(samples: SampleSet, i: int, S: Iterable[int]) -> InfluenceEstimate:
    """Mean of column ``i`` over rows whose ``S`` coordinates are all +1.

    ``value`` is NaN when no row satisfies the condition.
    """
    S = as_subset(S)
    _check_target(samples.n_vars, i, S)
    rows, w = samples.rows, samples.weights
    keep = np.all(rows[:, list(S)] == 1, axis=1) if S else np.ones(rows.shape[0], dtype=bool)
    support = int(w[keep].sum())
    if support == 0:
        return InfluenceEstimate(float("nan"), 0, (i, S))
    plus = int(w[keep & (rows[:, i] == 1)].sum())
    return InfluenceEstimate(2.0 * plus / support - 1.0, support, (i, S))


class BitsetOracle:
    """Conditional means by AND/popcount over bit-packed sample columns."""

    def __init__(self, samples: SampleSet):
        rows = samples.expanded()
        M, n = rows.shape
        self.n_vars = n
        self.M = M
        words = max(1, -(-M // 64))
        packed = np.packbits(rows.T > 0, axis=1, bitorder="little")
        padded = np.zeros((n, words * 8), dtype=np.uint8)
        padded[:, : packed.shape[1]] = packed
        self.columns = padded.view(np.uint64)

    def _and(self, S: Subset) -> np.ndarray | None:
        if not S:
            return None
        acc = self.columns[S[0]].copy()
        for s in S[1:]:
            acc &= self.columns[s]
        return acc

    def support_of(self, S: Iterable[int]) -> int:
        acc = self._and(as_subset(S))
        return self.M if acc is None else int(np.bitwise_count(acc).sum())

    def influence_of(self, i: int, S: Iterable[int]) -> float | None:
        S = as_subset(S)
        _check_target(self.n_vars, i, S)
        acc = self._and(S)
        if acc is None:
            support, plus = self.M, int(np.bitwise_count(self.columns[i]).sum())
        else:
            support = int(np.bitwise_count(acc).sum())
            plus = int(np.bitwise_count(acc & self.columns[i]).sum())
        if support == 0:
            return None
        return 2.0 * plus / support - 1.0


def sample_oracle(samples: SampleSet) -> InfluenceOracle:
    """Fastest exact-arithmetic oracle for a sample set.

    Small variable counts use a histogram table (every subset answered in
    O(1)); larger ones fall back to packed columns.
    """
    if samples.n_vars <= ENUMERATION_LIMIT:
        return InfluenceTable(samples.histogram())
    if samples.counts is not None:
        raise CapacityError("compressed sample sets need n_vars within the enumeration bound")
    return BitsetOracle(samples)


def exact_oracle(model: IsingModel | Rbm) -> InfluenceTable:
    """Exact influences among observed nodes, indexed by observed column.

    RBMs are marginalized in closed form, so only the observed layer has to
    fit the enumeration bound.
    """
    if isinstance(model, Rbm):
        return InfluenceTable.from_distribution(observed_marginal(model))
    return InfluenceTable.from_distribution(observed_distribution(model))


def subset_count_log(k: int, n: int) -> float:
    """``k log(e n/k)``, a bound on the log-count of subsets of size at most ``k``.

    The expression is only a bound for ``k <= n`` (it turns negative beyond
    ``e n``), so ``k`` is capped at ``n``, where it equals ``n >= log 2^n``.
    """
    k = min(k, n)
    return k * math.log(math.e * n / k) if k > 0 else 0.0


def influence_sample_bound(epsilon: float, k: int, delta: float, n: int) -> int:
    """``ceil(2^(2k+1) / eps^2 * (log n + k log(e n / k)) * log(4 / delta))``.

    Enough samples that every influence with ``|S| <= k`` is within
    ``epsilon`` with probability ``1 - delta``. The ``k log(e n / k)`` term
    uses ``min(k, n)`` (see :func:`subset_count_log`).
    """
    if epsilon <= 0 or delta <= 0:
        raise ParameterError("epsilon and delta must be positive")
    if n < 1 or k < 0:
        raise ParameterError("need n >= 1 and k >= 0")
    combo = subset_count_log(k, n)
    return math.ceil(2.0 ** (2 * k + 1) / epsilon**2 * (math.log(n) + combo) * math.log(4.0 / delta))


def required_samples(config: LearnerConfig, n: int) -> int:
    """:func:`influence_sample_bound` at the config's ``epsilon``, ``k`` and ``delta``."""
    return influence_sample_bound(config.epsilon, config.k, config.delta, n)


@dataclass(frozen=True)
class SubmodularityReport:
    target: int
    max_monotonicity_violation: float
    max_diminishing_returns_violation: float
    max_good_element_violation: float
    checked_pairs: int

    def passed(self, tol: float = 1e-9) -> bool:
        return (
            self.max_monotonicity_violation <= tol
            and self.max_diminishing_returns_violation <= tol
            and self.max_good_element_violation <= tol
        )


def _submask_min(values: np.ndarray, n: int) -> np.ndarray:
    """``out[T] = min_{S ⊆ T} values[S]``."""
    out = values.copy()
    for b in range(n):
        v = out.reshape(-1, 2, 1 << b)
        np.minimum(v[:, 1, :], v[:, 0, :], out=v[:, 1, :])
    return out


def check_influence_table(table: InfluenceTable, i: int) -> SubmodularityReport:
    """Exhaustive monotonicity, diminishing-returns and good-element checks for target ``i``.

    Diminishing returns is checked over all ``S ⊆ T`` and ``j ∉ T ∪ {i}``
    with one submask-minimum pass per ``j``. The good-element property asks,
    for every ``S ⊆ T`` with ``I(T) > I(S)``, for some ``j ∈ T \\ S`` whose
    marginal gain is at least the average gain ``(I(T) - I(S)) / |T \\ S|``.
    """
    n = table.n_vars
    infl = table.influence_array(i)
    masks = np.arange(1 << n, dtype=np.int64)
    free = ((masks >> i) & 1) == 0
    mono = 0.0
    dr = 0.0
    pairs = 0
    for j in range(n):
        if j == i:
            continue
        ok = free & (((masks >> j) & 1) == 0)
        gain = np.full(1 << n, np.inf)
        gain[ok] = infl[masks[ok] | (1 << j)] - infl[ok]
        mono = max(mono, float(np.max(-gain[ok])))
        best = _submask_min(gain, n)
        dr = max(dr, float(np.max(gain[ok] - best[ok])))
        pairs += int(ok.sum())
    good = 0.0
    others = [j for j in range(n) if j != i]
    cand = [int(m) for m in masks if free[m]]
    for T in cand:
        S = T
        while True:
            diff = T & ~S
            if diff and infl[T] > infl[S]:
                size = bin(diff).count("1")
                need = (infl[T] - infl[S]) / size
                best_gain = max(infl[S | (1 << j)] - infl[S] for j in others if diff >> j & 1)
                good = max(good, float(need - best_gain))
            if S == 0:
                break
            S = (S - 1) & T
    return SubmodularityReport(i, mono, dr, good, pairs)


def certify_submodularity(model: IsingModel, i: int, require_ferromagnetic: bool = True) -> SubmodularityReport:
    """Exhaustively check submodularity of ``S -> I_i(S)`` on exact influences.

    ``i`` is an observed column index. Non-ferromagnetic models are refused
    unless ``require_ferromagnetic`` is false, since the property may fail.
    """
    if require_ferromagnetic and not model.is_ferromagnetic():
        raise AssumptionError("submodularity is only guaranteed for ferromagnetic models")
    table = exact_oracle(model)
    if not 0 <= i < table.n_vars:
        raise ParameterError(f"observed column {i} out of range")
    return check_influence_table(table, i)


def influence_gap(oracle: InfluenceOracle, i: int, j: int, S: Iterable[int]) -> float | None:
    """``I_i(S ∪ {j}) - I_i(S)``; ``None`` when either side is undefined."""
    S = as_subset(S)
    a = oracle.influence_of(i, S)
    b = oracle.influence_of(i, as_subset((*S, j)))
    if a is None or b is None:
        return None
    return b - a


__all__ = [
    "BitsetOracle",
    "InfluenceEstimate",
    "InfluenceOracle",
    "SubmodularityReport",
    "certify_submodularity",
    "check_influence_table",
    "empirical_influence",
    "exact_oracle",
    "influence_gap",
    "influence_sample_bound",
    "subset_count_log",
    "required_samples",
    "sample_oracle",
]
