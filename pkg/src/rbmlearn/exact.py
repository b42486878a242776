"""Brute-force enumeration oracle.

Configurations are indexed by bitmask: bit ``i`` of the index is set iff
``x_i = +1``. All mass arithmetic is carried out in log space.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.special import logsumexp

from .errors import CapacityError, ParameterError, ZeroMassError
from .model import IsingModel, MrfPotential, as_subset, subset_mask

ENUMERATION_LIMIT = 22


def check_capacity(n: int, limit: int = ENUMERATION_LIMIT) -> None:
    if n > limit:
        raise CapacityError(f"{n} variables exceed the enumeration bound of {limit}")


def spin_column(n: int, i: int) -> np.ndarray:
    """``x_i`` over all ``2**n`` configurations as int8 ±1."""
    idx = np.arange(1 << n, dtype=np.int64)
    return (((idx >> i) & 1) * 2 - 1).astype(np.int8)


def config_matrix(n: int) -> np.ndarray:
    """All configurations as a ``(2**n, n)`` int8 matrix of ±1."""
    check_capacity(n)
    idx = np.arange(1 << n, dtype=np.int64)[:, None]
    return (((idx >> np.arange(n)) & 1) * 2 - 1).astype(np.int8)


@dataclass(frozen=True)
class ExactDistribution:
    n_vars: int
    log_weights: np.ndarray
    log_z: float

    @classmethod
    def from_log_weights(cls, log_weights) -> ExactDistribution:
        lw = np.asarray(log_weights, dtype=float)
        n = int(round(np.log2(lw.size)))
        if lw.size != 1 << n or n < 1:
            raise ParameterError("log_weights length must be a power of two >= 2")
        lw = lw.copy()
        lw.setflags(write=False)
        return cls(n, lw, float(logsumexp(lw)))

    def log_probabilities(self) -> np.ndarray:
        return self.log_weights - self.log_z

    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_weights - self.log_z)

    def mean(self) -> np.ndarray:
        p = self.probabilities()
        return np.array([p @ spin_column(self.n_vars, i) for i in range(self.n_vars)])

    def correlation(self, i: int, j: int) -> float:
        p = self.probabilities()
        return float(p @ (spin_column(self.n_vars, i) * spin_column(self.n_vars, j)))


def _energy_table(n: int, interactions: Mapping[tuple[int, int], float], fields) -> np.ndarray:
    check_capacity(n)
    spins = [spin_column(n, i) for i in range(n)]
    lw = np.zeros(1 << n)
    for i in range(n):
        if fields[i] != 0:
            lw += fields[i] * spins[i]
    for (i, j), w in interactions.items():
        lw += w * (spins[i] * spins[j])
    return lw


def enumerate_model(model: IsingModel) -> ExactDistribution:
    """Exact joint law of all nodes (hidden included)."""
    return ExactDistribution.from_log_weights(_energy_table(model.n_nodes, model.interactions, model.fields))


def distribution_from_potential(potential: MrfPotential) -> ExactDistribution:
    check_capacity(potential.n_vars)
    return ExactDistribution.from_log_weights(potential.table())


def marginal(dist: ExactDistribution, keep: Iterable[int]) -> ExactDistribution:
    """Law of the variables in ``keep``; they are renumbered in increasing order."""
    keep = as_subset(keep)
    n = dist.n_vars
    if not keep:
        raise ParameterError("keep must be nonempty")
    if keep[0] < 0 or keep[-1] >= n:
        raise ParameterError(f"keep {keep} out of range for n={n}")
    if len(keep) == n:
        return dist
    # C-order reshape puts variable n-1 on axis 0.
    drop = tuple(n - 1 - v for v in range(n) if v not in keep)
    lw = logsumexp(dist.log_weights.reshape([2] * n), axis=drop).reshape(-1)
    return ExactDistribution.from_log_weights(lw)


def observed_distribution(model: IsingModel) -> ExactDistribution:
    return marginal(enumerate_model(model), model.observed)


def tv_distance(p: ExactDistribution, q: ExactDistribution) -> float:
    if p.n_vars != q.n_vars:
        raise ParameterError("distributions over different variable counts")
    return 0.5 * float(np.abs(p.probabilities() - q.probabilities()).sum())


def log_mass_of(dist: ExactDistribution, assignment: Mapping[int, int]) -> float:
    """``log P(X_v = s_v for v in assignment)``."""
    idx = np.arange(1 << dist.n_vars, dtype=np.int64)
    sel = np.ones(idx.size, dtype=bool)
    for v, s in assignment.items():
        if s not in (-1, 1):
            raise ParameterError("assignment values must be ±1")
        sel &= ((idx >> v) & 1) == (1 if s == 1 else 0)
    if not sel.any():
        return -np.inf
    return float(logsumexp(dist.log_weights[sel]) - dist.log_z)


def conditional_mean(dist: ExactDistribution, i: int, assignment: Mapping[int, int]) -> float:
    """``E[X_i | X_v = s_v for v in assignment]``."""
    if i in assignment:
        return float(assignment[i])
    lp_cond = log_mass_of(dist, assignment)
    if lp_cond == -np.inf:
        raise ZeroMassError(f"conditioning event {dict(assignment)} has zero mass")
    lp_plus = log_mass_of(dist, {**assignment, i: 1})
    return float(2.0 * np.exp(lp_plus - lp_cond) - 1.0)


def exact_influence(model: IsingModel, i: int, S: Iterable[int]) -> float:
    """``E[X_i | X_S = +1]`` in node indices of ``model``."""
    S = as_subset(S)
    if i in S:
        raise ParameterError("target node must not be in the conditioning set")
    if model.hidden_mask[i] or any(model.hidden_mask[s] for s in S):
        raise ParameterError("influence is defined on observed nodes only")
    return conditional_mean(enumerate_model(model), i, {s: 1 for s in S})


def magnetizations(model: IsingModel, h=None) -> np.ndarray:
    """``E[X]`` for every node, optionally under replacement fields ``h``."""
    if h is not None:
        model = model.with_fields(h)
    return enumerate_model(model).mean()


def smooth_influence(model: IsingModel, i: int, h_override) -> float:
    return float(magnetizations(model, h_override)[i])


def log_partition(model: IsingModel, h=None) -> float:
    if h is not None:
        model = model.with_fields(h)
    return enumerate_model(model).log_z


def covariance_matrix(model: IsingModel, h=None) -> np.ndarray:
    if h is not None:
        model = model.with_fields(h)
    X = config_matrix(model.n_nodes).astype(float)
    p = enumerate_model(model).probabilities()
    mu = p @ X
    return (X * p[:, None]).T @ X - np.outer(mu, mu)


def superset_sums(mass: np.ndarray) -> np.ndarray:
    """``out[S] = sum_{T ⊇ S} mass[T]`` over bitmask-indexed arrays."""
    out = np.array(mass, dtype=float, copy=True)
    n = int(round(np.log2(out.size)))
    for b in range(n):
        v = out.reshape(-1, 2, 1 << b)
        v[:, 0, :] += v[:, 1, :]
    return out


class InfluenceTable:
    """All conditional means ``E[X_i | X_S = +1]`` from a nonnegative mass table.

    ``mass`` may hold probabilities (exact oracle) or sample counts
    (empirical estimator); ``support(S)`` is the total mass of ``{X_S = +1}``.
    """

    def __init__(self, mass: np.ndarray):
        self.n_vars = int(round(np.log2(np.asarray(mass).size)))
        self.upper = superset_sums(mass)

    @classmethod
    def from_distribution(cls, dist: ExactDistribution) -> InfluenceTable:
        return cls(dist.probabilities())

    def support(self, mask: int) -> float:
        return float(self.upper[mask])

    def influence(self, i: int, mask: int) -> float | None:
        if mask >> i & 1:
            raise ParameterError("target variable inside the conditioning set")
        denom = self.upper[mask]
        if denom <= 0:
            return None
        return float(2.0 * self.upper[mask | (1 << i)] / denom - 1.0)

    def influence_of(self, i: int, S: Iterable[int]) -> float | None:
        return self.influence(i, subset_mask(S))

    def influence_array(self, i: int) -> np.ndarray:
        """Influence for every mask (NaN where ``i`` is in the mask or support is empty)."""
        masks = np.arange(self.upper.size, dtype=np.int64)
        out = np.full(self.upper.size, np.nan)
        ok = (((masks >> i) & 1) == 0) & (self.upper > 0)
        out[ok] = 2.0 * self.upper[masks[ok] | (1 << i)] / self.upper[ok] - 1.0
        return out


def walsh_hadamard(values: np.ndarray) -> np.ndarray:
    """Unnormalised transform ``out[S] = sum_b values[b] (-1)^{|S & b|}``."""
    out = np.array(values, dtype=float, copy=True)
    n = int(round(np.log2(out.size)))
    if out.size != 1 << n:
        raise ParameterError("length must be a power of two")
    for b in range(n):
        v = out.reshape(-1, 2, 1 << b)
        a, c = v[:, 0, :].copy(), v[:, 1, :]
        v[:, 0, :] = a + c
        v[:, 1, :] = a - c
    return out


def _popcount_parity(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.uint64)
    return (np.bitwise_count(idx) & 1).astype(bool)


def fourier_coefficients(values: np.ndarray) -> np.ndarray:
    """Coefficients ``c[S]`` with ``values[x] = sum_S c[S] chi_S(x)`` (bit set ⇔ +1)."""
    values = np.asarray(values, dtype=float)
    n = int(round(np.log2(values.size)))
    coef = walsh_hadamard(values) / values.size
    # chi_S(x) = (-1)^{|S|} (-1)^{|S & b|} under the bit-set-is-plus convention
    coef[_popcount_parity(n)] *= -1.0
    return coef


def coefficients_to_potential(coef: np.ndarray, tol: float = 0.0, variables=None) -> MrfPotential:
    """Build a potential from a dense coefficient array, dropping the constant.

    ``variables`` relabels local bit ``b`` as ``variables[b]``; the potential is
    then over ``max(variables) + 1`` variables unless ``n_vars`` is implied.
    """
    n = int(round(np.log2(coef.size)))
    labels = list(range(n)) if variables is None else list(variables)
    terms = {}
    for mask in np.flatnonzero(np.abs(coef) > tol):
        mask = int(mask)
        if mask == 0:
            continue
        terms[tuple(labels[b] for b in range(n) if mask >> b & 1)] = float(coef[mask])
    return MrfPotential(n if variables is None else max(labels) + 1, terms)


def fourier_of_log(dist: ExactDistribution, tol: float = 1e-12) -> MrfPotential:
    """Potential whose Gibbs law is ``dist``; constant dropped, ``|c| <= tol`` pruned."""
    if not np.all(np.isfinite(dist.log_weights)):
        raise ZeroMassError("a configuration has zero mass; log-potential undefined")
    return coefficients_to_potential(fourier_coefficients(dist.log_weights), tol)
