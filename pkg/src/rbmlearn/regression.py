"""Potential recovery by neighbourhood-restricted GLM regression.

Given a blanket ``N`` for node ``i`` the conditional mean is
``E[X_i | X_rest] = tanh(q_i(X_N))`` where ``q_i`` is the discrete partial
of the potential in direction ``i``. ``q_i`` is a multilinear polynomial in
``X_N``, so it is fitted by GLMTron over the ``2^|N|`` parity features
``chi_T(X_N)``, ``T ⊆ N``. Fitted partials are then stitched into one
potential.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np
from scipy.special import expit

from .errors import InsufficientDataError, ParameterError
from .exact import ExactDistribution
from .model import MrfPotential, Subset, all_subsets, as_subset
from .sampler import SampleSet, config_index, make_rng, split_counts

TieRule = Literal["min-index", "average"]
MIN_SPLIT_ROWS = 10


def discrete_partial(p: MrfPotential, i: int) -> MrfPotential:
    """``sum_{S ∋ i} c_S chi_{S \\ {i}}``; the coefficient of ``{i}`` becomes the offset."""
    if not 0 <= i < p.n_vars:
        raise ParameterError(f"variable {i} out of range")
    terms = {}
    offset = 0.0
    for S, c in p.terms.items():
        if i in S:
            rest = tuple(s for s in S if s != i)
            if rest:
                terms[rest] = c
            else:
                offset = c
    return MrfPotential(p.n_vars, terms, offset)


def _parity_design(local_index: np.ndarray, features: Sequence[Subset], positions: Mapping[int, int]) -> np.ndarray:
    """``chi_T`` for each feature ``T`` on rows given by local bitmask index."""
    idx = np.asarray(local_index, dtype=np.uint64)
    cols = []
    for T in features:
        mask = np.uint64(sum(1 << positions[s] for s in T))
        # chi_T is -1 exactly when an odd number of its coordinates are -1
        minus = (len(T) - np.bitwise_count(idx & mask).astype(np.int64)) & 1
        cols.append(np.where(minus == 1, -1.0, 1.0))
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class RegressionProblem:
    """Weighted GLM problem: predict ``X_target`` from parities over ``neighborhood``.

    Rows are the distinct configurations of ``neighborhood + (target,)`` and
    ``weights`` their multiplicities (or probabilities for population data).
    """

    target: int
    neighborhood: Subset
    features: tuple[Subset, ...]
    design: np.ndarray
    labels: np.ndarray
    weights: np.ndarray
    n_vars: int

    @classmethod
    def _build(cls, n: int, i: int, nbhd: Iterable[int], index: np.ndarray, weights: np.ndarray):
        nbhd = as_subset(nbhd)
        if i in nbhd or not 0 <= i < n or any(not 0 <= s < n for s in nbhd):
            raise ParameterError("neighborhood must be valid variables excluding the target")
        order = (*nbhd, i)
        local = np.zeros(index.size, dtype=np.int64)
        for pos, v in enumerate(order):
            local |= ((index >> v) & 1) << pos
        w = np.bincount(local, weights=weights, minlength=1 << len(order))
        keep = np.flatnonzero(w > 0)
        positions = {v: p for p, v in enumerate(nbhd)}
        features = tuple(all_subsets(nbhd))
        design = _parity_design(keep, features, positions)
        labels = np.where((keep >> len(nbhd)) & 1, 1.0, -1.0)
        return cls(i, nbhd, features, design, labels, w[keep], n)

    @classmethod
    def from_samples(cls, samples: SampleSet, i: int, nbhd: Iterable[int]) -> RegressionProblem:
        return cls._build(samples.n_vars, i, nbhd, config_index(samples.rows), samples.weights.astype(float))

    @classmethod
    def from_distribution(cls, dist: ExactDistribution, i: int, nbhd: Iterable[int]) -> RegressionProblem:
        idx = np.arange(1 << dist.n_vars, dtype=np.int64)
        return cls._build(dist.n_vars, i, nbhd, idx, dist.probabilities())


@dataclass(frozen=True)
class FittedLocalPotential:
    node: int
    coefficients: Mapping[Subset, float]
    holdout_risk: float
    iterations: int = 0
    n_vars: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    def as_partial(self) -> MrfPotential:
        """The fitted conditional log-odds polynomial (intercept as offset)."""
        terms = {T: c for T, c in self.coefficients.items() if T}
        return MrfPotential(self.n_vars, terms, self.coefficients.get((), 0.0))


def _risk(w: np.ndarray, X: np.ndarray, y: np.ndarray, weights: np.ndarray) -> float:
    r = y - np.tanh(X @ w)
    return float(weights @ (r * r) / weights.sum())


def _project(w: np.ndarray, radius: float) -> np.ndarray:
    norm = float(np.linalg.norm(w))
    return w * (radius / norm) if norm > radius else w


def _glmtron_steps(X, y, wt, radius_scaled, w0=None):
    """Yield successive GLMTron iterates on scaled features."""
    w = np.zeros(X.shape[1]) if w0 is None else w0
    total = wt.sum()
    while True:
        grad = ((wt * (y - np.tanh(X @ w))) @ X) / total
        w = _project(w + grad, radius_scaled)
        yield w, grad


def glmtron_fit(
    problem: RegressionProblem,
    radius: float,
    holdout_fraction: float = 0.2,
    max_iters: int = 500,
    seed: int = 0,
    patience: int = 25,
) -> FittedLocalPotential:
    """GLMTron with hold-out selection of the iterate.

    Features are divided by ``sqrt(#features)`` so every row has unit norm,
    the update ``w += mean((y - tanh(w.x)) x)`` is taken with step 1, and the
    iterate is projected so the coefficient vector in the original parity
    basis has Euclidean norm at most ``radius``. Draws are assigned to the
    hold-out part independently with probability ``holdout_fraction``. The
    returned iterate minimizes hold-out squared error; the loop stops after
    ``max_iters`` updates or ``patience`` updates without improvement.
    """
    if radius <= 0:
        raise ParameterError("radius must be positive")
    if not 0 < holdout_fraction < 1:
        raise ParameterError("holdout_fraction must lie in (0, 1)")
    rng = make_rng(seed, problem.target)
    counts = np.rint(problem.weights).astype(np.int64)
    if not np.allclose(counts, problem.weights):
        raise ParameterError("sample-based fitting needs integer row multiplicities")
    train, hold = split_counts(counts, holdout_fraction, rng)
    if train.sum() < MIN_SPLIT_ROWS or hold.sum() < MIN_SPLIT_ROWS:
        raise InsufficientDataError(
            f"need at least {MIN_SPLIT_ROWS} rows in each split, got {int(train.sum())} and {int(hold.sum())}"
        )
    scale = math.sqrt(len(problem.features))
    X = problem.design / scale
    y = problem.labels
    tw, hw = train.astype(float), hold.astype(float)
    best_w = np.zeros(X.shape[1])
    best_risk = _risk(best_w, X, y, hw)
    stale, it = 0, 0
    for it, (w, _) in enumerate(_glmtron_steps(X, y, tw, radius * scale), 1):
        r = _risk(w, X, y, hw)
        if r < best_risk:
            best_w, best_risk, stale = w.copy(), r, 0
        else:
            stale += 1
        if it >= max_iters or stale >= patience:
            break
    coef = best_w / scale
    return FittedLocalPotential(
        problem.target, dict(zip(problem.features, map(float, coef))), best_risk, it, problem.n_vars
    )


def glmtron_population(
    problem: RegressionProblem, radius: float, tol: float = 1e-13, max_iters: int = 200_000
) -> FittedLocalPotential:
    """GLMTron on exact probability-weighted rows, iterated until the step is below ``tol``.

    With population weights the true partial is a fixed point of the update,
    so this recovers it up to the convergence tolerance.
    """
    if radius <= 0:
        raise ParameterError("radius must be positive")
    scale = math.sqrt(len(problem.features))
    X = problem.design / scale
    w = np.zeros(X.shape[1])
    it = 0
    for it, (w, grad) in enumerate(_glmtron_steps(X, problem.labels, problem.weights, radius * scale), 1):
        if np.linalg.norm(grad) < tol or it >= max_iters:
            break
    risk = _risk(w, X, problem.labels, problem.weights)
    coef = w / scale
    return FittedLocalPotential(problem.target, dict(zip(problem.features, map(float, coef))), risk, it, problem.n_vars)


def assemble_potential(
    locals_: Sequence[FittedLocalPotential], tie_rule: TieRule = "min-index", n_vars: int | None = None
) -> MrfPotential:
    """Stitch per-node partials into one potential.

    A monomial ``S`` with ``|S| >= 2`` appears in the partial of every
    ``i ∈ S``; ``"min-index"`` reads it from ``i = min(S)`` and ``"average"``
    averages over all ``i ∈ S`` (a member whose blanket misses ``S`` counts
    as 0). Degree-1 terms come from each node's own intercept.
    """
    if tie_rule not in ("min-index", "average"):
        raise ParameterError(f"unknown tie rule {tie_rule!r}")
    by_node = {f.node: f for f in locals_}
    n = n_vars if n_vars is not None else max((f.n_vars for f in locals_), default=0)
    if n < 1:
        raise ParameterError("cannot infer the number of variables")
    if set(by_node) != set(range(n)):
        raise ParameterError("local fits must cover every variable exactly once")
    monomials: set[Subset] = set()
    for f in locals_:
        for T in f.coefficients:
            monomials.add(as_subset((*T, f.node)))
    terms = {}
    for S in monomials:
        if len(S) == 1:
            terms[S] = by_node[S[0]].coefficients.get((), 0.0)
        elif tie_rule == "min-index":
            terms[S] = by_node[S[0]].coefficients.get(S[1:], 0.0)
        else:
            vals = [by_node[i].coefficients.get(tuple(s for s in S if s != i), 0.0) for i in S]
            terms[S] = float(np.mean(vals))
    return MrfPotential(n, terms)


def learn_potential(
    samples: SampleSet,
    blankets: Mapping[int, Iterable[int]],
    beta: float,
    holdout_fraction: float = 0.2,
    max_iters: int = 500,
    seed: int = 0,
    patience: int = 25,
    tie_rule: TieRule = "min-index",
) -> MrfPotential:
    """Fit every node's partial on its blanket and assemble the potential."""
    fits = [
        glmtron_fit(
            RegressionProblem.from_samples(samples, i, blankets.get(i, ())),
            beta,
            holdout_fraction,
            max_iters,
            seed,
            patience,
        )
        for i in range(samples.n_vars)
    ]
    return assemble_potential(fits, tie_rule, samples.n_vars)


def learn_potential_population(
    dist: ExactDistribution, blankets: Mapping[int, Iterable[int]], beta: float, tol: float = 1e-13
) -> MrfPotential:
    fits = [
        glmtron_population(RegressionProblem.from_distribution(dist, i, blankets.get(i, ())), beta, tol)
        for i in range(dist.n_vars)
    ]
    return assemble_potential(fits, "min-index", dist.n_vars)


def config_prob_ratio(beta: float, d2: int) -> float:
    """``2^d2 * sigmoid(-2 beta)^d2``: lower bound on blanket-configuration mass relative to uniform."""
    return (2.0 * float(expit(-2.0 * beta))) ** d2


def risk_to_parameter_bound(risk: float, delta: float) -> float:
    """Upper bound ``risk / delta`` on the squared coefficient distance.

    If every configuration has probability at least ``delta`` times its
    uniform mass, the squared L2 distance of two functions under the
    uniform measure (their squared coefficient distance, by Parseval) is at
    most their mean squared difference under the data law divided by ``delta``.
    """
    if not 0 < delta <= 1:
        raise ParameterError("delta must lie in (0, 1]")
    if risk < 0:
        raise ParameterError("risk must be nonnegative")
    return risk / delta
