"""Domain types: Ising models with latent nodes, RBMs and MRF potentials.

Indices are 0-based throughout the Python API. The text file formats in
:mod:`rbmlearn.io` are 1-based.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ParameterError

Subset = tuple[int, ...]


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def as_subset(S: Iterable[int]) -> Subset:
    """Canonical form of a variable subset: sorted tuple of distinct ints."""
    out = tuple(sorted({int(s) for s in S}))
    return out


def subset_mask(S: Iterable[int]) -> int:
    m = 0
    for s in S:
        m |= 1 << int(s)
    return m


def mask_subset(mask: int) -> Subset:
    out = []
    b = 0
    while mask:
        if mask & 1:
            out.append(b)
        mask >>= 1
        b += 1
    return tuple(out)


@dataclass(frozen=True)
class IsingModel:
    """Pairwise binary model ``P(x) ∝ exp(sum_{i<j} J_ij x_i x_j + sum_i h_i x_i)``.

    ``interactions`` maps ``(i, j)`` with ``i < j`` to a nonzero weight; use
    :meth:`weight` for symmetric lookup. ``hidden_mask[i]`` marks latent nodes.
    """

    n_nodes: int
    interactions: Mapping[tuple[int, int], float] = field(default_factory=dict)
    fields: np.ndarray | None = None
    hidden_mask: np.ndarray | None = None

    def __post_init__(self):
        n = int(self.n_nodes)
        if n < 1:
            raise ParameterError(f"n_nodes must be positive, got {n}")
        clean: dict[tuple[int, int], float] = {}
        for (i, j), w in self.interactions.items():
            i, j = int(i), int(j)
            if i == j:
                raise ParameterError(f"self-interaction on node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ParameterError(f"edge ({i}, {j}) out of range for n={n}")
            key = (min(i, j), max(i, j))
            w = float(w)
            if key in clean and clean[key] != w:
                raise ParameterError(f"conflicting weights for edge {key}")
            if not math.isfinite(w):
                raise ParameterError(f"non-finite weight on edge {key}")
            if w != 0.0:
                clean[key] = w
        h = np.zeros(n) if self.fields is None else np.asarray(self.fields, dtype=float)
        hm = np.zeros(n, dtype=bool) if self.hidden_mask is None else np.asarray(self.hidden_mask, dtype=bool)
        if h.shape != (n,):
            raise ParameterError(f"fields must have length {n}")
        if hm.shape != (n,):
            raise ParameterError(f"hidden_mask must have length {n}")
        if not np.all(np.isfinite(h)):
            raise ParameterError("non-finite external field")
        object.__setattr__(self, "n_nodes", n)
        object.__setattr__(self, "interactions", dict(sorted(clean.items())))
        object.__setattr__(self, "fields", _frozen_array(h, float))
        object.__setattr__(self, "hidden_mask", _frozen_array(hm, bool))

    @classmethod
    def from_matrix(cls, J, h=None, hidden_mask=None) -> IsingModel:
        J = np.asarray(J, dtype=float)
        n = J.shape[0]
        if J.shape != (n, n) or not np.allclose(J, J.T, atol=0.0):
            raise ParameterError("interaction matrix must be square and symmetric")
        if np.any(np.diag(J) != 0):
            raise ParameterError("interaction matrix must have zero diagonal")
        iu, ju = np.nonzero(np.triu(J, 1))
        inter = {(int(a), int(b)): float(J[a, b]) for a, b in zip(iu, ju)}
        return cls(n, inter, h, hidden_mask)

    def weight(self, i: int, j: int) -> float:
        return self.interactions.get((min(i, j), max(i, j)), 0.0)

    def coupling_matrix(self) -> np.ndarray:
        J = np.zeros((self.n_nodes, self.n_nodes))
        for (i, j), w in self.interactions.items():
            J[i, j] = J[j, i] = w
        return J

    def neighbors(self, i: int) -> list[int]:
        out = []
        for (a, b) in self.interactions:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    @property
    def observed(self) -> np.ndarray:
        return np.flatnonzero(~self.hidden_mask)

    @property
    def hidden(self) -> np.ndarray:
        return np.flatnonzero(self.hidden_mask)

    @property
    def n_observed(self) -> int:
        return int((~self.hidden_mask).sum())

    def is_ferromagnetic(self) -> bool:
        return all(w >= 0 for w in self.interactions.values()) and bool(np.all(self.fields >= 0))

    def node_mass(self) -> np.ndarray:
        """Per-node ``sum_j |J_ij| + |h_i|``."""
        mass = np.abs(self.fields).astype(float)
        for (i, j), w in self.interactions.items():
            mass[i] += abs(w)
            mass[j] += abs(w)
        return mass

    def with_fields(self, h) -> IsingModel:
        return IsingModel(self.n_nodes, self.interactions, h, self.hidden_mask)


@dataclass(frozen=True)
class Rbm:
    """Bipartite model with ``weights[i, j]`` between observed ``i`` and hidden ``j``."""

    weights: np.ndarray
    fields_observed: np.ndarray | None = None
    fields_hidden: np.ndarray | None = None

    def __post_init__(self):
        W = np.asarray(self.weights, dtype=float)
        if W.ndim != 2 or W.shape[0] < 1:
            raise ParameterError("weights must be an n_observed x n_hidden matrix")
        n, m = W.shape
        h1 = np.zeros(n) if self.fields_observed is None else np.asarray(self.fields_observed, float)
        h2 = np.zeros(m) if self.fields_hidden is None else np.asarray(self.fields_hidden, float)
        if h1.shape != (n,) or h2.shape != (m,):
            raise ParameterError("field vectors do not match the weight matrix shape")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(h1)) and np.all(np.isfinite(h2))):
            raise ParameterError("non-finite RBM parameter")
        object.__setattr__(self, "weights", _frozen_array(W, float))
        object.__setattr__(self, "fields_observed", _frozen_array(h1, float))
        object.__setattr__(self, "fields_hidden", _frozen_array(h2, float))

    @property
    def n_observed(self) -> int:
        return self.weights.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.weights.shape[1]

    def hidden_support(self, j: int) -> Subset:
        return tuple(int(i) for i in np.flatnonzero(self.weights[:, j]))

    def hidden_degrees(self) -> np.ndarray:
        return (self.weights != 0).sum(axis=0)

    def is_ferromagnetic(self) -> bool:
        return bool(
            np.all(self.weights >= 0) and np.all(self.fields_observed >= 0) and np.all(self.fields_hidden >= 0)
        )


@dataclass(frozen=True)
class MrfPotential:
    """Multilinear polynomial over ±1 variables, ``sum_S c_S prod_{s in S} x_s``.

    The empty set is never a key; MRF potentials carry ``offset == 0``. A
    nonzero ``offset`` only appears on local conditional potentials produced
    by :func:`rbmlearn.regression.discrete_partial`, where the constant is the
    node's own field.
    """

    n_vars: int
    terms: Mapping[Subset, float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        n = int(self.n_vars)
        if n < 1:
            raise ParameterError(f"n_vars must be positive, got {n}")
        clean: dict[Subset, float] = {}
        for S, c in self.terms.items():
            key = as_subset(S)
            if len(key) != len(tuple(S)):
                raise ParameterError(f"repeated variable in term {S}")
            if not key:
                raise ParameterError("empty term: use offset for constants")
            if key[0] < 0 or key[-1] >= n:
                raise ParameterError(f"term {key} out of range for n={n}")
            c = float(c)
            if not math.isfinite(c):
                raise ParameterError(f"non-finite coefficient on {key}")
            if c != 0.0:
                clean[key] = clean.get(key, 0.0) + c
        ordered = dict(sorted(clean.items(), key=lambda kv: (len(kv[0]), kv[0])))
        object.__setattr__(self, "n_vars", n)
        object.__setattr__(self, "terms", ordered)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def order(self) -> int:
        return max((len(S) for S in self.terms), default=0)

    def coefficient(self, S: Iterable[int]) -> float:
        S = as_subset(S)
        if not S:
            return self.offset
        return self.terms.get(S, 0.0)

    def evaluate(self, x) -> np.ndarray | float:
        """Evaluate at ±1 configuration(s); ``x`` has shape ``(n,)`` or ``(M, n)``."""
        x = np.asarray(x)
        single = x.ndim == 1
        X = np.atleast_2d(x).astype(float)
        if X.shape[1] != self.n_vars:
            raise ParameterError(f"expected {self.n_vars} coordinates, got {X.shape[1]}")
        out = np.full(X.shape[0], self.offset)
        for S, c in self.terms.items():
            out += c * np.prod(X[:, list(S)], axis=1)
        return float(out[0]) if single else out

    def table(self) -> np.ndarray:
        """Values on all ``2**n`` configurations, index bit ``i`` set iff ``x_i = +1``."""
        n = self.n_vars
        idx = np.arange(1 << n, dtype=np.int64)
        out = np.full(1 << n, self.offset)
        for S, c in self.terms.items():
            par = np.zeros(1 << n, dtype=np.int64)
            for s in S:
                par ^= (idx >> s) & 1
            # chi_S = prod (2b-1) = (-1)^{|S| - popcount}
            sign = np.where((par ^ (len(S) & 1)) == 1, -1.0, 1.0)
            out += c * sign
        return out

    def neighborhood(self, i: int) -> Subset:
        nb: set[int] = set()
        for S in self.terms:
            if i in S and len(S) > 1:
                nb.update(S)
        nb.discard(i)
        return tuple(sorted(nb))

    def neighborhoods(self) -> dict[int, Subset]:
        return {i: self.neighborhood(i) for i in range(self.n_vars)}

    def prune(self, tol: float) -> MrfPotential:
        return MrfPotential(self.n_vars, {S: c for S, c in self.terms.items() if abs(c) > tol}, self.offset)

    def __add__(self, other: MrfPotential) -> MrfPotential:
        if other.n_vars != self.n_vars:
            raise ParameterError("potentials over different variable counts")
        terms = dict(self.terms)
        for S, c in other.terms.items():
            terms[S] = terms.get(S, 0.0) + c
        return MrfPotential(self.n_vars, terms, self.offset + other.offset)

    def __neg__(self) -> MrfPotential:
        return MrfPotential(self.n_vars, {S: -c for S, c in self.terms.items()}, -self.offset)

    def __sub__(self, other: MrfPotential) -> MrfPotential:
        return self + (-other)

    def max_abs_diff(self, other: MrfPotential) -> float:
        """Sup-norm distance between coefficient vectors (offsets included)."""
        diff = self - other
        vals = [abs(c) for c in diff.terms.values()] + [abs(diff.offset)]
        return max(vals)


@dataclass(frozen=True)
class NondegeneracyParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ParameterError("alpha and beta must be positive")
        if self.alpha > self.beta:
            raise ParameterError(f"alpha={self.alpha} exceeds beta={self.beta}")


@dataclass(frozen=True)
class ValidationReport:
    weak_edges: tuple[tuple[int, int, float], ...]
    heavy_nodes: tuple[tuple[int, float], ...]

    @property
    def passed(self) -> bool:
        return not self.weak_edges and not self.heavy_nodes

    @property
    def violated_clauses(self) -> tuple[int, ...]:
        out = []
        if self.weak_edges:
            out.append(1)
        if self.heavy_nodes:
            out.append(2)
        return tuple(out)

    def describe(self) -> str:
        if self.passed:
            return "nondegenerate"
        parts = [f"edge ({i},{j}) weight {w:g} not above alpha" for i, j, w in self.weak_edges]
        parts += [f"node {i} mass {m:g} exceeds beta" for i, m in self.heavy_nodes]
        return "; ".join(parts)


@dataclass(frozen=True)
class LearnerConfig:
    """Thresholds and budgets for the structure learners.

    ``ell`` is the latent path length in edges; RBMs use ``ell = 2``.
    """

    alpha: float
    beta: float
    d2: int
    ell: int
    eta: float
    k: int
    M: int
    delta: float
    epsilon: float

    def __post_init__(self):
        if self.eta <= 0:
            raise ParameterError("eta must be positive")
        if self.k < 0 or self.d2 < 0:
            raise ParameterError("k and d2 must be nonnegative")
        if not 0 < self.delta < 1:
            raise ParameterError("delta must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ParameterError("epsilon must be positive")

    def replace(self, **changes) -> LearnerConfig:
        from dataclasses import replace

        return replace(self, **changes)


def as_ising(rbm: Rbm) -> IsingModel:
    """Joint law of an RBM as an Ising model; hidden nodes come last."""
    n, m = rbm.n_observed, rbm.n_hidden
    inter = {}
    for i, j in zip(*np.nonzero(rbm.weights)):
        inter[(int(i), n + int(j))] = float(rbm.weights[i, j])
    h = np.concatenate([rbm.fields_observed, rbm.fields_hidden])
    mask = np.zeros(n + m, dtype=bool)
    mask[n:] = True
    return IsingModel(n + m, inter, h, mask)


def ghost_vertex(model: IsingModel) -> IsingModel:
    """Replace external fields by edges to an extra always-conditioned node.

    The ghost node is appended last; conditioned on it being +1 the original
    nodes follow the original law.
    """
    n = model.n_nodes
    inter = dict(model.interactions)
    for i in range(n):
        if model.fields[i] != 0:
            inter[(i, n)] = float(model.fields[i])
    mask = np.append(model.hidden_mask, False)
    return IsingModel(n + 1, inter, np.zeros(n + 1), mask)


def validate_nondegeneracy(model: IsingModel | Rbm, params: NondegeneracyParams) -> ValidationReport:
    if isinstance(model, Rbm):
        model = as_ising(model)
    weak = tuple((i, j, w) for (i, j), w in model.interactions.items() if not abs(w) > params.alpha)
    mass = model.node_mass()
    heavy = tuple((int(i), float(mass[i])) for i in np.flatnonzero(mass > params.beta))
    return ValidationReport(weak, heavy)


def latent_paths(model: IsingModel) -> dict[int, dict[int, int]]:
    """Graph-theoretic Markov blankets of observed nodes.

    For each observed ``i`` returns ``{j: length}`` over observed ``j`` joined to
    ``i`` by a path whose interior nodes are all latent, with the shortest such
    length in edges. Keys and members are observed-column positions (the
    index of the node within ``model.observed``), matching sample columns.
    """
    col = {int(v): c for c, v in enumerate(model.observed)}
    adj: dict[int, list[int]] = {v: [] for v in range(model.n_nodes)}
    for (a, b) in model.interactions:
        adj[a].append(b)
        adj[b].append(a)
    out: dict[int, dict[int, int]] = {}
    for i in model.observed:
        i = int(i)
        dist = {i: 0}
        found: dict[int, int] = {}
        queue = deque([i])
        while queue:
            v = queue.popleft()
            for u in sorted(adj[v]):
                if u in dist:
                    continue
                dist[u] = dist[v] + 1
                if model.hidden_mask[u]:
                    queue.append(u)
                else:
                    found[u] = dist[u]
        out[col[i]] = dict(sorted((col[u], L) for u, L in found.items()))
    return out


def graph_blankets(model: IsingModel) -> dict[int, Subset]:
    return {i: tuple(d) for i, d in latent_paths(model).items()}


def max_latent_path(model: IsingModel) -> int:
    """Largest blanket path length ``ell`` (edges); 0 when no blanket is nonempty."""
    return max((L for d in latent_paths(model).values() for L in d.values()), default=0)


def all_subsets(items: Iterable[int], max_size: int | None = None) -> list[Subset]:
    """Subsets ordered by size, then lexicographically."""
    items = sorted(items)
    top = len(items) if max_size is None else min(max_size, len(items))
    return [c for r in range(top + 1) for c in itertools.combinations(items, r)]
