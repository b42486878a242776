"""Conversions between RBMs and multilinear MRF potentials.

Marginalizing a hidden unit with weights ``w`` and field ``b`` multiplies the
observed weight by ``2 cosh(w.x + b)``, i.e. adds ``rho(w.x + b)`` to the
potential where ``rho(x) = log(e^x + e^-x)``. :func:`rbm_to_mrf` expands
each such term exactly in the parity basis over the unit's support.

:func:`mrf_to_rbm` goes the other way: every monomial is realized by copies
of a single hidden unit whose expansion has the requested top coefficient
(a *building block*), working from the highest degree down and correcting
the lower-degree side effects at the next level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import CapacityError, InfeasibleError, ParameterError
from .exact import ENUMERATION_LIMIT, ExactDistribution, config_matrix, fourier_coefficients
from .model import MrfPotential, Rbm, Subset, as_subset

BLOCK_ORDER_LIMIT = 20
BISECTION_TOL = 1e-12
ZERO_TOL = 1e-10


def rho(x):
    """Soft absolute value ``log(e^x + e^-x)``, evaluated as ``|x| + log1p(e^(-2|x|))``."""
    a = np.abs(np.asarray(x, dtype=float))
    out = a + np.log1p(np.exp(-2.0 * a))
    return float(out) if out.ndim == 0 else out


def unit_fourier(weights: np.ndarray, field: float) -> np.ndarray:
    """Parity coefficients of ``rho(w.x + field)`` over the unit's support (bitmask indexed)."""
    k = len(weights)
    if k > BLOCK_ORDER_LIMIT:
        raise CapacityError(f"hidden degree {k} exceeds the expansion bound {BLOCK_ORDER_LIMIT}")
    X = config_matrix(k).astype(float) if k else np.zeros((1, 0))
    return fourier_coefficients(rho(X @ np.asarray(weights, float) + field))


def _accumulate(terms: dict, support: Subset, coef: np.ndarray, scale: float = 1.0) -> None:
    k = len(support)
    for mask in np.flatnonzero(coef):
        mask = int(mask)
        if mask == 0:
            continue
        S = tuple(support[b] for b in range(k) if mask >> b & 1)
        terms[S] = terms.get(S, 0.0) + scale * float(coef[mask])


def rbm_to_mrf(rbm: Rbm, tol: float = 1e-14) -> MrfPotential:
    """Induced potential of the observed marginal; the constant is dropped.

    Coefficients with magnitude at most ``tol`` (floating-point residue of
    exact cancellations) are removed.
    """
    terms: dict[Subset, float] = {}
    for j in range(rbm.n_hidden):
        support = rbm.hidden_support(j)
        coef = unit_fourier(rbm.weights[list(support), j], rbm.fields_hidden[j])
        _accumulate(terms, support, coef)
    for i, h in enumerate(rbm.fields_observed):
        if h != 0:
            terms[(i,)] = terms.get((i,), 0.0) + float(h)
    return MrfPotential(rbm.n_observed, {S: c for S, c in terms.items() if abs(c) > tol})


def observed_log_weights(rbm: Rbm) -> np.ndarray:
    """Unnormalized log-probability of every observed configuration (bitmask indexed)."""
    n = rbm.n_observed
    if n > ENUMERATION_LIMIT:
        raise CapacityError(f"{n} observed nodes exceed the enumeration bound")
    X = config_matrix(n).astype(float)
    lw = X @ rbm.fields_observed
    for j in range(rbm.n_hidden):
        lw += rho(X @ rbm.weights[:, j] + rbm.fields_hidden[j])
    return lw


def observed_marginal(rbm: Rbm) -> ExactDistribution:
    """Exact observed law, summing out hidden units analytically."""
    return ExactDistribution.from_log_weights(observed_log_weights(rbm))


@dataclass(frozen=True)
class BuildingBlock:
    """One hidden unit on ``support`` whose expansion has top coefficient ``achieved_coefficient``."""

    support: Subset
    weights: tuple[float, ...]
    field: float
    achieved_coefficient: float

    def coefficient(self) -> float:
        """Top coefficient recomputed by direct summation over ``2^|S|`` configurations."""
        return block_coefficient(np.array(self.weights), self.field)

    @property
    def l1_mass(self) -> float:
        return float(np.abs(self.weights).sum() + abs(self.field))


def block_coefficient(weights: np.ndarray, field: float) -> float:
    """``E_uniform[rho(w.x + field) * prod_s x_s]`` by exact summation."""
    k = len(weights)
    if k > BLOCK_ORDER_LIMIT:
        raise CapacityError(f"support size {k} exceeds {BLOCK_ORDER_LIMIT}")
    X = config_matrix(k).astype(float)
    return float(np.mean(rho(X @ weights + field) * np.prod(X, axis=1)))


def _block_family(k: int, gamma: float):
    """Parametrized unit whose top coefficient is an odd function of ``t ∈ [-a, a]``."""
    if k % 2 == 0:
        a = gamma / k

        def make(t):
            w = np.full(k, a)
            w[0] = t
            return w, 0.0

    else:
        a = gamma / (k + 1)

        def make(t):
            return np.full(k, a), t

    return a, make


def feasible_coefficient(k: int, gamma: float) -> float:
    """Largest top-coefficient magnitude reachable by a block of size ``k`` and mass ``gamma``.

    The coefficient is odd in the tuned parameter, so the reachable set is
    ``[-r, r]`` with ``r`` the endpoint value.
    """
    if k < 1:
        raise ParameterError("block support must be nonempty")
    if not gamma > 0:
        raise ParameterError("gamma must be positive")
    a, make = _block_family(k, gamma)
    return abs(block_coefficient(*make(a)))


def solve_building_block(S: Iterable[int], target: float, gamma: float = 0.5) -> BuildingBlock:
    """Hidden unit on ``S`` with ``|w|_1 + |h| <= gamma`` and top coefficient ``target``.

    Even ``|S|``: all weights ``gamma/|S|`` and no field, the first weight is
    tuned over ``[-gamma/|S|, gamma/|S|]``. Odd ``|S|``: weights
    ``gamma/(|S|+1)`` and the field is tuned over the interval of the same
    half-width. The tuned parameter is found by bisection until the
    achieved coefficient is within ``1e-12`` of the target.
    """
    S = as_subset(S)
    k = len(S)
    if k == 0:
        raise ParameterError("building block support must be nonempty")
    if k > BLOCK_ORDER_LIMIT:
        raise CapacityError(f"support size {k} exceeds {BLOCK_ORDER_LIMIT}")
    if not gamma > 0:
        raise ParameterError("gamma must be positive")
    a, make = _block_family(k, gamma)
    f_hi = block_coefficient(*make(a))
    reach = abs(f_hi)
    if abs(target) > reach:
        raise InfeasibleError(
            f"target {target:g} outside the reachable range [-{reach:g}, {reach:g}] for |S|={k}, gamma={gamma:g}",
            (-reach, reach),
        )
    lo, hi = -a, a
    f_lo = -f_hi
    t, val = (lo, f_lo) if abs(f_lo - target) <= abs(f_hi - target) else (hi, f_hi)
    for _ in range(200):
        if abs(val - target) <= BISECTION_TOL:
            break
        mid = 0.5 * (lo + hi)
        f_mid = block_coefficient(*make(mid))
        t, val = mid, f_mid
        if (f_mid - target > 0) == (f_lo - target > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    w, h = make(t)
    return BuildingBlock(S, tuple(map(float, w)), float(h), val)


def mrf_to_rbm(mrf: MrfPotential, gamma: float = 0.5, zero_tol: float = ZERO_TOL) -> Rbm:
    """RBM whose observed marginal has potential ``mrf``.

    Levels are processed from the top degree down to 2. At each level every
    monomial whose residual coefficient exceeds ``zero_tol`` gets
    ``ceil(|c| / r)`` identical building blocks, each carrying ``c / copies``,
    where ``r`` is the reachable range at that size. After a level the
    residual ``mrf - (induced potential so far)`` is recomputed exactly; the
    final degree-1 residual becomes the observed fields. Hidden units have
    degree at most the order of ``mrf`` and support inside one monomial.
    """
    if mrf.offset != 0:
        raise ParameterError("an MRF potential carries no constant term")
    if mrf.order > BLOCK_ORDER_LIMIT:
        raise CapacityError(f"order {mrf.order} exceeds the building-block bound {BLOCK_ORDER_LIMIT}")
    n = mrf.n_vars
    columns: list[tuple[Subset, tuple[float, ...], float]] = []
    induced: dict[Subset, float] = {}
    residual = dict(mrf.terms)
    for level in range(mrf.order, 1, -1):
        reach = feasible_coefficient(level, gamma)
        for S in [S for S in residual if len(S) == level]:
            c = residual[S]
            if abs(c) <= zero_tol:
                continue
            copies = math.ceil(abs(c) / reach)
            block = solve_building_block(S, c / copies, gamma)
            columns.extend([(S, block.weights, block.field)] * copies)
            _accumulate(induced, S, unit_fourier(np.array(block.weights), block.field), copies)
        residual = {S: mrf.terms.get(S, 0.0) - induced.get(S, 0.0) for S in set(mrf.terms) | set(induced)}
    W = np.zeros((n, len(columns)))
    h2 = np.zeros(len(columns))
    for j, (S, w, b) in enumerate(columns):
        W[list(S), j] = w
        h2[j] = b
    h1 = np.array([residual.get((i,), 0.0) for i in range(n)])
    return Rbm(W, h1, h2)


def parity_coupling(eta: float) -> float:
    """Coupling ``J`` with ``P(Y = chi) = sigmoid(2J) = 1/2 + eta``."""
    if not 0 < eta < 0.5:
        raise ParameterError("eta must lie in (0, 1/2)")
    return 0.5 * math.log((0.5 + eta) / (0.5 - eta))


def sparse_parity_potential(n: int, S: Iterable[int], eta: float) -> MrfPotential:
    """Potential on ``n`` inputs plus a label (last variable) tied to the parity of ``S``."""
    S = as_subset(S)
    if not S:
        raise ParameterError("parity support must be nonempty")
    if S[0] < 0 or S[-1] >= n:
        raise ParameterError(f"support {S} out of range for n={n}")
    return MrfPotential(n + 1, {(*S, n): parity_coupling(eta)})


def sparse_parity_rbm(n: int, S: Iterable[int], eta: float, gamma: float = 0.5) -> Rbm:
    """RBM whose observed law is uniform ``X`` with label ``Y = chi_S(X)`` kept w.p. ``1/2 + eta``.

    The label is observed variable ``n`` (the last one).
    """
    return mrf_to_rbm(sparse_parity_potential(n, S, eta), gamma)
