"""Log-partition approximation by Taylor expansion in the fugacity.

For a potential ``g`` let ``P(lam) = sum_x exp(g(x)) lam^{#(+1 spins)}``; its
coefficients ``c_k`` group configurations by the number of +1 spins. With
all observed fields at most ``-H``, shifting them by ``+H`` gives ``g`` and
``log Z = log P(e^{-2H}) + n H``. When ``P`` has no zeros in the open unit
disk, the Taylor series of ``log P`` around 0 converges at ``lam = e^{-2H}``
and its truncation error is controlled by the order ``m``.

Level coefficients are computed exactly by enumeration, so this module is
limited to the enumeration bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import logsumexp

from .errors import ParameterError, RootFindingError
from .exact import check_capacity
from .model import MrfPotential


@dataclass(frozen=True)
class FugacityPolynomial:
    """``P(lam) = sum_k c_k lam^k`` stored as ``log_levels[k] = log c_k``."""

    n_vars: int
    log_levels: np.ndarray

    @property
    def coefficients(self) -> np.ndarray:
        return np.exp(self.log_levels)

    def log_evaluate(self, lam: float) -> float:
        """``log P(lam)`` for ``lam > 0``."""
        if lam <= 0:
            raise ParameterError("log_evaluate needs a positive fugacity")
        k = np.arange(self.n_vars + 1)
        return float(logsumexp(self.log_levels + k * math.log(lam)))

    def log_partition_at_field(self, h: float) -> float:
        """``log sum_x exp(g(x) + h sum_i x_i)`` via ``lam = e^{2h}``."""
        return self.log_evaluate(math.exp(2.0 * h)) - self.n_vars * h


def fugacity_polynomial(potential: MrfPotential) -> FugacityPolynomial:
    """Exact level sums of ``exp(potential)`` grouped by number of +1 spins."""
    n = potential.n_vars
    check_capacity(n)
    table = potential.table()
    level = np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)
    order = np.argsort(level, kind="stable")
    bounds = np.searchsorted(level[order], np.arange(n + 2))
    logs = np.array([logsumexp(table[order[bounds[k] : bounds[k + 1]]]) for k in range(n + 1)])
    return FugacityPolynomial(n, logs)


def shift_fields(potential: MrfPotential, H: float) -> MrfPotential:
    """``potential + H * sum_i x_i``."""
    return potential + MrfPotential(potential.n_vars, {(i,): H for i in range(potential.n_vars)})


def truncation_order(lam: float, epsilon: float, n: int) -> int:
    """Smallest ``m >= (lam/(1-lam)) (log(4n/eps) + log(1/(1-lam)))``."""
    return max(1, math.ceil(lam / (1.0 - lam) * (math.log(4.0 * n / epsilon) + math.log(1.0 / (1.0 - lam)))))


def log_series(a: np.ndarray, m: int) -> np.ndarray:
    """Coefficients ``b_1..b_m`` of ``log(1 + sum_k a_k x^k)`` (``a[0]`` is ignored).

    Uses ``j b_j = j a_j - sum_{k<j} k b_k a_{j-k}``.
    """
    a = np.concatenate([np.asarray(a, float), np.zeros(max(0, m + 1 - len(a)))])
    b = np.zeros(m + 1)
    for j in range(1, m + 1):
        acc = j * a[j]
        for k in range(1, j):
            acc -= k * b[k] * a[j - k]
        b[j] = acc / j
    return b[1:]


@dataclass(frozen=True)
class TaylorLogZ:
    """Truncated Taylor approximation of ``log P(lam)``.

    ``approx_log_z`` approximates ``log P(lam)``; :attr:`log_partition` adds
    ``n H`` with ``H = -log(lam)/2`` to give the log-partition function of the
    unshifted potential.
    """

    truncation_order: int
    log_coefficients: np.ndarray
    lam: float
    approx_log_z: float
    H: float
    epsilon: float
    n_vars: int

    @property
    def log_partition(self) -> float:
        return self.approx_log_z + self.n_vars * self.H


def taylor_log_z(poly: FugacityPolynomial, lam: float, epsilon: float, m: int | None = None) -> TaylorLogZ:
    """Taylor approximation of ``log P(lam)`` of order ``m`` (default: the error-bound order)."""
    if not 0 < lam < 1:
        raise ParameterError("lambda must lie in (0, 1)")
    if not 0 < epsilon < 0.25:
        raise ParameterError("epsilon must lie in (0, 1/4)")
    n = poly.n_vars
    m = truncation_order(lam, epsilon, n) if m is None else int(m)
    if m < 1:
        raise ParameterError("truncation order must be positive")
    ratios = np.exp(poly.log_levels - poly.log_levels[0])
    b = log_series(ratios, m)
    powers = lam ** np.arange(1, m + 1)
    approx = float(poly.log_levels[0] + b @ powers)
    return TaylorLogZ(m, b, lam, approx, -0.5 * math.log(lam), epsilon, n)


def approximate_log_z(potential: MrfPotential, H: float, epsilon: float, m: int | None = None) -> TaylorLogZ:
    """Approximate ``log Z`` of a potential whose degree-1 coefficients are all at most ``-H``."""
    if not H > 0:
        raise ParameterError("H must be positive")
    fields = np.array([potential.coefficient((i,)) for i in range(potential.n_vars)])
    if np.any(fields > -H + 1e-15):
        raise ParameterError(f"every degree-1 coefficient must be at most -H = {-H:g}")
    poly = fugacity_polynomial(shift_fields(potential, H))
    return taylor_log_z(poly, math.exp(-2.0 * H), epsilon, m)


def log_likelihood(potential: MrfPotential, x, approx: TaylorLogZ) -> float:
    """``potential(x) - log Z`` with ``log Z`` from the Taylor approximation."""
    x = np.asarray(x)
    if x.shape != (potential.n_vars,):
        raise ParameterError(f"configuration must have {potential.n_vars} entries")
    if approx.n_vars != potential.n_vars:
        raise ParameterError("approximation was computed for a different variable count")
    return float(potential.evaluate(x)) - approx.log_partition


@dataclass(frozen=True)
class LeeYangReport:
    roots: np.ndarray
    min_abs_root: float
    method: str

    def zero_free_disk(self, tol: float = 1e-6) -> bool:
        return self.min_abs_root >= 1.0 - tol


ROOT_DEGREE_LIMIT = 40


def check_lee_yang(poly: FugacityPolynomial, tol: float = 1e-6) -> LeeYangReport:
    """All complex roots of ``P`` and their smallest modulus.

    Roots come from the companion matrix. If the smallest modulus falls
    inside the unit disk by more than ``tol`` the roots are recomputed with
    extended-precision arithmetic, since clustered roots on the unit circle
    are ill-conditioned in double precision.
    """
    n = poly.n_vars
    if n > ROOT_DEGREE_LIMIT:
        raise ParameterError(f"degree {n} exceeds the root-finding bound {ROOT_DEGREE_LIMIT}")
    scaled = np.exp(poly.log_levels - poly.log_levels.max())
    roots = np.roots(scaled[::-1])
    if roots.size == 0:
        return LeeYangReport(roots, math.inf, "companion")
    if not np.all(np.isfinite(roots)):
        raise RootFindingError("companion-matrix eigenvalues are not finite")
    best = float(np.abs(roots).min())
    if best >= 1.0 - tol:
        return LeeYangReport(roots, best, "companion")

    with mpmath.workdps(max(50, 12 * n)):
        try:
            mp_roots = mpmath.polyroots([mpmath.mpf(float(c)) for c in scaled[::-1]], maxsteps=500, extraprec=200)
        except mpmath.NoConvergence as exc:
            raise RootFindingError(f"extended-precision root finding did not converge: {exc}") from exc
        roots = np.array([complex(r) for r in mp_roots])
        best = float(min(abs(r) for r in mp_roots))
    return LeeYangReport(roots, best, "extended-precision")
