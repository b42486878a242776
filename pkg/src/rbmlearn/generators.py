"""Seeded random instances: ferromagnetic Ising models, RBMs, latent chains and MRFs."""
from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .model import IsingModel, MrfPotential, NondegeneracyParams, Rbm, all_subsets, validate_nondegeneracy


def _open_low(rng: np.random.Generator, lo: float, hi: float, size=None):
    """Uniform on ``(lo, hi]``."""
    return hi - (hi - lo) * rng.random(size)


def random_ferromagnet(
    rng: np.random.Generator,
    n: int,
    edge_prob: float = 0.5,
    weight_range: tuple[float, float] = (0.1, 1.0),
    field_range: tuple[float, float] = (0.0, 0.5),
    n_hidden: int = 0,
) -> IsingModel:
    """Erdos-Renyi ferromagnet; the last ``n_hidden`` nodes are latent."""
    inter = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                inter[(i, j)] = float(rng.uniform(*weight_range))
    h = rng.uniform(*field_range, size=n)
    mask = np.zeros(n, dtype=bool)
    if n_hidden:
        mask[n - n_hidden :] = True
    return IsingModel(n, inter, h, mask)


def random_rbm(
    rng: np.random.Generator,
    n: int,
    m: int,
    hidden_degree: int,
    alpha: float,
    beta: float,
    weight_max: float | None = None,
    field_max: float = 0.0,
    max_tries: int = 200,
) -> Rbm:
    """Ferromagnetic ``(alpha, beta)``-nondegenerate RBM.

    Each hidden unit connects to ``hidden_degree`` distinct observed nodes.
    Weights are uniform on ``(alpha, weight_max]`` and fields on
    ``[0, field_max]``. Node masses above ``beta`` are scaled down
    edge by edge; a draw is rejected if that pushes a weight to ``alpha`` or
    below, and the request fails after ``max_tries`` rejections.
    """
    if not 0 < alpha < beta:
        raise ParameterError("need 0 < alpha < beta")
    if not 1 <= hidden_degree <= n:
        raise ParameterError("hidden degree must lie in [1, n]")
    if hidden_degree * alpha >= beta:
        raise ParameterError("a hidden unit of this degree cannot have mass below beta")
    weight_max = beta / hidden_degree if weight_max is None else weight_max
    if weight_max <= alpha:
        raise ParameterError("weight_max must exceed alpha")
    params = NondegeneracyParams(alpha, beta)
    for _ in range(max_tries):
        W = np.zeros((n, m))
        for j in range(m):
            support = rng.choice(n, size=hidden_degree, replace=False)
            W[support, j] = _open_low(rng, alpha, weight_max, hidden_degree)
        h1 = rng.uniform(0.0, field_max, size=n) if field_max > 0 else np.zeros(n)
        h2 = rng.uniform(0.0, field_max, size=m) if field_max > 0 else np.zeros(m)
        mass1 = W.sum(axis=1) + h1
        mass2 = W.sum(axis=0) + h2
        scale = np.minimum(1.0, np.minimum.outer(beta / np.maximum(mass1, 1e-300), beta / np.maximum(mass2, 1e-300)))
        W = W * scale
        h1 = h1 * np.minimum(1.0, beta / np.maximum(mass1, 1e-300))
        h2 = h2 * np.minimum(1.0, beta / np.maximum(mass2, 1e-300))
        rbm = Rbm(W, h1, h2)
        if validate_nondegeneracy(rbm, params).passed:
            return rbm
    raise ParameterError(f"no ({alpha}, {beta})-nondegenerate RBM found in {max_tries} draws")


def latent_chain_model(
    rng: np.random.Generator,
    n_observed: int,
    lengths: list[tuple[int, int, int]],
    alpha: float,
    beta: float,
    weight_max: float | None = None,
) -> IsingModel:
    """Observed nodes joined pairwise by chains of latent nodes.

    ``lengths`` lists ``(a, b, L)``: observed ``a`` and ``b`` are joined by a
    path of ``L`` edges through ``L - 1`` fresh latent nodes (``L = 1`` is a
    direct edge). Latent nodes are appended after the observed ones. Weights
    are uniform on ``(alpha, weight_max]``; the result is checked for
    ``(alpha, beta)``-nondegeneracy.
    """
    weight_max = min(beta / 2, 2 * alpha) if weight_max is None else weight_max
    inter: dict[tuple[int, int], float] = {}
    nxt = n_observed
    for a, b, L in lengths:
        if L < 1 or a == b:
            raise ParameterError("chains need L >= 1 and distinct endpoints")
        path = [a, *range(nxt, nxt + L - 1), b]
        nxt += L - 1
        for u, v in zip(path, path[1:]):
            inter[(u, v)] = float(_open_low(rng, alpha, weight_max))
    mask = np.zeros(nxt, dtype=bool)
    mask[n_observed:] = True
    model = IsingModel(nxt, inter, np.zeros(nxt), mask)
    report = validate_nondegeneracy(model, NondegeneracyParams(alpha, beta))
    if not report.passed:
        raise ParameterError(f"chain model is degenerate: {report.describe()}")
    return model


def random_latent_model(
    rng: np.random.Generator, n_observed: int, n_links: int, max_length: int, alpha: float, beta: float
) -> IsingModel:
    """Random latent-chain model with ``n_links`` chains of length ``1..max_length``."""
    for _ in range(200):
        links = []
        for _ in range(n_links):
            a, b = rng.choice(n_observed, size=2, replace=False)
            links.append((int(a), int(b), int(rng.integers(1, max_length + 1))))
        try:
            return latent_chain_model(rng, n_observed, links, alpha, beta)
        except ParameterError:
            continue
    raise ParameterError("could not draw a nondegenerate latent-chain model")


def random_mrf(rng: np.random.Generator, n: int, order: int, n_terms: int, coef_max: float = 1.0) -> MrfPotential:
    """Potential with ``n_terms`` random monomials of degree ``1..order``."""
    pool = [S for S in all_subsets(range(n), order) if S]
    picks = rng.choice(len(pool), size=min(n_terms, len(pool)), replace=False)
    return MrfPotential(n, {pool[p]: float(rng.uniform(-coef_max, coef_max)) for p in sorted(picks)})
