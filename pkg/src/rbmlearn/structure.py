"""Markov-blanket learners for ferromagnetic models with latent variables.

Both learners query an influence oracle (see :mod:`rbmlearn.influence`):

* :func:`greedy_nbhd` grows a set by repeatedly adding the variable with the
  largest influence on the target, then keeps only members whose removal
  drops the influence by at least ``eta``;
* :func:`search_nbhd` scans subsets by size, then lexicographically, and
  returns the first one that no single extra variable can raise by more
  than ``eta``.

Variable indices are observed-column positions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Literal

from scipy.special import expit

from .errors import LearningFailure, ParameterError
from .influence import InfluenceOracle, exact_oracle, required_samples, sample_oracle, subset_count_log
from .model import IsingModel, LearnerConfig, Rbm, Subset, all_subsets, as_subset
from .sampler import SampleSet

Learner = Literal["greedy", "search"]


@dataclass(frozen=True)
class NeighborhoodEstimate:
    node: int
    members: Subset
    greedy_trace: tuple[tuple[int, float], ...] = ()
    pruned: Subset = ()
    path: Subset = ()


def influence_threshold(alpha: float, beta: float, ell: int = 2) -> float:
    """``alpha^ell * sigmoid(-2 beta) * (1 - tanh beta)^ell``; half the guaranteed gap."""
    if alpha <= 0 or beta <= 0 or ell < 1:
        raise ParameterError("alpha, beta and ell must be positive")
    return alpha**ell * float(expit(-2.0 * beta)) * (1.0 - math.tanh(beta)) ** ell


def rbm_gap_bound(alpha: float, beta: float) -> float:
    """Lower bound on the influence gain of a two-hop neighbour in an RBM."""
    return 2.0 * alpha**2 * float(expit(-2.0 * beta)) * (1.0 - math.tanh(beta)) ** 2


def path_gap_bound(alpha: float, beta: float, length: int) -> float:
    """Lower bound on the gain of a node joined by an unblocked path of ``length`` edges."""
    return 2.0 * float(expit(-2.0 * beta)) * (alpha * (1.0 - math.tanh(beta) ** 2)) ** length


def chain_influence_bound(alpha: float, beta: float, n: int) -> float:
    """Lower bound on ``P(X_1=1 | X_n=1) - P(X_1=1 | X_n=-1)`` along an n-node chain."""
    return (alpha * (1.0 - math.tanh(beta) ** 2)) ** (n - 1)


def greedy_samples_theorem(eta: float, k: int, d2: int, n: int, delta: float) -> int:
    """Greedy sample budget ``2^(2k+3) (d2/eta)^2 (log n + k log(e n/k)) log(4/delta)``."""
    combo = subset_count_log(k, n)
    return math.ceil(2.0 ** (2 * k + 3) * (d2 / eta) ** 2 * (math.log(n) + combo) * math.log(4.0 / delta))


def search_samples_theorem(eta: float, d2: int, n: int, delta: float) -> int:
    """Search sample budget ``2^(2 d2+3) eta^-2 (log n + d2 log(e n/d2)) log(4/delta)``."""
    combo = subset_count_log(d2, n)
    return math.ceil(2.0 ** (2 * d2 + 3) / eta**2 * (math.log(n) + combo) * math.log(4.0 / delta))


def default_config(
    alpha: float,
    beta: float,
    d2: int,
    ell: int = 2,
    delta: float = 0.1,
    n: int = 2,
    learner: Learner = "greedy",
    sample_rule: Literal["theorem", "lemma"] = "theorem",
) -> LearnerConfig:
    """Thresholds and sample budget implied by the recovery guarantees.

    ``ell`` is the longest latent path (in edges) joining a node to its
    blanket; pure RBMs use ``ell = 2``. ``sample_rule="theorem"`` uses the
    per-learner closed forms above, ``"lemma"`` calls
    :func:`rbmlearn.influence.required_samples` at the learner's tolerance.
    """
    if d2 < 0:
        raise ParameterError("d2 must be nonnegative")
    if n < 1:
        raise ParameterError("n must be positive")
    eta = influence_threshold(alpha, beta, ell)
    if eta <= 0.0:
        raise ParameterError(f"influence threshold underflows for alpha={alpha}, beta={beta}, ell={ell}")
    k = max(1, math.ceil(d2 * math.log(4.0 / eta)))
    if learner == "greedy":
        eps = eta / (4 * d2) if d2 > 0 else eta / 4
        budget = k
    elif learner == "search":
        eps = eta / 4
        budget = d2
    else:
        raise ParameterError(f"unknown learner {learner!r}")
    cfg = LearnerConfig(alpha, beta, d2, ell, eta, k, 1, delta, eps)
    if sample_rule == "theorem":
        if learner == "greedy":
            M = greedy_samples_theorem(eta, k, d2, n, delta)
        else:
            M = search_samples_theorem(eta, d2, n, delta)
    elif sample_rule == "lemma":
        M = required_samples(cfg.replace(k=budget), n)
    else:
        raise ParameterError(f"unknown sample rule {sample_rule!r}")
    return cfg.replace(M=max(1, M))


def greedy_path(
    score: Callable[[Subset], float | None], candidates: Iterable[int], rounds: int
) -> tuple[Subset, tuple[tuple[int, float], ...]]:
    """Greedy maximization of a set function.

    Each round adds the candidate ``j`` maximizing ``score(S ∪ {j})``; ties go
    to the lowest index and candidates scoring ``None`` are skipped. Returns
    the final set and the ``(added, score)`` trace.
    """
    pool = sorted(set(candidates))
    chosen: list[int] = []
    trace: list[tuple[int, float]] = []
    for t in range(min(rounds, len(pool))):
        best_j, best = None, -math.inf
        for j in pool:
            if j in chosen:
                continue
            val = score(as_subset((*chosen, j)))
            if val is not None and val > best:
                best_j, best = j, val
        if best_j is None:
            raise LearningFailure(f"round {t + 1}: every candidate has an undefined influence estimate")
        chosen.append(best_j)
        trace.append((best_j, best))
    return as_subset(chosen), tuple(trace)


def _check_node(oracle: InfluenceOracle, i: int) -> None:
    if not 0 <= i < oracle.n_vars:
        raise ParameterError(f"variable {i} out of range for n={oracle.n_vars}")


def greedy_with_oracle(oracle: InfluenceOracle, i: int, config: LearnerConfig) -> NeighborhoodEstimate:
    _check_node(oracle, i)
    if config.k < 1:
        raise ParameterError("greedy budget k must be at least 1")
    candidates = [j for j in range(oracle.n_vars) if j != i]
    path, trace = greedy_path(lambda S: oracle.influence_of(i, S), candidates, config.k)
    top = oracle.influence_of(i, path)
    keep, drop = [], []
    for j in path:
        rest = oracle.influence_of(i, tuple(s for s in path if s != j))
        (keep if top - rest >= config.eta else drop).append(j)
    return NeighborhoodEstimate(i, tuple(keep), trace, tuple(drop), path)


def search_with_oracle(oracle: InfluenceOracle, i: int, config: LearnerConfig) -> NeighborhoodEstimate:
    """First subset (by size, then lexicographic) whose single-element gains are all at most ``eta``.

    Subsets whose own estimate is undefined are never accepted; an undefined
    estimate after adding ``j`` gives no evidence against the subset.
    """
    _check_node(oracle, i)
    others = [j for j in range(oracle.n_vars) if j != i]
    for S in all_subsets(others, config.d2):
        base = oracle.influence_of(i, S)
        if base is None:
            continue
        ok = True
        for j in others:
            if j in S:
                continue
            val = oracle.influence_of(i, as_subset((*S, j)))
            if val is not None and val - base > config.eta:
                ok = False
                break
        if ok:
            return NeighborhoodEstimate(i, S, path=S)
    raise LearningFailure(
        f"no subset of size <= {config.d2} passes the gain test for node {i}; "
        "the model may violate the nondegeneracy assumptions or M is too small"
    )


def greedy_nbhd(samples: SampleSet, i: int, config: LearnerConfig) -> NeighborhoodEstimate:
    return greedy_with_oracle(sample_oracle(samples), i, config)


def search_nbhd(samples: SampleSet, i: int, config: LearnerConfig) -> NeighborhoodEstimate:
    return search_with_oracle(sample_oracle(samples), i, config)


def greedy_nbhd_exact(model: IsingModel | Rbm, i: int, config: LearnerConfig) -> NeighborhoodEstimate:
    """Greedy learner driven by exact influences of the observed marginal."""
    return greedy_with_oracle(exact_oracle(model), i, config)


def search_nbhd_exact(model: IsingModel | Rbm, i: int, config: LearnerConfig) -> NeighborhoodEstimate:
    return search_with_oracle(exact_oracle(model), i, config)


def learn_structure(
    oracle: InfluenceOracle | SampleSet | IsingModel | Rbm, config: LearnerConfig, learner: Learner = "greedy"
) -> dict[int, Subset]:
    """Blanket estimate for every variable."""
    if isinstance(oracle, SampleSet):
        oracle = sample_oracle(oracle)
    elif isinstance(oracle, (IsingModel, Rbm)):
        oracle = exact_oracle(oracle)
    run = {"greedy": greedy_with_oracle, "search": search_with_oracle}.get(learner)
    if run is None:
        raise ParameterError(f"unknown learner {learner!r}")
    return {i: run(oracle, i, config).members for i in range(oracle.n_vars)}


__all__ = [
    "NeighborhoodEstimate",
    "chain_influence_bound",
    "default_config",
    "greedy_nbhd",
    "greedy_nbhd_exact",
    "greedy_path",
    "greedy_samples_theorem",
    "greedy_with_oracle",
    "influence_threshold",
    "learn_structure",
    "path_gap_bound",
    "rbm_gap_bound",
    "search_nbhd",
    "search_nbhd_exact",
    "search_samples_theorem",
    "search_with_oracle",
]
