"""Acceptance checks against exact oracles.

Each ``check_*`` function runs one seeded property suite and returns a
:class:`CheckResult` whose ``rows`` are deterministic (seed, model hash,
metric, value) records. :func:`run_suite` runs a selection of checks and
writes the records to ``acceptance.csv``; wall-clock times go to the
separate ``timings.csv`` so the results file is byte-for-byte reproducible.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .convert import (
    mrf_to_rbm,
    observed_marginal,
    rbm_to_mrf,
    sparse_parity_rbm,
)
from .exact import (
    ExactDistribution,
    covariance_matrix,
    distribution_from_potential,
    enumerate_model,
    fourier_of_log,
    magnetizations,
    marginal,
    observed_distribution,
    tv_distance,
)
from .generators import random_ferromagnet, random_latent_model, random_mrf, random_rbm
from .influence import check_influence_table, exact_oracle
from .model import (
    IsingModel,
    MrfPotential,
    Rbm,
    as_ising,
    graph_blankets,
    latent_paths,
    max_latent_path,
)
from .partition import approximate_log_z, check_lee_yang, fugacity_polynomial, shift_fields
from .regression import (
    RegressionProblem,
    discrete_partial,
    glmtron_population,
    learn_potential,
)
from .sampler import make_rng, model_id, sample_exact
from .structure import default_config, learn_structure, path_gap_bound, rbm_gap_bound

CSV_HEADER = "# rbmlearn-acceptance-v1"
CSV_COLUMNS = ["criterion", "item", "seed", "model_hash", "metric", "value"]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class CheckResult:
    name: str
    title: str
    passed: bool = True
    summary: str = ""
    rows: list[tuple] = field(default_factory=list)
    elapsed: float = 0.0

    def record(self, item, seed, model, metric: str, value) -> None:
        h = model if isinstance(model, str) else model_id(model)
        self.rows.append((self.name, item, seed, h, metric, _fmt(value)))

    def line(self) -> str:
        return f"{self.name} {'PASS' if self.passed else 'FAIL'} ({self.elapsed:.1f}s) {self.title}: {self.summary}"


# A1 ---------------------------------------------------------------------------


def check_submodularity(n_models: int = 50, base_seed: int = 1000, tol: float = 1e-9) -> CheckResult:
    """Monotone, submodular and good-element influence on random ferromagnets (<= 8 nodes)."""
    res = CheckResult("A1", "influence submodularity")
    worst = 0.0
    for t in range(n_models):
        seed = base_seed + t
        rng = make_rng(seed)
        n = int(rng.integers(3, 9))
        n_hidden = int(rng.integers(0, min(3, n - 2) + 1))
        model = random_ferromagnet(rng, n, 0.5, (0.1, 1.0), (0.0, 0.5), n_hidden)
        table = exact_oracle(model)
        for i in range(table.n_vars):
            rep = check_influence_table(table, i)
            v = max(
                rep.max_monotonicity_violation,
                rep.max_diminishing_returns_violation,
                rep.max_good_element_violation,
            )
            worst = max(worst, v)
            res.record(f"{t}:{i}", seed, model, "max_violation", v)
    res.passed = worst <= tol
    res.summary = f"max violation {worst:.3e} over {n_models} models (tol {tol:g})"
    return res


# A2 ---------------------------------------------------------------------------


def check_ghs(n_models: int = 20, n_points: int = 20, base_seed: int = 2000, step: float = 1e-3) -> CheckResult:
    """Sign structure of log Z derivatives in the field.

    Second partials are central differences of exact magnetizations, third
    partials central differences of the exact covariance matrix (step 1e-3).
    """
    res = CheckResult("A2", "GHS sign structure")
    worst2, worst3 = math.inf, -math.inf
    for t in range(n_models):
        seed = base_seed + t
        rng = make_rng(seed)
        n = int(rng.integers(2, 9))
        model = random_ferromagnet(rng, n, 0.5, (0.1, 1.0), (0.0, 0.5))
        m2, m3 = math.inf, -math.inf
        for _ in range(n_points):
            h = rng.uniform(0.0, 0.5, size=n)
            for j in range(n):
                e = np.zeros(n)
                e[j] = step
                d2 = (magnetizations(model, h + e) - magnetizations(model, h - e)) / (2 * step)
                d3 = (covariance_matrix(model, h + e) - covariance_matrix(model, h - e)) / (2 * step)
                m2 = min(m2, float(d2.min()))
                m3 = max(m3, float(d3.max()))
        worst2, worst3 = min(worst2, m2), max(worst3, m3)
        res.record(t, seed, model, "min_second_partial", m2)
        res.record(t, seed, model, "max_third_partial", m3)
    res.passed = worst2 >= -1e-6 and worst3 <= 1e-6
    res.summary = f"min d2 logZ {worst2:.3e} (>= -1e-6), max d3 logZ {worst3:.3e} (<= 1e-6)"
    return res


# A3 ---------------------------------------------------------------------------


def _min_gap_margin(model: IsingModel, bound_for: Callable[[int], float]) -> float:
    """Smallest ``I_i(S+j) - I_i(S) - bound(L_ij)`` over blanket pairs and all ``S``."""
    table = exact_oracle(model)
    n = table.n_vars
    masks = np.arange(1 << n, dtype=np.int64)
    worst = math.inf
    for i, nb in latent_paths(model).items():
        infl = table.influence_array(i)
        for j, L in nb.items():
            ok = (((masks >> i) & 1) == 0) & (((masks >> j) & 1) == 0)
            gain = infl[masks[ok] | (1 << j)] - infl[ok]
            worst = min(worst, float(gain.min()) - bound_for(L))
    return worst


def check_two_hop_gap(n_models: int = 30, base_seed: int = 3000, alpha: float = 0.2) -> CheckResult:
    """Influence gain of blanket members against the RBM and latent-path lower bounds."""
    res = CheckResult("A3", "two-hop influence gap")
    worst_rbm = worst_path = math.inf
    for t in range(n_models):
        seed = base_seed + t
        rng = make_rng(seed)
        n, m = int(rng.integers(3, 7)), int(rng.integers(1, 4))
        rbm = random_rbm(rng, n, m, int(rng.integers(2, min(3, n) + 1)), alpha, 2.0)
        model = as_ising(rbm)
        beta = float(model.node_mass().max())
        margin = _min_gap_margin(model, lambda L: rbm_gap_bound(alpha, beta))
        worst_rbm = min(worst_rbm, margin)
        res.record(f"rbm{t}", seed, model, "min_gap_margin", margin)
    for t in range(n_models):
        seed = base_seed + 500 + t
        rng = make_rng(seed)
        model = random_latent_model(rng, int(rng.integers(3, 6)), int(rng.integers(1, 4)), 3, alpha, 1.0)
        beta = float(model.node_mass().max())
        margin = _min_gap_margin(model, lambda L: path_gap_bound(alpha, beta, L))
        worst_path = min(worst_path, margin)
        res.record(f"chain{t}", seed, model, "min_gap_margin", margin)
    res.passed = worst_rbm >= -1e-9 and worst_path >= -1e-9
    res.summary = f"min margin over bound: RBM {worst_rbm:.3e}, latent chains {worst_path:.3e}"
    return res


# A4 ---------------------------------------------------------------------------


def _a4_instance(t: int, seed: int):
    rng = make_rng(seed)
    if t % 2 == 0:
        n, m = int(rng.integers(3, 8)), int(rng.integers(1, 4))
        rbm = random_rbm(rng, n, m, int(rng.integers(2, min(3, n) + 1)), 0.2, 2.0)
        return as_ising(rbm), 0.2, 2.0
    model = random_latent_model(rng, int(rng.integers(3, 7)), int(rng.integers(1, 5)), 3, 0.2, 1.0)
    return model, 0.2, 1.0


def check_exact_recovery(n_models: int = 100, base_seed: int = 4000) -> CheckResult:
    """Both learners with exact influences return every true blanket."""
    res = CheckResult("A4", "exact-oracle structure recovery")
    hits = {"greedy": 0, "search": 0}
    for t in range(n_models):
        seed = base_seed + t
        model, alpha, beta = _a4_instance(t, seed)
        truth = graph_blankets(model)
        d2 = max(1, max(len(v) for v in truth.values()))
        ell = max(1, max_latent_path(model))
        table = exact_oracle(model)
        for learner in ("greedy", "search"):
            cfg = default_config(alpha, beta, d2, ell, 0.1, model.n_observed, learner)
            ok = learn_structure(table, cfg, learner) == truth
            hits[learner] += ok
            res.record(t, seed, model, f"{learner}_exact", ok)
    res.passed = hits["greedy"] == n_models and hits["search"] == n_models
    res.summary = f"greedy {hits['greedy']}/{n_models}, search {hits['search']}/{n_models}"
    return res


# A5 ---------------------------------------------------------------------------


def a5_instance(seed: int) -> tuple[IsingModel, int]:
    """Ferromagnetic RBM with 8 observed nodes, 3 hidden units of degree 2, alpha=0.2, beta=0.5."""
    rbm = random_rbm(make_rng(seed), 8, 3, 2, 0.2, 0.5, weight_max=0.25)
    model = as_ising(rbm)
    d2 = max(1, max(len(v) for v in graph_blankets(model).values()))
    return model, d2


def check_sampled_recovery(n_trials: int = 20, base_seed: int = 5000, delta: float = 0.1) -> CheckResult:
    """Full-structure recovery from theorem-prescribed sample counts."""
    res = CheckResult("A5", "sampled structure recovery")
    freq = {}
    for learner in ("greedy", "search"):
        hits = 0
        for t in range(n_trials):
            seed = base_seed + t
            model, d2 = a5_instance(seed)
            cfg = default_config(0.2, 0.5, d2, 2, delta, model.n_observed, learner)
            samples = sample_exact(model, cfg.M, seed)
            ok = learn_structure(samples, cfg, learner) == graph_blankets(model)
            hits += ok
            res.record(f"{learner}{t}", seed, model, "M", cfg.M)
            res.record(f"{learner}{t}", seed, model, "recovered", ok)
        freq[learner] = hits / n_trials
    res.passed = all(f >= 1 - delta for f in freq.values())
    res.summary = f"recovery frequency greedy {freq['greedy']:.2f}, search {freq['search']:.2f} (>= {1 - delta:.1f})"
    return res


# A6 ---------------------------------------------------------------------------


def check_conversions(n_instances: int = 50, base_seed: int = 6000) -> CheckResult:
    """RBM -> MRF against joint enumeration, and MRF -> RBM -> MRF round trips."""
    res = CheckResult("A6", "conversion round trips")
    worst_a = worst_b_tv = worst_b_inf = 0.0
    degree_ok = True
    for t in range(n_instances):
        seed = base_seed + t
        rng = make_rng(seed)
        n, m = int(rng.integers(2, 7)), int(rng.integers(1, 5))
        W = rng.normal(0.0, 1.0, size=(n, m)) * (rng.random((n, m)) < 0.7)
        rbm = Rbm(W, rng.normal(0.0, 0.5, n), rng.normal(0.0, 0.5, m))
        oracle = observed_distribution(as_ising(rbm))
        tv = tv_distance(distribution_from_potential(rbm_to_mrf(rbm)), oracle)
        worst_a = max(worst_a, tv)
        res.record(f"rbm{t}", seed, rbm, "tv", tv)
    for t in range(n_instances):
        seed = base_seed + 500 + t
        rng = make_rng(seed)
        n = int(rng.integers(2, 7))
        order = int(rng.integers(2, min(3, n) + 1))
        mrf = random_mrf(rng, n, order, int(rng.integers(1, 6)))
        rbm = mrf_to_rbm(mrf)
        back = observed_marginal(rbm)
        tv = tv_distance(back, distribution_from_potential(mrf))
        inf = fourier_of_log(back).max_abs_diff(mrf)
        deg = int(rbm.hidden_degrees().max(initial=0))
        degree_ok &= deg <= mrf.order
        worst_b_tv, worst_b_inf = max(worst_b_tv, tv), max(worst_b_inf, inf)
        res.record(f"mrf{t}", seed, mrf, "tv", tv)
        res.record(f"mrf{t}", seed, mrf, "sup_coef_error", inf)
        res.record(f"mrf{t}", seed, mrf, "n_hidden", rbm.n_hidden)
        res.record(f"mrf{t}", seed, mrf, "max_hidden_degree", deg)
    res.passed = worst_a <= 1e-10 and worst_b_tv <= 1e-6 and worst_b_inf <= 1e-6 and degree_ok
    res.summary = (
        f"RBM->MRF TV {worst_a:.2e}; MRF->RBM->MRF TV {worst_b_tv:.2e}, sup {worst_b_inf:.2e}; "
        f"hidden degree within order: {degree_ok}"
    )
    return res


# A7 ---------------------------------------------------------------------------


def example_over_parameterized() -> Rbm:
    """Two observed, two hidden; weights (1, 1) and (-1, 1); observed law is uniform."""
    return Rbm(np.array([[1.0, -1.0], [1.0, 1.0]]))


def example_hidden_structure(weight: float = 0.7) -> Rbm:
    """One hidden unit tied to three observed nodes with equal positive weights."""
    return Rbm(np.full((3, 1), weight))


def example_eta_identifiability(eps: float) -> Rbm:
    """As above with weight 1/4 and hidden field ``eps``."""
    return Rbm(np.full((3, 1), 0.25), None, np.array([eps]))


def check_fixtures() -> CheckResult:
    res = CheckResult("A7", "worked-example fixtures")
    ex1 = example_over_parameterized()
    uniform = ExactDistribution.from_log_weights(np.zeros(4))
    tv = tv_distance(marginal(enumerate_model(as_ising(ex1)), [0, 1]), uniform)
    res.record("ex1", 0, ex1, "tv_from_uniform", tv)
    ex3 = example_hidden_structure()
    triple = fourier_of_log(observed_distribution(as_ising(ex3))).coefficient((0, 1, 2))
    res.record("ex3", 0, ex3, "triple_coefficient", triple)
    mags = []
    for eps in (0.2, 0.1, 0.05):
        rbm = example_eta_identifiability(eps)
        c = abs(fourier_of_log(observed_distribution(as_ising(rbm))).coefficient((0, 1, 2)))
        mags.append(c)
        res.record(f"eta{eps}", 0, rbm, "abs_triple_coefficient", c)
    decreasing = all(a > b for a, b in zip(mags, mags[1:])) and mags[-1] > 0
    res.passed = tv <= 1e-12 and abs(triple) <= 1e-12 and decreasing
    res.summary = f"uniform TV {tv:.1e}; triple {triple:.1e}; |triple| over eps {['%.3e' % c for c in mags]}"
    return res


# A8 ---------------------------------------------------------------------------


def check_sparse_parity(n: int = 5, support=(0, 2), eta: float = 0.2) -> CheckResult:
    res = CheckResult("A8", "sparse parity with noise instance")
    rbm = sparse_parity_rbm(n, support, eta)
    dist = observed_marginal(rbm)
    p = dist.probabilities()
    idx = np.arange(p.size)
    chi = np.prod([((idx >> s) & 1) * 2 - 1 for s in support], axis=0)
    y = ((idx >> n) & 1) * 2 - 1
    agree = float(p[y == chi].sum())
    x_tv = tv_distance(marginal(dist, range(n)), ExactDistribution.from_log_weights(np.zeros(1 << n)))
    res.record(0, 0, rbm, "prob_label_matches_parity", agree)
    res.record(0, 0, rbm, "input_tv_from_uniform", x_tv)
    res.record(0, 0, rbm, "n_hidden", rbm.n_hidden)
    res.passed = abs(agree - (0.5 + eta)) <= 1e-6 and x_tv <= 1e-6
    res.summary = f"P(Y = parity) = {agree:.9f}, input TV {x_tv:.1e}, {rbm.n_hidden} hidden units"
    return res


# A9 ---------------------------------------------------------------------------


def regression_suite_model(seed: int) -> Rbm:
    """Standard regression instance: 6 observed, 3 hidden of degree 2, alpha=0.2, beta=1."""
    return random_rbm(make_rng(seed), 6, 3, 2, 0.2, 1.0)


def check_regression(
    n_population: int = 20, n_seeds: int = 10, grid=(1_000, 10_000, 100_000), base_seed: int = 9000
) -> CheckResult:
    """Population GLMTron recovers the partials; sampled error shrinks with M."""
    res = CheckResult("A9", "potential regression")
    worst_pop = 0.0
    for t in range(n_population):
        seed = base_seed + t
        rbm = regression_suite_model(seed)
        dist = observed_marginal(rbm)
        pstar = fourier_of_log(dist)
        blankets = graph_blankets(as_ising(rbm))
        for i in range(dist.n_vars):
            fit = glmtron_population(RegressionProblem.from_distribution(dist, i, blankets[i]), 1.0)
            err = fit.as_partial().max_abs_diff(discrete_partial(pstar, i))
            worst_pop = max(worst_pop, err)
            res.record(f"pop{t}:{i}", seed, rbm, "partial_sup_error", err)
    medians = []
    for M in grid:
        errs = []
        for s in range(n_seeds):
            seed = base_seed + 500 + s
            rbm = regression_suite_model(seed)
            pstar = fourier_of_log(observed_marginal(rbm))
            model = as_ising(rbm)
            samples = sample_exact(model, M, seed)
            fitted = learn_potential(samples, graph_blankets(model), 1.0, seed=seed)
            err = fitted.max_abs_diff(pstar)
            errs.append(err)
            res.record(f"M{M}:{s}", seed, rbm, "potential_sup_error", err)
        medians.append(float(np.median(errs)))
        res.record(f"M{M}", base_seed + 500, "-", "median_sup_error", medians[-1])
    monotone = all(a >= b for a, b in zip(medians, medians[1:]))
    res.passed = worst_pop <= 1e-6 and monotone and medians[-1] <= 0.1
    res.summary = f"population sup error {worst_pop:.2e}; sampled medians {['%.4f' % m for m in medians]}"
    return res


# A10 --------------------------------------------------------------------------


def lee_yang_instance(seed: int, H: float = 0.3) -> tuple[Rbm, MrfPotential]:
    """Ferromagnetic weights with hidden fields <= 0 and observed fields <= -H."""
    rng = make_rng(seed)
    n, m = int(rng.integers(6, 13)), int(rng.integers(1, 5))
    W = np.zeros((n, m))
    for j in range(m):
        k = int(rng.integers(2, 4))
        W[rng.choice(n, size=k, replace=False), j] = rng.uniform(0.1, 0.8, size=k)
    rbm = Rbm(W, -rng.uniform(H, H + 0.5, size=n), -rng.uniform(0.0, 0.3, size=m))
    return rbm, rbm_to_mrf(rbm)


def check_log_partition(n_instances: int = 30, base_seed: int = 10000, H: float = 0.3, eps: float = 0.1) -> CheckResult:
    res = CheckResult("A10", "Lee-Yang log Z approximation")
    worst_err, min_root = 0.0, math.inf
    for t in range(n_instances):
        seed = base_seed + t
        rbm, pot = lee_yang_instance(seed, H)
        approx = approximate_log_z(pot, H, eps)
        exact = distribution_from_potential(pot).log_z
        err = abs(approx.log_partition - exact)
        root = check_lee_yang(fugacity_polynomial(shift_fields(pot, H))).min_abs_root
        worst_err, min_root = max(worst_err, err), min(min_root, root)
        res.record(t, seed, pot, "abs_error", err)
        res.record(t, seed, pot, "truncation_order", approx.truncation_order)
        res.record(t, seed, pot, "min_abs_root", root)
    res.passed = worst_err <= eps / 4 and min_root >= 1 - 1e-6
    res.summary = f"max |approx - exact| {worst_err:.2e} (<= {eps / 4:g}); min |root| {min_root:.6f}"
    return res


CHECKS: dict[str, Callable[[], CheckResult]] = {
    "A1": check_submodularity,
    "A2": check_ghs,
    "A3": check_two_hop_gap,
    "A4": check_exact_recovery,
    "A5": check_sampled_recovery,
    "A6": check_conversions,
    "A7": check_fixtures,
    "A8": check_sparse_parity,
    "A9": check_regression,
    "A10": check_log_partition,
}


def results_csv(results: list[CheckResult]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        w.writerows(r.rows)
        w.writerow([r.name, "summary", "-", "-", "passed", _fmt(r.passed)])
    return buf.getvalue()


def timings_csv(results: list[CheckResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["criterion", "seconds"])
    for r in results:
        w.writerow([r.name, f"{r.elapsed:.3f}"])
    return buf.getvalue()


def run_check(name: str) -> CheckResult:
    start = time.perf_counter()
    result = CHECKS[name]()
    result.elapsed = time.perf_counter() - start
    return result


def run_suite(names=None, out_dir=None, echo: Callable[[str], None] | None = None) -> list[CheckResult]:
    """Run the named checks (default: all) and optionally write the CSV artifacts."""
    names = list(CHECKS) if names is None else list(names)
    results = []
    for name in names:
        r = run_check(name)
        if echo:
            echo(r.line())
        results.append(r)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "acceptance.csv").write_text(results_csv(results))
        (out / "timings.csv").write_text(timings_csv(results))
    return results
