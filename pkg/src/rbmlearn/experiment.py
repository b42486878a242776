"""Seeded end-to-end experiments: generate, sample, learn structure and potential, score.

An :class:`ExperimentSpec` describes a model source, a learner, a number of
trials and a grid of sample sizes. Trial ``t`` uses seed ``seed + t`` for
model generation and sampling, so any row can be replayed alone from its
``seed`` column. Results are written as CSV with a versioned header comment;
wall-clock times go to a separate file so the results are reproducible
byte for byte.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Literal

import numpy as np

from .convert import rbm_to_mrf
from .errors import ParameterError, RbmLearnError
from .exact import fourier_of_log, observed_distribution
from .generators import random_ferromagnet, random_latent_model, random_rbm
from .io import read_model
from .model import IsingModel, Rbm, as_ising, graph_blankets, max_latent_path
from .regression import learn_potential
from .sampler import make_rng, model_id, sample_exact
from .structure import default_config, learn_structure

log = logging.getLogger(__name__)

CSV_HEADER = "# rbmlearn-experiment-v1"
CSV_COLUMNS = [
    "trial", "seed", "model_hash", "M", "learner", "status", "exact_recovery",
    "precision", "recall", "potential_sup_error", "reason",
]
THEOREM_M = "theorem"


@dataclass(frozen=True)
class ExperimentSpec:
    """Sweep description.

    ``model_source`` is either a path to a model file (ising-v1 or rbm-v1)
    or a dict of generator parameters with ``kind`` one of ``rbm``,
    ``ferromagnet`` or ``latent``. ``M_grid`` lists ascending sample sizes;
    the single entry ``"theorem"`` uses the learner's prescribed budget.
    """

    model_source: Any
    learner: Literal["greedy", "search"] = "greedy"
    trials: int = 10
    seed: int = 0
    M_grid: tuple = (1000, 10000)
    output: str = "."
    alpha: float = 0.2
    beta: float = 1.0
    delta: float = 0.1
    d2: int | None = None
    fit_potential: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")
        if self.learner not in ("greedy", "search"):
            raise ParameterError(f"unknown learner {self.learner!r}")
        grid = tuple(self.M_grid)
        if not grid:
            raise ParameterError("M_grid must be nonempty")
        if THEOREM_M in grid:
            if len(grid) != 1:
                raise ParameterError(f"{THEOREM_M!r} must be the only M_grid entry")
        else:
            if any(int(M) != M or M < 1 for M in grid):
                raise ParameterError("M_grid entries must be positive integers")
            if any(a >= b for a, b in zip(grid, grid[1:])):
                raise ParameterError("M_grid must be strictly ascending")
            grid = tuple(int(M) for M in grid)
        object.__setattr__(self, "M_grid", grid)
        if self.workers < 1:
            raise ParameterError("workers must be at least 1")

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentSpec:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> ExperimentSpec:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def generate_model(source, seed: int) -> IsingModel | Rbm:
    """Model for one trial: a file (same for every trial) or a seeded draw."""
    if not isinstance(source, dict):
        model = read_model(source)
        if not isinstance(model, (IsingModel, Rbm)):
            raise ParameterError("experiments need an ising-v1 or rbm-v1 model")
        return model
    params = dict(source)
    kind = params.pop("kind", "rbm")
    rng = make_rng(seed)
    if kind == "rbm":
        return random_rbm(rng, **params)
    if kind == "ferromagnet":
        return random_ferromagnet(rng, **params)
    if kind == "latent":
        return random_latent_model(rng, **params)
    raise ParameterError(f"unknown generator kind {kind!r}")


def precision_recall(learned: dict, truth: dict) -> tuple[float, float]:
    """Per-node precision and recall, averaged over nodes (empty sets score 1)."""
    prec, rec = [], []
    for i, true in truth.items():
        got, true = set(learned.get(i, ())), set(true)
        hit = len(got & true)
        prec.append(hit / len(got) if got else 1.0)
        rec.append(hit / len(true) if true else 1.0)
    return float(np.mean(prec)), float(np.mean(rec))


def _oracle_potential(model):
    if isinstance(model, Rbm):
        return rbm_to_mrf(model)
    return fourier_of_log(observed_distribution(model))


def run_trial(spec: ExperimentSpec, trial: int) -> list[dict]:
    """All rows for one trial; failures are recorded per row instead of raised."""
    seed = spec.seed + trial
    base = {"trial": trial, "seed": seed, "learner": spec.learner}
    try:
        model = generate_model(spec.model_source, seed)
    except RbmLearnError as exc:
        log.warning("trial %d: model generation failed: %s", trial, exc)
        return [{**base, "model_hash": "-", "M": M, "status": "error", "reason": str(exc)} for M in spec.M_grid]
    ising = as_ising(model) if isinstance(model, Rbm) else model
    truth = graph_blankets(ising)
    d2 = spec.d2 if spec.d2 is not None else max(1, max(len(v) for v in truth.values()))
    ell = max(1, max_latent_path(ising))
    base["model_hash"] = model_id(model)
    pstar = None
    rows = []
    for M in spec.M_grid:
        row = {**base, "M": M}
        try:
            cfg = default_config(spec.alpha, spec.beta, d2, ell, spec.delta, ising.n_observed, spec.learner)
            if M == THEOREM_M:
                M = row["M"] = cfg.M
            cfg = cfg.replace(M=M)
            samples = sample_exact(ising, M, seed)
            learned = learn_structure(samples, cfg, spec.learner)
            row["exact_recovery"] = learned == truth
            row["precision"], row["recall"] = precision_recall(learned, truth)
            if spec.fit_potential:
                pstar = _oracle_potential(model) if pstar is None else pstar
                fitted = learn_potential(samples, learned, spec.beta, seed=seed)
                row["potential_sup_error"] = fitted.max_abs_diff(pstar)
            row["status"] = "ok"
        except RbmLearnError as exc:
            log.warning("trial %d, M=%s: %s", trial, M, exc)
            row = {**base, "M": row["M"], "status": "error", "reason": str(exc)}
        rows.append(row)
    return rows


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def summarize(spec: ExperimentSpec, rows: list[dict]) -> list[dict]:
    """Recovery frequency and median potential error per grid point."""
    out = []
    for M in sorted({r["M"] for r in rows}, key=lambda v: (isinstance(v, str), v)):
        ok = [r for r in rows if r["M"] == M and r.get("status") == "ok"]
        errs = [r["potential_sup_error"] for r in ok if r.get("potential_sup_error") is not None]
        out.append({
            "trial": "summary", "seed": spec.seed, "model_hash": "-", "M": M, "learner": spec.learner,
            "status": f"{len(ok)}/{sum(r['M'] == M for r in rows)}",
            "exact_recovery": float(np.mean([r["exact_recovery"] for r in ok])) if ok else None,
            "precision": float(np.mean([r["precision"] for r in ok])) if ok else None,
            "recall": float(np.mean([r["recall"] for r in ok])) if ok else None,
            "potential_sup_error": float(np.median(errs)) if errs else None,
        })
    return out


def results_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def run_experiment(spec: ExperimentSpec, write: bool = True) -> list[dict]:
    """Run every trial (in a process pool when ``spec.workers > 1``).

    Rows come back in trial order regardless of scheduling and are written
    by this process only. Returns trial rows followed by summary rows.
    """
    timings = []
    rows: list[dict] = []

    if spec.workers == 1:
        results = [_timed_trial(spec, t) for t in range(spec.trials)]
    else:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_timed_trial, [spec] * spec.trials, range(spec.trials)))
    for t, (trial_rows, seconds) in enumerate(results):
        rows.extend(trial_rows)
        timings.append((t, seconds))
    rows.extend(summarize(spec, rows))
    if write:
        out = Path(spec.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(results_csv(rows))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "seconds"])
        w.writerows((t, f"{s:.3f}") for t, s in timings)
        (out / "timings.csv").write_text(buf.getvalue())
    return rows


def _timed_trial(spec: ExperimentSpec, trial: int):
    start = time.perf_counter()
    out = run_trial(spec, trial)
    return out, time.perf_counter() - start
