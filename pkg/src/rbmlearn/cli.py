"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 model assumption violated
(nondegeneracy, ferromagneticity, Lee-Yang precondition), 3 capacity bound
exceeded, 4 acceptance criteria failed.

Node indices on the command line and in files are 1-based.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import io as fileio
from .convert import mrf_to_rbm, rbm_to_mrf, sparse_parity_rbm
from .errors import AssumptionError, CapacityError, FormatError, ParameterError, RbmLearnError
from .exact import distribution_from_potential, exact_influence
from .experiment import ExperimentSpec, run_experiment
from .generators import random_ferromagnet, random_mrf, random_rbm
from .influence import empirical_influence
from .model import (
    IsingModel,
    MrfPotential,
    NondegeneracyParams,
    Rbm,
    as_ising,
    graph_blankets,
    validate_nondegeneracy,
)
from .partition import approximate_log_z
from .regression import learn_potential
from .sampler import make_rng, sample_exact, sample_gibbs
from .structure import default_config, learn_structure
from .verification import CHECKS, run_suite

EXIT_OK, EXIT_USAGE, EXIT_ASSUMPTION, EXIT_CAPACITY, EXIT_FAILED = 0, 1, 2, 3, 4
MAX_GENERATOR_DRAWS = 200


def _index_list(text: str) -> tuple[int, ...]:
    """Parse ``"1,3"`` into 0-based ``(0, 2)``; the empty string is the empty set."""
    if not text.strip():
        return ()
    try:
        vals = [int(t) for t in text.split(",")]
    except ValueError as exc:
        raise ParameterError(f"bad index list {text!r}") from exc
    if any(v < 1 for v in vals):
        raise ParameterError("indices are 1-based")
    return tuple(v - 1 for v in vals)


def _emit(args, filename: str, text: str) -> None:
    """Write ``text`` to ``<out>/<filename>`` or, without ``--out``, to stdout."""
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / filename).write_text(text)


def _table(args, header: list[str], rows: list[list]) -> None:
    if args.format == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    else:
        for row in rows:
            print("  ".join(f"{k}={v}" for k, v in zip(header, row)))


def _as_ising(model) -> IsingModel:
    if isinstance(model, Rbm):
        return as_ising(model)
    if isinstance(model, IsingModel):
        return model
    raise ParameterError("this command needs an ising-v1 or rbm-v1 model")


def _read_any(path: str):
    text = Path(path).read_text()
    if text.lstrip().startswith("samples-v1"):
        return fileio.loads_samples(text)
    return fileio.loads_model(text)


# subcommands ------------------------------------------------------------------


def cmd_gen_model(args) -> int:
    rng = make_rng(args.seed)
    if args.alpha >= args.beta:
        raise ParameterError("need alpha < beta")
    if args.kind == "rbm":
        model = random_rbm(rng, args.n, args.m, args.degree, args.alpha, args.beta, args.weight_max, args.field_max)
    elif args.kind == "ising":
        params = NondegeneracyParams(args.alpha, args.beta)
        hi = args.weight_max if args.weight_max is not None else args.beta / 2
        for _ in range(MAX_GENERATOR_DRAWS):
            model = random_ferromagnet(rng, args.n, args.edge_prob, (args.alpha, hi), (0.0, args.field_max), args.hidden)
            if validate_nondegeneracy(model, params).passed:
                break
        else:
            raise ParameterError(f"no nondegenerate model found in {MAX_GENERATOR_DRAWS} draws")
    else:
        model = random_mrf(rng, args.n, args.order, args.terms, args.weight_max or 1.0)
    _emit(args, "model.txt", fileio.dumps_model(model))
    if args.out is not None:
        blankets = model.neighborhoods() if isinstance(model, MrfPotential) else graph_blankets(_as_ising(model))
        _emit(args, "blankets.txt", fileio.dumps_structure(blankets))
    return EXIT_OK


def cmd_sample(args) -> int:
    model = _as_ising(fileio.read_model(args.model))
    if args.method == "gibbs":
        samples = sample_gibbs(model, args.M, args.burn_in, args.thinning, args.seed)
    else:
        samples = sample_exact(model, args.M, args.seed)
    if samples.counts is not None:
        raise CapacityError("sample files store one row per draw; lower M")
    _emit(args, "samples.txt", fileio.dumps_samples(samples))
    return EXIT_OK


def cmd_influence(args) -> int:
    src = _read_any(args.input)
    i = _index_list(args.node)
    if len(i) != 1:
        raise ParameterError("--node takes a single index")
    S = _index_list(args.given)
    if isinstance(src, (IsingModel, Rbm, MrfPotential)):
        if isinstance(src, MrfPotential):
            raise ParameterError("influence needs samples or an ising/rbm model")
        value, support = exact_influence(_as_ising(src), i[0], S), ""
    else:
        est = empirical_influence(src, i[0], S)
        value, support = est.value, est.support_count
    _table(args, ["node", "given", "influence", "support"], [[i[0] + 1, args.given, repr(float(value)), support]])
    return EXIT_OK


def _learner_config(args, n: int):
    return default_config(args.alpha, args.beta, args.d2, args.ell, args.delta, n, args.learner)


def cmd_learn_structure(args) -> int:
    src = _read_any(args.input)
    if isinstance(src, (Rbm, IsingModel)):
        src = _as_ising(src)
        if not src.is_ferromagnetic():
            raise AssumptionError("the exact-oracle learners assume a ferromagnetic model")
        n = src.n_observed
    elif isinstance(src, MrfPotential):
        raise ParameterError("learn-structure needs samples or an ising/rbm model")
    else:
        n = src.n_vars
    blankets = learn_structure(src, _learner_config(args, n), args.learner)
    _emit(args, "blankets.txt", fileio.dumps_structure(blankets))
    return EXIT_OK


def cmd_learn_potential(args) -> int:
    samples = fileio.read_samples(args.samples)
    blankets = fileio.read_structure(args.structure)
    fitted = learn_potential(samples, blankets, args.beta, seed=args.seed, tie_rule=args.tie_rule)
    _emit(args, "potential.txt", fileio.dumps_model(fitted))
    return EXIT_OK


def cmd_rbm2mrf(args) -> int:
    rbm = fileio.read_model(args.model)
    if not isinstance(rbm, Rbm):
        raise ParameterError("rbm2mrf needs an rbm-v1 model")
    _emit(args, "potential.txt", fileio.dumps_model(rbm_to_mrf(rbm)))
    return EXIT_OK


def cmd_mrf2rbm(args) -> int:
    mrf = fileio.read_model(args.model)
    if not isinstance(mrf, MrfPotential):
        raise ParameterError("mrf2rbm needs an mrf-v1 model")
    _emit(args, "model.txt", fileio.dumps_model(mrf_to_rbm(mrf, args.gamma)))
    return EXIT_OK


def cmd_parity_rbm(args) -> int:
    rbm = sparse_parity_rbm(args.n, _index_list(args.support), args.eta, args.gamma)
    _emit(args, "model.txt", fileio.dumps_model(rbm))
    return EXIT_OK


def cmd_logz(args) -> int:
    model = fileio.read_model(args.model)
    pot = rbm_to_mrf(model) if isinstance(model, Rbm) else model
    if not isinstance(pot, MrfPotential):
        raise ParameterError("logz needs an rbm-v1 or mrf-v1 model")
    worst = max(pot.coefficient((i,)) for i in range(pot.n_vars))
    if args.H > 0 and worst > -args.H:
        raise AssumptionError(f"largest field {worst:g} exceeds -H = {-args.H:g}")
    approx = approximate_log_z(pot, args.H, args.eps)
    exact = distribution_from_potential(pot).log_z
    err = abs(approx.log_partition - exact)
    _table(
        args,
        ["m", "lambda", "approx", "exact", "abs_error"],
        [[approx.truncation_order, repr(approx.lam), repr(approx.log_partition), repr(exact), repr(err)]],
    )
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.config is None:
        raise ParameterError("experiment needs --config")
    data = json.loads(Path(args.config).read_text())
    if args.out is not None:
        data["output"] = args.out
    if args.workers is not None:
        data["workers"] = args.workers
    spec = ExperimentSpec.from_dict(data)
    rows = run_experiment(spec)
    for r in rows:
        if r["trial"] == "summary":
            print(
                f"M={r['M']} trials_ok={r['status']} recovery={r['exact_recovery']} "
                f"median_potential_error={r['potential_sup_error']}"
            )
    return EXIT_OK


def cmd_verify(args) -> int:
    names = [c.strip().upper() for c in args.criteria.split(",")] if args.criteria else list(CHECKS)
    unknown = [c for c in names if c not in CHECKS]
    if unknown:
        raise ParameterError(f"unknown criteria {unknown}; choose from {list(CHECKS)}")
    results = run_suite(names, args.out, echo=print)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


# parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base random seed")
    common.add_argument("--config", help="JSON file of option defaults (experiment: the sweep description)")
    common.add_argument("--out", help="output directory (default: stdout)")
    common.add_argument("--format", choices=["text", "csv"], default="text", help="tabular output style")

    learner = argparse.ArgumentParser(add_help=False)
    learner.add_argument("--learner", choices=["greedy", "search"], default="greedy")
    learner.add_argument("--alpha", type=float, default=0.2)
    learner.add_argument("--beta", type=float, default=1.0)
    learner.add_argument("--d2", type=int, default=2, help="maximum blanket size")
    learner.add_argument("--ell", type=int, default=2, help="longest latent path in edges")
    learner.add_argument("--delta", type=float, default=0.1)

    p = argparse.ArgumentParser(prog="rbmlearn", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-model", parents=[common], help="draw a random model")
    g.add_argument("kind", choices=["ising", "rbm", "mrf"])
    g.add_argument("--n", type=int, default=6, help="observed nodes")
    g.add_argument("--m", type=int, default=3, help="hidden units (rbm)")
    g.add_argument("--degree", type=int, default=2, help="hidden-unit degree (rbm)")
    g.add_argument("--hidden", type=int, default=0, help="latent nodes (ising)")
    g.add_argument("--edge-prob", type=float, default=0.5, help="edge probability (ising)")
    g.add_argument("--order", type=int, default=3, help="maximum monomial degree (mrf)")
    g.add_argument("--terms", type=int, default=5, help="number of monomials (mrf)")
    g.add_argument("--alpha", type=float, default=0.2)
    g.add_argument("--beta", type=float, default=1.0)
    g.add_argument("--weight-max", type=float, default=None)
    g.add_argument("--field-max", type=float, default=0.0)
    g.set_defaults(func=cmd_gen_model)

    s = sub.add_parser("sample", parents=[common], help="draw samples from a model")
    s.add_argument("model")
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--method", choices=["exact", "gibbs"], default="exact")
    s.add_argument("--burn-in", type=int, default=1000)
    s.add_argument("--thinning", type=int, default=10)
    s.set_defaults(func=cmd_sample)

    i = sub.add_parser("influence", parents=[common], help="influence of a node given a set")
    i.add_argument("input", help="samples file or model file (exact)")
    i.add_argument("--node", required=True)
    i.add_argument("--given", default="", help="comma-separated conditioning set")
    i.set_defaults(func=cmd_influence)

    ls = sub.add_parser("learn-structure", parents=[common, learner], help="estimate every blanket")
    ls.add_argument("input", help="samples file, or a model file for the exact oracle")
    ls.set_defaults(func=cmd_learn_structure)

    lp = sub.add_parser("learn-potential", parents=[common], help="fit the potential on given blankets")
    lp.add_argument("samples")
    lp.add_argument("--structure", required=True)
    lp.add_argument("--beta", type=float, default=1.0, help="coefficient norm bound")
    lp.add_argument("--tie-rule", choices=["min-index", "average"], default="min-index")
    lp.set_defaults(func=cmd_learn_potential)

    r = sub.add_parser("rbm2mrf", parents=[common], help="observed potential of an RBM")
    r.add_argument("model")
    r.set_defaults(func=cmd_rbm2mrf)

    mr = sub.add_parser("mrf2rbm", parents=[common], help="RBM realizing a potential")
    mr.add_argument("model")
    mr.add_argument("--gamma", type=float, default=0.5)
    mr.set_defaults(func=cmd_mrf2rbm)

    pr = sub.add_parser("parity-rbm", parents=[common], help="RBM for sparse parity with noise")
    pr.add_argument("--n", type=int, required=True)
    pr.add_argument("--support", required=True)
    pr.add_argument("--eta", type=float, required=True)
    pr.add_argument("--gamma", type=float, default=0.5)
    pr.set_defaults(func=cmd_parity_rbm)

    lz = sub.add_parser("logz", parents=[common], help="Taylor approximation of log Z")
    lz.add_argument("model")
    lz.add_argument("--H", type=float, required=True, help="field margin: every field is at most -H")
    lz.add_argument("--eps", type=float, default=0.1)
    lz.set_defaults(func=cmd_logz)

    e = sub.add_parser("experiment", parents=[common], help="seeded learning sweep")
    e.add_argument("--workers", type=int, default=None)
    e.set_defaults(func=cmd_experiment)

    v = sub.add_parser("verify", parents=[common], help="run the exact-oracle acceptance checks")
    v.add_argument("--criteria", default="", help="comma-separated subset, e.g. A1,A4")
    v.set_defaults(func=cmd_verify)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    """Parse, then re-parse with ``--config`` values as defaults for the chosen subcommand."""
    args = parser.parse_args(argv)
    if args.config is None or args.command == "experiment":
        return args
    try:
        overrides = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(overrides, dict):
        raise ParameterError("config must be a JSON object")
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sub = subparsers.choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = set(overrides) - known
    if unknown:
        raise ParameterError(f"unknown config keys for {args.command}: {sorted(unknown)}")
    sub.set_defaults(**overrides)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except AssumptionError as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except CapacityError as exc:
        print(f"capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ParameterError, FormatError, OSError, RbmLearnError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
