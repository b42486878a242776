"""Text file formats. All indices in files are 1-based.

Model files start with ``format=ising-v1``, ``format=rbm-v1`` or
``format=mrf-v1``, followed by size lines and one record per line::

    format=ising-v1          format=rbm-v1          format=mrf-v1
    n=3                      n=2                    n=3
    edge 1 3 0.5             m=1                    term 1,2 0.7
    field 2 0.1              edge 1 1 0.4           term 1,2,3 -0.2
    hidden 3                 field1 2 0.1
                             field2 1 0.0

Blank lines and lines starting with ``#`` are ignored; any other unknown
record is an error. Floats are written with ``repr`` so files round-trip
exactly.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import FormatError
from .model import IsingModel, MrfPotential, Rbm, Subset
from .sampler import SampleSet

ModelLike = IsingModel | Rbm | MrfPotential


def _fmt(x: float) -> str:
    return repr(float(x))


def dumps_model(model: ModelLike) -> str:
    lines: list[str] = []
    if isinstance(model, IsingModel):
        lines += ["format=ising-v1", f"n={model.n_nodes}"]
        lines += [f"edge {i + 1} {j + 1} {_fmt(w)}" for (i, j), w in model.interactions.items()]
        lines += [f"field {i + 1} {_fmt(h)}" for i, h in enumerate(model.fields) if h != 0]
        lines += [f"hidden {i + 1}" for i in model.hidden]
    elif isinstance(model, Rbm):
        lines += ["format=rbm-v1", f"n={model.n_observed}", f"m={model.n_hidden}"]
        for j in range(model.n_hidden):
            for i in model.hidden_support(j):
                lines.append(f"edge {i + 1} {j + 1} {_fmt(model.weights[i, j])}")
        lines += [f"field1 {i + 1} {_fmt(h)}" for i, h in enumerate(model.fields_observed) if h != 0]
        lines += [f"field2 {j + 1} {_fmt(h)}" for j, h in enumerate(model.fields_hidden) if h != 0]
    elif isinstance(model, MrfPotential):
        if model.offset != 0:
            raise FormatError("mrf-v1 cannot store a constant term")
        lines += ["format=mrf-v1", f"n={model.n_vars}"]
        lines += [f"term {','.join(str(s + 1) for s in S)} {_fmt(c)}" for S, c in model.terms.items()]
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return "\n".join(lines) + "\n"


def _records(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield lineno, line


def _int(tok: str, lineno: int, lo: int, hi: int) -> int:
    try:
        v = int(tok)
    except ValueError:
        raise FormatError(f"line {lineno}: expected an integer, got {tok!r}") from None
    if not lo <= v <= hi:
        raise FormatError(f"line {lineno}: index {v} outside [{lo}, {hi}]")
    return v


def _float(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise FormatError(f"line {lineno}: expected a number, got {tok!r}") from None


def _size(recs, key: str) -> int:
    try:
        lineno, line = next(recs)
    except StopIteration:
        raise FormatError(f"missing {key}= line") from None
    if not line.startswith(f"{key}="):
        raise FormatError(f"line {lineno}: expected {key}=<int>")
    v = _int(line[len(key) + 1:], lineno, 0, 1 << 40)
    return v


def loads_model(text: str) -> ModelLike:
    recs = _records(text)
    try:
        lineno, header = next(recs)
    except StopIteration:
        raise FormatError("empty model file") from None
    kind = header.removeprefix("format=")
    if kind not in ("ising-v1", "rbm-v1", "mrf-v1") or not header.startswith("format="):
        raise FormatError(f"line {lineno}: unknown header {header!r}")
    n = _size(recs, "n")
    if n < 1:
        raise FormatError("n must be positive")
    try:
        if kind == "ising-v1":
            return _parse_ising(recs, n)
        if kind == "rbm-v1":
            return _parse_rbm(recs, n, _size(recs, "m"))
        return _parse_mrf(recs, n)
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def _parse_ising(recs, n: int) -> IsingModel:
    inter: dict[tuple[int, int], float] = {}
    h = np.zeros(n)
    hidden = np.zeros(n, dtype=bool)
    for lineno, line in recs:
        tok = line.split()
        if tok[0] == "edge" and len(tok) == 4:
            i, j = _int(tok[1], lineno, 1, n) - 1, _int(tok[2], lineno, 1, n) - 1
            key = (min(i, j), max(i, j))
            if key in inter:
                raise FormatError(f"line {lineno}: duplicate edge")
            inter[key] = _float(tok[3], lineno)
        elif tok[0] == "field" and len(tok) == 3:
            h[_int(tok[1], lineno, 1, n) - 1] = _float(tok[2], lineno)
        elif tok[0] == "hidden" and len(tok) == 2:
            hidden[_int(tok[1], lineno, 1, n) - 1] = True
        else:
            raise FormatError(f"line {lineno}: unknown record {line!r}")
    return IsingModel(n, inter, h, hidden)


def _parse_rbm(recs, n: int, m: int) -> Rbm:
    W = np.zeros((n, m))
    h1, h2 = np.zeros(n), np.zeros(m)
    for lineno, line in recs:
        tok = line.split()
        if tok[0] == "edge" and len(tok) == 4:
            W[_int(tok[1], lineno, 1, n) - 1, _int(tok[2], lineno, 1, m) - 1] = _float(tok[3], lineno)
        elif tok[0] == "field1" and len(tok) == 3:
            h1[_int(tok[1], lineno, 1, n) - 1] = _float(tok[2], lineno)
        elif tok[0] == "field2" and len(tok) == 3:
            h2[_int(tok[1], lineno, 1, m) - 1] = _float(tok[2], lineno)
        else:
            raise FormatError(f"line {lineno}: unknown record {line!r}")
    return Rbm(W, h1, h2)


def _parse_mrf(recs, n: int) -> MrfPotential:
    terms: dict[Subset, float] = {}
    for lineno, line in recs:
        tok = line.split()
        if tok[0] == "term" and len(tok) == 3:
            S = tuple(sorted(_int(s, lineno, 1, n) - 1 for s in tok[1].split(",")))
            if S in terms:
                raise FormatError(f"line {lineno}: duplicate term")
            terms[S] = _float(tok[2], lineno)
        else:
            raise FormatError(f"line {lineno}: unknown record {line!r}")
    return MrfPotential(n, terms)


def dumps_samples(samples: SampleSet) -> str:
    header = f"samples-v1 n={samples.n_vars} m={samples.M} seed={samples.seed}"
    if samples.source:
        header += f" source={samples.source}"
    rows = samples.expanded()
    body = ["" if r.size == 0 else " ".join("+1" if v > 0 else "-1" for v in r) for r in rows]
    return "\n".join([header, *body]) + "\n"


def loads_samples(text: str) -> SampleSet:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty sample file")
    tok = lines[0].split()
    if not tok or tok[0] != "samples-v1":
        raise FormatError("missing samples-v1 header")
    meta: dict[str, str] = {}
    for t in tok[1:]:
        key, sep, val = t.partition("=")
        if not sep or key not in ("n", "m", "seed", "source"):
            raise FormatError(f"bad header field {t!r}")
        meta[key] = val
    try:
        n, M, seed = int(meta["n"]), int(meta["m"]), int(meta["seed"])
    except (KeyError, ValueError):
        raise FormatError("header needs integer n, m and seed") from None
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != M:
        raise FormatError(f"header declares {M} rows, found {len(body)}")
    rows = np.zeros((M, n), dtype=np.int8)
    for r, ln in enumerate(body):
        vals = ln.split()
        if len(vals) != n:
            raise FormatError(f"row {r + 1} has {len(vals)} entries, expected {n}")
        for c, v in enumerate(vals):
            if v in ("+1", "1"):
                rows[r, c] = 1
            elif v == "-1":
                rows[r, c] = -1
            else:
                raise FormatError(f"row {r + 1}: entry {v!r} is not +1/-1")
    return SampleSet(n, rows, seed, meta.get("source", ""))


def dumps_structure(blankets: Mapping[int, Subset]) -> str:
    lines = ["structure-v1"]
    for i in sorted(blankets):
        members = " ".join(str(j + 1) for j in sorted(blankets[i]))
        lines.append(f"nbhd {i + 1}: {members}".rstrip())
    return "\n".join(lines) + "\n"


def loads_structure(text: str) -> dict[int, Subset]:
    recs = _records(text)
    try:
        lineno, header = next(recs)
    except StopIteration:
        raise FormatError("empty structure file") from None
    if header != "structure-v1":
        raise FormatError(f"line {lineno}: expected structure-v1 header")
    out: dict[int, Subset] = {}
    for lineno, line in recs:
        head, sep, rest = line.partition(":")
        tok = head.split()
        if not sep or len(tok) != 2 or tok[0] != "nbhd":
            raise FormatError(f"line {lineno}: unknown record {line!r}")
        i = _int(tok[1], lineno, 1, 1 << 40) - 1
        out[i] = tuple(sorted(_int(t, lineno, 1, 1 << 40) - 1 for t in rest.split()))
    return out


def read_model(path) -> ModelLike:
    return loads_model(Path(path).read_text())


def write_model(path, model: ModelLike) -> None:
    Path(path).write_text(dumps_model(model))


def read_samples(path) -> SampleSet:
    return loads_samples(Path(path).read_text())


def write_samples(path, samples: SampleSet) -> None:
    Path(path).write_text(dumps_samples(samples))


def read_structure(path) -> dict[int, Subset]:
    return loads_structure(Path(path).read_text())


def write_structure(path, blankets: Mapping[int, Subset]) -> None:
    Path(path).write_text(dumps_structure(blankets))
