"""Update streams: a plain-text format and synthetic workload generators.

One op per line::

    I <id> <x1> ... <xd>     insert
    D <id>                   delete
    Q <k>                    query

Blank lines and ``#`` comments are ignored.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field

import numpy as np

PROFILES = ("insert_only", "sliding_window", "random_mix", "blob_churn")


class StreamError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass(frozen=True)
class StreamOp:
    kind: str                      # "I", "D" or "Q"
    id: int | None = None
    coords: tuple = ()
    k: int | None = None
    line: int | None = field(default=None, compare=False)


def parse_stream(src) -> list[StreamOp]:
    """Parse a stream from a path or from an iterable of lines (e.g. an open file)."""
    if isinstance(src, (str, os.PathLike)):
        with open(src) as f:
            return _parse_lines(f)
    return _parse_lines(src)


def parse_text(text: str) -> list[StreamOp]:
    return _parse_lines(io.StringIO(text))


def _parse_lines(lines) -> list[StreamOp]:
    out: list[StreamOp] = []
    seen: set[int] = set()
    live: set[int] = set()
    dim = None
    for no, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        tok = text.split()
        kind = tok[0]
        try:
            if kind == "I":
                if len(tok) < 3:
                    raise StreamError("insert needs an id and coordinates", no)
                pid = int(tok[1])
                coords = tuple(float(x) for x in tok[2:])
                if dim is None:
                    dim = len(coords)
                elif len(coords) != dim:
                    raise StreamError(f"expected {dim} coordinates, got {len(coords)}", no)
                if pid in seen:
                    raise StreamError(f"duplicate insert id {pid}", no)
                seen.add(pid)
                live.add(pid)
                out.append(StreamOp("I", pid, coords, line=no))
            elif kind == "D":
                if len(tok) != 2:
                    raise StreamError("delete takes exactly one id", no)
                pid = int(tok[1])
                if pid not in live:
                    raise StreamError(f"delete of unknown id {pid}", no)
                live.remove(pid)
                out.append(StreamOp("D", pid, line=no))
            elif kind == "Q":
                if len(tok) != 2:
                    raise StreamError("query takes exactly one k", no)
                k = int(tok[1])
                if k < 1:
                    raise StreamError("query k must be positive", no)
                out.append(StreamOp("Q", k=k, line=no))
            else:
                raise StreamError(f"unknown op {kind!r}", no)
        except ValueError as e:
            if isinstance(e, StreamError):
                raise
            raise StreamError(f"malformed number ({e})", no) from None
    return out


def format_stream(ops) -> str:
    lines = []
    for op in ops:
        if op.kind == "I":
            lines.append("I %d %s" % (op.id, " ".join(repr(float(x)) for x in op.coords)))
        elif op.kind == "D":
            lines.append("D %d" % op.id)
        else:
            lines.append("Q %d" % op.k)
    return "\n".join(lines) + ("\n" if lines else "")


def _blobs(n, d, nb, rng, spread=10.0, std=1.0):
    centers = rng.uniform(-spread, spread, size=(nb, d))
    lab = rng.integers(nb, size=n)
    return centers[lab] + rng.normal(scale=std, size=(n, d)), lab


def gen_workload(profile: str, n: int, d: int, k: int, rng: np.random.Generator, *,
                 window: int = 100, p_delete: float = 0.3, blobs: int | None = None,
                 query_every: int = 0) -> list[StreamOp]:
    """Synthetic stream.

    insert_only: n inserts.  sliding_window: n inserts, after each insert
    beyond ``window`` the oldest live point is deleted.  random_mix: n ops,
    each a delete of a random live point with probability ``p_delete``
    (an insert otherwise).  blob_churn: n points from ``blobs`` Gaussian blobs
    (default k + 2), then whole blobs are deleted one by one until one remains,
    with a query before and after every blob deletion.  ``query_every`` adds a
    ``Q k`` after that many ops.
    """
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; expected one of {', '.join(PROFILES)}")
    if n < 0 or d < 1 or k < 1:
        raise ValueError("need n >= 0, d >= 1, k >= 1")
    out: list[StreamOp] = []
    since_q = 0

    def emit(op):
        nonlocal since_q
        out.append(op)
        since_q += 1
        if query_every and since_q >= query_every:
            out.append(StreamOp("Q", k=k))
            since_q = 0

    def ins(i, x):
        emit(StreamOp("I", i, tuple(float(v) for v in x)))

    if profile == "insert_only":
        X, _ = _blobs(n, d, k, rng)
        for i in range(n):
            ins(i, X[i])
    elif profile == "sliding_window":
        if window < 1:
            raise ValueError("window must be positive")
        X, _ = _blobs(n, d, k, rng)
        for i in range(n):
            ins(i, X[i])
            if i >= window:
                emit(StreamOp("D", i - window))
    elif profile == "random_mix":
        if not 0 <= p_delete < 1:
            raise ValueError("p_delete must lie in [0, 1)")
        X, _ = _blobs(n, d, k, rng)
        live: list[int] = []
        nxt = 0
        for _ in range(n):
            if live and rng.random() < p_delete:
                j = int(rng.integers(len(live)))
                victim = live[j]
                live[j] = live[-1]
                live.pop()
                emit(StreamOp("D", victim))
            else:
                live.append(nxt)
                ins(nxt, X[nxt])
                nxt += 1
    else:
        nb = blobs if blobs is not None else k + 2
        if nb < 1:
            raise ValueError("need at least one blob")
        X, lab = _blobs(n, d, nb, rng)
        for i in range(n):
            ins(i, X[i])
        out.append(StreamOp("Q", k=k))
        for b in rng.permutation(nb)[:-1].tolist():
            for i in np.nonzero(lab == b)[0].tolist():
                emit(StreamOp("D", i))
            out.append(StreamOp("Q", k=k))
    return out
