"""Command line: replay update streams, generate workloads, compare with static baselines.

    dyncoreset gen insert_only --n 1000 --d 2 --k 3 --out s.txt
    dyncoreset run s.txt --k 3 --exact --no-timing
    dyncoreset bench s.txt --k 3 --cap 60

Exit codes: 0 ok, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from .clusterer import Clusterer
from .core import CostParams, Metric, ops
from .epoch import EpochState
from .static import query_solve, solution_for
from .workload import PROFILES, StreamError, gen_workload, format_stream, parse_stream

SCHEMA_VERSION = 1

DEFAULTS = {"k": 3, "epsilon": 0.2, "delta": 0.1, "z": 2, "seed": 0, "metric": "euclidean",
            "coreset_scale": 1.0, "large_group_scale": 1.0, "exact": False, "no_timing": False,
            "out": None}
_TYPES = {"k": int, "z": int, "seed": int, "epsilon": float, "delta": float, "coreset_scale": float,
          "large_group_scale": float, "metric": str, "out": str, "exact": None, "no_timing": None}


class UsageError(Exception):
    pass


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {v!r}")


def read_config(path: str) -> dict:
    """``key=value`` lines; ``#`` comments; keys as the long flag names."""
    out = {}
    try:
        f = open(path)
    except OSError as e:
        raise UsageError(f"cannot read config: {e}") from None
    with f:
        for no, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{no}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _TYPES:
                raise UsageError(f"{path}:{no}: unknown key {key!r}")
            conv = _TYPES[key] or _bool
            try:
                out[key] = conv(val)
            except ValueError:
                raise UsageError(f"{path}:{no}: bad value for {key}: {val!r}") from None
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    """Flags override the config file, which overrides the defaults."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(read_config(args.config))
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None and v is not False:
            cfg[key] = v
    return cfg


def make_metric(spec: str, d: int | None) -> Metric:
    if spec == "euclidean":
        return Metric.euclidean(d or 1)
    if spec.startswith("matrix:"):
        try:
            M = np.loadtxt(spec[len("matrix:"):], ndmin=2)
        except (OSError, ValueError) as e:
            raise UsageError(f"cannot load distance matrix: {e}") from None
        return Metric.from_matrix(M)
    raise UsageError(f"unknown metric {spec!r}; use euclidean or matrix:<path>")


def _params(cfg: dict) -> CostParams:
    try:
        return CostParams(k=cfg["k"], z=cfg["z"], epsilon=cfg["epsilon"], delta=cfg["delta"], seed=cfg["seed"],
                          coreset_scale=cfg["coreset_scale"], large_group_scale=cfg["large_group_scale"])
    except ValueError as e:
        raise UsageError(str(e)) from None


def _dim(stream) -> int | None:
    for op in stream:
        if op.kind == "I":
            return len(op.coords)
    return None


def _coords(op, metric: Metric):
    if metric.is_euclidean:
        return np.asarray(op.coords, dtype=float)
    if len(op.coords) != 1 or op.coords[0] != int(op.coords[0]):
        raise StreamError("matrix metric expects a single integer point index", op.line)
    return int(op.coords[0])


def run(stream, cfg: dict, emit) -> dict:
    """Replay ``stream`` through a Clusterer, calling ``emit(record)`` for each JSONL record."""
    timing = not cfg["no_timing"]
    d = _dim(stream)
    metric = make_metric(cfg["metric"], d)
    if metric.is_euclidean and d is not None and d != metric.d:
        raise StreamError(f"stream has dimension {d}")
    params = _params(cfg)
    c = Clusterer(metric, params=params)
    echo = {k: cfg[k] for k in sorted(cfg) if k != "out"}
    emit({"type": "header", "schema": SCHEMA_VERSION, "config": echo})
    ops.reset()
    ext_id: dict[int, int] = {}
    restarts = rebuilds = 0
    n_upd = 0
    for i, op in enumerate(stream):
        before = ops.total
        t0 = time.perf_counter_ns()
        try:
            if op.kind == "I":
                ext_id[op.id] = c.insert(_coords(op, metric))
            elif op.kind == "D":
                if op.id not in ext_id:
                    raise StreamError(f"delete of unknown id {op.id}", op.line)
                c.delete(ext_id.pop(op.id))
            else:
                q = c.query(op.k, exact=cfg["exact"], seed=i)
                rec = {"type": "query", "index": i, "k": op.k, "size": len(c), "coreset_size": q.coreset_size,
                       "estimated_cost": q.coreset_cost}
                if cfg["exact"]:
                    rec["exact_cost"] = q.true_cost
                if timing:
                    rec["ns"] = time.perf_counter_ns() - t0
                emit(rec)
                continue
        except (ValueError, KeyError, IndexError) as e:
            if isinstance(e, StreamError):
                raise
            raise StreamError(f"op {i}: {e}", op.line) from None
        n_upd += 1
        rec = {"type": "op_applied", "index": i, "op": op.kind, "id": op.id, "size": len(c),
               "ops": ops.total - before}
        if timing:
            rec["ns"] = time.perf_counter_ns() - t0
        emit(rec)
        t = c.tree
        if t.restarts != restarts:
            emit({"type": "epoch_restart", "index": i, "count": t.restarts - restarts, "total": t.restarts})
            restarts = t.restarts
        if t.rebuilds != rebuilds:
            emit({"type": "rebuild", "index": i, "size": len(c), "total": t.rebuilds})
            rebuilds = t.rebuilds
    st = c.stats()
    summary = {"type": "summary", "updates": n_upd, "size": st["size"], "epoch_restarts": st["epoch_restarts"],
               "rebuilds": st["rebuilds"], "churn_ins": st["churn_ins"], "churn_del": st["churn_del"],
               "height": st["height"], "coreset_size": st["coreset_size"], "total_ops": ops.total,
               "ops_per_update": ops.total / n_upd if n_upd else 0.0}
    if timing:
        summary["update_ns"] = st["update_ns"]
    emit(summary)
    return summary


def bench_compare(stream, cfg: dict, cap: float = 60.0) -> dict:
    """Dynamic engine against (b) a static solve at every query and (c) a static
    coreset rebuilt from scratch after every update."""
    d = _dim(stream)
    metric = make_metric(cfg["metric"], d)
    params = _params(cfg)
    z = params.z
    rep: dict = {"updates": sum(op.kind != "Q" for op in stream), "queries": sum(op.kind == "Q" for op in stream)}

    # (a) dynamic engine
    c = Clusterer(metric, params=params)
    ext: dict[int, int] = {}
    ops.reset()
    t0 = time.perf_counter()
    dyn_costs, snapshots = [], []
    upd_ops = 0
    for i, op in enumerate(stream):
        if op.kind == "Q":
            q = c.query(op.k, exact=True, seed=i)
            dyn_costs.append(q.true_cost)
            snapshots.append((i, op.k, c.points()))
            continue
        before = ops.total
        if op.kind == "I":
            ext[op.id] = c.insert(_coords(op, metric))
        else:
            c.delete(ext.pop(op.id))
        upd_ops += ops.total - before
    rep["dynamic"] = {"seconds": time.perf_counter() - t0, "update_ops": upd_ops, "query_costs": dyn_costs}

    # (b) static solve on the full live data at each query
    ops.reset()
    t0 = time.perf_counter()
    stat_costs = []
    for i, k, P in snapshots:
        if len(P) == 0:
            stat_costs.append(0.0)
            continue
        rng = c.query_rng(i)
        sol = query_solve(P, metric, k, z, rng, restrict_to_coreset=not metric.is_euclidean)
        stat_costs.append(solution_for(P, sol.centers, metric, z).total_cost)
    rep["static_query"] = {"seconds": time.perf_counter() - t0, "ops": ops.total, "query_costs": stat_costs}
    rep["quality_ratio"] = [a / b if b > 0 else (1.0 if a == 0 else math.inf) for a, b in zip(dyn_costs, stat_costs)]

    # (c) static coreset recomputed after every update, skipped past the cap
    live: dict[int, np.ndarray] = {}
    rng = np.random.default_rng(params.seed)
    ops.reset()
    t0 = time.perf_counter()
    done = 0
    skipped = None
    for op in stream:
        if op.kind == "Q":
            continue
        if op.kind == "I":
            live[op.id] = _coords(op, metric)
        else:
            del live[op.id]
        if live:
            ids = np.fromiter(live.keys(), dtype=np.int64, count=len(live))
            locs = metric.as_locations(np.array(list(live.values())))
            from .core import PointSet
            EpochState(PointSet(ids, locs, np.ones(len(ids))), params, metric, rng, strict=False)
        done += 1
        el = time.perf_counter() - t0
        if done < rep["updates"] and el / done * rep["updates"] > cap and done >= 5:
            skipped = f"projected {el / done * rep['updates']:.0f}s exceeds cap of {cap:.0f}s"
            break
    rec = {"seconds": time.perf_counter() - t0, "updates_done": done, "update_ops": ops.total}
    if skipped:
        rec["skipped"] = skipped
        rec["projected_update_ops"] = ops.total / max(done, 1) * rep["updates"]
    rep["static_coreset"] = rec
    full = rec.get("projected_update_ops", rec["update_ops"])
    rep["work_ratio"] = full / upd_ops if upd_ops else math.inf
    return rep


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--z", type=int, choices=(1, 2))
    p.add_argument("--seed", type=int)
    p.add_argument("--metric", help="euclidean or matrix:<path>")
    p.add_argument("--coreset-scale", dest="coreset_scale", type=float)
    p.add_argument("--large-group-scale", dest="large_group_scale", type=float)
    p.add_argument("--config", help="file of key=value lines")
    p.add_argument("--out", help="output path (default stdout)")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="dyncoreset", description="Fully dynamic (k, z)-clustering over a maintained coreset.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="replay a stream, write JSONL")
    r.add_argument("stream")
    _add_engine_flags(r)
    r.add_argument("--exact", action="store_true", default=None, help="also report exact cost at each query")
    r.add_argument("--no-timing", dest="no_timing", action="store_true", default=None,
                   help="omit timing fields (byte-reproducible output)")
    g = sub.add_parser("gen", help="write a synthetic stream")
    g.add_argument("profile", choices=PROFILES)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--window", type=int, default=100)
    g.add_argument("--p-delete", dest="p_delete", type=float, default=0.3)
    g.add_argument("--blobs", type=int)
    g.add_argument("--query-every", dest="query_every", type=int, default=0)
    g.add_argument("--out")
    b = sub.add_parser("bench", help="compare against static baselines, write JSON")
    b.add_argument("stream")
    _add_engine_flags(b)
    b.add_argument("--cap", type=float, default=60.0, help="seconds allowed for the per-update baseline")
    return ap


def _open_out(path):
    if path is None:
        return sys.stdout, False
    try:
        return open(path, "w"), True
    except OSError as e:
        raise UsageError(f"cannot write {path}: {e}") from None


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.cmd == "gen":
            stream = gen_workload(args.profile, args.n, args.d, args.k, np.random.default_rng(args.seed),
                                  window=args.window, p_delete=args.p_delete, blobs=args.blobs,
                                  query_every=args.query_every)
            f, close = _open_out(args.out)
            f.write(format_stream(stream))
            if close:
                f.close()
            return 0
        cfg = resolve_config(args)
        try:
            stream = parse_stream(args.stream)
        except OSError as e:
            raise UsageError(f"cannot read stream: {e}") from None
        f, close = _open_out(cfg["out"])
        try:
            if args.cmd == "run":
                run(stream, cfg, lambda rec: f.write(json.dumps(rec) + "\n"))
            else:
                f.write(json.dumps(bench_compare(stream, cfg, args.cap), indent=2) + "\n")
        finally:
            if close:
                f.close()
        return 0
    except UsageError as e:
        print(f"dyncoreset: usage error: {e}", file=sys.stderr)
        return 1
    except (StreamError, ValueError) as e:
        print(f"dyncoreset: data error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
