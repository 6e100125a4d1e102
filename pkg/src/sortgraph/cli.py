"""Command-line interface: benchmarks, analytics runs, self-verification.

JSON reports are objects with a stable key order (command, params, then
results); CSV output for seeded commands is deterministic so runs can be
diffed.  Errors print one machine-parsable `error: ...` line on stderr and
exit nonzero.
"""

from __future__ import annotations

import json
import math
import sys
import threading
import time

import click
import numpy as np

from . import analytics as alg
from .graph import GraphStore, GraphError
from .optimizer import UniverseSpec, baseline_config, expected_space, optimize
from .index import slot_count_for_ids
from .oracle import OracleError
from .workloads import (
    DISTRIBUTIONS,
    WORKLOADS,
    apply_ops,
    gen_ops,
    replay,
    unique_ids,
)


def _fail(msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(2)


def _emit(payload: dict, fmt: str, out, csv_header=None, csv_rows=None):
    if fmt == "json":
        text = json.dumps(payload, indent=2)
    else:
        lines = [",".join(csv_header)]
        lines.extend(",".join(str(c) for c in row) for row in csv_rows)
        text = "\n".join(lines)
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        click.echo(text)


def _read_edge_file(path: str, id_bits: int):
    """Parse `src dst [weight]` lines; # starts a comment, blank lines are
    skipped, a zero weight is remapped to the smallest positive float."""
    edges = []
    limit = 1 << id_bits
    try:
        f = open(path, "r", encoding="utf-8")
    except OSError as e:
        _fail(str(e))
    with f:
        for ln, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                _fail(f"{path}:{ln}: expected 'src dst [weight]', got {len(parts)} fields")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                _fail(f"{path}:{ln}: vertex ids must be integers")
            if u < 0 or v < 0:
                _fail(f"{path}:{ln}: negative vertex id")
            if u >= limit or v >= limit:
                _fail(f"{path}:{ln}: id {max(u, v)} does not fit in {id_bits} bits")
            w = 1.0
            if len(parts) == 3:
                try:
                    w = float(parts[2])
                except ValueError:
                    _fail(f"{path}:{ln}: bad weight {parts[2]!r}")
            if w == 0.0:
                w = math.ulp(0.0)
                click.echo(f"warning: {path}:{ln}: zero weight remapped to {w}", err=True)
            edges.append((u, v, w))
    return edges


def _load_graph(path: str, undirected: bool, id_bits: int, layers):
    edges = _read_edge_file(path, id_bits)
    vset = {u for u, _, _ in edges} | {v for _, v, _ in edges}
    store = GraphStore(id_bits=id_bits, layers=layers,
                       expected_vertices=max(1, len(vset)), adaptive="off")
    t0 = time.perf_counter()
    for u, v, w in edges:
        store.insert_edge(u, v, w)
        if undirected:
            store.insert_edge(v, u, w)
    dur = time.perf_counter() - t0
    n_edges = len(edges) * (2 if undirected else 1)
    return store, len(vset), n_edges, dur


_graph_options = [
    click.option("--graph", "path", required=True,
                 type=click.Path(exists=True, dir_okay=False), help="Edge-list file."),
    click.option("--undirected", is_flag=True, help="Also insert every reverse edge."),
    click.option("--id-bits", default=32, show_default=True, type=click.IntRange(1, 62)),
    click.option("--l", "layers", default=None, type=click.IntRange(1),
                 help="Index layer count (default: planner's choice)."),
    click.option("--format", "fmt", default="json", show_default=True,
                 type=click.Choice(["json", "csv"])),
    click.option("--out", default=None, type=click.Path(dir_okay=False), help="Write output here instead of stdout."),
]


def _with(options):
    def deco(f):
        for opt in reversed(options):
            f = opt(f)
        return f
    return deco


@click.group()
@click.version_option(package_name="sortgraph")
def main():
    """Dynamic graph store benchmarks and analytics."""


@main.command("optimize")
@click.option("--id-bits", default=32, show_default=True, type=click.IntRange(1, 62))
@click.option("-n", "--expected-n", "n", required=True, type=click.IntRange(1),
              help="Expected number of vertices.")
@click.option("--l", "layers", default=None, type=click.IntRange(1))
@click.option("--prune/--no-prune", default=True, show_default=True,
              help="Use the search-space pruning bound (same answer either way).")
@click.option("--format", "fmt", default="json", show_default=True,
              type=click.Choice(["json", "csv"]))
@click.option("--out", default=None, type=click.Path(dir_okay=False))
def optimize_cmd(id_bits, n, layers, prune, fmt, out):
    """Plan per-layer index fanouts for an expected vertex count."""
    try:
        spec = UniverseSpec(id_bits, n, layers)
    except ValueError as e:
        _fail(str(e))
    t0 = time.perf_counter()
    cfg = optimize(spec, prune=prune)
    dur = time.perf_counter() - t0
    slots = expected_space(cfg, spec)
    payload = {
        "command": "optimize",
        "params": {"id_bits": id_bits, "n": n, "l": spec.layers, "prune": prune},
        "fanouts": list(cfg.fanouts),
        "expected_slots": slots,
        "expected_index_bytes": slots * 8,
        "duration_sec": dur,
    }
    rows = [(i, a) for i, a in enumerate(cfg.fanouts)]
    _emit(payload, fmt, out, csv_header=("layer", "fanout_bits"), csv_rows=rows)


@main.command()
@_with(_graph_options)
def ingest(path, undirected, id_bits, layers, fmt, out):
    """Load an edge-list file and report throughput and memory."""
    store, n_vertices, n_edges, dur = _load_graph(path, undirected, id_bits, layers)
    mem = store.memory_report()
    payload = {
        "command": "ingest",
        "params": {"graph": path, "undirected": undirected, "id_bits": id_bits},
        "fanouts": list(store.config.fanouts),
        "vertices": n_vertices,
        "edges": n_edges,
        "duration_sec": dur,
        "throughput_ops_per_sec": n_edges / dur if dur > 0 else None,
        "memory": mem.as_dict(),
    }
    rows = sorted(mem.as_dict().items())
    _emit(payload, fmt, out, csv_header=("metric", "value"), csv_rows=rows)


@main.command()
@click.option("--workload", default="mixed", show_default=True,
              type=click.Choice(sorted(WORKLOADS)))
@click.option("--ops", "n_ops", default=100_000, show_default=True,
              type=click.IntRange(1))
@click.option("--dist", default="uniform", show_default=True,
              type=click.Choice(DISTRIBUTIONS))
@click.option("--threads", default=1, show_default=True, type=click.IntRange(1, 256))
@click.option("--seed", default=0, show_default=True)
@click.option("--id-bits", default=32, show_default=True, type=click.IntRange(1, 62))
@click.option("--l", "layers", default=None, type=click.IntRange(1))
@click.option("--format", "fmt", default="json", show_default=True,
              type=click.Choice(["json", "csv"]))
@click.option("--out", default=None, type=click.Path(dir_okay=False))
def bench(workload, n_ops, dist, threads, seed, id_bits, layers, fmt, out):
    """Drive a generated workload through the store and time it."""
    rng = np.random.default_rng(seed)
    ops = gen_ops(rng, n_ops, id_bits, workload, dist)
    store = GraphStore(id_bits=id_bits, layers=layers,
                       expected_vertices=max(16, n_ops // 8))
    series = []
    accepted = 0
    t0 = time.perf_counter()
    if threads == 1:
        chunk = max(1, n_ops // 10)
        for lo in range(0, n_ops, chunk):
            part = ops[lo:lo + chunk]
            c0 = time.perf_counter()
            records, _ = apply_ops(store, part)
            series.append({"ops": len(part), "seconds": time.perf_counter() - c0})
            accepted += len(records)
    else:
        bounds = np.linspace(0, n_ops, threads + 1, dtype=int)
        results = [None] * threads
        def run(i):
            part = ops[bounds[i]:bounds[i + 1]]
            c0 = time.perf_counter()
            records, _ = apply_ops(store, part)
            results[i] = {"thread": i, "ops": len(part),
                          "seconds": time.perf_counter() - c0,
                          "accepted": len(records)}
        workers = [threading.Thread(target=run, args=(i,)) for i in range(threads)]
        for th in workers:
            th.start()
        for th in workers:
            th.join()
        series = results
        accepted = sum(r["accepted"] for r in results)
    dur = time.perf_counter() - t0
    payload = {
        "command": "bench",
        "params": {"workload": workload, "ops": n_ops, "dist": dist,
                   "threads": threads, "seed": seed, "id_bits": id_bits},
        "throughput_ops_per_sec": n_ops / dur if dur > 0 else None,
        "duration_sec": dur,
        "accepted_ops": accepted,
        "live_vertices": store.n_live,
        "compactions": store._estore.compactions,
        "compaction_entry_visits": store._estore.visits,
        "memory": store.memory_report().as_dict(),
        "series": series,
    }
    rows = [("throughput_ops_per_sec", payload["throughput_ops_per_sec"]),
            ("duration_sec", dur), ("accepted_ops", accepted)]
    rows += sorted(store.memory_report().as_dict().items())
    _emit(payload, fmt, out, csv_header=("metric", "value"), csv_rows=rows)


@main.command("compare-index")
@click.option("--sizes", default="1000,10000,100000", show_default=True,
              help="Comma-separated vertex counts.")
@click.option("--seeds", default=3, show_default=True, type=click.IntRange(1))
@click.option("--id-bits", default=32, show_default=True, type=click.IntRange(8, 62))
@click.option("--l", "layers", default=None, type=click.IntRange(1))
@click.option("--format", "fmt", default="csv", show_default=True,
              type=click.Choice(["json", "csv"]))
@click.option("--out", default=None, type=click.Path(dir_okay=False))
def compare_index(sizes, seeds, id_bits, layers, fmt, out):
    """Index bytes under the planned layout vs halving and byte-split
    baselines, on identical uniform id sets (exact slot counts)."""
    try:
        ns = [int(s) for s in sizes.split(",") if s]
    except ValueError:
        _fail(f"bad --sizes value {sizes!r}")
    veb = baseline_config("veb", id_bits)
    uniform = baseline_config("uniform", id_bits, max(1, id_bits // 8))
    rows = []
    for n in ns:
        planned = optimize(UniverseSpec(id_bits, n, layers))
        for seed in range(seeds):
            rng = np.random.default_rng((n, seed))
            ids = unique_ids(rng, n, id_bits)
            rows.append((
                n, seed,
                slot_count_for_ids(planned, ids) * 8,
                slot_count_for_ids(veb, ids) * 8,
                slot_count_for_ids(uniform, ids) * 8,
            ))
    payload = {
        "command": "compare-index",
        "params": {"sizes": ns, "seeds": seeds, "id_bits": id_bits},
        "configs": {"planned_l": None if layers is None else layers,
                    "veb": list(veb.fanouts), "uniform": list(uniform.fanouts)},
        "rows": [dict(zip(("n", "seed", "planned_bytes", "veb_bytes",
                           "uniform_bytes"), r)) for r in rows],
    }
    _emit(payload, fmt, out,
          csv_header=("n", "seed", "planned_bytes", "veb_bytes", "uniform_bytes"),
          csv_rows=rows)


def _result_rows(result: dict, value_name: str):
    return [(vid, result[vid]) for vid in sorted(result)]


@main.group()
def analytics():
    """Run one algorithm over an edge-list file."""


def _analytics_emit(command, params, result, value_name, fmt, out):
    payload = {
        "command": f"analytics/{command}",
        "params": params,
        "result": [[vid, val] for vid, val in _result_rows(result, value_name)],
    }
    _emit(payload, fmt, out, csv_header=("vertex_id", value_name),
          csv_rows=_result_rows(result, value_name))


@analytics.command("bfs")
@_with(_graph_options)
@click.option("--source", required=True, type=int)
def bfs_cmd(path, undirected, id_bits, layers, fmt, out, source):
    """Hop distances from a source vertex."""
    store, *_ = _load_graph(path, undirected, id_bits, layers)
    try:
        res = alg.bfs(store, source)
    except GraphError as e:
        _fail(str(e))
    _analytics_emit("bfs", {"graph": path, "source": source,
                            "undirected": undirected}, res, "hops", fmt, out)


@analytics.command("sssp")
@_with(_graph_options)
@click.option("--source", required=True, type=int)
def sssp_cmd(path, undirected, id_bits, layers, fmt, out, source):
    """Shortest weighted distances from a source vertex."""
    store, *_ = _load_graph(path, undirected, id_bits, layers)
    try:
        res = alg.sssp(store, source)
    except GraphError as e:
        _fail(str(e))
    _analytics_emit("sssp", {"graph": path, "source": source,
                             "undirected": undirected}, res, "distance", fmt, out)


@analytics.command("khop")
@_with(_graph_options)
@click.option("--source", required=True, type=int)
@click.option("--k", required=True, type=click.IntRange(0))
def khop_cmd(path, undirected, id_bits, layers, fmt, out, source, k):
    """Vertices within k hops of a source (source excluded)."""
    store, *_ = _load_graph(path, undirected, id_bits, layers)
    try:
        res = alg.khop(store, source, k)
    except GraphError as e:
        _fail(str(e))
    as_dict = {vid: 1 for vid in res}
    _analytics_emit("khop", {"graph": path, "source": source, "k": k,
                             "undirected": undirected}, as_dict, "reached", fmt, out)


@analytics.command("pagerank")
@_with(_graph_options)
@click.option("--iters", default=20, show_default=True, type=click.IntRange(1))
@click.option("--damping", default=0.85, show_default=True)
def pagerank_cmd(path, undirected, id_bits, layers, fmt, out, iters, damping):
    """PageRank scores (no dangling redistribution)."""
    store, *_ = _load_graph(path, undirected, id_bits, layers)
    res = alg.pagerank(store, iterations=iters, damping=damping)
    _analytics_emit("pagerank", {"graph": path, "iters": iters,
                                 "damping": damping, "undirected": undirected},
                    res, "score", fmt, out)


@analytics.command("wcc")
@_with(_graph_options)
def wcc_cmd(path, undirected, id_bits, layers, fmt, out):
    """Weakly connected component labels (smallest member id)."""
    store, *_ = _load_graph(path, undirected, id_bits, layers)
    res = alg.wcc(store)
    _analytics_emit("wcc", {"graph": path, "undirected": undirected},
                    res, "component", fmt, out)


@analytics.command("tc")
@_with(_graph_options)
def tc_cmd(path, undirected, id_bits, layers, fmt, out):
    """Triangle count over the undirected view."""
    store, *_ = _load_graph(path, undirected, id_bits, layers)
    count = alg.triangle_count(store)
    payload = {"command": "analytics/tc",
               "params": {"graph": path, "undirected": undirected},
               "triangles": count}
    _emit(payload, fmt, out, csv_header=("metric", "value"),
          csv_rows=[("triangles", count)])


@analytics.command("bc")
@_with(_graph_options)
@click.option("--sources", required=True,
              help="Comma-separated source vertex ids.")
def bc_cmd(path, undirected, id_bits, layers, fmt, out, sources):
    """Betweenness centrality accumulated from the given sources."""
    try:
        srcs = [int(s) for s in sources.split(",") if s]
    except ValueError:
        _fail(f"bad --sources value {sources!r}")
    if not srcs:
        _fail("--sources is empty")
    store, *_ = _load_graph(path, undirected, id_bits, layers)
    try:
        res = alg.betweenness(store, srcs)
    except GraphError as e:
        _fail(str(e))
    _analytics_emit("bc", {"graph": path, "sources": srcs,
                           "undirected": undirected}, res, "score", fmt, out)


@main.command()
@click.option("--ops", "n_ops", default=20_000, show_default=True,
              type=click.IntRange(1))
@click.option("--seed", default=0, show_default=True)
@click.option("--snapshots", default=10, show_default=True, type=click.IntRange(1))
@click.option("--workload", default="mixed", show_default=True,
              type=click.Choice(sorted(WORKLOADS)))
@click.option("--dist", default="uniform", show_default=True,
              type=click.Choice(DISTRIBUTIONS))
@click.option("--id-bits", default=12, show_default=True, type=click.IntRange(1, 62))
def verify(n_ops, seed, snapshots, workload, dist, id_bits):
    """Run a seeded trace and check every snapshot against the oracle."""
    rng = np.random.default_rng(seed)
    ops = gen_ops(rng, n_ops, id_bits, workload, dist)
    steps = set(np.linspace(0, n_ops - 1, snapshots, dtype=int).tolist())
    store = GraphStore(id_bits=id_bits, expected_vertices=64, initial_blocks=1)
    records, handles = apply_ops(store, ops, steps)
    oracle = replay(records)
    ids = sorted({op[1] for op in ops} | {op[2] for op in ops if len(op) > 2})
    times = [h.t for h in handles] + [store.watermark]
    checks = 0
    for t in times:
        for vid in ids:
            try:
                engine = dict(store.get_neighbors(vid, t))
            except GraphError:
                engine = None
            try:
                expect = oracle.view_neighbors(vid, t)
            except OracleError:
                expect = None
            checks += 1
            if engine != expect:
                click.echo(f"verify: MISMATCH vertex={vid} t={t} "
                           f"engine={engine} oracle={expect}")
                sys.exit(1)
    click.echo(f"verify: OK ops={len(records)} snapshots={len(handles)} "
               f"checks={checks}")


if __name__ == "__main__":
    main()
