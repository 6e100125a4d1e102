"""Seeded workload generators and the trace driver.

Id distributions:
  uniform       every id in [0, 2^bits) equally likely
  skewed        uniform over the low two thirds of the id space
  heavy-tailed  mass proportional to 1/i over [1, 2^bits), drawn as
                floor(exp(U * ln(max_id))) for U uniform in [0, 1)

apply_ops() feeds an operation list to a store, taking snapshots at the
requested step indices, and records (commit_time, op) for every operation
the store accepted.  replay() folds such a record into a fresh OracleGraph;
because commit times order all conflicting operations, the oracle's view
then matches the store's at every snapshot time.
"""

from __future__ import annotations

import numpy as np

from .graph import GraphStore, VertexNotFound
from .oracle import OracleGraph

__all__ = ["DISTRIBUTIONS", "WORKLOADS", "draw_ids", "unique_ids",
           "gen_ops", "gen_edges", "apply_ops", "replay"]

DISTRIBUTIONS = ("uniform", "skewed", "heavy-tailed")

# operation mix per workload: (iv, dv, ie, ue, de)
WORKLOADS = {
    "insert": (0.20, 0.00, 0.80, 0.00, 0.00),
    "delete": (0.10, 0.20, 0.40, 0.00, 0.30),
    "mixed": (0.15, 0.10, 0.45, 0.15, 0.15),
}

_OPS = ("iv", "dv", "ie", "ue", "de")


def _bounds(id_bits: int, dist: str):
    u = 1 << id_bits
    if dist == "uniform":
        return 0, u
    if dist == "skewed":
        return 0, 2 * (u - 1) // 3 + 1
    if dist == "heavy-tailed":
        return 1, u
    raise ValueError(f"unknown distribution {dist!r} (want one of {DISTRIBUTIONS})")


def draw_ids(rng: np.random.Generator, count: int, id_bits: int,
             dist: str = "uniform") -> np.ndarray:
    """count ids drawn with replacement from the distribution."""
    lo, hi = _bounds(id_bits, dist)
    if dist == "heavy-tailed":
        top = (1 << id_bits) - 1
        return np.floor(np.exp(rng.random(count) * np.log(top))).astype(np.int64)
    return rng.integers(lo, hi, size=count, dtype=np.int64)


def unique_ids(rng: np.random.Generator, count: int, id_bits: int,
               dist: str = "uniform") -> np.ndarray:
    """count distinct ids, distribution-shaped, in random order."""
    lo, hi = _bounds(id_bits, dist)
    if count > hi - lo:
        raise ValueError(f"cannot draw {count} distinct ids from [{lo}, {hi})")
    have = np.unique(draw_ids(rng, count, id_bits, dist))
    while have.size < count:
        extra = draw_ids(rng, 2 * (count - have.size) + 16, id_bits, dist)
        have = np.unique(np.concatenate([have, extra]))
    if have.size > count:
        have = have[rng.choice(have.size, count, replace=False)]
    return rng.permutation(have)


def gen_ops(rng: np.random.Generator, n_ops: int, id_bits: int,
            workload: str = "mixed", dist: str = "uniform",
            pool_size: int | None = None) -> list:
    """An operation list over a fixed id pool, per the workload mix."""
    if workload not in WORKLOADS:
        raise ValueError(f"unknown workload {workload!r} (want one of {tuple(WORKLOADS)})")
    if pool_size is None:
        pool_size = max(16, n_ops // 8)
    pool = unique_ids(rng, pool_size, id_bits, dist)
    kinds = rng.choice(len(_OPS), size=n_ops, p=WORKLOADS[workload])
    us = pool[rng.integers(0, pool.size, n_ops)]
    vs = pool[rng.integers(0, pool.size, n_ops)]
    ws = np.round(rng.uniform(0.1, 10.0, n_ops), 3)
    ops = []
    for i in range(n_ops):
        kind = _OPS[kinds[i]]
        if kind in ("iv", "dv"):
            ops.append((kind, int(us[i])))
        elif kind == "de":
            ops.append((kind, int(us[i]), int(vs[i])))
        else:
            ops.append((kind, int(us[i]), int(vs[i]), float(ws[i])))
    return ops


def gen_edges(rng: np.random.Generator, m: int, id_bits: int,
              src_dist: str = "heavy-tailed", dst_dist: str = "uniform"):
    """m edge triples (src, dst, weight) with positive weights; a
    heavy-tailed source side concentrates appends on hub vertices."""
    src = draw_ids(rng, m, id_bits, src_dist)
    dst = draw_ids(rng, m, id_bits, dst_dist)
    w = 0.5 + rng.random(m)
    return src, dst, w


def apply_ops(store: GraphStore, ops, snapshot_steps=frozenset()):
    """Run ops against the store.  Returns (records, handles): records are
    (commit_time, op) for accepted operations, handles the snapshots taken
    before the steps listed in snapshot_steps.  Rejected operations
    (missing endpoints, deleting a dead vertex) are skipped, mirroring how
    the oracle would refuse them."""
    records = []
    handles = []
    for i, op in enumerate(ops):
        if i in snapshot_steps:
            handles.append(store.snapshot())
        kind = op[0]
        try:
            if kind == "iv":
                _, t = store.insert_vertex(op[1])
                if t is None:
                    continue
            elif kind == "dv":
                t = store.delete_vertex(op[1])
            elif kind == "ie":
                t = store.insert_edge(op[1], op[2], op[3])
            elif kind == "ue":
                t = store.update_edge(op[1], op[2], op[3])
            elif kind == "de":
                t = store.delete_edge(op[1], op[2])
            else:
                raise ValueError(f"unknown op {kind!r}")
        except VertexNotFound:
            continue
        records.append((t, op))
    return records, handles


def replay(records) -> OracleGraph:
    """Fold (commit_time, op) records into a fresh oracle, in time order."""
    oracle = OracleGraph()
    for t, op in sorted(records, key=lambda r: r[0]):
        oracle.apply(op, t)
    return oracle
