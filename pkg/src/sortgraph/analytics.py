"""Graph algorithms over a store snapshot.

Every function takes the time to read at (a SnapshotHandle, a timestamp, or
None for the current watermark) and computes on the store's internals
directly: traversals resolve only their source through the vertex index
(one lookup per source) and then expand frontiers by table offset, while
whole-graph algorithms scan the vertex table and use no index lookups at
all.  Results are keyed by vertex id.

BFS, SSSP, and k-hop report only vertices actually reached; absence means
unreachable.  SSSP assumes nonnegative weights (the store's deletion
sentinel already excludes zero).  PageRank follows the plain update
PR(v) = (1-d)/n + d * sum PR(u)/outdeg(u) over in-edges of v; mass at
dangling vertices is not redistributed, it just decays.
"""

from __future__ import annotations

import heapq
from collections import deque

import numpy as np

from .graph import GraphStore, VertexNotFound
from .table import VertexTable

__all__ = ["bfs", "khop", "sssp", "pagerank", "wcc", "triangle_count",
           "betweenness"]


def _source_block(g: GraphStore, source: int, t: int):
    b = g._block_at_time(source, t)
    if b is None:
        raise VertexNotFound(f"vertex {source} not visible at time {t}")
    return b


def _scan(g: GraphStore, t: int):
    """(offset, block) for every vertex visible at t, no index traffic."""
    visible = VertexTable.visible
    for off, b in g._table.iter_blocks():
        if visible(b, t):
            yield off, b


def bfs(g: GraphStore, source: int, at=None) -> dict:
    """Hop counts from source at the given time, reached vertices only."""
    t = g._read_time(at)
    b = _source_block(g, source, t)
    estore, table, checker = g._estore, g._table, g._checker()
    dist = {b.id: 0}
    frontier = deque([(b, 0)])
    while frontier:
        blk, d = frontier.popleft()
        for doff, _w in estore.neighbors(blk, t, checker):
            nb = table.block_at(doff)
            if nb.id not in dist:
                dist[nb.id] = d + 1
                frontier.append((nb, d + 1))
    return dist


def khop(g: GraphStore, source: int, k: int, at=None) -> set:
    """Ids within k hops of source (source itself excluded); k=0 is empty."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    t = g._read_time(at)
    b = _source_block(g, source, t)
    if k == 0:
        return set()
    estore, table, checker = g._estore, g._table, g._checker()
    seen = {b.id}
    out = set()
    frontier = [b]
    for _ in range(k):
        nxt = []
        for blk in frontier:
            for doff, _w in estore.neighbors(blk, t, checker):
                nb = table.block_at(doff)
                if nb.id not in seen:
                    seen.add(nb.id)
                    out.add(nb.id)
                    nxt.append(nb)
        if not nxt:
            break
        frontier = nxt
    return out


def sssp(g: GraphStore, source: int, at=None) -> dict:
    """Shortest weighted distances from source, reached vertices only."""
    t = g._read_time(at)
    b = _source_block(g, source, t)
    estore, table, checker = g._estore, g._table, g._checker()
    dist = {b.id: 0.0}
    done = set()
    heap = [(0.0, b.id, b)]
    while heap:
        d, vid, blk = heapq.heappop(heap)
        if vid in done:
            continue
        done.add(vid)
        for doff, w in estore.neighbors(blk, t, checker):
            nb = table.block_at(doff)
            nd = d + w
            if nd < dist.get(nb.id, float("inf")):
                dist[nb.id] = nd
                heapq.heappush(heap, (nd, nb.id, nb))
    return dist


def _adjacency(g: GraphStore, t: int):
    """Compact arrays for the visible graph: ids, and edges as index pairs."""
    estore, checker = g._estore, g._checker()
    blocks = []
    index_of = {}
    for off, b in _scan(g, t):
        index_of[off] = len(blocks)
        blocks.append(b)
    src, dst, wts = [], [], []
    for i, b in enumerate(blocks):
        for doff, w in estore.neighbors(b, t, checker):
            src.append(i)
            dst.append(index_of[doff])
            wts.append(w)
    ids = np.array([b.id for b in blocks], dtype=np.int64)
    return ids, np.array(src, dtype=np.intp), np.array(dst, dtype=np.intp), wts


def pagerank(g: GraphStore, at=None, *, iterations: int = 20,
             damping: float = 0.85) -> dict:
    """PageRank over the visible graph; see the module note on dangling mass."""
    t = g._read_time(at)
    ids, src, dst, _ = _adjacency(g, t)
    n = len(ids)
    if n == 0:
        return {}
    outdeg = np.bincount(src, minlength=n).astype(np.float64)
    safe_deg = np.maximum(outdeg, 1.0)
    pr = np.full(n, 1.0 / n)
    base = (1.0 - damping) / n
    for _ in range(iterations):
        contrib = np.where(outdeg > 0, pr / safe_deg, 0.0)
        nxt = np.zeros(n)
        np.add.at(nxt, dst, contrib[src])
        pr = base + damping * nxt
    return {int(v): float(s) for v, s in zip(ids, pr)}


def wcc(g: GraphStore, at=None) -> dict:
    """Weakly connected components: {id: smallest id in its component}."""
    t = g._read_time(at)
    ids, src, dst, _ = _adjacency(g, t)
    n = len(ids)
    parent = list(range(n))

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    for a, b in zip(src, dst):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
    label = {}
    for i in range(n):
        r = find(i)
        vid = int(ids[i])
        if r not in label or vid < label[r]:
            label[r] = vid
    return {int(ids[i]): label[find(i)] for i in range(n)}


def triangle_count(g: GraphStore, at=None) -> int:
    """Number of triangles in the undirected view, each counted once."""
    t = g._read_time(at)
    ids, src, dst, _ = _adjacency(g, t)
    n = len(ids)
    adj = [set() for _ in range(n)]
    for a, b in zip(src, dst):
        if a != b:
            adj[a].add(b)
            adj[b].add(a)
    count = 0
    for u in range(n):
        for v in adj[u]:
            if v > u:
                count += sum(1 for w in adj[u] & adj[v] if w > v)
    return count


def betweenness(g: GraphStore, sources, at=None) -> dict:
    """Brandes betweenness accumulated from the given sources, unweighted
    and unnormalized.  Every visible vertex appears in the result."""
    t = g._read_time(at)
    estore, table, checker = g._estore, g._table, g._checker()
    score: dict[int, float] = {b.id: 0.0 for _, b in _scan(g, t)}
    for source in sources:
        sb = _source_block(g, source, t)
        sigma = {sb.id: 1.0}
        dist = {sb.id: 0}
        preds: dict[int, list] = {sb.id: []}
        order = []
        frontier = deque([sb])
        while frontier:
            blk = frontier.popleft()
            vid = blk.id
            order.append(vid)
            for doff, _w in estore.neighbors(blk, t, checker):
                nb = table.block_at(doff)
                wid = nb.id
                if wid not in dist:
                    dist[wid] = dist[vid] + 1
                    sigma[wid] = 0.0
                    preds[wid] = []
                    frontier.append(nb)
                if dist[wid] == dist[vid] + 1:
                    sigma[wid] += sigma[vid]
                    preds[wid].append(vid)
        delta = dict.fromkeys(order, 0.0)
        for wid in reversed(order):
            for pid in preds[wid]:
                delta[pid] += sigma[pid] / sigma[wid] * (1.0 + delta[wid])
            if wid != sb.id:
                score[wid] += delta[wid]
    return score
