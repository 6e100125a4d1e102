"""The graph store proper: index, table, and edge arrays behind one API.

Concurrency model.  Every mutation draws a ticket from a global write
clock inside the locks that serialize its conflicts, so ticket order equals
effect order for any pair of operations that can observe each other:
vertex operations serialize on a per-id stripe, edge operations hold the
stripes of both endpoints.  Snapshot times come from the clock's completed
watermark (largest t with no smaller ticket still in flight), which makes a
snapshot a frozen, fully-applied prefix of history.  Readers register their
time; vertex-slot recycling and version pruning only consume history older
than every registered reader and the current watermark, so a registered
snapshot can always re-read exactly what it saw first.

Reads never block writes and vice versa: lookups are wait-free, edge reads
walk immutable version chains.  The one stop-the-world event is an index
rebuild after the live-vertex count doubles past the planned size; mutators
pause at a shared/exclusive gate while the new tree is built (reads
continue against the old tree, which the rebuild never mutates).

Time-travel reads are exact through snapshot handles.  Passing a bare
timestamp below the current watermark is allowed but best-effort: history
is pinned only for registered readers, so recycling may already have
consumed what such a read asks for.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from functools import lru_cache

from .edgestore import (
    LOG_ENTRY_BYTES,
    SNAP_ENTRY_BYTES,
    TOMBSTONE,
    EdgeStore,
    SegmentedBitmap,
)
from .index import SortTree
from .optimizer import SLOT_BYTES, UniverseSpec, optimize
from .table import VertexTable

__all__ = [
    "GraphError",
    "VertexNotFound",
    "WriteClock",
    "ShareExclusiveGate",
    "SnapshotHandle",
    "MemoryReport",
    "GraphStore",
]

_N_STRIPES = 256


class GraphError(Exception):
    """Base for graph-store errors."""


class VertexNotFound(GraphError):
    """The vertex does not exist, or is not visible at the queried time."""


class WriteClock:
    """Monotone ticket source with a completed watermark.

    tick() hands out the next timestamp and records it as in flight;
    done(t) retires it.  now() is the largest time t such that every
    ticket <= t has retired, so state as of now() can no longer change.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._next = 1
        self._inflight: set[int] = set()

    def tick(self) -> int:
        with self._lock:
            t = self._next
            self._next = t + 1
            self._inflight.add(t)
            return t

    def done(self, t: int) -> None:
        with self._lock:
            self._inflight.discard(t)

    def now(self) -> int:
        with self._lock:
            if self._inflight:
                return min(self._inflight) - 1
            return self._next - 1


class ShareExclusiveGate:
    """Many sharers or one exclusive holder; exclusive requests get priority
    over new sharers so a rebuild cannot starve under a mutation stream."""

    def __init__(self):
        self._cond = threading.Condition()
        self._sharers = 0
        self._exclusive = False
        self._waiting_excl = 0

    def acquire_shared(self):
        with self._cond:
            while self._exclusive or self._waiting_excl:
                self._cond.wait()
            self._sharers += 1

    def release_shared(self):
        with self._cond:
            self._sharers -= 1
            if self._sharers == 0:
                self._cond.notify_all()

    def acquire_exclusive(self):
        with self._cond:
            self._waiting_excl += 1
            while self._exclusive or self._sharers:
                self._cond.wait()
            self._waiting_excl -= 1
            self._exclusive = True

    def release_exclusive(self):
        with self._cond:
            self._exclusive = False
            self._cond.notify_all()

    class _Shared:
        __slots__ = ("_g",)

        def __init__(self, g):
            self._g = g

        def __enter__(self):
            self._g.acquire_shared()

        def __exit__(self, *exc):
            self._g.release_shared()

    class _Exclusive:
        __slots__ = ("_g",)

        def __init__(self, g):
            self._g = g

        def __enter__(self):
            self._g.acquire_exclusive()

        def __exit__(self, *exc):
            self._g.release_exclusive()

    def shared(self):
        return self._Shared(self)

    def exclusive(self):
        return self._Exclusive(self)


class SnapshotHandle:
    """A registered read position; release it (or use as a context manager)
    so the store may reclaim the history that was pinned for it."""

    __slots__ = ("_store", "token", "t", "released")

    def __init__(self, store, token: int, t: int):
        self._store = store
        self.token = token
        self.t = t
        self.released = False

    def release(self) -> None:
        self._store.release(self)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        if not self.released:
            self.release()

    def __repr__(self):
        state = "released" if self.released else "active"
        return f"<SnapshotHandle t={self.t} {state}>"


@dataclass(frozen=True)
class MemoryReport:
    """Bytes charged by the store's size model, by component."""

    index_bytes: int
    table_bytes: int
    snapshot_bytes: int
    log_bytes: int
    bitmap_bytes: int

    @property
    def total_bytes(self) -> int:
        return (self.index_bytes + self.table_bytes + self.snapshot_bytes
                + self.log_bytes + self.bitmap_bytes)

    def as_dict(self) -> dict:
        return {
            "index_bytes": self.index_bytes,
            "table_bytes": self.table_bytes,
            "snapshot_bytes": self.snapshot_bytes,
            "log_bytes": self.log_bytes,
            "bitmap_bytes": self.bitmap_bytes,
            "total_bytes": self.total_bytes,
        }


@lru_cache(maxsize=128)
def _plan(id_bits: int, n: int, layers):
    n = min(max(n, 1), 1 << id_bits)
    return optimize(UniverseSpec(id_bits, n, layers))


class GraphStore:
    """Directed weighted graph with stable integer ids in [0, 2^id_bits).

    Mutators return their commit timestamp (insert_vertex returns None when
    the vertex already existed, making re-insertion a free no-op).  Edge
    weight 0 is reserved as the deletion marker and rejected on writes.
    Deleting a vertex hides it and its edges from later times without
    touching the edge arrays; re-inserting the same id starts a fresh
    incarnation whose edge list is empty while older snapshots still see
    the old one.
    """

    def __init__(self, *, id_bits: int = 32, layers: int | None = None,
                 expected_vertices: int = 1024, adaptive: str = "sync",
                 checker_segment_bits: int = 4096, initial_blocks: int = 1024):
        if adaptive not in ("sync", "async", "off"):
            raise ValueError("adaptive must be 'sync', 'async', or 'off'")
        self.id_bits = id_bits
        self._layers = layers
        self._adaptive = adaptive
        self._seg_bits = checker_segment_bits
        self._index = SortTree(_plan(id_bits, expected_vertices, layers))
        self._table = VertexTable(initial_blocks, reader_floor=self._reader_floor)
        self._estore = EdgeStore(self._table)
        self._clock = WriteClock()
        self._gate = ShareExclusiveGate()
        self._stripes = [threading.Lock() for _ in range(_N_STRIPES)]
        self._readers: dict[int, int] = {}
        self._reader_lock = threading.Lock()
        self._tokens = itertools.count(1)
        self._tls = threading.local()
        self._checkers: list[SegmentedBitmap] = []
        self._checkers_lock = threading.Lock()
        self.n_live = 0
        self._n_lock = threading.Lock()
        self._last_plan_n = max(1, expected_vertices)
        self._replan_serial = threading.Lock()
        self._replan_flag_lock = threading.Lock()
        self._replan_pending = False

    # -- plumbing ---------------------------------------------------------

    def _check_id(self, vid: int) -> None:
        if not 0 <= vid < (1 << self.id_bits):
            raise ValueError(f"vertex id {vid} outside [0, 2^{self.id_bits})")

    def _checker(self) -> SegmentedBitmap:
        c = getattr(self._tls, "checker", None)
        if c is None:
            c = SegmentedBitmap(self._seg_bits)
            self._tls.checker = c
            with self._checkers_lock:
                self._checkers.append(c)
        return c

    def _reader_floor(self):
        # the watermark is read under the registry lock so that a snapshot
        # registering concurrently can only observe an equal or later time;
        # anything below the returned floor is then invisible to every
        # current and future reader
        with self._reader_lock:
            now = self._clock.now()
            if self._readers:
                return min(min(self._readers.values()), now)
            return now

    def _bump_live(self, d: int) -> None:
        with self._n_lock:
            self.n_live += d

    @property
    def watermark(self) -> int:
        return self._clock.now()

    @property
    def config(self):
        return self._index.config

    # -- vertex operations ------------------------------------------------

    def _insert_locked(self, vid: int, t):
        """Create or revive vid under its stripe.  Returns (offset, ticket);
        ticket is None when the vertex was already alive.  A caller-supplied
        t (edge auto-create) stamps the birth with the edge's own ticket."""
        off = self._index.lookup(vid)
        if off is not None:
            b = self._table.block_at(off)
            if b.id == vid:
                if b.del_time == 0:
                    return off, None
                own = t is None
                if own:
                    t = self._clock.tick()
                try:
                    new_off, prior = self._table.allocate(vid, t)
                    nb = self._table.block_at(new_off)
                    if new_off != off:
                        # older snapshots reach the previous incarnation here
                        nb.prev_off = off
                    if prior is not None and prior != vid:
                        self._index.remove_if_equals(prior, new_off)
                    self._index.insert(vid, new_off, overwrite=True)
                finally:
                    if own:
                        self._clock.done(t)
                self._bump_live(1)
                return new_off, t
        # no binding, or a binding left stale by slot recycling
        own = t is None
        if own:
            t = self._clock.tick()
        try:
            new_off, prior = self._table.allocate(vid, t)
            if prior is not None and prior != vid:
                self._index.remove_if_equals(prior, new_off)
            self._index.insert(vid, new_off, overwrite=True)
        finally:
            if own:
                self._clock.done(t)
        self._bump_live(1)
        return new_off, t

    def insert_vertex(self, vid: int):
        """Ensure vid is alive.  Returns (offset, commit time or None)."""
        self._check_id(vid)
        off = self._index.lookup(vid)
        if off is not None:
            b = self._table.block_at(off)
            if b.id == vid and b.del_time == 0:
                return off, None
        with self._gate.shared():
            with self._stripes[vid % _N_STRIPES]:
                off, t = self._insert_locked(vid, None)
        if t is not None:
            self._maybe_replan()
        return off, t

    def delete_vertex(self, vid: int) -> int:
        """Hide vid from times after the returned commit time."""
        self._check_id(vid)
        with self._gate.shared():
            with self._stripes[vid % _N_STRIPES]:
                off = self._index.lookup(vid)
                b = self._table.block_at(off) if off is not None else None
                if b is None or b.id != vid or b.del_time != 0:
                    raise VertexNotFound(f"vertex {vid} not found")
                t = self._clock.tick()
                try:
                    self._table.tombstone(off, t)
                finally:
                    self._clock.done(t)
        self._bump_live(-1)
        return t

    def _resolve_live(self, vid: int):
        off = self._index.lookup(vid)
        if off is None:
            return None, None
        b = self._table.block_at(off)
        if b.id != vid or b.del_time != 0:
            return None, None
        return off, b

    # -- edge operations ----------------------------------------------------

    def _endpoint_stripes(self, u: int, v: int):
        return [self._stripes[i] for i in sorted({u % _N_STRIPES, v % _N_STRIPES})]

    def insert_edge(self, u: int, v: int, weight: float) -> int:
        """Write edge u->v, creating either endpoint that is not alive.
        Auto-created endpoints share the edge's commit time."""
        self._check_id(u)
        self._check_id(v)
        weight = float(weight)
        if weight == TOMBSTONE:
            raise ValueError("edge weight 0 is reserved for deletions")
        created = False
        with self._gate.shared():
            stripes = self._endpoint_stripes(u, v)
            for lk in stripes:
                lk.acquire()
            try:
                t = self._clock.tick()
                try:
                    uo, tu = self._insert_locked(u, t)
                    vo, tv = self._insert_locked(v, t)
                    created = tu is not None or tv is not None
                    self._estore.append(self._table.block_at(uo), vo, weight,
                                        t, self._checker())
                finally:
                    self._clock.done(t)
            finally:
                for lk in reversed(stripes):
                    lk.release()
        if created:
            self._maybe_replan()
        return t

    def _edge_write(self, u: int, v: int, weight: float) -> int:
        self._check_id(u)
        self._check_id(v)
        with self._gate.shared():
            stripes = self._endpoint_stripes(u, v)
            for lk in stripes:
                lk.acquire()
            try:
                uo, ub = self._resolve_live(u)
                vo, vb = self._resolve_live(v)
                if ub is None or vb is None:
                    missing = u if ub is None else v
                    raise VertexNotFound(f"endpoint {missing} not found")
                t = self._clock.tick()
                try:
                    self._estore.append(ub, vo, weight, t, self._checker())
                finally:
                    self._clock.done(t)
            finally:
                for lk in reversed(stripes):
                    lk.release()
        return t

    def update_edge(self, u: int, v: int, weight: float) -> int:
        """Rewrite u->v's weight.  Both endpoints must be alive."""
        weight = float(weight)
        if weight == TOMBSTONE:
            raise ValueError("edge weight 0 is reserved for deletions")
        return self._edge_write(u, v, weight)

    def delete_edge(self, u: int, v: int) -> int:
        """Remove u->v from times after the returned commit time.  Both
        endpoints must be alive; deleting an absent edge is a no-op write."""
        return self._edge_write(u, v, TOMBSTONE)

    # -- reads --------------------------------------------------------------

    def _read_time(self, at) -> int:
        if at is None:
            return self._clock.now()
        if isinstance(at, SnapshotHandle):
            return at.t
        return at

    def _block_at_time(self, vid: int, t: int):
        """The block holding vid's incarnation visible at t, or None."""
        off = self._index.lookup(vid)
        if off is None:
            return None
        b = self._table.block_at(off)
        prev_birth = None
        while b is not None and b.id == vid and b.birth > t:
            # births strictly decrease along an intact chain; a link whose
            # target was recycled (possibly for the same id, which can even
            # close a cycle) jumps forward and means the history below it
            # has been consumed, so this best-effort read simply misses
            if prev_birth is not None and b.birth >= prev_birth:
                return None
            prev_birth = b.birth
            off = b.prev_off
            b = self._table.get(off) if off is not None else None
        if b is None or b.id != vid or not VertexTable.visible(b, t):
            return None
        return b

    def has_vertex(self, vid: int, at=None) -> bool:
        self._check_id(vid)
        return self._block_at_time(vid, self._read_time(at)) is not None

    def get_neighbors(self, vid: int, at=None):
        """Live (dst_id, weight) out-edges of vid at the given time (a
        SnapshotHandle, a timestamp, or None for the current watermark)."""
        self._check_id(vid)
        t = self._read_time(at)
        b = self._block_at_time(vid, t)
        if b is None:
            raise VertexNotFound(f"vertex {vid} not visible at time {t}")
        pairs = self._estore.neighbors(b, t, self._checker())
        block_at = self._table.block_at
        return [(block_at(doff).id, w) for doff, w in pairs]

    # -- snapshots and reclamation -------------------------------------------

    def snapshot(self) -> SnapshotHandle:
        """Register a reader at the current watermark.  History at or after
        the handle's time is retained until the handle is released."""
        with self._reader_lock:
            t = self._clock.now()
            token = next(self._tokens)
            self._readers[token] = t
        return SnapshotHandle(self, token, t)

    def release(self, handle: SnapshotHandle) -> None:
        with self._reader_lock:
            if handle.released:
                raise ValueError("snapshot already released")
            del self._readers[handle.token]
            handle.released = True

    def collect_garbage(self) -> int:
        """Drop edge-array versions unreachable by every present and future
        reader.  Returns the number of versions freed."""
        floor = self._reader_floor()
        dropped = 0
        for _, b in self._table.iter_blocks():
            dropped += self._estore.gc_versions(b, floor)
        return dropped

    # -- maintenance -----------------------------------------------------------

    def _maybe_replan(self) -> None:
        if self._adaptive == "off":
            return
        with self._n_lock:
            due = self.n_live >= 2 * self._last_plan_n
        if not due:
            return
        if self._adaptive == "async":
            with self._replan_flag_lock:
                if self._replan_pending:
                    return
                self._replan_pending = True
            threading.Thread(target=self._replan_bg, daemon=True).start()
        else:
            self._replan()

    def _replan_bg(self) -> None:
        try:
            self._replan()
        finally:
            with self._replan_flag_lock:
                self._replan_pending = False

    def _replan(self) -> None:
        with self._replan_serial:
            with self._n_lock:
                n = self.n_live
                if n < 2 * self._last_plan_n:
                    return
                self._last_plan_n = n
            cfg = _plan(self.id_bits, n, self._layers)
            if cfg == self._index.config:
                return
            with self._gate.exclusive():
                self._index = self._index.adapt(cfg)

    def memory_report(self) -> MemoryReport:
        snap_entries = 0
        log_slots = 0
        for _, b in self._table.iter_blocks():
            v = b.edges
            while v is not None:
                snap_entries += len(v.snap_dst)
                log_slots += len(v.log)
                v = v.prev
        with self._checkers_lock:
            bitmap = sum(c.allocated_bytes for c in self._checkers)
        return MemoryReport(
            index_bytes=self._index.slot_count * SLOT_BYTES,
            table_bytes=self._table.table_bytes,
            snapshot_bytes=snap_entries * SNAP_ENTRY_BYTES,
            log_bytes=log_slots * LOG_ENTRY_BYTES,
            bitmap_bytes=bitmap,
        )
