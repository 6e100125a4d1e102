"""Per-vertex edge arrays: immutable snapshot plus append log, with MVCC.

Every edge mutation is one log append; a zero weight is the tombstone that
marks a deletion, which is why user-supplied weights must be nonzero.  When
the log fills, compaction folds snapshot and log into a fresh version whose
snapshot holds exactly the live edges (tombstoned, superseded, and
dead-destination entries all drop out) and whose log doubles that count;
the superseded version stays reachable through its prev link so readers
pinned to older times keep a consistent view.  Version selection is by creation
stamp: a reader at time t uses the newest version created at or before t
and replays only log entries stamped at or before t.

Duplicate suppression during compaction and reads uses a segmented bitmap
sized in logical vertex ids (offset / 32), marked while scanning newest to
oldest and wiped clean before returning, so a handful of thread-local
bitmaps serve any number of vertices.
"""

from __future__ import annotations

from .table import BLOCK_BYTES, VertexTable

__all__ = [
    "TOMBSTONE", "BOOTSTRAP_CAP", "SNAP_ENTRY_BYTES", "LOG_ENTRY_BYTES",
    "SegmentedBitmap", "EdgeArrayVersion", "EdgeStore",
]

TOMBSTONE = 0.0
BOOTSTRAP_CAP = 4
SNAP_ENTRY_BYTES = 8
LOG_ENTRY_BYTES = 12


class SegmentedBitmap:
    """Growable bitmap over logical vertex ids, in fixed-size segments.

    Addresses are table byte offsets; bit lid = offset / 32 lives in
    segment lid // L at position lid % L.  mark/test/clear demand an
    in-range, 32-aligned offset; ensure() materializes segments on demand.
    """

    def __init__(self, segment_bits: int = 4096):
        if segment_bits < 1:
            raise ValueError("segment_bits must be positive")
        self._L = segment_bits
        self._seg_bytes = (segment_bits + 7) // 8
        self._segs: list[bytearray] = []

    def _addr(self, offset: int):
        if offset < 0 or offset % BLOCK_BYTES:
            raise ValueError(f"offset {offset} is not a valid block offset")
        lid = offset // BLOCK_BYTES
        seg, pos = divmod(lid, self._L)
        if seg >= len(self._segs):
            raise IndexError(f"offset {offset} beyond bitmap capacity")
        return seg, pos

    def ensure(self, offset: int) -> None:
        if offset < 0 or offset % BLOCK_BYTES:
            raise ValueError(f"offset {offset} is not a valid block offset")
        seg = (offset // BLOCK_BYTES) // self._L
        while len(self._segs) <= seg:
            self._segs.append(bytearray(self._seg_bytes))

    def mark(self, offset: int) -> None:
        seg, pos = self._addr(offset)
        self._segs[seg][pos >> 3] |= 1 << (pos & 7)

    def test(self, offset: int) -> bool:
        seg, pos = self._addr(offset)
        return bool(self._segs[seg][pos >> 3] & (1 << (pos & 7)))

    def clear(self, offset: int) -> None:
        seg, pos = self._addr(offset)
        self._segs[seg][pos >> 3] &= ~(1 << (pos & 7))

    def test_and_mark(self, offset: int) -> bool:
        """Mark the bit, reporting whether it was already set."""
        seg, pos = self._addr(offset)
        byte, bit = pos >> 3, 1 << (pos & 7)
        was = bool(self._segs[seg][byte] & bit)
        self._segs[seg][byte] |= bit
        return was

    def all_clear(self) -> bool:
        # memcmp beats any(): this runs after every compaction under test
        zero = bytes(self._seg_bytes)
        return all(seg == zero for seg in self._segs)

    @property
    def allocated_bytes(self) -> int:
        return len(self._segs) * self._seg_bytes


class EdgeArrayVersion:
    """One immutable-once-superseded edge array version.

    snap_dst/snap_w hold the deduplicated live edges as of created_at; log
    slots fill in place while this is the current version (each slot goes
    from None to a (dst, weight, time) tuple in one store) and freeze once
    a newer version exists.  The size model charges 8 bytes per snapshot
    entry and 12 per log slot.
    """

    __slots__ = ("snap_dst", "snap_w", "log", "created_at", "prev")

    def __init__(self, snap_dst, snap_w, log_cap: int, created_at: int, prev):
        self.snap_dst = snap_dst
        self.snap_w = snap_w
        self.log = [None] * log_cap
        self.created_at = created_at
        self.prev = prev


class EdgeStore:
    """Edge-array operations over a vertex table.

    visits counts entries touched by compaction (read pass, wipe pass, and
    snapshot writes) and backs the amortized-cost law checks.  on_compact,
    when set, is called with the block right after each compaction commits.
    """

    def __init__(self, table: VertexTable):
        self._table = table
        self.visits = 0
        self.compactions = 0
        self.on_compact = None

    def append(self, block, dst_off: int, weight: float, t: int, checker: SegmentedBitmap) -> None:
        """Record one edge write (insert, update, or tombstone) at time t."""
        with block.lock:
            v = block.edges
            if v is None or block.cap == 0:
                v = EdgeArrayVersion([], [], BOOTSTRAP_CAP, t, v)
                block.edges = v
                block.cap = BOOTSTRAP_CAP
            v.log[block.size - block.deg] = (dst_off, weight, t)
            block.size += 1
            if block.size == block.cap:
                self._compact_locked(block, t, checker)

    def _compact_locked(self, block, t: int, checker: SegmentedBitmap) -> None:
        # Folding stamps surviving entries with the new version's creation
        # time, so edges whose destination incarnation is already dead must
        # go now: no reader of the new version (all at or after t) could see
        # them, and readers of earlier times keep the superseded version.
        # For what survives, the first deletion at or after the original
        # write time equals the first at or after t, so the restamp is exact.
        v = block.edges
        deg, s = block.deg, block.size
        touched = []
        out_dst: list[int] = []
        out_w: list[float] = []
        effective_del = self._table.effective_del

        def fold(dst, w, tw):
            checker.ensure(dst)
            if checker.test_and_mark(dst):
                return
            touched.append(dst)
            if w == TOMBSTONE:
                return
            ed = effective_del(dst, tw)
            if ed is not None and ed < t:
                return
            out_dst.append(dst)
            out_w.append(w)

        for i in range(s - deg - 1, -1, -1):
            dst, w, tw = v.log[i]
            fold(dst, w, tw)
        for i in range(deg - 1, -1, -1):
            fold(v.snap_dst[i], v.snap_w[i], v.created_at)
        for off in touched:
            checker.clear(off)

        cnt = len(out_dst)
        self.visits += 2 * s + cnt
        self.compactions += 1
        if cnt == 0:
            block.edges = EdgeArrayVersion([], [], 0, t, v)
            block.deg = 0
            block.size = 0
            block.cap = 0
        else:
            block.edges = EdgeArrayVersion(out_dst, out_w, cnt, t, v)
            block.deg = cnt
            block.size = cnt
            block.cap = 2 * cnt
        if self.on_compact is not None:
            self.on_compact(block)

    def neighbors(self, block, t: int, checker: SegmentedBitmap):
        """Live (dst_offset, weight) pairs of this block's vertex at time t.

        Newest-first replay with bitmap dedup gives last-write-wins per
        destination; tombstones suppress older writes without surfacing; an
        edge is dropped when the destination incarnation it was written
        against had been deleted by t.  Entries stamped after t are ignored
        entirely so they neither appear nor shadow older ones.
        """
        v = block.edges
        while v is not None and v.created_at > t:
            v = v.prev
        if v is None:
            return []
        touched = []
        out = []
        effective_del = self._table.effective_del

        def consider(dst, w, tw):
            checker.ensure(dst)
            if checker.test_and_mark(dst):
                return
            touched.append(dst)
            if w == TOMBSTONE:
                return
            ed = effective_del(dst, tw)
            if ed is not None and ed < t:
                return
            out.append((dst, w))

        for i in range(len(v.log) - 1, -1, -1):
            e = v.log[i]
            if e is None:
                continue
            dst, w, tw = e
            if tw > t:
                continue
            consider(dst, w, tw)
        tw = v.created_at
        for i in range(len(v.snap_dst)):
            consider(v.snap_dst[i], v.snap_w[i], tw)
        for off in touched:
            checker.clear(off)
        return out

    def gc_versions(self, block, oldest_reader) -> int:
        """Drop versions no reader can reach, returning how many went.

        Every reader sits at or above oldest_reader, and each walks the
        chain only until the first version created at or before its time;
        versions strictly below the first such version for oldest_reader
        are therefore unreachable and can be cut loose.
        """
        with block.lock:
            v = block.edges
            while v is not None and v.created_at > oldest_reader:
                v = v.prev
            if v is None:
                return 0
            dropped, cur = 0, v.prev
            v.prev = None
            while cur is not None:
                dropped += 1
                cur = cur.prev
            return dropped
