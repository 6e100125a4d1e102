"""Segmented vertex table with offset-stable storage and slot recycling.

Blocks live in size-doubling segments (segment k holds initial * 2^k slots),
so a block's offset never changes and growth never copies.  The size model
charges BLOCK_BYTES per materialized slot, covering the block's logical
fields: vertex id, deletion stamp, degree, size, capacity, and the
edge-array reference.  Engine bookkeeping (birth stamp, prior-incarnation
link, per-slot deletion history, lock) is deliberately outside that model.

Deleting a vertex only stamps its block and queues the slot; the slot is
handed out again solely when its deletion stamp is older than every
registered reader, so a snapshot reader can always finish against the
incarnation it started with.  Each slot keeps the full ordered history of
deletion stamps it has ever received: an edge written at time t_w that
points here refers to the incarnation alive at t_w, and that incarnation's
end is the first recorded deletion at or after t_w, no matter how many
times the slot has been recycled since.
"""

from __future__ import annotations

import threading
from bisect import bisect_left
from collections import deque

__all__ = ["BLOCK_BYTES", "VertexBlock", "VertexTable"]

BLOCK_BYTES = 32


class VertexBlock:
    """One vertex's slot: identity, lifetime stamps, and edge-array state.

    deg counts live edges as of the last compaction, size counts occupied
    entries (snapshot plus log writes), cap is the current array capacity.
    del_time == 0 means the current incarnation is alive.
    """

    __slots__ = (
        "id", "birth", "del_time", "deg", "size", "cap", "edges",
        "prev_off", "del_hist", "lock",
    )

    def __init__(self, vid: int, birth: int):
        self.id = vid
        self.birth = birth
        self.del_time = 0
        self.deg = 0
        self.size = 0
        self.cap = 0
        self.edges = None
        self.prev_off = None
        self.del_hist: list[int] = []
        self.lock = threading.Lock()


class VertexTable:
    """Allocator and store for vertex blocks, addressed by byte offset.

    reader_floor is a callable giving the oldest registered snapshot time
    (inf when none); recycling compares deletion stamps against it.  The
    free queue is FIFO in tombstone call order, which under concurrent
    writers is only approximately stamp order; the eligibility check on the
    head is therefore conservative, never unsafe.
    """

    def __init__(self, initial_blocks: int = 1024, reader_floor=None):
        if initial_blocks < 1:
            raise ValueError("initial_blocks must be positive")
        self._c = initial_blocks
        self._segments: list[list] = []
        self.high_water = 0
        self._free: deque = deque()  # (offset, del_time)
        self._lock = threading.Lock()
        self.reader_floor = reader_floor or (lambda: float("inf"))

    def _locate(self, idx: int):
        k = (idx // self._c + 1).bit_length() - 1
        base = self._c * ((1 << k) - 1)
        return k, idx - base

    def block_at(self, offset: int) -> VertexBlock:
        k, pos = self._locate(offset // BLOCK_BYTES)
        return self._segments[k][pos]

    def get(self, offset: int):
        """block_at that returns None for never-allocated offsets."""
        idx = offset // BLOCK_BYTES
        if idx >= self.high_water:
            return None
        k, pos = self._locate(idx)
        return self._segments[k][pos]

    def allocate(self, vid: int, t: int):
        """Place vid in a slot, returning (offset, prior_id).

        Prefers the oldest queued free slot when its deletion stamp has
        fallen below the reader floor; otherwise extends the high-water
        mark.  prior_id is the id the recycled slot last held (the caller
        unbinds it from the index), None for a fresh slot.
        """
        with self._lock:
            if self._free and self._free[0][1] < self.reader_floor():
                offset, _ = self._free.popleft()
                block = self.block_at(offset)
                prior = block.id
                # birth first: a new stamp exceeds every registered reader's
                # time, hiding the block before the other fields change
                block.birth = t
                block.id = vid
                block.del_time = 0
                block.deg = 0
                block.size = 0
                block.cap = 0
                block.edges = None
                block.prev_off = None
                return offset, prior
            idx = self.high_water
            k, pos = self._locate(idx)
            if k == len(self._segments):
                self._segments.append([None] * (self._c << k))
            self.high_water = idx + 1
        block = VertexBlock(vid, t)
        self._segments[k][pos] = block
        return idx * BLOCK_BYTES, None

    def tombstone(self, offset: int, t: int) -> None:
        block = self.block_at(offset)
        if block.del_time != 0:
            raise ValueError(f"block at offset {offset} is already deleted")
        block.del_time = t
        block.del_hist.append(t)
        with self._lock:
            self._free.append((offset, t))

    def effective_del(self, offset: int, t_write: int):
        """End of life of the incarnation an edge written at t_write targets.

        That incarnation's end is the first deletion stamp >= t_write in the
        slot's history; None means it has not been deleted.
        """
        hist = self.block_at(offset).del_hist
        i = bisect_left(hist, t_write)
        return hist[i] if i < len(hist) else None

    @staticmethod
    def visible(block: VertexBlock, t: int) -> bool:
        """Whether this incarnation exists at time t.

        A vertex is present from its birth stamp through its deletion stamp
        inclusive; a zero deletion stamp means still alive.
        """
        return block.birth <= t and (block.del_time == 0 or t <= block.del_time)

    def iter_blocks(self):
        """(offset, block) for every slot created so far, in offset order.

        Snapshots high_water at entry; blocks allocated mid-scan may be
        skipped, which callers tolerate because they filter by visibility
        at an already-fixed time anyway.
        """
        hw = self.high_water
        idx = 0
        for seg in list(self._segments):
            for block in seg:
                if idx >= hw:
                    return
                if block is not None:
                    yield idx * BLOCK_BYTES, block
                idx += 1

    @property
    def capacity_blocks(self) -> int:
        return sum(len(seg) for seg in self._segments)

    @property
    def table_bytes(self) -> int:
        return self.capacity_blocks * BLOCK_BYTES

    @property
    def free_count(self) -> int:
        return len(self._free)
