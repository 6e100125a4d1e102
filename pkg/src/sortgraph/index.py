"""Layered radix tree mapping vertex ids to table offsets.

Each tree follows a FanoutConfig: layer i consumes the next a_i high bits of
the id, so a node at layer i has 2^a_i child slots.  Interior slots hold
child nodes, deepest-layer slots hold integer offsets.  Empty slots are None.

Concurrency contract: lookups are wait-free (they only read published
references and never block).  Slot creation goes through a claim-then-publish
step under a striped lock: the creator marks the slot claimed, builds the
child, publishes it, then clears the claim.  Claims are observable only
transiently; after writers quiesce every claim set is empty.  Writers touching
different slots almost never share a stripe; writers racing on the same slot
serialize and the loser adopts the winner's child.

`adapt` rebuilds a tree for a new fanout plan while sharing whole subtrees
whenever a suffix of the old and new plans coincides (the bit boundaries then
align, so subtree shapes are identical).  Callers must drain in-flight
writers before swapping trees; readers may keep using the old tree during the
swap since adapt never mutates it.
"""

from __future__ import annotations

import threading

from .optimizer import FanoutConfig, SLOT_BYTES

__all__ = ["SortNode", "SortTree", "slot_count_for_ids"]

_N_STRIPES = 64


class SortNode:
    __slots__ = ("bits", "children", "claims")

    def __init__(self, bits: int):
        self.bits = bits
        self.children = [None] * (1 << bits)
        self.claims = None  # lazily a set of claimed slot indices

    def claimed(self, seg: int) -> bool:
        return self.claims is not None and seg in self.claims


class SortTree:
    """Radix index over one fanout plan.

    slot_count tracks allocated child slots (root included) and backs the
    8-bytes-per-slot memory accounting; recount_slots() recomputes it from
    the structure for cross-checks.  lookups counts descents for
    instrumentation; it is exact in single-threaded use.
    """

    def __init__(self, config: FanoutConfig):
        self.config = config
        self.root = SortNode(config.fanouts[0])
        self.slot_count = 1 << config.fanouts[0]
        self.lookups = 0
        self._locks = [threading.Lock() for _ in range(_N_STRIPES)]
        self._count_lock = threading.Lock()
        # per-layer (shift, mask) for extracting the id segment
        x = config.x
        self._segs = []
        s = 0
        for a in config.fanouts:
            s += a
            self._segs.append((x - s, (1 << a) - 1))

    def _stripe(self, node: SortNode, seg: int) -> threading.Lock:
        return self._locks[(id(node) ^ seg) % _N_STRIPES]

    def _add_slots(self, k: int) -> None:
        with self._count_lock:
            self.slot_count += k

    def insert(self, vid: int, offset: int, *, overwrite: bool = False):
        """Map vid -> offset.  Returns (created, offset_now_bound).

        Without overwrite, an existing binding wins and is returned
        (created=False).  With overwrite the slot is rebound in one store so
        concurrent lookups see either the old or the new offset, never a gap.
        """
        node = self.root
        fan = self.config.fanouts
        segs = self._segs
        last = len(fan) - 1
        for i in range(last):
            shift, mask = segs[i]
            seg = (vid >> shift) & mask
            child = node.children[seg]
            if child is None:
                with self._stripe(node, seg):
                    child = node.children[seg]
                    if child is None:
                        if node.claims is None:
                            node.claims = set()
                        node.claims.add(seg)
                        child = SortNode(fan[i + 1])
                        self._add_slots(1 << fan[i + 1])
                        node.children[seg] = child
                        node.claims.discard(seg)
            node = child
        shift, mask = segs[last]
        seg = (vid >> shift) & mask
        cur = node.children[seg]
        if cur is not None and not overwrite:
            return False, cur
        with self._stripe(node, seg):
            cur = node.children[seg]
            if cur is None or overwrite:
                node.children[seg] = offset
                return True, offset
            return False, cur

    def lookup(self, vid: int):
        """Offset bound to vid, or None.  Wait-free."""
        self.lookups += 1
        node = self.root
        for shift, mask in self._segs[:-1]:
            node = node.children[(vid >> shift) & mask]
            if node is None:
                return None
        shift, mask = self._segs[-1]
        return node.children[(vid >> shift) & mask]

    def remove(self, vid: int) -> bool:
        """Clear vid's leaf slot.  Interior nodes are never reclaimed."""
        node = self.root
        for shift, mask in self._segs[:-1]:
            node = node.children[(vid >> shift) & mask]
            if node is None:
                return False
        shift, mask = self._segs[-1]
        seg = (vid >> shift) & mask
        with self._stripe(node, seg):
            if node.children[seg] is None:
                return False
            node.children[seg] = None
            return True

    def remove_if_equals(self, vid: int, offset: int) -> bool:
        """Clear vid's slot only if it still holds offset (recycle helper)."""
        node = self.root
        for shift, mask in self._segs[:-1]:
            node = node.children[(vid >> shift) & mask]
            if node is None:
                return False
        shift, mask = self._segs[-1]
        seg = (vid >> shift) & mask
        with self._stripe(node, seg):
            if node.children[seg] != offset:
                return False
            node.children[seg] = None
            return True

    def items(self):
        """All (id, offset) bindings, by DFS over the structure."""
        out = []
        leaf_depth = self.config.depth - 1

        def walk(node, prefix, depth):
            for seg, child in enumerate(node.children):
                if child is None:
                    continue
                p = (prefix << node.bits) | seg
                if depth == leaf_depth:
                    out.append((p, child))
                else:
                    walk(child, p, depth + 1)

        walk(self.root, 0, 0)
        return out

    def recount_slots(self) -> int:
        total = 0
        stack = [(self.root, 0)]
        leaf_depth = self.config.depth - 1
        while stack:
            node, depth = stack.pop()
            total += 1 << node.bits
            if depth < leaf_depth:
                for child in node.children:
                    if child is not None:
                        stack.append((child, depth + 1))
        return total

    def slot_bytes(self) -> int:
        return self.slot_count * SLOT_BYTES

    def claims_quiescent(self) -> bool:
        """True when no node carries a transient creation claim."""
        leaf_depth = self.config.depth - 1
        stack = [(self.root, 0)]
        while stack:
            node, depth = stack.pop()
            if node.claims:
                return False
            if depth < leaf_depth:
                for child in node.children:
                    if child is not None:
                        stack.append((child, depth + 1))
        return True

    def adapt(self, new_config: FanoutConfig) -> "SortTree":
        """New tree under new_config holding exactly the same bindings.

        When a suffix of the fanout lists matches, the subtrees at that
        boundary are shared by reference instead of rebuilt; only the upper
        layers are re-created.  The receiver is left untouched, so readers
        holding it stay valid until the caller swaps trees.
        """
        if new_config.x != self.config.x:
            raise ValueError("adapt requires an equal id width")
        if new_config == self.config:
            return self
        old = self.config.fanouts
        new = new_config.fanouts
        max_k = min(len(old), len(new)) - 1
        k = 0
        for i in range(1, max_k + 1):
            if old[-i] == new[-i]:
                k = i
            else:
                break
        tree = SortTree(new_config)
        if k == 0:
            for vid, off in self.items():
                tree.insert(vid, off)
            return tree
        # collect shared subtree roots at the first layer of the suffix
        upper_old = len(old) - k
        shared = []  # (prefix value over x - suffix_bits bits, node)

        def collect(node, prefix, depth):
            for seg, child in enumerate(node.children):
                if child is None:
                    continue
                p = (prefix << node.bits) | seg
                if depth == upper_old - 1:
                    shared.append((p, child))
                else:
                    collect(child, p, depth + 1)

        collect(self.root, 0, 0)
        upper_new = len(new) - k
        extra = 0
        for prefix, sub in shared:
            node = tree.root
            for i in range(upper_new - 1):
                bits_below = sum(new[i + 1:upper_new])
                seg = (prefix >> bits_below) & ((1 << new[i]) - 1)
                child = node.children[seg]
                if child is None:
                    child = SortNode(new[i + 1])
                    tree.slot_count += 1 << new[i + 1]
                    node.children[seg] = child
                node = child
            seg = prefix & ((1 << new[upper_new - 1]) - 1)
            node.children[seg] = sub
            extra += _subtree_slots(sub, k)
        tree.slot_count += extra
        return tree


def _subtree_slots(node: SortNode, layers_below: int) -> int:
    total = 0
    stack = [(node, layers_below)]
    while stack:
        nd, rem = stack.pop()
        total += 1 << nd.bits
        if rem > 1:
            for child in nd.children:
                if child is not None:
                    stack.append((child, rem - 1))
    return total


def slot_count_for_ids(config: FanoutConfig, ids) -> int:
    """Exact slot_count a tree would have after inserting these ids.

    A layer-i node exists iff some id shares its s_(i-1)-bit prefix, so the
    count is 2^a_0 plus distinct-prefix counts times layer fanout.  Used for
    space-law measurements at scales where materializing millions of Python
    nodes would be wasteful; equals SortTree.slot_count exactly (cross-checked
    in the test suite).
    """
    import numpy as np

    arr = np.asarray(ids, dtype=np.uint64)
    x = config.x
    total = 1 << config.fanouts[0]
    s = config.fanouts[0]
    for a in config.fanouts[1:]:
        prefixes = np.unique(arr >> np.uint64(x - s))
        total += int(prefixes.size) * (1 << a)
        s += a
    return total
