"""Plain-dict reference model of the graph store's visible semantics.

Keeps full history in the simplest possible shape: per vertex, a list of
(birth, death) incarnations; per (src, dst) pair, the time-ordered list of
weight writes, with None standing for a deletion.  Queries recompute
answers from history on every call.  No concurrency, no recycling, no
compaction: this is the behavioral yardstick the engine is checked
against, so clarity beats speed everywhere.
"""

from __future__ import annotations

__all__ = ["OracleError", "OracleGraph"]


class OracleError(Exception):
    """Raised where the engine would reject the same operation."""


class OracleGraph:
    def __init__(self):
        # vid -> [[birth, death|None], ...], births strictly increasing
        self.verts: dict[int, list[list]] = {}
        # src -> dst -> [(t, weight|None), ...], times strictly increasing
        self.edges: dict[int, dict[int, list[tuple]]] = {}

    def _live(self, vid: int):
        incs = self.verts.get(vid)
        if incs and incs[-1][1] is None:
            return incs[-1]
        return None

    def _incarnation_at(self, vid: int, t: int):
        for inc in reversed(self.verts.get(vid, ())):
            if inc[0] <= t:
                if inc[1] is None or t <= inc[1]:
                    return inc
                return None
        return None

    def apply(self, op: tuple, t: int):
        """Replay one recorded operation at its commit time."""
        kind = op[0]
        if kind == "iv":
            self.insert_vertex(op[1], t)
        elif kind == "dv":
            self.delete_vertex(op[1], t)
        elif kind == "ie":
            self.insert_edge(op[1], op[2], op[3], t)
        elif kind == "ue":
            self.update_edge(op[1], op[2], op[3], t)
        elif kind == "de":
            self.delete_edge(op[1], op[2], t)
        else:
            raise ValueError(f"unknown op {kind!r}")

    def insert_vertex(self, vid: int, t: int) -> bool:
        """New incarnation unless one is already alive (then a no-op)."""
        incs = self.verts.setdefault(vid, [])
        if incs and incs[-1][1] is None:
            return False
        incs.append([t, None])
        return True

    def delete_vertex(self, vid: int, t: int) -> None:
        inc = self._live(vid)
        if inc is None:
            raise OracleError(f"vertex {vid} not found")
        inc[1] = t

    def insert_edge(self, u: int, v: int, w: float, t: int) -> None:
        if w == 0:
            raise OracleError("zero weight is reserved for deletions")
        self.insert_vertex(u, t)
        self.insert_vertex(v, t)
        self.edges.setdefault(u, {}).setdefault(v, []).append((t, w))

    def update_edge(self, u: int, v: int, w: float, t: int) -> None:
        if w == 0:
            raise OracleError("zero weight is reserved for deletions")
        if self._live(u) is None or self._live(v) is None:
            raise OracleError("endpoint not found")
        self.edges.setdefault(u, {}).setdefault(v, []).append((t, w))

    def delete_edge(self, u: int, v: int, t: int) -> None:
        if self._live(u) is None or self._live(v) is None:
            raise OracleError("endpoint not found")
        self.edges.setdefault(u, {}).setdefault(v, []).append((t, None))

    def view_neighbors(self, vid: int, t: int) -> dict:
        """{dst: weight} of vid's live out-edges as of time t.

        Only writes made during the incarnation of vid that covers t count
        (edges never survive a source's delete/re-insert cycle); per
        destination the last write at or before t wins; a surviving edge is
        shown unless the destination incarnation it was written against was
        already deleted before t.
        """
        inc = self._incarnation_at(vid, t)
        if inc is None:
            raise OracleError(f"vertex {vid} not visible at {t}")
        birth = inc[0]
        out = {}
        for dst, writes in self.edges.get(vid, {}).items():
            last = None
            for tw, w in writes:
                if tw > t:
                    break
                if tw >= birth:
                    last = (tw, w)
            if last is None or last[1] is None:
                continue
            dinc = self._incarnation_at(dst, last[0])
            if dinc is None:
                continue
            if dinc[1] is None or t <= dinc[1]:
                out[dst] = last[1]
        return out

    def view_vertices(self, t: int) -> set:
        return {vid for vid in self.verts if self._incarnation_at(vid, t)}

    def view_edges(self, t: int) -> dict:
        """{(u, v): weight} over every vertex visible at t."""
        out = {}
        for u in self.view_vertices(t):
            for v, w in self.view_neighbors(u, t).items():
                out[(u, v)] = w
        return out
