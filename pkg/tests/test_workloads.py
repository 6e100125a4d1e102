"""Workload generators: distribution shapes, op mixes, trace round trips."""

import numpy as np
import pytest

from sortgraph.graph import GraphStore
from sortgraph.workloads import (
    DISTRIBUTIONS,
    WORKLOADS,
    apply_ops,
    draw_ids,
    gen_edges,
    gen_ops,
    replay,
    unique_ids,
)


class TestDrawIds:
    @pytest.mark.parametrize("dist", DISTRIBUTIONS)
    def test_in_range(self, dist):
        ids = draw_ids(np.random.default_rng(0), 20000, 12, dist)
        assert ids.min() >= (1 if dist == "heavy-tailed" else 0)
        assert ids.max() < (1 << 12)

    def test_skewed_caps_at_two_thirds(self):
        ids = draw_ids(np.random.default_rng(1), 50000, 10, "skewed")
        assert ids.max() <= 2 * ((1 << 10) - 1) // 3

    def test_uniform_covers_space(self):
        ids = draw_ids(np.random.default_rng(2), 50000, 6, "uniform")
        assert set(ids.tolist()) == set(range(64))

    def test_heavy_tail_log_buckets_carry_equal_mass(self):
        # inverse-frequency mass means each doubling bucket [2^k, 2^k+1)
        # catches about the same share of draws
        n = 200000
        ids = draw_ids(np.random.default_rng(3), n, 16, "heavy-tailed")
        shares = [
            np.count_nonzero((ids >= 1 << k) & (ids < 1 << (k + 1))) / n
            for k in range(4, 15)
        ]
        expect = 1.0 / 16  # ln(2^(k+1)/2^k) / ln(2^16)
        assert all(abs(s - expect) < 0.01 for s in shares)

    def test_heavy_tail_prefers_small_ids(self):
        ids = draw_ids(np.random.default_rng(4), 20000, 16, "heavy-tailed")
        assert np.count_nonzero(ids < 256) > np.count_nonzero(ids >= (1 << 15))

    def test_unknown_distribution_rejected(self):
        with pytest.raises(ValueError):
            draw_ids(np.random.default_rng(0), 10, 8, "zipf")


class TestUniqueIds:
    @pytest.mark.parametrize("dist", DISTRIBUTIONS)
    def test_count_and_distinctness(self, dist):
        ids = unique_ids(np.random.default_rng(5), 300, 10, dist)
        assert ids.size == 300
        assert np.unique(ids).size == 300
        assert ids.min() >= 0 and ids.max() < (1 << 10)

    def test_exhausting_the_space(self):
        ids = unique_ids(np.random.default_rng(6), 64, 6, "uniform")
        assert sorted(ids.tolist()) == list(range(64))

    def test_impossible_count_rejected(self):
        with pytest.raises(ValueError):
            unique_ids(np.random.default_rng(0), 65, 6, "uniform")

    def test_order_is_shuffled(self):
        ids = unique_ids(np.random.default_rng(7), 64, 6, "uniform")
        assert ids.tolist() != sorted(ids.tolist())


class TestGenOps:
    def test_mix_tracks_workload_weights(self):
        ops = gen_ops(np.random.default_rng(8), 20000, 12, "mixed", "uniform")
        counts = {k: 0 for k in ("iv", "dv", "ie", "ue", "de")}
        for op in ops:
            counts[op[0]] += 1
        for kind, want in zip(counts, WORKLOADS["mixed"]):
            assert counts[kind] / 20000 == pytest.approx(want, abs=0.02)

    def test_insert_workload_has_no_deletes(self):
        ops = gen_ops(np.random.default_rng(9), 5000, 12, "insert", "uniform")
        assert {op[0] for op in ops} == {"iv", "ie"}

    def test_ops_are_well_formed(self):
        ops = gen_ops(np.random.default_rng(10), 2000, 10, "mixed", "skewed")
        pool = set()
        for op in ops:
            pool.add(op[1])
            if op[0] in ("ie", "ue"):
                assert len(op) == 4 and op[3] > 0
            elif op[0] == "de":
                assert len(op) == 3
            else:
                assert len(op) == 2
        assert len(pool) <= max(16, 2000 // 8)

    def test_unknown_workload_rejected(self):
        with pytest.raises(ValueError):
            gen_ops(np.random.default_rng(0), 10, 8, "chaos", "uniform")

    def test_seed_determinism(self):
        a = gen_ops(np.random.default_rng(11), 500, 12, "mixed", "uniform")
        b = gen_ops(np.random.default_rng(11), 500, 12, "mixed", "uniform")
        assert a == b


class TestGenEdges:
    def test_shapes_and_weights(self):
        src, dst, w = gen_edges(np.random.default_rng(12), 5000, 14)
        assert src.size == dst.size == w.size == 5000
        assert w.min() >= 0.5 and w.max() < 1.5
        assert src.min() >= 1  # heavy-tailed source side
        assert dst.min() >= 0 and dst.max() < (1 << 14)

    def test_source_side_concentrates(self):
        src, dst, _ = gen_edges(np.random.default_rng(13), 20000, 16)
        # hubs: the busiest source sees far more than a uniform share
        _, counts = np.unique(src, return_counts=True)
        assert counts.max() > 50
        _, dcounts = np.unique(dst, return_counts=True)
        assert dcounts.max() < 20


class TestTraceRoundTrip:
    def test_records_only_accepted_ops(self):
        g = GraphStore(id_bits=8, expected_vertices=16, adaptive="off")
        ops = [("dv", 3), ("iv", 3), ("iv", 3), ("ue", 3, 9, 1.0),
               ("ie", 3, 9, 2.0), ("de", 3, 9)]
        records, handles = apply_ops(g, ops)
        assert handles == []
        # dv on a missing vertex, the redundant iv, and the ue against a
        # missing endpoint are all dropped
        assert [op for _, op in records] == [
            ("iv", 3), ("ie", 3, 9, 2.0), ("de", 3, 9)]
        times = [t for t, _ in records]
        assert times == sorted(times)

    def test_snapshots_taken_at_requested_steps(self):
        g = GraphStore(id_bits=8, expected_vertices=16, adaptive="off")
        ops = [("iv", i) for i in range(10)]
        records, handles = apply_ops(g, ops, snapshot_steps={0, 5})
        assert len(handles) == 2
        assert handles[0].t == 0  # taken before any op ran
        assert handles[1].t == 5
        for h in handles:
            h.release()

    def test_replay_matches_store_views(self):
        rng = np.random.default_rng(14)
        ops = gen_ops(rng, 2500, 9, "delete", "uniform", pool_size=60)
        g = GraphStore(id_bits=9, expected_vertices=32, adaptive="sync",
                       initial_blocks=8)
        steps = set(np.linspace(0, 2499, 8, dtype=int).tolist())
        records, handles = apply_ops(g, ops, snapshot_steps=steps)
        oracle = replay(records)
        pool = {op[1] for op in ops} | {op[2] for op in ops if len(op) > 2}
        for h in handles:
            visible = oracle.view_vertices(h.t)
            for vid in pool:
                assert g.has_vertex(vid, at=h) == (vid in visible)
                if vid in visible:
                    assert sorted(g.get_neighbors(vid, at=h)) == sorted(
                        oracle.view_neighbors(vid, h.t).items())
        for h in handles:
            h.release()
