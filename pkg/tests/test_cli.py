"""CLI surface: output formats, file parsing, error paths, determinism."""

import json

import pytest
from click.testing import CliRunner

from sortgraph import analytics as alg
from sortgraph.cli import main
from sortgraph.graph import GraphStore


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def diamond_file(tmp_path):
    p = tmp_path / "diamond.txt"
    p.write_text(
        "# weighted diamond plus an isolated pair\n"
        "1 2 1.0\n"
        "1 3 4.0   # detour\n"
        "2 4 2.0\n"
        "\n"
        "3 4 1.0\n"
        "6 7\n"
    )
    return str(p)


def diamond_store():
    g = GraphStore(id_bits=32, expected_vertices=5, adaptive="off")
    for u, v, w in [(1, 2, 1.0), (1, 3, 4.0), (2, 4, 2.0), (3, 4, 1.0),
                    (6, 7, 1.0)]:
        g.insert_edge(u, v, w)
    return g


class TestOptimize:
    def test_json_payload(self, runner):
        r = runner.invoke(main, ["optimize", "-n", "50000", "--l", "5"])
        assert r.exit_code == 0
        payload = json.loads(r.output)
        assert payload["command"] == "optimize"
        assert payload["fanouts"] == [19, 4, 3, 3, 3]
        assert payload["expected_index_bytes"] == pytest.approx(
            payload["expected_slots"] * 8)
        assert payload["params"] == {"id_bits": 32, "n": 50000, "l": 5,
                                     "prune": True}

    def test_csv_rows(self, runner):
        r = runner.invoke(main, ["optimize", "-n", "50000", "--l", "5",
                                 "--format", "csv"])
        assert r.exit_code == 0
        assert r.output.splitlines() == [
            "layer,fanout_bits", "0,19", "1,4", "2,3", "3,3", "4,3"]

    def test_out_file(self, runner, tmp_path):
        dest = tmp_path / "plan.json"
        r = runner.invoke(main, ["optimize", "-n", "1000", "--out", str(dest)])
        assert r.exit_code == 0 and r.output == ""
        assert json.loads(dest.read_text())["command"] == "optimize"

    def test_prune_toggle_same_answer(self, runner):
        a = runner.invoke(main, ["optimize", "-n", "300000", "--l", "5"])
        b = runner.invoke(main, ["optimize", "-n", "300000", "--l", "5",
                                 "--no-prune"])
        assert json.loads(a.output)["fanouts"] == json.loads(b.output)["fanouts"] \
            == [20, 3, 3, 3, 3]

    def test_bad_n_fails_cleanly(self, runner):
        r = runner.invoke(main, ["optimize", "-n", "17", "--id-bits", "4"])
        assert r.exit_code == 2
        assert "error: n must be in [1, 2^x]" in r.stderr


class TestIngest:
    def test_reports_counts_and_memory(self, runner, diamond_file):
        r = runner.invoke(main, ["ingest", "--graph", diamond_file])
        assert r.exit_code == 0
        payload = json.loads(r.output)
        assert payload["vertices"] == 6
        assert payload["edges"] == 5
        assert payload["memory"]["total_bytes"] > 0
        assert payload["throughput_ops_per_sec"] > 0

    def test_undirected_doubles_edges(self, runner, diamond_file):
        r = runner.invoke(main, ["ingest", "--graph", diamond_file,
                                 "--undirected"])
        assert json.loads(r.output)["edges"] == 10

    def test_zero_weight_remapped_with_warning(self, runner, tmp_path):
        p = tmp_path / "z.txt"
        p.write_text("1 2 0.0\n")
        r = runner.invoke(main, ["ingest", "--graph", str(p)])
        assert r.exit_code == 0
        assert f"warning: {p}:1: zero weight remapped" in r.stderr
        assert json.loads(r.stdout)["edges"] == 1

    @pytest.mark.parametrize("line,msg", [
        ("1 2 3 4", "expected 'src dst [weight]'"),
        ("a 2", "ids must be integers"),
        ("-1 2", "negative vertex id"),
        ("1 2 soup", "bad weight"),
    ])
    def test_parse_errors_carry_line_numbers(self, runner, tmp_path, line, msg):
        p = tmp_path / "bad.txt"
        p.write_text("1 2 1.0\n" + line + "\n")
        r = runner.invoke(main, ["ingest", "--graph", str(p)])
        assert r.exit_code == 2
        assert f"error: {p}:2: " in r.stderr and msg in r.stderr

    def test_id_width_enforced(self, runner, tmp_path):
        p = tmp_path / "wide.txt"
        p.write_text("1 300\n")
        r = runner.invoke(main, ["ingest", "--graph", str(p), "--id-bits", "8"])
        assert r.exit_code == 2
        assert "id 300 does not fit in 8 bits" in r.stderr

    def test_missing_file_rejected(self, runner):
        r = runner.invoke(main, ["ingest", "--graph", "/no/such/file"])
        assert r.exit_code == 2


class TestAnalyticsCommands:
    def test_bfs_matches_library(self, runner, diamond_file):
        r = runner.invoke(main, ["analytics", "bfs", "--graph", diamond_file,
                                 "--source", "1"])
        assert r.exit_code == 0
        payload = json.loads(r.output)
        assert payload["command"] == "analytics/bfs"
        assert dict(map(tuple, payload["result"])) == alg.bfs(diamond_store(), 1)

    def test_bfs_csv_header(self, runner, diamond_file):
        r = runner.invoke(main, ["analytics", "bfs", "--graph", diamond_file,
                                 "--source", "1", "--format", "csv"])
        lines = r.output.splitlines()
        assert lines[0] == "vertex_id,hops"
        assert lines[1] == "1,0"

    def test_bfs_missing_source(self, runner, diamond_file):
        r = runner.invoke(main, ["analytics", "bfs", "--graph", diamond_file,
                                 "--source", "99"])
        assert r.exit_code == 2
        assert "error: vertex 99 not visible" in r.stderr

    def test_sssp(self, runner, diamond_file):
        r = runner.invoke(main, ["analytics", "sssp", "--graph", diamond_file,
                                 "--source", "1"])
        got = dict(map(tuple, json.loads(r.output)["result"]))
        assert got == {"1": 0.0, "2": 1.0, "3": 4.0, "4": 3.0} or \
            got == {1: 0.0, 2: 1.0, 3: 4.0, 4: 3.0}

    def test_khop(self, runner, diamond_file):
        r = runner.invoke(main, ["analytics", "khop", "--graph", diamond_file,
                                 "--source", "1", "--k", "1"])
        got = {vid for vid, _ in json.loads(r.output)["result"]}
        assert got == {2, 3}

    def test_pagerank(self, runner, diamond_file):
        r = runner.invoke(main, ["analytics", "pagerank", "--graph",
                                 diamond_file, "--iters", "5"])
        got = dict(map(tuple, json.loads(r.output)["result"]))
        want = alg.pagerank(diamond_store(), iterations=5)
        assert got.keys() == want.keys()
        for k in want:
            assert got[k] == pytest.approx(want[k], abs=1e-12)

    def test_wcc(self, runner, diamond_file):
        r = runner.invoke(main, ["analytics", "wcc", "--graph", diamond_file])
        got = dict(map(tuple, json.loads(r.output)["result"]))
        assert got == {1: 1, 2: 1, 3: 1, 4: 1, 6: 6, 7: 6}

    def test_tc_undirected_closure(self, runner, tmp_path):
        p = tmp_path / "tri.txt"
        p.write_text("1 2\n2 3\n3 1\n")
        r = runner.invoke(main, ["analytics", "tc", "--graph", str(p)])
        assert json.loads(r.output)["triangles"] == 1

    def test_bc(self, runner, diamond_file):
        r = runner.invoke(main, ["analytics", "bc", "--graph", diamond_file,
                                 "--sources", "1,2,3"])
        got = dict(map(tuple, json.loads(r.output)["result"]))
        want = alg.betweenness(diamond_store(), [1, 2, 3])
        assert got.keys() == want.keys()
        for k in want:
            assert got[k] == pytest.approx(want[k], abs=1e-12)

    def test_bc_rejects_empty_sources(self, runner, diamond_file):
        r = runner.invoke(main, ["analytics", "bc", "--graph", diamond_file,
                                 "--sources", ","])
        assert r.exit_code == 2
        assert "--sources is empty" in r.stderr


class TestCompareIndex:
    def test_deterministic_and_well_formed(self, runner):
        args = ["compare-index", "--sizes", "200,400", "--seeds", "2",
                "--id-bits", "16"]
        a = runner.invoke(main, args)
        b = runner.invoke(main, args)
        assert a.exit_code == 0 and a.output == b.output
        lines = a.output.splitlines()
        assert lines[0] == "n,seed,planned_bytes,veb_bytes,uniform_bytes"
        assert len(lines) == 5
        for line in lines[1:]:
            n, seed, planned, veb, uniform = map(int, line.split(","))
            assert planned % 8 == veb % 8 == uniform % 8 == 0
            assert min(planned, veb, uniform) > 0

    def test_json_has_config_block(self, runner):
        r = runner.invoke(main, ["compare-index", "--sizes", "100",
                                 "--seeds", "1", "--id-bits", "16",
                                 "--format", "json"])
        payload = json.loads(r.output)
        assert payload["configs"]["veb"] == [8, 4, 2, 1, 1]
        assert payload["configs"]["uniform"] == [8, 8]
        assert len(payload["rows"]) == 1

    def test_bad_sizes_rejected(self, runner):
        r = runner.invoke(main, ["compare-index", "--sizes", "10,banana"])
        assert r.exit_code == 2
        assert "bad --sizes" in r.stderr


class TestBench:
    def test_single_thread_payload(self, runner):
        r = runner.invoke(main, ["bench", "--ops", "2000", "--id-bits", "12",
                                 "--seed", "1"])
        assert r.exit_code == 0
        payload = json.loads(r.output)
        assert payload["params"]["threads"] == 1
        assert 0 < payload["accepted_ops"] <= 2000
        assert payload["throughput_ops_per_sec"] > 0
        assert len(payload["series"]) == 10
        assert payload["compaction_entry_visits"] >= 0
        assert set(payload["memory"]) == {
            "index_bytes", "table_bytes", "snapshot_bytes", "log_bytes",
            "bitmap_bytes", "total_bytes"}

    def test_multi_thread_series(self, runner):
        r = runner.invoke(main, ["bench", "--ops", "2000", "--id-bits", "12",
                                 "--threads", "2"])
        assert r.exit_code == 0
        payload = json.loads(r.output)
        assert [s["thread"] for s in payload["series"]] == [0, 1]
        assert sum(s["ops"] for s in payload["series"]) == 2000


class TestVerify:
    def test_seeded_trace_checks_out(self, runner):
        r = runner.invoke(main, ["verify", "--ops", "3000", "--id-bits", "10",
                                 "--snapshots", "5", "--seed", "3"])
        assert r.exit_code == 0
        assert r.output.startswith("verify: OK ops=")

    @pytest.mark.parametrize("workload", ["insert", "delete", "mixed"])
    def test_all_workloads_pass(self, runner, workload):
        r = runner.invoke(main, ["verify", "--ops", "1500", "--id-bits", "9",
                                 "--workload", workload])
        assert r.exit_code == 0, r.output


class TestTopLevel:
    def test_version(self, runner):
        r = runner.invoke(main, ["--version"])
        assert r.exit_code == 0 and "0.1.0" in r.output

    def test_help_lists_commands(self, runner):
        r = runner.invoke(main, ["--help"])
        for cmd in ("optimize", "ingest", "bench", "compare-index",
                    "analytics", "verify"):
            assert cmd in r.output
