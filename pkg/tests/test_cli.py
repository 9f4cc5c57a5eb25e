import csv
import io
import json

import pytest

from eventwalk import bench
from eventwalk.cli import main
from eventwalk.event_graph import EventGraph, gen_lower_bound_path, write_graph


@pytest.fixture
def lb2(tmp_path):
    g, _ = gen_lower_bound_path(2)
    p = tmp_path / "lb2.txt"
    write_graph(g, p)
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    report = json.loads(out.out) if out.out.strip().startswith("{") else None
    return code, report, out.err


def test_decide_member_with_walk(capsys, lb2):
    code, rep, err = run(capsys, "decide", lb2, "2", "1", "--certify", "--oracle-check")
    assert code == 0 and rep["ok"]
    res = rep["result"]
    assert res["verdict"] == "member" and res["oracle"] == "member"
    assert res["certificate"]["type"] == "walk" and res["certificate"]["verified"]
    assert "member" in err


def test_decide_non_member_separator(capsys, tmp_path, fringe8):
    p = tmp_path / "fringe8.txt"
    write_graph(fringe8, p)
    code, rep, _ = run(capsys, "decide", str(p), "0", "2,3", "--certify", "--oracle-check")
    assert code == 0
    cert = rep["result"]["certificate"]
    assert rep["result"]["verdict"] == "non-member"
    assert cert == {"type": "separator", "nodes": [1], "verified": True}


def test_decide_wrong_color(capsys, lb2):
    code, rep, _ = run(capsys, "decide", lb2, "2", "0x2", "--certify")
    assert code == 0 and rep["result"]["certificate"]["type"] == "wrong-color"


def test_malformed_file(capsys, tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("universe: a\n0 za 1\n")
    code, rep, err = run(capsys, "decide", str(p), "0", "a")
    assert code == 2 and rep is None and "line 2" in err


def test_missing_file_and_bad_node(capsys, lb2, tmp_path):
    assert run(capsys, "sink", str(tmp_path / "nope.txt"))[0] == 2
    assert run(capsys, "decide", lb2, "9", "1")[0] == 2
    assert run(capsys, "decide", lb2, "x", "1")[0] == 2


def test_sink_small4(capsys, tmp_path, small4):
    p = tmp_path / "small4.txt"
    write_graph(small4, p)
    code, rep, _ = run(capsys, "sink", str(p), "--enumerate")
    res = rep["result"]
    assert code == 0
    assert res["sink_components"] == 1 and res["nodes_represented"] == 4 and res["vertices"] == 16
    assert set(res["sets"]) == {"0", "1", "2", "3"}


def test_sink_exponential_cycle(capsys, tmp_path):
    p = tmp_path / "exp.txt"
    assert main(["gen", "exp-cycle", "--n", "8", "-o", str(p)]) == 0
    capsys.readouterr()
    code, rep, _ = run(capsys, "sink", str(p), "--summary")
    # 2**(n/2 - 1) sets at v1
    assert code == 0 and rep["result"]["sets_per_node"]["0"] == 8


def test_sink_oversized(capsys, tmp_path, monkeypatch):
    p = tmp_path / "big.txt"
    write_graph(gen_lower_bound_path(6)[0], p)
    monkeypatch.setenv("EVENTWALK_UNIVERSE_CAP", "3")
    assert run(capsys, "sink", str(p))[0] == 3


def test_sink_treats_queries_as_identity(capsys, tmp_path):
    g = EventGraph.build([("i", 0), ("q", 0), ("d", 0)], [(0, 1), (1, 2), (2, 0)], 1, values=[1.0])
    p = tmp_path / "q.txt"
    write_graph(g, p)
    code, rep, _ = run(capsys, "sink", str(p), "--enumerate")
    assert code == 0 and rep["result"]["sets"]["1"] == ["{}", "{1}"]


def test_walk_random_and_trace(capsys, tmp_path):
    g = tmp_path / "cyc.txt"
    main(["gen", "random-cycle", "--n", "64", "--seed", "3", "-o", str(g)])
    capsys.readouterr()
    trace = tmp_path / "trace.txt"
    code, rep, err = run(
        capsys, "walk", str(g), "--mode", "random", "--steps", "5000", "--seed", "4",
        "--audit-links", "sampled", "--trace-out", str(trace),
    )
    assert code == 0 and rep["ok"] and rep["seed"] == 4
    assert rep["result"]["oracle_mismatches"] == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == "# n=64 mode=random seed=4"
    assert len(lines) == 2 + 5001 and lines[2].startswith("0 0 ")
    again = run(capsys, "walk", str(g), "--mode", "random", "--steps", "5000", "--seed", "4", "--audit-links", "sampled")
    assert again[1]["result"]["answers_digest"] == rep["result"]["answers_digest"]


def test_walk_adversarial_directions(capsys, tmp_path):
    g = tmp_path / "cyc.txt"
    main(["gen", "random-cycle", "--n", "20", "-o", str(g)])
    d = tmp_path / "dirs.txt"
    d.write_text("++++--\n-+-+ +++\n")
    capsys.readouterr()
    code, rep, _ = run(capsys, "walk", str(g), "--mode", "adversarial", "--directions", f"@{d}", "--s", "2")
    assert code == 0 and rep["result"]["steps"] == 13 and rep["result"]["trace"] == "directions"
    assert run(capsys, "walk", str(g), "--mode", "adversarial")[0] == 2
    assert run(capsys, "walk", str(g), "--mode", "adversarial", "--directions", "+x-")[0] == 2
    code, rep, _ = run(capsys, "walk", str(g), "--mode", "adversarial", "--strategy", "sweep", "--steps", "300")
    assert code == 0 and rep["result"]["trace"] == "sweep"


def test_walk_config_error(capsys, tmp_path):
    g = tmp_path / "cyc.txt"
    main(["gen", "random-cycle", "--n", "20", "-o", str(g)])
    capsys.readouterr()
    assert run(capsys, "walk", str(g), "--mode", "random", "--s", "2")[0] == 2


def test_gen_kinds(capsys, tmp_path):
    p = tmp_path / "h.txt"
    code, rep, _ = run(capsys, "gen", "hamiltonian", "--n", "3", "--edges", "0-1,1-2", "-o", str(p))
    assert code == 0 and rep["result"]["nodes"] == 8 and rep["result"]["k"] == 5
    code, rep, _ = run(capsys, "gen", "lower-bound", "--m", "4", "-o", str(p))
    assert rep["result"]["query_node"] == 4 and rep["result"]["nodes"] == 9
    code, rep, _ = run(capsys, "gen", "random-strict", "--n", "8", "--m", "3", "-o", str(p))
    assert code == 0 and rep["result"]["elements"] == 3
    assert run(capsys, "gen", "hamiltonian", "--edges", "0:1", "-o", str(p))[0] == 2


def test_bench_strip_csv(capsys):
    assert main(["bench", "strip"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["suite", "case", "metric", "value"]
    ratios = [float(r[3]) for r in rows[1:] if r[2] == "storage_ratio"]
    assert len(ratios) == 15 and max(ratios) <= 16


def test_bench_usage_errors(capsys):
    assert main(["bench", ""]) == 2
    assert main(["bench", "nope"]) == 2
    assert main([]) == 2


def test_bench_deterministic_rows():
    a = [r for r in bench.strip_rows(seed=1, sizes=(16,)) if r[2] != "query_us"]
    b = [r for r in bench.strip_rows(seed=1, sizes=(16,)) if r[2] != "query_us"]
    assert a == b


def test_bench_engine_scale_small():
    rows = list(bench.engine_scale_rows(steps=20_000, sizes=(100, 400)))
    ratio = [r for r in rows if r[2] == "fg_ops_ratio"]
    assert len(ratio) == 1 and ratio[0][3] > 0
