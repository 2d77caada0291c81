import csv
import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geonet.cli import BENCH_COLUMNS, main
from geonet.geometry import ParameterError
from geonet.netsim import KT0
from geonet.topology import (
    TOPOLOGIES,
    ParseError,
    dumps_network,
    loads_network,
    make_network,
    parse_topology,
    read_network,
    write_network,
)


@pytest.mark.parametrize("kind", TOPOLOGIES)
def test_topologies_connected(kind):
    for n in (1, 2, 7, 30):
        net = make_network(n, kind, seed=3)
        assert net.n == n
        seen, stack = {0}, [0]
        while stack:
            for w in net.adjacency[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        assert len(seen) == n


def test_parse_topology():
    assert parse_topology("random_connected(0.25)") == ("random_connected", 0.25)
    assert parse_topology("path") == ("path", 0.1)
    with pytest.raises(ParameterError):
        parse_topology("torus")


def test_generator_is_seeded():
    a = make_network(40, "random_connected(0.1)", seed=5)
    b = make_network(40, "random_connected(0.1)", seed=5)
    c = make_network(40, "random_connected(0.1)", seed=6)
    assert dumps_network(a) == dumps_network(b) != dumps_network(c)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(0, 1000), st.sampled_from([2.0, 1.5, 3.0]), st.booleans())
def test_roundtrip_byte_stable(n, seed, c, kt0):
    net = make_network(n, "random_connected(0.2)", c=c, seed=seed, knowledge=KT0 if kt0 else "KT1")
    meta = {"seed": seed, "note": "x y"}
    text = dumps_network(net, meta)
    again, got = loads_network(text)
    assert got == meta
    assert again.positions == net.positions and again.edges == net.edges
    assert again.c == net.c and again.knowledge == net.knowledge
    assert dumps_network(again, got) == text


def test_file_roundtrip(tmp_path):
    net = make_network(12, "cycle", seed=1)
    path = tmp_path / "net.txt"
    write_network(path, net, {"k": [1, 2]})
    again, meta = read_network(path)
    assert meta == {"k": [1, 2]}
    assert dumps_network(again, meta) == path.read_text()


def test_comments_and_blank_lines_ignored():
    text = "# hello\n\ngeonet v1 n=2 c=2 kt=1\n0 1 1\n\n1 2 2\ne 0 1\n"
    net, _ = loads_network(text)
    assert net.n == 2 and net.edges == ((0, 1),)


@pytest.mark.parametrize("text,line", [
    ("bogus\n", 1),
    ("geonet v1 n=2 c=2 kt=1\n0 1 1\n2 2 2\ne 0 1\n", 3),  # ids out of order
    ("geonet v1 n=2 c=2 kt=1\n0 1 1\n1 2 2\ne 0 x\n", 4),
    ("geonet v1 n=2 c=2 kt=1\n0 1 1\n1 2 2\ne 0 1\nm key {oops\n", 5),
    ("geonet v1 n=3 c=2 kt=1\n0 1 1\n1 2 2\ne 0 1\n", 4),  # too few nodes
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as exc:
        loads_network(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_disconnected_file_rejected():
    with pytest.raises(ParseError):
        loads_network("geonet v1 n=3 c=2 kt=1\n0 1 1\n1 2 2\n2 3 3\ne 0 1\n")


# -- command line -----------------------------------------------------------------

def test_cli_gen_network_and_run(tmp_path, capsys):
    out = tmp_path / "n.txt"
    assert main(["gen-network", "--n", "30", "--seed", "2", "--out", str(out)]) == 0
    assert main(["run-diameter", "--network", str(out), "--eps", "0.1"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["algorithm"] == "diameter" and rec["ok"]
    assert rec["ratio"] >= 0.9


def test_cli_run_closest_two_nodes(capsys):
    assert main(["run-closest", "--n", "2", "--topology", "path"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["ratio"] == 1.0


def test_cli_run_hull_and_kernel(capsys):
    for cmd in ("run-hull", "run-kernel"):
        assert main([cmd, "--n", "25", "--eps", "0.2", "--policy", "random:5", "--seed", "3"]) == 0
        assert json.loads(capsys.readouterr().out)["ok"]


def test_cli_verify_gadget_exhaustive(capsys):
    assert main(["verify-gadget", "--kind", "diameter", "--exhaustive", "--N", "4"]) == 0
    assert "256/256" in capsys.readouterr().out


def test_cli_gadget_file_roundtrip(tmp_path, capsys):
    out = tmp_path / "g.txt"
    assert main(["gen-gadget", "--kind", "hull", "--a", "1010", "--b", "0110", "--out", str(out)]) == 0
    assert main(["verify-gadget", "--network", str(out)]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["claim_holds"] and rec["expected_answer"]


def test_cli_bench_rows(capsys):
    assert main(["bench", "--algo", "kernel", "--n", "20,40", "--eps", "0.5,0.1", "--seeds", "2"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 2 * 2 * 2
    assert list(rows[0]) == list(BENCH_COLUMNS)
    assert all(r["ok"] == "True" for r in rows)


def test_cli_bench_json_closest(capsys):
    assert main(["bench", "--algo", "closest", "--n", "30", "--k", "4,9", "--seeds", "1",
                 "--format", "json"]) == 0
    rows = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert [r["eps_or_k"] for r in rows] == [4, 9]


def test_cli_path_pivot(capsys):
    assert main(["path-pivot", "--m", "4", "--N", "8", "--seeds", "5"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["answers_correct"] and rec["within_bound"]


def test_cli_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("geonet v1 n=2 c=2 kt=1\n0 1 1\nnope\n")
    assert main(["run-kernel", "--network", str(bad)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_cli_parameter_error_exit_code(capsys):
    assert main(["run-closest", "--n", "50", "--k", "64"]) == 2
    assert "error" in capsys.readouterr().err
