import json
import subprocess
import sys

import jsonschema
import pytest

from qfsm.cli import QUERY_SCHEMA, main, result_from_dict
from qfsm.fsm import halting_set

from machines import LOOP7_PATH, LOOP7_TABLE, M2, M2_PATH


def cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_compile_loop7_table(capsys):
    code, out, _ = cli(capsys, "compile", "--fsm", LOOP7_PATH, "--max-len", 1)
    assert code == 0
    assert LOOP7_TABLE in out
    assert "schedule E=3 T=11" in out
    assert out.count("->") == 9 + 32  # arcs plus every table row


def test_compile_m2(capsys):
    code, out, _ = cli(capsys, "compile", "--fsm", M2_PATH, "--halts-at", 2, "--max-len", 3)
    assert code == 0
    assert "input=5" in out and "targets 2" in out
    assert "marked 4" in out


def test_compile_json_deterministic(capsys):
    _, a, _ = cli(capsys, "compile", "--regex", "0*10*1", "--accepts", "--max-len", 3, "--json")
    _, b, _ = cli(capsys, "compile", "--regex", "0*10*1", "--accepts", "--max-len", 3, "--json")
    assert a == b
    data = json.loads(a)
    assert data["registers"]["input"] == 5
    assert len(data["um"]) + len(data["um_completion"]) == 4 << data["registers"]["node"]


def test_regex_and_file_agree(capsys):
    _, a, _ = cli(capsys, "verify", "--regex", "0*10*1", "--accepts", "--max-len", 3, "--json")
    _, b, _ = cli(capsys, "verify", "--fsm", M2_PATH, "--halts-at", 2, "--max-len", 3, "--json")
    assert json.loads(a)["quantum"] == json.loads(b)["quantum"] == ["11", "101", "011"]


def test_run_loop7(capsys):
    code, out, _ = cli(capsys, "run", "--fsm", LOOP7_PATH, "--max-len", 1, "1")
    assert code == 0
    lines = out.splitlines()
    assert lines[2].split()[:3] == ["0", "0", "110"]
    assert "   8    0 000 " in out
    assert lines[-1].endswith("ok")


def test_run_empty_word_reads_marker(capsys):
    code, out, _ = cli(capsys, "run", "--fsm", M2_PATH, "--halts-at", 2, "--max-len", 2)
    assert code == 0
    first = out.splitlines()[2]
    assert first.endswith("read") and first.split()[2] == "0010"
    assert "marked no (classical no)" in out


def test_run_marked_word(capsys):
    code, out, _ = cli(capsys, "run", "--fsm", M2_PATH, "--halts-at", 2, "--max-len", 3, "011")
    assert code == 0 and "marked yes (classical yes)" in out


@pytest.mark.parametrize("argv", [
    ["run", "--fsm", M2_PATH, "--max-len", 1, "011"],
    ["run", "--fsm", M2_PATH, "--max-len", 3, "012"],
    ["query", "--fsm", M2_PATH],
    ["query", "--fsm", M2_PATH, "--halts-at", 2, "--iterations", "lots"],
    ["compile", "--regex", "1**"],
    ["compile", "--fsm", "/nonexistent.fsm"],
    ["query", "--regex", "1", "--halts-at", "x"],
])
def test_usage_errors(capsys, argv):
    assert cli(capsys, *argv)[0] == 2


def test_eps_cycle_surfaces(capsys, tmp_path):
    path = tmp_path / "cycle.fsm"
    path.write_text("start 0\narc 0 e 1\narc 1 e 0\n")
    code, _, err = cli(capsys, "verify", "--fsm", path, "--halts-at", 0)
    assert code == 2 and "eps cycle" in err


def test_query_m2(capsys):
    code, out, _ = cli(capsys, "query", "--fsm", M2_PATH, "--halts-at", 2, "--max-len", 3, "--seed", 42)
    assert code == 0
    rows = [line.split("\t") for line in out.splitlines()[3:]]
    marked = {w for w, _, flag in rows if flag == "yes"}
    assert marked and marked <= {"11", "011", "101"}


def test_query_no_solution(capsys, tmp_path):
    path = tmp_path / "island.fsm"
    path.write_text(M2_PATH.read_text() + "arc 3 0 3\n")
    code, out, _ = cli(capsys, "query", "--fsm", path, "--halts-at", 3, "--max-len", 3, "--iterations", "bbht")
    assert code == 0 and "no solution found" in out


def test_query_discovers_whole_language(capsys):
    code, out, _ = cli(capsys, "query", "--fsm", M2_PATH, "--halts-at", 2, "--shots", 2000, "--json")
    data = json.loads(out)
    found = {s["word"] for s in data["samples"] if s["marked"]}
    assert found == halting_set(M2, {2}, 6) and len(found) == 15


def test_query_json_schema_roundtrip(capsys):
    _, out, _ = cli(capsys, "query", "--fsm", M2_PATH, "--halts-at", 2, "--max-len", 4, "--json", "--timing")
    data = json.loads(out)
    jsonschema.validate(data, QUERY_SCHEMA)
    assert isinstance(data["timing_ms"], float)
    result = result_from_dict(data)
    again = {"query": data["query"], "search": {"mode": result.mode, "iterations": result.iterations,
                                                 "marked_mass": result.marked_mass, "seed": result.seed},
             "samples": [{"word": s.word, "count": s.count, "marked": s.marked} for s in result.samples],
             "timing_ms": data["timing_ms"]}
    assert again == data


def test_query_trace(capsys):
    _, out, _ = cli(capsys, "query", "--fsm", M2_PATH, "--halts-at", 2, "--max-len", 3,
                    "--iterations", 2, "--trace")
    assert "round 2 marked_mass=" in out


def test_verify_m2(capsys):
    code, out, _ = cli(capsys, "verify", "--fsm", M2_PATH, "--halts-at", 2, "--max-len", 6)
    assert code == 0
    assert "classical 15 words" in out and out.rstrip().endswith("verify PASS")


def test_verify_fixed_iterations(capsys):
    code, out, _ = cli(capsys, "verify", "--fsm", M2_PATH, "--halts-at", 2, "--max-len", 4, "--iterations", 3)
    assert code == 0 and "rounds=3" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qfsm", "verify", "--regex", "1", "--accepts", "--max-len", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "verify PASS" in proc.stdout
