import csv
import json
import os

import numpy as np
import pytest

from dlsq import cli, problemfile
from dlsq.problemfile import ProblemFileError, dumps, load, loads

from conftest import FIVE_W


def _tiny(**params):
    doc = {
        "graph": {"m": 2, "weights": [[1, 1, 1.0], [1, 2, 1.0], [2, 2, 1.0]]},
        "equations": {"agents": [{"A": [[1.0, 0.0]], "b": [1.0]},
                                 {"A": [[0.0, 1.0]], "b": [2.0]}]},
    }
    if params:
        doc["params"] = params
    return doc


def _write(tmp_path, doc, name="p.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(path)


def test_fixture_round_trip():
    pf = load("five_agents")
    np.testing.assert_array_equal(pf.weights, FIVE_W)
    again = loads(dumps(pf))
    np.testing.assert_array_equal(again.weights, pf.weights)
    assert again.params == pf.params
    for a, b in zip(again.blocks, pf.blocks):
        np.testing.assert_array_equal(a.A, b.A)


def test_weights_mirrored_and_duplicates_checked():
    pf = loads(json.dumps(_tiny()))
    assert pf.weights[1, 0] == 1.0
    doc = _tiny()
    doc["graph"]["weights"].append([2, 1, 3.0])
    with pytest.raises(ProblemFileError, match="conflicts"):
        loads(json.dumps(doc))


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(extra=1),
    lambda d: d["graph"].update(directed=True),
    lambda d: d["equations"]["agents"][0].update(weight=2),
    lambda d: d.update(params={"alpha": 1}),
])
def test_unknown_keys_rejected(mutate):
    doc = _tiny()
    mutate(doc)
    with pytest.raises(ProblemFileError, match="unknown key"):
        loads(json.dumps(doc))


def test_json_errors_report_position():
    with pytest.raises(ProblemFileError, match="line 3, column"):
        loads('{\n  "graph": {},\n  oops\n}')


def test_inconsistent_files_rejected():
    doc = _tiny()
    doc["equations"]["agents"][1]["A"] = [[1.0, 2.0, 3.0]]
    with pytest.raises(ProblemFileError, match="disagree"):
        loads(json.dumps(doc))
    doc = _tiny()
    doc["graph"]["weights"][0] = [1, 3, 1.0]
    with pytest.raises(ProblemFileError, match="out of range"):
        loads(json.dumps(doc))
    with pytest.raises(ProblemFileError):
        loads(json.dumps(_tiny(init="ones")))


def test_run_writes_artifacts(tmp_path, capsys):
    code = cli.main(["run", "five_agents", "--out", str(tmp_path), "--plot"])
    assert code == 0
    with open(tmp_path / "metrics.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "W", "consensus_spread", "normal_eq_residual"]
    final = json.loads((tmp_path / "final_states.json").read_text())
    # record_every = 1: one row per round plus round 0 and the header
    assert len(rows) == final["rounds"] + 2
    assert float(rows[1][1]) == 141928.0
    assert final["reason"] == "tolerance" and final["is_lsq_solution"]
    assert len(final["agents"]) == 5
    svg = (tmp_path / "convergence.svg").read_text()
    assert svg.startswith("<svg") and "<polyline" in svg
    assert not [f for f in os.listdir(tmp_path) if f.startswith(".tmp-")]
    assert "tolerance after" in capsys.readouterr().out


def test_run_max_rounds_exit_code(tmp_path):
    assert cli.main(["run", "five_agents", "--max-rounds", "10", "--out", str(tmp_path)]) == 2


def test_run_record_every(tmp_path):
    code, art = cli.cmd_run(load("five_agents").with_params(max_rounds=25, record_every=10),
                            str(tmp_path))
    assert code == 2
    with open(art.metrics) as fh:
        assert [r[0] for r in csv.reader(fh)][1:] == ["0", "10", "20", "25"]


def test_check_and_gains_file(tmp_path, capsys):
    assert cli.main(["check", "five_agents"]) == 0
    assert "convergence conditions: hold" in capsys.readouterr().out
    gains = tmp_path / "g.json"
    gains.write_text(json.dumps([10.0] * 5))
    assert cli.main(["check", "five_agents", "--gains", str(gains)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_analyze_writes_spectrum(tmp_path):
    assert cli.main(["analyze", "five_agents", "--c", "2", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "spectrum.json").read_text())
    assert rep["unit_eigenvalue"]["algebraic"] == 5
    assert rep["passed"] and rep["pencil"]["passed"]
    mags = [e["abs"] for e in rep["eigenvalues"]]
    assert mags == sorted(mags, reverse=True) and len(mags) == 40


def test_invalid_inputs_exit_1(tmp_path, capsys):
    assert cli.main(["check", "five_agents", "--c", "-1"]) == 1
    disconnected = _tiny()
    disconnected["graph"]["weights"] = [[1, 1, 1.0], [2, 2, 1.0]]
    assert cli.main(["run", _write(tmp_path, disconnected), "--out", str(tmp_path)]) == 1
    assert "disconnected" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 1
    assert cli.main(["check", _write(tmp_path, "{not json", "bad.json")]) == 1


def test_file_params_are_used(tmp_path):
    path = _write(tmp_path, _tiny(c=1.0, max_rounds=3))
    code, art = cli.cmd_run(load(path), str(tmp_path))
    assert code == 2
    assert json.loads(open(art.final_states).read())["c"] == 1.0


def test_write_atomic_replaces(tmp_path):
    path = tmp_path / "out.txt"
    problemfile.write_atomic(str(path), "a")
    problemfile.write_atomic(str(path), "b")
    assert path.read_text() == "b"
    assert os.listdir(tmp_path) == ["out.txt"]
