import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from xxzfact.cli import main

SCEN = Path(__file__).resolve().parents[1] / "scenarios"


def _write(tmp_path, doc, name="s.scenario"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_count(capsys):
    assert main(["count", "3", "3"]) == 0
    assert capsys.readouterr().out.strip() == "82"


@pytest.mark.parametrize("name", sorted(p.name for p in SCEN.glob("*.scenario")))
def test_shipped_scenarios_load(name):
    from xxzfact.scenario import load_scenario

    scn = load_scenario(SCEN / name)
    assert scn.graph.n_sites >= 2


def test_validate_pair(capsys):
    assert main(["validate", str(SCEN / "pair_s1_delta1.2.scenario")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"]


def test_factorize_star(capsys):
    assert main(["factorize", str(SCEN / "star5_s1_2.scenario")]) == 0
    doc = json.loads(capsys.readouterr().out.splitlines()[0])
    h = np.array(doc["fields"])
    assert abs(h.sum()) < 1e-12
    assert doc["energy"] == pytest.approx(-4 * 0.25 * 2.0)


def test_factorize_all_on_odd_ring(tmp_path, capsys):
    p = _write(tmp_path, {"name": "ring3",
                          "graph": {"geometry": "cyclic_chain", "N": 3, "spin": "1/2",
                                    "j_xy": 1.0, "j_z": 1.5}})
    with pytest.warns(RuntimeWarning):
        assert main(["factorize", p, "--all"]) == 0
    out = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
    assert out == [{"assignments": 0,
                    "diagnostic": "no loop-consistent sign assignment exists"}]


def test_missing_file():
    assert main(["spectrum", "/nonexistent/x.scenario"]) == 3


def test_schema_error(tmp_path):
    p = _write(tmp_path, {"name": "bad", "graph": {"geometry": "cyclic_chain", "N": "eight"}})
    assert main(["spectrum", p]) == 3


def test_budget_exit(tmp_path):
    p = _write(tmp_path, {"name": "big", "signs": [1] * 11,
                          "graph": {"geometry": "open_chain", "N": 12, "spin": 1,
                                    "j_xy": 1.0, "j_z": 1.2}})
    assert main(["spectrum", p, "--budget", "100"]) == 4


def test_spectrum_at_factorization(capsys):
    assert main(["spectrum", str(SCEN / "pair_s1_delta1.2.scenario"), "--k", "5"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["at_factorization"]
    assert doc["ground_energy"] == pytest.approx(-1.2, abs=1e-10)
    # 2S + 1 = 5 for two spin-1 sites
    assert doc["degeneracy"] == 5


def test_pairstate_trace(tmp_path):
    out = tmp_path / "p.json"
    assert main(["pairstate", "--N", "6", "--spin", "1", "--delta", "1.2",
                 "--pair-class", "oe", "--M", "1", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["trace"] == pytest.approx(1.0, abs=1e-12)
    assert doc["negativity"] > 0


def test_project_binary_roundtrip(tmp_path):
    out = tmp_path / "v.bin"
    assert main(["project", str(SCEN / "pair_s1_delta1.2.scenario"), "--M", "0",
                 "--format", "binary", "--out", str(out)]) == 0
    v = np.fromfile(out, dtype="<f8")
    assert len(v) == 3 and np.linalg.norm(v) == pytest.approx(1.0)


def test_diagram_csv_to_file(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert main(["diagram", str(SCEN / "pair_s1_delta1.2.scenario"), "--step", "0.5",
                 "--half-width", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "h1,h2,M2,E,boundary_flag"
    assert len(lines) == 1 + 25
    assert "wrote" in capsys.readouterr().err


def test_boundary_csv(capsys):
    assert main(["boundary", "--spin", "0.5", "--delta", "1.2", "--num", "5"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[0] == "h1,h2" and len(rows) > 1


def test_negativity_needs_sector(capsys):
    assert main(["negativity", str(SCEN / "pair_s1_delta1.2.scenario")]) == 1
    assert main(["negativity", str(SCEN / "pair_s1_delta1.2.scenario"), "--M", "0"]) == 0


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "xxzfact.cli", "count", "2", "4"],
                       capture_output=True, text=True, check=True)
    assert r.stdout.strip() == "54"
