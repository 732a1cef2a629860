import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from byzcode import __version__
from byzcode.cli import main
from byzcode.info_core import JointPmf, entropy
from byzcode.maxent import closed_form_tm1, sum_rate_star

from conftest import markov_chain3


def write_pmf(path, p: JointPmf):
    path.write_text(json.dumps(p.to_dict()))
    return str(path)


@pytest.fixture
def pair_file(tmp_path):
    return write_pmf(tmp_path / "pair.json", JointPmf.from_array(np.array([[0.4, 0.1], [0.1, 0.4]])))


@pytest.fixture
def chain_file(tmp_path):
    return write_pmf(tmp_path / "chain.json", markov_chain3())


def run_json(capsys, argv):
    assert main(argv) == 0
    return json.loads(capsys.readouterr().out)


def test_info_uniform_pair(tmp_path, capsys):
    path = write_pmf(tmp_path / "u.json", JointPmf.uniform((2, 2)))
    data = run_json(capsys, ["info", "--dist", path, "--json"])
    assert data["schema"] == 1
    assert {tuple(r["set"]): r["H"] for r in data["entropies"]}[(1, 2)] == pytest.approx(2.0)
    assert main(["info", "--dist", path]) == 0
    table = capsys.readouterr().out
    assert "X1X2" in table and "2.000000" in table


def test_info_point_mass_is_all_zero(tmp_path, capsys):
    path = write_pmf(tmp_path / "pm.json", JointPmf.point_mass((2, 3), (1, 2)))
    data = run_json(capsys, ["info", "--dist", path, "--json"])
    assert all(r["H"] == 0 for r in data["entropies"])
    assert all(r["MI"] == 0 for r in data["pairs"])


def test_info_symmetric_pair(pair_file, capsys):
    data = run_json(capsys, ["info", "--dist", pair_file, "--json"])
    assert data["entropies"][-1]["H"] == pytest.approx(1.721928, abs=1e-6)


def test_maxent_endpoints(chain_file, capsys, tmp_path):
    p = markov_chain3()
    d0 = run_json(capsys, ["maxent", "--dist", chain_file, "--t", "0"])
    assert d0["R_star"] == pytest.approx(entropy(p, {0, 1, 2}), abs=1e-9)
    d2 = run_json(capsys, ["maxent", "--dist", chain_file, "--t", "2"])
    assert d2["R_star"] == pytest.approx(closed_form_tm1(p), abs=1e-9)
    q_path = tmp_path / "q.json"
    d1 = run_json(capsys, ["maxent", "--dist", chain_file, "--t", "1", "--emit-qtilde", str(q_path)])
    assert d1["R_star"] == pytest.approx(sum_rate_star(p, 1), abs=1e-12)
    assert len(d1["per_cover"]) == 3
    assert {"cover", "H", "iterations", "marginal_error"} <= set(d1["per_cover"][0])
    q = JointPmf.from_dict(json.loads(q_path.read_text()))
    assert entropy(q, {0, 1, 2}) == pytest.approx(d1["R_star"], abs=1e-9)


def test_regions_commands(chain_file, capsys):
    d = run_json(capsys, ["regions", "check", "--dist", chain_file, "--t", "1", "--rates", "1.0,0.8,0.9", "--mode", "dfr"])
    assert d["k"] == 1 and d["achievable"] is False
    assert d["first_violation"]["subset"] == [2]
    d = run_json(capsys, ["regions", "check", "--dist", chain_file, "--t", "1", "--rates", "1,1,1", "--mode", "rfr"])
    assert d["achievable"] is True and d["first_violation"] is None
    d = run_json(capsys, ["regions", "minsum", "--dist", chain_file, "--k", "3"])
    assert d["min_sum_rate"] == pytest.approx(entropy(markov_chain3(), {0, 1, 2}), abs=1e-9)
    d = run_json(capsys, ["regions", "gap", "--dist", chain_file])
    assert d["gap"] > 0 and d["condition_holds"] is True


def test_simulate_writes_report_and_log(chain_file, tmp_path, capsys):
    out, log = tmp_path / "r.json", tmp_path / "t.csv"
    argv = ["simulate", "--dist", chain_file, "--t", "1", "--traitors", "2", "--strategy", "fabricate",
            "--qtilde", "auto", "--k", "120", "--rounds", "2", "--trials", "4", "--seed", "7",
            "--typ-eps", "0.15", "--out", str(out), "--log", str(log)]
    assert main(argv) == 0
    report = json.loads(out.read_text())
    assert report["schema"] == 1 and report["version"] == __version__
    assert report["config"]["traitors"] == [2]
    assert report["config"]["params"]["k"] == 120
    assert report["R_star"] == pytest.approx(sum_rate_star(markov_chain3(), 1), abs=1e-12)
    rows = list(csv.reader(log.open()))
    assert rows[0] == ["trial", "honest_error", "session_error_kind", "sum_rate_bits_per_symbol", "final_cover"]
    assert [r[0] for r in rows[1:]] == ["0", "1", "2", "3"]
    assert all(r[1] in ("0", "1") for r in rows[1:])


def test_simulate_is_byte_reproducible(pair_file, tmp_path, monkeypatch):
    outs = []
    for n, threads in enumerate(("1", "2")):
        monkeypatch.setenv("BYZCODE_THREADS", threads)
        out, log = tmp_path / f"r{n}.json", tmp_path / f"t{n}.csv"
        assert main(["simulate", "--dist", pair_file, "--k", "100", "--trials", "5", "--seed", "3",
                     "--out", str(out), "--log", str(log)]) == 0
        outs.append((out.read_bytes(), log.read_bytes()))
    assert outs[0] == outs[1]


def test_config_errors_exit_nonzero(pair_file, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"alphabet_sizes": [2],\n "probs": [0.5, }')
    assert main(["info", "--dist", str(bad)]) == 2
    assert "bad.json:2:" in capsys.readouterr().err
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"schema": 1, "alphabet_sizes": [2], "probs": [0.2, 0.2]}))
    assert main(["info", "--dist", str(wrong)]) == 2
    assert main(["simulate", "--dist", pair_file, "--t", "1", "--traitors", "1", "--strategy", "fabricate"]) == 2
    assert main(["simulate", "--dist", pair_file, "--traitors", "5"]) == 2
    assert main(["info", "--dist", str(tmp_path / "missing.json")]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--dist", pair_file, "--strategy", "sneaky"])
    assert exc.value.code == 2


def test_protocol_errors_still_exit_zero(pair_file, tmp_path):
    # a tiny typicality tolerance makes pruning fail in every trial; that is data, not failure
    out, log = tmp_path / "r.json", tmp_path / "t.csv"
    assert main(["simulate", "--dist", pair_file, "--k", "60", "--trials", "3", "--typ-eps", "1e-6",
                 "--out", str(out), "--log", str(log)]) == 0
    assert json.loads(out.read_text())["results"]["session_error_counts"].get("no_cover") == 3


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "byzcode", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
