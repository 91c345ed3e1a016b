from __future__ import annotations

import argparse
import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from wptransport import cli
from wptransport.mitigation import BitFlipModel, corrupt
from wptransport.shots import ShotSet, one_hot_string


@pytest.mark.parametrize(
    "text,value",
    [("0.25pi", 0.25 * math.pi), ("-pi/2", -math.pi / 2), ("pi", math.pi), ("0.7", 0.7), ("3*pi/4", 0.75 * math.pi),
     ("-0.1pi", -0.1 * math.pi), (".5", 0.5)],
)
def test_parse_angle(text, value):
    assert cli.parse_angle(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["", "abc", "pi pi", "-", "1/2pi"])
def test_parse_angle_rejects(text):
    with pytest.raises(argparse.ArgumentTypeError):
        cli.parse_angle(text)


def run(tmp_path, *argv) -> None:
    assert cli.main([*argv, "--out", str(tmp_path), "--preset", "smoke"]) == 0


def read_csv(path) -> list[dict]:
    return list(csv.DictReader(path.open()))


def test_anderson_spectrum(tmp_path):
    run(tmp_path, "anderson-spectrum", "--lattice", "6x6", "--realizations", "2", "--bins", "5")
    rows = read_csv(tmp_path / "anderson_spectrum.csv")
    assert len(rows) == 5
    meta = json.loads((tmp_path / "anderson_spectrum.json").read_text())
    assert meta["command"] == "anderson-spectrum" and meta["lattice"] == [6, 6]


def test_anderson_dynamics(tmp_path):
    run(tmp_path, "anderson-dynamics", "--lattice", "6x6", "--k0", "0.75pi,0.75pi", "--tmax", "5", "--nt", "3",
        "--realizations", "2")
    rows = read_csv(tmp_path / "anderson_dynamics.csv")
    assert [float(r["t"]) for r in rows] == [0.0, 2.5, 5.0]


def test_pipeline_verb(tmp_path):
    from wptransport.harness import ExperimentManifest

    ExperimentManifest("cli", lattice=(4, 3), times=(0.0, 0.5), trunc_times=(), shots=100, n_bootstrap=2).save(
        tmp_path / "m.json")
    run(tmp_path, "pipeline", "--manifest", str(tmp_path / "m.json"))
    rows = read_csv(tmp_path / "cli.csv")
    assert [r["method"] for r in rows] == ["ideal", "PS", "MLE"] * 2


def test_mitigate_json(tmp_path, capsys):
    rng = np.random.default_rng(0)
    sites = rng.integers(0, 6, 2000)
    clean = ShotSet(6, {one_hot_string(int(i), 6): int(c) for i, c in zip(*np.unique(sites, return_counts=True))})
    corrupt(clean, BitFlipModel(0.05), 1).save(tmp_path / "shots.json")
    run(tmp_path, "mitigate", "--shots", str(tmp_path / "shots.json"), "--method", "mle", "--bootstrap", "10")
    doc = json.loads((tmp_path / "mitigate_mle.json").read_text())
    assert set(doc) == {"p_hat", "epsilon_hat", "ipr", "ipr_std", "survival_rate", "loglik", "iterations"}
    assert len(doc["p_hat"]) == 6 and abs(sum(doc["p_hat"]) - 1) < 1e-12
    assert abs(doc["epsilon_hat"] - 0.05) < 0.02
    assert json.loads(capsys.readouterr().out.strip().splitlines()[-1]) == doc


def test_mitigate_ps_and_ne_check(tmp_path):
    ShotSet(3, {"001": 3, "010": 1, "011": 4}).save(tmp_path / "s.json")
    run(tmp_path, "mitigate", "--shots", str(tmp_path / "s.json"), "--method", "ps", "--bootstrap", "0")
    doc = json.loads((tmp_path / "mitigate_ps.json").read_text())
    assert doc["ipr"] == pytest.approx(0.625) and doc["survival_rate"] == 0.5 and doc["ipr_std"] is None
    with pytest.raises(ValueError):
        run(tmp_path, "mitigate", "--shots", str(tmp_path / "s.json"), "--ne", "2")


def test_prep_benchmark_verb(tmp_path):
    run(tmp_path, "prep-benchmark", "--sizes", "4", "--retained", "100", "--bootstrap", "2")
    rows = read_csv(tmp_path / "prep_benchmark.csv")
    assert [r["method"] for r in rows] == ["unitary", "mcmff1", "mcmff2_ideal"]


def test_variance_verb(tmp_path):
    run(tmp_path, "variance", "--n", "32", "--sigma-tilde", "2", "--W", "0,1", "--realizations", "5")
    assert len(read_csv(tmp_path / "variance.csv")) == 2


def test_xxz_verbs(tmp_path):
    common = ["--n", "6", "--k0", "0.3pi", "--sigma", "0.25", "--layers", "1"]
    run(tmp_path, "xxz-train", *common, "--max-evals", "200")
    doc = json.loads((tmp_path / "xxz_train_N6_D0.5_L1.json").read_text())
    assert len(doc["theta"]) == 4
    assert doc["E_ansatz"] >= doc["E_WP"] - 1e-9
    assert all(b <= a + 1e-12 for a, b in zip(doc["trace"], doc["trace"][1:]))
    run(tmp_path, "xxz-dynamics", *common, "--layers", "0", "--tmax", "2", "--nt", "5")
    rows = read_csv(tmp_path / "xxz_dynamics.csv")
    assert len(rows) == 5 and len(rows[0]) == 1 + 6


def test_figure_verb(tmp_path):
    run(tmp_path, "figure", "table2")
    assert len(read_csv(tmp_path / "table2.csv")) == 5
    with pytest.raises(SystemExit, match="valid ids"):
        run(tmp_path, "figure", "nope")


def test_bad_lattice_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit):
        cli.main(["anderson-spectrum", "--lattice", "8by7", "--out", str(tmp_path)])


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "wptransport", "--help"], capture_output=True, text=True, check=True)
    for verb in ("anderson-spectrum", "anderson-dynamics", "pipeline", "prep-benchmark", "mitigate", "variance",
                 "xxz-train", "xxz-dynamics", "figure"):
        assert verb in out.stdout
