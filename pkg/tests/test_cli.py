import csv
import json
import math

import numpy as np
import pytest

from tomobell.cli import main, parse_lambda, parse_number
from tomobell.estimator import estimate_bell
from tomobell.model import CHSH_ANGLES
from tomobell.runner import CSV_COLUMNS
from tomobell.sampler import read_samples

FAST = ["--samples", "100000", "--seed", "4"]


@pytest.mark.parametrize("text, value", [
    ("3pi/8", 3 * math.pi / 8), ("pi", math.pi), ("2*pi", 2 * math.pi), ("1e6", 1e6),
    ("-0.5", -0.5), ("pi/4 + 0.1", math.pi / 4 + 0.1), (0.85, 0.85),
])
def test_parse_number(text, value):
    assert parse_number(text) == pytest.approx(value)


@pytest.mark.parametrize("bad", ["", "os.system('x')", "__import__", "pi pi"])
def test_parse_number_rejects(bad):
    with pytest.raises(ValueError):
        parse_number(bad)


def test_parse_lambda():
    assert parse_lambda("0.3+0.4j") == 0.3 + 0.4j
    assert parse_lambda("0.5") == 0.5


def report(tmp_path, *args):
    out = tmp_path / "r.json"
    assert main(["simulate", *FAST, *args, "--format", "report", "--out", str(out)]) == 0
    return json.loads(out.read_text())


def test_simulate_csv(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["simulate", *FAST, "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == list(CSV_COLUMNS)
    assert len(rows) == 2 and rows[1][2] == "ok"


def test_exit_codes(tmp_path, capsys):
    assert main(["simulate", *FAST, "--lambda", "1", "--eta", "0.5"]) == 2
    err = capsys.readouterr().err
    assert "non-normalizable" in err and "kernel divergence" in err
    assert main(["simulate", *FAST, "--lambda", "0"]) == 3
    assert main(["simulate", *FAST, "--out", str(tmp_path / "missing" / "x.csv")]) == 4
    assert main(["simulate", "--samples", "10", "--blocks", "20"]) == 2
    assert main(["simulate", "--eta", "abc"]) == 2


def test_lambda_and_mean_photon_exclusive():
    with pytest.raises(SystemExit):
        main(["simulate", "--lambda", "0.5", "--mean-photon", "0.5"])


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("eta: 0.9\nsamples: 300000\nlambda: 0.4\ncrystal_phase: pi/2\n")
    d = report(tmp_path, "--config", str(cfg), "--eta", "0.95")
    c = d["config"]
    assert c["eta"] == 0.95
    assert c["samples"] == 100000  # flag beats file
    assert c["lambda"][0] == pytest.approx(0.4)
    assert c["crystal_phase"] == pytest.approx(math.pi / 2)
    d = report(tmp_path, "--config", str(cfg), "--mean-photon", "0.5")
    assert d["config"]["lambda"][0] == pytest.approx(1 / math.sqrt(3))


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("etaa: 0.9\n")
    assert main(["simulate", "--config", str(cfg)]) == 2
    cfg.write_text("eta: [0.9\n")
    assert main(["simulate", "--config", str(cfg)]) == 2
    assert main(["simulate", "--config", str(tmp_path / "nope.yaml")]) == 4


def test_workers_env(tmp_path, monkeypatch):
    monkeypatch.setenv("TOMOBELL_WORKERS", "3")
    assert report(tmp_path)["config"]["workers"] == 3
    assert report(tmp_path, "--workers", "2")["config"]["workers"] == 2


def test_identical_csv_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep-phi", *FAST, "--steps", "3"]
    assert main([*args, "--out", str(a)]) == 0
    assert main([*args, "--out", str(b), "--workers", "4"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_single_step_sweep_matches_simulate(tmp_path):
    s, w = tmp_path / "s.csv", tmp_path / "w.csv"
    assert main(["simulate", *FAST, "--crystal-phase", "1.0", "--out", str(s)]) == 0
    assert main(["sweep-phi", *FAST, "--start", "1.0", "--stop", "1.0", "--steps", "1", "--out", str(w)]) == 0
    row_s = list(csv.reader(s.open()))[1]
    row_w = list(csv.reader(w.open()))[1]
    assert row_s[2:] == row_w[2:]


def test_sweep_eta_values_and_failure_exit(tmp_path):
    out = tmp_path / "e.csv"
    code = main(["sweep-eta", "--samples", "2000", "--lambda", "0.3", "--values", "0.55,1.0", "--out", str(out)])
    assert code == 3
    rows = list(csv.reader(out.open()))
    assert len(rows) == 3
    assert rows[1][2].startswith("error")
    assert rows[2][2] == "ok"


def test_sweep_eta_rejects_bounds():
    assert main(["sweep-eta", *FAST, "--values", "0.4,0.9"]) == 2


@pytest.mark.parametrize("fmt", ["csv", "binary"])
def test_dump_reproduces_estimate(tmp_path, fmt):
    dump = tmp_path / "events"
    d = report(tmp_path, "--dump", str(dump), "--dump-format", fmt)
    events = read_samples(dump)
    assert len(events) == 100000
    b = estimate_bell(events, CHSH_ANGLES, 0.85, 20)
    assert b.value == d["bell"]["value"]
    assert b.std_error == d["bell"]["std_error"]


def test_oracle_command(tmp_path):
    out = tmp_path / "o.json"
    assert main(["oracle", "--crystal-phase", "pi/2", "--format", "report", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["bell"] == pytest.approx(math.sqrt(2), abs=1e-9)
    np.testing.assert_allclose(doc["correlations"], doc["correlations_closed_form"], atol=1e-12)


def test_selftest_command(capsys):
    assert main(["selftest", "--samples", "100000", "--draws", "20000", "--seed", "1"]) == 0
    assert "checks passed" in capsys.readouterr().out
