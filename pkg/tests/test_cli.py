import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from dlmcov.cli import main
from dlmcov.io import read_series, write_series

CONFIG = str(Path(__file__).resolve().parents[1] / "configs" / "shampoo.json")


@pytest.fixture
def runner():
    return CliRunner()


def test_validate_ok(runner):
    res = runner.invoke(main, ["validate", CONFIG])
    assert res.exit_code == 0, res.output
    assert "admissible: yes" in res.output


def test_validate_domain_failure(runner, tmp_path):
    doc = json.loads(Path(CONFIG).read_text())
    doc["V"][0][1] += 1.0
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    res = runner.invoke(main, ["validate", str(path)])
    assert res.exit_code == 1
    assert "symmetric" in res.output


def test_validate_parse_failure(runner, tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("{not json")
    assert runner.invoke(main, ["validate", str(path)]).exit_code == 2
    assert runner.invoke(main, ["validate", str(tmp_path / "missing.json")]).exit_code == 2


def test_verify_appendix(runner):
    res = runner.invoke(main, ["verify", CONFIG])
    assert res.exit_code == 0, res.output
    assert res.output.count("PASS") == 17


def test_simulate_deterministic(runner, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert runner.invoke(main, ["simulate", CONFIG, "--n", "17", "--seed", "9", "-o", str(p)]).exit_code == 0
    assert a.read_text() == b.read_text()
    assert read_series(a).shape == (17, 6)


def test_adjust_and_forecast(runner, tmp_path):
    data, out, diag = tmp_path / "s.csv", tmp_path / "a.json", tmp_path / "d.csv"
    runner.invoke(main, ["simulate", CONFIG, "--n", "17", "-o", str(data)])
    res = runner.invoke(main, ["adjust", CONFIG, str(data), "-o", str(out)])
    assert res.exit_code == 0, res.output
    doc = json.loads(out.read_text())
    assert doc["n"] == 17 and len(doc["basis"]) == 1 + 31
    assert 0 < doc["resolution"]["Vnu"] < 1
    res = runner.invoke(main, ["forecast", CONFIG, str(data), "--covariances", f"adjusted:{out}",
                               "--compare", str(out), "-o", str(diag)])
    assert res.exit_code == 0, res.output
    assert "size_ratio prior" in res.output and "size_ratio adjusted" in res.output
    assert diag.read_text().startswith("t,e1,")


def test_adjust_prior_only_returns_prior(runner, tmp_path):
    data, out = tmp_path / "s.csv", tmp_path / "a.json"
    write_series(data, np.zeros((17, 6)))
    res = runner.invoke(main, ["adjust", CONFIG, str(data), "--prior-only", "-o", str(out)])
    assert res.exit_code == 0, res.output
    doc = json.loads(out.read_text())
    cfg = json.loads(Path(CONFIG).read_text())
    assert doc["adjusted"]["Vnu"] == cfg["V"]
    assert doc["adjusted"]["FtVomegaF"] == cfg["W"]


def test_adjust_wrong_columns(runner, tmp_path):
    data = tmp_path / "s.csv"
    write_series(data, np.zeros((17, 5)))
    res = runner.invoke(main, ["adjust", CONFIG, str(data), "-o", str(tmp_path / "o.json")])
    assert res.exit_code == 1


def test_forecast_empty_or_missing(runner, tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("t,x1,x2,x3,x4,x5,x6\n")
    assert runner.invoke(main, ["forecast", CONFIG, str(empty)]).exit_code == 1
    data = tmp_path / "s.csv"
    write_series(data, np.zeros((5, 6)))
    res = runner.invoke(main, ["forecast", CONFIG, str(data), "--covariances",
                               f"adjusted:{tmp_path / 'nope.json'}"])
    assert res.exit_code == 1
