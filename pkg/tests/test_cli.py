import json

import numpy as np
import pytest

from npidob.cli import main
from npidob.config import bundled_config, dump_config
from npidob.simulation import COLUMNS, Trajectory


@pytest.fixture
def short_config(tmp_path):
    p, g, s = bundled_config("default")
    path = tmp_path / "short.json"
    path.write_text(dump_config(p, g, s.with_timing(duration=0.05)))
    return path


def test_simulate_writes_csv(short_config, tmp_path):
    out = tmp_path / "run.csv"
    assert main(["simulate", "--config", str(short_config), "--variant", "outer-only",
                 "--out", str(out), "--seed", "5"]) == 0
    log = Trajectory.from_csv(out)
    assert len(log) == 500
    assert out.read_text().splitlines()[0] == ",".join(COLUMNS)
    assert not np.any(log["d_hat_alpha"])


def test_certify_prints_report(capsys):
    assert main(["certify", "--config", "published_gains", "--loop", "inner", "--q0", "1000",
                 "--epsilon", "0.1", "--delta", "0.1", "--v0", "1.0"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["certified"] and rep["gamma_star"] > 0
    assert rep["t_f_bound"] > 0 and rep["mechanical"]["hurwitz"]
    assert "gamma_star_frobenius" in rep["alternatives"]


def test_compare_writes_all_variants(short_config, tmp_path):
    out = tmp_path / "cmp"
    assert main(["compare", "--config", str(short_config), "--out", str(out),
                 "--settle", "0.01"]) == 0
    for v in ("full", "outer-only", "no-dob"):
        assert (out / f"{v}.csv").exists()
    report = json.loads((out / "metrics.json").read_text())
    assert set(report["comparisons"]) == {"full/outer-only", "full/no-dob"}


def test_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    doc = json.loads(dump_config(*bundled_config("default")))
    del doc["gains"]["eta1"]
    path.write_text(json.dumps(doc))
    assert main(["certify", "--config", str(path), "--loop", "outer"]) == 2
    assert "eta1" in capsys.readouterr().err


def test_divergence_exit_code(tmp_path):
    p, g, s = bundled_config("published_gains")
    path = tmp_path / "t1.json"
    path.write_text(dump_config(p, g, s.with_timing(duration=1.0)))
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "x.csv")]) == 3
