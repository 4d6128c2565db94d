from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import make_cfg, make_doc
from stefan_spread.cli import main
from stefan_spread.ensemble import run_ensemble, worker_count
from stefan_spread.io import config_hash, fmt, write_csv


def test_zero_noise_paths_identical():
    cfg = make_cfg(sigma_profile={"kind": "sine", "amplitude": 0.0}, horizon_T=0.05, grid={"ny": 16, "nt": 100})
    s = run_ensemble(cfg, 6)
    np.testing.assert_array_equal(s.q10, s.q90)
    np.testing.assert_allclose(s.q50, s.mean, rtol=1e-14)


def test_case2_summary_properties():
    cfg = make_cfg(grid={"ny": 32, "nt": 1000})
    s = run_ensemble(cfg, 24, threads=3)
    assert sum(s.histogram.values()) == 24
    assert s.histogram["SpreadAreaRight"] == 0
    surv = s.survival
    assert surv[0] == 1.0 and np.all(np.diff(surv) <= 0)
    # dropping a stopped path (spread ~ 0) lifts the censored mean, so the mean
    # is monotone only across steps where the alive set is unchanged
    same = (s.n_alive[1:] == s.n_alive[:-1]) & (s.n_alive[1:] > 0)
    assert np.all(np.diff(s.mean)[same] <= 1e-15)
    for rec in s.records:
        # censoring: the path is counted at t_j iff j < n_accepted
        assert rec.n_accepted == 0 or np.all(np.diff(rec.spread) <= 0)
    counted = sum(rec.n_accepted > 10 for rec in s.records)
    assert s.n_alive[10] == counted


def test_worker_count(monkeypatch):
    monkeypatch.setenv("STEFAN_SPREAD_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    monkeypatch.setenv("STEFAN_SPREAD_THREADS", "zero")
    with pytest.raises(ValueError):
        worker_count()


def test_fmt_and_csv(tmp_path):
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(np.float64("nan")) == "nan" and fmt(None) == "" and fmt(3) == "3"
    p = write_csv(tmp_path / "a.csv", ["x", "y"], [[1, 0.5], [2, None]])
    assert p.read_bytes() == b"x,y\n1,0.5\n2,\n"


def test_config_hash_stable():
    assert config_hash(make_cfg()) == config_hash(make_cfg())
    assert config_hash(make_cfg()) != config_hash(make_cfg(seed=12))


def _write(tmp_path, **kw):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(make_doc(**kw)))
    return str(p)


def test_cli_simulate(tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(["simulate", "--config", _write(tmp_path), "--out", str(out), "--snapshot-times", "0,0.01"])
    assert rc == 0
    head = (out / "trajectory.csv").read_text().splitlines()[0]
    assert head == "step,t,s_plus,s_minus,spread,g1,g2,eta1_total,eta2_total"
    stop = json.loads((out / "stop.json").read_text())
    assert stop["kind"] == "SpreadNonNegativity"
    assert (out / "snapshot_000020.csv").read_text().startswith("y,v1,v2\n")
    man = json.loads((out / "manifest.json").read_text())
    assert set(man) >= {"config_sha256", "seed", "version"}


def test_cli_invalid_config(tmp_path, capsys):
    assert main(["simulate", "--config", _write(tmp_path, s_minus_0=0.7, s_plus_0=0.6)]) == 1
    assert "s_minus_0 > s_plus_0" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 1


def test_cli_blow_up(tmp_path, monkeypatch):
    from stefan_spread import kernels
    monkeypatch.setattr(kernels, "spde_step", lambda *a: False)
    assert main(["simulate", "--config", _write(tmp_path), "--out", str(tmp_path / "o")]) == 2


def test_cli_seed_override(tmp_path):
    cfg = _write(tmp_path)
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "5"])
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["seed"] == 5


def test_cli_meanfield(tmp_path):
    doc = make_doc(case_id="Case3Unreflected", lam=2.0, b=2.0, s_plus_0=1.5, s_minus_0=0.5,
                   sigma_profile={"kind": "constant", "value": 1.0, "relax_boundary": True, "time_only": True},
                   initial_profile={"kind": "linear", "slope": 0.5}, far_field_level=1.0,
                   horizon_T=1.0, grid={"ny": 16, "nt": 1000})
    p = tmp_path / "mf.json"
    p.write_text(json.dumps(doc))
    assert main(["meanfield", "--config", str(p), "--out", str(tmp_path / "mf"), "--paths", "500"]) == 0
    lines = (tmp_path / "mf" / "meanfield.csv").read_text().splitlines()
    assert lines[0] == "step,t,w_inf,spread" and len(lines) == 1002
    assert lines[1] == "0,0,1,1"


def test_cli_picard_and_kernel(tmp_path):
    cfg = _write(tmp_path, sigma_profile={"kind": "sine", "amplitude": 0.1}, grad_bound_M=2.0,
                 horizon_T=0.05, grid={"ny": 32, "nt": 25})
    assert main(["picard-check", "--config", cfg, "--out", str(tmp_path / "p")]) == 0
    rec = json.loads((tmp_path / "p" / "picard.json").read_text())[0]
    assert rec["converged"]
    assert main(["kernel-test", "--config", cfg, "--out", str(tmp_path / "k"), "--paths", "0"]) == 0


def test_cli_entry_point_subprocess(tmp_path):
    cfg = _write(tmp_path, horizon_T=0.05, grid={"ny": 16, "nt": 100})
    r = subprocess.run([sys.executable, "-m", "stefan_spread", "ensemble", "--config", cfg,
                        "--out", str(tmp_path / "e"), "--paths", "4"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "e" / "summary.csv").exists()
    bad = subprocess.run([sys.executable, "-m", "stefan_spread", "bogus"], capture_output=True)
    assert bad.returncode == 2  # argparse usage error
