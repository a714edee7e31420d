import csv
import json
from pathlib import Path

import numpy as np
import pytest

from phasekit import cli
from phasekit.models import (
    HonlsParams,
    StratParams,
    gardner_quoted,
    honls_degeneracy_locus,
    honls_model,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(argv):
    return cli.main([str(a) for a in argv])


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_analyze_degenerate_honls(tmp_path):
    out = tmp_path / "a.json"
    assert run(["analyze", "--config", CONFIGS / "honls_degenerate.json", "--out", out]) == 0
    rep = json.loads(out.read_text())
    assert rep["regime"] == "Hyperbolic"
    co = rep["coefficients"]
    assert co["kind"] == "mKdV"
    assert co["beta_over_alpha"] == pytest.approx(7.5 * 0.5, rel=1e-8)
    assert co["gamma_over_alpha"] == pytest.approx(-0.75 * 0.5, rel=1e-6)
    assert rep["consistency"]["checks"][0]["passed"]


def test_analyze_output_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert run(["analyze", "--config", CONFIGS / "stratified3_sample.json", "--out", p]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"\r\n" not in a.read_bytes()


def test_analyze_stratified_sample_matches_closed_forms(tmp_path):
    out = tmp_path / "s.json"
    assert run(["analyze", "--config", CONFIGS / "stratified3_sample.json", "--out", out]) == 0
    rep = json.loads(out.read_text())
    params = json.loads((CONFIGS / "stratified3_sample.json").read_text())["model"]["params"]
    p = StratParams(**params)
    co = rep["coefficients"]
    q = gardner_quoted(p, co["c"])
    assert co["kind"] == "mKdV"
    assert co["gamma_over_alpha"] == pytest.approx(q["gamma"], rel=1e-6)


def test_analyze_elliptic_is_not_an_error(tmp_path):
    out = tmp_path / "e.json"
    assert run(["analyze", "--config", CONFIGS / "honls_elliptic.json", "--out", out]) == 0
    rep = json.loads(out.read_text())
    assert rep["regime"] == "Elliptic"
    assert rep["coefficients"] is None
    assert all(not ch["real"] for ch in rep["characteristics"])


@pytest.mark.parametrize(
    "cfg",
    [
        {"schema_version": 2, "model": {"name": "honls", "params": {}}},
        {"schema_version": 1, "model": {"name": "nope", "params": {}}},
        {"schema_version": 1, "model": {"name": "honls", "params": {"alpha1": 1, "alpha2": 0, "beta": -1, "omega": 1, "zzz": 1}}},
        {"schema_version": 1, "model": {"name": "stratified3", "params": {"rho1": 1.1, "rho2": 1.0, "rho3": 0.9, "H1": 0.3, "H2": 0.3, "H3": 0.4}}},
        {"schema_version": 1, "command": "sweep", "model": {"name": "honls", "params": {"alpha1": 1, "alpha2": 0.5, "beta": -1, "omega": -2}}},
    ],
)
def test_invalid_config_exit_code(tmp_path, capsys, cfg):
    assert run(["analyze", "--config", write(tmp_path, cfg)]) == 2
    err = json.loads(capsys.readouterr().out)
    assert err["error"]["exit_code"] == 2


def test_missing_and_malformed_config(tmp_path, capsys):
    assert run(["analyze", "--config", tmp_path / "absent.json"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["analyze", "--config", bad]) == 2
    assert run(["sweep"]) == 2


def test_numerical_failure_exit_code(tmp_path):
    cfg = {
        "schema_version": 1,
        "simulate": {
            "coefficients": {"delta": 0.0, "beta": -1.0, "gamma": 1.0},
            "grid": {"L": 50.0, "n": 256, "dt": 5.0, "t_end": 10.0},
            "initial": {"type": "kink_pair", "a0": 1.0, "separation": 50.0},
        },
    }
    assert run(["simulate", "--config", write(tmp_path, cfg)]) == 3


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_sweep_deterministic_across_threads(tmp_path, monkeypatch):
    a, b = tmp_path / "t1.csv", tmp_path / "t4.csv"
    assert run(["sweep", "--config", CONFIGS / "stratified3_map.json", "--out", a, "--threads", 1]) == 0
    monkeypatch.setenv("PHASEKIT_THREADS", "4")
    assert run(["sweep", "--config", CONFIGS / "stratified3_map.json", "--out", b]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "t1_boundaries.csv").read_bytes() == (tmp_path / "t4_boundaries.csv").read_bytes()
    rows = _read_csv(a)
    assert len(rows) == 36
    assert [(float(r["H1"]), float(r["H3"])) for r in rows[:2]] == [(0.15, 0.15), (0.15, 0.196)]
    meta = json.loads((tmp_path / "t1_meta.json").read_text())
    assert meta["marginal_stability_M"] == 6.0


def test_honls_sweep_degeneracy_curve(tmp_path):
    out = tmp_path / "h.csv"
    assert run(["sweep", "--config", CONFIGS / "honls_sweep.json", "--out", out]) == 0
    cfg = json.loads((CONFIGS / "honls_sweep.json").read_text())
    base = cfg["model"]["params"]
    pts = [r for r in _read_csv(tmp_path / "h_boundaries.csv") if r["coefficient"] == "gn"]
    assert pts
    dk, da = 0.1, 0.1
    for r in pts:
        k, a2 = float(r["k"]), float(r["alpha2"])
        p = HonlsParams(base["alpha1"], a2, base["beta"], k, base["omega"])
        assert abs(honls_degeneracy_locus(p)) < 1e-8
    # every grid cell crossed by the closed-form locus has a boundary point within one cell
    rows = _read_csv(out)
    for r in rows:
        k, a2 = float(r["k"]), float(r["alpha2"])
        loc = honls_degeneracy_locus(HonlsParams(base["alpha1"], a2, base["beta"], k, base["omega"]))
        if abs(loc) < 1e-3:
            assert any(abs(float(q["k"]) - k) <= dk and abs(float(q["alpha2"]) - a2) <= da for q in pts)


def test_simulate_kdv_soliton(tmp_path):
    out = tmp_path / "sim.json"
    assert run(["simulate", "--config", CONFIGS / "kdv_soliton.json", "--out", out]) == 0
    idx = json.loads(out.read_text())
    assert idx["shape_error"] <= 1e-6
    assert len(idx["snapshots"]) == 5
    snap = _read_csv(tmp_path / idx["snapshots"][-1]["file"])
    assert len(snap) == 512 and set(snap[0]) == {"x", "u"}


def test_simulate_from_model(tmp_path):
    cfg = {
        "schema_version": 1,
        "model": {"name": "honls", "params": {"alpha1": 1.0, "alpha2": 0.5, "beta": -1.0, "degenerate": True}},
        "simulate": {"grid": {"L": 20.0, "n": 256, "dt": 0.005, "t_end": 0.5}, "initial": {"type": "kink_pair", "a0": 0.5, "separation": 20.0}, "snapshots": 6},
    }
    out = tmp_path / "m.json"
    assert run(["simulate", "--config", write(tmp_path, cfg), "--out", out]) == 0
    idx = json.loads(out.read_text())
    assert idx["coefficients"]["beta"] == pytest.approx(3.75, rel=1e-6)
    assert np.mean(idx["measured_speeds"]) == pytest.approx(2.5 * 0.5 * 0.25, rel=5e-3)


def test_validate_single_suite(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert run(["validate", "--suite", "honls", "--out", out]) == 0
    rep = json.loads(out.read_text())
    assert rep["passed"] and len(rep["results"]) == 3
    assert "[PASS]" in capsys.readouterr().out
    assert run(["validate", "--suite", "bogus"]) == 2


def test_register_external_model(tmp_path):
    cli.register_model("external_honls", lambda params: honls_model(HonlsParams(**params)))
    cfg = {"schema_version": 1, "model": {"name": "external_honls", "params": {"alpha1": 1.0, "alpha2": 0.0, "beta_nl": -1.0, "k": 0.0, "omega": -2.0}}}
    out = tmp_path / "x.json"
    assert run(["analyze", "--config", write(tmp_path, cfg), "--out", out]) == 0
    rep = json.loads(out.read_text())
    assert [ch["c"] for ch in rep["characteristics"]] == pytest.approx([-2.0, 2.0])


def test_clean_json_types():
    obj = {"a": np.float64(1.5), "b": np.array([1, 2]), "c": float("nan"), "d": 1 + 2j, "e": np.bool_(True)}
    assert cli.clean(obj) == {"a": 1.5, "b": [1, 2], "c": None, "d": [1.0, 2.0], "e": True}
    assert cli.to_csv(["x"], [{"x": 0.1}]) == "x\n0.1\n"
