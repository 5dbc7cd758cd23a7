import json

import pytest

import nls_norm


def test_check_reports_verdicts():
    rep = nls_norm.check(nls_norm.power(4.0), 3, 1.0)
    assert rep["verdicts"]["A2"]["verdict"] == "pass"
    assert rep["branch"] != "inadmissible"


def test_critical_power_is_inadmissible():
    rep = nls_norm.check(nls_norm.power(nls_norm._core.lower_critical(3)), 3, 1.0)
    assert rep["branch"] == "inadmissible"


def test_solve_matches_scaling_law():
    st = nls_norm.solve(nls_norm.power(4.0), 3, 2.0, n=2000, auto_scale=True)
    assert st["converged"]
    # E(rho) = base_energy * base_mass / rho for the 3D cubic
    assert st["energy"] == pytest.approx(9.44862571 * 18.89725130 / 2.0, rel=1e-4)
    assert len(st["r"]) == len(st["u"]) == 2001


def test_shoot_and_gn():
    s = nls_norm.shoot(nls_norm.power(4.0), 3)
    assert s["u0"] == pytest.approx(4.33738768, rel=1e-7)
    assert nls_norm.gn_constant(3, 10.0 / 3.0) == pytest.approx(0.5077073828, rel=1e-7)


def test_sweep_is_monotone():
    out = nls_norm.sweep(nls_norm.power(4.0), 3, [0.5, 1.0, 2.0], n=2000)
    assert out["monotone"] == "strict"
    cs = [p["c"] for p in out["points"]]
    assert cs == sorted(cs, reverse=True)


def test_bad_spec_raises():
    with pytest.raises(ValueError):
        nls_norm.check({"kind": "nope"}, 3, 1.0)


def test_run_cli_round_trip(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("problem: {N: 3, rho: 1}\nnonlinearity: {kind: powers, p: 4}\n")
    code, out, err = nls_norm.run_cli("check", "--config", cfg)
    assert code == 0, err
    doc = json.loads(out)
    assert doc["rho_star"] == "+inf"  # eta = 0 for a pure supercritical power
    code, _, _ = nls_norm.run_cli("check", "--config", tmp_path / "missing.yaml")
    assert code == 1
