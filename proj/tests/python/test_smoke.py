import json

import numpy as np
import pytest

import smcomp


def test_norms_and_prox():
    x = np.diag([3.0, 1.0, 0.5])
    assert smcomp.norm("nuclear", x) == pytest.approx(4.5)
    assert smcomp.dual_norm("nuclear", x) == pytest.approx(3.0)
    assert smcomp.norm("frobenius", x) == pytest.approx(np.linalg.norm(x))
    spec = smcomp.NormSpec.spectral_k_support(2)
    assert str(spec) == "kspectral:k=2"
    assert smcomp.NormSpec("kspectral:k=2") == spec
    assert smcomp.norm(spec, x) >= smcomp.norm("frobenius", x)
    p = smcomp.prox("nuclear", x, 0.75)
    np.testing.assert_allclose(np.diag(p), [2.25, 0.25, 0.0], atol=1e-12)


def test_bad_norm_name():
    with pytest.raises(ValueError):
        smcomp.norm("trace", np.eye(2))


def test_noiseless_recovery():
    theta = smcomp.generate_instance(10, 10, 1, target_spikiness=3.0, seed=4)
    assert np.linalg.norm(theta) == pytest.approx(1.0)
    assert smcomp.spikiness(theta) <= 3.0
    cells = smcomp.sample_omega(10, 10, 100, seed=5)
    assert cells.shape == (100, 2)
    y = smcomp.generate_observations(theta, cells, 0.0, seed=6)
    np.testing.assert_allclose(y, theta[cells[:, 0], cells[:, 1]])
    res = smcomp.solve(y, cells, 10, 10, "nuclear", "constrained-norm", lam=0.0, alpha_star=3.0)
    assert res.converged
    assert np.linalg.norm(res.theta - theta) < 1e-3


def test_dantzig_and_glm_run():
    theta = smcomp.generate_instance(8, 8, 1, seed=2)
    cells = smcomp.sample_omega(8, 8, 60, seed=3)
    y = smcomp.generate_observations(theta, cells, 0.01, seed=4)
    lam = smcomp.auto_lambda("dantzig", 0.01, cells, 8, 8, draws=50, seed=5)
    assert lam > 0
    ds = smcomp.solve(y, cells, 8, 8, estimator="dantzig", lam=lam, alpha_star=3.0)
    assert ds.constraint_residual <= 1e-6
    bits = (y > 0).astype(float)
    glm = smcomp.solve(bits, cells, 8, 8, estimator="glm", lam=0.1, loss="bernoulli-logistic", alpha_star=8.0)
    assert glm.converged
    assert glm.theta.shape == (8, 8)


def test_geometry_estimates():
    theta = smcomp.generate_instance(8, 8, 1, seed=7)
    lo = smcomp.gaussian_width_lower("nuclear", theta, samples=30, seed=1)
    hi = smcomp.gaussian_width_upper("nuclear", theta, samples=30, seed=1)
    assert lo.direction == smcomp.EstimateDirection.LowerBound
    assert len(lo.draws) == 30
    assert lo.value ** 2 <= 3 * 16 * 1 + 5 * lo.standard_error * lo.value
    assert lo.value <= hi.value + 3 * np.hypot(lo.standard_error, hi.standard_error)
    b = smcomp.ksupport_width_bound(np.array([0.8, 0.6]), 1, 30)
    assert b.r == 0
    assert b.value == pytest.approx(232.0)
    pc = smcomp.partial_complexity("nuclear", theta, 40, samples=20, seed=2)
    assert pc.value > 0


def test_sweep_and_verify(tmp_path):
    cfg = {
        "instance": {"rows": 8, "cols": 8, "rank": 1, "target_spikiness": 4.0},
        "sweep": {"m": [48], "nu": [0.0, 0.05], "seeds": [1]},
        "geometry": {"width_samples": 30, "kappa_directions": 10, "compat_samples": 3},
        "output": str(tmp_path / "out"),
    }
    trials, summary = smcomp.run_sweep(cfg, write=True)
    assert len(trials) == 2
    assert summary.splitlines()[0].startswith("m_value")
    assert (tmp_path / "out" / "summary.csv").read_text() == summary
    again, summary2 = smcomp.run_sweep(cfg)
    assert summary2 == summary
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert smcomp.run_sweep(str(path))[1] == summary
    with pytest.raises(smcomp.ConfigError):
        smcomp.run_sweep({"sweep": {"m": []}})
    ok, text = smcomp.verify()
    assert ok, text
    assert all(line.startswith("PASS") for line in text.strip().splitlines())
