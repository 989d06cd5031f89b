import os

import numpy as np
import pytest

import vfbandit

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "..", "configs")


def small_config(algorithm, seed=0):
    c = vfbandit.RunConfig()
    c.algorithm = algorithm
    c.horizon, c.arms, c.dim = 200, 5, 12
    c.partition = [4, 4, 4]
    c.seed = seed
    return c


def test_federated_matches_centralized():
    fed = vfbandit.run(small_config(vfbandit.Algorithm.VFUCB, seed=3))
    central = vfbandit.run(small_config(vfbandit.Algorithm.LinUCB, seed=3))
    assert fed.arms == central.arms
    np.testing.assert_allclose(fed.regret, central.regret, rtol=0, atol=1e-12)
    np.testing.assert_allclose(fed.theta_norm, central.theta_norm, rtol=1e-8)


def test_mask_is_orthogonal_and_ledger_closed_form():
    r = vfbandit.run(small_config(vfbandit.Algorithm.VFUCB))
    q = r.mask
    assert q.shape == (12, 12)
    np.testing.assert_allclose(q.T @ q, np.eye(12), atol=1e-10)
    assert r.protocol_elements == vfbandit.comm_elements(T=200, K=5, M=3, d=12)
    assert vfbandit.run(small_config(vfbandit.Algorithm.LinUCB)).mask is None


def test_random_orthogonal_is_seeded():
    a = vfbandit.random_orthogonal(16, seed=7)
    np.testing.assert_array_equal(a, vfbandit.random_orthogonal(16, seed=7))
    assert not np.array_equal(a, vfbandit.random_orthogonal(16, seed=8))


def test_privacy_witness():
    rng = np.random.default_rng(0)
    q1 = vfbandit.random_orthogonal(8, seed=1)
    x1 = rng.standard_normal(8)
    q2, x2 = vfbandit.privacy_witness(q1, x1, seed=2)
    np.testing.assert_allclose(q2 @ x2, q1 @ x1, atol=1e-9)
    assert np.max(np.abs(x2 - x1)) > 1e-6


def test_cost_model():
    assert vfbandit.comm_elements(T=5000, K=1000, M=5, d=1000) == 1000**2 + 5000 * 1000 * 5 * 1000
    ratios = [vfbandit.relative_cost(vfbandit.CostAlgorithm.VFTS, T=5000, K=100, M=5, d=d) for d in (10, 100, 1000)]
    assert ratios == sorted(ratios, reverse=True)


def test_verify_suites_pass():
    results = vfbandit.verify(seed=0)
    assert set(results) == {"orthogonality", "losslessness", "witness", "ledger"}
    assert all(passed for passed, _ in results.values())


def test_spec_file_and_errors(tmp_path):
    out = vfbandit.run_synthetic_spec(os.path.join(CONFIG_DIR, "synthetic_small.yaml"))
    assert out["LinUCB"] == pytest.approx(out["VFUCB"], rel=1e-9)
    bad = tmp_path / "bad.yaml"
    bad.write_text("schema_version: 1\nkind: synthetic\ncells: [{algorithm: Nope}]\n")
    with pytest.raises(vfbandit.SpecError, match="Nope"):
        vfbandit.run_synthetic_spec(str(bad))


def test_invalid_config_raises():
    c = small_config(vfbandit.Algorithm.VFUCB)
    c.partition = [5, 5]
    with pytest.raises(ValueError):
        vfbandit.run(c)
