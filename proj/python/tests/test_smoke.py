import math

import numpy as np
import pytest

import drasp


def random_head(rng, d, width=5):
    return (rng.normal(size=(width, d)), rng.normal(size=width), rng.normal(size=width))


def test_softmax_and_clamped_sqrt():
    p = drasp.softmax(np.array([1.0, 2.0, 3.0]), 2.0)
    assert p.sum() == pytest.approx(1.0, abs=1e-15)
    expected = np.exp(np.array([1.0, 2.0, 3.0]) / 2.0)
    np.testing.assert_allclose(p, expected / expected.sum(), rtol=1e-14)
    np.testing.assert_allclose(drasp.clamped_sqrt(np.array([0.0, 4.0])), [math.sqrt(1e-9), 2.0])


def test_statistics_pool_matches_numpy():
    x = np.random.default_rng(0).normal(size=(13, 4))
    mu, sigma = drasp.statistics_pool(x)
    np.testing.assert_allclose(mu, x.mean(axis=0), rtol=1e-13)
    np.testing.assert_allclose(sigma, x.std(axis=0), rtol=1e-12)
    np.testing.assert_allclose(drasp.average_pool(x), x.mean(axis=0), rtol=1e-13)


def test_attentive_pool_matches_numpy():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(9, 3))
    W, b, v = random_head(rng, 3)
    z = np.tanh(x @ W.T + b) @ v
    w = np.exp(z - z.max()) / np.exp(z - z.max()).sum()
    np.testing.assert_allclose(drasp.attention_weights(x, (W, b, v)), w, rtol=1e-12)
    np.testing.assert_allclose(drasp.attentive_pool(x, (W, b, v)), w @ x, rtol=1e-12)


def test_drasp_reduces_to_statistics_pooling():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(23, 4))
    head = random_head(rng, 4)
    mu, sigma = drasp.statistics_pool(x)
    out = drasp.drasp_pool(x, 5, head, alpha=1.0, beta=0.0)
    np.testing.assert_allclose(out, np.concatenate([mu, sigma]), atol=1e-12)


def test_segment_average_partial_policy():
    x = np.arange(14.0).reshape(7, 2)
    np.testing.assert_allclose(drasp.segment_average(x, 3), [[2, 3], [8, 9], [12, 13]])
    np.testing.assert_allclose(drasp.segment_average(x, 3, drop_partial=True), [[2, 3], [8, 9]])


def test_drasp_backward_matches_finite_differences():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(11, 3))
    head = random_head(rng, 3, width=4)
    upstream = rng.normal(size=6)
    grads = drasp.drasp_pool_backward(x, 4, head, 0.8, 0.3, upstream)

    def f(alpha, beta):
        return float(upstream @ drasp.drasp_pool(x, 4, head, alpha=alpha, beta=beta))

    h = 1e-6
    assert grads["beta"] == pytest.approx((f(0.8, 0.3 + h) - f(0.8, 0.3 - h)) / (2 * h), rel=1e-6)
    assert grads["alpha"] == pytest.approx((f(0.8 + h, 0.3) - f(0.8 - h, 0.3)) / (2 * h), rel=1e-6)
    assert grads["frames"].shape == x.shape


def test_multihead_shapes():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(10, 3))
    heads = [random_head(rng, 3) for _ in range(4)]
    assert drasp.multihead_attentive_pool(x, heads).shape == (12,)
    single = drasp.multires_multihead_attentive_pool(x, heads, [1.0, 1.0, 1.0, 1.0])
    np.testing.assert_allclose(single, drasp.multihead_attentive_pool(x, heads), atol=1e-12)
    assert len(drasp.pooling_methods()) == 8


def test_metrics():
    assert drasp.lcc([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)
    assert drasp.ktau([1, 2, 3], [1, 3, 2]) == pytest.approx(1 / 3)
    assert drasp.average_ranks([1.0, 1.0, 3.0]) == [1.5, 1.5, 3.0]
    assert drasp.mse([1, 2], [1, 4]) == pytest.approx(2.0)
    assert drasp.system_aggregate([("a", 1.0), ("a", 3.0), ("b", 2.0)]) == {"a": 2.0, "b": 2.0}
    with pytest.raises(ValueError, match="degenerate"):
        drasp.srcc([1, 1, 1], [1, 2, 3])


def test_generate_is_deterministic_and_consistent():
    cfg = drasp.BenchConfig()
    cfg.num_systems = 3
    cfg.clips_per_system = 10
    cfg.min_frames = 20
    cfg.max_frames = 30
    cfg.input_width = 4
    cfg.seed = 7
    a = drasp.generate(cfg)
    b = drasp.generate(cfg)
    assert len(a["clips"]) == 30
    for ca, cb in zip(a["clips"], b["clips"]):
        np.testing.assert_array_equal(ca["frames"], cb["frames"])
    for sid, mean in a["truth"].items():
        mos = [c["true_mos"] for c in a["clips"] if c["system_id"] == sid]
        assert mean == pytest.approx(sum(mos) / len(mos), abs=1e-12)
