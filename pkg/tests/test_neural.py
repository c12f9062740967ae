from collections import OrderedDict

import numpy as np
import pytest

from graphgen.errors import ShapeMismatch
from graphgen.neural import (Adam, NetConfig, SequenceNet, bce_loss, clip_by_global_norm,
                             finite_difference_check, forward_step, softmax)

DIMS = (4, 4, 3, 2, 3)
K = sum(DIMS)


def make_net(seed=0, dropout=0.0, hidden=16, layers=2, randomize=True):
    cfg = NetConfig(k=K, dims=DIMS, embed=8, hidden=hidden, layers=layers,
                    mlp_hidden=12, dropout=dropout)
    rng = np.random.default_rng(seed)
    net = SequenceNet(cfg, rng)
    if randomize:
        # move off the zero-bias ReLU kink so central differences are two-sided
        for v in net.params.values():
            v[...] = rng.normal(0.0, 0.5, v.shape)
    return net


def toy_batch(seed=0, B=3, T=4):
    rng = np.random.default_rng(seed)
    idx = np.stack([rng.integers(d, size=(B, T)) for d in DIMS], axis=-1)
    X = np.zeros((B, T, K))
    offs = np.concatenate([[0], np.cumsum(DIMS)[:-1]])
    for t in range(1, T):
        for c in range(5):
            X[np.arange(B), t, offs[c] + idx[:, t - 1, c]] = 1.0
    mask = np.ones((B, T))
    mask[0, -1] = 0.0
    return X, idx, mask


def test_softmax_simplex():
    z = np.random.default_rng(1).normal(size=(7, 5)) * 30
    p = softmax(z)
    assert (p >= 0).all() and np.allclose(p.sum(-1), 1.0, atol=1e-12)


def test_bce_values():
    assert bce_loss(np.array([0.5, 0.5]), np.array([1.0, 0.0])) == pytest.approx(2 * np.log(2))
    t = np.array([1.0, 0.0, 0.0, 1.0])
    assert bce_loss(t, t) == pytest.approx(-4 * np.log(1 - 1e-7))
    rng = np.random.default_rng(0)
    assert bce_loss(rng.random(20), (rng.random(20) > 0.5).astype(float)) >= 0


class TestForward:
    def test_zero_weights_uniform(self):
        net = make_net(randomize=False)
        for v in net.params.values():
            v[...] = 0.0
        _, probs = forward_step(net, net.init_state(1), np.zeros(K))
        for pr, dim in zip(probs, DIMS):
            assert np.allclose(pr, 1.0 / dim)

    def test_sums_and_determinism(self):
        net = make_net(3)
        x = np.random.default_rng(0).random((2, K))
        s1, p1 = net.step(net.init_state(2), x)
        s2, p2 = net.step(net.init_state(2), x)
        for a, b in zip(p1, p2):
            assert np.array_equal(a, b)
            assert np.allclose(a.sum(-1), 1.0, atol=1e-9)

    def test_shape_mismatch(self):
        net = make_net()
        with pytest.raises(ShapeMismatch):
            net.step(net.init_state(1), np.zeros((1, K + 1)))

    def test_step_matches_sequence_forward(self):
        net = make_net(2)
        X, _, _ = toy_batch()
        probs, _ = net.forward(X)
        state = net.init_state(X.shape[0])
        for t in range(X.shape[1]):
            state, p = net.step(state, X[:, t])
            for hd in range(5):
                assert np.allclose(p[hd], probs[hd][:, t])

    def test_long_run_finite(self):
        net = make_net(4, randomize=False)
        rng = np.random.default_rng(0)
        state = net.init_state(1)
        for _ in range(1000):
            state, probs = net.step(state, (rng.random((1, K)) < 0.3).astype(float))
        assert all(np.isfinite(h).all() and np.isfinite(c).all() for h, c in state)
        assert all(np.isfinite(p).all() for p in probs)


class TestGradients:
    def test_finite_differences(self):
        net = make_net(0)
        X, idx, mask = toy_batch()
        rep = finite_difference_check(net, X, idx, mask, tolerance=1e-4)
        assert rep["passed"], rep["per_param"]
        names = set(rep["per_param"])
        assert {"emb.W", "lstm0.Wx", "lstm1.Wh", "head4.W2"} <= names

    def test_zero_tolerance_fails(self):
        net = make_net(0)
        X, idx, mask = toy_batch()
        assert not finite_difference_check(net, X, idx, mask, tolerance=0.0)["passed"]

    def test_dropout_rejected(self):
        net = make_net(0, dropout=0.2)
        X, idx, mask = toy_batch()
        with pytest.raises(ValueError):
            finite_difference_check(net, X, idx, mask)

    def test_masked_out_loss_has_zero_grads(self):
        net = make_net(1)
        X, idx, _ = toy_batch()
        loss, grads = net.loss_and_grads(X, idx, np.zeros(X.shape[:2]))
        assert loss == 0.0
        assert all(not g.any() for g in grads.values())

    def test_scale_is_linear(self):
        net = make_net(1)
        X, idx, mask = toy_batch()
        _, g1 = net.loss_and_grads(X, idx, mask)
        _, g2 = net.loss_and_grads(X, idx, mask, scale=2.0)
        for k in g1:
            assert np.allclose(g2[k], 2 * g1[k])

    def test_loss_matches_forward(self):
        net = make_net(5)
        X, idx, mask = toy_batch()
        loss, _ = net.loss_and_grads(X, idx, mask)
        assert loss == pytest.approx(net.loss(X, idx, mask), rel=1e-12)


class TestAdam:
    def params(self):
        return OrderedDict(a=np.array([1.0, -2.0]), b=np.array([[0.5]]))

    def test_zero_grads_no_decay(self):
        p = self.params()
        before = {k: v.copy() for k, v in p.items()}
        opt = Adam(p, weight_decay=0.0)
        opt.step(p, OrderedDict((k, np.zeros_like(v)) for k, v in p.items()))
        assert all(np.array_equal(p[k], before[k]) for k in p)

    def test_first_step_magnitude(self):
        p = self.params()
        before = {k: v.copy() for k, v in p.items()}
        opt = Adam(p, lr=0.01, weight_decay=0.0, clip_norm=0)
        g = OrderedDict(a=np.array([3.0, -0.001]), b=np.array([[1e-3]]))
        opt.step(p, g)
        for k in p:
            delta = p[k] - before[k]
            assert (np.abs(delta) <= 0.01 * (1 + 1e-6)).all()
            assert (np.sign(delta) == -np.sign(g[k])).all()

    def test_clipping(self):
        g = OrderedDict(a=np.array([6.0, 8.0]))
        clipped, norm = clip_by_global_norm(g, 1.0)
        assert norm == pytest.approx(10.0)
        assert np.linalg.norm(clipped["a"]) == pytest.approx(1.0)
        p = OrderedDict(a=np.zeros(2))
        assert Adam(p, clip_norm=1.0).step(p, g) == pytest.approx(10.0)
