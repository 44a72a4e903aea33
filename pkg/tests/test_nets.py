import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from torquegrasp.errors import ConfigError
from torquegrasp.learn import DenseNet, ReplayBuffer, RunningNorm, polyak
from torquegrasp.learn.nets import Adam


def naive_forward(net, x):
    """Per-neuron scalar loops, no matrix products."""
    out = []
    for row in x:
        h = [float(v) for v in row]
        for li, (w, b) in enumerate(zip(net.weights, net.biases)):
            nxt = []
            for j in range(w.shape[1]):
                s = float(b[j])
                for i in range(w.shape[0]):
                    s += h[i] * float(w[i, j])
                nxt.append(s)
            if li < len(net.weights) - 1:
                nxt = [v if v > 0.0 else 0.0 for v in nxt]
            h = nxt
        out.append(h)
    return np.array(out)


def fd_grads(net, loss, x, step=1e-5):
    out = []
    for p in net.params:
        g = np.zeros_like(p)
        for i in np.ndindex(p.shape):
            old = p[i]
            p[i] = old + step
            up = loss(net.forward(x))
            p[i] = old - step
            dn = loss(net.forward(x))
            p[i] = old
            g[i] = (up - dn) / (2 * step)
        out.append(g)
    return out


def test_zero_weights_give_zero_output():
    net = DenseNet.init((4, 5, 3), np.random.default_rng(0), np.float64)
    for p in net.params:
        p[...] = 0.0
    assert np.all(net.forward(np.ones((2, 4))) == 0.0)


def test_identity_layer():
    net = DenseNet((3, 3), [np.eye(3)], [np.zeros(3)])
    x = np.array([[1.0, -2.0, 0.5]])
    assert np.array_equal(net.forward(x), x)


def test_forward_matches_naive_oracle():
    rng = np.random.default_rng(1)
    for sizes in [(3, 4, 2), (6, 8, 8, 3), (1, 5, 1)]:
        net = DenseNet.init(sizes, rng, np.float64)
        x = rng.normal(size=(7, sizes[0]))
        assert np.max(np.abs(net.forward(x) - naive_forward(net, x))) <= 1e-12


def test_shape_mismatch_rejected():
    with pytest.raises(ConfigError):
        DenseNet((3, 2), [np.zeros((2, 3))], [np.zeros(2)])


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(2)
    for sizes in [(3, 4, 2), (5, 7, 6, 3), (2, 8, 8, 1)]:
        net = DenseNet.init(sizes, rng, np.float64)
        x = rng.normal(size=(6, sizes[0]))
        t = rng.normal(size=(6, sizes[-1]))

        def loss(out):
            return 0.5 * np.sum((out - t) ** 2) + np.sum(np.cos(out))

        out, cache = net.forward(x, keep=True)
        grads = net.backward(cache, (out - t) - np.sin(out))
        for a, n in zip(grads, fd_grads(net, loss, x)):
            err = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)
            assert err.max() <= 1e-4


def test_input_gradient():
    rng = np.random.default_rng(3)
    net = DenseNet.init((4, 6, 2), rng, np.float64)
    x = rng.normal(size=(1, 4))
    out, cache = net.forward(x, keep=True)
    g_in = net.backward(cache, np.ones_like(out), need_input=True, need_params=False)
    for i in range(4):
        e = np.zeros_like(x)
        e[0, i] = 1e-6
        num = (net.forward(x + e).sum() - net.forward(x - e).sum()) / 2e-6
        assert abs(num - g_in[0, i]) <= 1e-6


def test_constant_loss_zero_gradients():
    net = DenseNet.init((3, 4, 2), np.random.default_rng(4), np.float64)
    _, cache = net.forward(np.ones((5, 3)), keep=True)
    assert all(np.all(g == 0.0) for g in net.backward(cache, np.zeros((5, 2))))


def test_linear_regression_closed_form():
    w = np.array([[0.3], [-0.7]])
    net = DenseNet((2, 1), [w.copy()], [np.array([0.1])])
    x = np.array([[1.5, 2.0]])
    y = 0.4
    out, cache = net.forward(x, keep=True)
    y_hat = out[0, 0]
    gw, gb = net.backward(cache, 2.0 * (out - y))
    assert np.allclose(gw[:, 0], 2.0 * (y_hat - y) * x[0], rtol=0, atol=1e-15)
    assert np.isclose(gb[0], 2.0 * (y_hat - y))


def test_polyak_examples():
    t, s = [np.zeros(3)], [np.ones(3)]
    polyak(t, s, 1.0)
    assert np.array_equal(t[0], s[0])
    t = [np.full(3, 0.25)]
    polyak(t, s, 0.0)
    assert np.all(t[0] == 0.25)
    t = [np.zeros(3)]
    polyak(t, s, 0.5)
    polyak(t, s, 0.5)
    assert np.all(t[0] == 0.75)
    with pytest.raises(ConfigError):
        polyak([np.zeros(2)], [np.zeros(3)], 0.5)


def test_adam_first_step_is_lr_sign():
    p = [np.array([1.0, -2.0])]
    opt = Adam(p, lr=0.1)
    opt.step([np.array([3.0, -0.5])])
    assert np.allclose(p[0], [0.9, -1.9], atol=1e-7)


def test_ring_eviction():
    buf = ReplayBuffer(2, 1, 1)
    for i in range(3):
        buf.push([i], [0], float(i), [i], False)
    assert len(buf) == 2
    assert sorted(buf.rew.tolist()) == [1.0, 2.0]


def test_single_item_buffer():
    buf = ReplayBuffer(1, 2, 1)
    buf.push([1.0, 2.0], [0.5], 3.0, [4.0, 5.0], True)
    b = buf.sample(np.random.default_rng(0), 1)
    assert b.rew[0] == 3.0 and b.done[0] == 1.0 and np.array_equal(b.obs[0], [1.0, 2.0])


def test_uniform_sampling_chi_square():
    buf = ReplayBuffer(10, 1, 1)
    for i in range(10):
        buf.push([i], [0], float(i), [i], False)
    rng = np.random.default_rng(7)
    draws = np.concatenate([buf.sample(rng, 10).rew for _ in range(10_000)])
    counts = np.bincount(draws.astype(int), minlength=10)
    assert chisquare(counts).pvalue > 0.01


def test_underfilled_sample_rejected():
    buf = ReplayBuffer(10, 1, 1)
    buf.push([0], [0], 0.0, [0], False)
    with pytest.raises(ValueError):
        buf.sample(np.random.default_rng(0), 2)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 20), min_size=1, max_size=6), st.integers(0, 1000))
def test_running_norm_matches_batch_statistics(chunks, seed):
    rng = np.random.default_rng(seed)
    data = rng.normal(3.0, 2.0, size=(sum(chunks), 3))
    norm = RunningNorm(3)
    start = 0
    for c in chunks:
        norm.update(data[start:start + c])
        start += c
    assert np.allclose(norm.mean, data.mean(axis=0), atol=1e-10)
    if len(data) >= 2:
        assert np.allclose(norm.var, data.var(axis=0), atol=1e-9)


def test_running_norm_frozen_snapshot():
    norm = RunningNorm(2)
    norm.update(np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]]))
    snap = norm.snapshot()
    snap.update(np.full((5, 2), 100.0))
    assert np.array_equal(snap.mean, norm.mean)
    assert np.all(np.abs(snap(np.full(2, 1e9))) == snap.clip)
