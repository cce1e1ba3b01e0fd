import io

import numpy as np
import pytest

from rismaestro.nets import (LOG_STD_MAX, LOG_STD_MIN, MAGIC, AdamState,
                             DenseNet, adam_step, backward,
                             categorical_entropy, categorical_logprob_sample,
                             forward, gaussian_entropy, gaussian_logprob,
                             gaussian_logprob_sample, init_dense, orthogonal,
                             read_net, write_net)

# the four full-scale network shapes (input, hidden..., output)
TABLE_SHAPES = {
    "sched": ([128, 64, 28, 28], "softmax"),
    "prec": ([8, 16, 32, 32], "linear"),
    "ris": ([32, 32, 64, 64], "linear"),
    "critic": ([136, 64, 8, 1], "linear"),
}


def _finite_diff_grads(net, x, dout, h=1e-6):
    """Central differences of dout . forward(net, x) wrt every parameter."""
    params = net.params()
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            f_plus = float(np.sum(dout * forward(net, x)[0]))
            p[idx] = orig - h
            f_minus = float(np.sum(dout * forward(net, x)[0]))
            p[idx] = orig
            g[idx] = (f_plus - f_minus) / (2 * h)
            it.iternext()
        grads.append(g)
    return grads


def _max_rel_err(analytic, fd):
    worst = 0.0
    for a, f in zip(analytic, fd):
        denom = np.maximum(np.abs(a) + np.abs(f), 1e-3)
        worst = max(worst, float(np.max(np.abs(a - f) / denom)))
    return worst


def test_forward_zero_net_linear():
    net = DenseNet(sizes=[3, 2], weights=[np.zeros((2, 3))],
                   biases=[np.zeros(2)], out_activation="linear")
    y, _ = forward(net, np.array([1.0, -2.0, 3.0]))
    np.testing.assert_array_equal(y, np.zeros(2))


def test_forward_softmax_uniform():
    net = DenseNet(sizes=[3, 5], weights=[np.zeros((5, 3))],
                   biases=[np.zeros(5)], out_activation="softmax")
    y, _ = forward(net, np.ones(3))
    np.testing.assert_allclose(y, 0.2)
    assert y.sum() == pytest.approx(1.0)


def test_forward_matches_hand_rolled(rng):
    # independent step-by-step evaluation of a random 2-3-2 net
    net = init_dense([2, 3, 2], "linear", rng)
    x = rng.standard_normal(2)
    h = np.tanh(net.weights[0] @ x + net.biases[0])
    expected = net.weights[1] @ h + net.biases[1]
    y, _ = forward(net, x)
    np.testing.assert_allclose(y, expected, rtol=1e-14)


def test_forward_shape_mismatch(rng):
    net = init_dense([4, 3, 2], "linear", rng)
    with pytest.raises(ValueError):
        forward(net, np.zeros(5))


def test_backward_finite_difference_small(rng):
    net = init_dense([4, 8, 3], "linear", rng)
    x = rng.standard_normal(4)
    dout = rng.standard_normal(3)
    _, cache = forward(net, x)
    analytic = backward(net, cache, dout)
    fd = _finite_diff_grads(net, x, dout)
    assert _max_rel_err(analytic, fd) <= 1e-5


@pytest.mark.parametrize("name", list(TABLE_SHAPES))
def test_backward_finite_difference_table_shapes(name, rng):
    sizes, act = TABLE_SHAPES[name]
    net = init_dense(sizes, act, rng)
    x = rng.standard_normal(sizes[0])
    dout = rng.standard_normal(sizes[-1])
    _, cache = forward(net, x)
    analytic = backward(net, cache, dout)
    fd = _finite_diff_grads(net, x, dout)
    assert _max_rel_err(analytic, fd) <= 1e-5


def test_backward_zero_gradient(rng):
    net = init_dense([3, 4, 2], "linear", rng)
    _, cache = forward(net, rng.standard_normal(3))
    grads = backward(net, cache, np.zeros(2))
    assert all(np.all(g == 0) for g in grads)


def test_backward_linearity(rng):
    net = init_dense([3, 4, 2], "linear", rng)
    _, cache = forward(net, rng.standard_normal(3))
    g1 = rng.standard_normal(2)
    g2 = rng.standard_normal(2)
    a = backward(net, cache, g1)
    b = backward(net, cache, g2)
    c = backward(net, cache, g1 + g2)
    for x, y, z in zip(a, b, c):
        np.testing.assert_allclose(x + y, z, rtol=1e-12, atol=1e-15)


def test_backward_rejects_stale_cache(rng):
    net1 = init_dense([3, 2], "linear", rng)
    net2 = init_dense([3, 2], "linear", rng)
    _, cache = forward(net1, np.zeros(3))
    with pytest.raises(ValueError):
        backward(net2, cache, np.zeros(2))


def test_adam_zero_gradient_no_op(rng):
    net = init_dense([3, 4, 2], "linear", rng)
    params = net.params()
    before = [p.copy() for p in params]
    adam = AdamState.for_params(params)
    adam_step(adam, params, [np.zeros_like(p) for p in params])
    for b, p in zip(before, params):
        np.testing.assert_array_equal(b, p)


def test_adam_scalar_first_step():
    # hand computation: first bias-corrected step moves by lr*g/(|g|+eps)
    p = [np.array([1.0])]
    g = 0.37
    adam = AdamState.for_params(p, lr=3e-4)
    adam_step(adam, p, [np.array([g])])
    expected = 1.0 - 3e-4 * g / (abs(g) + 1e-8)
    assert p[0][0] == pytest.approx(expected, rel=1e-10)


def test_adam_deterministic(rng):
    def run():
        r = np.random.default_rng(5)
        net = init_dense([3, 4, 2], "linear", r)
        params = net.params()
        adam = AdamState.for_params(params, lr=1e-3)
        for _ in range(5):
            grads = [np.full_like(p, 0.1) for p in params]
            adam_step(adam, params, grads)
        return [p.copy() for p in params]

    for a, b in zip(run(), run()):
        np.testing.assert_array_equal(a, b)


def test_adam_rejects_non_finite():
    p = [np.array([1.0])]
    adam = AdamState.for_params(p)
    with pytest.raises(FloatingPointError):
        adam_step(adam, p, [np.array([np.nan])])


def test_orthogonal_init_property(rng):
    for shape in ((8, 8), (4, 16), (16, 4)):
        W = orthogonal(shape, np.sqrt(2.0), rng)
        if shape[0] <= shape[1]:
            gram = W @ W.T
        else:
            gram = W.T @ W
        np.testing.assert_allclose(gram, 2.0 * np.eye(min(shape)), atol=1e-6)


def test_hidden_layers_orthogonal_at_init(rng):
    net = init_dense([16, 8, 8, 4], "linear", rng)
    W = net.weights[0]  # 8x16 hidden layer, gain sqrt(2)
    np.testing.assert_allclose(W @ W.T, 2.0 * np.eye(8), atol=1e-6)
    assert all(np.all(b == 0) for b in net.biases)


def test_categorical_one_hot():
    idx, logp, ent = categorical_logprob_sample(
        np.array([0.0, 1.0, 0.0]), np.random.default_rng(0))
    assert idx == 1 and logp == 0.0 and ent == 0.0


def test_categorical_uniform_entropy():
    assert categorical_entropy(np.full(6, 1 / 6)) == pytest.approx(np.log(6))


def test_categorical_frequencies(rng):
    p = np.array([0.2, 0.8])
    n = 100_000
    hits = sum(categorical_logprob_sample(p, rng)[0] for _ in range(n))
    se = np.sqrt(0.2 * 0.8 / n)
    assert abs(hits / n - 0.8) < 3 * se


def test_categorical_rejects_bad_distribution():
    with pytest.raises(ValueError):
        categorical_logprob_sample(np.array([0.5, 0.2]), np.random.default_rng(0))


def test_gaussian_logprob_at_mode():
    mean = np.array([0.3, -0.7])
    log_std = np.full(2, LOG_STD_MIN)
    lp = gaussian_logprob(mean, mean, log_std)
    expected = -np.sum(log_std) - 0.5 * 2 * np.log(2 * np.pi)
    assert lp == pytest.approx(expected, rel=1e-12)


def test_gaussian_unit_entropy():
    d = 5
    assert gaussian_entropy(np.zeros(d)) == pytest.approx(
        d / 2 * (1 + np.log(2 * np.pi)))


def test_gaussian_sampling_moments():
    rng = np.random.default_rng(2024)
    mean = np.array([1.0, -2.0])
    log_std = np.log(np.array([0.5, 0.2]))
    n = 100_000
    draws = np.array([gaussian_logprob_sample(mean, log_std, rng)[0]
                      for _ in range(n)])
    std = np.exp(log_std)
    assert np.all(np.abs(draws.mean(axis=0) - mean) < 3 * std / np.sqrt(n))
    assert np.all(np.abs(draws.std(axis=0) - std) < 3 * std / np.sqrt(n))


def test_gaussian_std_clamped(rng):
    a, lp, ent = gaussian_logprob_sample(np.zeros(2), np.full(2, 10.0), rng)
    # log-std is clamped to 0 -> unit std
    assert ent == pytest.approx(gaussian_entropy(np.zeros(2)))


def test_checkpoint_roundtrip_byte_exact(rng):
    net = init_dense([5, 7, 3], "linear", rng)
    log_std = rng.standard_normal(3)
    buf = io.BytesIO()
    write_net(buf, net, log_std)
    raw = buf.getvalue()
    assert raw.startswith(MAGIC)

    net2, ls2 = read_net(io.BytesIO(raw))
    np.testing.assert_array_equal(ls2, log_std)
    for a, b in zip(net.params(), net2.params()):
        np.testing.assert_array_equal(a, b)

    buf2 = io.BytesIO()
    write_net(buf2, net2, ls2)
    assert buf2.getvalue() == raw


def test_checkpoint_rejects_bad_magic():
    with pytest.raises(ValueError):
        read_net(io.BytesIO(b"NOTAMAGIC!!" + b"\x00" * 64))
