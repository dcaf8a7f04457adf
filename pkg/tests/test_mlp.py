import numpy as np
import pytest

from platoonrl.mlp import (ACTIVATIONS, Adam, Layer, Mlp, adam_step, init_mlp,
                           load_mlp, save_mlp, soft_update)


def finite_difference_grads(net, x, weight_vec, h=1e-5):
    """Central-difference oracle for the scalar loss weight_vec . output."""
    grads_w, grads_b = [], []
    for layer in net.layers:
        gw = np.zeros_like(layer.weight)
        for idx in np.ndindex(*layer.weight.shape):
            orig = layer.weight[idx]
            layer.weight[idx] = orig + h
            hi = float(np.sum(net(x) * weight_vec))
            layer.weight[idx] = orig - h
            lo = float(np.sum(net(x) * weight_vec))
            layer.weight[idx] = orig
            gw[idx] = (hi - lo) / (2 * h)
        gb = np.zeros_like(layer.bias)
        for idx in np.ndindex(*layer.bias.shape):
            orig = layer.bias[idx]
            layer.bias[idx] = orig + h
            hi = float(np.sum(net(x) * weight_vec))
            layer.bias[idx] = orig - h
            lo = float(np.sum(net(x) * weight_vec))
            layer.bias[idx] = orig
            gb[idx] = (hi - lo) / (2 * h)
        grads_w.append(gw)
        grads_b.append(gb)
    return grads_w, grads_b


def max_rel_err(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), 1e-4)))


def test_zero_network_outputs_zero():
    layers = [Layer(np.zeros((4, 3)), np.zeros(4), "relu"),
              Layer(np.zeros((2, 4)), np.zeros(2), "relu")]
    net = Mlp(layers)
    out = net(np.ones(3))
    assert np.array_equal(out, np.zeros((1, 2)))


def test_identity_layer_passthrough():
    net = Mlp([Layer(np.eye(3), np.zeros(3), "identity")])
    x = np.array([1.5, -2.0, 0.25])
    assert np.allclose(net(x)[0], x)


def test_scalar_tanh_unit():
    net = Mlp([Layer(np.array([[2.0]]), np.array([1.0]), "tanh")])
    assert net(np.array([0.0]))[0, 0] == pytest.approx(np.tanh(1.0), rel=1e-12)
    assert net(np.array([0.0]))[0, 0] == pytest.approx(0.76159, abs=1e-5)


def test_forward_rejects_bad_dims():
    net = init_mlp([3, 4, 2], ["relu", "identity"], 0)
    with pytest.raises(ValueError):
        net(np.ones(5))
    with pytest.raises(ValueError):
        Mlp([Layer(np.zeros((4, 3)), np.zeros(4), "relu"),
             Layer(np.zeros((2, 5)), np.zeros(2), "relu")])


def test_identity_net_gradients():
    net = Mlp([Layer(np.eye(2), np.zeros(2), "identity")])
    x = np.array([[3.0, -1.0]])
    out, cache = net.forward(x)
    grads = net.backward(cache, np.ones_like(out))
    # loss = sum(output): dW = column of inputs, db = 1, dx = upstream @ W
    assert np.allclose(grads.weights[0], np.vstack([x, x]))
    assert np.allclose(grads.biases[0], np.ones(2))
    assert np.allclose(grads.wrt_input, np.ones((1, 2)))


def test_backward_shape_guard():
    net = init_mlp([2, 3, 1], ["tanh", "identity"], 1)
    out, cache = net.forward(np.ones(2))
    with pytest.raises(ValueError):
        net.backward(cache, np.ones((2, 2)))


def test_gradient_check_random_small_nets():
    # exact backprop versus central finite differences on 100 random nets
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        n_layers = int(rng.integers(1, 4))
        dims = [int(rng.integers(1, 9)) for _ in range(n_layers + 1)]
        acts = [str(rng.choice(ACTIVATIONS)) for _ in range(n_layers)]
        net = init_mlp(dims, acts, int(rng.integers(0, 2**31)))
        for layer in net.layers:
            # nonzero biases keep relu kinks off the sampled points, which
            # central differences require
            layer.bias[:] = rng.normal(scale=0.1, size=layer.bias.shape)
        x = rng.normal(size=(3, dims[0]))
        weight_vec = rng.normal(size=(3, dims[-1]))
        out, cache = net.forward(x)
        grads = net.backward(cache, weight_vec)
        fd_w, fd_b = finite_difference_grads(net, x, weight_vec)
        for gw, fw in zip(grads.weights, fd_w):
            worst = max(worst, max_rel_err(gw, fw))
        for gb, fb in zip(grads.biases, fd_b):
            worst = max(worst, max_rel_err(gb, fb))
    assert worst < 1e-4


def test_input_gradient_matches_finite_differences():
    rng = np.random.default_rng(77)
    net = init_mlp([4, 6, 2], ["tanh", "identity"], 3)
    x = rng.normal(size=(1, 4))
    w = rng.normal(size=(1, 2))
    out, cache = net.forward(x)
    dx = net.backward(cache, w).wrt_input
    h = 1e-6
    for j in range(4):
        xp, xm = x.copy(), x.copy()
        xp[0, j] += h
        xm[0, j] -= h
        fd = (np.sum(net(xp) * w) - np.sum(net(xm) * w)) / (2 * h)
        assert dx[0, j] == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_input_only_backward_matches_full():
    rng = np.random.default_rng(8)
    net = init_mlp([3, 5, 2], ["relu", "tanh"], 4)
    x = rng.normal(size=(6, 3))
    w = rng.normal(size=(6, 2))
    _, cache = net.forward(x)
    full = net.backward(cache, w)
    lean = net.backward(cache, w, input_only=True)
    assert np.allclose(full.wrt_input, lean.wrt_input)
    assert lean.weights[0] is None


def test_tanh_outputs_bounded():
    net = init_mlp([2, 8, 3], ["relu", "tanh"], 12)
    rng = np.random.default_rng(0)
    out = net(rng.normal(scale=3.0, size=(100, 2)))
    assert np.all(out > -1.0) and np.all(out < 1.0)
    # float64 tanh saturates for extreme inputs but never exceeds the bound
    extreme = net(rng.normal(scale=1e4, size=(50, 2)))
    assert np.all(np.abs(extreme) <= 1.0)


def test_init_determinism_and_bounds():
    a = init_mlp([256, 256, 1], ["relu", "tanh"], 99)
    b = init_mlp([256, 256, 1], ["relu", "tanh"], 99)
    for la, lb in zip(a.layers, b.layers):
        assert np.array_equal(la.weight, lb.weight)
        assert np.array_equal(la.bias, lb.bias)
    c = init_mlp([256, 256, 1], ["relu", "tanh"], 100)
    assert not np.array_equal(a.layers[0].weight, c.layers[0].weight)
    assert np.max(np.abs(a.layers[0].weight)) <= 1.0 / 16.0
    assert np.all(a.layers[0].bias == 0.0)


def test_init_final_halfwidth():
    net = init_mlp([4, 32, 1], ["relu", "tanh"], 5, final_halfwidth=3e-3)
    assert np.max(np.abs(net.layers[-1].weight)) <= 3e-3
    assert np.max(np.abs(net.layers[0].weight)) <= 0.5 + 1e-12


def test_adam_zero_gradient_is_noop():
    net = init_mlp([2, 3, 1], ["tanh", "identity"], 6)
    before = [p.copy() for p in net.parameters()]
    opt = Adam(net, lr=0.01)
    _, cache = net.forward(np.zeros((1, 2)))
    grads = net.backward(cache, np.zeros((1, 1)))
    adam_step(net, grads, opt)
    for p, q in zip(net.parameters(), before):
        assert np.array_equal(p, q)


def test_adam_first_step_moves_by_lr_sign():
    net = Mlp([Layer(np.array([[1.0, -2.0]]), np.array([0.5]), "identity")])
    opt = Adam(net, lr=1e-3)
    grads = net.backward(net.forward(np.array([[1.0, -1.0]]))[1],
                         np.array([[1.0]]))
    # gradient wrt weights is the input (1, -1); bias gradient 1
    w_before = net.layers[0].weight.copy()
    adam_step(net, grads, opt)
    delta = net.layers[0].weight - w_before
    assert delta[0, 0] == pytest.approx(-1e-3, rel=1e-6)
    assert delta[0, 1] == pytest.approx(+1e-3, rel=1e-6)


def test_adam_determinism_and_finiteness():
    def run():
        net = init_mlp([3, 8, 1], ["relu", "identity"], 42)
        opt = Adam(net, lr=1e-2)
        rng = np.random.default_rng(9)
        for _ in range(50):
            x = rng.normal(size=(4, 3))
            out, cache = net.forward(x)
            grads = net.backward(cache, 2 * (out - 1.0) / len(out))
            opt.step(grads)
        return net

    a, b = run(), run()
    for pa, pb in zip(a.parameters(), b.parameters()):
        assert np.array_equal(pa, pb)
        assert np.all(np.isfinite(pa))


def test_adam_rejects_foreign_network():
    net_a = init_mlp([2, 2], ["identity"], 0)
    net_b = init_mlp([2, 2], ["identity"], 1)
    opt = Adam(net_a)
    _, cache = net_b.forward(np.zeros((1, 2)))
    grads = net_b.backward(cache, np.zeros((1, 2)))
    with pytest.raises(ValueError):
        adam_step(net_b, grads, opt)


def test_soft_update_blend_and_bounds():
    target = init_mlp([2, 4, 1], ["relu", "tanh"], 1)
    online = init_mlp([2, 4, 1], ["relu", "tanh"], 2)
    snapshot = [p.copy() for p in target.parameters()]
    soft_update(target, online, 0.0)
    for p, q in zip(target.parameters(), snapshot):
        assert np.array_equal(p, q)
    soft_update(target, online, 0.005)
    for t, t0, o in zip(target.parameters(), snapshot, online.parameters()):
        lo = np.minimum(t0, o) - 1e-15
        hi = np.maximum(t0, o) + 1e-15
        assert np.all(t >= lo) and np.all(t <= hi)
    soft_update(target, online, 1.0)
    for t, o in zip(target.parameters(), online.parameters()):
        assert np.allclose(t, o)


def test_soft_update_scalar_value():
    target = Mlp([Layer(np.zeros((1, 1)), np.zeros(1), "identity")])
    online = Mlp([Layer(np.ones((1, 1)), np.ones(1), "identity")])
    soft_update(target, online, 0.005)
    assert target.layers[0].weight[0, 0] == pytest.approx(0.005)
    assert target.layers[0].bias[0] == pytest.approx(0.005)


def test_save_load_roundtrip_lossless(tmp_path):
    net = init_mlp([3, 16, 2], ["relu", "tanh"], 2718)
    # perturb to non-trivial values including tiny magnitudes
    net.layers[0].weight[0, 0] = 1.0 / 3.0
    net.layers[1].bias[1] = 1e-17
    path = tmp_path / "weights.txt"
    save_mlp(net, path)
    clone = load_mlp(path)
    assert len(clone.layers) == len(net.layers)
    for a, b in zip(net.layers, clone.layers):
        assert a.activation == b.activation
        assert np.array_equal(a.weight, b.weight)
        assert np.array_equal(a.bias, b.bias)
    first = path.read_bytes()
    save_mlp(clone, path)
    assert path.read_bytes() == first


def test_save_format_header(tmp_path):
    net = init_mlp([1, 2, 1], ["relu", "tanh"], 0)
    path = tmp_path / "w.txt"
    save_mlp(net, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "mlp v1 2"
    assert lines[1] == "2 1 relu"
    with pytest.raises(ValueError):
        bad = tmp_path / "bad.txt"
        bad.write_text("mlp v2 1\n")
        load_mlp(bad)
