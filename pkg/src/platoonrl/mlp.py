"""Minimal fully-connected network with exact backpropagation, an
adaptive-moment optimizer, and a lossless text weight format.

Everything runs in 64-bit floats so repeated runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "tanh", "identity")


@dataclass
class Layer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray    # (out,)
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weight.shape[0] != self.bias.shape[0]:
            raise ValueError("weight/bias shape mismatch")


@dataclass
class Gradients:
    """Parameter gradients plus the gradient with respect to the input."""

    weights: list
    biases: list
    wrt_input: np.ndarray


def _apply(act: str, z: np.ndarray) -> np.ndarray:
    # z is a fresh buffer, safe to transform in place
    if act == "relu":
        return np.maximum(z, 0.0, out=z)
    if act == "tanh":
        return np.tanh(z, out=z)
    return z


class Mlp:
    """Stack of dense layers. forward returns the output and a cache that
    backward consumes to produce exact gradients."""

    def __init__(self, layers: list[Layer]):
        if not layers:
            raise ValueError("need at least one layer")
        for a, b in zip(layers, layers[1:]):
            if b.weight.shape[1] != a.weight.shape[0]:
                raise ValueError("layer dimensions do not chain")
        self.layers = layers

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    def forward(self, x: np.ndarray):
        """Run a (batch, in) or (in,) input through the net.

        Returns (output, cache); the cache holds per-layer inputs/outputs.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.input_dim:
            raise ValueError(f"input dim {x.shape[1]} != {self.input_dim}")
        inputs, outputs = [], []
        for layer in self.layers:
            inputs.append(x)
            z = x @ layer.weight.T
            z += layer.bias
            x = _apply(layer.activation, z)
            outputs.append(x)
        return x, (inputs, outputs)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, grad_out: np.ndarray,
                 input_only: bool = False) -> Gradients:
        """Backpropagate d(loss)/d(output) through the cached forward pass.

        With input_only the parameter gradients are skipped and only the
        gradient with respect to the network input is produced.
        """
        inputs, outputs = cache
        g = np.atleast_2d(np.array(grad_out, dtype=float))  # private copy
        if g.shape != outputs[-1].shape:
            raise ValueError("upstream gradient shape mismatch")
        grads_w = [None] * len(self.layers)
        grads_b = [None] * len(self.layers)
        for idx in range(len(self.layers) - 1, -1, -1):
            layer, x, y = self.layers[idx], inputs[idx], outputs[idx]
            if layer.activation == "relu":
                g *= y > 0.0
            elif layer.activation == "tanh":
                g *= 1.0 - y * y
            if not input_only:
                grads_w[idx] = g.T @ x
                grads_b[idx] = g.sum(axis=0)
            g = g @ layer.weight
        return Gradients(weights=grads_w, biases=grads_b, wrt_input=g)

    def copy(self) -> "Mlp":
        return Mlp([Layer(l.weight.copy(), l.bias.copy(), l.activation)
                    for l in self.layers])

    def parameters(self) -> list:
        out = []
        for l in self.layers:
            out.append(l.weight)
            out.append(l.bias)
        return out


def init_mlp(dims, activations, seed, final_halfwidth=None) -> Mlp:
    """Create a network with uniform fan-in weight init and zero biases.

    dims is the [in, hidden..., out] size chain; activations has one tag per
    layer. final_halfwidth, when given, overrides the last layer's uniform
    half-width (small values keep initial outputs near zero).
    """
    dims = list(dims)
    if len(dims) < 2:
        raise ValueError("need at least input and output dims")
    if len(activations) != len(dims) - 1:
        raise ValueError("one activation per layer required")
    rng = np.random.default_rng(seed)
    layers = []
    for i, act in enumerate(activations):
        fan_in, fan_out = dims[i], dims[i + 1]
        halfwidth = 1.0 / np.sqrt(fan_in)
        if final_halfwidth is not None and i == len(activations) - 1:
            halfwidth = final_halfwidth
        w = rng.uniform(-halfwidth, halfwidth, size=(fan_out, fan_in))
        layers.append(Layer(w, np.zeros(fan_out), act))
    return Mlp(layers)


class Adam:
    """Adaptive-moment optimizer over one network's parameters, in place.
    Scratch buffers are preallocated so updates do not allocate."""

    def __init__(self, net: Mlp, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.net = net
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p) for p in net.parameters()]
        self.v = [np.zeros_like(p) for p in net.parameters()]
        self._scratch = [np.zeros_like(p) for p in net.parameters()]

    def step(self, grads: Gradients):
        flat = []
        for gw, gb in zip(grads.weights, grads.biases):
            flat.append(gw)
            flat.append(gb)
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.step_count
        bc2 = 1.0 - b2 ** self.step_count
        scale = self.lr / bc1
        for p, g, m, v, tmp in zip(self.net.parameters(), flat, self.m,
                                   self.v, self._scratch):
            m *= b1
            np.multiply(g, 1.0 - b1, out=tmp)
            m += tmp
            v *= b2
            np.multiply(g, g, out=tmp)
            tmp *= 1.0 - b2
            v += tmp
            np.divide(v, bc2, out=tmp)
            np.sqrt(tmp, out=tmp)
            tmp += self.eps
            np.divide(m, tmp, out=tmp)
            tmp *= scale
            p -= tmp


def adam_step(net: Mlp, grads: Gradients, opt: Adam) -> Mlp:
    """Apply one optimizer update; returns the (mutated) network."""
    if opt.net is not net:
        raise ValueError("optimizer is bound to a different network")
    opt.step(grads)
    return net


def soft_update(target: Mlp, online: Mlp, tau: float):
    """Blend online parameters into the target: t = tau*o + (1-tau)*t."""
    t_params, o_params = target.parameters(), online.parameters()
    if len(t_params) != len(o_params):
        raise ValueError("network shapes do not match")
    for t, o in zip(t_params, o_params):
        if t.shape != o.shape:
            raise ValueError("network shapes do not match")
        t *= 1.0 - tau
        t += tau * o


def save_mlp(net: Mlp, path):
    """Write the network as text: header, then per layer its shape line,
    weight rows and bias row, all with 17 significant digits."""
    lines = [f"mlp v1 {len(net.layers)}"]
    for layer in net.layers:
        out_dim, in_dim = layer.weight.shape
        lines.append(f"{out_dim} {in_dim} {layer.activation}")
        for row in layer.weight:
            lines.append(" ".join("%.17g" % w for w in row))
        lines.append(" ".join("%.17g" % b for b in layer.bias))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mlp(path) -> Mlp:
    """Read a network written by save_mlp."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    header = lines[0].split()
    if len(header) != 3 or header[0] != "mlp" or header[1] != "v1":
        raise ValueError(f"bad weight file header: {lines[0]!r}")
    n_layers = int(header[2])
    layers = []
    pos = 1
    for _ in range(n_layers):
        out_dim, in_dim, act = lines[pos].split()
        out_dim, in_dim = int(out_dim), int(in_dim)
        pos += 1
        rows = [np.array(lines[pos + r].split(), dtype=float)
                for r in range(out_dim)]
        pos += out_dim
        bias = np.array(lines[pos].split(), dtype=float)
        pos += 1
        weight = np.vstack(rows)
        if weight.shape != (out_dim, in_dim) or bias.shape != (out_dim,):
            raise ValueError("weight file shape mismatch")
        layers.append(Layer(weight, bias, act))
    return Mlp(layers)
