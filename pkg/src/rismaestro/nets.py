"""Dense-network machinery for the multi-agent learner.

Float64 throughout, tanh hidden layers, linear or softmax outputs, exact
reverse-mode gradients, bias-corrected Adam, and stochastic policy heads
(categorical over a codebook, diagonal Gaussian with a state-independent
learnable log-std clamped to [ln 1e-3, 0]).

Checkpoint record format (little-endian, byte-exact):

    offset  content
    0       11 ASCII bytes  magic "RISMAESTRO1"
    11      uint32          D = number of affine layers
    15      (D+1) x uint32  layer widths n_0 .. n_D
    ...     per layer i=1..D: W_i as n_i*n_{i-1} float64 row-major
                              (out x in), then b_i as n_i float64
    ...     uint32          S = log-std length (0 when absent)
    ...     S x float64     log-std vector
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"RISMAESTRO1"
LOG_STD_MIN = float(np.log(1e-3))
LOG_STD_MAX = 0.0


def orthogonal(shape: tuple[int, int], gain: float,
               rng: np.random.Generator) -> np.ndarray:
    """Semi-orthogonal matrix scaled by `gain` (QR of a Gaussian draw)."""
    rows, cols = shape
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))  # fix the sign ambiguity for determinism
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


@dataclass
class DenseNet:
    """Fully connected net; weights[i] has shape (sizes[i+1], sizes[i])."""

    sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    out_activation: str = "linear"  # "linear" | "softmax"

    def params(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.weights, self.biases):
            out.extend([W, b])
        return out


def init_dense(sizes: list[int], out_activation: str, rng: np.random.Generator,
               orthogonal_init: bool = True, out_gain: float = 0.01) -> DenseNet:
    """Orthogonal init: gain sqrt(2) on hidden layers, `out_gain` on the
    output layer, zero biases."""
    weights, biases = [], []
    for i in range(len(sizes) - 1):
        shape = (sizes[i + 1], sizes[i])
        gain = out_gain if i == len(sizes) - 2 else np.sqrt(2.0)
        if orthogonal_init:
            W = orthogonal(shape, gain, rng)
        else:
            W = gain * rng.standard_normal(shape) / np.sqrt(sizes[i])
        weights.append(W)
        biases.append(np.zeros(sizes[i + 1]))
    return DenseNet(sizes=list(sizes), weights=weights, biases=biases,
                    out_activation=out_activation)


@dataclass
class ForwardCache:
    net_id: int
    activations: list[np.ndarray]  # [input, hidden..., output]
    squeezed: bool


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(net: DenseNet, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Affine + tanh per hidden layer, then the tagged output activation."""
    x = np.asarray(x, dtype=float)
    squeezed = x.ndim == 1
    a = x[None, :] if squeezed else x
    if a.shape[1] != net.sizes[0]:
        raise ValueError(f"input width {a.shape[1]} != net input {net.sizes[0]}")
    acts = [a]
    n_layers = len(net.weights)
    for i, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ W.T + b
        if i < n_layers - 1:
            a = np.tanh(z)
        elif net.out_activation == "softmax":
            a = _softmax(z)
        else:
            a = z
        acts.append(a)
    cache = ForwardCache(net_id=id(net), activations=acts, squeezed=squeezed)
    return (a[0] if squeezed else a), cache


def backward(net: DenseNet, cache: ForwardCache,
             dout: np.ndarray) -> list[np.ndarray]:
    """Parameter gradients [dW1, db1, ...] for dLoss/d(output) = dout."""
    if cache.net_id != id(net):
        raise ValueError("forward cache does not belong to this net")
    dout = np.asarray(dout, dtype=float)
    if cache.squeezed:
        dout = dout[None, :]
    acts = cache.activations
    n_layers = len(net.weights)

    if net.out_activation == "softmax":
        p = acts[-1]
        dz = p * (dout - np.sum(dout * p, axis=-1, keepdims=True))
    else:
        dz = dout

    grads: list[np.ndarray] = [None] * (2 * n_layers)
    for i in range(n_layers - 1, -1, -1):
        a_prev = acts[i]
        grads[2 * i] = dz.T @ a_prev
        grads[2 * i + 1] = dz.sum(axis=0)
        if i > 0:
            da = dz @ net.weights[i]
            dz = da * (1.0 - acts[i] ** 2)  # tanh'
    return grads


@dataclass
class AdamState:
    """Per-parameter first/second moments with bias correction."""

    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list[np.ndarray], lr: float = 3e-4) -> "AdamState":
        return cls(lr=lr,
                   m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])


def adam_step(adam: AdamState, params: list[np.ndarray],
              grads: list[np.ndarray]) -> list[np.ndarray]:
    """In-place Adam update; returns the updated parameter list."""
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient at parameter {i}")
    adam.step += 1
    b1t = 1.0 - adam.beta1 ** adam.step
    b2t = 1.0 - adam.beta2 ** adam.step
    for p, g, m, v in zip(params, grads, adam.m, adam.v):
        m *= adam.beta1
        m += (1.0 - adam.beta1) * g
        v *= adam.beta2
        v += (1.0 - adam.beta2) * g ** 2
        p -= adam.lr * (m / b1t) / (np.sqrt(v / b2t) + adam.eps)
    return params


def categorical_logprob_sample(probs: np.ndarray, rng: np.random.Generator
                               ) -> tuple[int, float, float]:
    """Sample an index; return (index, log-probability, entropy)."""
    probs = np.asarray(probs, dtype=float)
    if abs(probs.sum() - 1.0) > 1e-9 or np.any(probs < 0):
        raise ValueError("probabilities must be nonnegative and sum to 1")
    idx = int(rng.choice(len(probs), p=probs / probs.sum()))
    logp = float(np.log(max(probs[idx], 1e-300)))
    ent = categorical_entropy(probs)
    return idx, logp, ent


def categorical_entropy(probs: np.ndarray) -> float:
    p = np.asarray(probs, dtype=float)
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))


def gaussian_logprob_sample(mean: np.ndarray, log_std: np.ndarray,
                            rng: np.random.Generator
                            ) -> tuple[np.ndarray, float, float]:
    """Diagonal Gaussian sample with exact log-density and entropy."""
    mean = np.asarray(mean, dtype=float)
    log_std = np.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)
    std = np.exp(log_std)
    action = mean + std * rng.standard_normal(mean.shape)
    return action, gaussian_logprob(action, mean, log_std), gaussian_entropy(log_std)


def gaussian_logprob(action: np.ndarray, mean: np.ndarray,
                     log_std: np.ndarray) -> float:
    std = np.exp(log_std)
    z = (action - mean) / std
    return float(-0.5 * np.sum(z ** 2) - np.sum(log_std)
                 - 0.5 * len(mean) * np.log(2.0 * np.pi))


def gaussian_entropy(log_std: np.ndarray) -> float:
    d = len(log_std)
    return float(np.sum(log_std) + 0.5 * d * (1.0 + np.log(2.0 * np.pi)))


# --- checkpoint records -----------------------------------------------------

def write_net(f, net: DenseNet, log_std: np.ndarray | None = None) -> None:
    f.write(MAGIC)
    f.write(struct.pack("<I", len(net.weights)))
    for n in net.sizes:
        f.write(struct.pack("<I", n))
    for W, b in zip(net.weights, net.biases):
        f.write(np.ascontiguousarray(W, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
    if log_std is None:
        f.write(struct.pack("<I", 0))
    else:
        f.write(struct.pack("<I", len(log_std)))
        f.write(np.ascontiguousarray(log_std, dtype="<f8").tobytes())


def read_net(f, out_activation: str = "linear"
             ) -> tuple[DenseNet, np.ndarray | None]:
    magic = f.read(len(MAGIC))
    if magic != MAGIC:
        raise ValueError(f"bad checkpoint magic {magic!r}")
    (n_layers,) = struct.unpack("<I", f.read(4))
    sizes = [struct.unpack("<I", f.read(4))[0] for _ in range(n_layers + 1)]
    weights, biases = [], []
    for i in range(n_layers):
        n_out, n_in = sizes[i + 1], sizes[i]
        W = np.frombuffer(f.read(8 * n_out * n_in), dtype="<f8").reshape(n_out, n_in)
        b = np.frombuffer(f.read(8 * n_out), dtype="<f8")
        weights.append(W.copy())
        biases.append(b.copy())
    (s_len,) = struct.unpack("<I", f.read(4))
    log_std = None
    if s_len:
        log_std = np.frombuffer(f.read(8 * s_len), dtype="<f8").copy()
    net = DenseNet(sizes=sizes, weights=weights, biases=biases,
                   out_activation=out_activation)
    return net, log_std
