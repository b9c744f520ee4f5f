"""Complex-valued MLP that turns (H, G) into a secure coding matrix.

Every layer is a pair of real affine maps acting as one complex affine map,
followed by a split LeakyReLU on the hidden layers. The output head emits N^2
complex values reshaped row-major to N x N, then each row is projected onto its
energy budget. Gradients are written out by hand; a real loss L is propagated as
the complex "conjugate gradient" dL/dRe(z) + 1j dL/dIm(z).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelRealization
from .sigproc import DimensionError, as_complex_vector

CHECKPOINT_VERSION = 1
DEFAULT_HIDDEN = (128, 64, 16)
LN2 = np.log(2.0)


@dataclass
class ComplexLinearLayer:
    W_real: np.ndarray
    W_imag: np.ndarray
    b_real: np.ndarray
    b_imag: np.ndarray
    slope: float = 0.01

    def __post_init__(self):
        if self.W_real.shape != self.W_imag.shape:
            raise DimensionError("W_real and W_imag must share a shape")
        if self.b_real.shape != (self.W_real.shape[0],) or self.b_imag.shape != self.b_real.shape:
            raise DimensionError("bias length must equal the layer output dimension")
        if not 0.01 <= self.slope <= 0.1:
            raise ValueError(f"LeakyReLU slope must lie in [0.01, 0.1], got {self.slope}")

    @property
    def in_dim(self) -> int:
        return self.W_real.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W_real.shape[0]

    def arrays(self) -> list[np.ndarray]:
        return [self.W_real, self.W_imag, self.b_real, self.b_imag]

    @classmethod
    def glorot(cls, in_dim: int, out_dim: int, rng: np.random.Generator, slope: float = 0.01):
        std = np.sqrt(1.0 / (in_dim + out_dim))
        return cls(
            W_real=rng.normal(0.0, std, (out_dim, in_dim)),
            W_imag=rng.normal(0.0, std, (out_dim, in_dim)),
            b_real=np.zeros(out_dim),
            b_imag=np.zeros(out_dim),
            slope=slope,
        )


@dataclass
class NetParams:
    layers: list[ComplexLinearLayer]
    n: int

    def __post_init__(self):
        if self.layers[0].in_dim != 2 * self.n:
            raise DimensionError(f"first layer expects {self.layers[0].in_dim} inputs, need 2N={2 * self.n}")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise DimensionError("consecutive layer dimensions do not chain")
        if self.layers[-1].out_dim != self.n * self.n:
            raise DimensionError("output head must emit N^2 values")

    def arrays(self) -> list[np.ndarray]:
        return [a for layer in self.layers for a in layer.arrays()]

    def copy(self) -> "NetParams":
        return NetParams(
            [ComplexLinearLayer(*(a.copy() for a in l.arrays()), slope=l.slope) for l in self.layers],
            self.n,
        )


def init_params(
    n: int,
    rng: np.random.Generator,
    hidden_dims=DEFAULT_HIDDEN,
    slope: float = 0.01,
) -> NetParams:
    dims = [2 * n, *hidden_dims, n * n]
    layers = [ComplexLinearLayer.glorot(a, b, rng, slope) for a, b in zip(dims, dims[1:])]
    return NetParams(layers, n)


def complex_linear_forward(layer: ComplexLinearLayer, x_real, x_imag):
    x_real = np.asarray(x_real, dtype=float)
    x_imag = np.asarray(x_imag, dtype=float)
    if x_real.shape != (layer.in_dim,) or x_imag.shape != (layer.in_dim,):
        raise DimensionError(f"layer expects {layer.in_dim} inputs, got {x_real.shape}/{x_imag.shape}")
    y_real = layer.W_real @ x_real - layer.W_imag @ x_imag + layer.b_real
    y_imag = layer.W_real @ x_imag + layer.W_imag @ x_real + layer.b_imag
    return y_real, y_imag


def leaky_relu(x, slope: float):
    return np.where(x > 0, x, slope * x)


def leaky_relu_grad(x, slope: float):
    return np.where(x > 0, 1.0, slope)


def leaky_relu_complex(y_real, y_imag, slope: float):
    """Split activation: LeakyReLU on the real and imaginary parts separately."""
    if not 0.01 <= slope <= 0.1:
        raise ValueError(f"LeakyReLU slope must lie in [0.01, 0.1], got {slope}")
    return leaky_relu(np.asarray(y_real, float), slope), leaky_relu(np.asarray(y_imag, float), slope)


def project_rows(M_raw, thresholds) -> np.ndarray:
    """Scale every row whose energy exceeds T_k back onto ||M_k||^2 = T_k."""
    M_raw = np.asarray(M_raw, dtype=np.complex128)
    thresholds = np.asarray(thresholds, dtype=float)
    if np.any(thresholds <= 0):
        raise ValueError("projection thresholds must be positive")
    energy = np.sum(np.abs(M_raw) ** 2, axis=1)
    scale = np.ones_like(energy)
    over = energy > thresholds
    scale[over] = np.sqrt(thresholds[over] / energy[over])
    return M_raw * scale[:, None]


def project_rows_backward(M_raw, thresholds, grad_out) -> np.ndarray:
    """Pull a conjugate gradient back through :func:`project_rows`.

    On a scaled row m -> sqrt(T) m / ||m||, and the Jacobian (in real
    coordinates) is sqrt(T)/||m|| (I - m m^T / ||m||^2), which is symmetric.
    Rows at or below the threshold pass the gradient through unchanged.
    """
    M_raw = np.asarray(M_raw, dtype=np.complex128)
    thresholds = np.asarray(thresholds, dtype=float)
    grad_out = np.asarray(grad_out, dtype=np.complex128)
    energy = np.sum(np.abs(M_raw) ** 2, axis=1)
    grad_in = grad_out.copy()
    over = energy > thresholds
    if np.any(over):
        m = M_raw[over]
        g = grad_out[over]
        e = energy[over][:, None]
        radial = np.real(np.sum(np.conj(m) * g, axis=1))[:, None]
        grad_in[over] = np.sqrt(thresholds[over][:, None] / e) * (g - m * radial / e)
    return grad_in


def apply_mask(M, power_max: float) -> np.ndarray:
    """Hard safeguard: divide row k by max(1, ||M_k||^2 / P_S)."""
    if power_max <= 0:
        raise ValueError("power_max must be positive")
    M = np.asarray(M, dtype=np.complex128)
    mask = np.maximum(1.0, np.sum(np.abs(M) ** 2, axis=1) / power_max)
    return M / mask[:, None]


def network_input(H, G) -> np.ndarray:
    """Concatenate the two channel diagonals and scale to unit RMS amplitude."""
    x = np.concatenate([as_complex_vector(H, "H"), as_complex_vector(G, "G")])
    rms = np.sqrt(np.mean(np.abs(x) ** 2))
    return x / rms if rms > 0 else x


@dataclass
class ForwardCache:
    inputs: list[np.ndarray] = field(default_factory=list)  # complex input to each layer
    pre: list[np.ndarray] = field(default_factory=list)  # complex pre-activation of each layer
    M_raw: np.ndarray | None = None
    thresholds: np.ndarray | None = None


def forward(params: NetParams, H, G, thresholds, cache: ForwardCache | None = None) -> np.ndarray:
    """Channel diagonals -> projected N x N coding matrix."""
    x = network_input(H, G)
    if x.size != 2 * params.n:
        raise DimensionError(f"network built for N={params.n}, got channels of length {x.size // 2}")
    thresholds = np.broadcast_to(np.asarray(thresholds, dtype=float), (params.n,))
    last = len(params.layers) - 1
    for i, layer in enumerate(params.layers):
        W = layer.W_real + 1j * layer.W_imag
        y = W @ x + (layer.b_real + 1j * layer.b_imag)
        if cache is not None:
            cache.inputs.append(x)
            cache.pre.append(y)
        if i < last:
            x = leaky_relu(y.real, layer.slope) + 1j * leaky_relu(y.imag, layer.slope)
        else:
            x = y
    M_raw = x.reshape(params.n, params.n)
    if cache is not None:
        cache.M_raw = M_raw
        cache.thresholds = np.array(thresholds)
    return project_rows(M_raw, thresholds)


def loss(M, ch_bob: ChannelRealization, p) -> float:
    """Negative Bob sum rate -sum_k log2(1 + gamma_k^b) at fixed powers p."""
    return loss_and_grad(M, ch_bob, p)[0]


def loss_and_grad(M, ch_bob: ChannelRealization, p) -> tuple[float, np.ndarray]:
    """Loss and its conjugate gradient with respect to the complex entries of M."""
    M = np.asarray(M, dtype=np.complex128)
    p = np.asarray(p, dtype=float)
    energy = np.abs(M) ** 2
    diag = np.diagonal(energy)
    interf = energy.sum(axis=1) - diag
    a = p * np.abs(ch_bob.freq_gains) ** 2
    denom = a * interf + ch_bob.noise_power
    gamma = a * diag / denom
    value = -float(np.sum(np.log1p(gamma)) / LN2)

    dl_dgamma = -1.0 / ((1.0 + gamma) * LN2)
    d_diag = dl_dgamma * a / denom
    d_interf = -dl_dgamma * gamma * a / denom
    # d|z|^2 has conjugate gradient 2 z
    coef = np.repeat(d_interf[:, None], M.shape[1], axis=1)
    np.fill_diagonal(coef, d_diag)
    return value, 2.0 * coef * M


@dataclass
class LayerGrad:
    W_real: np.ndarray
    W_imag: np.ndarray
    b_real: np.ndarray
    b_imag: np.ndarray

    def arrays(self) -> list[np.ndarray]:
        return [self.W_real, self.W_imag, self.b_real, self.b_imag]


def backward(params: NetParams, cache: ForwardCache, p, ch_bob: ChannelRealization) -> tuple[float, list[LayerGrad]]:
    """Gradients of the Bob-rate loss for every layer; p is held constant."""
    M = project_rows(cache.M_raw, cache.thresholds)
    value, g_M = loss_and_grad(M, ch_bob, p)
    g = project_rows_backward(cache.M_raw, cache.thresholds, g_M).reshape(-1)
    grads: list[LayerGrad] = []
    last = len(params.layers) - 1
    for i in range(last, -1, -1):
        layer = params.layers[i]
        y = cache.pre[i]
        if i < last:
            g = g.real * leaky_relu_grad(y.real, layer.slope) + 1j * g.imag * leaky_relu_grad(y.imag, layer.slope)
        outer = np.outer(g, np.conj(cache.inputs[i]))
        grads.append(LayerGrad(outer.real, outer.imag, g.real.copy(), g.imag.copy()))
        if i > 0:
            g = (layer.W_real.T - 1j * layer.W_imag.T) @ g
    grads.reverse()
    return value, grads


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] | None = None
    v: list[np.ndarray] | None = None

    def __post_init__(self):
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam decay rates must lie in [0, 1)")
        if self.lr <= 0 or self.eps <= 0:
            raise ValueError("learning rate and epsilon must be positive")


def adam_step(state: AdamState, params: list[np.ndarray], grads: list[np.ndarray]):
    """In-place Adam update with bias-corrected moments; returns (params, state)."""
    if state.m is None:
        state.m = [np.zeros_like(x) for x in params]
        state.v = [np.zeros_like(x) for x in params]
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for x, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        x -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


def save_params(params: NetParams, path) -> Path:
    """Write a versioned .npz checkpoint (exact float64 round trip)."""
    path = Path(path)
    payload = {
        "format_version": np.array(CHECKPOINT_VERSION),
        "n": np.array(params.n),
        "num_layers": np.array(len(params.layers)),
        "slopes": np.array([l.slope for l in params.layers]),
    }
    for i, layer in enumerate(params.layers):
        for name, arr in zip(("W_real", "W_imag", "b_real", "b_imag"), layer.arrays()):
            payload[f"layer{i}_{name}"] = arr
    with open(path, "wb") as fh:
        np.savez(fh, **payload)
    return path


def load_params(path) -> NetParams:
    with np.load(Path(path)) as data:
        version = int(data["format_version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        slopes = data["slopes"]
        layers = []
        for i in range(int(data["num_layers"])):
            arrs = [data[f"layer{i}_{k}"].astype(float) for k in ("W_real", "W_imag", "b_real", "b_imag")]
            layers.append(ComplexLinearLayer(*arrs, slope=float(slopes[i])))
        return NetParams(layers, int(data["n"]))
