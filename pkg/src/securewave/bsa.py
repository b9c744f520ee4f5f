"""Alternating optimisation of coding matrix and power allocation.

Each epoch runs the network forward, solves the power bisection for the
resulting matrix, then takes one Adam step on the Bob-rate loss with those
powers held fixed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import cmlp
from .channel import ChannelRealization
from .power import Allocation, BisectionConfig, allocate
from .waveform import LinkMetrics, PowerConvention, evaluate_link


@dataclass(frozen=True)
class TrainConfig:
    power_max: float
    epsilon_e: float
    delta: float = 1e-3
    max_iterations: int = 200
    power_convention: PowerConvention = "energy"
    epochs: int = 500
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    leaky_slope: float = 0.01
    hidden_dims: tuple[int, ...] = cmlp.DEFAULT_HIDDEN
    early_stop: bool = True
    stop_window: int = 20
    stop_rtol: float = 1e-4

    @property
    def bisection(self) -> BisectionConfig:
        return BisectionConfig(
            epsilon_e=self.epsilon_e,
            power_max=self.power_max,
            delta=self.delta,
            max_iterations=self.max_iterations,
            power_convention=self.power_convention,
        )


@dataclass(frozen=True)
class TrainRecord:
    epoch: int
    loss: float
    sum_secrecy_rate: float
    min_eve_ser: float
    constraint_satisfied: bool
    allocation_converged: bool


class TrainResult(NamedTuple):
    params: cmlp.NetParams
    allocation: Allocation
    trace: list[TrainRecord]


class InferenceResult(NamedTuple):
    M: np.ndarray
    allocation: Allocation
    metrics: LinkMetrics


def _thresholds(p: np.ndarray, power_max: float) -> np.ndarray:
    out = np.full(p.shape, power_max, dtype=float)
    np.divide(power_max, p, out=out, where=p > 0)
    return out


def _plateaued(losses: list[float], window: int, rtol: float) -> bool:
    if len(losses) < 2 * window:
        return False
    prev = np.mean(losses[-2 * window : -window])
    cur = np.mean(losses[-window:])
    return abs(cur - prev) <= rtol * max(abs(prev), 1e-300)


def train(
    ch_bob: ChannelRealization,
    ch_eve: ChannelRealization,
    cfg: TrainConfig,
    epochs: int | None = None,
    seed=0,
    params: cmlp.NetParams | None = None,
) -> TrainResult:
    """Fit a coding network to one (H, G) pair.

    ``seed`` may be an int or a ``numpy.random.SeedSequence``; it only drives the
    weight initialisation, so identical inputs give identical traces.
    """
    epochs = cfg.epochs if epochs is None else epochs
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if ch_bob.n != ch_eve.n:
        raise ValueError("Bob and Eve channels have different subcarrier counts")
    n = ch_bob.n
    if params is None:
        params = cmlp.init_params(n, np.random.default_rng(seed), cfg.hidden_dims, cfg.leaky_slope)
    arrays = params.arrays()
    adam = cmlp.AdamState(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps)
    bis = cfg.bisection

    p_prev = np.ones(n)
    trace: list[TrainRecord] = []
    losses: list[float] = []
    alloc = None
    for epoch in range(epochs):
        cache = cmlp.ForwardCache()
        M = cmlp.forward(params, ch_bob.freq_gains, ch_eve.freq_gains, _thresholds(p_prev, cfg.power_max), cache)
        alloc = allocate(ch_bob, ch_eve, M, bis)
        value, grads = cmlp.backward(params, cache, alloc.p, ch_bob)
        metrics = evaluate_link(ch_bob, ch_eve, M, alloc.p)
        trace.append(
            TrainRecord(
                epoch=epoch,
                loss=value,
                sum_secrecy_rate=metrics.sum_secrecy_rate,
                min_eve_ser=metrics.min_eve_ser,
                constraint_satisfied=metrics.min_eve_ser >= cfg.epsilon_e - cfg.delta,
                allocation_converged=alloc.converged,
            )
        )
        cmlp.adam_step(adam, arrays, [a for g in grads for a in g.arrays()])
        p_prev = alloc.p
        losses.append(value)
        if cfg.early_stop and _plateaued(losses, cfg.stop_window, cfg.stop_rtol):
            break
    return TrainResult(params, alloc, trace)


def infer(
    params: cmlp.NetParams,
    ch_bob: ChannelRealization,
    ch_eve: ChannelRealization,
    cfg: TrainConfig,
) -> InferenceResult:
    """One-shot coding matrix, power allocation and link metrics."""
    if ch_bob.n != params.n or ch_eve.n != params.n:
        raise ValueError(f"network built for N={params.n}, channels have N={ch_bob.n}/{ch_eve.n}")
    M = cmlp.forward(params, ch_bob.freq_gains, ch_eve.freq_gains, np.full(params.n, cfg.power_max))
    M = cmlp.apply_mask(M, cfg.power_max)
    alloc = allocate(ch_bob, ch_eve, M, cfg.bisection)
    return InferenceResult(M, alloc, evaluate_link(ch_bob, ch_eve, M, alloc.p))
