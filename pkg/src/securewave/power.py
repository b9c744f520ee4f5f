"""Bisection search for per-subcarrier power under an eavesdropper SER floor.

Each subcarrier's Eve SINR depends only on its own power, so the search walks
the most exposed subcarrier (lowest Eve SER) down in power until its SER sits
just above the target, then moves on to the next one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .waveform import PowerConvention, row_budget, ser_qpsk, ser_scalar, sinr_terms


@dataclass(frozen=True)
class BisectionConfig:
    epsilon_e: float
    power_max: float  # P_S, watts
    delta: float = 1e-3
    max_iterations: int = 200
    power_convention: PowerConvention = "energy"

    def __post_init__(self):
        if not 0 < self.delta < self.epsilon_e <= 0.5:
            raise ValueError(
                f"need 0 < delta < epsilon_e <= 0.5, got delta={self.delta}, epsilon_e={self.epsilon_e}"
            )
        if self.power_max <= 0:
            raise ValueError("power_max must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class Allocation:
    """Output of :func:`allocate`.

    ``converged`` is False when some bisection hit ``max_iterations`` before
    reaching the SER band; ``p`` then holds the best constraint-satisfying
    power found for that subcarrier.
    """

    p: np.ndarray
    converged: bool
    iterations: int
    bisected: tuple[int, ...]

    @property
    def degenerate(self) -> bool:
        return bool(np.all(self.p == 0))


def eve_sinr(k: int, p_k: float, ch_eve: ChannelRealization, M) -> float:
    """Eve's SINR on subcarrier k at power p_k."""
    M = np.asarray(M)
    g2 = abs(ch_eve.freq_gains[k]) ** 2
    row = np.abs(M[k]) ** 2
    signal = g2 * row[k]
    interference = g2 * (row.sum() - row[k])
    return float(p_k * signal / (p_k * interference + ch_eve.noise_power))


def max_powers(M, cfg: BisectionConfig) -> np.ndarray:
    """Upper power bound P_S / budget_k; rows with zero budget get 0."""
    budget = row_budget(M, cfg.power_convention)
    out = np.zeros(budget.shape)
    np.divide(cfg.power_max, budget, out=out, where=budget > 0)
    return out


def eve_ser_vector(p, ch_eve: ChannelRealization, M) -> np.ndarray:
    signal, interference = sinr_terms(ch_eve.freq_gains, M)
    p = np.asarray(p, dtype=float)
    return ser_qpsk(p * signal / (p * interference + ch_eve.noise_power))


def check_constraint(p, ch_eve: ChannelRealization, M, cfg: BisectionConfig) -> tuple[bool, int]:
    """Is min_k SER_k^e >= epsilon_e - delta?  Also returns argmin_k SER_k^e."""
    ser = eve_ser_vector(p, ch_eve, M)
    idx = int(np.argmin(ser))
    return bool(ser[idx] >= cfg.epsilon_e - cfg.delta), idx


def _bisect(signal: float, interference: float, noise: float, p_hi: float, cfg: BisectionConfig):
    """Search (0, p_hi] for a power whose Eve SER lies in (eps, eps + delta).

    Returns (power, converged, iterations).
    """
    eps, tol = cfg.epsilon_e, cfg.delta

    def ser(p):
        return ser_scalar(p * signal / (p * interference + noise))

    lo = 1e-12 * p_hi
    hi = p_hi
    best = None  # last midpoint strictly above the target, as in the textbook update
    fallback = None  # largest midpoint still inside the relaxed band
    for it in range(1, cfg.max_iterations + 1):
        mid = 0.5 * (lo + hi)
        s = ser(mid)
        if s > eps:
            lo = mid
            best = mid
            if abs(s - eps) < tol:
                return best, True, it
        else:
            hi = mid
        if s >= eps - tol and (fallback is None or mid > fallback):
            fallback = mid
    if best is not None:
        return best, False, cfg.max_iterations
    if fallback is not None:
        return fallback, False, cfg.max_iterations
    return (lo if ser(lo) >= eps - tol else 0.0), False, cfg.max_iterations


def allocate(
    ch_bob: ChannelRealization,
    ch_eve: ChannelRealization,
    M,
    cfg: BisectionConfig,
) -> Allocation:
    """Largest per-subcarrier powers meeting min_k SER_k^e >= epsilon_e.

    ``ch_bob`` is accepted for interface symmetry; the search only looks at
    the wiretap link.
    """
    M = np.asarray(M, dtype=np.complex128)
    n = ch_eve.n
    if M.shape != (n, n) or ch_bob.n != n:
        raise ValueError(f"dimension mismatch: M {M.shape}, N_bob={ch_bob.n}, N_eve={n}")
    p = max_powers(M, cfg)
    signal, interference = sinr_terms(ch_eve.freq_gains, M)
    noise = ch_eve.noise_power
    eps, tol = cfg.epsilon_e, cfg.delta

    ser = ser_qpsk(p * signal / (p * interference + noise))
    done = np.zeros(n, dtype=bool)
    done[p == 0] = True
    converged = True
    total_iter = 0
    order = []
    while True:
        candidates = np.where(done, np.inf, ser)
        idx = int(np.argmin(candidates))
        if done[idx] or candidates[idx] >= eps - tol:
            break
        p_new, ok, it = _bisect(float(signal[idx]), float(interference[idx]), noise, float(p[idx]), cfg)
        p[idx] = p_new
        ser[idx] = ser_scalar(p_new * signal[idx] / (p_new * interference[idx] + noise))
        done[idx] = True
        converged &= ok
        total_iter += it
        order.append(idx)
    return Allocation(p=p, converged=converged, iterations=total_iter, bisected=tuple(order))

