"""Secure-coded OFDM transmission, reception and link metrics.

All SINR expressions use the expectation over i.i.d. unit-power symbols, so the
inter-carrier interference on subcarrier k is p_k |H_k|^2 sum_{n != k} |M_kn|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import special

from .channel import ChannelRealization
from .sigproc import DimensionError, as_complex_matrix, as_complex_vector

PowerConvention = Literal["energy", "coherent"]


def row_budget(M, convention: PowerConvention = "energy") -> np.ndarray:
    """Per-row power measure that multiplies p_k in the transmit-power budget.

    ``energy`` is sum_n |M_kn|^2, the mean transmit power per unit p_k for
    independent unit-power symbols. ``coherent`` is |sum_n M_kn|^2.
    """
    M = np.asarray(M)
    if convention == "energy":
        return np.sum(np.abs(M) ** 2, axis=1)
    if convention == "coherent":
        return np.abs(np.sum(M, axis=1)) ** 2
    raise ValueError(f"unknown power convention {convention!r}")


def _check_square(M, n: int) -> np.ndarray:
    M = as_complex_matrix(M)
    if M.shape != (n, n):
        raise DimensionError(f"coding matrix must be {n}x{n}, got {M.shape}")
    return M


def _check_power(p, n: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (n,):
        raise DimensionError(f"power vector must have length {n}, got shape {p.shape}")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("powers must be finite and non-negative")
    return p


def encode_transmit(S, M, p) -> np.ndarray:
    """Frequency-domain secured symbols X_k = sqrt(p_k) sum_n M_kn S_n."""
    S = as_complex_vector(S, "S")
    M = _check_square(M, S.size)
    p = _check_power(p, S.size)
    return np.sqrt(p) * (M @ S)


def receive(X, ch: ChannelRealization, rng: np.random.Generator) -> np.ndarray:
    """Per-subcarrier reception Y_k = H_k X_k + N_k, N_k ~ CN(0, noise_power)."""
    X = as_complex_vector(X, "X")
    if X.size != ch.n:
        raise DimensionError(f"signal length {X.size} does not match channel N={ch.n}")
    noise = rng.standard_normal((X.size, 2)) @ np.array([1.0, 1j])
    return ch.freq_gains * X + np.sqrt(ch.noise_power / 2) * noise


def sinr_terms(gains, M) -> tuple[np.ndarray, np.ndarray]:
    """(|g_k M_kk|^2, |g_k|^2 sum_{n != k} |M_kn|^2) per subcarrier."""
    gain_pow = np.abs(gains) ** 2
    energy = np.abs(M) ** 2
    diag = np.diagonal(energy)
    return gain_pow * diag, gain_pow * (energy.sum(axis=1) - diag)


def sinr_per_subcarrier(ch: ChannelRealization, M, p) -> np.ndarray:
    M = _check_square(M, ch.n)
    p = _check_power(p, ch.n)
    signal, interference = sinr_terms(ch.freq_gains, M)
    return p * signal / (p * interference + ch.noise_power)


def ser_qpsk(mean_sinr):
    """SER(gamma) = erfc(sqrt(gamma)) / 2; accepts scalars or arrays."""
    g = np.asarray(mean_sinr, dtype=float)
    if np.any(g < 0) or np.any(np.isnan(g)):
        raise ValueError("SINR must be non-negative")
    out = 0.5 * special.erfc(np.sqrt(g))
    return float(out) if out.ndim == 0 else out


def ser_scalar(sinr: float) -> float:
    """Fast scalar version of :func:`ser_qpsk` for inner loops."""
    return 0.5 * math.erfc(math.sqrt(sinr))


def secrecy_rate(sinr_bob, sinr_eve):
    """[log2(1 + gamma_b) - log2(1 + gamma_e)]^+ elementwise."""
    gb = np.asarray(sinr_bob, dtype=float)
    ge = np.asarray(sinr_eve, dtype=float)
    if np.any(gb < 0) or np.any(ge < 0):
        raise ValueError("SINR must be non-negative")
    out = np.maximum(0.0, np.log2(1 + gb) - np.log2(1 + ge))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LinkMetrics:
    sinr_bob: np.ndarray
    sinr_eve: np.ndarray
    ser_bob: float  # SER at the subcarrier-averaged SINR
    ser_eve: float
    ser_eve_per_subcarrier: np.ndarray
    secrecy_rates: np.ndarray
    sum_secrecy_rate: float

    @property
    def min_eve_ser(self) -> float:
        return float(np.min(self.ser_eve_per_subcarrier))

    @property
    def mean_ser_eve_per_subcarrier(self) -> float:
        return float(np.mean(self.ser_eve_per_subcarrier))


def evaluate_link(ch_bob: ChannelRealization, ch_eve: ChannelRealization, M, p) -> LinkMetrics:
    if ch_bob.n != ch_eve.n:
        raise DimensionError("Bob and Eve channels have different subcarrier counts")
    gb = sinr_per_subcarrier(ch_bob, M, p)
    ge = sinr_per_subcarrier(ch_eve, M, p)
    rates = secrecy_rate(gb, ge)
    return LinkMetrics(
        sinr_bob=gb,
        sinr_eve=ge,
        ser_bob=ser_qpsk(gb.mean()),
        ser_eve=ser_qpsk(ge.mean()),
        ser_eve_per_subcarrier=ser_qpsk(ge),
        secrecy_rates=rates,
        sum_secrecy_rate=float(rates.sum()),
    )
