"""Satellite-to-ground channel draws for the legitimate and wiretap links.

Large-scale power gain is ``ref_gain * C_L * b * beta`` (free-space loss, beam
pattern, rain term); small-scale fading is an L-tap Rician impulse response whose
DFT gives the diagonal frequency-domain channel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import special

from .sigproc import as_complex_vector

BEAM_3DB_ROOT = 2.07123
SPEED_OF_LIGHT = 299_792_458.0

BeamGainMode = Literal["literature", "paper_literal"]


class ChannelConfigError(ValueError):
    pass


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class LinkGeometry:
    wavelength: float  # m
    horizontal_distance: float  # m
    altitude: float  # m
    elevation_offset: float  # rad, angle between beam centre and user
    beamwidth_3db: float  # rad
    max_gain: float  # linear

    def __post_init__(self):
        if self.wavelength <= 0 or self.altitude <= 0:
            raise ChannelConfigError("wavelength and altitude must be positive")
        if self.horizontal_distance < 0 or self.elevation_offset < 0:
            raise ChannelConfigError("distance and elevation offset must be non-negative")
        if not 0 < self.beamwidth_3db < np.pi / 2:
            raise ChannelConfigError("3 dB beamwidth must lie in (0, pi/2)")
        if self.max_gain <= 0:
            raise ChannelConfigError("max_gain must be positive")


@dataclass(frozen=True)
class FadingParams:
    rain_mu: float = -3.125
    rain_sigma: float = 1.591
    rician_k_db: float = 10.0
    num_taps: int = 4

    def __post_init__(self):
        if self.rain_sigma < 0:
            raise ChannelConfigError("rain_sigma must be >= 0")
        if self.num_taps < 1:
            raise ChannelConfigError("num_taps must be >= 1")
        if np.isnan(self.rician_k_db) or self.rician_k_db == -np.inf:
            raise ChannelConfigError("rician_k_db must be a number (+inf allowed for pure LoS)")


@dataclass(frozen=True)
class ChannelRealization:
    """One channel draw: time-domain taps and the matching subcarrier gains.

    ``freq_gains[k]`` is the k-th diagonal entry of the frequency-domain channel
    matrix, i.e. sqrt(N) * dft(zero-padded taps) under the unitary DFT.
    """

    taps: np.ndarray
    freq_gains: np.ndarray
    noise_power: float

    def __post_init__(self):
        taps = as_complex_vector(self.taps, "taps")
        gains = as_complex_vector(self.freq_gains, "freq_gains")
        if taps.size > gains.size:
            raise ChannelConfigError(f"{taps.size} taps exceed {gains.size} subcarriers")
        if not self.noise_power > 0:
            raise ChannelConfigError("noise_power must be positive")
        expected = np.fft.fft(taps, n=gains.size)
        scale = max(np.max(np.abs(expected)), np.finfo(float).tiny)
        if np.max(np.abs(expected - gains)) > 1e-9 * scale:
            raise ChannelConfigError("freq_gains do not diagonalise the tap convolution")
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "freq_gains", gains)
        object.__setattr__(self, "noise_power", float(self.noise_power))

    @property
    def n(self) -> int:
        return self.freq_gains.size

    @classmethod
    def from_taps(cls, taps, n: int, noise_power: float) -> "ChannelRealization":
        taps = as_complex_vector(taps, "taps")
        if n < taps.size:
            raise ChannelConfigError(f"N={n} is smaller than the tap count L={taps.size}")
        return cls(taps, np.fft.fft(taps, n=n), noise_power)

    @classmethod
    def from_gains(cls, freq_gains, noise_power: float) -> "ChannelRealization":
        """Build the N-tap channel whose DFT is exactly ``freq_gains``."""
        gains = as_complex_vector(freq_gains, "freq_gains")
        return cls(np.fft.ifft(gains), gains, noise_power)


def path_loss(geom: LinkGeometry) -> float:
    """Free-space gain (lambda / 4 pi)^2 / (d^2 + l^2)."""
    return (geom.wavelength / (4 * np.pi)) ** 2 / (
        geom.horizontal_distance**2 + geom.altitude**2
    )


def _beam_pattern(u: np.ndarray, mode: BeamGainMode) -> np.ndarray:
    small = u == 0
    us = np.where(small, 1.0, u)
    first = np.where(small, 0.25, special.jv(1, us) / (2 * us))
    if mode == "literature":
        second = np.where(small, 0.75, 36 * special.jv(3, us) / us**3)
        return (first + second) ** 2
    if mode == "paper_literal":
        second = np.where(small, 0.0, 36 * special.jv(3, us) / us**2)
        return (first - second) ** 2
    raise ChannelConfigError(f"unknown beam gain mode {mode!r}")


def beam_gain(geom: LinkGeometry, mode: BeamGainMode = "literature") -> float:
    """Bessel beam pattern gain at the user's off-boresight angle.

    The default form uses +36 J3(u)/u^3, which peaks at G_0 on boresight and is
    about G_0/2 at the 3 dB angle. ``paper_literal`` keeps the -36 J3(u)/u^2 form.
    """
    u = BEAM_3DB_ROOT * np.sin(geom.elevation_offset) / np.sin(geom.beamwidth_3db)
    return float(geom.max_gain * _beam_pattern(np.asarray(abs(u), dtype=float), mode))


def sample_rain_fade(params: FadingParams, rng: np.random.Generator) -> float:
    """Log-normal rain term: ln(beta_dB) ~ N(mu, sigma^2), beta = 10^(beta_dB / 10)."""
    z = params.rain_mu + params.rain_sigma * rng.standard_normal()
    return float(10.0 ** (np.exp(z) / 10.0))


def sample_multipath(params: FadingParams, rng: np.random.Generator) -> np.ndarray:
    """Rician tap vector with unit mean total power.

    Tap 0 is the LoS ray with uniform phase and power K/(K+1); the remaining
    L-1 taps share the scattered power 1/(K+1) equally as CN(0, .) draws.
    """
    theta = rng.uniform(0.0, 2 * np.pi)
    taps = np.zeros(params.num_taps, dtype=np.complex128)
    if params.num_taps == 1:
        taps[0] = np.exp(-1j * theta)
        return taps
    k_lin = float(db_to_linear(params.rician_k_db))
    if np.isinf(k_lin):
        los_power, scatter_power = 1.0, 0.0
    else:
        los_power, scatter_power = k_lin / (k_lin + 1), 1.0 / (k_lin + 1)
    taps[0] = np.sqrt(los_power) * np.exp(-1j * theta)
    per_tap = scatter_power / (params.num_taps - 1)
    scatter = rng.standard_normal((params.num_taps - 1, 2)) @ np.array([1.0, 1j])
    taps[1:] = np.sqrt(per_tap / 2) * scatter
    return taps


def large_scale_gain(
    geom: LinkGeometry,
    beta: float,
    reference_gain_db: float = 0.0,
    beam_mode: BeamGainMode = "literature",
) -> float:
    return float(db_to_linear(reference_gain_db)) * path_loss(geom) * beam_gain(geom, beam_mode) * beta


def realize_channel(
    geom: LinkGeometry,
    fading: FadingParams,
    n: int,
    noise_power: float,
    rng: np.random.Generator,
    reference_gain_db: float = 0.0,
    beam_mode: BeamGainMode = "literature",
) -> ChannelRealization:
    """Draw rain and multipath, scale the taps and diagonalise onto N subcarriers."""
    if n < fading.num_taps:
        raise ChannelConfigError(f"N={n} must be at least the tap count L={fading.num_taps}")
    beta = sample_rain_fade(fading, rng)
    taps = sample_multipath(fading, rng)
    gain = large_scale_gain(geom, beta, reference_gain_db, beam_mode)
    return ChannelRealization.from_taps(np.sqrt(gain) * taps, n, noise_power)
