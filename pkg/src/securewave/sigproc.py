"""Complex vector helpers, unitary DFT, cyclic convolution and QPSK mapping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT_HALF = np.sqrt(0.5)


class DimensionError(ValueError):
    """Raised when operand lengths or shapes do not line up."""


def as_complex_vector(x, name: str = "x") -> np.ndarray:
    """Validate and return a 1-D finite complex array."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_complex_matrix(m, name: str = "M") -> np.ndarray:
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class DiagonalMatrix:
    """Square matrix known to be diagonal; only the diagonal is stored.

    Used for the frequency-domain channel matrices, which are diagonal once the
    cyclic channel convolution is moved to the DFT domain.
    """

    diag: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "diag", as_complex_vector(self.diag, "diag"))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.diag.size, self.diag.size)

    def __getitem__(self, idx):
        i, j = idx
        if i == j:
            return self.diag[i]
        return 0j

    def matvec(self, x) -> np.ndarray:
        x = as_complex_vector(x)
        if x.size != self.diag.size:
            raise DimensionError(f"length {x.size} does not match matrix size {self.diag.size}")
        return self.diag * x

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag)


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix F with F[k, m] = exp(-2j*pi*k*m/n) / sqrt(n)."""
    if n < 1:
        raise DimensionError("DFT size must be >= 1")
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def dft(x) -> np.ndarray:
    """Unitary forward DFT (1/sqrt(N) scaling)."""
    return np.fft.fft(as_complex_vector(x), norm="ortho")


def idft(X) -> np.ndarray:
    """Unitary inverse DFT; ``idft(dft(x)) == x``."""
    return np.fft.ifft(as_complex_vector(X, "X"), norm="ortho")


def cyclic_convolve(a, b) -> np.ndarray:
    """Circular convolution (a (*) b)[n] = sum_m a[m] b[(n - m) mod N].

    Evaluated by direct summation so it stays independent of the DFT path.
    """
    a = as_complex_vector(a, "a")
    b = as_complex_vector(b, "b")
    if a.size != b.size:
        raise DimensionError(f"cyclic_convolve needs equal lengths, got {a.size} and {b.size}")
    n = np.arange(a.size)
    return b[(n[:, None] - n[None, :]) % a.size] @ a


def qpsk_map(bits) -> np.ndarray:
    """Gray-mapped unit-power QPSK: (b0, b1) -> ((1 - 2 b0) + 1j (1 - 2 b1)) / sqrt(2)."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size == 0 or bits.size % 2:
        raise DimensionError(f"QPSK mapping needs an even, non-zero bit count, got {bits.size}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    pairs = bits.reshape(-1, 2)
    return ((1 - 2 * pairs[:, 0]) + 1j * (1 - 2 * pairs[:, 1])) * SQRT_HALF


def qpsk_demap(symbols) -> np.ndarray:
    """Quadrant (ML) decisions back to bits; inverse of :func:`qpsk_map`."""
    y = np.asarray(symbols, dtype=np.complex128).ravel()
    bits = np.empty((y.size, 2), dtype=np.int64)
    bits[:, 0] = y.real < 0
    bits[:, 1] = y.imag < 0
    return bits.ravel()


def qpsk_decide(symbols) -> np.ndarray:
    """Nearest constellation point for each received sample."""
    y = np.asarray(symbols, dtype=np.complex128)
    return (np.where(y.real < 0, -1.0, 1.0) + 1j * np.where(y.imag < 0, -1.0, 1.0)) * SQRT_HALF


def random_qpsk(n: int, rng: np.random.Generator) -> np.ndarray:
    return qpsk_map(rng.integers(0, 2, size=2 * n))
