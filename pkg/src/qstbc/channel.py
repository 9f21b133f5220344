"""Block-fading Rayleigh channel with AWGN.

Codewords are vectorized column-wise, ``x = vec(X)`` with ``X`` of shape
``(M, T)``, so the channel acts as ``y = (I_T kron H) x + n``.  SNR is
``1 / sigma2`` (unit transmit power per slot, unit-variance fading).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelRealization",
    "NoiseModel",
    "complex_normal",
    "sample_channel",
    "sample_channels",
    "transmit",
    "transmit_dense",
    "transmit_batch",
    "snr_db_to_sigma2",
]

POWER_TOL = 1e-9


def complex_normal(rng: np.random.Generator, shape, scale: float = 1.0) -> np.ndarray:
    """Circular ``CN(0, scale**2)`` samples; real part drawn first, then imaginary."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (scale / np.sqrt(2.0)) * (re + 1j * im)


def snr_db_to_sigma2(snr_db: float) -> float:
    return float(10.0 ** (-np.asarray(snr_db, dtype=float) / 10.0))


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Single-tap ``N x M`` fading matrix, static over one coherence interval."""

    H: np.ndarray

    @property
    def N(self) -> int:
        return self.H.shape[0]

    @property
    def M(self) -> int:
        return self.H.shape[1]

    def lifted(self, T: int) -> np.ndarray:
        """Dense ``I_T kron H``."""
        return np.kron(np.eye(T), self.H)


@dataclass(frozen=True)
class NoiseModel:
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError(f"noise variance must be positive, got {self.sigma2!r}")

    @classmethod
    def from_snr_db(cls, snr_db: float) -> NoiseModel:
        return cls(snr_db_to_sigma2(snr_db))

    @property
    def snr_db(self) -> float:
        return float(10.0 * np.log10(1.0 / self.sigma2))


def sample_channel(M: int, N: int, rng: np.random.Generator) -> ChannelRealization:
    """i.i.d. ``CN(0, 1)`` entries."""
    return ChannelRealization(complex_normal(rng, (N, M)))


def sample_channels(rng: np.random.Generator, n: int, M: int, N: int) -> np.ndarray:
    """``n`` independent channels, shape ``(n, N, M)``."""
    return complex_normal(rng, (n, N, M))


def _check_power(x: np.ndarray, T: int) -> None:
    p = float(np.vdot(x, x).real)
    if abs(p - T) > POWER_TOL * max(1.0, T):
        raise ValueError(f"codeword energy {p!r} != T={T}")


def transmit(x, H, sigma2: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """Received ``NT``-vector for codeword ``x`` over channel ``H``.

    Applies ``H`` slot by slot, which equals the dense Kronecker form.
    ``sigma2 == 0`` gives the noiseless output; ``rng`` is then unused.
    """
    H = H.H if isinstance(H, ChannelRealization) else np.asarray(H)
    x = np.asarray(x, dtype=complex)
    N, M = H.shape
    if x.ndim != 1 or x.size % M:
        raise ValueError(f"codeword length {x.size} is not a multiple of M={M}")
    T = x.size // M
    _check_power(x, T)
    X = x.reshape(T, M).T
    y = (H @ X).T.reshape(-1)
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    if sigma2 > 0:
        if rng is None:
            raise ValueError("an rng is required when sigma2 > 0")
        y = y + complex_normal(rng, y.shape, np.sqrt(sigma2))
    return y


def transmit_dense(x, H, sigma2: float = 0.0, rng: np.random.Generator | None = None) -> np.ndarray:
    """Reference path through the explicit ``I_T kron H`` matrix."""
    H = H.H if isinstance(H, ChannelRealization) else np.asarray(H)
    x = np.asarray(x, dtype=complex)
    T = x.size // H.shape[1]
    _check_power(x, T)
    y = np.kron(np.eye(T), H) @ x
    if sigma2 > 0:
        y = y + complex_normal(rng, y.shape, np.sqrt(sigma2))
    return y


def transmit_batch(X: np.ndarray, H: np.ndarray, noise: np.ndarray, sigma: float) -> np.ndarray:
    """``Y = H X + sigma * noise`` over a batch of matrix-form codewords.

    ``X`` is ``(n, M, T)``, ``H`` is ``(n, N, M)`` and ``noise`` is standard
    ``CN(0, 1)`` of shape ``(n, N, T)``.
    """
    return H @ X + sigma * noise
