"""Input validation helpers shared by the estimator and the codec."""

from __future__ import annotations

import numpy as np

from .config import CodeConfig


def check_received(Y, config: CodeConfig) -> np.ndarray:
    """Coerce received blocks to a complex ``(n, N, T)`` array.

    Accepts a single ``(N, T)`` matrix, a batch ``(n, N, T)``, or column-wise
    vectorized blocks ``(n, N*T)`` / ``(N*T,)``.
    """
    Y = np.asarray(Y)
    if not np.issubdtype(Y.dtype, np.number):
        raise TypeError(f"received data must be numeric, got dtype {Y.dtype}")
    Y = Y.astype(complex, copy=False)
    N, T = config.N, config.T
    if Y.shape == (N, T):
        Y = Y[None]
    elif Y.ndim == 1 and Y.size == N * T:
        Y = Y.reshape(1, T, N).transpose(0, 2, 1)
    elif Y.ndim == 2 and Y.shape[1] == N * T:
        Y = Y.reshape(-1, T, N).transpose(0, 2, 1)
    if Y.ndim != 3 or Y.shape[1:] != (N, T):
        raise ValueError(f"expected received blocks of shape (n, {N}, {T}) or (n, {N * T}), got {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise ValueError("received data contains NaN or inf")
    return Y


def check_indices(indices, K: int) -> np.ndarray:
    idx = np.asarray(indices)
    if idx.ndim == 0:
        idx = idx[None]
    if not np.issubdtype(idx.dtype, np.integer):
        raise TypeError("symbol indices must be integers")
    if idx.size and (idx.min() < 0 or idx.max() >= K):
        raise ValueError(f"symbol indices must lie in [0, {K})")
    return idx
