"""Encoder and structured ML decoder.

Two decode paths are provided.  The reference path follows the operator
algebra literally (``q_z = R_z y``, ``p_z = C^* q_z``) on single received
vectors.  The batch path used by the simulator exploits
``C^* R_z = (E_z C)^*``: with ``Y_i`` the ``i``-th ``M x M`` time block of a
receive block,

    p_z[i] = Tr(R(a, b)^* Y_i) / sqrt(M),

which costs ``O(M^2)`` per branch entry instead of ``O(MT)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .config import CodeConfig
from .gpauli import pauli_element
from .stab import StabilizerCode

__all__ = [
    "EncodedFrame",
    "encode",
    "codeword_matrices",
    "deinterleave",
    "interleave",
    "recover_branches_square",
    "recover_branches_nonsquare",
    "recover_branches",
    "branch_gram",
    "ml_decode",
    "end_to_end",
    "batch_branches",
    "batch_metrics",
    "batch_decode",
]

UNIT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EncodedFrame:
    s: np.ndarray
    x: np.ndarray

    def matrix(self, M: int) -> np.ndarray:
        """Codeword as the ``M x T`` antenna-by-slot matrix."""
        return self.x.reshape(-1, M).T


def encode(s, code: StabilizerCode) -> EncodedFrame:
    """``x = sqrt(T) C s`` for a unit symbol ``s`` in ``C^d``."""
    s = np.asarray(s, dtype=complex)
    cfg = code.config
    if s.shape != (cfg.d,):
        raise ValueError(f"symbol must have shape ({cfg.d},), got {s.shape}")
    if abs(np.linalg.norm(s) - 1.0) > UNIT_TOL:
        raise ValueError(f"symbol norm {np.linalg.norm(s)!r} is not 1")
    return EncodedFrame(s, np.sqrt(cfg.T) * (code.C @ s))


def codeword_matrices(code: StabilizerCode, codebook: Codebook) -> np.ndarray:
    """All ``K`` codewords in ``(K, M, T)`` matrix form."""
    cfg = code.config
    return np.stack([encode(s, code).matrix(cfg.M) for s in codebook.vectors])


def deinterleave(y: np.ndarray, config: CodeConfig) -> np.ndarray:
    """Split an ``NT`` received vector into ``N/M`` block streams of length ``MT``.

    Stream ``l`` collects receive antennas ``l*M .. l*M + M - 1`` in every
    slot, ordered like a square-configuration received vector.
    """
    M, N, T = config.M, config.N, config.T
    y = np.asarray(y)
    if y.shape[-1] != N * T:
        raise ValueError(f"received vector length {y.shape[-1]} != N*T = {N * T}")
    Y = y.reshape(*y.shape[:-1], T, config.ell, M)
    return np.moveaxis(Y, -2, -3).reshape(*y.shape[:-1], config.ell, M * T)


def interleave(streams: np.ndarray, config: CodeConfig) -> np.ndarray:
    """Inverse of :func:`deinterleave`."""
    M, T = config.M, config.T
    streams = np.asarray(streams)
    lead = streams.shape[:-2]
    S = streams.reshape(*lead, config.ell, T, M)
    return np.moveaxis(S, -3, -2).reshape(*lead, config.N * T)


def _square_branches(y: np.ndarray, code: StabilizerCode) -> np.ndarray:
    q = np.einsum("zjk,k->zj", code.recoveries, y)
    return q @ code.C.conj()


def recover_branches_square(y, code: StabilizerCode) -> np.ndarray:
    """``p_z = C^* R_z y`` for every syndrome; shape ``(M*M, d)``."""
    cfg = code.config
    if not cfg.square:
        raise ValueError(f"square recovery needs M == N, got config {cfg}")
    y = np.asarray(y, dtype=complex)
    if y.shape != (cfg.N * cfg.T,):
        raise ValueError(f"received vector must have shape ({cfg.N * cfg.T},), got {y.shape}")
    return _square_branches(y, code)


def recover_branches_nonsquare(y, code: StabilizerCode, N: int | None = None) -> np.ndarray:
    """Per-receive-block recovery; ``(M*N, d)`` branches, block-major."""
    cfg = code.config
    if N is not None and N != cfg.N:
        raise ValueError(f"code was built for N={cfg.N}, got N={N}")
    streams = deinterleave(np.asarray(y, dtype=complex), cfg)
    return np.concatenate([_square_branches(s, code) for s in streams])


def recover_branches(y, code: StabilizerCode) -> np.ndarray:
    if code.config.square:
        return recover_branches_square(y, code)
    return recover_branches_nonsquare(y, code)


def branch_gram(branches: np.ndarray) -> np.ndarray:
    """``G = sum_n p_n p_n^*`` (Hermitian PSD, ``d x d``)."""
    P = np.asarray(branches)
    return P.T @ P.conj()


def ml_decode(branches, codebook: Codebook) -> tuple[int, str]:
    """Codebook index maximizing ``s^* G s``; ties go to the lowest index."""
    P = np.atleast_2d(np.asarray(branches, dtype=complex))
    if P.shape[0] == 0:
        raise ValueError("no branches to decode")
    if P.shape[1] != codebook.d:
        raise ValueError(f"branch dimension {P.shape[1]} != codebook dimension {codebook.d}")
    metric = np.sum(np.abs(codebook.vectors.conj() @ P.T) ** 2, axis=1)
    k = int(np.argmax(metric))
    return k, codebook.labels[k]


def end_to_end(index: int, code: StabilizerCode, codebook: Codebook, H, sigma2: float,
               rng: np.random.Generator | None = None) -> int:
    """Encode codebook entry ``index``, send it through ``H``, decode."""
    from .channel import transmit

    frame = encode(codebook.vectors[index], code)
    y = transmit(frame.x, H, sigma2, rng)
    return ml_decode(recover_branches(y, code), codebook)[0]


# --- batch path ---------------------------------------------------------------

def _pauli_stack(M: int) -> np.ndarray:
    return np.stack([pauli_element(M, a, b) for a in range(M) for b in range(M)])


def batch_branches(Y: np.ndarray, config: CodeConfig) -> np.ndarray:
    """Branches for a batch of received matrices.

    ``Y`` has shape ``(n, N, T)``; the result is ``(n, M*N, d)`` in the same
    block-major, a-major, b-minor order as :func:`recover_branches`.
    """
    M, d, ell = config.M, config.d, config.ell
    n = Y.shape[0]
    Yb = Y.reshape(n, ell, M, d, M)
    R = _pauli_stack(M).conj()
    p = np.einsum("zmj,nlmij->nlzi", R, Yb, optimize=True) / np.sqrt(M)
    return p.reshape(n, ell * M * M, d)


def batch_metrics(branches: np.ndarray, codebook: Codebook) -> np.ndarray:
    """``s_k^* G s_k`` for every trial and codeword, shape ``(n, K)``."""
    A = np.einsum("kd,nbd->nkb", codebook.vectors.conj(), branches, optimize=True)
    return np.einsum("nkb,nkb->nk", A.real, A.real) + np.einsum("nkb,nkb->nk", A.imag, A.imag)


def batch_decode(Y: np.ndarray, config: CodeConfig, codebook: Codebook) -> np.ndarray:
    return np.argmax(batch_metrics(batch_branches(Y, config), codebook), axis=1)
