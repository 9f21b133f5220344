"""Clock/shift (generalized Pauli) operators and the channel error bases.

All matrices are dense ``complex128`` arrays.  Basis elements are stored in a
fixed canonical order that the stabilizer and decoder code rely on:

* square basis of ``C^{N x N}``: index ``a * N + b`` for ``X^a Z^b``
  (a-major, b-minor);
* non-square basis of ``C^{N x M}``: index ``l * M**2 + a * M + b`` for the
  element carrying ``X^a Z^b`` in receive block ``l``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "MAX_DIM",
    "PauliElement",
    "root_of_unity",
    "ErrorBasis",
    "shift_matrix",
    "clock_matrix",
    "pauli_element",
    "square_basis",
    "nonsquare_basis",
    "expand_channel",
    "reconstruct_channel",
    "lift_error",
]

# Soft cap; simulation never needs more.
MAX_DIM = 16


def _check_dim(d: int) -> int:
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d!r}")
    if d > MAX_DIM:
        raise ValueError(f"dimension {d} exceeds MAX_DIM={MAX_DIM}")
    return int(d)


def root_of_unity(d: int) -> complex:
    """``exp(2j*pi/d)``."""
    return np.exp(2j * np.pi / d)


def shift_matrix(d: int) -> np.ndarray:
    """Cyclic shift ``X_d`` with ``X_d e_i = e_{(i+1) mod d}``."""
    d = _check_dim(d)
    X = np.zeros((d, d), dtype=complex)
    X[(np.arange(d) + 1) % d, np.arange(d)] = 1.0
    return X


def clock_matrix(d: int) -> np.ndarray:
    """Clock ``Z_d = diag(1, w, ..., w^{d-1})`` with ``w = exp(2j*pi/d)``."""
    d = _check_dim(d)
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def pauli_element(d: int, a: int, b: int) -> np.ndarray:
    """Return ``X_d^a Z_d^b``.

    Powers are validated, not reduced modulo ``d``.
    """
    d = _check_dim(d)
    for name, p in (("a", a), ("b", b)):
        if int(p) != p or not 0 <= p < d:
            raise ValueError(f"power {name}={p!r} outside [0, {d})")
    a, b = int(a), int(b)
    # X^a Z^b e_i = w^{b i} e_{i+a}; build it directly instead of matrix powers
    i = np.arange(d)
    out = np.zeros((d, d), dtype=complex)
    out[(i + a) % d, i] = np.exp(2j * np.pi * b * i / d)
    return out


@dataclass(frozen=True)
class PauliElement:
    """Word ``X^a Z^b`` over ``C^dim``."""

    dim: int
    a: int
    b: int

    def __post_init__(self):
        _check_dim(self.dim)
        if not (0 <= self.a < self.dim and 0 <= self.b < self.dim):
            raise ValueError(f"powers ({self.a}, {self.b}) outside [0, {self.dim})")

    @property
    def matrix(self) -> np.ndarray:
        return pauli_element(self.dim, self.a, self.b)


@dataclass(frozen=True, eq=False)
class ErrorBasis:
    """Trace-orthogonal basis of ``N x M`` channel matrices.

    Attributes
    ----------
    kind : {"square", "non-square"}
    M, N : int
        Transmit / receive antenna counts.
    elements : ndarray, shape (n_elements, N, M)
        Basis matrices in canonical order.
    labels : tuple of (a, b, l)
        Pauli powers and receive block for each element; ``l == 0`` for the
        square kind.
    """

    kind: str
    M: int
    N: int
    elements: np.ndarray
    labels: tuple

    def __post_init__(self):
        self.elements.setflags(write=False)

    def __len__(self) -> int:
        return self.elements.shape[0]

    def __getitem__(self, i: int) -> np.ndarray:
        return self.elements[i]

    @property
    def norm2(self) -> int:
        """``Tr(B^* B)`` shared by every element (``M`` in both kinds)."""
        return self.M

    @cached_property
    def gram(self) -> np.ndarray:
        """Gram matrix ``Tr(B_i^* B_j)`` of the elements."""
        flat = self.elements.reshape(len(self), -1)
        return flat.conj() @ flat.T

    def index(self, a: int, b: int, l: int = 0) -> int:
        return l * self.M**2 + a * self.M + b


def square_basis(N: int) -> ErrorBasis:
    """The ``N**2`` unitaries ``X^a Z^b`` in a-major, b-minor order."""
    N = _check_dim(N)
    labels = tuple((a, b, 0) for a in range(N) for b in range(N))
    elems = np.stack([pauli_element(N, a, b) for a, b, _ in labels])
    return ErrorBasis("square", N, N, elems, labels)


def nonsquare_basis(M: int, N: int) -> ErrorBasis:
    """Block basis of ``C^{N x M}`` for ``M | N``.

    Element ``(a, b, l)`` is zero except for ``X_M^a Z_M^b`` in block row
    ``l`` of ``N // M`` stacked ``M x M`` blocks.  For ``N == M`` this is the
    square basis.
    """
    M = _check_dim(M)
    if int(N) != N or N < M or N % M:
        raise ValueError(f"non-square basis needs M | N with N >= M, got M={M}, N={N}")
    N = int(N)
    ell = N // M
    labels = tuple((a, b, l) for l in range(ell) for a in range(M) for b in range(M))
    elems = np.zeros((len(labels), N, M), dtype=complex)
    for k, (a, b, l) in enumerate(labels):
        elems[k, l * M:(l + 1) * M, :] = pauli_element(M, a, b)
    kind = "square" if ell == 1 else "non-square"
    return ErrorBasis(kind, M, N, elems, labels)


def expand_channel(H: np.ndarray, basis: ErrorBasis) -> np.ndarray:
    """Coefficients ``c_i = Tr(B_i^* H) / M`` with ``H == sum_i c_i B_i``.

    ``H`` may carry leading batch axes, ``(..., N, M)``.  The divisor is the
    common element norm ``Tr(B_i^* B_i) = M``, which equals ``N`` for square
    bases.
    """
    H = np.asarray(H)
    if H.shape[-2:] != (basis.N, basis.M):
        raise ValueError(f"channel shape {H.shape[-2:]} does not match basis ({basis.N}, {basis.M})")
    return np.einsum("kij,...ij->...k", basis.elements.conj(), H) / basis.norm2


def reconstruct_channel(coeffs: np.ndarray, basis: ErrorBasis) -> np.ndarray:
    """Inverse of :func:`expand_channel`."""
    return np.einsum("...k,kij->...ij", np.asarray(coeffs), basis.elements)


def lift_error(B: np.ndarray, T: int) -> np.ndarray:
    """Block-diagonal lift ``I_T kron B`` acting on a vectorized codeword."""
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T!r}")
    return np.kron(np.eye(int(T)), np.asarray(B))
