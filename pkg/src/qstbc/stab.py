"""Stabilizer code on the ``M x M`` core, lifted to coherence time ``T``.

Codewords live in ``C^{MT}`` indexed as ``t * M + m`` (slot ``t``, transmit
antenna ``m``), which factors as ``C^d (x) C^M (x) C^M`` with ``t = i*M + j``.
The generators are

    S1 = I_d (x) X_M (x) X_M,    S2 = I_d (x) Z_M (x) Z_M^{-1}

and a channel error ``I_T (x) R(a, b)`` acts on the last factor only.  An
error ``X^a Z^b`` moves the codespace to the joint eigenspace with
eigenvalues ``(w^{-b}, w^{-a})`` of ``(S1, S2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .config import CodeConfig
from .gpauli import clock_matrix, pauli_element, shift_matrix

__all__ = [
    "StabilizerCode",
    "build_generators",
    "build_code_matrix",
    "joint_eigenspace",
    "syndrome_exponents",
    "syndrome_of",
    "build_projector",
    "recovery_operator",
    "lifted_error",
    "build_code",
]


class CodeConstructionError(RuntimeError):
    pass


def build_generators(config: CodeConfig) -> tuple[np.ndarray, np.ndarray]:
    """The two commuting ``MT x MT`` generators."""
    M, d = config.M, config.d
    X, Z = shift_matrix(M), clock_matrix(M)
    Id = np.eye(d)
    S1 = np.kron(Id, np.kron(X, X))
    S2 = np.kron(Id, np.kron(Z, Z.conj()))
    return S1, S2


def _bell_vector(M: int) -> np.ndarray:
    phi = np.zeros(M * M, dtype=complex)
    phi[np.arange(M) * (M + 1)] = 1.0 / np.sqrt(M)
    return phi


def build_code_matrix(config: CodeConfig) -> np.ndarray:
    """Orthonormal basis ``e_i (x) Phi_M`` of the joint +1 eigenspace.

    ``Phi_M = sum_j e_j (x) e_j / sqrt(M)``.  Raises
    :class:`CodeConstructionError` if a numerical eigenspace computation
    disagrees with the analytic basis.
    """
    C = np.kron(np.eye(config.d), _bell_vector(config.M)[:, None])
    S1, S2 = build_generators(config)
    V = joint_eigenspace(S1, S2)
    if V.shape[1] != config.d:
        raise CodeConstructionError(
            f"joint +1 eigenspace has dimension {V.shape[1]}, expected d={config.d}"
        )
    if np.abs(V @ V.conj().T - C @ C.conj().T).max() > 1e-10:
        raise CodeConstructionError("analytic code matrix does not span the joint +1 eigenspace")
    return C


def joint_eigenspace(S1, S2, eig1=1.0, eig2=1.0, tol=1e-9) -> np.ndarray:
    """Orthonormal basis of ``{v : S1 v = eig1 v, S2 v = eig2 v}`` via SVD."""
    n = S1.shape[0]
    A = np.vstack([S1 - eig1 * np.eye(n), S2 - eig2 * np.eye(n)])
    _, sv, Vh = np.linalg.svd(A)
    null = np.concatenate([sv, np.zeros(n - sv.size)]) < tol
    return Vh[null].conj().T


def syndrome_exponents(a: int, b: int, M: int) -> tuple[int, int]:
    """``(k1, k2)`` such that error ``X^a Z^b`` has syndrome ``(w^k1, w^k2)``."""
    if not (0 <= a < M and 0 <= b < M):
        raise ValueError(f"(a, b) = ({a}, {b}) outside [0, {M})^2")
    return (-b) % M, (-a) % M


def syndrome_of(a: int, b: int, config: CodeConfig) -> tuple[complex, complex]:
    """Eigenvalues of ``(S1, S2)`` on the image of the codespace under ``X^a Z^b``."""
    M = config.M
    k1, k2 = syndrome_exponents(a, b, M)
    w = np.exp(2j * np.pi * np.array([k1, k2]) / M)
    return complex(w[0]), complex(w[1])


def _cyclic_average(S: np.ndarray, z: complex, M: int) -> np.ndarray:
    # (1/M) sum_k (z^{-1} S)^k : projector onto the z-eigenspace of S (S^M = I)
    U = S / z
    acc = np.eye(S.shape[0], dtype=complex)
    term = acc
    for _ in range(M - 1):
        term = term @ U
        acc = acc + term
    return acc / M


def build_projector(z: tuple[complex, complex], config: CodeConfig, generators=None) -> np.ndarray:
    """Orthogonal projector onto the joint ``z``-eigenspace of ``(S1, S2)``.

    Each factor averages a generator over its cyclic group; for ``M == 2``
    the factors reduce to ``(I + z_k S_k) / 2``.
    """
    S1, S2 = generators if generators is not None else build_generators(config)
    return _cyclic_average(S1, z[0], config.M) @ _cyclic_average(S2, z[1], config.M)


def lifted_error(a: int, b: int, config: CodeConfig) -> np.ndarray:
    """``I_T (x) X^a Z^b`` on the ``MT``-dimensional codeword space."""
    return np.kron(np.eye(config.T), pauli_element(config.M, a, b))


def recovery_operator(a: int, b: int, config: CodeConfig, generators=None) -> np.ndarray:
    """``R_z = E_z^* P_z`` for the syndrome of error ``(a, b)``."""
    P = build_projector(syndrome_of(a, b, config), config, generators)
    return lifted_error(a, b, config).conj().T @ P


@dataclass(frozen=True, eq=False)
class StabilizerCode:
    """Immutable bundle of every matrix the codec needs for one config.

    Per-syndrome arrays are indexed in the canonical ``a * M + b`` order.

    Attributes
    ----------
    S1, S2 : ndarray (MT, MT)
    C : ndarray (MT, d)
        Code matrix; columns span the codespace.
    syndromes : tuple of (a, b, k1, k2)
        Error powers and syndrome exponents, ``z = (w^k1, w^k2)``.
    projectors, errors, recoveries : ndarray (M*M, MT, MT)
        ``P_z``, ``E_z`` and ``R_z = E_z^* P_z``.
    """

    config: CodeConfig
    S1: np.ndarray
    S2: np.ndarray
    C: np.ndarray
    syndromes: tuple
    projectors: np.ndarray
    errors: np.ndarray
    recoveries: np.ndarray
    syndrome_table: dict = field(repr=False)

    @property
    def M(self) -> int:
        return self.config.M

    @property
    def omega(self) -> complex:
        return np.exp(2j * np.pi / self.config.M)

    def syndrome(self, a: int, b: int) -> tuple[complex, complex]:
        k1, k2 = self.syndrome_table[(a, b)]
        w = self.omega
        return w**k1, w**k2

    def error_of(self, z_exponents: tuple[int, int]) -> tuple[int, int]:
        """Inverse syndrome lookup: exponents ``(k1, k2)`` to error ``(a, b)``."""
        for (a, b), k in self.syndrome_table.items():
            if k == tuple(z_exponents):
                return a, b
        raise KeyError(z_exponents)

    @cached_property
    def decode_rows(self) -> np.ndarray:
        """``C^* R_z`` stacked, shape ``(M*M, d, MT)``."""
        return np.einsum("ji,zjk->zik", self.C.conj(), self.recoveries)


def build_code(config: CodeConfig) -> StabilizerCode:
    """Construct and self-check the stabilizer code for ``config``."""
    M = config.M
    gens = build_generators(config)
    C = build_code_matrix(config)
    table = {}
    syndromes = []
    P, E, R = [], [], []
    for a in range(M):
        for b in range(M):
            k = syndrome_exponents(a, b, M)
            table[(a, b)] = k
            syndromes.append((a, b) + k)
            Pz = build_projector(syndrome_of(a, b, config), config, gens)
            Ez = lifted_error(a, b, config)
            P.append(Pz)
            E.append(Ez)
            R.append(Ez.conj().T @ Pz)
    if len(set(table.values())) != M * M:
        raise CodeConstructionError("syndrome map is not injective")
    E = np.stack(E)
    # lock the algebraic convention against the actual eigenvalues
    for (a, b, k1, k2), Ez in zip(syndromes, E):
        img = Ez @ C
        w1, w2 = np.exp(2j * np.pi * np.array([k1, k2]) / M)
        if max(np.abs(gens[0] @ img - w1 * img).max(), np.abs(gens[1] @ img - w2 * img).max()) > 1e-10:
            raise CodeConstructionError(f"syndrome of error ({a},{b}) disagrees with generator eigenvalues")
    arrays = dict(S1=gens[0], S2=gens[1], C=C, projectors=np.stack(P), errors=E, recoveries=np.stack(R))
    for arr in arrays.values():
        arr.setflags(write=False)
    return StabilizerCode(config=config, syndromes=tuple(syndromes), syndrome_table=table, **arrays)
