"""Algebraic invariant suite for a code configuration."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np

from .channel import complex_normal, transmit
from .codec import encode, recover_branches
from .config import CodeConfig
from .gpauli import expand_channel, nonsquare_basis, reconstruct_channel
from .stab import StabilizerCode, build_code


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)

    def to_dict(self) -> dict:
        return dict(asdict(self), passed=self.passed)

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<34} {self.value:.3e}  (tol {self.tol:.0e})"


def _maxabs(A) -> float:
    return float(np.max(np.abs(A))) if np.size(A) else 0.0


def run_checks(config: CodeConfig, code: StabilizerCode | None = None, seed: int = 0,
               n_random: int = 20) -> list[Check]:
    """Evaluate every invariant; each :class:`Check` carries its max deviation.

    Exhaustive checks (bijectivity, absence of scaled identities) report 0
    on success and 1 on failure with tolerance 0.
    """
    code = code if code is not None else build_code(config)
    rng = np.random.default_rng(seed)
    M, T, d = config.M, config.T, config.d
    MT = M * T
    I = np.eye(MT)
    S1, S2, C = code.S1, code.S2, code.C
    P, E, R = code.projectors, code.errors, code.recoveries
    checks = [Check("generator commutation", _maxabs(S1 @ S2 - S2 @ S1), 1e-14)]

    S1M = np.linalg.matrix_power(S1, M)
    S2M = np.linalg.matrix_power(S2, M)
    checks.append(Check("generator order M", max(_maxabs(S1M - I), _maxabs(S2M - I)), 1e-12))

    scaled_identity = 0
    for k, m in itertools.product(range(M), repeat=2):
        if (k, m) == (0, 0):
            continue
        G = np.linalg.matrix_power(S1, k) @ np.linalg.matrix_power(S2, m)
        if _maxabs(G - G[0, 0] * I) < 1e-9:
            scaled_identity = 1
    checks.append(Check("no phase-shifted identity", scaled_identity, 0))

    checks.append(Check("code matrix orthonormal", _maxabs(C.conj().T @ C - np.eye(d)), 1e-12))
    checks.append(Check("codespace stabilized", max(_maxabs(S1 @ C - C), _maxabs(S2 @ C - C)), 1e-12))

    PH = np.conj(np.swapaxes(P, 1, 2))
    checks.append(Check("projector idempotent", _maxabs(P @ P - P), 1e-10))
    checks.append(Check("projector self-adjoint", _maxabs(P - PH), 1e-10))
    cross = max(
        (_maxabs(P[i] @ P[j]) for i, j in itertools.permutations(range(M * M), 2)),
        default=0.0,
    )
    checks.append(Check("projectors mutually orthogonal", cross, 1e-10))
    checks.append(Check("projectors complete", _maxabs(P.sum(0) - I), 1e-10))

    n_distinct = len(set(code.syndrome_table.values()))
    checks.append(Check("syndrome bijectivity", int(n_distinct != M * M), 0))
    w = np.exp(2j * np.pi / M)
    eig_dev = 0.0
    for (a, b, k1, k2), Ez in zip(code.syndromes, E):
        img = Ez @ C
        eig_dev = max(eig_dev, _maxabs(S1 @ img - w**k1 * img), _maxabs(S2 @ img - w**k2 * img))
    checks.append(Check("syndrome eigenvalues", eig_dev, 1e-10))

    EC = E @ C
    checks.append(Check("recovery round trip", _maxabs(R @ EC - C), 1e-10))
    ann = max(
        (_maxabs(R[i] @ EC[j]) for i, j in itertools.permutations(range(M * M), 2)),
        default=0.0,
    )
    checks.append(Check("cross-syndrome annihilation", ann, 1e-10))
    U = np.concatenate(list(EC), axis=1)
    checks.append(Check("error subspaces orthogonal+spanning", _maxabs(U.conj().T @ U - I), 1e-10))

    basis = nonsquare_basis(M, config.N)
    checks.append(Check("error basis trace-orthogonal", _maxabs(basis.gram - M * np.eye(len(basis))), 1e-12))
    BB = np.einsum("kji,kjl->kil", basis.elements.conj(), basis.elements)
    checks.append(Check("error basis semi-unitary", _maxabs(BB - np.eye(M)), 1e-12))
    H = complex_normal(rng, (n_random, config.N, M))
    rt = _maxabs(reconstruct_channel(expand_channel(H, basis), basis) - H)
    checks.append(Check("channel expansion round trip", rt, 1e-12))

    dev = 0.0
    for Hk in H:
        s = complex_normal(rng, d)
        s /= np.linalg.norm(s)
        y = transmit(encode(s, code).x, Hk, 0.0)
        p = recover_branches(y, code)
        c = expand_channel(Hk, basis)
        dev = max(dev, _maxabs(p - np.sqrt(T) * c[:, None] * s[None, :]))
    checks.append(Check("branch recovery sqrt(T) c_z s", dev, 1e-10))
    return checks
