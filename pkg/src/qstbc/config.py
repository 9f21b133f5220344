"""Code configuration ``(M, N, T, d)`` and its validity rules."""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["CodeConfig", "ConfigError"]


class ConfigError(ValueError):
    """An ``(M, N, T, d)`` tuple that no code can be built for.

    ``rule`` names the failed constraint, e.g. ``"N >= M"``.
    """

    def __init__(self, rule: str, message: str):
        super().__init__(message)
        self.rule = rule


@dataclass(frozen=True)
class CodeConfig:
    """Antenna geometry and block length of a code.

    Parameters
    ----------
    M : int
        Transmit antennas, ``M >= 2``.
    N : int
        Receive antennas; a multiple of ``M``.
    T : int
        Coherence time in channel uses; a multiple of ``M``.
    d : int
        Dimension of the encoded symbol, fixed to ``T // M``.

    The stabilizer acts on an ``M x M`` core, so every rule is phrased in
    terms of ``M``.  This admits both the 3x3 and the 3x6 experiments with
    ``T = 9, d = 3``.
    """

    M: int
    N: int
    T: int
    d: int

    def __post_init__(self):
        for name in ("M", "N", "T", "d"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise ConfigError("integers", f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        for rule, message in self.violations():
            raise ConfigError(rule, message)

    def violations(self) -> list[tuple[str, str]]:
        M, N, T, d = self.M, self.N, self.T, self.d
        out = []
        if M < 2:
            out.append(("M >= 2", f"need at least two transmit antennas, got M={M}"))
            return out
        if N < M:
            out.append((
                "N >= M",
                f"N={N} < M={M}: fewer receive than transmit antennas is unsupported; "
                "the lifted error operators have rank at most NT < MT, so no recovery "
                "operator can invert them",
            ))
        elif N % M:
            out.append(("M | N", f"N={N} is not a multiple of M={M}"))
        if d < 2:
            out.append(("d >= 2", f"encoded dimension must be >= 2 for phase insensitivity, got d={d}"))
        if T % M:
            out.append(("M | T", f"T={T} is not a multiple of M={M}"))
        elif T != M * d:
            out.append(("d = T/M", f"d must equal T/M = {T // M}, got d={d}"))
        return out

    @classmethod
    def is_valid(cls, M, N, T, d) -> bool:
        try:
            cls(M, N, T, d)
        except ConfigError:
            return False
        return True

    @property
    def ell(self) -> int:
        """Number of ``M``-antenna receive blocks, ``N // M``."""
        return self.N // self.M

    @property
    def square(self) -> bool:
        return self.M == self.N

    @property
    def n_branches(self) -> int:
        return self.M * self.N

    def diversity_order(self) -> int:
        return self.M * self.N

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.M, self.N, self.T, self.d)

    def __str__(self) -> str:
        return f"({self.M},{self.N},{self.T},{self.d})"
