"""Symbol codebooks: unit vectors (lines) in ``C^d`` with bit labels.

File format (UTF-8)::

    qstbc-codebook v1 d=<d> K=<K>
    # comments and blank lines are ignored
    re_0 im_0 re_1 im_1 ...      (K rows of 2*d floats)

Floats are written with ``repr`` so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import math
import re
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "Codebook",
    "CodebookError",
    "PackingWarning",
    "chordal_distance",
    "min_chordal_distance",
    "simplex_bound",
    "load",
    "save",
    "generate_packing",
    "builtin",
    "rate",
    "label_bits",
]

HEADER_RE = re.compile(r"^qstbc-codebook\s+v1\s+d=(\d+)\s+K=(\d+)\s*$")
UNIT_TOL = 1e-9
DUPLICATE_TOL = 1e-9
CONVERGENCE_TOL = 1e-3


class CodebookError(ValueError):
    pass


class PackingWarning(UserWarning):
    pass


def chordal_distance(s: np.ndarray, t: np.ndarray) -> float:
    """``sqrt(1 - |s^* t|^2)`` for unit vectors; invariant to global phase."""
    ip = abs(np.vdot(s, t))
    return math.sqrt(max(0.0, 1.0 - ip * ip))


def _max_coherence2(V: np.ndarray) -> float:
    G = np.abs(V.conj() @ V.T) ** 2
    np.fill_diagonal(G, 0.0)
    return float(G.max())


def min_chordal_distance(V: np.ndarray) -> float:
    """Smallest pairwise chordal distance among the rows of ``V``."""
    V = np.asarray(V)
    if V.shape[0] < 2:
        return 1.0
    return math.sqrt(max(0.0, 1.0 - _max_coherence2(V)))


def simplex_bound(d: int, K: int) -> float:
    """Upper bound on the min chordal distance of ``K`` lines in ``C^d``.

    ``sqrt(K (d - 1) / (d (K - 1)))``, the simplex bound for
    one-dimensional subspaces (equivalently the Welch bound on coherence),
    capped at 1 since ``K <= d`` orthogonal lines already reach it.
    """
    return min(1.0, math.sqrt(K * (d - 1) / (d * (K - 1))))


def _is_pow2(K: int) -> bool:
    return K >= 1 and K & (K - 1) == 0


@dataclass(frozen=True, eq=False)
class Codebook:
    """``K`` unit vectors in ``C^d`` with index-order bit labels.

    ``converged`` is ``False`` only for packings whose optimizer did not
    settle; loaded and hand-built codebooks leave it ``None``.
    """

    vectors: np.ndarray
    labels: tuple = ()
    converged: bool | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        V = np.array(self.vectors, dtype=complex, copy=True)
        if V.ndim != 2 or V.shape[0] < 2 or V.shape[1] < 2:
            raise CodebookError(f"need K >= 2 vectors of dimension >= 2, got shape {V.shape}")
        K = V.shape[0]
        if not _is_pow2(K):
            raise CodebookError(f"K={K} is not a power of two; bit labeling needs K = 2^m")
        norms = np.linalg.norm(V, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_TOL)
        if bad.size:
            raise CodebookError(f"vector {bad[0]} has norm {norms[bad[0]]!r}, not unit")
        # only touch vectors that are off by more than rounding, so saved
        # files reload bit-exactly
        fix = np.abs(norms - 1.0) > 4 * np.finfo(float).eps
        V[fix] /= norms[fix, None]
        if min_chordal_distance(V) < DUPLICATE_TOL:
            raise CodebookError("codebook contains repeated lines (chordal distance ~ 0)")
        V.setflags(write=False)
        object.__setattr__(self, "vectors", V)
        if not self.labels:
            object.__setattr__(self, "labels", _index_labels(K))
        elif len(self.labels) != K:
            raise CodebookError(f"{len(self.labels)} labels for {K} vectors")

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    @property
    def K(self) -> int:
        return self.vectors.shape[0]

    @property
    def bits_per_symbol(self) -> int:
        return self.K.bit_length() - 1

    @property
    def min_chordal_distance(self) -> float:
        return min_chordal_distance(self.vectors)

    @property
    def bit_table(self) -> np.ndarray:
        """``(K, bits_per_symbol)`` array of label bits, MSB first."""
        return np.array([[int(c) for c in lab] for lab in self.labels], dtype=np.int8).reshape(
            self.K, self.bits_per_symbol
        )

    def __len__(self) -> int:
        return self.K


def _index_labels(K: int) -> tuple:
    m = K.bit_length() - 1
    return tuple(format(k, f"0{m}b") for k in range(K))


def label_bits(codebook: Codebook) -> Codebook:
    """Relabel with natural index-order binary labels (``00, 01, 10, 11, ...``)."""
    return Codebook(codebook.vectors, _index_labels(codebook.K), codebook.converged, dict(codebook.meta))


def rate(codebook: Codebook, T: int) -> float:
    """Bits per channel use, ``log2(K) / T``."""
    return codebook.bits_per_symbol / T


def save(codebook: Codebook, path) -> None:
    lines = [f"qstbc-codebook v1 d={codebook.d} K={codebook.K}"]
    for v in codebook.vectors:
        lines.append(" ".join(f"{float(x.real)!r} {float(x.imag)!r}" for x in v))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load(path) -> Codebook:
    """Parse and validate a codebook file."""
    text = Path(path).read_text(encoding="utf-8")
    rows, header = [], None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            m = HEADER_RE.match(line)
            if not m:
                raise CodebookError(f"{path}:{lineno}: expected 'qstbc-codebook v1 d=<d> K=<K>' header")
            header = int(m.group(1)), int(m.group(2))
            continue
        try:
            vals = [float(tok) for tok in line.split()]
        except ValueError as exc:
            raise CodebookError(f"{path}:{lineno}: {exc}") from None
        if len(vals) != 2 * header[0]:
            raise CodebookError(f"{path}:{lineno}: expected {2 * header[0]} floats, got {len(vals)}")
        rows.append(np.array(vals[0::2]) + 1j * np.array(vals[1::2]))
    if header is None:
        raise CodebookError(f"{path}: empty codebook file")
    if len(rows) != header[1]:
        raise CodebookError(f"{path}: header says K={header[1]} but found {len(rows)} vectors")
    return Codebook(np.array(rows))


def builtin(d: int, K: int) -> Codebook:
    """Packaged packing for ``(d, K)``; raises ``KeyError`` if none ships."""
    ref = resources.files("qstbc") / "data" / f"packing_d{d}_K{K}.txt"
    if not ref.is_file():
        raise KeyError(f"no built-in packing for d={d}, K={K}")
    with resources.as_file(ref) as p:
        return load(p)


def builtin_names() -> list[str]:
    return sorted(p.name for p in (resources.files("qstbc") / "data").iterdir() if p.name.startswith("packing_"))


# --- packing optimizer -------------------------------------------------------

def _optimize_start(V: np.ndarray, iterations: int, beta0: float, beta1: float, step0: float):
    """Projected gradient descent on a log-sum-exp of squared coherences.

    Returns the best (lowest max coherence) iterate and the history of the
    running best, one entry per iteration.
    """
    K = V.shape[0]
    offdiag = ~np.eye(K, dtype=bool)
    best_V, best = V.copy(), _max_coherence2(V)
    history = np.empty(iterations)
    betas = np.geomspace(beta0, beta1, iterations)
    steps = np.geomspace(step0, step0 * 1e-2, iterations)
    for it in range(iterations):
        G = V.conj() @ V.T
        g = np.where(offdiag, np.abs(G) ** 2, 0.0)
        W = np.where(offdiag, np.exp(betas[it] * (g - g.max())), 0.0)
        W /= W.sum()
        grad = (W * G.conj()) @ V
        # tangent component only; the radial part is removed by renormalizing
        grad -= np.sum(grad * V.conj(), axis=1, keepdims=True).real * V
        gn = np.linalg.norm(grad)
        if gn > 0:
            V = V - steps[it] * grad / gn
        V /= np.linalg.norm(V, axis=1, keepdims=True)
        c = _max_coherence2(V)
        if c < best:
            best, best_V = c, V.copy()
        history[it] = best
    return best_V, best, history


def generate_packing(d: int, K: int, seed: int = 0, iterations: int = 1000, starts: int = 32,
                     workers: int = 1) -> Codebook:
    """Locally optimal max-min chordal-distance packing of ``K`` lines in ``C^d``.

    Each of ``starts`` random initializations is refined by a smoothed
    max-min descent with increasing inverse temperature.  The best start wins
    (ties go to the lowest start index), so output depends only on
    ``(d, K, seed, iterations, starts)``, not on ``workers``.

    If the winning run's min chordal distance still grew by more than
    ``CONVERGENCE_TOL`` during its last tenth of iterations, a
    :class:`PackingWarning` is issued and the returned codebook has
    ``converged=False``.
    """
    if d < 2 or K < 2:
        raise CodebookError(f"need d >= 2 and K >= 2, got d={d}, K={K}")
    if not _is_pow2(K):
        raise CodebookError(f"K={K} is not a power of two")
    if iterations < 10:
        raise ValueError("iterations must be >= 10")
    seeds = np.random.SeedSequence(seed).spawn(starts)

    def run(ss):
        rng = np.random.default_rng(ss)
        V = rng.standard_normal((K, d)) + 1j * rng.standard_normal((K, d))
        V /= np.linalg.norm(V, axis=1, keepdims=True)
        return _optimize_start(V, iterations, beta0=10.0, beta1=2000.0, step0=0.2)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, seeds))
    else:
        results = [run(ss) for ss in seeds]
    best_idx = min(range(starts), key=lambda i: (results[i][1], i))
    V, coh, hist = results[best_idx]
    tail = hist[-max(1, iterations // 10)]
    gain = math.sqrt(1.0 - coh) - math.sqrt(max(0.0, 1.0 - tail))
    converged = bool(gain <= CONVERGENCE_TOL)
    if not converged:
        warnings.warn(
            f"packing d={d} K={K} still improving at the final iterations "
            f"(min distance grew by {gain:.3g}); returning best found",
            PackingWarning,
            stacklevel=2,
        )
    V = _canonical_phase(V)
    meta = dict(seed=seed, iterations=iterations, starts=starts, best_start=best_idx)
    return Codebook(V, converged=converged, meta=meta)


def _canonical_phase(V: np.ndarray) -> np.ndarray:
    # rotate each line so its largest-magnitude entry is real positive
    idx = np.argmax(np.abs(V), axis=1)
    ph = V[np.arange(V.shape[0]), idx]
    return V * (np.abs(ph) / ph)[:, None]
