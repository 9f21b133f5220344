"""Monte Carlo BER/SER sweeps over Rayleigh block fading.

One trial is one coherence interval carrying one codeword: a uniformly drawn
codebook index, a fresh ``H`` and fresh noise.  Trials are grouped into
fixed-size blocks; block ``b`` of SNR point ``i`` draws from a Philox stream
keyed by ``(seed, i, b)``, so counts depend only on the spec and any single
trial can be replayed with :func:`trial_draws`.  Worker processes only change
which block is computed where.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from .channel import complex_normal, snr_db_to_sigma2
from .codebook import Codebook
from .codec import batch_decode, codeword_matrices
from .config import CodeConfig
from .stab import build_code

__all__ = [
    "ExperimentSpec",
    "BerPoint",
    "InsufficientErrorsError",
    "wilson_interval",
    "trial_draws",
    "run",
    "estimate_diversity_slope",
    "write_results",
    "read_results",
    "CSV_COLUMNS",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = ("snr_db", "trials", "bits_sent", "bit_errors", "ber", "ci_low", "ci_high", "symbol_errors", "ser")
Z95 = 1.959963984540054


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """Everything that determines a sweep's counts (``workers`` excepted).

    ``stop_after_bit_errors`` enables event-targeted stopping: a point ends
    after the first block at which its cumulative bit errors reach the
    target, or at ``trials`` if that comes first.
    """

    config: CodeConfig
    codebook: Codebook
    snr_db: tuple
    trials: int
    seed: int = 0
    workers: int = 1
    stop_after_bit_errors: int | None = None
    block_size: int = 4096
    codebook_ref: str = ""

    def __post_init__(self):
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        if not self.snr_db:
            raise ValueError("SNR grid is empty")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ValueError(f"SNR grid must be strictly increasing: {self.snr_db}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.codebook.d != self.config.d:
            raise ValueError(f"codebook dimension {self.codebook.d} != code dimension d={self.config.d}")

    @property
    def n_blocks(self) -> int:
        return -(-self.trials // self.block_size)

    def to_dict(self) -> dict:
        cb = self.codebook
        return {
            "config": dict(zip("MNTd", self.config.as_tuple())),
            "codebook": {
                "ref": self.codebook_ref,
                "d": cb.d,
                "K": cb.K,
                "min_chordal_distance": cb.min_chordal_distance,
                "labels": list(cb.labels),
                "vectors": [[[z.real, z.imag] for z in v] for v in cb.vectors],
            },
            "snr_db": list(self.snr_db),
            "trials": self.trials,
            "seed": self.seed,
            "workers": self.workers,
            "stop_after_bit_errors": self.stop_after_bit_errors,
            "block_size": self.block_size,
        }


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for ``k`` successes out of ``n``."""
    if n <= 0:
        return 0.0, 1.0
    p = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    # clamp at the exact endpoints so the interval always contains p
    lo = 0.0 if k == 0 else min(p, centre - half)
    hi = 1.0 if k == n else max(p, centre + half)
    return lo, hi


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    trials: int
    bits_sent: int
    bit_errors: int
    symbol_errors: int
    complete: bool = True

    def __post_init__(self):
        if not 0 <= self.bit_errors <= self.bits_sent:
            raise ValueError(f"bit errors {self.bit_errors} outside [0, {self.bits_sent}]")
        if not 0 <= self.symbol_errors <= self.trials:
            raise ValueError(f"symbol errors {self.symbol_errors} outside [0, {self.trials}]")

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent if self.bits_sent else 0.0

    @property
    def ser(self) -> float:
        return self.symbol_errors / self.trials if self.trials else 0.0

    @property
    def ci95(self) -> tuple[float, float]:
        return wilson_interval(self.bit_errors, self.bits_sent)

    def row(self) -> dict:
        lo, hi = self.ci95
        return dict(snr_db=self.snr_db, trials=self.trials, bits_sent=self.bits_sent,
                    bit_errors=self.bit_errors, ber=self.ber, ci_low=lo, ci_high=hi,
                    symbol_errors=self.symbol_errors, ser=self.ser)


# --- trial generation ---------------------------------------------------------

def block_rng(seed: int, snr_index: int, block_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, snr_index, block_index])))


def _draw_block(rng, n: int, K: int, config: CodeConfig):
    # draw order is part of the reproducibility contract
    idx = rng.integers(0, K, size=n)
    H = complex_normal(rng, (n, config.N, config.M))
    W = complex_normal(rng, (n, config.N, config.T))
    return idx, H, W


def _block_len(spec: ExperimentSpec, block_index: int) -> int:
    return min(spec.block_size, spec.trials - block_index * spec.block_size)


def trial_draws(spec: ExperimentSpec, snr_index: int, trial: int):
    """Symbol index, channel and unit noise used by one trial of ``run``."""
    if not 0 <= trial < spec.trials:
        raise IndexError(trial)
    b, r = divmod(trial, spec.block_size)
    idx, H, W = _draw_block(block_rng(spec.seed, snr_index, b), _block_len(spec, b), spec.codebook.K, spec.config)
    return int(idx[r]), H[r], W[r]


# --- block evaluation ---------------------------------------------------------

# per-process state for pool workers
_STATE: dict = {}


def _make_state(config_tuple, vectors, labels, seed, block_size, trials) -> dict:
    config = CodeConfig(*config_tuple)
    codebook = Codebook(vectors, labels)
    code = build_code(config)
    bits = codebook.bit_table
    hamming = (bits[:, None, :] != bits[None, :, :]).sum(-1)
    return dict(config=config, codebook=codebook, X=codeword_matrices(code, codebook),
                hamming=hamming, seed=seed, block_size=block_size, trials=trials)


def _init_worker(*args) -> None:
    _STATE.update(_make_state(*args))


def _eval_block(task) -> tuple[int, int, int]:
    return _evaluate(_STATE, task)


def _evaluate(st: dict, task) -> tuple[int, int, int]:
    snr_index, block_index, sigma = task
    n = min(st["block_size"], st["trials"] - block_index * st["block_size"])
    rng = block_rng(st["seed"], snr_index, block_index)
    idx, H, W = _draw_block(rng, n, st["codebook"].K, st["config"])
    Y = H @ st["X"][idx] + sigma * W
    dec = batch_decode(Y, st["config"], st["codebook"])
    bit_err = int(st["hamming"][idx, dec].sum())
    sym_err = int(np.count_nonzero(dec != idx))
    return n, bit_err, sym_err


def _state_args(spec: ExperimentSpec):
    cb = spec.codebook
    return (spec.config.as_tuple(), np.asarray(cb.vectors), cb.labels, spec.seed, spec.block_size, spec.trials)


def run(spec: ExperimentSpec) -> list[BerPoint]:
    """Run the sweep; one :class:`BerPoint` per SNR value.

    On ``KeyboardInterrupt`` the points finished so far are returned, the
    last one carrying ``complete=False`` with the blocks it managed.
    """
    bits_per_symbol = spec.codebook.bits_per_symbol
    args = _state_args(spec)
    pool = None
    if spec.workers > 1:
        pool = ProcessPoolExecutor(spec.workers, initializer=_init_worker, initargs=args)
        evaluate = _eval_block
        mapper = pool.map
    else:
        evaluate = partial(_evaluate, _make_state(*args))
        mapper = map
    wave = max(1, 4 * spec.workers)
    points = []
    try:
        for i, snr in enumerate(spec.snr_db):
            sigma = math.sqrt(snr_db_to_sigma2(snr))
            trials = bit_errors = sym_errors = 0
            complete = True
            try:
                b = 0
                stop = False
                while b < spec.n_blocks and not stop:
                    tasks = [(i, j, sigma) for j in range(b, min(b + wave, spec.n_blocks))]
                    for n, be, se in mapper(evaluate, tasks):
                        trials += n
                        bit_errors += be
                        sym_errors += se
                        if spec.stop_after_bit_errors is not None and bit_errors >= spec.stop_after_bit_errors:
                            stop = True
                            break
                    b += len(tasks)
            except KeyboardInterrupt:
                complete = False
            points.append(BerPoint(snr, trials, trials * bits_per_symbol, bit_errors, sym_errors, complete))
            log.info("snr %.2f dB: %d/%d bit errors over %d trials", snr, bit_errors,
                     trials * bits_per_symbol, trials)
            if not complete:
                break
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return points


# --- analysis -------------------------------------------------------------------

class InsufficientErrorsError(ValueError):
    pass


def estimate_diversity_slope(points, min_errors: int = 100, ber_window: tuple | None = None) -> float:
    """High-SNR BER slope in decades per 10 dB (positive for falling curves).

    Uses points with at least ``min_errors`` bit errors and, if given,
    ``ber_window[0] <= BER <= ber_window[1]``; fits
    ``log10(BER) ~ SNR_dB / 10`` by least squares and negates the slope.
    """
    sel = [p for p in points if p.bit_errors >= min_errors]
    if ber_window is not None:
        lo, hi = ber_window
        sel = [p for p in sel if lo <= p.ber <= hi]
    if len(sel) < 2:
        raise InsufficientErrorsError(
            f"need >= 2 points with >= {min_errors} bit errors"
            + (f" and BER in [{ber_window[0]:g}, {ber_window[1]:g}]" if ber_window else "")
            + f"; have {len(sel)} of {len(points)} "
            f"(bit errors per point: {[p.bit_errors for p in points]})"
        )
    x = np.array([p.snr_db / 10.0 for p in sel])
    y = np.log10([p.ber for p in sel])
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


# --- serialization --------------------------------------------------------------

def _version() -> str:
    from . import __version__

    return __version__


def write_results(points, path, format: str = "csv", spec: ExperimentSpec | None = None,
                  runtime_s: float | None = None) -> None:
    """Write points as CSV (``CSV_COLUMNS``) or JSON ``{spec, points, runtime_s, version}``."""
    path = Path(path)
    if format == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for p in points:
                row = p.row()
                w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in CSV_COLUMNS])
    elif format == "json":
        doc = {
            "spec": spec.to_dict() if spec is not None else None,
            "points": [dict(p.row(), complete=p.complete) for p in points],
            "runtime_s": runtime_s,
            "version": _version(),
        }
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown format {format!r}; expected 'csv' or 'json'")


def read_results(path) -> list[BerPoint]:
    """Reload points from a CSV or JSON results file."""
    path = Path(path)
    if path.suffix == ".json":
        rows = json.loads(path.read_text(encoding="utf-8"))["points"]
    else:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    return [
        BerPoint(float(r["snr_db"]), int(r["trials"]), int(r["bits_sent"]), int(r["bit_errors"]),
                 int(r["symbol_errors"]), bool(r.get("complete", True)))
        for r in rows
    ]
