import math

import numpy as np
import pytest
from scipy import stats
from statsmodels.stats.proportion import proportion_confint

from qstbc.codebook import builtin
from qstbc.codec import codeword_matrices, batch_decode
from qstbc.config import CodeConfig
from qstbc.simkit import (
    BerPoint,
    ExperimentSpec,
    InsufficientErrorsError,
    estimate_diversity_slope,
    read_results,
    run,
    trial_draws,
    wilson_interval,
    write_results,
)
from qstbc.stab import build_code


def spec(**kw):
    base = dict(config=CodeConfig(2, 2, 4, 2), codebook=builtin(2, 4), snr_db=(0.0, 4.0, 8.0),
                trials=10000, seed=1)
    base.update(kw)
    return ExperimentSpec(**base)


def test_spec_validation():
    with pytest.raises(ValueError, match="increasing"):
        spec(snr_db=(4.0, 0.0))
    with pytest.raises(ValueError, match="dimension"):
        spec(codebook=builtin(3, 4))
    with pytest.raises(ValueError):
        spec(trials=0)


def test_very_high_snr_error_free():
    (p,) = run(spec(snr_db=(200.0,), trials=5000))
    assert p.bit_errors == 0 and p.symbol_errors == 0 and p.ber == 0.0


def test_counts_and_bits_sent():
    pts = run(spec(trials=9000, block_size=1000))
    assert [p.trials for p in pts] == [9000] * 3
    assert all(p.bits_sent == 2 * p.trials for p in pts)
    assert all(p.symbol_errors <= p.bit_errors <= 2 * p.symbol_errors for p in pts)


def test_monotone_in_snr():
    pts = run(spec(snr_db=(-4.0, 0.0, 4.0, 8.0), trials=20000))
    bers = [p.ber for p in pts]
    assert all(a > b for a, b in zip(bers, bers[1:]))


def test_worker_count_irrelevant():
    a = run(spec(trials=12000, block_size=2000, workers=1))
    b = run(spec(trials=12000, block_size=2000, workers=2))
    assert a == b


def test_seed_changes_counts():
    assert run(spec(seed=1)) != run(spec(seed=2))


def test_trial_replay_matches_run():
    s = spec(snr_db=(2.0,), trials=300, block_size=128)
    code = build_code(s.config)
    X = codeword_matrices(code, s.codebook)
    sigma = math.sqrt(10 ** (-0.2))
    errs = 0
    for t in range(s.trials):
        k, H, W = trial_draws(s, 0, t)
        dec = batch_decode((H @ X[k] + sigma * W)[None], s.config, s.codebook)[0]
        errs += dec != k
    assert errs == run(s)[0].symbol_errors


def test_early_stop_deterministic():
    s1 = spec(snr_db=(0.0,), trials=50000, block_size=1000, stop_after_bit_errors=500)
    s2 = spec(snr_db=(0.0,), trials=50000, block_size=1000, stop_after_bit_errors=500, workers=2)
    a, b = run(s1), run(s2)
    assert a == b
    assert a[0].bit_errors >= 500 and a[0].trials < 50000 and a[0].trials % 1000 == 0


def test_interrupt_marks_incomplete(monkeypatch):
    import qstbc.simkit as sk

    calls = {"n": 0}
    real = sk._evaluate

    def flaky(st, task):
        calls["n"] += 1
        if calls["n"] > 3:
            raise KeyboardInterrupt
        return real(st, task)

    monkeypatch.setattr(sk, "_evaluate", flaky)
    pts = run(spec(trials=10000, block_size=1000))
    assert len(pts) == 1 and not pts[0].complete and pts[0].trials == 3000


# --- statistics -------------------------------------------------------------------

@pytest.mark.parametrize("k,n", [(0, 100), (1, 100), (37, 1000), (500, 1000), (100, 100), (3, 7)])
def test_wilson_matches_statsmodels(k, n):
    lo, hi = wilson_interval(k, n)
    rlo, rhi = proportion_confint(k, n, alpha=0.05, method="wilson")
    assert lo <= k / n <= hi
    assert abs(lo - max(0.0, min(rlo, k / n))) < 1e-12
    assert abs(hi - min(1.0, max(rhi, k / n))) < 1e-12


def test_ci_contains_ber():
    for p in run(spec()):
        lo, hi = p.ci95
        assert lo <= p.ber <= hi


def test_error_counts_not_overdispersed():
    # symbol errors over independent seeds should be binomially dispersed;
    # bit errors within one symbol are correlated, so symbols are the unit
    n = 4000
    counts = np.array([run(spec(snr_db=(2.0,), trials=n, seed=s))[0].symbol_errors for s in range(20)])
    p = counts.sum() / (n * len(counts))
    chi2 = np.sum((counts - n * p) ** 2) / (n * p * (1 - p))
    assert stats.chi2.sf(chi2, len(counts) - 1) > 0.01


# --- slope estimation ---------------------------------------------------------------

def synthetic(order, snrs, scale=1e-1, bits=10**12):
    return [BerPoint(s, bits // 2, bits, int(round(bits * scale * 10 ** (-order * s / 10))), 0) for s in snrs]


def test_slope_recovers_order():
    pts = [BerPoint(s, 10**15, 10**16, int(10**16 * 10 ** (-4 * s / 10) / 10), 0) for s in (0, 5, 10)]
    assert abs(estimate_diversity_slope(pts) - 4.0) < 1e-9


def test_slope_window():
    pts = synthetic(2, [0, 5, 10, 15])
    assert abs(estimate_diversity_slope(pts, ber_window=(1e-4, 1e-1)) - 2.0) < 1e-6


def test_slope_needs_two_points():
    with pytest.raises(InsufficientErrorsError, match="have 1 of 1"):
        estimate_diversity_slope([BerPoint(0.0, 1000, 2000, 500, 300)])
    with pytest.raises(InsufficientErrorsError):
        estimate_diversity_slope([BerPoint(0.0, 1000, 2000, 50, 30), BerPoint(2.0, 1000, 2000, 20, 10)])


# --- serialization -------------------------------------------------------------------

def test_csv_round_trip(tmp_path):
    pts = run(spec())
    write_results(pts, tmp_path / "r.csv")
    assert read_results(tmp_path / "r.csv") == pts
    header = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert header == "snr_db,trials,bits_sent,bit_errors,ber,ci_low,ci_high,symbol_errors,ser"


def test_json_round_trip(tmp_path):
    import json

    s = spec()
    pts = run(s)
    write_results(pts, tmp_path / "r.json", "json", spec=s, runtime_s=1.5)
    assert read_results(tmp_path / "r.json") == pts
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["spec"]["seed"] == 1 and doc["runtime_s"] == 1.5 and "version" in doc


def test_empty_csv(tmp_path):
    write_results([], tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text().count("\n") == 1
    assert read_results(tmp_path / "e.csv") == []


def test_bad_format(tmp_path):
    with pytest.raises(ValueError, match="format"):
        write_results([], tmp_path / "x", "xml")
