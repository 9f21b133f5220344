import json
import subprocess
import sys

import pytest

from qstbc.cli import RunConfig, main, parse_snr, UsageError
from qstbc.codebook import builtin, save

SMALL = """
[code]
M = 2
N = 2
T = 4

[codebook]
{codebook}

[sweep]
snr_db = [0.0, 4.0]
trials = 4000
seed = 3

[output]
csv = "out.csv"
json = "out.json"
"""


def write_config(tmp_path, codebook="K = 4", text=SMALL):
    p = tmp_path / "run.toml"
    p.write_text(text.format(codebook=codebook))
    return p


def test_verify_ok(capsys):
    assert main(["verify", "3", "6", "9", "3"]) == 0
    assert "all checks passed" in capsys.readouterr().out


def test_verify_invalid_tuple(capsys):
    assert main(["verify", "4", "3", "12", "3"]) == 1
    assert "N >= M" in capsys.readouterr().err


def test_verify_json(tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify", "2", "2", "4", "2", "--json", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] and doc["config"] == [2, 2, 4, 2] and len(doc["checks"]) >= 10


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "2", "2"])
    assert exc.value.code == 3
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 3


def test_simulate_writes_both_outputs(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["simulate", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "rate: 1/2 bits per channel use" in out
    assert (tmp_path / "out.csv").exists() and (tmp_path / "out.json").exists()


def test_simulate_rate_two_ninths(tmp_path, capsys):
    text = SMALL.replace("M = 2\nN = 2\nT = 4", "M = 3\nN = 3\nT = 9").replace("trials = 4000", "trials = 500")
    cfg = write_config(tmp_path, text=text)
    assert main(["simulate", str(cfg), "--out", str(tmp_path / "r.csv")]) == 0
    assert "rate: 2/9 bits per channel use" in capsys.readouterr().out


def test_simulate_idempotent_and_seed_sensitive(tmp_path):
    cfg = write_config(tmp_path)
    main(["simulate", str(cfg), "--out", str(tmp_path / "a.csv")])
    main(["simulate", str(cfg), "--out", str(tmp_path / "b.csv")])
    main(["simulate", str(cfg), "--out", str(tmp_path / "c.csv"), "--seed", "4"])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "c.csv").read_bytes()


def test_simulate_overrides(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "o.json"
    assert main(["simulate", str(cfg), "--out", str(out), "--trials", "1000", "--snr", "0:6:3"]) == 0
    doc = json.loads(out.read_text())
    assert [p["snr_db"] for p in doc["points"]] == [0.0, 3.0, 6.0]
    assert all(p["trials"] == 1000 for p in doc["points"])


def test_missing_codebook_exits_2_without_output(tmp_path, capsys):
    cfg = write_config(tmp_path, codebook='path = "nope.txt"')
    assert main(["simulate", str(cfg)]) == 2
    assert "not found" in capsys.readouterr().err
    assert not (tmp_path / "out.csv").exists() and not (tmp_path / "out.json").exists()


def test_codebook_path(tmp_path):
    save(builtin(2, 4), tmp_path / "cb.txt")
    cfg = write_config(tmp_path, codebook='path = "cb.txt"')
    assert main(["simulate", str(cfg), "--out", str(tmp_path / "r.csv")]) == 0


def test_missing_config_exits_2(tmp_path):
    assert main(["simulate", str(tmp_path / "none.toml")]) == 2


@pytest.mark.parametrize("text,where", [
    (SMALL.replace("seed = 3", "seed = 3\nspeed = 1"), "sweep.speed"),
    (SMALL + "\n[extra]\nx = 1\n", "extra"),
    (SMALL.replace("trials = 4000", 'trials = "many"'), "sweep.trials"),
    (SMALL.replace("T = 4", "T = 5"), "rule M | T"),
    (SMALL.replace("trials = 4000\n", ""), "sweep.trials"),
])
def test_config_schema_errors(tmp_path, capsys, text, where):
    cfg = write_config(tmp_path, text=text)
    assert main(["simulate", str(cfg)]) == 1
    assert where in capsys.readouterr().err


def test_config_range_form():
    rc = RunConfig.from_dict({"code": {"M": 2, "N": 2, "T": 4}, "codebook": {"K": 4},
                              "sweep": {"snr_db": {"start": -6.0, "stop": 8.0, "step": 2.0}, "trials": 10}})
    assert rc.snr_db == [-6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0, 8.0]


def test_parse_snr():
    assert parse_snr("0,2.5,5") == [0.0, 2.5, 5.0]
    assert parse_snr("0:1:0.5") == [0.0, 0.5, 1.0]
    with pytest.raises(UsageError):
        parse_snr("a:b")


def test_worker_env(tmp_path, monkeypatch):
    cfg = write_config(tmp_path)
    monkeypatch.setenv("QSTBC_THREADS", "2")
    assert main(["simulate", str(cfg), "--out", str(tmp_path / "t2.csv")]) == 0
    monkeypatch.setenv("QSTBC_THREADS", "zero")
    assert main(["simulate", str(cfg), "--out", str(tmp_path / "t0.csv")]) == 3
    monkeypatch.delenv("QSTBC_THREADS")
    main(["simulate", str(cfg), "--out", str(tmp_path / "t1.csv")])
    assert (tmp_path / "t1.csv").read_bytes() == (tmp_path / "t2.csv").read_bytes()


def test_format_flag(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["simulate", str(cfg), "--format", "json"]) == 0
    assert (tmp_path / "out.json").exists() and not (tmp_path / "out.csv").exists()
    assert main(["simulate", str(cfg), "--out", str(tmp_path / "x.dat"), "--format", "json"]) == 0
    json.loads((tmp_path / "x.dat").read_text())


def test_codebook_generate_and_inspect(tmp_path, capsys):
    out = tmp_path / "g.txt"
    assert main(["codebook", "generate", "-d", "2", "-K", "4", "--iterations", "200", "--starts", "4",
                 "--out", str(out)]) == 0
    assert "simplex bound" in capsys.readouterr().out
    assert main(["codebook", "inspect", str(out)]) == 0
    text = capsys.readouterr().out
    assert "K = 4 (2 bits per symbol)" in text and "  11  " in text


def test_codebook_generate_rejects_k3(tmp_path):
    assert main(["codebook", "generate", "-d", "3", "-K", "3", "--out", str(tmp_path / "x.txt")]) == 1


def test_codebook_inspect_missing(tmp_path):
    assert main(["codebook", "inspect", str(tmp_path / "missing.txt")]) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "qstbc", "verify", "2", "2", "4", "2"], capture_output=True, text=True)
    assert r.returncode == 0 and "all checks passed" in r.stdout


@pytest.mark.parametrize("name", ["sweep_3x3.toml", "sweep_3x6.toml", "diversity_2x2.toml"])
def test_shipped_configs_load(name):
    from pathlib import Path

    rc = RunConfig.load(Path(__file__).parent.parent / "configs" / name)
    book, _ = rc.resolve_codebook()
    assert book.d == rc.config.d
