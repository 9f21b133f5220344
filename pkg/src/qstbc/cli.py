"""Command-line entry point: ``qstbc verify | simulate | codebook``.

Exit codes: 0 success, 1 validation or verification failure, 2 I/O error,
3 bad usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import codebook as cbmod
from .config import CodeConfig, ConfigError
from .simkit import ExperimentSpec, run, write_results
from .verify import run_checks

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_FAIL, EXIT_IO, EXIT_USAGE = 0, 1, 2, 3

log = logging.getLogger("qstbc")


class UsageError(Exception):
    pass


class ConfigSchemaError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- run config ------------------------------------------------------------------

SCHEMA = {
    "code": {"M": int, "N": int, "T": int, "d": int},
    "codebook": {"path": str, "K": int, "generate": bool, "seed": int, "iterations": int, "starts": int},
    "sweep": {"snr_db": (list, dict), "trials": int, "seed": int, "workers": int, "block_size": int,
              "stop_after_bit_errors": int},
    "output": {"csv": str, "json": str},
}
REQUIRED = {"code": ("M", "N", "T"), "sweep": ("snr_db", "trials")}


@dataclass
class RunConfig:
    """Validated contents of a simulation config file."""

    config: CodeConfig
    codebook: dict
    snr_db: list
    trials: int
    seed: int = 0
    workers: int = 1
    block_size: int = 4096
    stop_after_bit_errors: int | None = None
    outputs: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    @classmethod
    def load(cls, path) -> RunConfig:
        path = Path(path)
        try:
            raw = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigSchemaError(f"{path}: {exc}") from None
        return cls.from_dict(raw, base_dir=path.parent, source=str(path))

    @classmethod
    def from_dict(cls, raw: dict, base_dir=Path("."), source: str = "<config>") -> RunConfig:
        def fail(where, msg):
            raise ConfigSchemaError(f"{source}: {where}: {msg}")

        for section in raw:
            if section not in SCHEMA:
                fail(section, f"unknown section (expected one of {', '.join(SCHEMA)})")
            if not isinstance(raw[section], dict):
                fail(section, "must be a table")
            for key, val in raw[section].items():
                where = f"{section}.{key}"
                if key not in SCHEMA[section]:
                    fail(where, f"unknown key (allowed: {', '.join(SCHEMA[section])})")
                want = SCHEMA[section][key]
                if want is int and (isinstance(val, bool) or not isinstance(val, int)):
                    fail(where, f"expected an integer, got {val!r}")
                if not isinstance(val, want):
                    fail(where, f"expected {getattr(want, '__name__', 'list or table')}, got {val!r}")
        for section, keys in REQUIRED.items():
            for key in keys:
                if key not in raw.get(section, {}):
                    fail(f"{section}.{key}", "missing required key")

        code = raw["code"]
        M, N, T = code["M"], code["N"], code["T"]
        d = code.get("d", T // M if M else 0)
        try:
            config = CodeConfig(M, N, T, d)
        except ConfigError as exc:
            fail("code", f"{exc} [rule {exc.rule}]")

        cb = dict(raw.get("codebook", {}))
        if "path" in cb and ({"K", "generate"} & cb.keys()):
            fail("codebook", "give either 'path' or 'K' (with optional 'generate'), not both")
        if "path" not in cb and "K" not in cb:
            fail("codebook", "missing 'path' or 'K'")

        sweep = raw["sweep"]
        grid = sweep["snr_db"]
        if isinstance(grid, dict):
            extra = set(grid) - {"start", "stop", "step"}
            if extra or not {"start", "stop", "step"} <= grid.keys():
                fail("sweep.snr_db", "range form needs exactly start, stop, step")
            grid = _snr_range(grid["start"], grid["stop"], grid["step"])
        if not grid or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in grid):
            fail("sweep.snr_db", "must be a non-empty list of numbers")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            fail("sweep.snr_db", "must be strictly increasing")
        for key in ("trials", "workers", "block_size"):
            if key in sweep and sweep[key] < 1:
                fail(f"sweep.{key}", "must be >= 1")
        if "seed" in sweep and not 0 <= sweep["seed"] < 2**64:
            fail("sweep.seed", "must be a 64-bit unsigned integer")

        return cls(
            config=config,
            codebook=cb,
            snr_db=[float(x) for x in grid],
            trials=sweep["trials"],
            seed=sweep.get("seed", 0),
            workers=sweep.get("workers", 1),
            block_size=sweep.get("block_size", 4096),
            stop_after_bit_errors=sweep.get("stop_after_bit_errors"),
            outputs=dict(raw.get("output", {})),
            base_dir=Path(base_dir),
        )

    def resolve_codebook(self) -> tuple[cbmod.Codebook, str]:
        """Load or build the codebook; returns it with a provenance string."""
        cb = self.codebook
        d = self.config.d
        if "path" in cb:
            p = Path(cb["path"])
            p = p if p.is_absolute() else self.base_dir / p
            return cbmod.load(p), str(p)
        K = cb["K"]
        if not cb.get("generate", False):
            try:
                return cbmod.builtin(d, K), f"builtin:d{d}_K{K}"
            except KeyError:
                log.info("no built-in packing for d=%d K=%d; generating one", d, K)
        kw = {k: cb[k] for k in ("seed", "iterations", "starts") if k in cb}
        book = cbmod.generate_packing(d, K, **kw)
        return book, "generate:" + ",".join(f"{k}={v}" for k, v in dict(d=d, K=K, **kw).items())


def _snr_range(start, stop, step) -> list:
    if step <= 0:
        raise ConfigSchemaError("SNR step must be positive")
    n = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def parse_snr(text: str) -> list:
    """``"0,2,4"`` or ``"start:stop:step"`` (inclusive)."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            return _snr_range(start, stop, step)
        return [float(x) for x in text.split(",") if x.strip()]
    except (ValueError, ConfigSchemaError) as exc:
        raise UsageError(f"bad --snr value {text!r}: {exc}") from None


# --- commands ----------------------------------------------------------------------

def cmd_verify(args) -> int:
    try:
        config = CodeConfig(args.M, args.N, args.T, args.d)
    except ConfigError as exc:
        print(f"invalid configuration ({args.M},{args.N},{args.T},{args.d}): {exc} [rule {exc.rule}]",
              file=sys.stderr)
        if args.json:
            _write_json(args.json, {"config": [args.M, args.N, args.T, args.d], "valid": False,
                                    "rule": exc.rule, "error": str(exc)})
        return EXIT_FAIL
    t0 = time.perf_counter()
    checks = run_checks(config, seed=args.seed)
    elapsed = time.perf_counter() - t0
    ok = all(c.passed for c in checks)
    print(f"invariant suite for (M,N,T,d) = {config}, diversity {config.diversity_order()}")
    for c in checks:
        print("  " + str(c))
    print(f"{'all checks passed' if ok else 'FAILED'} in {elapsed:.2f}s")
    if args.json:
        _write_json(args.json, {"config": list(config.as_tuple()), "valid": True, "passed": ok,
                                "runtime_s": elapsed, "checks": [c.to_dict() for c in checks]})
    return EXIT_OK if ok else EXIT_FAIL


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _workers(args, rc: RunConfig) -> int:
    if args.workers is not None:
        return args.workers
    env = os.environ.get("QSTBC_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"QSTBC_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise UsageError("QSTBC_THREADS must be >= 1")
        return n
    return rc.workers


def _output_targets(args, rc: RunConfig) -> dict:
    if args.out is not None:
        fmt = args.format or ("json" if str(args.out).endswith(".json") else "csv")
        return {fmt: Path(args.out)}
    targets = {fmt: (rc.base_dir / p if not Path(p).is_absolute() else Path(p)) for fmt, p in rc.outputs.items()}
    if args.format is not None:
        if args.format not in targets:
            raise UsageError(f"--format {args.format} given but the config has no output.{args.format} and no --out")
        targets = {args.format: targets[args.format]}
    return targets


def cmd_simulate(args) -> int:
    try:
        rc = RunConfig.load(args.config)
    except FileNotFoundError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigSchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    snr = parse_snr(args.snr) if args.snr is not None else rc.snr_db
    targets = _output_targets(args, rc)
    try:
        codebook, ref = rc.resolve_codebook()
    except FileNotFoundError as exc:
        print(f"codebook file not found: {exc.filename}", file=sys.stderr)
        return EXIT_IO
    except cbmod.CodebookError as exc:
        print(f"invalid codebook: {exc}", file=sys.stderr)
        return EXIT_FAIL
    try:
        spec = ExperimentSpec(
            config=rc.config,
            codebook=codebook,
            snr_db=snr,
            trials=args.trials if args.trials is not None else rc.trials,
            seed=args.seed if args.seed is not None else rc.seed,
            workers=_workers(args, rc),
            stop_after_bit_errors=rc.stop_after_bit_errors,
            block_size=rc.block_size,
            codebook_ref=ref,
        )
    except ValueError as exc:
        print(f"invalid experiment: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for p in targets.values():
        if not p.parent.exists():
            print(f"output directory does not exist: {p.parent}", file=sys.stderr)
            return EXIT_IO

    rate = Fraction(codebook.bits_per_symbol, rc.config.T)
    print(f"config (M,N,T,d) = {rc.config}, K = {codebook.K}, codebook {ref}, "
          f"min chordal distance {codebook.min_chordal_distance:.6f}")
    print(f"rate: {rate} bits per channel use ({float(rate):.6f})")
    print(f"{spec.trials} trials per point, seed {spec.seed}, {spec.workers} worker(s)")
    t0 = time.perf_counter()
    points = run(spec)
    runtime = time.perf_counter() - t0

    print(f"{'SNR dB':>8} {'trials':>10} {'bit err':>9} {'BER':>11} {'95% CI':>25} {'SER':>11}")
    for p in points:
        lo, hi = p.ci95
        flag = "" if p.complete else "  (incomplete)"
        print(f"{p.snr_db:8.2f} {p.trials:10d} {p.bit_errors:9d} {p.ber:11.4e} "
              f"[{lo:10.4e}, {hi:10.4e}] {p.ser:11.4e}{flag}")
    print(f"runtime {runtime:.1f}s")
    try:
        for fmt, path in targets.items():
            write_results(points, path, fmt, spec=spec, runtime_s=runtime)
            print(f"wrote {path}")
    except OSError as exc:
        print(f"cannot write results: {exc}", file=sys.stderr)
        return EXIT_IO
    complete = len(points) == len(spec.snr_db) and all(p.complete for p in points)
    return EXIT_OK if complete else EXIT_FAIL


def cmd_codebook_generate(args) -> int:
    try:
        book = cbmod.generate_packing(args.d, args.K, seed=args.seed, iterations=args.iterations,
                                      starts=args.starts, workers=args.workers or 1)
    except (cbmod.CodebookError, ValueError) as exc:
        print(f"cannot generate packing: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out = Path(args.out or f"codebook_d{args.d}_K{args.K}_seed{args.seed}.txt")
    try:
        cbmod.save(book, out)
    except OSError as exc:
        print(f"cannot write codebook: {exc}", file=sys.stderr)
        return EXIT_IO
    bound = cbmod.simplex_bound(args.d, args.K)
    print(f"wrote {out}")
    print(f"d={book.d} K={book.K} min chordal distance {book.min_chordal_distance:.6f} "
          f"(simplex bound {bound:.6f}, {book.min_chordal_distance / bound:.2%})"
          + ("" if book.converged else "  [optimizer did not converge]"))
    return EXIT_OK


def cmd_codebook_inspect(args) -> int:
    try:
        book = cbmod.load(args.file)
    except FileNotFoundError as exc:
        print(f"codebook file not found: {exc.filename}", file=sys.stderr)
        return EXIT_IO
    except cbmod.CodebookError as exc:
        print(f"invalid codebook: {exc}", file=sys.stderr)
        return EXIT_FAIL
    bound = cbmod.simplex_bound(book.d, book.K)
    print(f"d = {book.d}")
    print(f"K = {book.K} ({book.bits_per_symbol} bits per symbol)")
    print(f"min chordal distance = {book.min_chordal_distance:.6f} (simplex bound {bound:.6f})")
    print("labels:")
    for k, (lab, v) in enumerate(zip(book.labels, book.vectors)):
        coords = " ".join(f"{z.real:+.4f}{z.imag:+.4f}j" for z in v)
        print(f"  {k:3d}  {lab}  {coords}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qstbc", description="Stabilizer-code noncoherent STBC toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="run the algebraic invariant suite for (M, N, T, d)")
    for name in ("M", "N", "T", "d"):
        v.add_argument(name, type=int)
    v.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    v.add_argument("--json", metavar="PATH", help="also write a machine-readable report")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="run a Monte Carlo BER sweep from a TOML config")
    s.add_argument("config")
    s.add_argument("--seed", type=int)
    s.add_argument("--trials", type=int)
    s.add_argument("--snr", help="comma list or start:stop:step in dB")
    s.add_argument("--out", help="single output file (overrides [output])")
    s.add_argument("--format", choices=("csv", "json"))
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("codebook", help="generate or inspect codebooks")
    csub = c.add_subparsers(dest="action", required=True, parser_class=_Parser)
    g = csub.add_parser("generate")
    g.add_argument("-d", type=int, required=True)
    g.add_argument("-K", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--iterations", type=int, default=1000)
    g.add_argument("--starts", type=int, default=32)
    g.add_argument("--workers", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_codebook_generate)
    i = csub.add_parser("inspect")
    i.add_argument("file")
    i.set_defaults(func=cmd_codebook_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"qstbc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
