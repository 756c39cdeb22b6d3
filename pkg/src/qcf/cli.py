"""``qcf`` command line.

Exit codes: 0 completed (or report written), 1 formula verification failed,
2 configuration error, 3 protocol aborted.
"""

from __future__ import annotations

import argparse
import math
import os
import re
import sys
import time
import warnings
from pathlib import Path

from .codes import CodeError, build_code, load_code_file
from .harness import (
    DEFAULT_GRID,
    campaign_report,
    code_report,
    dumps,
    run_report,
    sizes_csv,
    verify_report,
)
from .liedetect import LieFrequencies
from .protocol import ConfigError, ProtocolConfig
from .quantum import check_theta

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_ABORTED = 3

DEFAULT_CODE = "hamming-63-57"
PRESET_BY_LENGTH = {7: "hamming-7-4", 15: "hamming-15-11", 31: "hamming-31-26", 63: "hamming-63-57"}


class UsageError(Exception):
    pass


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("QCF_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise UsageError(f"QCF_SEED must be an integer, got {env!r}") from exc


def _code(args):
    if getattr(args, "code_file", None):
        return load_code_file(args.code_file)
    name = getattr(args, "code", None) or getattr(args, "preset", None)
    if name is None and getattr(args, "s", None) is not None:
        if args.s not in PRESET_BY_LENGTH:
            raise UsageError(f"--s must be one of {sorted(PRESET_BY_LENGTH)}")
        name = PRESET_BY_LENGTH[args.s]
    return build_code(name or DEFAULT_CODE)


def _config(args) -> ProtocolConfig:
    cfg = ProtocolConfig(
        _code(args),
        LieFrequencies(args.fa, args.fb, args.fc),
        z=args.z,
        bob_mode=args.mode,
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cfg.warn_if_tight()
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out and out != "-":
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_flip(args) -> int:
    cfg = _config(args)
    t0 = time.perf_counter()
    report, transcript = run_report(cfg, _seed(args), args.alice, args.bob)
    if args.timing:
        report["timing"] = {"seconds": time.perf_counter() - t0}
    if args.transcript:
        if args.transcript == "-":
            sys.stderr.write(transcript.to_text())
        else:
            Path(args.transcript).write_text(transcript.to_text())
    _emit(dumps(report), args.out)
    return EXIT_OK if report["outcome"]["status"] == "completed" else EXIT_ABORTED


def cmd_montecarlo(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    cfg = _config(args)
    t0 = time.perf_counter()
    report, summaries = campaign_report(
        cfg, _seed(args), args.trials, args.alice, args.bob, args.workers, include_bias=args.command == "attack" or None
    )
    if args.timing:
        report["timing"] = {"seconds": time.perf_counter() - t0}
    if args.csv:
        Path(args.csv).write_text(sizes_csv(summaries))
    _emit(dumps(report), args.out)
    return EXIT_OK


def cmd_attack(args) -> int:
    return cmd_montecarlo(args)


def _parse_grid(text: str | None):
    if not text:
        return DEFAULT_GRID
    grid = []
    for cell in text.split(";"):
        parts = [float(x) for x in cell.split(",")]
        if len(parts) != 3:
            raise UsageError(f"grid cell {cell!r} needs three comma-separated frequencies")
        grid.append(tuple(parts))
    return tuple(grid)


_THETA_RE = re.compile(r"(?:(\d+(?:\.\d*)?)\*?)?pi(?:/(\d+(?:\.\d*)?))?")


def parse_angle(text: str) -> float:
    """A float, or ``[a*]pi[/b]``."""
    t = text.replace(" ", "")
    m = _THETA_RE.fullmatch(t)
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    try:
        return float(t)
    except ValueError as exc:
        raise UsageError(f"cannot read angle {text!r}") from exc


def _parse_thetas(values) -> list[float]:
    if not values:
        return [math.pi / 4]
    return [check_theta(parse_angle(v)) for v in values]


def cmd_verify(args) -> int:
    report = verify_report(_parse_grid(args.grid), args.s, _parse_thetas(args.theta), _seed(args), args.z)
    if args.csv:
        Path(args.csv).write_text(_verify_csv(report))
    _emit(dumps(report), args.out)
    return EXIT_OK if report["all_pass"] else EXIT_VERIFY_FAILED


def _verify_csv(report: dict) -> str:
    lines = ["fa,fb,fc,theta,quantity,observed,expected,bound,pass"]
    for cell in report["cells"]:
        f = cell["freqs"]
        for name, c in cell["checks"].items():
            lines.append(
                f"{f['fa']},{f['fb']},{f['fc']},{cell['theta']:.6f},{name},{c['observed']},{c['expected']:.6f},{c['bound']:.6f},{int(c['pass'])}"
            )
    return "\n".join(lines) + "\n"


def cmd_code(args) -> int:
    if args.random:
        s, k, seed = args.random
        code = build_code((s, k, seed))
    else:
        code = _code(args)
    report = code_report(code)
    _emit(dumps(report), args.out)
    return EXIT_OK


def _add_code_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--code", help=f"preset name, repetition-N or random-S-K-SEED (default {DEFAULT_CODE})")
    g.add_argument("--code-file", help="code descriptor: 's k d' header then k generator rows")
    g.add_argument("--s", type=int, help="shorthand for the Hamming preset of this length")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    _add_code_flags(p)
    p.add_argument("--seed", type=int, help="master seed (falls back to $QCF_SEED, then 0)")
    p.add_argument("--fa", type=float, default=0.1)
    p.add_argument("--fb", type=float, default=0.1)
    p.add_argument("--fc", type=float, default=0.05)
    p.add_argument("--z", type=float, default=4.0, help="tolerance multiplier for statistical checks")
    p.add_argument("--mode", choices=("measure-first", "delayed"), default="measure-first", help="honest Bob's mode")
    p.add_argument("--alice", default="honest")
    p.add_argument("--bob", default="honest")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--timing", action="store_true", help="add wall-clock timing (makes output non-reproducible)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcf", description="Quantum coin-flipping simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("flip", help="one protocol run")
    _add_run_flags(p)
    p.add_argument("--transcript", help="write the text transcript here ('-' for stderr)")
    p.set_defaults(func=cmd_flip)

    for name, func, default_trials in (("montecarlo", cmd_montecarlo, 1000), ("attack", cmd_attack, 1000)):
        p = sub.add_parser(name, help="seeded campaign" if name == "montecarlo" else "bias estimate for a strategy pair")
        _add_run_flags(p)
        p.add_argument("--trials", type=int, default=default_trials)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--csv", help="per-trial set sizes as CSV")
        p.set_defaults(func=func)

    p = sub.add_parser("verify-formulas", help="run the lie-detection algorithms over a frequency grid")
    p.add_argument("--s", type=int, default=10_000)
    p.add_argument("--grid", help="cells 'fa,fb,fc;fa,fb,fc;...'")
    p.add_argument("--theta", action="append", help="angle, e.g. pi/6 (repeatable)")
    p.add_argument("--seed", type=int)
    p.add_argument("--z", type=float, default=4.0)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("code", help="inspect a code")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--preset")
    g.add_argument("--code-file")
    g.add_argument("--random", type=int, nargs=3, metavar=("S", "K", "SEED"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_code)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CodeError, UsageError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"qcf: error: {msg}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
