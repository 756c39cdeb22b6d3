"""Report assembly for single runs, campaigns, formula verification and code inspection.

Every report is plain JSON data and depends only on its inputs and the seed.
"""

from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources
from typing import Sequence

from . import __version__
from .adversary import bias_report, collect_trials, make_alice, make_bob
from .codes import LinearCode, feasibility_line, parity_census
from .liedetect import (
    LieFrequencies,
    LieType,
    expected_detected_alg1,
    expected_detected_alg2,
    expected_m_prime,
    expected_sizes,
    run_detection,
    size_tolerance_check,
)
from .protocol import ProtocolConfig, run_protocol_full
from .rng import RandomStream

RUN_SCHEMA = "qcf/run-report/v1"
CAMPAIGN_SCHEMA = "qcf/campaign-report/v1"
BIAS_SCHEMA = "qcf/bias-report/v1"
VERIFY_SCHEMA = "qcf/verify-report/v1"
CODE_SCHEMA = "qcf/code-report/v1"

DEFAULT_GRID = ((0.2, 0.2, 0.1), (0.1, 0.3, 0.05), (0.3, 0.1, 0.2))
SIZE_KEYS = ("U", "L", "N", "M")


def load_schema(name: str) -> dict:
    """``name`` is one of ``run_report``, ``campaign_report``, ``bias_report``, ``verify_report``, ``code_report``."""
    text = resources.files("qcf").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _freqs_dict(f: LieFrequencies) -> dict:
    return {"fa": f.fa, "fb": f.fb, "fc": f.fc}


# Single run ---------------------------------------------------------------------------------


def run_report(config: ProtocolConfig, seed: int, alice: str = "honest", bob: str = "honest", stream_id: int = 0):
    """One protocol run. Returns ``(report, transcript)``."""
    r = run_protocol_full(make_alice(alice), make_bob(bob), config, seed, stream_id)
    report = {
        "schema": RUN_SCHEMA,
        "version": __version__,
        "config": config.describe(),
        "seed": seed,
        "stream_id": stream_id,
        "alice": alice,
        "bob": bob,
        "outcome": r.outcome.payload(),
        "checks": r.transcript.checks,
        "set_sizes": r.sizes,
        "transcript_digest": r.transcript.full_digest(),
        "transcript": r.transcript.to_json(),
    }
    return report, r.transcript


# Campaigns ------------------------------------------------------------------------------------


def _mean_sd(values: Sequence[float]) -> tuple[float | None, float | None]:
    n = len(values)
    if n == 0:
        return None, None
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def campaign_report(
    config: ProtocolConfig,
    seed: int,
    trials: int,
    alice: str = "honest",
    bob: str = "honest",
    workers: int = 1,
    include_bias: bool | None = None,
):
    """Returns ``(report, per-trial summaries)``. Bias is included for adversarial pairs by default."""
    summaries = collect_trials(alice, bob, config, trials, seed, workers)
    bias = bias_report(summaries, alice, bob)
    done = [t for t in summaries if t.outcome["status"] == "completed"]
    c0 = sum(1 for t in done if t.outcome["c"] == 0)
    n_done = len(done)
    z0 = (c0 - n_done / 2) / math.sqrt(n_done / 4) if n_done else None
    exp = expected_sizes(config.bob_freqs, config.s)
    sized = [t.sizes for t in summaries if t.sizes]
    sizes = {}
    for k in SIZE_KEYS:
        mean, sd = _mean_sd([s[k] for s in sized])
        sizes[k] = {"mean": mean, "sd": sd, "expected": getattr(exp, k)}
    report = {
        "schema": CAMPAIGN_SCHEMA,
        "version": __version__,
        "config": config.describe(),
        "seed": seed,
        "trials": trials,
        "alice": alice,
        "bob": bob,
        "outcomes": {"c0": c0, "c1": n_done - c0, "aborted": trials - n_done},
        "p0": bias.p0,
        "p1": bias.p1,
        "p_abort": bias.p_abort,
        "uniformity": {
            "completed": n_done,
            "pr_c0_given_completed": c0 / n_done if n_done else None,
            "z_score": z0,
            "within_4sigma": z0 is not None and abs(z0) <= 4,
        },
        "abort_histogram": dict(sorted(bias.abort_histogram.items())),
        "disagreements": bias.disagreements,
        "set_sizes": {"runs_with_sizes": len(sized), **sizes},
        "bias": None,
    }
    if include_bias is None:
        include_bias = alice != "honest" or bob != "honest"
    if include_bias:
        report["bias"] = {"schema": BIAS_SCHEMA, **bias.as_dict()}
    return report, summaries


def sizes_csv(summaries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "status", "c", "check_id", "U", "L", "N", "M"])
    for t in summaries:
        o, s = t.outcome, t.sizes or {}
        w.writerow([t.index, o["status"], o.get("c", ""), o.get("check_id", "")] + [s.get(k, "") for k in SIZE_KEYS])
    return buf.getvalue()


# Formula verification ---------------------------------------------------------------------------


def _tol(observed: int, expected: float, s: int, z: float) -> dict:
    t = size_tolerance_check(observed, expected, s, z)
    return {"observed": observed, "expected": expected, "bound": t.bound, "pass": t.passed}


def verify_cell(freqs: LieFrequencies, s: int, theta: float, seed: int, z: float = 4.0) -> dict:
    """Algorithms I-IV once each at one grid point."""
    key = (round(freqs.fa * 1e6), round(freqs.fb * 1e6), round(freqs.fc * 1e6), round(theta * 1e9))
    rng = RandomStream(seed, ("verify",) + key)
    run1 = run_detection("I", s, freqs, rng.child("I"))
    run2 = run_detection("II", s, freqs, rng.child("II"))
    run3 = run_detection("III", s, freqs, rng.child("III"), theta=theta)
    run4 = run_detection("IV", s, freqs, rng.child("IV"), theta=theta)
    exp = expected_sizes(freqs, s)
    sizes3 = run3.partition.sizes()
    checks = {
        "alg1_detected": _tol(len(run1.detected), expected_detected_alg1(freqs, s), s, z),
        "alg2_detected": _tol(len(run2.detected), expected_detected_alg2(freqs, s), s, z),
        **{f"alg3_{k}": _tol(sizes3[k], getattr(exp, k), s, z) for k in SIZE_KEYS},
        "alg4_M": _tol(len(run4.partition.M), expected_m_prime(freqs, s), s, z),
    }
    b_in_n = run3.types_in(run3.partition.N)[LieType.B]
    c_in_n4 = run4.types_in(run4.partition.N)[LieType.C]
    return {
        "freqs": _freqs_dict(freqs),
        "theta": theta,
        "s": s,
        "checks": checks,
        "alg2_over_alg1": len(run2.detected) / len(run1.detected) if run1.detected else None,
        "type_b_in_N": b_in_n,
        "type_c_in_N_prime": c_in_n4,
        "pass": all(c["pass"] for c in checks.values()) and b_in_n == 0 and c_in_n4 == 0,
    }


def verify_report(
    grid: Sequence[tuple[float, float, float]], s: int, thetas: Sequence[float], seed: int, z: float = 4.0
) -> dict:
    cells = [verify_cell(LieFrequencies(*g), s, th, seed, z) for g in grid for th in thetas]
    return {
        "schema": VERIFY_SCHEMA,
        "version": __version__,
        "seed": seed,
        "s": s,
        "z": z,
        "cells": cells,
        "zero_type_b_in_N": all(c["type_b_in_N"] == 0 for c in cells),
        "zero_type_c_in_N_prime": all(c["type_c_in_N_prime"] == 0 for c in cells),
        "all_pass": all(c["pass"] for c in cells),
    }


# Code inspection -----------------------------------------------------------------------------------


def code_report(code: LinearCode) -> dict:
    even, odd = parity_census(code)
    return {
        "schema": CODE_SCHEMA,
        "version": __version__,
        "code": code.descriptor(),
        "parity_census": {"even": even, "odd": odd},
        "feasibility": feasibility_line(code),
        "fa_plus_fc_range": {"greater_than": 2 * code.d / code.s, "less_than": 0.5},
        "feasible_region_empty": 2 * code.d / code.s >= 0.5,
    }
