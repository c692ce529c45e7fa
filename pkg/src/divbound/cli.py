"""Command-line surface: certified bounds, brute-force oracles, invariant suites,
and per-block inspection, with JSON or CSV on standard output.

Exit codes: 0 success, 1 failed verification, 2 invalid flags or inputs,
3 solver resource limit.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import random
import sys
import tempfile
import time
from fractions import Fraction

from .numtheory import RootedComponent, canonical_key, divisor_connected_component, rooted_component
from .oracle import brute_max_size, exact_reference_series, telescope_check
from .patterns import AdmissibleFamily, PatternError, builtin_family, family_from_file, is_admissible
from .series import (
    BlockCache,
    SeriesEstimate,
    TruncationParams,
    collect_blocks,
    enumerate_triples,
    evaluate,
    retained_pairs,
)
from .solver import COUNTING, DENSITY, Mode, ResourceLimitError, local_increment, partition_mode, solve_block

CACHE_DIR_ENV = "DIVBOUND_CACHE_DIR"


def _parse_family(text: str) -> AdmissibleFamily:
    if text.startswith("file:"):
        return family_from_file(text[len("file:") :])
    return builtin_family(text)


def _parse_mode(text: str) -> Mode:
    if text == "density":
        return DENSITY
    if text == "beta":
        return COUNTING
    if text.startswith("pressure:"):
        raw = text[len("pressure:") :]
        try:
            z = Fraction(raw)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"pressure must be a positive decimal, got {raw!r}") from None
        if z <= 0:
            raise ValueError(f"pressure must be positive, got {raw!r}")
        return partition_mode(z)
    raise ValueError(f"unknown mode {text!r} (expected density, beta, or pressure:Z)")


def _resolve_cache_path(arg: str | None) -> str | None:
    if arg:
        return arg
    env_dir = os.environ.get(CACHE_DIR_ENV)
    if env_dir:
        os.makedirs(env_dir, exist_ok=True)
        return os.path.join(env_dir, "blocks.tsv")
    return None


def _emit(payload: dict, fmt: str) -> None:
    if fmt == "csv":
        keys = sorted(payload)
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(keys)
        writer.writerow([payload[k] for k in keys])
        sys.stdout.write(buf.getvalue())
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))


def _reference_estimate(fam: AdmissibleFamily, mode: Mode, params: TruncationParams) -> SeriesEstimate:
    value, mass = exact_reference_series(fam, mode, params)
    keys = set()
    id_pairs = 0
    terms = 0
    for i, d in retained_pairs(params):
        id_pairs += 1
        terms += d
    for i, d, t in enumerate_triples(params):
        keys.add(canonical_key(rooted_component(d, t)))
    S = float(value)
    W = float(mass)
    M = fam.increment_bound(mode)
    return SeriesEstimate(
        mode=mode,
        S=S,
        W=W,
        M=M,
        lower=S,
        upper=S + M * max(0.0, 1.0 - W),
        blocks=len(keys),
        id_pairs=id_pairs,
        terms=terms,
        slack=0.0,
    )


def cmd_bound(args: argparse.Namespace) -> int:
    fam = _parse_family(args.family)
    mode = _parse_mode(args.mode)
    params = TruncationParams(alpha=args.alpha, budget_B=args.budget)
    started = time.perf_counter()
    if args.exact_reference:
        est = _reference_estimate(fam, mode, params)
    else:
        cache = BlockCache(_resolve_cache_path(args.cache))
        est = evaluate(fam, mode, params, cache, threads=args.threads)
    elapsed = time.perf_counter() - started
    payload = {
        "family": fam.name,
        "mode": args.mode,
        "alpha": args.alpha,
        "budget": args.budget,
        "S": est.S,
        "W": est.W,
        "M": est.M,
        "lower": est.lower,
        "upper": est.upper,
        "blocks": est.blocks,
        "id_pairs": est.id_pairs,
        "terms": est.terms,
        "slack": est.slack,
        "elapsed_seconds": elapsed,
    }
    if args.mode == "beta":
        payload["exp_lower"] = math.exp(est.lower)
        payload["exp_upper"] = math.exp(est.upper)
    _emit(payload, args.format)
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    fam = _parse_family(args.family)
    if not 1 <= args.n <= 24:
        raise ValueError(f"oracle runs need 1 <= n <= 24, got {args.n}")
    report = telescope_check(args.n, fam)
    payload = {
        "f": report["f"],
        "q": int(report["q_decimal"]),
        "telescope_pass": report["pass"],
    }
    print(json.dumps(payload, sort_keys=True, indent=2))
    return 0


def cmd_blocks(args: argparse.Namespace) -> int:
    fam = _parse_family(args.family)
    mode = _parse_mode(args.mode)
    params = TruncationParams(alpha=args.alpha, budget_B=args.budget)
    if args.top < 0:
        raise ValueError(f"--top must be nonnegative, got {args.top}")
    rows = collect_blocks(fam, mode, params)
    print("elements\troot\tweight\tincrement")
    for key, weight, increment in rows[: args.top]:
        shown = str(increment) if isinstance(increment, int) else format(increment, ".12g")
        print(f"{','.join(map(str, key.normalized_elements))}\t{key.root_value}\t{weight:.12g}\t{shown}")
    return 0


class _VerifyFailure(Exception):
    pass


def _suite_weight_identity(limit: int) -> int:
    checks = 0
    for i in range(1, limit + 1):
        for d in range(1, limit + 1):
            lhs = sum(Fraction(1, t * (t + 1)) for t in range(i * d, (i + 1) * d))
            rhs = Fraction(1, i * (i + 1) * d)
            if lhs != rhs:
                raise _VerifyFailure(f"weight identity fails at i={i}, d={d}: {lhs} != {rhs}")
            checks += 1
    return checks


def _suite_mass_normalization(limit: int) -> int:
    total = Fraction(0)
    for i in range(1, limit + 1):
        total += Fraction(1, i * (i + 1))
        if total != Fraction(i, i + 1):
            raise _VerifyFailure(f"partial mass at i={i} is {total}, expected {Fraction(i, i + 1)}")
    return limit


def _suite_dilation(cases: int) -> int:
    rng = random.Random(0x5EED)
    fams = [builtin_family("two-fork"), builtin_family("chain:2")]
    for _ in range(cases):
        d = rng.randint(1, 12)
        t = d + rng.randint(0, 40)
        m = rng.randint(2, 5)
        comp = rooted_component(d, t)
        scaled = divisor_connected_component([m * v for v in range(d, t + 1)], m * d)
        if tuple(m * v for v in comp.elements) != scaled:
            raise _VerifyFailure(f"scaled component mismatch for d={d}, t={t}, m={m}")
        fam = fams[rng.randrange(len(fams))]
        for mode in (DENSITY, COUNTING):
            rec = solve_block(comp, fam, mode)
            idx = scaled.index(m * d)
            rec_scaled = solve_block(RootedComponent(elements=scaled, root_index=idx), fam, mode)
            if local_increment(rec, mode) != local_increment(rec_scaled, mode):
                raise _VerifyFailure(f"increment changes under dilation: d={d}, t={t}, m={m}, mode={mode.tag}")
        sample = [v for v in range(1, 31) if rng.random() < 0.3]
        if is_admissible(sample, fams[0]) != is_admissible([m * v for v in sample], fams[0]):
            raise _VerifyFailure(f"admissibility changes under dilation of {sample} by {m}")
    return cases


def _suite_telescoping(families: list[str], n_max: int) -> int:
    checks = 0
    for name in families:
        fam = builtin_family(name)
        for n in range(1, n_max + 1):
            report = telescope_check(n, fam)
            if not report["pass"]:
                raise _VerifyFailure(f"telescoping fails for {name}, n={n}: {report.get('failure')}")
            checks += 1
    return checks


def _suite_float_vs_rational(cases: list[tuple[float, float]]) -> int:
    checks = 0
    fam = builtin_family("two-fork")
    for alpha, budget in cases:
        params = TruncationParams(alpha=alpha, budget_B=budget)
        for mode in (DENSITY, COUNTING):
            est = evaluate(fam, mode, params)
            ref_s, ref_w = exact_reference_series(fam, mode, params)
            if abs(est.S - float(ref_s)) > 1e-9:
                raise _VerifyFailure(
                    f"S mismatch at alpha={alpha}, B={budget}, mode={mode.tag}: {est.S} vs {float(ref_s)}"
                )
            if abs(est.W - float(ref_w)) > 1e-9:
                raise _VerifyFailure(
                    f"W mismatch at alpha={alpha}, B={budget}, mode={mode.tag}: {est.W} vs {float(ref_w)}"
                )
            checks += 1
    return checks


def _suite_cache_robustness() -> int:
    fam = builtin_family("two-fork")
    params = TruncationParams(alpha=10.0, budget_B=64.0)
    clean = evaluate(fam, DENSITY, params)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "blocks.tsv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("not a record\n")
            fh.write("bad\tfields\n")
            fh.write("deadbeef\tdensity\t1,2\t1\t9\t9\t-\t-\n")
        cache = BlockCache(path)
        est = evaluate(fam, DENSITY, params, cache)
        if (est.S, est.W) != (clean.S, clean.W):
            raise _VerifyFailure("corrupted cache changed the evaluation result")
        warm = evaluate(fam, DENSITY, params, BlockCache(path))
        if (warm.S, warm.W) != (clean.S, clean.W):
            raise _VerifyFailure("reloaded cache changed the evaluation result")
    return 3


_TELESCOPE_FAMILIES = ["two-fork", "r-fork:3", "in-fork:2", "chain:2", "chain:3", "forest"]


def cmd_verify(args: argparse.Namespace) -> int:
    full = args.level == "full"
    suites = [
        ("weight-identity", lambda: _suite_weight_identity(50 if full else 20)),
        ("mass-normalization", lambda: _suite_mass_normalization(30)),
        ("dilation", lambda: _suite_dilation(60 if full else 15)),
        (
            "telescoping",
            lambda: _suite_telescoping(
                _TELESCOPE_FAMILIES if full else ["two-fork", "chain:2", "forest"],
                18 if full else 8,
            ),
        ),
        (
            "float-vs-rational",
            lambda: _suite_float_vs_rational(
                [(10.0, 1e4), (3.0, 1e3)] if full else [(10.0, 100.0), (3.0, 200.0)]
            ),
        ),
        ("cache-robustness", _suite_cache_robustness),
    ]
    for name, run in suites:
        try:
            checks = run()
        except _VerifyFailure as exc:
            print(f"{name}: FAIL: {exc}")
            return 1
        print(f"{name}: pass ({checks} checks)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="divbound",
        description="Certified bounds for divisor-graph pattern avoidance.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bound = sub.add_parser("bound", help="evaluate the truncated series and print the certified interval")
    bound.add_argument("--family", required=True, help="two-fork | r-fork:R | in-fork:R | chain:K | forest | file:PATH")
    bound.add_argument("--mode", default="density", help="density | beta | pressure:Z")
    bound.add_argument("--alpha", type=float, default=10.0, help="truncation exponent (default 10)")
    bound.add_argument("--budget", type=float, default=1e8, help="truncation budget B (default 1e8)")
    bound.add_argument("--cache", default=None, help="block cache file (TSV, append-only)")
    bound.add_argument("--threads", type=int, default=1, help="worker threads for block solves")
    bound.add_argument("--format", choices=("json", "csv"), default="json")
    bound.add_argument(
        "--exact-reference",
        action="store_true",
        help="evaluate per-triple in exact rational arithmetic (budgets <= 1e4)",
    )
    bound.set_defaults(func=cmd_bound)

    oracle = sub.add_parser("oracle", help="brute-force f and q plus the telescoping gate")
    oracle.add_argument("--n", type=int, required=True, help="interval endpoint, at most 24")
    oracle.add_argument("--family", required=True)
    oracle.set_defaults(func=cmd_oracle)

    verify = sub.add_parser("verify", help="run the invariant suites")
    verify.add_argument("--level", choices=("quick", "full"), default="quick")
    verify.set_defaults(func=cmd_verify)

    blocks = sub.add_parser("blocks", help="show the highest-weight blocks of a truncation")
    blocks.add_argument("--family", required=True)
    blocks.add_argument("--mode", default="density")
    blocks.add_argument("--alpha", type=float, default=10.0)
    blocks.add_argument("--budget", type=float, default=1e8)
    blocks.add_argument("--top", type=int, default=10)
    blocks.set_defaults(func=cmd_blocks)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (PatternError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
