"""Command-line front end.

Exit codes: 0 success, 2 bad input (spec parse error, missing file, wrong
arrival domain), 3 unstable model, 4 solver failure (root count, singular
system), 5 simulation disagrees with the analytic answer.
Data goes to stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from decimal import ROUND_DOWN, Decimal
from typing import Optional, Sequence

import numpy as np

from .ctlimit import DEFAULT_DELTA, ct_solve
from .errors import (
    DegreeOverflow,
    ModelSpecError,
    RepeatedRoot,
    RootCountMismatch,
    SingularSystem,
    Unstable,
)
from .sim import SimConfig, compare, scaled_tvd_threshold, simulate
from .specfile import ModelSpec, emit_spec, load_spec
from .steady import EpochDist, solve

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_UNSTABLE = 3
EXIT_SOLVER = 4
EXIT_COMPARE = 5

DEFAULT_SLOTS = 10_000_000
NEG_CLAMP = 1e-10
SIX_DP = Decimal("0.000001")


class _KindError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eas-queue", description="Batch-arrival batch-service queue solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    def output_flags(p, epochs=True):
        if epochs:
            p.add_argument("--epochs", choices=("pre", "arb", "both"), default="both")
        p.add_argument("--n-max", type=int, default=None, help="last queue length printed")
        p.add_argument("--format", choices=("table", "csv", "json-lines"), default="table")

    def sim_flags(p):
        p.add_argument("--slots", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("solve", help="analytic distributions of a discrete-time model")
    p.add_argument("spec")
    output_flags(p)

    p = sub.add_parser("ct-solve", help="analytic distributions of a continuous-time model")
    p.add_argument("spec")
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="slot width used to seed the roots")
    output_flags(p)

    p = sub.add_parser("simulate", help="empirical distributions from a slotted simulation")
    p.add_argument("spec")
    sim_flags(p)
    output_flags(p)

    p = sub.add_parser("compare", help="simulate and test agreement with the analytic answer")
    p.add_argument("spec")
    sim_flags(p)
    p.add_argument("--tvd-threshold", type=float, default=None, help="default scales with 1/sqrt(slots)")
    p.add_argument("--z-threshold", type=float, default=4.0)

    p = sub.add_parser("echo-spec", help="print the normalized spec")
    p.add_argument("spec")
    return parser


def _fmt17(x) -> str:
    return "" if x is None else format(float(x), ".17g")


def _emit(columns, rows, footers, fmt, out) -> None:
    """``rows`` hold numbers (``None`` for blanks); footers are (label, values)."""
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([row[0], *(_fmt17(v) for v in row[1:])])
        for label, vals in footers:
            w.writerow([label, *(_fmt17(v) for v in vals)])
        return
    if fmt == "json-lines":
        for row in rows:
            out.write(json.dumps(dict(zip(columns, [row[0], *(_jsonable(v) for v in row[1:])]))) + "\n")
        for label, vals in footers:
            out.write(json.dumps(dict(zip(columns, [label, *(_jsonable(v) for v in vals)]))) + "\n")
        return

    body = [[str(r[0]), *(_cell(v) for v in r[1:])] for r in rows]
    body += [[label, *(_cell(v) for v in vals)] for label, vals in footers]
    widths = [max(len(c), *(len(r[i]) for r in body)) for i, c in enumerate(columns)]
    out.write("  ".join(c.rjust(w) for c, w in zip(columns, widths)).rstrip() + "\n")
    for i, r in enumerate(body):
        if i == len(rows):
            out.write("  ".join("-" * w for w in widths) + "\n")
        out.write("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() + "\n")


def _cell(v) -> str:
    """Six decimals, truncated rather than rounded; roundoff negatives show as 0."""
    if v is None:
        return ""
    v = float(v)
    if not math.isfinite(v):
        return str(v)
    if -NEG_CLAMP <= v < 0.0:
        v = 0.0
    return str(Decimal(repr(v)).quantize(SIX_DP, rounding=ROUND_DOWN))


def _jsonable(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _ratio(p: np.ndarray) -> list:
    out = []
    for a, b in zip(p[:-1], p[1:]):
        out.append(b / a if a != 0.0 else None)
    return out


def _print_analytic(pre: EpochDist, arb: EpochDist, args, spec: ModelSpec, out) -> None:
    n_max = args.n_max if args.n_max is not None else spec.n_max
    if n_max is None:
        n_max = max(pre.cutoff(), arb.cutoff())
    ns = np.arange(n_max + 2)
    cols, series, means = ["n"], [], []
    if args.epochs in ("pre", "both"):
        cols.append("p_n^-")
        series.append(pre.probs(ns))
        means.append(pre.mean)
    if args.epochs in ("arb", "both"):
        cols.append("p_n")
        series.append(arb.probs(ns))
        means.append(arb.mean)
    cols.append("ratio")
    ratio = _ratio(series[0])
    rows = [[n, *(s[n] for s in series), ratio[n]] for n in range(n_max + 1)]
    footers = [
        ("sum", [float(s[: n_max + 1].sum()) for s in series] + [None]),
        ("mean", means + [None]),
    ]
    _emit(cols, rows, footers, args.format, out)


def _require(spec: ModelSpec, continuous: bool, command: str) -> None:
    if spec.continuous != continuous:
        want = "continuous" if continuous else "discrete"
        other = "solve" if continuous else "ct-solve"
        raise _KindError(f"{command} needs a {want} arrival spec (arrival.domain); use '{other}' instead")


def _cmd_solve(args, spec, out) -> int:
    _require(spec, False, "solve")
    sol = solve(spec.model)
    _print_analytic(sol.pre_arrival, sol.arbitrary, args, spec, out)
    return EXIT_OK


def _cmd_ct_solve(args, spec, out) -> int:
    _require(spec, True, "ct-solve")
    sol = ct_solve(spec.model, args.delta)
    _print_analytic(sol.pre_arrival, sol.arbitrary, args, spec, out)
    return EXIT_OK


def _sim_config(args, spec: ModelSpec) -> SimConfig:
    slots = args.slots if args.slots is not None else (spec.slots or DEFAULT_SLOTS)
    seed = args.seed if args.seed is not None else (spec.seed or 0)
    return SimConfig(slots=slots, seed=seed)


def _cmd_simulate(args, spec, out) -> int:
    _require(spec, False, "simulate")
    cfg = _sim_config(args, spec)
    arb, pre = simulate(spec.model, cfg)
    overflow = max(arb.counts[-1] / arb.total, pre.counts[-1] / max(pre.total, 1))
    if overflow > 0:
        print(f"warning: {overflow:.3g} of the mass exceeded histogram_cap={cfg.histogram_cap}", file=sys.stderr)
    n_max = args.n_max if args.n_max is not None else spec.n_max
    if n_max is None:
        used = np.flatnonzero((arb.counts[:-1] + pre.counts[:-1]) > 0)
        n_max = int(used[-1]) if used.size else 0
    n_max = min(n_max, cfg.histogram_cap)
    cols, series = ["n"], []
    picked = []
    if args.epochs in ("pre", "both"):
        picked.append(("p_n^-", pre))
    if args.epochs in ("arb", "both"):
        picked.append(("p_n", arb))
    for name, dist in picked:
        cols += [name, f"hw95({name})"]
        series += [dist.probs, dist.half_width_95]
    rows = [[n, *(s[n] for s in series)] for n in range(n_max + 1)]
    sums, means = [], []
    ks = np.arange(len(arb.counts))
    for _, dist in picked:
        sums += [float(dist.probs[: n_max + 1].sum()), None]
        means += [float((ks * dist.probs).sum()), None]
    _emit(cols, rows, [("sum", sums), ("mean", means)], args.format, out)
    print(f"slots={cfg.slots} seed={cfg.seed} arrivals={pre.total} observed={arb.total}", file=sys.stderr)
    return EXIT_OK


def _cmd_compare(args, spec, out) -> int:
    _require(spec, False, "compare")
    cfg = _sim_config(args, spec)
    sol = solve(spec.model)
    arb, pre = simulate(spec.model, cfg)
    tvd = args.tvd_threshold if args.tvd_threshold is not None else scaled_tvd_threshold(cfg.slots)
    ok = True
    for analytic, empirical in ((sol.pre_arrival, pre), (sol.arbitrary, arb)):
        rep = compare(analytic, empirical, tvd_threshold=tvd, z_threshold=args.z_threshold)
        print(rep.summary(), file=out)
        ok &= rep.passed
    return EXIT_OK if ok else EXIT_COMPARE


def _cmd_echo(args, spec, out) -> int:
    out.write(emit_spec(spec))
    return EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "ct-solve": _cmd_ct_solve,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
    "echo-spec": _cmd_echo,
}


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        spec = load_spec(args.spec)
        return _COMMANDS[args.command](args, spec, out)
    except (ModelSpecError, _KindError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except Unstable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (RootCountMismatch, SingularSystem, RepeatedRoot, DegreeOverflow) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
