"""Command-line frontend.

Every command prints a JSON document on stdout. Exit codes: 0 success,
1 a reproduction check failed, 2 invalid input, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis, constraints, equilibrium, oracle, precise_silence, reporting, vague_partition
from .distributions import Distribution, Family, Uniform, Normal, from_spec
from .errors import GatekeepingError, SolverError, ValidationError

EXIT_OK, EXIT_MISMATCH, EXIT_VALIDATION, EXIT_SOLVER = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = f"{x:.17g}"
    # keep floats recognisable as floats
    if all(c in "-0123456789" for c in s):
        s += ".0"
    return s


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every real written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    return json.dumps(str(obj))


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------


def _load_json(text: str, field: str):
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text()
        except OSError as exc:
            raise ValidationError(f"{field}: cannot read {text[1:]}: {exc.strerror}", code=field) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{field}: malformed JSON ({exc.msg})", code=field) from None


def _dist(args) -> Distribution:
    if args.dist is None:
        raise ValidationError("--dist is required", code="dist")
    return from_spec(_load_json(args.dist, "dist"))


def _partition(args, d: Distribution) -> vague_partition.Partition:
    raw = _load_json(args.partition, "partition")
    reports = None
    if isinstance(raw, dict):
        cuts = raw.get("cutoffs")
        reports = raw.get("reports")
    else:
        cuts = raw
    if not isinstance(cuts, list):
        raise ValidationError("partition: expected a cutoff list or an object with 'cutoffs'", code="partition.cutoffs")
    try:
        cuts = [float(c) for c in cuts]
        reports = None if reports is None else [float(r) for r in reports]
    except (TypeError, ValueError):
        raise ValidationError("partition: cutoffs and reports must be numbers", code="partition.cutoffs") from None
    return vague_partition.evaluate_strategy(d, cuts, args.pi_r, reports=reports)


def parse_grid(spec: str) -> list[float]:
    """``lo:hi:n`` for an even grid, or a comma-separated list."""
    try:
        if ":" in spec:
            lo, hi, n = spec.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            return [float(x) for x in np.linspace(float(lo), float(hi), n)]
        return [float(x) for x in spec.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"grid: cannot parse {spec!r}; use lo:hi:n or a comma list", code="grid") from None


def _write(path: str | None, text: str) -> None:
    if path is None:
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise ValidationError(f"output: cannot write {path}: {exc.strerror}", code="output") from None


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_report(args) -> dict:
    d = _dist(args)
    return reporting.solve_report(d, args.a, args.b, args.pi_r).to_dict()


def cmd_gamma(args) -> dict:
    d = _dist(args)
    prof = constraints.constraint_profile(d, args.pi_r)
    if args.b is None:
        return {"b_hat": prof.b_hat}
    return prof.to_dict(args.b)


def cmd_partition(args) -> dict:
    d = _dist(args)
    p = vague_partition.solve_partition(d, args.pi_r, method=args.method, grid_size=args.grid)
    if args.csv:
        rows = ["d_lo,d_hi,report,loss"]
        for (lo, hi), r, l in zip(p.intervals, p.reports, p.losses):
            rows.append(",".join(f"{v:.17g}" for v in (lo, hi, r, l)))
        _write(args.csv, "\n".join(rows) + "\n")
    return p.to_dict()


def cmd_silence(args) -> dict:
    d = _dist(args)
    if args.no_communication:
        return precise_silence.no_communication_outcome(d, args.pi_r).to_dict()
    return precise_silence.solve_silence_set(d, args.pi_r).to_dict()


def cmd_verify(args) -> dict:
    d = _dist(args)
    p = _partition(args, d)
    return equilibrium.verify_partition_equilibrium(p, d, args.pi_r).to_dict()


def cmd_gpfe(args) -> dict:
    d = _dist(args)
    p = _partition(args, d)
    return equilibrium.find_self_signaling_set(p, d, args.pi_r).to_dict()


def cmd_sweep(args) -> dict:
    if args.kind == "independence":
        d = _dist(args)
        grid = parse_grid(args.grid) if args.grid else analysis.default_pi_grid()
        rows = analysis.sweep_independence(d, grid, method=args.method, grid_size=args.dp_grid)
    else:
        if args.dist is not None:
            d = _dist(args)
            if d.family is not Family.NORMAL:
                raise ValidationError("complexity sweep needs a normal distribution", code="dist.family")
            mu, sigma0 = d.mu, d.sigma
        else:
            mu, sigma0 = args.mu, args.sigma0
        if args.pi_r is None:
            raise ValidationError("--pi-r is required", code="pi_r")
        grid = parse_grid(args.grid) if args.grid else [float(x) for x in np.linspace(0.0, 3.0, 64)]
        rows = analysis.sweep_complexity(mu, sigma0, grid, args.pi_r, grid_size=args.dp_grid)
    text = analysis.rows_to_csv(rows)
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)
    errors = [{"param": r.parameter_value, "error": r.error} for r in rows if r.error]
    return {"rows": len(rows), "errors": errors, "output": args.output}


def cmd_oracle(args) -> dict:
    d = _dist(args)
    cfg = oracle.OracleConfig(
        partition_grid_points=args.grid_points, max_intervals=args.max_intervals,
    )
    if args.mode == "report":
        if args.a is None or args.b is None:
            raise ValidationError("oracle report needs --a and --b", code="message")
        r, pay = oracle.oracle_report(d, args.a, args.b, args.pi_r, cfg)
        return {"r_star": r, "payoff": pay}
    cuts, loss = oracle.oracle_partition(d, args.pi_r, cfg)
    return {"cutoffs": cuts, "total_loss": loss, "n_intervals": len(cuts) - 1}


def _check(name, got, expected, tol):
    ok = all(abs(g - e) <= tol for g, e in zip(np.atleast_1d(got), np.atleast_1d(expected)))
    if isinstance(got, (list, tuple)):
        got, expected = list(got), list(expected)
    return {"name": name, "got": got, "expected": expected, "tol": tol, "pass": bool(ok)}


def _reproduce_uniform() -> list[dict]:
    d, pi_r = Uniform(1.0, 9.0), 1.0
    none = precise_silence.no_communication_outcome(d, pi_r)
    three = vague_partition.evaluate_strategy(d, [1.0, 2.0, 5.0, 9.0], pi_r)
    best = vague_partition.solve_uniform_closed_form(1.0, 9.0, pi_r)
    return [
        _check("no_communication.r0", none.r0, 8.0, 0.0),
        _check("no_communication.loss", none.expected_loss, float(Fraction(5, 6)), 1e-9),
        _check("three_intervals.reports", list(three.reports), [2.0, 4.0, 8.0], 0.0),
        _check("three_intervals.loss", three.total_loss, float(Fraction(7, 12)), 1e-9),
        _check("optimal.n_intervals", best.n_intervals, 5, 0),
        _check("optimal.interval_length", best.cutoffs[1] - best.cutoffs[0], 1.6, 1e-12),
        _check("optimal.loss", best.total_loss, float(Fraction(19, 75)), 1e-9),
    ]


def _reproduce_normal() -> list[dict]:
    d, pi_r = Normal(1.0, 1.0), 1.0
    none = precise_silence.no_communication_outcome(d, pi_r)
    best = precise_silence.solve_silence_set(d, pi_r)
    out = [
        _check("no_communication.r0", none.r0, 1.78, 0.01),
        _check("no_communication.loss", none.expected_loss, 0.62, 0.01),
        _check("optimal.nd_hi", best.nd_hi, 2.61, 0.01),
        _check("optimal.r0", best.r0, 1.61, 0.01),
        _check("optimal.loss", best.expected_loss, 0.56, 0.01),
    ]
    out.append({"name": "optimal.constraint_binding", "got": best.constraint_binding,
                "expected": True, "tol": 0, "pass": best.constraint_binding})
    return out


REPRODUCTIONS = {"uniform-1-9": _reproduce_uniform, "normal-silence": _reproduce_normal}


def cmd_reproduce(args) -> dict:
    checks = REPRODUCTIONS[args.case]()
    return {"case": args.case, "checks": checks, "pass": all(c["pass"] for c in checks)}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gatekeeping", description="Gatekeeping-expert equilibrium solvers.")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, fn, help_text, dist=True, pi_r=True):
        p = sub.add_parser(name, help=help_text)
        if dist:
            p.add_argument("--dist", help='JSON such as {"family": "uniform", "params": {"lower": 1, "upper": 9}}, or @file')
        if pi_r:
            p.add_argument("--pi-r", dest="pi_r", type=float, required=True, help="auditor independence")
        p.set_defaults(func=fn)
        return p

    p = add("report", cmd_report, "manager's optimal report for a message [a, b]")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)

    p = add("gamma", cmd_gamma, "acceptance constraint and relevance threshold")
    p.add_argument("--b", type=float)

    p = add("partition", cmd_partition, "auditor-optimal vague partition")
    p.add_argument("--method", choices=["auto", "dp", "closed-form"], default="auto")
    p.add_argument("--grid", type=int, default=4096, help="DP grid size")
    p.add_argument("--csv", help="write per-interval (d_lo, d_hi, report, loss) here")

    p = add("silence", cmd_silence, "optimal precise-communication silence set")
    p.add_argument("--no-communication", action="store_true", help="evaluate silence everywhere instead")

    for name, fn, text in (("verify", cmd_verify, "check a partition for profitable deviations"),
                           ("gpfe-check", cmd_gpfe, "search a partition for a self-signaling set")):
        p = add(name, fn, text)
        p.add_argument("--partition", required=True, help="cutoff list, or {cutoffs, reports}, as JSON or @file")

    p = add("sweep", cmd_sweep, "comparative statics; CSV on stdout or --output", pi_r=False)
    p.add_argument("--kind", choices=["independence", "complexity"], required=True)
    p.add_argument("--grid", help="lo:hi:n or comma list of pi_r (independence) or theta (complexity)")
    p.add_argument("--pi-r", dest="pi_r", type=float, help="fixed pi_r for the complexity sweep")
    p.add_argument("--mu", type=float, default=0.5)
    p.add_argument("--sigma0", type=float, default=1.0)
    p.add_argument("--method", choices=["auto", "dp", "closed-form"], default="auto")
    p.add_argument("--dp-grid", dest="dp_grid", type=int, default=analysis.DEFAULT_DP_GRID)
    p.add_argument("--output", help="CSV path")

    p = add("oracle", cmd_oracle, "brute-force reference solutions")
    p.add_argument("--mode", choices=["report", "partition"], required=True)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--grid-points", dest="grid_points", type=int, default=oracle.OracleConfig.partition_grid_points)
    p.add_argument("--max-intervals", dest="max_intervals", type=int, default=oracle.OracleConfig.max_intervals)

    p = add("reproduce", cmd_reproduce, "rerun the worked examples", dist=False, pi_r=False)
    p.add_argument("--case", choices=sorted(REPRODUCTIONS), required=True)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        ap.print_usage(sys.stderr)
        return EXIT_VALIDATION
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        ap.print_usage(sys.stderr)
        return EXIT_VALIDATION
    try:
        out = args.func(args)
    except ValidationError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SolverError, GatekeepingError) as exc:
        print(f"solver error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if args.command == "sweep" and not args.output:
        # the CSV already went to stdout
        print(to_json(out), file=sys.stderr)
    else:
        print(to_json(out))
    if args.command == "reproduce" and not out["pass"]:
        return EXIT_MISMATCH
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
