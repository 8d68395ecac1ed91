"""Command-line entry point.

Subcommands: ``model verify``, ``dga verify --suite {shifts|equivariance|
cartan|flat}``, ``tube {analyze|paper-example|profile}``, ``expr {eval|
diff|zero}``.  One JSON (or text) report goes to stdout (or --out FILE).
Exit codes: 0 pass, 1 fail, 2 usage or input error, 3 inconclusive.
Reports are byte-deterministic for a fixed seed apart from the timing
field.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__, dga, model, tube
from .parsing import parse
from .report import FAIL, INCONCLUSIVE, PASS, Report
from .scalars import (
    DomainEvalError,
    ExprError,
    ParseError,
    VariableTable,
    ZeroTestInconclusiveError,
    differentiate,
    evaluate,
    is_identically_zero,
    to_text,
)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3


def parse_box(text: str) -> dict:
    """Parse 't1=0.02:0.08,t2=0.02:0.08' into interval pairs."""
    box = {}
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "=" not in piece or ":" not in piece:
            raise ValueError(f"bad box entry {piece!r}; expected name=lo:hi")
        name, rng = piece.split("=", 1)
        lo, hi = rng.split(":", 1)
        lo_f, hi_f = float(lo), float(hi)
        if not lo_f < hi_f:
            raise ValueError(f"empty interval for {name.strip()!r}")
        box[name.strip()] = (lo_f, hi_f)
    if not box:
        raise ValueError("empty box")
    return box


def parse_declarations(text: str) -> VariableTable:
    """Parse 't1:real,t2:real,u:positive,a:unit,b~bb,lam:imaginary'."""
    table = VariableTable()
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "~" in piece:
            name, partner = (p.strip() for p in piece.split("~", 1))
            table.pair(name, partner)
            continue
        if ":" not in piece:
            raise ValueError(f"bad declaration {piece!r}; expected name:kind")
        name, kind = (p.strip() for p in piece.split(":", 1))
        if kind == "real":
            table.real(name)
        elif kind == "positive":
            table.positive(name)
        elif kind == "imaginary":
            table.imaginary(name)
        elif kind in ("unit", "unit_modulus"):
            table.unit_modulus(name)
        else:
            raise ValueError(f"unknown variable kind {kind!r}")
    return table


def parse_bindings(text: str) -> dict:
    out = {}
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        name, value = piece.split("=", 1)
        out[name.strip()] = complex(value.strip().replace("j", "j"))
    return out


def _emit(report: Report, args) -> int:
    payload = report.to_json() if args.format == "json" else report.to_text()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        sys.stdout.write(payload + "\n")
    return {PASS: EXIT_PASS, FAIL: EXIT_FAIL,
            INCONCLUSIVE: EXIT_INCONCLUSIVE}[report.overall]


def _cmd_model_verify(args) -> int:
    structure = model.verify_structure_equations()
    adjoint = model.verify_adjoint_transforms()
    report = Report("model verification")
    report.config = {"tool_version": __version__}
    report.checks = structure.checks + adjoint.checks
    report.timing_s = (structure.timing_s or 0) + (adjoint.timing_s or 0)
    return _emit(report, args)


def _cmd_dga_verify(args) -> int:
    suites = {
        "shifts": dga.verify_gauge_shifts,
        "equivariance": dga.verify_equivariance,
        "cartan": dga.verify_cartan_criterion,
        "flat": dga.verify_flat_consistency,
    }
    report = suites[args.suite]()
    report.config = {"tool_version": __version__, "suite": args.suite}
    return _emit(report, args)


def _cmd_tube_analyze(args) -> int:
    box = parse_box(args.box)
    if "t1" not in box or "t2" not in box:
        raise ValueError("box must cover t1 and t2")
    report = tube.analyze(args.rho, box, trials=args.trials, seed=args.seed,
                          tol=args.tol)
    report.config["tool_version"] = __version__
    report.config["rho"] = args.rho
    return _emit(report, args)


def _cmd_tube_paper_example(args) -> int:
    box = parse_box(args.box) if args.box else {"t1": (0.02, 0.08),
                                                "t2": (0.02, 0.08)}
    report = tube.analyze(tube.paper_example_rho(), box, trials=args.trials,
                          seed=args.seed, tol=args.tol)
    report.config["tool_version"] = __version__
    report.config["rho"] = tube.paper_example_rho()
    return _emit(report, args)


def _cmd_tube_profile(args) -> int:
    rho = tube.ma_profile_solution(args.g)
    box = parse_box(args.box) if args.box else {"t1": (0.5, 1.0),
                                                "t2": (0.5, 1.0)}
    report = tube.analyze(rho, box, trials=args.trials, seed=args.seed,
                          tol=args.tol)
    report.config["tool_version"] = __version__
    report.config["g"] = args.g
    report.config["rho"] = to_text(rho)
    return _emit(report, args)


def _cmd_expr(args) -> int:
    table = parse_declarations(args.vars) if args.vars else VariableTable()
    expr = parse(args.expr, table)
    report = Report(f"expression {args.expr_command}")
    report.config = {"tool_version": __version__, "expr": args.expr}
    if args.expr_command == "eval":
        point = parse_bindings(args.at)
        value = evaluate(expr, point)
        report.add("evaluate", True,
                   {"at": {k: str(v) for k, v in point.items()},
                    "value": f"{value.real!r}{value.imag:+}j"})
    elif args.expr_command == "diff":
        d = differentiate(expr, table[args.by])
        report.add("differentiate", True, {"by": args.by, "result": to_text(d)})
    else:  # zero
        box = parse_box(args.box)
        try:
            verdict = is_identically_zero(expr, box, trials=args.trials,
                                          seed=args.seed, tol=args.tol)
            report.add("zero test", True,
                       {"identically_zero": verdict, "trials": args.trials})
        except ZeroTestInconclusiveError as exc:
            report.add("zero test", INCONCLUSIVE, {"reason": str(exc)})
    return _emit(report, args)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--out", help="write the report to a file")

    parser = argparse.ArgumentParser(
        prog="crc",
        description="verification and curvature calculator for rank-1 Levi "
                    "degenerate CR structures")
    sub = parser.add_subparsers(dest="command", required=True)

    p_model = sub.add_parser("model", help="homogeneous model suites")
    model_sub = p_model.add_subparsers(dest="model_command", required=True)
    model_sub.add_parser("verify", parents=[common])

    p_dga = sub.add_parser("dga", help="abstract normalization suites")
    dga_sub = p_dga.add_subparsers(dest="dga_command", required=True)
    p_dga_verify = dga_sub.add_parser("verify", parents=[common])
    p_dga_verify.add_argument("--suite", required=True,
                              choices=("shifts", "equivariance", "cartan", "flat"))

    p_tube = sub.add_parser("tube", help="tube hypersurface pipeline")
    tube_sub = p_tube.add_subparsers(dest="tube_command", required=True)
    p_analyze = tube_sub.add_parser("analyze", parents=[common])
    p_analyze.add_argument("--rho", required=True)
    p_analyze.add_argument("--box", required=True,
                           help="t1=lo:hi,t2=lo:hi")
    p_paper = tube_sub.add_parser("paper-example", parents=[common])
    p_paper.add_argument("--box")
    p_profile = tube_sub.add_parser("profile", parents=[common])
    p_profile.add_argument("--g", required=True,
                           help="profile function of one variable s")
    p_profile.add_argument("--box")
    for p in (p_analyze, p_paper, p_profile):
        p.add_argument("--trials", type=int, default=32)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=1e-8)

    p_expr = sub.add_parser("expr", help="scalar expression utilities")
    expr_sub = p_expr.add_subparsers(dest="expr_command", required=True)
    p_eval = expr_sub.add_parser("eval", parents=[common])
    p_eval.add_argument("--at", required=True, help="t1=0.05,t2=0.05")
    p_diff = expr_sub.add_parser("diff", parents=[common])
    p_diff.add_argument("--by", required=True)
    p_zero = expr_sub.add_parser("zero", parents=[common])
    p_zero.add_argument("--box", required=True)
    p_zero.add_argument("--trials", type=int, default=16)
    p_zero.add_argument("--seed", type=int, default=0)
    p_zero.add_argument("--tol", type=float, default=1e-9)
    for p in (p_eval, p_diff, p_zero):
        p.add_argument("--expr", required=True)
        p.add_argument("--vars", default="t1:real,t2:real",
                       help="declarations, e.g. t1:real,u:positive,b~bb")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        for key, value in (("trials", None), ("tol", None)):
            if getattr(args, key, None) is not None and getattr(args, key) <= 0:
                raise ValueError(f"--{key} must be positive")
        if args.command == "model":
            return _cmd_model_verify(args)
        if args.command == "dga":
            return _cmd_dga_verify(args)
        if args.command == "tube":
            if args.tube_command == "analyze":
                return _cmd_tube_analyze(args)
            if args.tube_command == "paper-example":
                return _cmd_tube_paper_example(args)
            return _cmd_tube_profile(args)
        if args.command == "expr":
            return _cmd_expr(args)
        parser.error(f"unknown command {args.command}")
    except (ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ZeroTestInconclusiveError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (DomainEvalError, ExprError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
