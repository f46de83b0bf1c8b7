"""Command-line front end: generate, solve, verify, and benchmark instances.

Machine-parsable JSON goes to standard output only; human-readable tables go
to standard error under --pretty.  Exit codes: 0 success, 1 error,
2 infeasible/unbounded (for verify: 2 means the solution failed the bar).
"""

from __future__ import annotations

import argparse
import statistics
import sys
from pathlib import Path

import numpy as np

from . import serialize
from .errors import EqcqpError, InfeasibleConstraint, ParseError, ScaleGuard
from .instances import GenSpec, gen
from .oracle import classify_validity, oracle_minimum
from .solver import SolveOptions, SolveStatus, solve_report
from .transform import Kind

_KIND_CHOICES = [k.value for k in Kind]
_ORACLE_GAP_MAX_N = 20


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EqcqpError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqcqp",
        description="Solve quadratic programs with one quadratic equality constraint.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="write random instance files")
    p_gen.add_argument("kind", choices=_KIND_CHOICES)
    p_gen.add_argument("n", type=int, help="dimension (n1 for the matrix kind)")
    p_gen.add_argument("count", type=int)
    p_gen.add_argument("seed", type=int, help="seeds used: seed .. seed+count-1")
    p_gen.add_argument("--out", default=".", help="output directory")
    p_gen.add_argument("--epsilon", type=float, default=0.1)
    p_gen.set_defaults(func=_cmd_gen)

    p_solve = sub.add_parser("solve", help="solve one instance file")
    p_solve.add_argument("in_path")
    p_solve.add_argument("--out", help="also write the solution JSON here")
    _add_tol_flags(p_solve)
    p_solve.add_argument("--pretty", action="store_true")
    p_solve.set_defaults(func=_cmd_solve)

    p_verify = sub.add_parser("verify", help="recheck a solution file against its instance")
    p_verify.add_argument("in_path")
    p_verify.add_argument("sol_path")
    p_verify.add_argument("--pretty", action="store_true")
    p_verify.set_defaults(func=_cmd_verify)

    p_bench = sub.add_parser("bench", help="solve batches of random instances and report")
    p_bench.add_argument("kind", choices=_KIND_CHOICES)
    p_bench.add_argument("sizes", help="comma-separated dimensions, e.g. 5,20,100")
    p_bench.add_argument("count", type=int, help="instances per size")
    p_bench.add_argument("--seed", type=int, default=1)
    p_bench.add_argument("--out", help="also write the report JSON here")
    _add_tol_flags(p_bench)
    p_bench.add_argument("--pretty", action="store_true")
    p_bench.set_defaults(func=_cmd_bench)
    return parser


def _add_tol_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--tol-lambda", type=float, default=None)
    sub.add_argument("--tol-f", type=float, default=None)
    sub.add_argument("--tol-b", type=float, default=None)
    sub.add_argument("--eps-rank", type=float, default=None)
    sub.add_argument("--max-iter", type=int, default=None)


def _options(args) -> SolveOptions:
    kwargs = {}
    for attr, flag in (("tol_lambda", "tol_lambda"), ("tol_f", "tol_f"),
                       ("tol_b", "tol_b"), ("eps_rank", "eps_rank"),
                       ("max_iter", "max_iter")):
        value = getattr(args, flag, None)
        if value is not None:
            kwargs[attr] = value
    return SolveOptions(**kwargs)


def _cmd_gen(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for i in range(args.count):
        seed = args.seed + i
        spec = GenSpec(kind=Kind(args.kind), n=args.n, seed=seed, epsilon=args.epsilon)
        instance = gen(spec)
        path = outdir / f"{args.kind}_n{args.n}_seed{seed}.json"
        serialize.save_instance(instance, path, seed=seed)
        written.append(str(path))
    print(serialize.dumps({"written": written}))
    return 0


def _record(instance, seed, report) -> dict:
    sol = report.solution
    return {
        "kind": instance.kind.value,
        "n": instance.n,
        "seed": seed,
        "status": sol.status.value,
        "lambda_star": float(sol.lambda_star),
        "objective": float(sol.objective),
        "constraint_residual": float(sol.constraint_residual),
        "kkt_stationarity": float(report.kkt.stationarity),
        "second_order_min_eig": float(report.kkt.second_order_min_eig),
        "valid": classify_validity(sol),
        "wall_time_seconds": float(report.wall_time_seconds),
    }


def _cmd_solve(args) -> int:
    instance, seed = serialize.load_instance(args.in_path)
    opts = _options(args)
    try:
        report = solve_report(instance, opts)
    except InfeasibleConstraint as exc:
        record = {"kind": instance.kind.value, "n": instance.n, "seed": seed,
                  "status": SolveStatus.INFEASIBLE.value, "diagnostic": str(exc)}
        print(serialize.dumps(record))
        return 2
    record = _record(instance, seed, report)
    if report.solution.diagnostic:
        record["diagnostic"] = report.solution.diagnostic
    if report.solution.x is not None:
        record["x"] = serialize.encode_array(report.solution.x)
    text = serialize.dumps(record)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    if args.pretty:
        sol = report.solution
        print(f"status={sol.status.value} lambda={sol.lambda_star:.12g} "
              f"objective={sol.objective:.12g} residual={sol.constraint_residual:.3e} "
              f"iters={sol.iterations}", file=sys.stderr)
    return 0 if report.solution.status.is_solved else 2


def _verify_forms(raw: dict, x: np.ndarray):
    """Objective/constraint values straight from the stored numbers; shares
    nothing with the solver beyond the file format."""
    if raw["kind"] == Kind.MATRIX_COMPLEX.value:
        A0 = serialize.decode_complex(raw["A0"], "A0")
        A1 = serialize.decode_complex(raw["A1"], "A1")
        B0 = serialize.decode_complex(raw["b0"], "b0")
        B1 = serialize.decode_complex(raw["b1"], "b1")
        objective = (np.sum(x.conj() * (A0 @ x)).real
                     + 2.0 * np.sum(B0.conj() * x).real + raw["c0"])
        constraint = (np.sum(x.conj() * (A1 @ x)).real
                      + 2.0 * np.sum(B1.conj() * x).real + raw["c1"])
        return float(objective), float(constraint)
    A0 = serialize.decode_real(raw["A0"], "A0")
    A1 = serialize.decode_real(raw["A1"], "A1")
    b0 = serialize.decode_real(raw["b0"], "b0")
    b1 = serialize.decode_real(raw["b1"], "b1")
    objective = x @ A0 @ x + 2.0 * b0 @ x + raw["c0"]
    constraint = x @ A1 @ x + 2.0 * b1 @ x + raw["c1"]
    return float(objective), float(constraint)


def _cmd_verify(args) -> int:
    raw = serialize.load_raw(args.in_path)
    sol = serialize.load_raw(args.sol_path)
    if "x" not in sol:
        raise ParseError("solution file carries no variable to verify")
    if raw.get("kind") == Kind.MATRIX_COMPLEX.value:
        x = serialize.decode_complex(sol["x"], "x")
    else:
        x = serialize.decode_real(sol["x"], "x")
    objective, constraint = _verify_forms(raw, x)
    residual = abs(constraint)
    scale = 1.0 + abs(raw["c1"])
    result = {
        "objective": objective,
        "constraint_residual": residual,
        "scaled_residual": residual / scale,
        "valid": residual <= 1e-5,
    }
    if "A2" in raw:
        A2 = serialize.decode_real(raw["A2"], "A2")
        b2 = serialize.decode_real(raw["b2"], "b2")
        linear = float(np.max(np.abs(A2 @ x - b2))) if len(b2) else 0.0
        result["linear_residual"] = linear
        result["valid"] = bool(result["valid"] and linear <= 1e-8 * (1.0 + float(np.max(np.abs(b2)))))
    if raw.get("n", 0) <= _ORACLE_GAP_MAX_N:
        try:
            best = oracle_minimum(serialize.instance_from_dict(raw))
            result["oracle_gap"] = abs(objective - best)
        except (ScaleGuard, EqcqpError):
            pass
    print(serialize.dumps(result))
    if args.pretty:
        print(f"valid={result['valid']} residual={residual:.3e}", file=sys.stderr)
    return 0 if result["valid"] else 2


def _cmd_bench(args) -> int:
    sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()]
    opts = _options(args)
    records = []
    by_n = []
    for n in sizes:
        rows = []
        for i in range(args.count):
            seed = args.seed + i
            instance = gen(GenSpec(kind=Kind(args.kind), n=n, seed=seed))
            report = solve_report(instance, opts)
            rows.append(_record(instance, seed, report))
        records.extend(rows)
        if rows:
            by_n.append({
                "n": n,
                "count": len(rows),
                "validity_ratio": sum(r["valid"] for r in rows) / len(rows),
                "max_residual": max(r["constraint_residual"] for r in rows),
                "median_time": statistics.median(r["wall_time_seconds"] for r in rows),
            })
    aggregate = {
        "validity_ratio": (sum(r["valid"] for r in records) / len(records)) if records else None,
        "max_residual": max((r["constraint_residual"] for r in records), default=None),
        "median_time": statistics.median([r["wall_time_seconds"] for r in records]) if records else None,
    }
    report_data = {"records": records, "by_n": by_n, "aggregate": aggregate}
    text = serialize.dumps(report_data)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    if args.pretty:
        print("n\tcount\tvalidity\tmax_residual\tmedian_time", file=sys.stderr)
        for row in by_n:
            print(f"{row['n']}\t{row['count']}\t{row['validity_ratio']:.3f}\t"
                  f"{row['max_residual']:.3e}\t{row['median_time']:.6f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
