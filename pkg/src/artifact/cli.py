"""Command-line entry point.

Every report embeds the configuration that produced it. JSON output is
canonical (sorted keys) so that a rerun with the same arguments and seed
is byte-identical. Exit codes: 0 success, 1 a computation failed (accuracy
or a module error, reported as a JSON error record), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any

from . import __version__
from .config import McConfig, QuadratureConfig
from .errors import AccuracyError, ContractViolation, DomainError, ResourceLimitError
from .forest import DEFAULT_CAP, enumerate_forests
from .parallel import default_jobs, worker_map
from .propagator import PropagatorClass, PropagatorSpec, classify, kernel_value
from .ribbon import divergence_degree, enumerate_vacuum_graphs, from_pairing, invariants
from .wick import DEFAULT_ORDER_CAP, genus_split, log_z_series, z_series

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jobs", type=int, default=None, help="worker processes (default from ARTIFACT_JOBS, else 1)")
    common.add_argument("--output", default=None, help="write the report here instead of stdout")
    common.add_argument("--format", choices=["json", "csv", "pretty"], default="json")
    common.add_argument("--seed", type=int, default=0, help="Monte Carlo seed")

    p = argparse.ArgumentParser(prog="artifact", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("forests", parents=[common], help="enumerate forests or trees on n labelled vertices")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--trees-only", action="store_true")
    s.add_argument("--cap", type=int, default=DEFAULT_CAP)

    s = sub.add_parser("ribbon", parents=[common], help="ribbon graph invariants")
    s.add_argument("--n-vertices", type=int, required=True)
    s.add_argument("--pairing", default=None, help="slot pairs such as '1-2,3-4'")
    s.add_argument("--external", default="", help="external slots such as '3,4'")
    s.add_argument("--enumerate", action="store_true", help="all vacuum pairings (n <= 3)")

    s = sub.add_parser("series", parents=[common], help="exact perturbative coefficients")
    s.add_argument("--order", type=int, required=True)
    s.add_argument("--kind", choices=["log", "z"], default="log")
    s.add_argument("--genus", action="store_true", help="also split log Z by genus")

    s = sub.add_parser("lve", parents=[common], help="loop vertex expansion of log Z")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--N", type=int, default=1)
    s.add_argument("--orders", type=int, default=4)
    s.add_argument("--integrator", choices=["auto", "quadrature", "mc"], default="auto")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--abs-tol", type=float, default=1e-7)
    s.add_argument("--rel-tol", type=float, default=1e-10)

    s = sub.add_parser("oracle", parents=[common], help="direct reference value of Z")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--N", type=int, default=1)
    s.add_argument("--integrator", choices=["auto", "quadrature", "mc"], default="auto")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--abs-tol", type=float, default=1e-10)
    s.add_argument("--rel-tol", type=float, default=1e-10)

    s = sub.add_parser("compare", parents=[common], help="tree expansion vs Wick series, exactly")
    s.add_argument("--order", type=int, default=4)

    s = sub.add_parser("propagator", parents=[common], help="matrix-base kernels and classification")
    s.add_argument("--class", dest="cls", default=None, help="SelfDual or SelfDualCovariant")
    s.add_argument("--omega", type=float, default=1.0)
    s.add_argument("--A", type=float, default=1.0)
    s.add_argument("--size", type=int, default=5)
    s.add_argument("--covariant", action="store_true")
    s.add_argument("--classify", action="store_true", help="only classify (omega, covariant)")
    return p


# validation ----------------------------------------------------------------

def _validate(args) -> None:
    if args.jobs is not None and args.jobs < 1:
        raise UsageError("--jobs must be positive")
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must fit in 64 unsigned bits")
    cmd = args.command
    if cmd == "forests" and not 1 <= args.n <= args.cap:
        raise UsageError(f"--n must lie in 1..{args.cap}")
    if cmd == "ribbon":
        if args.n_vertices < 1:
            raise UsageError("--n-vertices must be positive")
        if args.enumerate and args.n_vertices > 3:
            raise UsageError("--enumerate supports at most 3 vertices")
        if not args.enumerate and args.pairing is None:
            raise UsageError("give --pairing or --enumerate")
    if cmd in ("series", "compare") and not 0 <= args.order <= DEFAULT_ORDER_CAP:
        raise UsageError(f"--order must lie in 0..{DEFAULT_ORDER_CAP}")
    if cmd in ("lve", "oracle"):
        if not (args.lam >= 0 and math.isfinite(args.lam)):
            raise UsageError("--lambda must be finite and non-negative")
        if args.N < 1:
            raise UsageError("--N must be positive")
        if args.samples < 1:
            raise UsageError("--samples must be positive")
    if cmd == "lve":
        from .lve import DEFAULT_TREE_CAP

        if not 1 <= args.orders <= DEFAULT_TREE_CAP:
            raise UsageError(f"--orders must lie in 1..{DEFAULT_TREE_CAP}")
    if cmd == "propagator" and args.size < 1:
        raise UsageError("--size must be positive")


def _pairs(text: str) -> list[tuple[int, int]]:
    out = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        try:
            a, b = item.split("-")
            out.append((int(a), int(b)))
        except ValueError:
            raise UsageError(f"bad pair {item!r}; expected 'a-b'") from None
    return out


def _slots(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad slot list {text!r}") from None


def _integrator(args, n_default_quadrature: bool):
    kind = args.integrator
    if kind == "auto":
        kind = "quadrature" if n_default_quadrature else "mc"
    if kind == "quadrature":
        return QuadratureConfig(abs_tol=args.abs_tol, rel_tol=args.rel_tol)
    return McConfig(seed=args.seed, samples=args.samples)


# commands ------------------------------------------------------------------

def _cmd_forests(args, map_fn) -> tuple[dict, list[list[Any]], str]:
    fs = enumerate_forests(args.n, trees_only=args.trees_only, cap=args.cap)
    report = {"count": len(fs), "forests": [[list(e) for e in f.edges] for f in fs]}
    rows = [["index", "edges"]] + [[k, ";".join(f"{i}-{j}" for i, j in f.edges)] for k, f in enumerate(fs)]
    kind = "trees" if args.trees_only else "forests"
    text = f"{len(fs)} {kind} on {args.n} vertices\n" + "\n".join(
        "{" + ", ".join(f"({i},{j})" for i, j in f.edges) + "}" for f in fs
    )
    return report, rows, text


def _graph_record(g) -> dict:
    inv = invariants(g)
    rec = {"graph": g.to_dict(), "invariants": inv.to_dict()}
    if inv.connected:
        rec["divergence"] = divergence_degree(inv).to_dict()
    return rec


def _cmd_ribbon(args, map_fn):
    if args.enumerate:
        graphs = list(enumerate_vacuum_graphs(args.n_vertices))
    else:
        graphs = [from_pairing(args.n_vertices, _pairs(args.pairing), _slots(args.external))]
    recs = [_graph_record(g) for g in graphs]
    report = {"graphs": recs}
    header = ["pairing", "external", "V", "E", "F", "g", "B", "connected", "ext"]
    rows = [header]
    lines = []
    for r in recs:
        inv = r["invariants"]
        pairing = ";".join(f"{a}-{b}" for a, b in r["graph"]["pairing"])
        ext = ";".join(str(s) for s in r["graph"]["external"])
        rows.append([pairing, ext] + [inv[k] for k in header[2:]])
        lines.append(
            f"{pairing or '-'} ext[{ext}]: V={inv['V']} E={inv['E']} F={inv['F']} g={inv['g']} "
            f"B={inv['B']} connected={inv['connected']}"
        )
    return report, rows, "\n".join(lines)


def _cmd_series(args, map_fn):
    s = (log_z_series if args.kind == "log" else z_series)(args.order, map_fn=map_fn)
    report = {"kind": args.kind, "series": s.to_dict()}
    if args.genus:
        if args.kind != "log":
            raise UsageError("--genus applies to the log Z series")
        split = genus_split(s)
        report["genus"] = {
            str(g): {str(k): f"{v.numerator}/{v.denominator}" for k, v in per.items()} for g, per in split.items()
        }
    rows = list(csv.reader(io.StringIO(s.to_csv())))
    return report, rows, s.pretty()


def _cmd_lve(args, map_fn):
    from .lve import LoopVertexModel, lve_sum

    model = LoopVertexModel(args.N, args.lam)
    integ = _integrator(args, args.N == 1)
    est = lve_sum(model, args.orders, integ, map_fn=map_fn)
    report = est.to_dict()
    if est.oracle is not None:
        report["oracle_difference"] = est.total - est.oracle.value
    rows = [["n", "t_n", "error", "partial_sum"]] + [
        [o.n, repr(o.t_n), repr(o.error), repr(s)] for o, s in zip(est.orders, est.partial_sums)
    ]
    lines = [f"{'n':>3} {'t_n':>24} {'error':>12} {'S_n':>24}"]
    lines += [f"{o.n:>3} {o.t_n:>24.16e} {o.error:>12.3e} {s:>24.16e}" for o, s in zip(est.orders, est.partial_sums)]
    if est.oracle is not None:
        lines.append(f"oracle log Z = {est.oracle.value:.16e} ({est.oracle.method})")
    return report, rows, "\n".join(lines)


def _cmd_oracle(args, map_fn):
    from .oracle import z_closed_form_n1, z_reference

    integ = _integrator(args, args.N == 1)
    est = z_reference(args.lam, args.N, integ, map_fn=map_fn)
    report = {"lambda": args.lam, "N": args.N, "Z": est.to_dict()}
    if args.N == 1:
        report["closed_form"] = z_closed_form_n1(args.lam)
    rows = [["lambda", "N", "Z", "error", "method"], [args.lam, args.N, repr(est.value), repr(est.error), est.method]]
    text = f"Z({args.lam}, {args.N}) = {est.value:.15g} +- {est.error:.3g} ({est.method})"
    return report, rows, text


def _cmd_compare(args, map_fn):
    from .lve import lve_log_z_series
    from .oracle import compare_series

    cmp = compare_series(lve_log_z_series(args.order), log_z_series(args.order, map_fn=map_fn), args.order)
    rows = [["order", "N_power", "lve", "wick"]] + [[k, p, str(a), str(b)] for k, p, a, b in cmp.rows]
    report = cmp.to_dict()
    if not cmp.equal:
        report["_failed"] = True
    return report, rows, cmp.table()


def _cmd_propagator(args, map_fn):
    if args.classify:
        c = classify(args.omega, args.covariant)
        report = {"omega": args.omega, "covariant": args.covariant, "class": c.value}
        return report, [["omega", "covariant", "class"], [args.omega, args.covariant, c.value]], c.value
    if args.cls is None:
        raise UsageError("give --class or --classify")
    try:
        cls = PropagatorClass.parse(args.cls)
    except ContractViolation as exc:
        raise UsageError(str(exc)) from None
    spec = PropagatorSpec(cls, args.omega, args.A)
    table = [[kernel_value(spec, m, n) for n in range(args.size)] for m in range(args.size)]
    report = {"spec": spec.to_dict(), "size": args.size, "kernel": table}
    rows = [["m", "n", "G"]] + [[m, n, repr(table[m][n])] for m in range(args.size) for n in range(args.size)]
    text = "\n".join(" ".join(f"{v:.6g}" for v in row) for row in table)
    return report, rows, text


COMMANDS = {
    "forests": _cmd_forests,
    "ribbon": _cmd_ribbon,
    "series": _cmd_series,
    "lve": _cmd_lve,
    "oracle": _cmd_oracle,
    "compare": _cmd_compare,
    "propagator": _cmd_propagator,
}


def run_config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("output",)}
    cfg["version"] = __version__
    return cfg


def _render(fmt: str, report: dict, rows: list, text: str) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        return buf.getvalue()
    return text + "\n"


def _emit(args, payload: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def _error_record(args, exc: Exception) -> str:
    rec: dict[str, Any] = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, AccuracyError):
        rec["estimate"] = exc.estimate
        rec["error"] = exc.error
    if isinstance(exc, ResourceLimitError):
        rec["cap"] = exc.cap
    return json.dumps({"config": run_config(args), "error": rec}, sort_keys=True, indent=2) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        _validate(args)
        jobs = args.jobs if args.jobs is not None else default_jobs()
        with worker_map(jobs) as map_fn:
            report, rows, text = COMMANDS[args.command](args, map_fn)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"artifact {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AccuracyError, ContractViolation, ResourceLimitError, DomainError, NotImplementedError, ValueError) as exc:
        _emit(args, _error_record(args, exc))
        return EXIT_FAILED
    failed = bool(report.pop("_failed", False))
    report = {"config": run_config(args), "result": report}
    _emit(args, _render(args.format, report, rows, text))
    return EXIT_FAILED if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
