"""Command-line entry point ``gca``.

Exit codes: 0 on a completed analysis (whatever the verdict), 2 on input
errors, 3 when an analysis is requested outside its preconditions.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from typing import Sequence

from . import __version__
from .errors import InputError, PreconditionError
from .graph import Graph, Path, parse_graph
from .oinf import parse_sequence
from .pipeline import (
    DEFAULT_BETA_MAX,
    DEFAULT_BETA_MIN,
    DEFAULT_BISECTION_TOL,
    DEFAULT_WALK_CAP,
    classification_block,
    critical_block,
    gamma_block,
    group_block,
    harmonic_block,
    measure_block,
    oinf_report,
    pipeline_full,
    simulation_block,
    spectral_block,
    structure_block,
    tolerances,
)
from .gamma import connes_upper_bound
from .spectral import verify_almost_harmonic, rho_scan

EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION = 0, 2, 3


def normalize(obj):
    """Round floats to 15 significant digits and make the tree JSON-safe."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return float(f"{obj:.15g}")
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    return str(obj)


def _text(obj, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v and not _flat_list(v):
                lines.append(f"{pad}{k}:")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)) and not _flat_list(v):
                lines.append(f"{pad}-")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar(v)}")
    else:
        lines.append(f"{pad}{_scalar(obj)}")
    return lines


def _flat_list(v) -> bool:
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v)


def _scalar(v) -> str:
    if isinstance(v, list):
        return "[" + ", ".join(_scalar(x) for x in v) + "]"
    if isinstance(v, float):
        return f"{v:.15g}"
    if v is None:
        return "-"
    return str(v)


def render(report: dict, as_json: bool) -> str:
    report = normalize(report)
    if as_json:
        return json.dumps(report, indent=2, ensure_ascii=False)
    return "\n".join(_text(report))


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="gca", description="KMS weights and factor types for graph algebras with a generalized gauge action.")
    parser.add_argument("--version", action="version", version=f"gca {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_cmd(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help)
        p.add_argument("graph", help="graph file")
        return p

    graph_cmd("check", "structural predicates (simplicity, NW set, SCCs)")

    p = graph_cmd("spectral", "A(beta) and its spectral radius on NW")
    p.add_argument("--beta", type=float, required=True)

    for name in ("critical", "full"):
        p = graph_cmd(name, "critical beta" if name == "critical" else "full pipeline")
        p.add_argument("--min", type=float, default=DEFAULT_BETA_MIN, dest="beta_min")
        p.add_argument("--max", type=float, default=DEFAULT_BETA_MAX, dest="beta_max")
        p.add_argument("--tol", type=float, default=DEFAULT_BISECTION_TOL)
        if name == "full":
            p.add_argument("--walk-cap", type=int, default=DEFAULT_WALK_CAP)

    p = graph_cmd("harmonic", "conservative harmonic vector")
    p.add_argument("--beta", type=float, required=True)

    p = graph_cmd("classify", "conservative / dissipative / no KMS weight from NW")
    p.add_argument("--beta", type=float, required=True)

    p = graph_cmd("verify", "check a user-supplied vector for (almost) harmonicity")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--psi", required=True, help="comma-separated values in vertex order")
    p.add_argument("--tol", type=float, default=1e-9)

    p = graph_cmd("scan", "rho on NW over a beta grid")
    p.add_argument("--min", type=float, default=DEFAULT_BETA_MIN, dest="beta_min")
    p.add_argument("--max", type=float, default=DEFAULT_BETA_MAX, dest="beta_max")
    p.add_argument("--points", type=int, default=64)

    p = graph_cmd("gamma", "Connes invariant R_{G,F} and factor type")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--beta", type=float)
    g.add_argument("--critical", action="store_true")
    p.add_argument("--verify", action="store_true", help="cross-check with the closed-walk oracle")
    p.add_argument("--walk-cap", type=int, default=DEFAULT_WALK_CAP)
    p.add_argument("--bound", action="store_true", help="report R_{G,F} as an upper bound when beta is not conservative")

    p = graph_cmd("measure", "conformal measure of a cylinder and the KMS weight / corner state values")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--path", required=True, help="comma-separated arrow ids, or a vertex id")

    p = graph_cmd("simulate", "sample paths of the induced Markov chain")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--vertex", required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("oinf", parents=[common], help="one vertex with infinitely many loops (O_infinity)")
    p.add_argument("--head", default="", help="explicit first terms, e.g. 1,3/2")
    p.add_argument("--tail", help="arithmetic tail c=<rat>,d=<rat> meaning t_n = c n + d")
    p.add_argument("--omega", help="irrational symbol, e.g. w=1.4142135623730951")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--beta", type=float)
    g.add_argument("--critical", action="store_true")
    p.add_argument("--gamma", action="store_true")
    p.add_argument("--tol", type=float, default=DEFAULT_BISECTION_TOL)
    return parser


def _load(path: str) -> tuple[Graph, str]:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise InputError(f"{path} is not UTF-8") from None
    return parse_graph(text), "sha256:" + hashlib.sha256(data).hexdigest()


def _parse_path(g: Graph, spec: str) -> Path:
    toks = [t.strip() for t in spec.split(",") if t.strip()]
    if len(toks) == 1 and g.has_vertex(toks[0]) and not g.has_arrow(toks[0]):
        return Path.vertex(toks[0])
    return Path(tuple(toks))


def _run_graph_command(args: argparse.Namespace, g: Graph, report: dict) -> None:
    cmd = args.command
    warnings: list[str] = report["warnings"]
    if cmd == "check":
        report["structure"] = structure_block(g)
    elif cmd == "spectral":
        report["spectral"] = spectral_block(g, args.beta)
    elif cmd == "critical":
        report["tolerances"] = tolerances(args.tol)
        report["critical"], w = critical_block(g, args.beta_min, args.beta_max, args.tol)
        warnings.extend(w)
    elif cmd == "classify":
        report["tolerances"] = tolerances()
        report["classification"], w = classification_block(g, args.beta)
        warnings.extend(w)
    elif cmd == "harmonic":
        report["harmonic"] = harmonic_block(g, args.beta)
    elif cmd == "verify":
        try:
            psi = [float(x) for x in args.psi.split(",")]
        except ValueError:
            raise InputError("--psi must be comma-separated numbers") from None
        chk = verify_almost_harmonic(g, args.beta, psi, args.tol)
        report["verification"] = {
            "kind": chk.kind,
            "max_relative_residual": chk.max_residual,
            "violations": [{"vertex": v.vertex, "residual": v.residual, "condition": v.condition} for v in chk.violations],
        }
    elif cmd == "scan":
        import numpy as np

        rows = rho_scan(g, np.linspace(args.beta_min, args.beta_max, args.points))
        report["scan"] = [{"beta": b, "rho": r} for b, r in rows]
        crossings = sum(1 for (_, r0), (_, r1) in zip(rows, rows[1:]) if (r0 - 1) * (r1 - 1) <= 0)
        report["scan_sign_changes"] = crossings
    elif cmd == "gamma":
        if args.critical:
            report["critical"], w = critical_block(g, DEFAULT_BETA_MIN, DEFAULT_BETA_MAX, DEFAULT_BISECTION_TOL)
            warnings.extend(w)
            beta = report["critical"]["beta"]
        else:
            beta = args.beta
        try:
            report["gamma"] = gamma_block(g, beta, args.verify, args.walk_cap)
        except PreconditionError:
            if not args.bound:
                raise
            report["gamma_upper_bound"] = group_block(connes_upper_bound(g, beta), g.omega_name)
            warnings.append("beta is not conservative: R_{G,F} is only an upper bound for Gamma here")
    elif cmd == "measure":
        report["measure"] = measure_block(g, args.beta, _parse_path(g, args.path))
    elif cmd == "simulate":
        report["simulation"] = simulation_block(g, args.beta, args.vertex, args.steps, args.samples, args.seed, args.workers)
    elif cmd == "full":
        report.update(pipeline_full(g, args.beta_min, args.beta_max, args.tol, args.walk_cap))
        report["warnings"] = warnings + report["warnings"]


def run(argv: Sequence[str] | None = None, out=None) -> tuple[int, dict]:
    out = out if out is not None else sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), {}
    report: dict = {"command": " ".join(["gca", *argv]), "warnings": []}
    code = EXIT_OK
    try:
        if args.command == "oinf":
            s = parse_sequence(args.head, args.tail, args.omega)
            report.update(oinf_report(s, args.beta, args.critical, args.gamma, args.tol))
        else:
            g, digest = _load(args.graph)
            report["input_digest"] = digest
            _run_graph_command(args, g, report)
    except InputError as exc:
        report["error"] = {"kind": "input", "message": str(exc)}
        code = EXIT_INPUT
    except PreconditionError as exc:
        report["error"] = {"kind": exc.code, "message": str(exc)}
        code = EXIT_PRECONDITION
    print(render(report, args.json), file=out)
    return code, report


def main() -> None:
    code, _ = run()
    sys.exit(code)


if __name__ == "__main__":
    main()
