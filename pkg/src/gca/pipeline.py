"""Report blocks and the end-to-end analysis pipeline.

Every function returns plain dicts so that reports serialize directly; floats
are rounded to 15 significant digits by ``report.render``.
"""
from __future__ import annotations

from .errors import GcaError, PreconditionError
from .gamma import (
    CYCLIC,
    DENSE,
    RealSubgroup,
    connes_invariant,
    factor_type,
    oracle_agreement,
)
from .graph import Graph, Path, path_potential
from .measure import (
    ConformalMeasure,
    conformality_test,
    corner_state_value,
    cylinder_concordance,
    cylinder_measure,
    markov_kernel,
    sample_paths,
    weight_value,
)
from .oinf import SequenceSpec, critical_beta0, kms_existence, oinf_connes_group, partition_value
from .spectral import (
    CONSERVATIVE,
    CONSERVATIVE_TOL,
    NW_EMPTY,
    POWER_TOL,
    build_A,
    classify,
    critical_beta,
    harmonic_vector,
    nw_radius,
)
from .structure import analyze

DEFAULT_BETA_MIN = 1e-6
DEFAULT_BETA_MAX = 50.0
DEFAULT_BISECTION_TOL = 1e-12
DEFAULT_WALK_CAP = 10


def _ordered(g: Graph, vs) -> list[str]:
    return [v for v in g.vertices if v in vs]


def structure_block(g: Graph) -> dict:
    s = analyze(g)
    return {
        "is_cofinal": s.is_cofinal,
        "every_loop_has_exit": s.every_loop_has_exit,
        "is_simple": s.is_simple,
        "failing_predicates": s.failing_predicates,
        "nw_vertices": _ordered(g, s.nw_vertices),
        "nw_arrows": [a.id for a in g.arrows if a.id in s.nw_arrows],
        "sinks": _ordered(g, s.sinks),
        "scc_partition": [list(c) for c in s.scc_partition],
    }


def spectral_block(g: Graph, beta: float) -> dict:
    m = build_A(g, beta)
    block = {"beta": beta, "vertices": list(m.vertices), "matrix": m.entries.tolist()}
    try:
        block["rho_nw"] = nw_radius(g, beta, m)
    except GcaError as exc:
        block["rho_nw"] = None
        block["note"] = str(exc)
    return block


def critical_block(g: Graph, lo: float, hi: float, tol: float) -> tuple[dict, list[str]]:
    c = critical_beta(g, lo, hi, tol)
    return (
        {
            "beta": c.beta,
            "rho_at_beta": c.rho,
            "method": c.method,
            "bracket": list(c.bracket),
            "bisection_steps": c.iterations,
            "sign_changes": c.sign_changes,
            "tol": tol,
        },
        list(c.warnings),
    )


def classification_block(g: Graph, beta: float) -> tuple[dict, list[str]]:
    c = classify(g, beta)
    block = {
        "verdict": c.verdict,
        "beta": beta,
        "rho": c.rho,
        "gate": CONSERVATIVE_TOL,
    }
    if c.verdict != NW_EMPTY:
        block["base_vertex"] = c.base_vertex
        block["partial_sum_N"] = len(c.partial_sums) - 1
        block["partial_sum"] = c.partial_sums[-1]
        block["nth_root_N"] = c.nth_roots[-1]
        block["series_limit"] = c.series_limit
    return block, list(c.warnings)


def harmonic_block(g: Graph, beta: float) -> dict:
    h = harmonic_vector(g, beta)
    return {"beta": beta, "kind": h.kind, "psi": h.values, "max_residual": h.residual, "normalization": "first NW vertex = 1"}


def group_block(rs: RealSubgroup, omega_name: str | None) -> dict:
    name = omega_name or "w"
    block = {"group": rs.tag, "description": rs.describe(name)}
    if rs.tag == CYCLIC:
        block["exact_step"] = rs.step.format(name)
        block["beta"] = rs.beta
        block["numeric_step"] = rs.numeric_step
    elif rs.tag == DENSE:
        block["witness"] = [w.format(name) for w in rs.witness]
    return block


def gamma_block(g: Graph, beta: float, verify: bool, walk_cap: int = DEFAULT_WALK_CAP) -> dict:
    rs = connes_invariant(g, beta)
    ft = factor_type(rs)
    block = group_block(rs, g.omega_name)
    block["factor_type"] = ft.tag
    block["lambda"] = ft.lam
    if verify:
        ok, per_vertex = oracle_agreement(g, walk_cap)
        block["verified"] = ok
        block["oracle_walk_cap"] = walk_cap
        block["oracle_groups"] = {v: r.describe(g.omega_name or "w") for v, r in per_vertex.items()}
    return block


def measure_block(g: Graph, beta: float, path: Path) -> dict:
    h = harmonic_vector(g, beta)
    cm = ConformalMeasure(g, beta, h)
    src = path.anchor if not path.arrows else g.arrow(path.arrows[0]).source
    return {
        "beta": beta,
        "path": str(path),
        "F": path_potential(g, path).format(g.omega_name or "w"),
        "cylinder_measure": cylinder_measure(cm, path),
        "weight_value": weight_value(g, beta, h, path, path),
        "corner_vertex": src,
        "corner_state_value": corner_state_value(g, beta, h, src, path, path),
    }


def simulation_block(
    g: Graph, beta: float, vertex: str, steps: int, samples: int, seed: int, workers: int = 1
) -> dict:
    h = harmonic_vector(g, beta)
    kernel = markov_kernel(g, beta, h)
    sample = sample_paths(kernel, vertex, steps, samples, seed, workers)
    cm = ConformalMeasure(g, beta, h)
    checks = cylinder_concordance(cm, sample)
    conf = [conformality_test(cm, kernel, a.id, max_len=4) for a in g.arrows]
    return {
        "beta": beta,
        "start": vertex,
        "steps": steps,
        "samples": samples,
        "seed": seed,
        "workers": workers,
        "return_fraction": sample.return_fraction,
        "absorbed": sample.absorbed,
        "visit_frequencies": sample.visit_frequencies(),
        "cylinders": [
            {"path": c.path, "exact": c.exact, "empirical": c.empirical, "stderr": c.stderr, "z": c.z}
            for c in checks
        ],
        "max_z": max((c.z for c in checks), default=0.0),
        "conformality_max_rel_deviation": max((c.max_rel_deviation for c in conf), default=0.0),
    }


def tolerances(bisection_tol: float | None = None) -> dict:
    out = {"conservative_gate": CONSERVATIVE_TOL, "power_iteration": POWER_TOL}
    if bisection_tol is not None:
        out["bisection"] = bisection_tol
    return out


def pipeline_full(
    g: Graph,
    beta_min: float = DEFAULT_BETA_MIN,
    beta_max: float = DEFAULT_BETA_MAX,
    tol: float = DEFAULT_BISECTION_TOL,
    walk_cap: int = DEFAULT_WALK_CAP,
) -> dict:
    """check -> NW -> critical beta -> classify -> harmonic vector -> gamma (+oracle) -> factor type.

    Stops at the first unmet precondition and returns what was computed so far
    with ``stopped_at`` naming the stage.
    """
    report: dict = {"structure": structure_block(g)}
    warnings: list[str] = []
    report["warnings"] = warnings
    report["tolerances"] = tolerances(tol)

    def stop(stage: str, verdict: str) -> dict:
        report["stopped_at"] = stage
        report["verdict"] = verdict
        return report

    if not report["structure"]["nw_vertices"]:
        return stop("nw", "no conservative KMS weight; NW is empty so all harmonic vectors are dissipative")
    try:
        report["critical"], w = critical_block(g, beta_min, beta_max, tol)
    except PreconditionError as exc:
        return stop("critical", f"no critical beta: {exc}")
    warnings.extend(w)
    beta = report["critical"]["beta"]
    report["classification"], w = classification_block(g, beta)
    warnings.extend(w)
    if report["classification"]["verdict"] != CONSERVATIVE:
        return stop("classify", f"not conservative at the critical beta ({report['classification']['verdict']})")
    try:
        report["harmonic"] = harmonic_block(g, beta)
    except PreconditionError as exc:
        return stop("harmonic", f"no positive harmonic vector: {exc}")
    try:
        report["gamma"] = gamma_block(g, beta, verify=True, walk_cap=walk_cap)
    except PreconditionError as exc:
        return stop("gamma", f"Connes invariant not available: {exc}")
    if not report["gamma"]["verified"]:
        warnings.append("closed-walk oracle disagrees with the cycle-lattice group (walk cap may be too short)")
    report["verdict"] = f"conservative KMS weight at beta = {beta:.15g}; factor type {report['gamma']['factor_type']}"
    return report


def oinf_report(s: SequenceSpec, beta: float | None, critical: bool, gamma: bool, tol: float) -> dict:
    name = s.omega_name or "w"
    report: dict = {
        "model": {
            "head": [t.format(name) for t in s.head],
            "tail": None if s.tail is None else {"c": str(s.tail.c), "d": str(s.tail.d)},
            "finite": s.tail is None,
        },
        "warnings": [],
    }
    if critical:
        beta = critical_beta0(s, tol)
        report["critical_beta0"] = beta
        if beta is None:
            report["verdict"] = "no KMS states: Z(beta) never equals 1"
            return report
    if beta is None:
        return report
    ex = kms_existence(s, beta)
    report["beta"] = beta
    report["partition_value"] = partition_value(s, beta)
    report["kms"] = {"exists": ex.exists, "conservative": ex.conservative, "note": ex.note}
    report["verdict"] = ex.note
    if gamma:
        rs, ft = oinf_connes_group(s, beta)
        block = group_block(rs, s.omega_name)
        block["factor_type"] = ft.tag
        block["lambda"] = ft.lam
        report["gamma"] = block
    return report
