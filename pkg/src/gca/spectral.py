"""The matrix A(beta), its Perron data on the non-wandering part, and harmonic vectors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    HarmonicExtensionError,
    InputError,
    NoSignChangeError,
    NotIrreducibleError,
    NwEmptyError,
)
from .graph import Graph
from .structure import is_cofinal, nw_components, scc_condensation

CONSERVATIVE_TOL = 1e-9
POWER_TOL = 1e-12
DIAGNOSTIC_N = 64
GRID_POINTS = 256

CONSERVATIVE = "Conservative"
DISSIPATIVE = "Dissipative"
NO_KMS_FROM_NW = "NoKmsWeightFromNW"
NW_EMPTY = "NwEmpty"


@dataclass(frozen=True)
class BetaMatrix:
    beta: float
    vertices: tuple[str, ...]
    entries: np.ndarray

    def index(self, v: str) -> int:
        return self.vertices.index(v)

    def block(self, restrict: Sequence[str]) -> np.ndarray:
        idx = [self.index(v) for v in restrict]
        return self.entries[np.ix_(idx, idx)]


def build_A(g: Graph, beta: float) -> BetaMatrix:
    n = len(g.vertices)
    m = np.zeros((n, n))
    for a in g.arrows:
        i, j = g.vertex_position(a.source), g.vertex_position(a.range)
        m[i, j] += math.exp(-beta * g.numeric(a.potential))
    return BetaMatrix(float(beta), g.vertices, m)


def _is_irreducible(block: np.ndarray) -> bool:
    n = block.shape[0]
    adj = block > 0

    def reach(mat: np.ndarray) -> set[int]:
        seen, todo = {0}, [0]
        while todo:
            i = todo.pop()
            for j in np.nonzero(mat[i])[0]:
                if int(j) not in seen:
                    seen.add(int(j))
                    todo.append(int(j))
        return seen

    return len(reach(adj)) == n and len(reach(adj.T)) == n


def perron_pair(block: np.ndarray, tol: float = POWER_TOL, max_iter: int = 20_000) -> tuple[float, np.ndarray]:
    """Spectral radius and positive eigenvector of an irreducible nonnegative matrix.

    Power iteration from the all-ones vector on ``block + s*I``, where ``s``
    is a dense-solver estimate of the root: the shift makes periodic blocks
    converge and keeps the contraction ratio away from 1 when entries span
    many orders of magnitude.  Stops when successive Rayleigh quotients and the
    Collatz-Wielandt bounds agree to ``tol`` relative to the shifted root.
    Returns the eigenvector scaled to unit max-norm.
    """
    if block.size == 0 or not np.any(block > 0):
        raise NotIrreducibleError("zero matrix has no Perron root")
    if not _is_irreducible(block):
        raise NotIrreducibleError("restriction is not strongly connected")
    estimate = float(np.max(np.abs(np.linalg.eigvals(block))))
    shift = estimate if math.isfinite(estimate) and estimate > 0 else float(block.max())
    m = block + shift * np.eye(block.shape[0])
    x = np.ones(block.shape[0])
    prev = math.inf
    rq = math.nan
    for _ in range(max_iter):
        y = m @ x
        rq = float(x @ y) / float(x @ x)
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        x = y / y.max()
        if abs(rq - prev) <= tol * rq and hi - lo <= tol * hi:
            break
        prev = rq
    y = m @ x
    rho = float(x @ y) / float(x @ x) - shift
    return rho, x


def perron_root(m: BetaMatrix, restrict: Sequence[str]) -> float:
    return perron_pair(m.block(list(restrict)))[0]


def nw_radius(g: Graph, beta: float, m: BetaMatrix | None = None) -> float:
    """Spectral radius of A(beta) on the non-wandering vertices (max over their blocks)."""
    comps = nw_components(g)
    if not comps:
        raise NwEmptyError("no vertex lies on a cycle")
    m = m if m is not None else build_A(g, beta)
    return max(perron_root(m, c) for c in comps)


@dataclass(frozen=True)
class CriticalBeta:
    beta: float
    rho: float
    method: str
    bracket: tuple[float, float]
    iterations: int
    sign_changes: int = 1
    warnings: tuple[str, ...] = ()


def _bisect(f, lo: float, hi: float, flo: float, tol: float) -> tuple[float, int]:
    it = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        it += 1
        if fm == 0:
            return mid, it
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi), it


def critical_beta(g: Graph, beta_min: float = 1e-6, beta_max: float = 50.0, tol: float = 1e-12) -> CriticalBeta:
    """Solve rho(A(beta) restricted to NW) = 1 on ``[beta_min, beta_max]``."""
    comps = nw_components(g)
    if not comps:
        raise NwEmptyError("no vertex lies on a cycle, so there is no critical beta")
    if beta_min >= beta_max:
        raise InputError("beta_min must be smaller than beta_max")

    def f(beta: float) -> float:
        return nw_radius(g, beta) - 1.0

    nw = {v for c in comps for v in c}
    pots = [g.numeric(a.potential) for a in g.arrows if a.source in nw and a.range in nw]
    monotone = all(p > 0 for p in pots) or all(p < 0 for p in pots)
    warnings: list[str] = []
    if monotone:
        flo, fhi = f(beta_min), f(beta_max)
        if flo == 0:
            return CriticalBeta(beta_min, 1.0, "endpoint", (beta_min, beta_max), 0)
        if fhi == 0:
            return CriticalBeta(beta_max, 1.0, "endpoint", (beta_min, beta_max), 0)
        if (flo > 0) == (fhi > 0):
            raise NoSignChangeError(
                f"rho-1 keeps sign on [{beta_min}, {beta_max}] ({flo:+.3e}, {fhi:+.3e})"
            )
        lo, hi, changes, method = beta_min, beta_max, 1, "bisection"
    else:
        grid = np.linspace(beta_min, beta_max, GRID_POINTS)
        vals = [f(b) for b in grid]
        brackets = [
            (float(grid[i]), float(grid[i + 1]), vals[i])
            for i in range(GRID_POINTS - 1)
            if vals[i] == 0 or (vals[i] > 0) != (vals[i + 1] > 0)
        ]
        if not brackets:
            raise NoSignChangeError(f"no sign change of rho-1 on a {GRID_POINTS}-point grid")
        changes = len(brackets)
        lo, hi, flo = brackets[0]
        method = "grid+bisection"
        warnings.append(
            f"potential has mixed signs on NW: rho(beta) may be non-monotone, "
            f"{changes} sign change(s) on the grid; returning the first, additional roots may exist"
        )
        if flo == 0:
            return CriticalBeta(lo, 1.0, method, (lo, hi), 0, changes, tuple(warnings))
    beta, it = _bisect(f, lo, hi, f(lo), tol)
    rho = nw_radius(g, beta)
    return CriticalBeta(beta, rho, method, (lo, hi), it, changes, tuple(warnings))


@dataclass(frozen=True)
class HarmonicVector:
    beta: float
    values: dict[str, float]
    kind: str  # "harmonic" | "almost-harmonic"
    residual: float = 0.0

    def as_array(self, vertices: Sequence[str]) -> np.ndarray:
        return np.array([self.values[v] for v in vertices])


def harmonic_vector(g: Graph, beta: float, tol: float = CONSERVATIVE_TOL) -> HarmonicVector:
    """The conservative harmonic vector, normalized to 1 at the first NW vertex."""
    comps = nw_components(g)
    if not comps:
        raise NwEmptyError("no vertex lies on a cycle")
    if len(comps) > 1:
        raise NotIrreducibleError("non-wandering vertices do not form one strongly connected block")
    m = build_A(g, beta)
    nw = comps[0]
    rho, vec = perron_pair(m.block(nw))
    if abs(rho - 1.0) > tol:
        raise HarmonicExtensionError(f"rho = {rho:.15g} is not 1 at beta = {beta:.15g}; not in the conservative regime")
    psi: dict[str, float] = dict(zip(nw, (vec / vec[0]).tolist()))
    zeros = []
    for comp in scc_condensation(g):
        if comp[0] in psi:
            continue
        (v,) = comp  # wandering vertices never share a component
        i = m.index(v)
        psi[v] = float(sum(m.entries[i, m.index(w)] * psi[w] for w in g.vertices if m.entries[i, m.index(w)] > 0))
        if psi[v] == 0.0:
            zeros.append(v)
    values = {v: psi[v] for v in g.vertices}
    check = verify_almost_harmonic(g, beta, values, tol)
    result = HarmonicVector(beta, values, check.kind, check.max_residual)
    if zeros:
        raise HarmonicExtensionError(
            f"no strictly positive harmonic extension: harmonicity forces 0 at {sorted(zeros)}"
            + ("" if is_cofinal(g) else " (graph is not cofinal)"),
            candidate=result,
        )
    if check.kind == NOT_ALMOST:
        raise HarmonicExtensionError("extension fails the harmonic equations", candidate=result)
    return result


HARMONIC = "harmonic"
ALMOST = "almost-harmonic"
NOT_ALMOST = "not-almost-harmonic"


@dataclass(frozen=True)
class Violation:
    vertex: str
    residual: float  # (A psi)_v - psi_v
    condition: str


@dataclass(frozen=True)
class HarmonicCheck:
    kind: str
    violations: tuple[Violation, ...]
    max_residual: float


def verify_almost_harmonic(
    g: Graph, beta: float, psi: Mapping[str, float] | Sequence[float], tol: float = 1e-9
) -> HarmonicCheck:
    """Classify a user-supplied vector as harmonic, proper almost-harmonic, or neither.

    Residuals are compared against ``tol * max|psi|``.  Only sinks may have
    strict inequality (finite graphs have no infinite emitters).
    """
    if isinstance(psi, Mapping):
        if set(psi) != set(g.vertices):
            raise InputError("psi must have one entry per vertex")
        x = np.array([float(psi[v]) for v in g.vertices])
    else:
        x = np.asarray(psi, dtype=float)
        if x.shape != (len(g.vertices),):
            raise InputError(f"psi has {x.size} entries, graph has {len(g.vertices)} vertices")
    violations: list[Violation] = []
    for v, val in zip(g.vertices, x):
        if val < 0 or not math.isfinite(val):
            violations.append(Violation(v, float("nan"), "negative or non-finite entry"))
    scale = float(np.abs(x).max()) if x.size else 0.0
    if scale == 0.0:
        violations.append(Violation(g.vertices[0], 0.0, "zero vector"))
        return HarmonicCheck(NOT_ALMOST, tuple(violations), 0.0)
    m = build_A(g, beta)
    res = m.entries @ x - x
    strict = False
    for i, v in enumerate(g.vertices):
        r = float(res[i])
        if r > tol * scale:
            violations.append(Violation(v, r, "sum_w A(beta)[v,w] psi_w > psi_v"))
        elif g._out[v]:
            if abs(r) > tol * scale:
                violations.append(Violation(v, r, "equality fails at non-sink vertex"))
        elif abs(r) > tol * scale:
            strict = True
    max_res = float(np.abs(res).max()) / scale
    if violations:
        return HarmonicCheck(NOT_ALMOST, tuple(violations), max_res)
    return HarmonicCheck(ALMOST if strict else HARMONIC, (), max_res)


@dataclass(frozen=True)
class Classification:
    verdict: str
    beta: float
    rho: float | None = None
    base_vertex: str | None = None
    partial_sums: tuple[float, ...] = ()
    nth_roots: tuple[float, ...] = ()
    series_limit: float | None = None
    warnings: tuple[str, ...] = field(default=())


def return_diagnostics(g: Graph, beta: float, base: str, n_max: int = DIAGNOSTIC_N):
    """Partial sums of A(beta)^n[v,v] for n = 0..n_max and the n-th roots for n = 1..n_max."""
    m = build_A(g, beta)
    comp = next(c for c in scc_condensation(g) if base in c)
    block = m.block(comp)
    i = comp.index(base)
    power = np.eye(len(comp))
    total = 0.0
    sums, roots = [], []
    for n in range(n_max + 1):
        total += float(power[i, i])
        sums.append(total)
        if n > 0:
            roots.append(float(power[i, i]) ** (1.0 / n))
        power = power @ block
    limit = None
    if perron_pair(block)[0] < 1.0 - CONSERVATIVE_TOL:
        limit = float(np.linalg.inv(np.eye(len(comp)) - block)[i, i])
    return tuple(sums), tuple(roots), limit


def classify(g: Graph, beta: float, tol: float = CONSERVATIVE_TOL) -> Classification:
    comps = nw_components(g)
    if not comps:
        return Classification(
            NW_EMPTY, beta, warnings=("NW is empty: every harmonic vector is dissipative",)
        )
    m = build_A(g, beta)
    warnings: list[str] = []
    if len(comps) > 1:
        warnings.append(f"NW splits into {len(comps)} strongly connected blocks; rho is their maximum")
    radii = [perron_root(m, c) for c in comps]
    k = int(np.argmax(radii))
    rho = radii[k]
    base = comps[k][0]
    gap = abs(rho - 1.0)
    if gap <= tol:
        verdict = CONSERVATIVE
        if gap > tol / 10:
            warnings.append(f"|rho-1| = {gap:.3e} is within 10x of the gate {tol:g}")
    else:
        verdict = DISSIPATIVE if rho < 1.0 else NO_KMS_FROM_NW
        if gap < 10 * tol:
            warnings.append(f"|rho-1| = {gap:.3e} is within 10x of the gate {tol:g}")
        if verdict == NO_KMS_FROM_NW:
            warnings.append("rho > 1: no harmonic vector exists at this beta for a finite strongly connected NW")
    sums, roots, limit = return_diagnostics(g, beta, base)
    return Classification(verdict, beta, rho, base, sums, roots, limit, tuple(warnings))


def rho_scan(g: Graph, betas: Sequence[float]) -> list[tuple[float, float]]:
    """rho on NW over a grid; exposes possible multiple conservative temperatures."""
    return [(float(b), nw_radius(g, float(b))) for b in betas]
