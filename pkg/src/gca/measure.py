"""KMS weight values, the conformal measure on cylinders, and path sampling.

The conformal measure is closed-form on cylinders, ``m(Z(mu)) =
exp(-beta F(mu)) psi[r(mu)]``; sampling only serves as empirical evidence
that the induced walk is recurrent.
"""
from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import InputError, NotHarmonicError, PathError
from .graph import Graph, Path, check_path, concat, path_potential, paths_from

KERNEL_TOL = 1e-6


def _psi(psi) -> Mapping[str, float]:
    return psi.values if hasattr(psi, "values") and not isinstance(psi, Mapping) else psi


def weight_value(g: Graph, beta: float, psi, mu: Path, nu: Path) -> float:
    """W(S_mu S_nu^*): zero off the diagonal, exp(-beta F(mu)) psi[r(mu)] on it."""
    check_path(g, mu)
    check_path(g, nu)
    if mu != nu:
        return 0.0
    _, r = check_path(g, mu)
    return math.exp(-beta * g.numeric(path_potential(g, mu))) * _psi(psi)[r]


def corner_state_value(g: Graph, beta: float, psi, base: str, mu: Path, nu: Path) -> float:
    """The beta-KMS state on the corner at ``base``: the weight divided by psi[base]."""
    for p in (mu, nu):
        if check_path(g, p)[0] != base:
            raise PathError(f"path {p} does not start at the corner vertex {base!r}")
    norm = _psi(psi)[base]
    if norm <= 0:
        raise InputError(f"psi vanishes at {base!r}")
    return weight_value(g, beta, psi, mu, nu) / norm


@dataclass(frozen=True)
class ConformalMeasure:
    graph: Graph
    beta: float
    psi: Mapping[str, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "psi", dict(_psi(self.psi)))


def cylinder_measure(cm: ConformalMeasure, mu: Path) -> float:
    _, r = check_path(cm.graph, mu)
    return math.exp(-cm.beta * cm.graph.numeric(path_potential(cm.graph, mu))) * cm.psi[r]


def additivity_defect(cm: ConformalMeasure, mu: Path) -> float:
    """Relative gap between m(Z(mu)) and the sum over its one-arrow extensions (0 at sinks)."""
    g = cm.graph
    r = check_path(g, mu)[1]
    if not g._out[r]:
        return 0.0
    whole = cylinder_measure(cm, mu)
    parts = sum(cylinder_measure(cm, concat(g, mu, Path.of(a.id))) for a in g._out[r])
    return abs(whole - parts) / whole


@dataclass(frozen=True)
class MarkovKernel:
    """Transition law P(a | v) = exp(-beta F(a)) psi[r(a)] / psi[v] over out-arrows."""

    graph: Graph
    beta: float
    rows: dict[str, tuple[tuple[str, float], ...]]
    absorbing: frozenset[str]

    def prob(self, v: str, arrow: str) -> float:
        return dict(self.rows[v]).get(arrow, 0.0)


def markov_kernel(g: Graph, beta: float, psi, tol: float = KERNEL_TOL) -> MarkovKernel:
    values = _psi(psi)
    rows: dict[str, tuple[tuple[str, float], ...]] = {}
    absorbing = []
    for v in g.vertices:
        arrows = g._out[v]
        if not arrows:
            rows[v] = ()
            absorbing.append(v)
            continue
        if values[v] <= 0:
            raise NotHarmonicError(f"psi vanishes at non-sink vertex {v!r}")
        row = tuple(
            (a.id, math.exp(-beta * g.numeric(a.potential)) * values[a.range] / values[v]) for a in arrows
        )
        total = sum(p for _, p in row)
        if abs(total - 1.0) > tol:
            raise NotHarmonicError(f"row {v!r} sums to {total:.12g}; psi is not harmonic there")
        rows[v] = row
    return MarkovKernel(g, beta, rows, frozenset(absorbing))


@dataclass
class PathSample:
    """Mergeable counts from a batch of sampled paths (a commutative monoid under +)."""

    start: str
    steps: int
    count: int = 0
    visits: Counter = field(default_factory=Counter)
    returned: int = 0
    absorbed: int = 0
    cylinders: Counter = field(default_factory=Counter)

    def __add__(self, other: PathSample) -> PathSample:
        if (self.start, self.steps) != (other.start, other.steps):
            raise ValueError("cannot merge samples with different start or length")
        return PathSample(
            self.start,
            self.steps,
            self.count + other.count,
            self.visits + other.visits,
            self.returned + other.returned,
            self.absorbed + other.absorbed,
            self.cylinders + other.cylinders,
        )

    def frequency(self, mu: Path) -> float:
        return self.cylinders[tuple(mu.arrows)] / self.count

    @property
    def return_fraction(self) -> float:
        return self.returned / self.count

    def visit_frequencies(self) -> dict[str, float]:
        total = sum(self.visits.values())
        return {v: c / total for v, c in sorted(self.visits.items())}


def _simulate_batch(kernel: MarkovKernel, start: str, steps: int, count: int, rng: np.random.Generator, depth: int) -> PathSample:
    g = kernel.graph
    verts = list(g.vertices)
    vidx = {v: i for i, v in enumerate(verts)}
    arrow_ids = [a.id for a in g.arrows]
    aidx = {a: i for i, a in enumerate(arrow_ids)}
    cum = {}
    targets = {}
    for v, row in kernel.rows.items():
        if row:
            c = np.cumsum([p for _, p in row])
            c[-1] = 1.0  # guard against round-off at the top of the row
            cum[vidx[v]] = c
            targets[vidx[v]] = (
                np.array([aidx[a] for a, _ in row]),
                np.array([vidx[g.arrow(a).range] for a, _ in row]),
            )
    cur = np.full(count, vidx[start])
    alive = np.ones(count, dtype=bool)
    returned = np.zeros(count, dtype=bool)
    prefix = np.full((count, depth), -1)
    visits = np.zeros(len(verts), dtype=np.int64)
    for t in range(steps):
        u = rng.random(count)
        visits += np.bincount(cur[alive], minlength=len(verts))
        nxt = cur.copy()
        for vi, c in cum.items():
            mask = alive & (cur == vi)
            if not mask.any():
                continue
            k = np.searchsorted(c, u[mask], side="right")
            arrs, rngs = targets[vi]
            nxt[mask] = rngs[k]
            if t < depth:
                prefix[mask, t] = arrs[k]
        alive &= np.isin(cur, list(cum))  # paths sitting on a sink stop
        cur = np.where(alive, nxt, cur)
        returned |= alive & (cur == vidx[start])
    sample = PathSample(start, steps, count)
    sample.visits = Counter({verts[i]: int(n) for i, n in enumerate(visits) if n})
    sample.returned = int(returned.sum())
    sample.absorbed = int((~alive).sum())
    for k in range(depth + 1):
        if k == 0:
            sample.cylinders[()] = count
            continue
        rows, counts = np.unique(prefix[:, :k], axis=0, return_counts=True)
        for row, n in zip(rows, counts):
            if (row >= 0).all():
                sample.cylinders[tuple(arrow_ids[i] for i in row)] = int(n)
    return sample


def sample_paths(
    kernel: MarkovKernel,
    start: str,
    steps: int,
    count: int,
    seed: int,
    workers: int = 1,
    depth: int = 3,
) -> PathSample:
    """Sample ``count`` paths of ``steps`` arrows from ``start``.

    Worker ``i`` draws from the stream ``SeedSequence(seed).spawn(workers)[i]``
    and handles a fixed share of the paths, so the summary depends only on
    ``(seed, workers)``.
    """
    if steps < 1 or count < 1 or workers < 1:
        raise InputError("steps, count and workers must be positive")
    if not kernel.graph.has_vertex(start):
        raise PathError(f"unknown vertex {start!r}")
    if start in kernel.absorbing:
        raise InputError(f"start vertex {start!r} is a sink")
    depth = min(depth, steps)
    shares = [count // workers + (1 if i < count % workers else 0) for i in range(workers)]
    streams = np.random.SeedSequence(seed).spawn(workers)
    jobs = [(n, np.random.default_rng(s)) for n, s in zip(shares, streams) if n > 0]
    if len(jobs) == 1:
        parts = [_simulate_batch(kernel, start, steps, jobs[0][0], jobs[0][1], depth)]
    else:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            parts = list(pool.map(lambda job: _simulate_batch(kernel, start, steps, job[0], job[1], depth), jobs))
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total


@dataclass(frozen=True)
class CylinderCheck:
    path: str
    exact: float
    empirical: float
    stderr: float

    @property
    def z(self) -> float:
        if self.stderr == 0:
            return 0.0 if self.exact == self.empirical else math.inf
        return abs(self.empirical - self.exact) / self.stderr


def cylinder_concordance(cm: ConformalMeasure, sample: PathSample, depth: int = 3) -> list[CylinderCheck]:
    """Compare empirical cylinder frequencies with m(Z(mu)) / m(Z(start))."""
    g = cm.graph
    base = cm.psi[sample.start]
    checks = []
    for k in range(1, min(depth, sample.steps) + 1):
        for mu in paths_from(g, sample.start, k):
            exact = cylinder_measure(cm, mu) / base
            emp = sample.frequency(mu)
            se = math.sqrt(exact * (1 - exact) / sample.count)
            checks.append(CylinderCheck(str(mu), exact, emp, se))
    return checks


@dataclass(frozen=True)
class ConformalityReport:
    arrow: str
    cylinders_checked: int
    max_rel_deviation: float
    mc_checked: int = 0
    mc_max_z: float = 0.0
    mc_samples: int = 0

    @property
    def mc_within_3se(self) -> bool:
        return self.mc_max_z <= 3.0


def conformality_test(
    cm: ConformalMeasure,
    kernel: MarkovKernel | None,
    arrow: str,
    samples: int = 0,
    seed: int = 0,
    max_len: int = 2,
) -> ConformalityReport:
    """Check m(sigma(B & Z(a))) = exp(beta F(a)) m(B & Z(a)) on cylinders B.

    For a cylinder B, ``B & Z(a)`` is empty or a cylinder ``Z(a mu)`` whose
    shift is ``Z(mu)``, so it suffices to range over ``mu`` starting at
    ``r(a)`` with ``len(mu) <= max_len``.  The identity is evaluated exactly;
    with ``samples > 0`` both sides are also estimated from sampled paths and
    compared in standard-error units.
    """
    g = cm.graph
    a = g.arrow(arrow)
    factor = math.exp(cm.beta * g.numeric(a.potential))
    worst = 0.0
    pairs = []
    for k in range(max_len + 1):
        for mu in paths_from(g, a.range, k):
            amu = concat(g, Path.of(a.id), mu)
            lhs = cylinder_measure(cm, mu)
            rhs = factor * cylinder_measure(cm, amu)
            worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-300))
            pairs.append((mu, amu))
    if samples <= 0 or kernel is None:
        return ConformalityReport(arrow, len(pairs), worst)
    depth = max_len + 1
    from_src = sample_paths(kernel, a.source, depth, samples, seed, depth=depth)
    if a.range in kernel.absorbing:
        return ConformalityReport(arrow, len(pairs), worst)
    from_rng = sample_paths(kernel, a.range, max(depth, 1), samples, seed + 1, depth=depth)
    worst_z = 0.0
    checked = 0
    for mu, amu in pairs:
        if not mu.arrows:
            continue
        p_l = from_rng.frequency(mu)
        p_r = from_src.frequency(amu)
        lhs = cm.psi[a.range] * p_l
        rhs = factor * cm.psi[a.source] * p_r
        se = math.hypot(
            cm.psi[a.range] * math.sqrt(p_l * (1 - p_l) / samples),
            factor * cm.psi[a.source] * math.sqrt(p_r * (1 - p_r) / samples),
        )
        z = 0.0 if se == 0 and lhs == rhs else (abs(lhs - rhs) / se if se > 0 else math.inf)
        worst_z = max(worst_z, z)
        checked += 1
    return ConformalityReport(arrow, len(pairs), worst, checked, worst_z, samples)


def all_paths(g: Graph, max_len: int) -> list[Path]:
    """Every finite path with at most ``max_len`` arrows, vertices first."""
    return [p for k in range(max_len + 1) for v in g.vertices for p in paths_from(g, v, k)]
