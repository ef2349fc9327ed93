"""The closed subgroup R_{G,F} of the reals and the resulting factor type.

R_{G,F} is the closure of the group of differences ``beta*F(mu) - beta*F(mu')``
over closed walks at a non-wandering vertex.  For a strongly connected NW
subgraph that group is ``beta`` times the group of F-weights of integer
circulations, which is what ``cycle_lattice_generators`` computes.  The
brute-force ``closed_walk_oracle`` enumerates walks directly and exists to
check that reduction.

Dense versus cyclic is decided exactly on (rat, irr) pairs; this relies on the
declared omega being irrational.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

from .errors import (
    NotConservativeError,
    NotIrreducibleError,
    NotSimpleError,
    NwEmptyError,
    PathError,
    ZeroGroupError,
)
from .graph import ZERO, Graph, PotValue
from .lattice import integer_kernel
from .spectral import CONSERVATIVE, classify
from .structure import is_cofinal, every_loop_has_exit, non_wandering, nw_components

ZERO_GROUP = "Zero"
CYCLIC = "Cyclic"
DENSE = "Dense"


@dataclass(frozen=True)
class RealSubgroup:
    tag: str
    beta: float = 1.0
    step: PotValue | None = None  # exact generator in F-units; the group is beta * step * Z
    numeric_step: float | None = None
    witness: tuple[PotValue, PotValue] | None = None

    def same_group(self, other: RealSubgroup) -> bool:
        """Exact comparison of the F-unit groups (beta ignored)."""
        if self.tag != other.tag:
            return False
        return self.tag != CYCLIC or self.step == other.step

    def describe(self, omega_name: str = "w") -> str:
        if self.tag == ZERO_GROUP:
            return "{0}"
        if self.tag == DENSE:
            return "R (dense)"
        return f"({self.beta:.15g} * {self.step.format(omega_name)}) Z"


@dataclass(frozen=True)
class FactorType:
    tag: str  # "III_1" | "III_lambda"
    lam: float
    source_group: RealSubgroup

    def describe(self) -> str:
        return "III_1" if self.tag == "III_1" else f"III_lambda, lambda = {self.lam:.15g}"


def _rational_gcd(values: Iterable[Fraction]) -> Fraction:
    values = [Fraction(v) for v in values if v != 0]
    if not values:
        return Fraction(0)
    num = reduce(math.gcd, (abs(v.numerator) for v in values))
    den = reduce(math.lcm, (v.denominator for v in values))
    return Fraction(num, den)


def _ratio(g: PotValue, base: PotValue) -> Fraction:
    return g.rat / base.rat if base.rat != 0 else g.irr / base.irr


def subgroup_closure(gens: Sequence[PotValue], beta: float, omega: float | None = None) -> RealSubgroup:
    """Closure of the subgroup of R generated by ``beta * g`` for g in ``gens``.

    All nonzero generators lie on one rational line iff every 2x2 determinant
    of (rat, irr) pairs against the first one vanishes; then the group is
    cyclic with step gcd(ratios) times that generator, otherwise it is dense.
    """
    nonzero = [g for g in gens if not g.is_zero()]
    if not nonzero or beta == 0:
        return RealSubgroup(ZERO_GROUP, beta)
    first = nonzero[0]
    for g in nonzero[1:]:
        if first.rat * g.irr - first.irr * g.rat != 0:
            return RealSubgroup(DENSE, beta, witness=(first, g))
    step = first * _rational_gcd(_ratio(g, first) for g in nonzero)
    if step.numeric(omega) < 0:
        step = -step
    return RealSubgroup(CYCLIC, beta, step, abs(beta) * step.numeric(omega))


def factor_type(rs: RealSubgroup) -> FactorType:
    if rs.tag == ZERO_GROUP:
        raise ZeroGroupError(
            "R_{G,F} came out as {0}; for a conservative weight on a simple graph algebra it never is"
        )
    if rs.tag == DENSE:
        return FactorType("III_1", 1.0, rs)
    return FactorType("III_lambda", math.exp(-rs.numeric_step), rs)


def _nw_block(g: Graph) -> list[str]:
    comps = nw_components(g)
    if not comps:
        raise NwEmptyError("no vertex lies on a cycle")
    if len(comps) > 1:
        raise NotIrreducibleError("non-wandering vertices do not form one strongly connected block")
    return comps[0]


def cycle_lattice_basis(g: Graph) -> list[dict[str, int]]:
    """Z-basis of integer circulations on the NW subgraph, as arrow -> multiplicity."""
    nw = _nw_block(g)
    nw_set = set(nw)
    arrows = [a for a in g.arrows if a.source in nw_set and a.range in nw_set]
    rows = []
    for v in nw:
        rows.append([(a.range == v) - (a.source == v) for a in arrows])
    basis = integer_kernel(rows, len(arrows))
    return [{a.id: c for a, c in zip(arrows, vec) if c} for vec in basis]


def cycle_lattice_generators(g: Graph) -> list[PotValue]:
    gens = []
    for circ in cycle_lattice_basis(g):
        total = ZERO
        for aid, c in circ.items():
            total = total + g.arrow(aid).potential * c
        gens.append(total)
    return gens


def closed_walk_values(g: Graph, base: str, max_len: int) -> set[PotValue]:
    """F-values of all closed walks at ``base`` with at most ``max_len`` arrows (including the empty walk).

    Depth-first over (vertex, length, F-so-far); a state reached twice is not
    expanded again since its continuations yield the same values.
    """
    seen: set[tuple[str, int, PotValue]] = set()
    values: set[PotValue] = {ZERO}
    stack = [(base, 0, ZERO)]
    while stack:
        v, depth, f = stack.pop()
        if depth == max_len:
            continue
        for a in g._out[v]:
            state = (a.range, depth + 1, f + a.potential)
            if state in seen:
                continue
            seen.add(state)
            if a.range == base:
                values.add(state[2])
            stack.append(state)
    return values


def closed_walk_oracle(g: Graph, base: str, max_len: int) -> RealSubgroup:
    if not g.has_vertex(base):
        raise PathError(f"unknown vertex {base!r}")
    if base not in non_wandering(g):
        raise NwEmptyError(f"vertex {base!r} is not non-wandering")
    values = sorted(closed_walk_values(g, base, max_len), key=lambda p: (p.rat, p.irr))
    # pairwise differences generate the same group as differences to one fixed walk
    ref = values[0]
    return subgroup_closure([f - ref for f in values], 1.0, g.omega)


def oracle_agreement(g: Graph, max_len: int = 10) -> tuple[bool, dict[str, RealSubgroup]]:
    """Compare the lattice group with the closed-walk group at every NW vertex."""
    lattice = subgroup_closure(cycle_lattice_generators(g), 1.0, g.omega)
    per_vertex = {v: closed_walk_oracle(g, v, max_len) for v in _nw_block(g)}
    return all(lattice.same_group(r) for r in per_vertex.values()), per_vertex


def check_gamma_preconditions(g: Graph, beta: float) -> None:
    if not is_cofinal(g):
        raise NotSimpleError("C*(G) is not simple: the graph is not cofinal")
    if not every_loop_has_exit(g):
        raise NotSimpleError("C*(G) is not simple: some loop has no exit")
    cls = classify(g, beta)
    if cls.verdict != CONSERVATIVE:
        if cls.rho is None:
            raise NwEmptyError("NW is empty")
        raise NotConservativeError(
            f"no conservative weight at beta = {beta:.15g} (verdict {cls.verdict}, rho = {cls.rho:.15g})"
        )


def connes_invariant(g: Graph, beta: float) -> RealSubgroup:
    check_gamma_preconditions(g, beta)
    return subgroup_closure(cycle_lattice_generators(g), beta, g.omega)


def connes_upper_bound(g: Graph, beta: float) -> RealSubgroup:
    """R_{G,F} at any beta; for non-conservative extremal weights it only bounds Gamma from above."""
    if not is_cofinal(g):
        raise NotSimpleError("the graph is not cofinal")
    return subgroup_closure(cycle_lattice_generators(g), beta, g.omega)
