"""One vertex with countably many loops (O_infinity) under a generalized gauge action.

The loop potentials form a sequence: an explicit head t_1..t_N followed by an
optional arithmetic tail t_n = c*n + d for n > N.  Without a tail the model is
an ordinary finite graph and is handed to the graph pipeline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import InputError, NoSignChangeError, NotConservativeError, NwEmptyError
from .gamma import FactorType, RealSubgroup, factor_type, subgroup_closure
from .graph import Arrow, Graph, PotValue, parse_potential, parse_rational
from .spectral import CONSERVATIVE_TOL, critical_beta

INF = math.inf


@dataclass(frozen=True)
class ArithmeticTail:
    c: Fraction
    d: Fraction

    def term(self, n: int) -> PotValue:
        return PotValue(self.c * n + self.d)


@dataclass(frozen=True)
class SequenceSpec:
    head: tuple[PotValue, ...] = ()
    tail: ArithmeticTail | None = None
    omega_name: str | None = None
    omega_text: str | None = None

    @property
    def omega(self) -> float | None:
        return None if self.omega_text is None else float(self.omega_text)

    def term(self, n: int) -> PotValue:
        if n <= len(self.head):
            return self.head[n - 1]
        if self.tail is None:
            raise IndexError(n)
        return self.tail.term(n)

    def numeric_head(self) -> list[float]:
        return [t.numeric(self.omega) for t in self.head]


def parse_sequence(head: str | None, tail: str | None, omega: str | None = None) -> SequenceSpec:
    """Build a SequenceSpec from CLI strings: ``"1,3/2"``, ``"c=1,d=0"`` and ``"w=1.414..."``."""
    omega_name = omega_text = None
    if omega:
        omega_name, _, omega_text = omega.partition("=")
        try:
            float(omega_text)
        except ValueError:
            raise InputError(f"bad omega value {omega_text!r}") from None
    terms = []
    for tok in (head or "").split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            pot, name = parse_potential(tok)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        if name is not None and name != omega_name:
            raise InputError(f"symbol {name!r} used without --omega {name}=<decimal>")
        terms.append(pot)
    arith = None
    if tail:
        fields = dict(part.split("=", 1) for part in tail.split(",") if "=" in part)
        if set(fields) != {"c", "d"}:
            raise InputError("tail must look like c=<rational>,d=<rational>")
        try:
            arith = ArithmeticTail(parse_rational(fields["c"]), parse_rational(fields["d"]))
        except ValueError as exc:
            raise InputError(str(exc)) from None
    return SequenceSpec(tuple(terms), arith, omega_name, omega_text)


def as_graph(s: SequenceSpec) -> Graph:
    if s.tail is not None:
        raise InputError("a sequence with an infinite tail is not a finite graph")
    arrows = tuple(Arrow(f"a{i}", "v", "v", t) for i, t in enumerate(s.head, start=1))
    return Graph(("v",), arrows, s.omega_name, s.omega_text)


def _exp_neg(x: float) -> float:
    try:
        return math.exp(-x)
    except OverflowError:
        return INF


def partition_value(s: SequenceSpec, beta: float) -> float:
    """Z(beta) = sum_n exp(-beta t_n), with the arithmetic tail summed in closed form."""
    total = sum(_exp_neg(beta * t) for t in s.numeric_head())
    if s.tail is None:
        return total
    c, d = float(s.tail.c), float(s.tail.d)
    if c <= 0 or beta <= 0:
        return INF
    n0 = len(s.head) + 1
    # sum_{n >= n0} exp(-beta (c n + d)) = exp(-beta (c n0 + d)) / (1 - exp(-beta c))
    return total + _exp_neg(beta * (c * n0 + d)) / -math.expm1(-beta * c)


def truncated_partition(s: SequenceSpec, beta: float, m: int) -> float:
    return sum(_exp_neg(beta * s.term(n).numeric(s.omega)) for n in range(1, m + 1))


def critical_beta0(s: SequenceSpec, tol: float = 1e-12) -> float | None:
    """The beta0 with Z(beta0) = 1, or None when Z never crosses 1."""
    if s.tail is None:
        if not s.head:
            return None
        try:
            return critical_beta(as_graph(s), tol=tol).beta
        except (NoSignChangeError, NwEmptyError):
            return None
    if s.tail.c <= 0:
        return None
    lo = 1.0
    for _ in range(200):
        if partition_value(s, lo) > 1:
            break
        lo /= 2
    else:
        return None
    hi = max(1.0, lo)
    for _ in range(64):
        if partition_value(s, hi) < 1:
            break
        hi *= 2
    else:
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if partition_value(s, mid) > 1:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class KmsExistence:
    exists: bool
    conservative: bool
    z: float
    note: str


def kms_existence(s: SequenceSpec, beta: float, tol: float = CONSERVATIVE_TOL) -> KmsExistence:
    z = partition_value(s, beta)
    if s.tail is None:
        # finitely many loops: no infinite emitter, so only Z = 1 is allowed
        ok = abs(z - 1) <= tol
        note = "finite graph: KMS state iff Z(beta) = 1" if ok else "no KMS state: Z(beta) != 1 with finitely many loops"
        return KmsExistence(ok, ok, z, note)
    if z == INF:
        return KmsExistence(False, False, z, "no KMS states: Z(beta) diverges")
    if abs(z - 1) <= tol:
        return KmsExistence(True, True, z, "unique KMS state, conservative")
    if z < 1:
        return KmsExistence(True, False, z, "unique KMS state from a proper almost-harmonic vector (not conservative)")
    return KmsExistence(False, False, z, "no KMS states: Z(beta) > 1")


def tail_generators(s: SequenceSpec) -> list[PotValue]:
    """Head terms plus two consecutive tail terms.

    c(N+1)+d and c(N+2)+d generate c and hence every later c*n + d.
    """
    gens = list(s.head)
    if s.tail is not None:
        n = len(s.head)
        gens += [s.tail.term(n + 1), s.tail.term(n + 2)]
    return gens


def oinf_connes_group(s: SequenceSpec, beta0: float, tol: float = CONSERVATIVE_TOL) -> tuple[RealSubgroup, FactorType]:
    ex = kms_existence(s, beta0, tol)
    if not ex.conservative:
        raise NotConservativeError(f"Z({beta0:.15g}) = {ex.z:.15g} is not 1; the state is not conservative")
    rs = subgroup_closure(tail_generators(s), beta0, s.omega)
    return rs, factor_type(rs)
