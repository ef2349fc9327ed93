import itertools
import math
import random
from fractions import Fraction
from functools import reduce

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from gca.errors import NotConservativeError, NotSimpleError, NwEmptyError, ZeroGroupError
from gca.gamma import (
    CYCLIC,
    DENSE,
    ZERO_GROUP,
    RealSubgroup,
    closed_walk_oracle,
    closed_walk_values,
    connes_invariant,
    connes_upper_bound,
    cycle_lattice_basis,
    cycle_lattice_generators,
    factor_type,
    oracle_agreement,
    subgroup_closure,
)
from gca.graph import PotValue, make_graph
from gca.lattice import integer_kernel
from gca.spectral import critical_beta

from helpers import dense, e1, e2, random_strongly_connected, two_cycle

LN2 = math.log(2)
OMEGA = 1.4142135623730951
P = PotValue


def test_lattice_kernel_small():
    assert integer_kernel([[0, 0]], 2) == [[1, 0], [0, 1]]
    basis = integer_kernel([[2, 4, 6]], 3)
    assert all(2 * x + 4 * y + 6 * z == 0 for x, y, z in basis)
    assert len(basis) == 2
    # index check: the 2x2 minors of the basis have gcd 1
    m = sympy.Matrix(basis)
    minors = [m[:, list(c)].det() for c in itertools.combinations(range(3), 2)]
    assert reduce(math.gcd, (int(abs(x)) for x in minors)) == 1


@pytest.mark.parametrize("seed", range(25))
def test_lattice_kernel_is_saturated_basis(seed):
    rng = random.Random(seed)
    rows = [[rng.randint(-3, 3) for _ in range(5)] for _ in range(rng.randint(1, 3))]
    basis = integer_kernel(rows, 5)
    m = sympy.Matrix(rows)
    assert len(basis) == 5 - m.rank()
    for vec in basis:
        assert all(sum(r[j] * vec[j] for j in range(5)) == 0 for r in rows)
    if basis:
        b = sympy.Matrix(basis)
        k = len(basis)
        minors = [b[:, list(c)].det() for c in itertools.combinations(range(5), k)]
        assert reduce(math.gcd, (int(abs(x)) for x in minors)) == 1


def test_cycle_lattice_examples():
    assert cycle_lattice_generators(e1()) == [P(1), P(1)]
    assert subgroup_closure(cycle_lattice_generators(e1()), 1.0).step == P(1)
    gens = cycle_lattice_generators(e2())
    assert len(gens) == 2
    assert subgroup_closure(gens, 1.0).step == P(1)
    assert set(cycle_lattice_generators(dense())) == {P(1), P(0, 1)}


def test_cycle_lattice_basis_size_matches_cyclomatic_number():
    for seed in range(30):
        g = random_strongly_connected(random.Random(seed))
        assert len(cycle_lattice_basis(g)) == len(g.arrows) - len(g.vertices) + 1


def test_subgroup_closure_examples():
    rs = subgroup_closure([P(1), P(2)], LN2)
    assert rs.tag == CYCLIC and rs.step == P(1) and rs.numeric_step == pytest.approx(LN2)
    assert subgroup_closure([P(Fraction(3, 2)), P(1)], 1.0).step == P(Fraction(1, 2))
    rs = subgroup_closure([P(1), P(0, 1)], 0.8, OMEGA)
    assert rs.tag == DENSE and rs.witness == (P(1), P(0, 1))
    assert subgroup_closure([P(0), P(0)], 1.0).tag == ZERO_GROUP
    assert subgroup_closure([], 1.0).tag == ZERO_GROUP


def test_subgroup_closure_irrational_line():
    # 2w and 3w are commensurable: step w
    rs = subgroup_closure([P(0, 2), P(0, -3)], 1.0, OMEGA)
    assert rs.tag == CYCLIC and rs.step == P(0, 1)
    rs = subgroup_closure([P(1, 1), P(-2, -2)], 1.0, OMEGA)
    assert rs.step == P(1, 1)
    rs = subgroup_closure([P(1, -1)], 1.0, OMEGA)  # 1 - w < 0, so the positive step is w - 1
    assert rs.step == P(-1, 1) and rs.numeric_step > 0


rats = st.fractions(min_value=-20, max_value=20, max_denominator=12)


@given(st.lists(rats, min_size=1, max_size=6))
def test_rational_step_generates_and_is_minimal(values):
    rs = subgroup_closure([P(v) for v in values], 1.0)
    nonzero = [v for v in values if v != 0]
    if not nonzero:
        assert rs.tag == ZERO_GROUP
        return
    step = rs.step.rat
    assert step > 0
    assert all((v / step).denominator == 1 for v in nonzero)
    # the step is an integer combination of the generators: its inverse image is Z
    den = math.lcm(*(v.denominator for v in nonzero))
    assert step == Fraction(reduce(math.gcd, (abs(int(v * den)) for v in nonzero)), den)


def test_factor_type():
    ft = factor_type(subgroup_closure([P(1)], LN2))
    assert ft.tag == "III_lambda" and ft.lam == pytest.approx(0.5)
    assert factor_type(RealSubgroup(DENSE, 1.0, witness=(P(1), P(0, 1)))).tag == "III_1"
    with pytest.raises(ZeroGroupError):
        factor_type(RealSubgroup(ZERO_GROUP))


def test_closed_walk_oracle_examples():
    assert closed_walk_values(e1(), "v", 3) == {P(0), P(1), P(2), P(3)}
    assert closed_walk_oracle(e1(), "v", 3).step == P(1)
    assert closed_walk_oracle(e2(), "u", 6).step == P(1)
    assert closed_walk_values(two_cycle(), "u", 6) == {P(0), P(2), P(4), P(6)}
    assert closed_walk_oracle(two_cycle(), "u", 6).step == P(2)
    with pytest.raises(NwEmptyError):
        closed_walk_oracle(make_graph(["u", "v"], [("a", "u", "v", 1)]), "u", 4)


@pytest.mark.parametrize("seed", range(40))
def test_oracle_agrees_with_lattice(seed):
    g = random_strongly_connected(random.Random(10_000 + seed), max_vertices=4, max_arrows=8)
    ok, per_vertex = oracle_agreement(g, max_len=12)
    assert ok, per_vertex


def test_oracle_is_a_subgroup_of_the_lattice_group_at_any_cap():
    rng = random.Random(77)
    for _ in range(20):
        g = random_strongly_connected(rng)
        lattice = subgroup_closure(cycle_lattice_generators(g), 1.0)
        for v in g.vertices:
            for cap in (2, 5):
                small = closed_walk_oracle(g, v, cap)
                if small.tag == CYCLIC:
                    assert (small.step.rat / lattice.step.rat).denominator == 1


def test_connes_invariant_examples():
    rs = connes_invariant(e1(), LN2)
    assert rs.tag == CYCLIC and rs.numeric_step == pytest.approx(LN2)
    b = critical_beta(e2()).beta
    assert connes_invariant(e2(), b).numeric_step == pytest.approx(b)
    bd = critical_beta(dense()).beta
    assert connes_invariant(dense(), bd).tag == DENSE


def test_connes_invariant_preconditions():
    with pytest.raises(NotSimpleError, match="no exit"):
        connes_invariant(two_cycle(), 0.0)
    noncofinal = make_graph(["u", "v", "w"], [("l", "u", "u", 1), ("a", "u", "v", 1)])
    with pytest.raises(NotSimpleError, match="cofinal"):
        connes_invariant(noncofinal, 0.0)
    with pytest.raises(NotConservativeError):
        connes_invariant(e1(), 1.0)


def test_beta_scaling_of_steps():
    g = e2()
    a, b = connes_upper_bound(g, 0.3), connes_upper_bound(g, 1.2)
    assert a.step == b.step
    assert a.numeric_step / b.numeric_step == pytest.approx(0.3 / 1.2)


def test_upper_bound_available_off_criticality():
    rs = connes_upper_bound(e1(), 1.0)
    assert rs.tag == CYCLIC and rs.numeric_step == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_base_vertex_independence(seed):
    g = random_strongly_connected(random.Random(seed), max_vertices=4, max_arrows=7)
    groups = [closed_walk_oracle(g, v, 12) for v in g.vertices]
    assert all(groups[0].same_group(x) for x in groups[1:])
