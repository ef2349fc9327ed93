import math
import random

import pytest

from gca.errors import InputError, NotHarmonicError, PathError
from gca.graph import Path, make_graph, paths_from
from gca.measure import (
    ConformalMeasure,
    additivity_defect,
    all_paths,
    conformality_test,
    corner_state_value,
    cylinder_concordance,
    cylinder_measure,
    markov_kernel,
    sample_paths,
    weight_value,
)
from gca.spectral import critical_beta, harmonic_vector

from helpers import dense, e1, e2

X = 2 / (1 + math.sqrt(5))
LN2 = math.log(2)


@pytest.fixture(scope="module")
def e2_setup():
    g = e2()
    b = critical_beta(g).beta
    h = harmonic_vector(g, b)
    return g, b, h


def test_weight_value_examples():
    g = e1()
    psi = {"v": 1.0}
    assert weight_value(g, LN2, psi, Path.of("a"), Path.of("a")) == pytest.approx(0.5, abs=1e-15)
    assert weight_value(g, LN2, psi, Path.of("a"), Path.of("b")) == 0.0
    assert weight_value(g, LN2, psi, Path.of("a", "b"), Path.of("a")) == 0.0
    assert weight_value(g, LN2, {"v": 3.0}, Path.vertex("v"), Path.vertex("v")) == 3.0


def test_corner_state_value_examples():
    g = e1()
    psi = {"v": 2.0}
    assert corner_state_value(g, LN2, psi, "v", Path.of("a"), Path.of("a")) == pytest.approx(0.5)
    assert corner_state_value(g, LN2, psi, "v", Path.vertex("v"), Path.vertex("v")) == 1.0
    assert corner_state_value(g, LN2, psi, "v", Path.of("a"), Path.of("b")) == 0.0


def test_corner_state_base_mismatch(e2_setup):
    g, b, h = e2_setup
    with pytest.raises(PathError):
        corner_state_value(g, b, h, "u", Path.of("b"), Path.of("b"))


def test_cylinder_examples(e2_setup):
    g, b, h = e2_setup
    cm = ConformalMeasure(g, b, h)
    assert cylinder_measure(cm, Path.vertex("v")) == h.values["v"]
    assert cylinder_measure(cm, Path.of("l")) == pytest.approx(X, abs=1e-10)
    total = cylinder_measure(cm, Path.of("l")) + cylinder_measure(cm, Path.of("a"))
    assert total == pytest.approx(cylinder_measure(cm, Path.vertex("u")), abs=1e-12)


@pytest.mark.parametrize("make", [e1, e2, dense])
def test_cylinder_additivity_up_to_length_4(make):
    g = make()
    b = critical_beta(g).beta
    cm = ConformalMeasure(g, b, harmonic_vector(g, b))
    for mu in all_paths(g, 4):
        assert additivity_defect(cm, mu) <= 1e-9
        assert cylinder_measure(cm, mu) > 0


@pytest.mark.parametrize("make", [e1, e2, dense])
def test_shift_conformality_identity(make):
    g = make()
    b = critical_beta(g).beta
    cm = ConformalMeasure(g, b, harmonic_vector(g, b))
    for a in g.arrows:
        rep = conformality_test(cm, None, a.id, max_len=4)
        assert rep.max_rel_deviation <= 1e-12
        assert rep.cylinders_checked == sum(1 for k in range(5) for _ in paths_from(g, a.range, k))


def test_markov_kernel_examples(e2_setup):
    k = markov_kernel(e1(), LN2, {"v": 1.0})
    assert k.prob("v", "a") == pytest.approx(0.5) and k.prob("v", "b") == pytest.approx(0.5)
    g, b, h = e2_setup
    k = markov_kernel(g, b, h)
    assert k.prob("u", "l") == pytest.approx(X, abs=1e-10)
    assert k.prob("u", "a") == pytest.approx(X * X, abs=1e-10)
    assert k.prob("v", "b") == pytest.approx(1.0, abs=1e-10)


def test_markov_kernel_sink_row_is_absorbing():
    g = make_graph(["u", "v"], [("a", "u", "v", 0)])
    k = markov_kernel(g, 1.0, {"u": 1.0, "v": 1.0})
    assert k.rows["v"] == ()
    assert "v" in k.absorbing
    with pytest.raises(InputError):
        sample_paths(k, "v", 5, 10, 0)


def test_kernel_stochastic_iff_harmonic(e2_setup):
    g, b, h = e2_setup
    rng = random.Random(3)
    markov_kernel(g, b, h)
    for _ in range(20):
        v = rng.choice(g.vertices)
        bumped = dict(h.values)
        bumped[v] *= 1 + rng.choice([-1, 1]) * rng.uniform(1e-4, 0.2)
        with pytest.raises(NotHarmonicError):
            markov_kernel(g, b, bumped)


def test_sampling_matches_kernel_e1():
    k = markov_kernel(e1(), LN2, {"v": 1.0})
    s = sample_paths(k, "v", 20, 20_000, seed=11)
    assert s.frequency(Path.of("a")) == pytest.approx(0.5, abs=0.01)
    assert s.return_fraction == 1.0
    assert s.count == 20_000 and s.absorbed == 0


def test_sampling_concordance_e2(e2_setup):
    g, b, h = e2_setup
    k = markov_kernel(g, b, h)
    s = sample_paths(k, "u", 100, 20_000, seed=5)
    cm = ConformalMeasure(g, b, h)
    ratio = s.frequency(Path.of("l")) / s.frequency(Path.vertex("u"))
    assert abs(ratio - X) < 0.01
    checks = cylinder_concordance(cm, s)
    assert {c.path for c in checks} >= {"l", "a", "l.l", "a.b", "l.a.b", "a.b.l"}
    assert max(c.z for c in checks) < 5
    assert s.return_fraction >= 0.99


def test_sampling_is_deterministic(e2_setup):
    g, b, h = e2_setup
    k = markov_kernel(g, b, h)
    one = sample_paths(k, "u", 30, 3000, seed=42, workers=3)
    two = sample_paths(k, "u", 30, 3000, seed=42, workers=3)
    assert one == two
    other = sample_paths(k, "u", 30, 3000, seed=43, workers=3)
    assert other != one


def test_merge_is_order_independent(e2_setup):
    g, b, h = e2_setup
    k = markov_kernel(g, b, h)
    x = sample_paths(k, "u", 10, 500, seed=1)
    y = sample_paths(k, "u", 10, 700, seed=2)
    assert x + y == y + x
    assert (x + y).count == 1200


def test_sampling_absorbs_at_sinks():
    # psi_u = exp(-1) psi_u + psi_v at beta = 1
    g = make_graph(["u", "v"], [("l", "u", "u", 1), ("a", "u", "v", 0)])
    k = markov_kernel(g, 1.0, {"u": 1.0, "v": 1 - math.exp(-1)})
    s = sample_paths(k, "u", 50, 2000, seed=0)
    assert s.absorbed == 2000
    assert s.cylinders[("a",)] + s.cylinders[("l",)] == 2000


def test_conformality_monte_carlo_cross_check(e2_setup):
    g, b, h = e2_setup
    cm = ConformalMeasure(g, b, h)
    k = markov_kernel(g, b, h)
    rep = conformality_test(cm, k, "l", samples=20_000, seed=9)
    assert rep.max_rel_deviation <= 1e-12
    assert rep.mc_checked > 0
    assert rep.mc_within_3se


def test_sampling_rejects_bad_arguments(e2_setup):
    g, b, h = e2_setup
    k = markov_kernel(g, b, h)
    with pytest.raises(InputError):
        sample_paths(k, "u", 0, 10, 0)
    with pytest.raises(PathError):
        sample_paths(k, "zz", 5, 10, 0)
