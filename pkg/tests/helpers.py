"""Shared graph constructors and random families for the test-suite."""
from __future__ import annotations

import random
from fractions import Fraction

from gca.graph import Arrow, Graph, PotValue, make_graph

SQRT2 = "1.4142135623730951"


def e1() -> Graph:
    return make_graph(["v"], [("a", "v", "v", 1), ("b", "v", "v", 1)])


def e2() -> Graph:
    return make_graph(["u", "v"], [("l", "u", "u", 1), ("a", "u", "v", 1), ("b", "v", "u", 1)])


def dense() -> Graph:
    return make_graph(["v"], [("a", "v", "v", 1), ("b", "v", "v", "0+1w")], omega=("w", SQRT2))


def two_cycle(fa=1, fb=1) -> Graph:
    return make_graph(["u", "v"], [("a", "u", "v", fa), ("b", "v", "u", fb)])


def random_strongly_connected(rng: random.Random, max_vertices: int = 6, max_arrows: int = 12, max_den: int = 6) -> Graph:
    """A random strongly connected multigraph: a Hamiltonian cycle plus random extra arrows."""
    n = rng.randint(1, max_vertices)
    verts = [f"v{i}" for i in range(n)]
    order = verts[:]
    rng.shuffle(order)
    pairs = [(order[i], order[(i + 1) % n]) for i in range(n)]
    m = rng.randint(n, max_arrows)
    pairs += [(rng.choice(verts), rng.choice(verts)) for _ in range(m - n)]
    rng.shuffle(pairs)

    def pot() -> PotValue:
        return PotValue(Fraction(rng.randint(-6, 6), rng.randint(1, max_den)))

    arrows = tuple(Arrow(f"a{i}", s, r, pot()) for i, (s, r) in enumerate(pairs))
    return Graph(tuple(verts), arrows)


def random_graph(rng: random.Random, max_vertices: int = 6, max_arrows: int = 10) -> Graph:
    """Arbitrary random multigraph (may have sinks, be disconnected, or acyclic)."""
    n = rng.randint(1, max_vertices)
    verts = [f"v{i}" for i in range(n)]
    m = rng.randint(0, max_arrows)
    arrows = [
        (f"a{i}", rng.choice(verts), rng.choice(verts), Fraction(rng.randint(1, 6), rng.randint(1, 3)))
        for i in range(m)
    ]
    return make_graph(verts, arrows)


def relabel(g: Graph, vmap: dict[str, str], amap: dict[str, str]) -> Graph:
    return Graph(
        tuple(vmap[v] for v in g.vertices),
        tuple(Arrow(amap[a.id], vmap[a.source], vmap[a.range], a.potential) for a in g.arrows),
        g.omega_name,
        g.omega_text,
    )


def scale_potentials(g: Graph, c: Fraction) -> Graph:
    return Graph(g.vertices, tuple(Arrow(a.id, a.source, a.range, a.potential * c) for a in g.arrows), g.omega_name, g.omega_text)
