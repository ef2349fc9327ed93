"""Structural predicates: cofinality, loop exits, simplicity, non-wandering set."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import PathError
from .graph import Graph, sinks


def successors(g: Graph, v: str) -> list[str]:
    return [a.range for a in g._out[v]]


def scc_condensation(g: Graph) -> list[list[str]]:
    """Strongly connected components in reverse topological order.

    Every arrow goes from a later component to an earlier or the same one.
    Iterative Tarjan; vertices inside a component keep declaration order.
    """
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    out: list[list[str]] = []
    counter = 0

    for root in g.vertices:
        if root in index:
            continue
        work = [(root, iter(successors(g, root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(successors(g, w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                out.append([u for u in g.vertices if u in comp])
    return out


def non_wandering(g: Graph) -> set[str]:
    """Vertices lying on a directed cycle of positive length."""
    nw: set[str] = set()
    for comp in scc_condensation(g):
        if len(comp) > 1:
            nw.update(comp)
        else:
            v = comp[0]
            if any(a.range == v for a in g._out[v]):
                nw.add(v)
    return nw


def nw_components(g: Graph) -> list[list[str]]:
    """The strongly connected components made of non-wandering vertices."""
    nw = non_wandering(g)
    return [c for c in scc_condensation(g) if c[0] in nw]


def hereditary_saturated_closure(g: Graph, seed: Iterable[str]) -> set[str]:
    h = set(seed)
    for v in h:
        if not g.has_vertex(v):
            raise PathError(f"unknown vertex {v!r}")
    changed = True
    while changed:
        changed = False
        for a in g.arrows:
            if a.source in h and a.range not in h:
                h.add(a.range)
                changed = True
        for v in g.vertices:
            # sinks never saturate in; finite graphs have no infinite emitters
            if v not in h and g._out[v] and all(a.range in h for a in g._out[v]):
                h.add(v)
                changed = True
    return h


def is_cofinal(g: Graph) -> bool:
    everything = set(g.vertices)
    return all(hereditary_saturated_closure(g, {v}) == everything for v in g.vertices)


def every_loop_has_exit(g: Graph) -> bool:
    """False iff some cycle runs entirely through vertices of out-degree one."""
    state: dict[str, int] = {}  # 1 = on current walk, 2 = finished
    for start in g.vertices:
        walk = []
        v = start
        while v not in state and len(g._out[v]) == 1:
            state[v] = 1
            walk.append(v)
            v = g._out[v][0].range
        if state.get(v) == 1:
            return False
        for u in walk:
            state[u] = 2
    return True


def is_simple(g: Graph) -> bool:
    return is_cofinal(g) and every_loop_has_exit(g)


def is_hereditary(g: Graph, h: set[str]) -> bool:
    return all(a.range in h for a in g.arrows if a.source in h)


@dataclass(frozen=True)
class StructureReport:
    is_cofinal: bool
    every_loop_has_exit: bool
    is_simple: bool
    nw_vertices: frozenset[str]
    nw_arrows: frozenset[str]
    sinks: frozenset[str]
    scc_partition: tuple[tuple[str, ...], ...]
    nw_hereditary: bool
    nw_strongly_connected: bool

    @property
    def failing_predicates(self) -> list[str]:
        failing = []
        if not self.is_cofinal:
            failing.append("cofinal")
        if not self.every_loop_has_exit:
            failing.append("every_loop_has_exit")
        return failing


def analyze(g: Graph) -> StructureReport:
    cofinal = is_cofinal(g)
    exits = every_loop_has_exit(g)
    nw = non_wandering(g)
    comps = scc_condensation(g)
    return StructureReport(
        is_cofinal=cofinal,
        every_loop_has_exit=exits,
        is_simple=cofinal and exits,
        nw_vertices=frozenset(nw),
        nw_arrows=frozenset(a.id for a in g.arrows if a.source in nw),
        sinks=frozenset(sinks(g)),
        scc_partition=tuple(tuple(c) for c in comps),
        nw_hereditary=is_hereditary(g, nw),
        nw_strongly_connected=len(nw_components(g)) == 1,
    )
