"""Finite directed multigraphs with exact edge potentials.

Potentials live in Q + Q*w where w is a single declared irrational symbol
carrying a decimal witness.  The witness is used only when a float is needed;
group computations work on the exact (rat, irr) pair.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator

from .errors import GraphFormatError, PathError

_RAT = r"-?\d+(?:/\d+)?"
_ID = r"[^\s#]+"
_POT_RE = re.compile(
    rf"^(?P<rat>{_RAT})(?:(?P<sign>[+-])(?P<irr>{_RAT})?(?P<name>[A-Za-z_]\w*))?$"
)
_OMEGA_RE = re.compile(rf"^omega\s+(?P<name>[A-Za-z_]\w*)\s*=\s*(?P<value>\S+)$")
_VERTEX_RE = re.compile(rf"^vertex\s+(?P<id>{_ID})$")
_ARROW_RE = re.compile(
    rf"^arrow\s+(?P<id>{_ID})\s+(?P<src>{_ID})\s+(?P<dst>{_ID})\s+F=(?P<pot>\S+)$"
)


def parse_rational(text: str) -> Fraction:
    num, _, den = text.partition("/")
    if den and int(den) == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(int(num), int(den) if den else 1)


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class PotValue:
    """Exact value ``rat + irr * w``."""

    rat: Fraction = Fraction(0)
    irr: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "rat", Fraction(self.rat))
        object.__setattr__(self, "irr", Fraction(self.irr))

    @classmethod
    def of(cls, value: int | str | Fraction | PotValue) -> PotValue:
        if isinstance(value, PotValue):
            return value
        if isinstance(value, str):
            return parse_potential(value)[0]
        return cls(Fraction(value))

    def __add__(self, other: PotValue) -> PotValue:
        if not isinstance(other, PotValue):
            return NotImplemented
        return PotValue(self.rat + other.rat, self.irr + other.irr)

    def __sub__(self, other: PotValue) -> PotValue:
        if not isinstance(other, PotValue):
            return NotImplemented
        return PotValue(self.rat - other.rat, self.irr - other.irr)

    def __neg__(self) -> PotValue:
        return PotValue(-self.rat, -self.irr)

    def __mul__(self, k: int | Fraction) -> PotValue:
        if isinstance(k, PotValue) or not isinstance(k, (int, Fraction)):
            return NotImplemented
        return PotValue(self.rat * k, self.irr * k)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return self.rat == 0 and self.irr == 0

    @property
    def is_rational(self) -> bool:
        return self.irr == 0

    def numeric(self, omega: float | None = None) -> float:
        if self.irr == 0:
            return float(self.rat)
        if omega is None:
            raise ValueError("irrational potential needs an omega witness")
        return float(self.rat) + float(self.irr) * omega

    def format(self, omega_name: str = "w") -> str:
        if self.irr == 0:
            return format_rational(self.rat)
        return f"{format_rational(self.rat)}+{format_rational(self.irr)}{omega_name}"

    def __str__(self) -> str:
        return self.format()


ZERO = PotValue()


def parse_potential(text: str) -> tuple[PotValue, str | None]:
    """Parse ``p``, ``p/q`` or ``p/q+r/s<name>``; returns the value and the symbol name used."""
    m = _POT_RE.match(text)
    if not m:
        raise ValueError(f"malformed potential {text!r}")
    rat = parse_rational(m["rat"])
    if m["name"] is None:
        return PotValue(rat), None
    irr = parse_rational(m["irr"]) if m["irr"] else Fraction(1)
    if m["sign"] == "-":
        irr = -irr
    return PotValue(rat, irr), m["name"]


@dataclass(frozen=True)
class Arrow:
    id: str
    source: str
    range: str
    potential: PotValue


@dataclass(frozen=True)
class Graph:
    vertices: tuple[str, ...]
    arrows: tuple[Arrow, ...]
    omega_name: str | None = None
    omega_text: str | None = None
    _arrow_index: dict = field(init=False, repr=False, compare=False, hash=False)
    _vertex_index: dict = field(init=False, repr=False, compare=False, hash=False)
    _out: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "arrows", tuple(self.arrows))
        if not self.vertices:
            raise GraphFormatError("graph needs at least one vertex")
        vindex: dict[str, int] = {}
        for v in self.vertices:
            if v in vindex:
                raise GraphFormatError(f"duplicate vertex id {v!r}")
            vindex[v] = len(vindex)
        aindex: dict[str, Arrow] = {}
        out: dict[str, list[Arrow]] = {v: [] for v in self.vertices}
        for a in self.arrows:
            if a.id in aindex:
                raise GraphFormatError(f"duplicate arrow id {a.id!r}")
            for end in (a.source, a.range):
                if end not in vindex:
                    raise GraphFormatError(f"arrow {a.id!r} references undeclared vertex {end!r}")
            if a.potential.irr != 0 and self.omega_text is None:
                raise GraphFormatError(f"arrow {a.id!r} uses an irrational part but no omega is declared")
            aindex[a.id] = a
            out[a.source].append(a)
        object.__setattr__(self, "_vertex_index", vindex)
        object.__setattr__(self, "_arrow_index", aindex)
        object.__setattr__(self, "_out", {v: tuple(arrs) for v, arrs in out.items()})

    @property
    def omega(self) -> float | None:
        return None if self.omega_text is None else float(self.omega_text)

    def arrow(self, arrow_id: str) -> Arrow:
        try:
            return self._arrow_index[arrow_id]
        except KeyError:
            raise PathError(f"unknown arrow {arrow_id!r}") from None

    def has_vertex(self, v: str) -> bool:
        return v in self._vertex_index

    def has_arrow(self, a: str) -> bool:
        return a in self._arrow_index

    def vertex_position(self, v: str) -> int:
        self._check_vertex(v)
        return self._vertex_index[v]

    def _check_vertex(self, v: str) -> None:
        if v not in self._vertex_index:
            raise PathError(f"unknown vertex {v!r}")

    def numeric(self, p: PotValue) -> float:
        return p.numeric(self.omega)


def out_arrows(g: Graph, v: str) -> tuple[Arrow, ...]:
    g._check_vertex(v)
    return g._out[v]


def is_sink(g: Graph, v: str) -> bool:
    return not out_arrows(g, v)


def sinks(g: Graph) -> list[str]:
    return [v for v in g.vertices if not g._out[v]]


@dataclass(frozen=True)
class Path:
    """A finite path: a sequence of arrow ids, or a lone vertex when empty."""

    arrows: tuple[str, ...] = ()
    anchor: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "arrows", tuple(self.arrows))
        if not self.arrows and self.anchor is None:
            raise PathError("a length-0 path needs an anchor vertex")
        if self.arrows:
            object.__setattr__(self, "anchor", None)

    @classmethod
    def vertex(cls, v: str) -> Path:
        return cls((), v)

    @classmethod
    def of(cls, *arrow_ids: str) -> Path:
        return cls(tuple(arrow_ids))

    def __len__(self) -> int:
        return len(self.arrows)

    def __str__(self) -> str:
        return ".".join(self.arrows) if self.arrows else str(self.anchor)


def check_path(g: Graph, p: Path) -> tuple[str, str]:
    """Validate composability and return ``(source, range)``."""
    if not p.arrows:
        g._check_vertex(p.anchor)
        return p.anchor, p.anchor
    arrs = [g.arrow(a) for a in p.arrows]
    for prev, nxt in zip(arrs, arrs[1:]):
        if prev.range != nxt.source:
            raise PathError(f"arrows {prev.id!r} and {nxt.id!r} are not composable")
    return arrs[0].source, arrs[-1].range


def path_source(g: Graph, p: Path) -> str:
    return check_path(g, p)[0]


def path_range(g: Graph, p: Path) -> str:
    return check_path(g, p)[1]


def path_potential(g: Graph, p: Path) -> PotValue:
    check_path(g, p)
    total = ZERO
    for a in p.arrows:
        total = total + g.arrow(a).potential
    return total


def concat(g: Graph, p: Path, q: Path) -> Path:
    if path_range(g, p) != path_source(g, q):
        raise PathError(f"paths {p} and {q} are not composable")
    if not p.arrows:
        return q
    if not q.arrows:
        return p
    return Path(p.arrows + q.arrows)


def paths_from(g: Graph, v: str, length: int) -> Iterator[Path]:
    """All paths of exactly ``length`` arrows starting at ``v``, in declaration order."""
    if length == 0:
        yield Path.vertex(v)
        return

    def walk(at: str, prefix: tuple[str, ...]) -> Iterator[Path]:
        if len(prefix) == length:
            yield Path(prefix)
            return
        for a in g._out[at]:
            yield from walk(a.range, prefix + (a.id,))

    yield from walk(v, ())


def parse_graph(text: str) -> Graph:
    omega_name = omega_text = None
    vertices: list[str] = []
    arrows: list[Arrow] = []
    seen_v: set[str] = set()
    seen_a: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _OMEGA_RE.match(line):
            if omega_name is not None:
                raise GraphFormatError("omega declared twice", lineno)
            if arrows:
                raise GraphFormatError("omega must be declared before arrows", lineno)
            try:
                float(m["value"])
            except ValueError:
                raise GraphFormatError(f"bad omega value {m['value']!r}", lineno) from None
            omega_name, omega_text = m["name"], m["value"]
        elif m := _VERTEX_RE.match(line):
            if m["id"] in seen_v:
                raise GraphFormatError(f"duplicate vertex id {m['id']!r}", lineno)
            seen_v.add(m["id"])
            vertices.append(m["id"])
        elif m := _ARROW_RE.match(line):
            aid = m["id"]
            if aid in seen_a:
                raise GraphFormatError(f"duplicate arrow id {aid!r}", lineno)
            for end in (m["src"], m["dst"]):
                if end not in seen_v:
                    raise GraphFormatError(f"arrow {aid!r} references undeclared vertex {end!r}", lineno)
            try:
                pot, name = parse_potential(m["pot"])
            except ValueError as exc:
                raise GraphFormatError(str(exc), lineno) from None
            if name is not None:
                if omega_name is None:
                    raise GraphFormatError(f"symbol {name!r} used without an omega declaration", lineno)
                if name != omega_name:
                    raise GraphFormatError(f"unknown irrational symbol {name!r}", lineno)
            seen_a.add(aid)
            arrows.append(Arrow(aid, m["src"], m["dst"], pot))
        else:
            raise GraphFormatError(f"cannot parse {line!r}", lineno)
    if not vertices:
        raise GraphFormatError("no vertices declared")
    return Graph(tuple(vertices), tuple(arrows), omega_name, omega_text)


def serialize_graph(g: Graph) -> str:
    lines = []
    name = g.omega_name or "w"
    if g.omega_text is not None:
        lines.append(f"omega {name} = {g.omega_text}")
    lines.extend(f"vertex {v}" for v in g.vertices)
    lines.extend(
        f"arrow {a.id} {a.source} {a.range} F={a.potential.format(name)}" for a in g.arrows
    )
    return "\n".join(lines) + "\n"


def make_graph(
    vertices: Iterable[str],
    arrows: Iterable[tuple[str, str, str, object]],
    omega: tuple[str, str] | None = None,
) -> Graph:
    """Convenience constructor: arrows are ``(id, src, dst, potential)`` with any ``PotValue.of`` input."""
    name, text = omega if omega else (None, None)
    return Graph(
        tuple(vertices),
        tuple(Arrow(i, s, r, PotValue.of(f)) for i, s, r, f in arrows),
        name,
        text,
    )
