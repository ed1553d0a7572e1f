"""In-memory knowledge graph: loading, neighbour queries, discovery, sameAs
mapping, entity types and the Linked Data Semantic Distance (LDSD).

The query surface mirrors what a SPARQL endpoint would answer (one-hop
lookups by subject/property or property/object), so a remote client can be
dropped in behind the same functions later.
"""

from __future__ import annotations

import enum
import logging
import re
import threading
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

from .validation import check_iri, strip_brackets

log = logging.getLogger(__name__)

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
DBO = "http://dbpedia.org/ontology/"
WDT = "http://www.wikidata.org/prop/direct/"


class GraphParseError(ValueError):
    """A triple file line could not be parsed."""

    def __init__(self, path, lineno: int, line: str):
        super().__init__(f"{path}:{lineno}: malformed triple: {line!r}")
        self.path = path
        self.lineno = lineno


class Direction(enum.Enum):
    DIRECT = "direct"
    INVERSE = "inverse"

    @classmethod
    def parse(cls, value: "str | Direction") -> "Direction":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"direction must be 'direct' or 'inverse', got {value!r}") from None


class Triple(NamedTuple):
    subject: str
    property: str
    object: str


@dataclass(frozen=True)
class PropertySpec:
    property: str
    direction: Direction = Direction.INVERSE

    def __post_init__(self):
        object.__setattr__(self, "property", check_iri(self.property))
        object.__setattr__(self, "direction", Direction.parse(self.direction))


@dataclass(frozen=True, order=True)
class DiscoveryRecord:
    discovered: str
    source: str
    ldsd: float | None = None

    def __post_init__(self):
        if self.discovered == self.source:
            raise ValueError(f"discovered entity equals its source: {self.source}")
        if self.ldsd is not None and not 0.0 <= self.ldsd <= 1.0:
            raise ValueError(f"LDSD out of [0, 1]: {self.ldsd}")


def _spec(prop: str, direction=Direction.INVERSE) -> PropertySpec:
    return PropertySpec(prop, direction)


# Discovery properties per (domain, knowledge base). Inverse direction: find
# resources that have the annotated entity as object, e.g. films starring an actor.
DISCOVERY_PRESETS: dict[tuple[str, str], tuple[PropertySpec, ...]] = {
    ("movie", "dbpedia"): (_spec(DBO + "starring"), _spec(DBO + "director")),
    ("movie", "wikidata"): (_spec(WDT + "P161"), _spec(WDT + "P57")),
    ("book", "dbpedia"): (_spec(DBO + "author"),),
    ("book", "wikidata"): (_spec(WDT + "P50"),),
    ("music", "dbpedia"): (_spec(DBO + "artist"), _spec(DBO + "writer")),
    ("music", "wikidata"): (_spec(WDT + "P175"), _spec(WDT + "P676")),
}


def _freeze(index: dict) -> dict[str, dict[str, frozenset[str]]]:
    return {k: {p: frozenset(v) for p, v in inner.items()} for k, inner in index.items()}


class Graph:
    """Immutable set of resource-to-resource triples with forward and inverse indexes."""

    __slots__ = ("_triples", "_out", "_in", "skipped")

    def __init__(self, triples: Iterable[tuple[str, str, str]] = (), skipped: int = 0):
        triples = frozenset(Triple(*map(check_iri, t)) for t in triples)
        out: dict = defaultdict(lambda: defaultdict(set))
        inv: dict = defaultdict(lambda: defaultdict(set))
        for s, p, o in triples:
            out[s][p].add(o)
            inv[o][p].add(s)
        self._triples = triples
        self._out = _freeze(out)
        self._in = _freeze(inv)
        self.skipped = skipped

    @property
    def triples(self) -> frozenset[Triple]:
        return self._triples

    def __len__(self):
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(sorted(self._triples))

    def __contains__(self, triple) -> bool:
        return Triple(*triple) in self._triples

    def __repr__(self):
        return f"Graph({len(self)} triples)"

    def union(self, triples: Iterable[tuple[str, str, str]]) -> "Graph":
        return Graph(self._triples | {Triple(*t) for t in triples})

    def objects(self, subject: str, prop: str) -> frozenset[str]:
        return self._out.get(subject, {}).get(prop, frozenset())

    def subjects(self, prop: str, obj: str) -> frozenset[str]:
        return self._in.get(obj, {}).get(prop, frozenset())

    def outgoing(self, subject: str) -> dict[str, frozenset[str]]:
        return self._out.get(subject, {})

    def incoming(self, obj: str) -> dict[str, frozenset[str]]:
        return self._in.get(obj, {})

    @property
    def nodes(self) -> frozenset[str]:
        return frozenset(self._out) | frozenset(self._in)


_TERM = r"(<[^>\s]*>|_:\S+)"
_LINE = re.compile(rf"^{_TERM}\s+(<[^>\s]*>)\s+(.+?)\s*\.$")


def load_graph(path: str | Path) -> Graph:
    """Read an N-Triples style file into a :class:`Graph`.

    Literal objects and blank nodes are skipped; the number skipped is kept on
    ``graph.skipped``. Any other line that is not a triple raises
    :class:`GraphParseError`.
    """
    path = Path(path)
    triples = []
    skipped = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            m = _LINE.match(line)
            if m is None:
                raise GraphParseError(path, lineno, line)
            s, p, o = m.groups()
            if o.startswith('"') or o.startswith("_:") or s.startswith("_:"):
                skipped += 1
                continue
            if not (o.startswith("<") and o.endswith(">")):
                raise GraphParseError(path, lineno, line)
            try:
                triples.append(tuple(check_iri(strip_brackets(t)) for t in (s, p, o)))
            except ValueError:
                raise GraphParseError(path, lineno, line) from None
    if skipped:
        log.info("%s: skipped %d literal or blank-node statements", path, skipped)
    return Graph(triples, skipped=skipped)


def neighbors(graph: Graph, node: str, prop: str, direction: Direction | str) -> frozenset[str]:
    if Direction.parse(direction) is Direction.DIRECT:
        return graph.objects(node, prop)
    return graph.subjects(prop, node)


def discover(
    graph: Graph,
    annotated: Iterable[str],
    specs: Iterable[PropertySpec],
    with_ldsd: bool = False,
    cache: "LdsdCache | None" = None,
) -> list[DiscoveryRecord]:
    """Follow each property spec one hop from every annotated entity.

    Returns records sorted by (source, discovered). A resource reached from
    the same source through several properties is reported once; a resource
    never counts as discovered through itself.
    """
    specs = list(specs)
    if not specs:
        raise ValueError("at least one property spec is required")
    if with_ldsd and cache is None:
        cache = LdsdCache(graph)
    pairs: set[tuple[str, str]] = set()
    for source in set(annotated):
        for spec in specs:
            for found in neighbors(graph, source, spec.property, spec.direction):
                if found != source:
                    pairs.add((source, found))
    records = []
    for source, found in sorted(pairs):
        ldsd = cache.get(found, source) if with_ldsd else None
        records.append(DiscoveryRecord(found, source, ldsd))
    return records


def ldsd_link_counts(graph: Graph, a: str, b: str) -> tuple[int, int, int, int]:
    """Return the four link counts (direct a->b, direct b->a, indirect incoming, indirect outgoing)."""
    out_a, out_b = graph.outgoing(a), graph.outgoing(b)
    in_a, in_b = graph.incoming(a), graph.incoming(b)
    direct_ab = sum(1 for objs in out_a.values() if b in objs)
    direct_ba = sum(1 for objs in out_b.values() if a in objs)
    # indirect links are counted per (property, mediator) pair
    incoming = sum(len(in_a[p] & in_b[p]) for p in in_a.keys() & in_b.keys())
    outgoing = sum(len(out_a[p] & out_b[p]) for p in out_a.keys() & out_b.keys())
    return direct_ab, direct_ba, incoming, outgoing


def compute_ldsd(graph: Graph, a: str, b: str) -> float:
    """Linked Data Semantic Distance, unweighted combined variant.

    ``1 / (1 + direct(a,b) + direct(b,a) + indirect_in(a,b) + indirect_out(a,b))``.
    Equals 1 for resources that share no link and shrinks as links accumulate.
    """
    if a == b:
        raise ValueError("LDSD is undefined for a resource and itself")
    return 1.0 / (1 + sum(ldsd_link_counts(graph, a, b)))


class LdsdCache:
    """Thread-safe get-or-compute memo of LDSD values keyed by unordered pair."""

    def __init__(self, graph: Graph):
        self.graph = graph
        self._values: dict[tuple[str, str], float] = {}
        self._lock = threading.Lock()

    def get(self, a: str, b: str) -> float:
        key = (a, b) if a <= b else (b, a)
        with self._lock:
            value = self._values.get(key)
            if value is None:
                value = self._values[key] = compute_ldsd(self.graph, a, b)
        return value

    def __len__(self):
        return len(self._values)


def map_entities(raw: Iterable[tuple[str, str]]) -> dict[str, str]:
    """Build a one-to-one sameAs table; sources with several distinct targets are dropped."""
    targets: dict[str, set[str]] = defaultdict(set)
    for source, target in raw:
        targets[source].add(target)
    return {s: next(iter(t)) for s, t in sorted(targets.items()) if len(t) == 1}


def fetch_types(
    graph: Graph, entity: str, type_property: str = RDF_TYPE, namespace_filter: str | None = None
) -> frozenset[str]:
    types = graph.objects(entity, type_property)
    if namespace_filter:
        types = frozenset(t for t in types if t.startswith(namespace_filter))
    return types


# -- file formats -----------------------------------------------------------


def read_mapping(path: str | Path) -> dict[str, str]:
    pairs = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 tab-separated columns")
            pairs.append((check_iri(strip_brackets(cols[0])), check_iri(strip_brackets(cols[1]))))
    return map_entities(pairs)


def format_types(types: dict[str, Iterable[str]]) -> str:
    rows = sorted((e, t) for e, ts in types.items() for t in ts)
    return "".join(f"{e}\t{t}\n" for e, t in rows)


def format_discoveries(records: Iterable[DiscoveryRecord]) -> str:
    lines = []
    for r in sorted(records):
        ldsd = "NA" if r.ldsd is None else repr(r.ldsd)
        lines.append(f"{r.discovered}\t{r.source}\t{ldsd}\n")
    return "".join(lines)


def read_discoveries(path: str | Path) -> list[DiscoveryRecord]:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 tab-separated columns")
            ldsd = None if cols[2] == "NA" else float(cols[2])
            records.append(DiscoveryRecord(cols[0], cols[1], ldsd))
    return records
