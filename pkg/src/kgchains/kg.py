"""Knowledge-graph store: typed entities, relation triplets, adjacency indices.

Entities and triplets are loaded from TSV files and indexed for fast
neighborhood and edge-existence queries.  The store is immutable after load
except through :meth:`KnowledgeGraph.append_triplets` (single-writer,
multi-reader contract).
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import AmbiguousNameError, FormatError, UnknownEntityError

ENTITY_HEADER = ["id", "name", "category", "description"]
TRIPLET_HEADER = ["head", "relation", "tail"]


@dataclass(frozen=True)
class Entity:
    id: str
    name: str
    category: str
    description: str = ""


@dataclass(frozen=True)
class Triplet:
    head: str
    relation: str
    tail: str

    def key(self):
        return (self.head, self.relation, self.tail)


def _normalize_name(name: str) -> str:
    return " ".join(name.strip().lower().split())


@dataclass
class KnowledgeGraph:
    entities: dict[str, Entity] = field(default_factory=dict)
    # adjacency lists, kept sorted by (relation, neighbor id)
    out_index: dict[str, list[tuple[str, str]]] = field(default_factory=dict)
    in_index: dict[str, list[tuple[str, str]]] = field(default_factory=dict)
    relation_vocabulary: set[str] = field(default_factory=set)
    duplicate_triplets_dropped: int = 0
    _triplet_keys: set[tuple[str, str, str]] = field(default_factory=set)
    _name_index: Optional[dict] = field(default=None, repr=False)

    # -- counts ----------------------------------------------------------
    @property
    def entity_count(self) -> int:
        return len(self.entities)

    @property
    def triplet_count(self) -> int:
        return len(self._triplet_keys)

    def triplets(self) -> Iterable[Triplet]:
        for head, rels in self.out_index.items():
            for relation, tail in rels:
                yield Triplet(head, relation, tail)

    # -- queries ---------------------------------------------------------
    def neighbors(self, entity_id: str, direction: str = "both"):
        """All (relation, Entity) incident to ``entity_id``.

        Deterministic: ascending (relation, neighbor id); for ``both`` the
        out edges come first, then the in edges.
        """
        if entity_id not in self.entities:
            raise UnknownEntityError(entity_id, "neighbors")
        if direction not in ("out", "in", "both"):
            raise ValueError(f"bad direction {direction!r}")
        result = []
        if direction in ("out", "both"):
            for relation, nb in self.out_index.get(entity_id, ()):
                result.append((relation, self.entities[nb]))
        if direction in ("in", "both"):
            for relation, nb in self.in_index.get(entity_id, ()):
                result.append((relation, self.entities[nb]))
        return result

    def degree(self, entity_id: str) -> int:
        return len(self.out_index.get(entity_id, ())) + len(
            self.in_index.get(entity_id, ())
        )

    def edge_exists(self, a: str, b: str) -> Optional[tuple[str, str]]:
        """First triplet joining a and b, as (relation, direction).

        direction is "out" when the triplet is (a, rel, b) and "in" when it
        is (b, rel, a).  Out edges are checked before in edges; within each
        list the (relation, neighbor) order is ascending.
        """
        for node in (a, b):
            if node not in self.entities:
                raise UnknownEntityError(node, "edge_exists")
        for relation, tail in self.out_index.get(a, ()):
            if tail == b:
                return (relation, "out")
        for relation, head in self.in_index.get(a, ()):
            if head == b:
                return (relation, "in")
        return None

    def has_entity(self, entity_id: str) -> bool:
        return entity_id in self.entities

    # -- name resolution ---------------------------------------------------
    def _build_name_index(self):
        exact: dict[str, list[str]] = {}
        folded: dict[str, list[str]] = {}
        for ent in self.entities.values():
            exact.setdefault(ent.name, []).append(ent.id)
            folded.setdefault(_normalize_name(ent.name), []).append(ent.id)
        self._name_index = (exact, folded)

    def resolve_name(self, name: str) -> Optional[str]:
        """Entity id for a display name.

        Tries exact match, then case-insensitive/whitespace-normalized.
        Returns None when nothing matches; raises on ambiguity.
        """
        if self._name_index is None:
            self._build_name_index()
        exact, folded = self._name_index
        for index, key in ((exact, name), (folded, _normalize_name(name))):
            ids = index.get(key)
            if ids:
                if len(set(ids)) > 1:
                    raise AmbiguousNameError(name, sorted(set(ids)))
                return ids[0]
        return None

    # -- mutation ----------------------------------------------------------
    def append_triplets(self, new: Iterable[Triplet]) -> dict:
        """Append triplets; duplicates are ignored (idempotent).

        Returns the updated counts plus how many rows were added/skipped.
        """
        added = 0
        skipped = 0
        touched: set[str] = set()
        staged = []
        for t in new:
            if not t.relation:
                raise FormatError("empty relation label")
            for node in (t.head, t.tail):
                if node not in self.entities:
                    raise UnknownEntityError(node, "append_triplets")
            staged.append(t)
        for t in staged:
            if t.key() in self._triplet_keys:
                skipped += 1
                continue
            self._triplet_keys.add(t.key())
            self.out_index.setdefault(t.head, []).append((t.relation, t.tail))
            self.in_index.setdefault(t.tail, []).append((t.relation, t.head))
            self.relation_vocabulary.add(t.relation)
            touched.add(t.head)
            touched.add(t.tail)
            added += 1
        for node in touched:
            if node in self.out_index:
                self.out_index[node].sort()
            if node in self.in_index:
                self.in_index[node].sort()
        self._name_index = None if added else self._name_index
        return {
            "entities": self.entity_count,
            "triplets": self.triplet_count,
            "relations": len(self.relation_vocabulary),
            "added": added,
            "skipped": skipped,
        }

    def counts(self) -> dict:
        return {
            "entities": self.entity_count,
            "triplets": self.triplet_count,
            "relations": len(self.relation_vocabulary),
        }


def build_graph(entities: Iterable[Entity], triplets: Iterable[Triplet]) -> KnowledgeGraph:
    """In-memory constructor with the same validation as load_graph."""
    g = KnowledgeGraph()
    for ent in entities:
        if ent.id in g.entities:
            raise FormatError(f"duplicate entity id {ent.id!r}")
        if not ent.name or not ent.category:
            raise FormatError(f"entity {ent.id!r} has empty name or category")
        g.entities[ent.id] = ent
    g.append_triplets(triplets)
    g.duplicate_triplets_dropped = 0
    return g


def _read_tsv(path, expected_header):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError("empty file, expected header row", line=1, path=path)
    header = lines[0].rstrip("\r").split("\t")
    if header != expected_header:
        raise FormatError(
            f"bad header {header!r}, expected {expected_header!r}",
            line=1,
            path=path,
        )
    for lineno, raw in enumerate(lines[1:], start=2):
        row = raw.rstrip("\r")
        if not row:
            continue
        fields = row.split("\t")
        if len(fields) != len(expected_header):
            raise FormatError(
                f"expected {len(expected_header)} tab-separated fields, got {len(fields)}",
                line=lineno,
                path=path,
            )
        yield lineno, fields


def load_graph(entity_file, triplet_file, diagnostics=None) -> KnowledgeGraph:
    """Load and validate a knowledge graph from TSV files.

    Raises FormatError (with line number) on malformed rows, duplicate
    entity ids, or triplets referencing unknown ids.  Duplicate triplets are
    silently dropped and counted.
    """
    if diagnostics is None:
        diagnostics = sys.stderr
    g = KnowledgeGraph()
    for lineno, (eid, name, category, description) in _read_tsv(
        entity_file, ENTITY_HEADER
    ):
        if not eid:
            raise FormatError("empty entity id", line=lineno, path=entity_file)
        if not name:
            raise FormatError(f"entity {eid!r} has empty name", line=lineno, path=entity_file)
        if not category:
            raise FormatError(
                f"entity {eid!r} has empty category", line=lineno, path=entity_file
            )
        if eid in g.entities:
            raise FormatError(f"duplicate entity id {eid!r}", line=lineno, path=entity_file)
        g.entities[eid] = Entity(eid, name, category, description)

    for lineno, (head, relation, tail) in _read_tsv(triplet_file, TRIPLET_HEADER):
        if not relation:
            raise FormatError("empty relation label", line=lineno, path=triplet_file)
        for node in (head, tail):
            if node not in g.entities:
                raise FormatError(
                    f"dangling entity id {node!r}", line=lineno, path=triplet_file
                )
        key = (head, relation, tail)
        if key in g._triplet_keys:
            g.duplicate_triplets_dropped += 1
            continue
        g._triplet_keys.add(key)
        g.out_index.setdefault(head, []).append((relation, tail))
        g.in_index.setdefault(tail, []).append((relation, head))
        g.relation_vocabulary.add(relation)

    for adj in (g.out_index, g.in_index):
        for edges in adj.values():
            edges.sort()
    if g.duplicate_triplets_dropped:
        print(
            f"warning: dropped {g.duplicate_triplets_dropped} duplicate triplet rows",
            file=diagnostics,
        )
    return g
