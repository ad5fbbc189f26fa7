"""Ranked model predictions with 3-hop interpretative paths.

Supports the exploration workflow over prediction tables: top-N lookup per
head, multi-term filtering with display re-ranking, column sorting, and the
star marking of hypothesis-aligned records.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

from .errors import ContractViolation, FormatError, UnknownEntityError
from .kg import KnowledgeGraph

HOPS = 3
DEFAULT_TOP_N = 50


@dataclass(frozen=True)
class Hop:
    relation: str
    weight: float
    entity: str  # target entity id of this hop


@dataclass(frozen=True)
class InterpretativePath:
    origin: str
    hops: tuple[Hop, ...]

    def entity_at(self, position: int) -> str:
        """Entity id at path position 0 (origin) through 3 (tail)."""
        if position == 0:
            return self.origin
        return self.hops[position - 1].entity


@dataclass(frozen=True)
class PredictionRecord:
    record_id: int
    head: str
    tail: str
    score: float
    rank: int
    path: InterpretativePath


@dataclass
class PredictionFilter:
    head: Optional[str] = None
    category: Optional[str] = None
    entity_terms: list[tuple[int, str]] = field(default_factory=list)
    relation_terms: list[tuple[int, str]] = field(default_factory=list)
    exclude_relation_homogeneous: Optional[str] = None
    min_score: Optional[float] = None

    def validate(self):
        for pos, _ in self.entity_terms:
            if not 0 <= pos <= HOPS:
                raise ContractViolation(f"entity term hop position {pos} out of range 0..3")
        for pos, _ in self.relation_terms:
            if not 1 <= pos <= HOPS:
                raise ContractViolation(f"relation term hop position {pos} out of range 1..3")


@dataclass(frozen=True)
class RankedView:
    """A surviving record plus its position in the filtered order."""

    record: PredictionRecord
    display_rank: int


class PredictionStore:
    """Immutable after load; star flags are the only mutable state."""

    def __init__(self, graph: KnowledgeGraph, dataset_id: str = "default"):
        self.graph = graph
        self.dataset_id = dataset_id
        self.records: list[PredictionRecord] = []
        self.by_head: dict[str, list[PredictionRecord]] = {}
        self.starred: set[int] = set()
        self.clamped_weights = 0

    # -- loading -----------------------------------------------------------
    def load(self, path, diagnostics=None) -> int:
        if diagnostics is None:
            diagnostics = sys.stderr
        records = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise FormatError(f"invalid JSON: {exc}", line=lineno, path=path)
                records.append(self._parse_record(obj, lineno, path))
        self._install(records)
        if self.clamped_weights:
            print(
                f"warning: clamped {self.clamped_weights} hop weights into [0,1]",
                file=diagnostics,
            )
        return len(self.records)

    def load_records(self, objs) -> int:
        """Load from already-parsed JSON objects (same validation as load)."""
        records = [self._parse_record(obj, i + 1, "<memory>") for i, obj in enumerate(objs)]
        self._install(records)
        return len(self.records)

    def _parse_record(self, obj, lineno, path) -> PredictionRecord:
        try:
            head = obj["head"]
            tail = obj["tail"]
            score = float(obj["score"])
            rank = int(obj["rank"])
            raw_path = obj["path"]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad record: {exc}", line=lineno, path=path)
        if len(raw_path) != HOPS:
            raise FormatError(
                f"path must have exactly {HOPS} hops, got {len(raw_path)}",
                line=lineno,
                path=path,
            )
        if rank < 1:
            raise FormatError(f"rank must be >= 1, got {rank}", line=lineno, path=path)
        hops = []
        for hop in raw_path:
            try:
                relation = hop["relation"]
                weight = float(hop["weight"])
                entity = hop["entity"]
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"bad hop: {exc}", line=lineno, path=path)
            if not math.isfinite(weight):
                raise FormatError("non-finite hop weight", line=lineno, path=path)
            if weight < 0.0 or weight > 1.0:
                weight = min(max(weight, 0.0), 1.0)
                self.clamped_weights += 1
            if not self.graph.has_entity(entity):
                raise FormatError(
                    f"hop entity {entity!r} not in graph", line=lineno, path=path
                )
            hops.append(Hop(relation, weight, entity))
        for node in (head, tail):
            if not self.graph.has_entity(node):
                raise FormatError(f"entity {node!r} not in graph", line=lineno, path=path)
        if hops[-1].entity != tail:
            raise FormatError(
                f"last hop entity {hops[-1].entity!r} != tail {tail!r}",
                line=lineno,
                path=path,
            )
        return PredictionRecord(
            record_id=-1,
            head=head,
            tail=tail,
            score=score,
            rank=rank,
            path=InterpretativePath(origin=head, hops=tuple(hops)),
        )

    def _install(self, records):
        by_head: dict[str, list[PredictionRecord]] = {}
        for rec in records:
            by_head.setdefault(rec.head, []).append(rec)
        # Per-head rank must be a permutation of 1..n consistent with
        # descending score, ties broken by tail id ascending.
        for head, recs in by_head.items():
            ranks = sorted(r.rank for r in recs)
            if ranks != list(range(1, len(recs) + 1)):
                raise FormatError(
                    f"head {head!r}: ranks are not a permutation of 1..{len(recs)}"
                )
            by_rank = sorted(recs, key=lambda r: r.rank)
            by_score = sorted(recs, key=lambda r: (-r.score, r.tail))
            for a, b in zip(by_rank, by_score):
                if a.rank != b.rank and (a.score != b.score or a.tail != b.tail):
                    raise FormatError(
                        f"head {head!r}: rank order inconsistent with scores "
                        f"(rank {a.rank} has score {a.score}, expected {b.score})"
                    )
        final = []
        rid = 0
        for rec in records:
            final.append(
                PredictionRecord(rid, rec.head, rec.tail, rec.score, rec.rank, rec.path)
            )
            rid += 1
        self.records = final
        self.by_head = {}
        for rec in final:
            self.by_head.setdefault(rec.head, []).append(rec)
        for recs in self.by_head.values():
            recs.sort(key=lambda r: r.rank)
        self.starred = set()

    # -- queries -----------------------------------------------------------
    def get(self, record_id: int) -> PredictionRecord:
        if not 0 <= record_id < len(self.records):
            raise ContractViolation(f"unknown record id {record_id}")
        return self.records[record_id]

    def top_tails(self, head: str, n: int = DEFAULT_TOP_N) -> list[PredictionRecord]:
        if head not in self.by_head:
            raise UnknownEntityError(head, "no predictions for head")
        if n < 0:
            raise ContractViolation("n must be non-negative")
        return self.by_head[head][:n]

    def filter_and_rerank(self, f: PredictionFilter) -> list[RankedView]:
        """Filtered records in original-rank order, with display ranks 1..k."""
        f.validate()
        pool = self.by_head.get(f.head, []) if f.head else sorted(
            self.records, key=lambda r: (r.head, r.rank)
        )
        survivors = [rec for rec in pool if self._passes(rec, f)]
        return [RankedView(rec, i + 1) for i, rec in enumerate(survivors)]

    def _passes(self, rec: PredictionRecord, f: PredictionFilter) -> bool:
        if f.min_score is not None and rec.score < f.min_score:
            return False
        if f.category is not None:
            if self.graph.entities[rec.tail].category != f.category:
                return False
        for pos, term in f.entity_terms:
            eid = rec.path.entity_at(pos)
            if eid != term and self.graph.entities[eid].name != term:
                return False
        for pos, label in f.relation_terms:
            if rec.path.hops[pos - 1].relation != label:
                return False
        if f.exclude_relation_homogeneous is not None:
            label = f.exclude_relation_homogeneous
            if all(h.relation == label for h in rec.path.hops):
                return False
        return True

    def sort_by(self, column, order: str = "desc", records=None) -> list[PredictionRecord]:
        """Stable sort by score or by one hop's edge weight; ties by tail id.

        column is "score" or ("edge_weight", hop) with hop in 1..3.
        """
        if records is None:
            records = self.records
        if order not in ("asc", "desc"):
            raise ContractViolation(f"bad order {order!r}")
        if column == "score":
            key = lambda r: r.score
        elif isinstance(column, (tuple, list)) and len(column) == 2 and column[0] == "edge_weight":
            hop = column[1]
            if not 1 <= hop <= HOPS:
                raise ContractViolation(f"hop index {hop} out of range 1..3")
            key = lambda r: r.path.hops[hop - 1].weight
        else:
            raise ContractViolation(f"bad sort column {column!r}")
        reverse = order == "desc"
        # sort on tail first so equal keys fall back to ascending tail id
        by_tail = sorted(records, key=lambda r: r.tail)
        return sorted(by_tail, key=key, reverse=reverse)

    # -- alignment marking ---------------------------------------------------
    def mark_alignment(self, report) -> set[int]:
        """Star exactly the records whose satisfaction bitmask is full."""
        if report.dataset_id != self.dataset_id:
            raise ContractViolation(
                f"report dataset {report.dataset_id!r} != store dataset {self.dataset_id!r}"
            )
        full = (1 << len(report.per_hypothesis)) - 1
        self.starred = {
            rid for rid, mask in report.bitmasks.items() if mask == full
        }
        return set(self.starred)
