"""Hypothesis chains: construction, entity resolution, matching, UpSet stats.

A chain holds three hypothesis positions, each constraining one hop of a
3-hop interpretative path.  Matching tests every prediction record against
the per-position entity sets (and optional relation-label sets) and
aggregates the satisfaction bitmasks into exclusive-intersection counts.
"""
from __future__ import annotations

import itertools
import json
import sys
import uuid
from dataclasses import dataclass, field
from typing import Optional

from .errors import ContractViolation, GatewayError
from .kg import KnowledgeGraph
from .predictions import HOPS, PredictionStore

POSITIONS = 3
FULL_MASK = (1 << POSITIONS) - 1


@dataclass
class EntityMatch:
    entity_id: str
    entity_name: str
    category: str
    justification: str
    alignment_rank: int


@dataclass
class HypothesisNode:
    description: str
    relation_descriptor: str = ""
    relation_labels: set[str] = field(default_factory=set)
    resolved_entities: list[EntityMatch] = field(default_factory=list)

    def resolved_ids(self) -> set[str]:
        return {m.entity_id for m in self.resolved_entities}


@dataclass
class HypothesisChain:
    id: str
    nodes: list[HypothesisNode]
    status: str = "draft"  # draft | analyzed | retrieved
    critique: str = ""

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "positions": [
                {
                    "description": n.description,
                    "relation": n.relation_descriptor,
                    "entities": [
                        {
                            "entity_id": m.entity_id,
                            "entity_name": m.entity_name,
                            "category": m.category,
                            "justification": m.justification,
                            "alignment_rank": m.alignment_rank,
                        }
                        for m in n.resolved_entities
                    ],
                    "relation_labels": sorted(n.relation_labels),
                }
                for n in self.nodes
            ],
            "status": self.status,
            "critique": self.critique,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "HypothesisChain":
        nodes = []
        for pos in obj["positions"]:
            nodes.append(
                HypothesisNode(
                    description=pos["description"],
                    relation_descriptor=pos.get("relation", ""),
                    relation_labels=set(pos.get("relation_labels", [])),
                    resolved_entities=[
                        EntityMatch(**m) for m in pos.get("entities", [])
                    ],
                )
            )
        chain = cls(id=obj["id"], nodes=nodes)
        chain.status = obj.get("status", "draft")
        chain.critique = obj.get("critique", "")
        if len(chain.nodes) != POSITIONS:
            raise ContractViolation(
                f"chain must have {POSITIONS} positions, got {len(chain.nodes)}"
            )
        return chain


@dataclass
class ChainMatchReport:
    chain_id: str
    dataset_id: str
    bitmasks: dict[int, int]  # record id -> bits for {H1,H2,H3}
    per_hypothesis: list[int]
    exclusive_counts: dict[int, int]  # subset mask (1..7) -> exclusive count

    def to_json(self) -> dict:
        return {
            "chain_id": self.chain_id,
            "dataset_id": self.dataset_id,
            "bitmasks": {str(k): v for k, v in self.bitmasks.items()},
            "per_hypothesis": self.per_hypothesis,
            "exclusive_counts": {str(k): v for k, v in self.exclusive_counts.items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChainMatchReport":
        return cls(
            chain_id=obj["chain_id"],
            dataset_id=obj["dataset_id"],
            bitmasks={int(k): v for k, v in obj["bitmasks"].items()},
            per_hypothesis=list(obj["per_hypothesis"]),
            exclusive_counts={int(k): v for k, v in obj["exclusive_counts"].items()},
        )


def create_chain(positions, chain_id: Optional[str] = None) -> HypothesisChain:
    """Draft chain from exactly 3 (description, relation descriptor) pairs."""
    positions = list(positions)
    if len(positions) != POSITIONS:
        raise ContractViolation(
            f"a chain needs exactly {POSITIONS} positions, got {len(positions)}"
        )
    nodes = []
    for description, relation in positions:
        if not description or not description.strip():
            raise ContractViolation("hypothesis description must be non-empty")
        nodes.append(HypothesisNode(description=description, relation_descriptor=relation))
    return HypothesisChain(id=chain_id or uuid.uuid4().hex[:12], nodes=nodes)


def preview_entities(node, gateway, graph, k: int = 20, diagnostics=None):
    """Resolve a hypothesis description to at most k KG entities via the gateway.

    Names the backend emits that do not resolve in the KG are dropped with a
    warning; alignment ranks are renumbered to stay contiguous.
    """
    if diagnostics is None:
        diagnostics = sys.stderr
    if k <= 0:
        raise ContractViolation("k must be positive")
    if not node.description.strip():
        raise ContractViolation("hypothesis description is empty")
    payload = gateway.retrieve_by_hypothesis(node.description)
    matches = []
    dropped = 0
    for item in payload:
        eid = graph.resolve_name(item["entity_name"])
        if eid is None:
            dropped += 1
            continue
        if any(m.entity_id == eid for m in matches):
            continue
        matches.append(
            EntityMatch(
                entity_id=eid,
                entity_name=graph.entities[eid].name,
                category=graph.entities[eid].category,
                justification=item.get("description", ""),
                alignment_rank=len(matches) + 1,
            )
        )
        if len(matches) >= k:
            break
    if dropped:
        print(
            f"warning: dropped {dropped} gateway entities not present in the KG",
            file=diagnostics,
        )
    if not matches:
        raise GatewayError("no gateway entity resolved against the KG")
    node.resolved_entities = matches
    return matches


def map_relation_labels(node, graph: KnowledgeGraph, diagnostics=None):
    """Keep only descriptor-declared labels that exist in the KG vocabulary.

    When the descriptor maps to no KG label the constraint is vacuous and a
    warning is emitted.
    """
    if diagnostics is None:
        diagnostics = sys.stderr
    if node.relation_labels:
        known = node.relation_labels & graph.relation_vocabulary
        if not known and node.relation_labels:
            print(
                f"warning: relation descriptor {node.relation_descriptor!r} maps to "
                "no KG label; constraint is vacuous",
                file=diagnostics,
            )
        node.relation_labels = known
    return node.relation_labels


def match_chain(
    chain: HypothesisChain, store: PredictionStore, graph: KnowledgeGraph
) -> ChainMatchReport:
    """Per-record satisfaction bitmasks plus UpSet aggregates.

    Bit i is set iff hop i's target entity is in position i's resolved set
    and, when the position declares relation labels, hop i's relation is in
    that set.
    """
    sets = []
    labels = []
    for i, node in enumerate(chain.nodes):
        ids = node.resolved_ids()
        if not ids:
            raise ContractViolation(f"chain position {i + 1} has no resolved entities")
        sets.append(ids)
        labels.append(node.relation_labels or None)
    bitmasks: dict[int, int] = {}
    for rec in store.records:
        mask = 0
        for i in range(POSITIONS):
            hop = rec.path.hops[i]
            if hop.entity not in sets[i]:
                continue
            if labels[i] is not None and hop.relation not in labels[i]:
                continue
            mask |= 1 << i
        bitmasks[rec.record_id] = mask
    per_hypothesis = [
        sum(1 for m in bitmasks.values() if m & (1 << i)) for i in range(POSITIONS)
    ]
    exclusive: dict[int, int] = {m: 0 for m in range(1, FULL_MASK + 1)}
    for m in bitmasks.values():
        if m:
            exclusive[m] += 1
    report = ChainMatchReport(
        chain_id=chain.id,
        dataset_id=store.dataset_id,
        bitmasks=bitmasks,
        per_hypothesis=per_hypothesis,
        exclusive_counts=exclusive,
    )
    _check_report(report)
    chain.status = "retrieved"
    return report


def _check_report(report: ChainMatchReport):
    nonzero = sum(1 for m in report.bitmasks.values() if m)
    if sum(report.exclusive_counts.values()) != nonzero:
        raise AssertionError("exclusive counts do not conserve record total")
    for i in range(POSITIONS):
        bar = sum(
            c for mask, c in report.exclusive_counts.items() if mask & (1 << i)
        )
        if bar != report.per_hypothesis[i]:
            raise AssertionError(f"per-hypothesis bar {i + 1} mismatch")


def subset_to_mask(subset) -> int:
    """{1,2,3}-style hypothesis subset to a bitmask."""
    mask = 0
    for h in subset:
        if not 1 <= h <= POSITIONS:
            raise ContractViolation(f"hypothesis index {h} out of range 1..{POSITIONS}")
        mask |= 1 << (h - 1)
    return mask


def upset_slice(report: ChainMatchReport, subset, exclusive: bool = True) -> list[int]:
    """Record ids for one UpSet column (exclusive) or superset slice."""
    mask = subset_to_mask(subset)
    if mask == 0:
        raise ContractViolation("subset must be non-empty")
    if exclusive:
        ids = [rid for rid, m in report.bitmasks.items() if m == mask]
    else:
        ids = [rid for rid, m in report.bitmasks.items() if m & mask == mask]
    return sorted(ids)


def all_subsets():
    """All non-empty hypothesis subsets, smallest mask first."""
    out = []
    for r in range(1, POSITIONS + 1):
        for combo in itertools.combinations(range(1, POSITIONS + 1), r):
            out.append(frozenset(combo))
    return out


def analyze_chain(chain: HypothesisChain, gateway) -> str:
    """Run the chain critique through the gateway and store it verbatim."""
    if chain.status not in ("draft", "analyzed"):
        raise ContractViolation(f"cannot analyze a chain in status {chain.status!r}")
    chain_text = " -> ".join(
        f"[{n.description}]" + (f" -{n.relation_descriptor}->" if n.relation_descriptor else "")
        for n in chain.nodes
    )
    critique = gateway.analyze_chain(chain_text)
    chain.critique = critique
    chain.status = "analyzed"
    return critique


def save_chain(chain: HypothesisChain, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(chain.to_json(), fh, indent=2)


def load_chain(path) -> HypothesisChain:
    with open(path, "r", encoding="utf-8") as fh:
        return HypothesisChain.from_json(json.load(fh))
