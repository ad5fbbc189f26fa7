"""Ranking-quality metrics for link-prediction output.

NDCG@N / Precision@N / Recall@N operate on per-query ranked candidate
lists with binary relevance; MPR / MRR / Hit@K operate on lists of ranks
of true positives.  All values are macro-averaged over queries.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import ContractViolation, FormatError

DEFAULT_CUTOFF = 50


@dataclass
class RankedList:
    query_id: str
    candidates: list[str]  # rank 1 first
    relevance: dict[str, int]  # candidate id -> {0,1}
    universe_size: Optional[int] = None

    def __post_init__(self):
        if len(set(self.candidates)) != len(self.candidates):
            raise ContractViolation(f"query {self.query_id!r}: duplicate candidates")
        for c in self.candidates:
            if c not in self.relevance:
                raise ContractViolation(
                    f"query {self.query_id!r}: relevance undefined for {c!r}"
                )
        if self.universe_size is not None and self.universe_size < len(self.candidates):
            raise ContractViolation(
                f"query {self.query_id!r}: universe smaller than candidate list"
            )

    def gains(self) -> list[int]:
        return [self.relevance[c] for c in self.candidates]

    def total_relevant(self) -> int:
        return sum(1 for v in self.relevance.values() if v)


def dcg_at(lst: RankedList, n: int) -> float:
    """Sum over the top n of s_i / log2(i + 1)."""
    if n < 1:
        raise ContractViolation("n must be >= 1")
    gains = lst.gains()
    return sum(
        s / math.log2(i + 1) for i, s in enumerate(gains[:n], start=1) if s
    )


def ndcg_at(lst: RankedList, n: int) -> float:
    """DCG normalized by the ideal DCG (all relevant items ranked first).

    Zero relevant items yields 0 by convention (division guard).
    """
    if n < 1:
        raise ContractViolation("n must be >= 1")
    total = lst.total_relevant()
    if total == 0:
        return 0.0
    ideal = sum(1.0 / math.log2(i + 1) for i in range(1, min(n, total) + 1))
    return dcg_at(lst, n) / ideal


def precision_recall_at(lst: RankedList, n: int) -> tuple[float, float]:
    """(hits/n, hits/total_relevant); recall is 0 when nothing is relevant."""
    if n < 1:
        raise ContractViolation("n must be >= 1")
    hits = sum(lst.gains()[:n])
    total = lst.total_relevant()
    recall = hits / total if total else 0.0
    return hits / n, recall


def mpr(ranks: list[tuple[int, int]]) -> float:
    """Mean percentile rank, in percent; rank 1 of U maps to 100.

    pr = 100 * (1 - (rank - 1) / universe), so higher is better.
    """
    if not ranks:
        raise ContractViolation("mpr needs at least one rank")
    total = 0.0
    for rank, universe in ranks:
        if rank < 1 or universe < 1 or rank > universe:
            raise ContractViolation(f"bad (rank, universe) pair ({rank}, {universe})")
        total += 100.0 * (1.0 - (rank - 1) / universe)
    return total / len(ranks)


def mrr(ranks: list[int]) -> float:
    """Mean of 1/r over true-positive ranks."""
    if not ranks:
        raise ContractViolation("mrr needs at least one rank")
    for r in ranks:
        if r < 1:
            raise ContractViolation(f"rank must be >= 1, got {r}")
    return sum(1.0 / r for r in ranks) / len(ranks)


def hit_at(ranks: list[int], k: int) -> float:
    """Fraction of ranks not larger than k."""
    if not ranks:
        raise ContractViolation("hit_at needs at least one rank")
    if k < 1:
        raise ContractViolation("k must be >= 1")
    return sum(1 for r in ranks if r <= k) / len(ranks)


@dataclass
class MetricReport:
    cutoff: int
    per_query: dict[str, dict[str, float]] = field(default_factory=dict)
    macro: dict[str, float] = field(default_factory=dict)

    def to_tsv(self) -> str:
        lines = ["metric\tvalue"]
        for name in sorted(self.macro):
            lines.append(f"{name}\t{self.macro[name]:.12g}")
        return "\n".join(lines) + "\n"


RANKING_METRICS = ("ndcg", "precision", "recall")
RANK_METRICS = ("mrr", "mpr", "hit")


def evaluate(
    lists: list[RankedList], metrics=None, n: int = DEFAULT_CUTOFF
) -> MetricReport:
    """Per-query metrics macro-averaged over queries.

    mrr/mpr/hit treat each query's relevant candidates' ranks as the rank
    list; mpr requires universe_size on every query it covers.
    """
    if not lists:
        raise ContractViolation("no ranked lists supplied")
    if metrics is None:
        metrics = RANKING_METRICS + RANK_METRICS
    report = MetricReport(cutoff=n)
    for lst in lists:
        row: dict[str, float] = {}
        if "ndcg" in metrics:
            row[f"ndcg@{n}"] = ndcg_at(lst, n)
        if "precision" in metrics or "recall" in metrics:
            p, r = precision_recall_at(lst, n)
            if "precision" in metrics:
                row[f"precision@{n}"] = p
            if "recall" in metrics:
                row[f"recall@{n}"] = r
        relevant_ranks = [
            i for i, s in enumerate(lst.gains(), start=1) if s
        ]
        if "mrr" in metrics and relevant_ranks:
            row["mrr"] = mrr(relevant_ranks)
        if "hit" in metrics and relevant_ranks:
            row[f"hit@{n}"] = hit_at(relevant_ranks, n)
        if "mpr" in metrics and relevant_ranks and lst.universe_size:
            row["mpr"] = mpr([(r, lst.universe_size) for r in relevant_ranks])
        report.per_query[lst.query_id] = row
    names = sorted({k for row in report.per_query.values() for k in row})
    for name in names:
        values = [row[name] for row in report.per_query.values() if name in row]
        report.macro[name] = sum(values) / len(values)
    return report


def load_ranked_lists(path) -> list[RankedList]:
    """JSON-lines: query_id, candidates, relevant (id array), universe_size."""
    lists = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                query_id = obj["query_id"]
                candidates = list(obj["candidates"])
                relevant = set(obj["relevant"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise FormatError(f"bad ranked list: {exc}", line=lineno, path=path)
            relevance = {c: 1 if c in relevant else 0 for c in candidates}
            for r in relevant:
                relevance.setdefault(r, 1)
            lists.append(
                RankedList(
                    query_id=query_id,
                    candidates=candidates,
                    relevance=relevance,
                    universe_size=obj.get("universe_size"),
                )
            )
    return lists
