"""Metric formulas checked against a brute-force oracle."""
import math

import numpy as np
import pytest

from kgchains.errors import ContractViolation
from kgchains.metrics import (
    MetricReport,
    RankedList,
    dcg_at,
    evaluate,
    hit_at,
    mpr,
    mrr,
    ndcg_at,
    precision_recall_at,
)


# -- independent oracle: as-literal-as-possible reimplementation ------------

def oracle_dcg(gains, n):
    return sum(g / math.log2(i + 1 + 1) for i, g in enumerate(gains[:n]))


def oracle_ndcg(gains, n, total_relevant=None):
    # ideal ranking puts every known relevant item (even unretrieved ones) first
    if total_relevant is None:
        total_relevant = sum(gains)
    ideal = oracle_dcg([1] * total_relevant, n)
    return oracle_dcg(gains, n) / ideal if ideal > 0 else 0.0


def oracle_precision_recall(gains, n, total_relevant):
    hits = sum(gains[:n])
    return hits / n, (hits / total_relevant if total_relevant else 0.0)


def oracle_mrr(ranks):
    return sum(1.0 / r for r in ranks) / len(ranks)


def oracle_mpr(pairs):
    return sum(100.0 * (1.0 - (r - 1) / u) for r, u in pairs) / len(pairs)


def oracle_hit(ranks, k):
    return sum(1 for r in ranks if r <= k) / len(ranks)


def random_list(rng, i):
    m = int(rng.integers(1, 60))
    candidates = [f"c{j}" for j in range(m)]
    gains = rng.integers(0, 2, size=m).tolist()
    extra_relevant = int(rng.integers(0, 4))
    relevance = {c: int(g) for c, g in zip(candidates, gains)}
    for j in range(extra_relevant):
        relevance[f"x{j}"] = 1
    universe = m + int(rng.integers(0, 100))
    return RankedList(f"q{i}", candidates, relevance, universe)


def test_formulas_match_oracle_on_random_lists():
    rng = np.random.default_rng(42)
    for i in range(300):
        lst = random_list(rng, i)
        gains = lst.gains()
        n = int(rng.integers(1, 70))
        assert dcg_at(lst, n) == pytest.approx(oracle_dcg(gains, n), abs=1e-12)
        assert ndcg_at(lst, n) == pytest.approx(
            oracle_ndcg(gains, n, lst.total_relevant()), abs=1e-12
        )
        p, r = precision_recall_at(lst, n)
        op, orc = oracle_precision_recall(gains, n, lst.total_relevant())
        assert p == pytest.approx(op, abs=1e-12)
        assert r == pytest.approx(orc, abs=1e-12)
        ranks = [j for j, g in enumerate(gains, start=1) if g]
        if ranks:
            assert mrr(ranks) == pytest.approx(oracle_mrr(ranks), abs=1e-12)
            assert hit_at(ranks, n) == pytest.approx(oracle_hit(ranks, n), abs=1e-12)
            pairs = [(j, lst.universe_size) for j in ranks]
            assert mpr(pairs) == pytest.approx(oracle_mpr(pairs), abs=1e-12)


def test_hand_checked_values():
    lst = RankedList("q", ["a", "b", "c", "d"],
                     {"a": 1, "b": 0, "c": 1, "d": 0})
    # DCG@4 = 1/log2(2) + 1/log2(4) = 1.5; IDCG = 1 + 1/log2(3)
    assert dcg_at(lst, 4) == pytest.approx(1.5)
    assert ndcg_at(lst, 4) == pytest.approx(1.5 / (1 + 1 / math.log2(3)))
    p, r = precision_recall_at(lst, 2)
    assert p == pytest.approx(0.5)
    assert r == pytest.approx(0.5)
    assert mrr([1, 3]) == pytest.approx((1 + 1 / 3) / 2)
    assert hit_at([1, 3], 2) == pytest.approx(0.5)
    # rank 1 of universe 10 -> 100; rank 10 -> 10
    assert mpr([(1, 10), (10, 10)]) == pytest.approx(55.0)


def test_ndcg_zero_when_nothing_relevant():
    lst = RankedList("q", ["a", "b"], {"a": 0, "b": 0})
    assert ndcg_at(lst, 2) == 0.0
    _, recall = precision_recall_at(lst, 2)
    assert recall == 0.0


def test_validation_errors():
    with pytest.raises(ContractViolation):
        RankedList("q", ["a", "a"], {"a": 1})
    with pytest.raises(ContractViolation):
        RankedList("q", ["a"], {})
    with pytest.raises(ContractViolation):
        RankedList("q", ["a", "b"], {"a": 1, "b": 0}, universe_size=1)
    with pytest.raises(ContractViolation):
        evaluate([], ["ndcg"])


def test_evaluate_macro_average_and_tsv():
    lists = [
        RankedList("q1", ["a", "b"], {"a": 1, "b": 0}, universe_size=4),
        RankedList("q2", ["a", "b"], {"a": 0, "b": 1}, universe_size=4),
    ]
    report = evaluate(lists, ["ndcg", "precision", "recall", "mrr", "mpr", "hit"], n=2)
    assert isinstance(report, MetricReport)
    expected_ndcg = (1.0 + oracle_ndcg([0, 1], 2)) / 2
    assert report.macro["ndcg@2"] == pytest.approx(expected_ndcg, abs=1e-12)
    assert report.macro["mrr"] == pytest.approx((1.0 + 0.5) / 2)
    assert report.macro["mpr"] == pytest.approx((100.0 + 75.0) / 2)
    tsv = report.to_tsv()
    assert tsv.startswith("metric\tvalue\n")
    assert any(line.startswith("mrr\t") for line in tsv.splitlines())


def test_load_ranked_lists_roundtrip(tmp_path):
    import json

    from kgchains.metrics import load_ranked_lists

    path = tmp_path / "lists.jsonl"
    with open(path, "w") as fh:
        fh.write(json.dumps({
            "query_id": "q1", "candidates": ["a", "b", "c"],
            "relevant": ["b"], "universe_size": 10,
        }) + "\n")
    lists = load_ranked_lists(path)
    assert len(lists) == 1
    assert lists[0].gains() == [0, 1, 0]
    assert lists[0].universe_size == 10
