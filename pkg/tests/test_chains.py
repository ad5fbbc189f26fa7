import json

import pytest

from kgchains import chains as ce
from kgchains.errors import ContractViolation, GatewayError
from kgchains.gateway import Gateway, MockBackend
from kgchains.predictions import PredictionStore

from conftest import make_synthetic


@pytest.fixture(scope="module")
def planted_world():
    g, objs, planted = make_synthetic(seed=7)
    store = PredictionStore(g, dataset_id="synth")
    store.load_records(objs)
    return g, store, objs, planted


def chain_from_planted(planted, with_relations=False):
    positions = []
    for i in range(3):
        positions.append((f"entities for hop {i + 1}", "related"))
    chain = ce.create_chain(positions, chain_id="test-chain")
    for i, node in enumerate(chain.nodes):
        ids = sorted({p["hop_entities"][i] for p in planted})
        node.resolved_entities = [
            ce.EntityMatch(eid, eid, "Gene", "", j + 1)
            for j, eid in enumerate(ids)
        ]
        if with_relations:
            node.relation_labels = {p["hop_relations"][i] for p in planted}
    return chain


def oracle_bitmasks(objs, chain):
    """Brute-force recomputation straight from the raw prediction objects."""
    sets = [n.resolved_ids() for n in chain.nodes]
    labels = [n.relation_labels or None for n in chain.nodes]
    masks = {}
    for rid, obj in enumerate(objs):
        mask = 0
        for i, hop in enumerate(obj["path"]):
            if hop["entity"] in sets[i] and (
                labels[i] is None or hop["relation"] in labels[i]
            ):
                mask |= 1 << i
        masks[rid] = mask
    return masks


def test_create_chain_arity_and_description():
    with pytest.raises(ContractViolation):
        ce.create_chain([("a", ""), ("b", "")])
    with pytest.raises(ContractViolation):
        ce.create_chain([("a", ""), ("", ""), ("c", "")])
    chain = ce.create_chain([("a", "r1"), ("b", ""), ("c", "r3")])
    assert chain.status == "draft"
    assert len(chain.nodes) == 3


def test_match_matches_oracle_and_planted_paths(planted_world):
    g, store, objs, planted = planted_world
    chain = chain_from_planted(planted)
    report = ce.match_chain(chain, store, g)
    assert report.bitmasks == oracle_bitmasks(objs, chain)
    # every planted record satisfies all three hops
    for p in planted:
        assert report.bitmasks[p["index"]] == 7
    assert chain.status == "retrieved"


def test_match_with_relation_constraints(planted_world):
    g, store, objs, planted = planted_world
    chain = chain_from_planted(planted, with_relations=True)
    report = ce.match_chain(chain, store, g)
    assert report.bitmasks == oracle_bitmasks(objs, chain)
    for p in planted:
        assert report.bitmasks[p["index"]] == 7


def test_match_requires_resolved_positions(planted_world):
    g, store, _, planted = planted_world
    chain = chain_from_planted(planted)
    chain.nodes[1].resolved_entities = []
    with pytest.raises(ContractViolation):
        ce.match_chain(chain, store, g)


def test_conservation_and_bar_identities(planted_world):
    g, store, _, planted = planted_world
    chain = chain_from_planted(planted)
    report = ce.match_chain(chain, store, g)
    nonzero = sum(1 for m in report.bitmasks.values() if m)
    assert sum(report.exclusive_counts.values()) == nonzero
    for i in range(3):
        bit = 1 << i
        inclusive = sum(c for m, c in report.exclusive_counts.items() if m & bit)
        assert inclusive == report.per_hypothesis[i]


def test_upset_slices(planted_world):
    g, store, _, planted = planted_world
    chain = chain_from_planted(planted)
    report = ce.match_chain(chain, store, g)
    for subset in ce.all_subsets():
        mask = ce.subset_to_mask(subset)
        exclusive = ce.upset_slice(report, subset, exclusive=True)
        inclusive = ce.upset_slice(report, subset, exclusive=False)
        assert len(exclusive) == report.exclusive_counts[mask]
        assert set(exclusive) <= set(inclusive)
        assert exclusive == sorted(exclusive)
        for rid in inclusive:
            assert report.bitmasks[rid] & mask == mask
    with pytest.raises(ContractViolation):
        ce.upset_slice(report, {0, 1})


def test_preview_resolves_and_drops_unknown(planted_world):
    import io

    g, store, _, _ = planted_world
    gw = Gateway(MockBackend(g, seed=5), graph=g)
    chain = ce.create_chain(
        [("genes touching Node 3", ""), ("middle", ""), ("targets", "")]
    )
    diag = io.StringIO()
    matches = ce.preview_entities(chain.nodes[0], gw, g, k=10, diagnostics=diag)
    assert 0 < len(matches) <= 10
    assert [m.alignment_rank for m in matches] == list(range(1, len(matches) + 1))
    for m in matches:
        assert m.entity_id in g.entities


def test_preview_unresolvable_backend_raises(planted_world):
    g, store, _, _ = planted_world

    class NoiseGateway:
        def retrieve_by_hypothesis(self, description):
            return [{"entity_name": f"garbage {i}", "category": "?",
                     "description": ""} for i in range(5)]

    node = ce.HypothesisNode(description="anything")
    with pytest.raises(GatewayError):
        ce.preview_entities(node, NoiseGateway(), g)


def test_map_relation_labels_warns_on_vacuous(planted_world):
    import io

    g, *_ = planted_world
    node = ce.HypothesisNode(description="x", relation_descriptor="weird",
                             relation_labels={"not_a_label"})
    diag = io.StringIO()
    ce.map_relation_labels(node, g, diagnostics=diag)
    assert node.relation_labels == set()
    assert "warning" in diag.getvalue()


def test_analyze_sets_critique_and_status(planted_world):
    g, *_ = planted_world
    gw = Gateway(MockBackend(g, seed=1), graph=g)
    chain = ce.create_chain([("a", ""), ("b", ""), ("c", "")])
    critique = ce.analyze_chain(chain, gw)
    assert chain.status == "analyzed"
    assert chain.critique == critique
    parsed = json.loads(critique)
    assert "chain_assessment" in parsed


def test_analyze_failure_leaves_chain_untouched(planted_world):
    class FailingGateway:
        def analyze_chain(self, text):
            raise GatewayError("backend down")

    chain = ce.create_chain([("a", ""), ("b", ""), ("c", "")])
    with pytest.raises(GatewayError):
        ce.analyze_chain(chain, FailingGateway())
    assert chain.status == "draft"
    assert chain.critique == ""


def test_chain_json_roundtrip(tmp_path, planted_world):
    *_, planted = planted_world
    chain = chain_from_planted(planted, with_relations=True)
    chain.status = "analyzed"
    chain.critique = "looks plausible"
    path = tmp_path / "chain.json"
    ce.save_chain(chain, path)
    loaded = ce.load_chain(path)
    assert loaded.to_json() == chain.to_json()


def test_wire_format_shape(planted_world):
    *_, planted = planted_world
    obj = chain_from_planted(planted).to_json()
    assert set(obj) == {"id", "positions", "status", "critique"}
    assert len(obj["positions"]) == 3
    for pos in obj["positions"]:
        assert set(pos) == {"description", "relation", "entities",
                            "relation_labels"}


def test_report_json_roundtrip(planted_world):
    g, store, _, planted = planted_world
    chain = chain_from_planted(planted)
    report = ce.match_chain(chain, store, g)
    back = ce.ChainMatchReport.from_json(report.to_json())
    assert back.bitmasks == report.bitmasks
    assert back.exclusive_counts == report.exclusive_counts
