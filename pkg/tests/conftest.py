"""Shared synthetic fixtures.

The synthetic knowledge graph is generated from a seed: entities across a
few categories, random triplets, prediction records with valid per-head
rank permutations, and a handful of planted 3-hop paths whose hop entities
are known in advance (so chain matching has a ground truth).
"""
from __future__ import annotations

import json

import numpy as np
import pytest

from kgchains.kg import Entity, Triplet, build_graph

CATEGORIES = ("Gene", "Drug", "Pathway", "Phenotype")
RELATIONS = ("interacts", "regulates", "binds", "part_of", "associated", "sl_gsg")


def make_synthetic(seed=7, n_entities=100, n_triplets=500, n_predictions=200,
                   n_planted=10):
    """Graph + prediction objects + planted-path bookkeeping.

    Returns (graph, prediction_objs, planted) where planted is a list of
    dicts with the hop entities/relations of each planted record and its
    index into prediction_objs.
    """
    rng = np.random.default_rng(seed)
    entities = [
        Entity(
            f"e{i:04d}",
            f"Node {i}",
            CATEGORIES[i % len(CATEGORIES)],
            f"synthetic node number {i}",
        )
        for i in range(n_entities)
    ]
    ids = [e.id for e in entities]
    triplets = set()
    while len(triplets) < n_triplets:
        h, t = rng.integers(0, n_entities, size=2)
        if h == t:
            continue
        rel = RELATIONS[int(rng.integers(0, len(RELATIONS)))]
        triplets.add((ids[h], rel, ids[t]))
    graph = build_graph(entities, [Triplet(*t) for t in sorted(triplets)])

    # predictions: a few heads, each with a valid rank permutation.
    # Planted records draw their mid-hop entities from a reserved pool no
    # other record touches, so a chain built from the planted hop sets
    # fully matches exactly the planted records.
    reserve = max(n_entities - 10, 1)
    heads = [ids[int(i)] for i in rng.choice(n_entities, size=4, replace=False)]
    per_head = n_predictions // len(heads)
    objs = []
    planted = []
    plant_slots = set()
    while len(plant_slots) < n_planted:
        plant_slots.add(int(rng.integers(0, n_predictions)))
    idx = 0
    for head in heads:
        tails = [ids[int(i)] for i in rng.choice(n_entities, size=per_head,
                                                 replace=False)]
        scores = np.sort(rng.random(per_head))[::-1]
        for rank, (tail, score) in enumerate(zip(tails, scores), start=1):
            if idx in plant_slots:
                mids = [ids[reserve + int(i)]
                        for i in rng.integers(0, n_entities - reserve, size=2)]
            else:
                mids = [ids[int(i)] for i in rng.integers(0, reserve, size=2)]
            hop_entities = [mids[0], mids[1], tail]
            hop_relations = [
                RELATIONS[int(rng.integers(0, len(RELATIONS)))] for _ in range(3)
            ]
            obj = {
                "head": head,
                "tail": tail,
                "score": float(score),
                "rank": rank,
                "path": [
                    {"relation": rel, "weight": float(rng.random()),
                     "entity": ent}
                    for rel, ent in zip(hop_relations, hop_entities)
                ],
            }
            if idx in plant_slots:
                planted.append({
                    "index": idx,
                    "hop_entities": hop_entities,
                    "hop_relations": hop_relations,
                })
            objs.append(obj)
            idx += 1
    return graph, objs, planted


def write_dataset(tmp_path, graph, objs, name="synth"):
    """TSV/JSONL/CSV files for a generated dataset; returns the four paths."""
    ent = tmp_path / f"{name}_entities.tsv"
    with open(ent, "w") as fh:
        fh.write("id\tname\tcategory\tdescription\n")
        for e in graph.entities.values():
            fh.write(f"{e.id}\t{e.name}\t{e.category}\t{e.description}\n")
    trip = tmp_path / f"{name}_triplets.tsv"
    with open(trip, "w") as fh:
        fh.write("head\trelation\ttail\n")
        for t in graph.triplets():
            fh.write(f"{t.head}\t{t.relation}\t{t.tail}\n")
    pred = tmp_path / f"{name}_predictions.jsonl"
    with open(pred, "w") as fh:
        for obj in objs:
            fh.write(json.dumps(obj) + "\n")
    emb = tmp_path / f"{name}_embedding.csv"
    rng = np.random.default_rng(11)
    with open(emb, "w") as fh:
        fh.write("entity_id,x,y\n")
        for eid in sorted(graph.entities):
            x, y = rng.random(2)
            fh.write(f"{eid},{x:.6f},{y:.6f}\n")
    return ent, trip, pred, emb


@pytest.fixture(scope="session")
def synthetic():
    return make_synthetic()


@pytest.fixture()
def synth_graph(synthetic):
    return synthetic[0]


@pytest.fixture()
def synth_store(synthetic):
    from kgchains.predictions import PredictionStore

    graph, objs, _ = synthetic
    store = PredictionStore(graph, dataset_id="synth")
    store.load_records(objs)
    return store
