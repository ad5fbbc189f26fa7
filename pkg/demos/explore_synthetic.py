"""Narrative walkthrough on a synthetic knowledge graph.

Generates a small seeded KG with link predictions, then walks the full
loop: browse top tails, filter out a relation-homogeneous explanation
pattern, draft a 3-position hypothesis chain, resolve it with the offline
mock backend, retrieve matching predictions, and lay the aligned entities
out as a weighted Voronoi treemap.

Run:  python3 demos/explore_synthetic.py
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from conftest import make_synthetic  # noqa: E402

from kgchains import (  # noqa: E402
    Gateway,
    MockBackend,
    PredictionFilter,
    PredictionStore,
    create_chain,
    match_chain,
    upset_slice,
)
from kgchains.chains import all_subsets, analyze_chain, preview_entities  # noqa: E402
from kgchains.layout import Rect, build_layers, compute_treemap  # noqa: E402


def main():
    graph, prediction_objs, _ = make_synthetic(seed=7)
    print(f"graph: {graph.counts()}")

    store = PredictionStore(graph, dataset_id="demo")
    store.load_records(prediction_objs)
    head = store.records[0].head
    print(f"\ntop 5 predicted tails for {graph.entities[head].name}:")
    for rec in store.top_tails(head, n=5):
        print(f"  #{rec.rank}  {graph.entities[rec.tail].name}  score={rec.score:.3f}")

    views = store.filter_and_rerank(
        PredictionFilter(head=head, exclude_relation_homogeneous="sl_gsg")
    )
    print(f"\nafter dropping all-sl_gsg explanations: {len(views)} records survive")

    gateway = Gateway(MockBackend(graph, seed=7), graph=graph)
    chain = create_chain([
        ("entities interacting near the prediction head", ""),
        ("intermediate regulators", ""),
        ("downstream outcome entities", ""),
    ])
    for node in chain.nodes:
        matches = preview_entities(node, gateway, graph, k=10)
        print(f"\n'{node.description}' resolved to "
              f"{', '.join(m.entity_name for m in matches[:4])}, ...")
    analyze_chain(chain, gateway)

    report = match_chain(chain, store, graph)
    print(f"\nper-hypothesis match counts: {report.per_hypothesis}")
    for subset in all_subsets():
        count = len(upset_slice(report, subset))
        if count:
            print(f"  exactly {sorted(subset)}: {count} records")

    layers = build_layers(store.records[0].path, chain, graph)
    layout = compute_treemap(
        layers[-1], Rect(0, 0, 800, 500), seed=7,
        categories={e: graph.entities[e].category for e in graph.entities},
    )
    print(f"\ntreemap for the last hypothesis layer: {len(layout.cells)} cells, "
          f"converged={layout.converged} in {layout.iterations} iterations "
          f"(max area error {layout.max_relative_error:.3f})")


if __name__ == "__main__":
    main()
