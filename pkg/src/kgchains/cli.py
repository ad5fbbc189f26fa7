"""Operator entry points.

Exit codes: 0 ok, 2 input-format error, 3 contract violation, 4 backend
failure.
"""
from __future__ import annotations

import json
import os
import sys

import click

from .chains import load_chain, match_chain
from .errors import (
    AmbiguousNameError,
    ContractViolation,
    FormatError,
    GatewayError,
    KGChainsError,
    UnknownEntityError,
)
from .kg import load_graph
from .layout import load_embedding
from .metrics import evaluate, load_ranked_lists
from .predictions import PredictionStore

EXIT_FORMAT = 2
EXIT_CONTRACT = 3
EXIT_BACKEND = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn):
    try:
        return fn()
    except FormatError as exc:
        _fail(EXIT_FORMAT, str(exc))
    except (ContractViolation, UnknownEntityError, AmbiguousNameError) as exc:
        _fail(EXIT_CONTRACT, str(exc))
    except GatewayError as exc:
        _fail(EXIT_BACKEND, str(exc))
    except KGChainsError as exc:
        _fail(EXIT_CONTRACT, str(exc))


@click.group()
def main():
    """Knowledge-graph hypothesis-chain toolkit."""


@main.command()
@click.option("--entities", required=True, type=click.Path(exists=True))
@click.option("--triplets", required=True, type=click.Path(exists=True))
@click.option("--predictions", type=click.Path(exists=True))
@click.option("--embedding", type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--id", "dataset_id", default="default", show_default=True)
def ingest(entities, triplets, predictions, embedding, out, dataset_id):
    """Validate dataset files and write a registration manifest."""

    def run():
        g = load_graph(entities, triplets)
        counts = dict(g.counts())
        if predictions:
            store = PredictionStore(g, dataset_id=dataset_id)
            counts["predictions"] = store.load(predictions)
        if embedding:
            counts["embedding_points"] = len(load_embedding(embedding))
        os.makedirs(out, exist_ok=True)
        manifest = {
            "id": dataset_id,
            "entities": os.path.abspath(entities),
            "triplets": os.path.abspath(triplets),
            "predictions": os.path.abspath(predictions) if predictions else None,
            "embedding": os.path.abspath(embedding) if embedding else None,
            "counts": counts,
        }
        path = os.path.join(out, f"{dataset_id}.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
        click.echo(json.dumps({"manifest": path, **counts}))

    _guard(run)


def _load_manifest(data_dir: str, dataset_id: str) -> dict:
    path = os.path.join(data_dir, f"{dataset_id}.json")
    if not os.path.exists(path):
        raise ContractViolation(f"no manifest for dataset {dataset_id!r} in {data_dir}")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--listen", default="127.0.0.1:8000", show_default=True)
@click.option("--mock-llm", is_flag=True, default=False)
@click.option("--seed", default=0, show_default=True)
def serve(data, listen, mock_llm, seed):
    """Start the HTTP service, registering every manifest in the data dir."""

    def run():
        import uvicorn

        from .service import create_app

        app = create_app(data, mock_llm=mock_llm, seed=seed)
        state = app.state.kg
        from .service import DatasetDescriptor

        for name in sorted(os.listdir(data)):
            if not name.endswith(".json") or name.count(os.sep):
                continue
            try:
                manifest = json.load(open(os.path.join(data, name)))
            except (json.JSONDecodeError, UnicodeDecodeError):
                continue
            if not isinstance(manifest, dict) or "entities" not in manifest:
                continue
            state.register_dataset(DatasetDescriptor(
                id=manifest["id"],
                entity_file=manifest["entities"],
                triplet_file=manifest["triplets"],
                prediction_file=manifest.get("predictions"),
                embedding_file=manifest.get("embedding"),
            ))
        host, _, port = listen.partition(":")
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))

    _guard(run)


@main.command()
@click.option("--chain", "chain_file", required=True, type=click.Path(exists=True))
@click.option("--dataset", "dataset_id", required=True)
@click.option("--data", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path())
def match(chain_file, dataset_id, data, out):
    """Headless chain retrieval: write the match report as JSON."""

    def run():
        manifest = _load_manifest(data, dataset_id)
        g = load_graph(manifest["entities"], manifest["triplets"])
        store = PredictionStore(g, dataset_id=dataset_id)
        if manifest.get("predictions"):
            store.load(manifest["predictions"])
        chain = load_chain(chain_file)
        report = match_chain(chain, store, g)
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=2)
        click.echo(json.dumps({
            "chain_id": report.chain_id,
            "per_hypothesis": report.per_hypothesis,
            "full_matches": report.exclusive_counts.get(7, 0),
        }))

    _guard(run)


@main.command("eval")
@click.option("--ranked-lists", "ranked_lists", required=True,
              type=click.Path(exists=True))
@click.option("--metrics", default="ndcg,precision,recall,mrr,mpr,hit",
              show_default=True)
@click.option("--n", default=50, show_default=True)
def eval_cmd(ranked_lists, metrics, n):
    """Evaluate ranked lists; prints a metric/value TSV."""

    def run():
        lists = load_ranked_lists(ranked_lists)
        report = evaluate(lists, metrics.split(","), n=n)
        click.echo(report.to_tsv(), nl=False)

    _guard(run)


if __name__ == "__main__":
    main()
