import json

import pytest
from click.testing import CliRunner

from kgchains.cli import main
from kgchains.metrics import evaluate, load_ranked_lists

from conftest import make_synthetic, write_dataset


@pytest.fixture(scope="module")
def dataset_files(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    g, objs, planted = make_synthetic(seed=7)
    files = write_dataset(tmp, g, objs)
    return tmp, g, objs, planted, [str(p) for p in files]


def run(*args):
    return CliRunner().invoke(main, list(args))


def test_ingest_writes_manifest(dataset_files):
    tmp, g, objs, _, (ent, trip, pred, emb) = dataset_files
    out = tmp / "registry"
    result = run("ingest", "--entities", ent, "--triplets", trip,
                 "--predictions", pred, "--embedding", emb,
                 "--out", str(out), "--id", "synth")
    assert result.exit_code == 0, result.output
    line = json.loads(result.output)
    assert line["entities"] == 100
    assert line["predictions"] == 200
    manifest = json.loads((out / "synth.json").read_text())
    assert manifest["id"] == "synth"


def test_ingest_dangling_id_exits_2(dataset_files, tmp_path):
    tmp, *_ , (ent, _, _, _) = dataset_files
    bad = tmp_path / "bad_triplets.tsv"
    bad.write_text("head\trelation\ttail\ne0000\tbinds\tzz99\n")
    result = run("ingest", "--entities", ent, "--triplets", str(bad),
                 "--out", str(tmp_path / "o"))
    assert result.exit_code == 2
    assert ":2:" in result.output  # path:line: message
    assert "zz99" in result.output


def test_eval_matches_module(dataset_files, tmp_path):
    lists_file = tmp_path / "lists.jsonl"
    rows = [
        {"query_id": "q1", "candidates": ["a", "b", "c", "d"],
         "relevant": ["b", "d"], "universe_size": 20},
        {"query_id": "q2", "candidates": ["x", "y"],
         "relevant": ["x"], "universe_size": 10},
    ]
    lists_file.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    result = run("eval", "--ranked-lists", str(lists_file),
                 "--metrics", "ndcg,precision,recall,mrr,mpr,hit", "--n", "3")
    assert result.exit_code == 0, result.output
    got = dict(line.split("\t") for line in result.output.splitlines()[1:])
    oracle = evaluate(load_ranked_lists(lists_file),
                      ["ndcg", "precision", "recall", "mrr", "mpr", "hit"], n=3)
    for name, value in oracle.macro.items():
        assert float(got[name]) == pytest.approx(value, abs=1e-9)


def test_eval_bad_file_exits_2(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json}\n")
    assert run("eval", "--ranked-lists", str(bad)).exit_code == 2


def test_match_headless(dataset_files, tmp_path):
    from kgchains.chains import EntityMatch, create_chain, save_chain

    tmp, g, objs, planted, (ent, trip, pred, emb) = dataset_files
    out_dir = tmp / "registry2"
    assert run("ingest", "--entities", ent, "--triplets", trip,
               "--predictions", pred, "--out", str(out_dir),
               "--id", "synth").exit_code == 0

    chain = create_chain([(f"hop {i}", "") for i in (1, 2, 3)], chain_id="c1")
    for i, node in enumerate(chain.nodes):
        ids = sorted({p["hop_entities"][i] for p in planted})
        node.resolved_entities = [
            EntityMatch(e, e, "Gene", "", j + 1) for j, e in enumerate(ids)
        ]
    chain_file = tmp_path / "chain.json"
    save_chain(chain, chain_file)
    report_file = tmp_path / "report.json"
    result = run("match", "--chain", str(chain_file), "--dataset", "synth",
                 "--data", str(out_dir), "--out", str(report_file))
    assert result.exit_code == 0, result.output
    summary = json.loads(result.output)
    assert summary["full_matches"] >= len(planted)
    report = json.loads(report_file.read_text())
    assert report["per_hypothesis"][0] >= len(planted)


def test_match_draft_chain_exits_3(dataset_files, tmp_path):
    from kgchains.chains import create_chain, save_chain

    tmp, *_ , (ent, trip, pred, emb) = dataset_files
    out_dir = tmp / "registry3"
    run("ingest", "--entities", ent, "--triplets", trip,
        "--out", str(out_dir), "--id", "synth")
    chain_file = tmp_path / "draft.json"
    save_chain(create_chain([(f"hop {i}", "") for i in (1, 2, 3)]), chain_file)
    result = run("match", "--chain", str(chain_file), "--dataset", "synth",
                 "--data", str(out_dir), "--out", str(tmp_path / "r.json"))
    assert result.exit_code == 3
    assert "resolved" in result.output


def test_match_unknown_dataset_exits_3(dataset_files, tmp_path):
    from kgchains.chains import create_chain, save_chain

    chain_file = tmp_path / "c.json"
    save_chain(create_chain([(f"hop {i}", "") for i in (1, 2, 3)]), chain_file)
    result = run("match", "--chain", str(chain_file), "--dataset", "ghost",
                 "--data", str(tmp_path), "--out", str(tmp_path / "r.json"))
    assert result.exit_code == 3


def test_help_lists_subcommands():
    result = run("--help")
    assert result.exit_code == 0
    for sub in ("ingest", "serve", "match", "eval"):
        assert sub in result.output
