"""HTTP facade over the stores and engines.

Single-process FastAPI app.  Datasets load asynchronously; sessions and
chains persist as JSON under the data directory so a session can be
replayed; mutating endpoints honor an Idempotency-Key header.
"""
from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import chains as chain_engine
from . import layout as layout_engine
from .errors import (
    AmbiguousNameError,
    ContractViolation,
    FormatError,
    GatewayError,
    GatewayTimeout,
    UnknownEntityError,
)
from .gateway import (
    Gateway,
    GatewayRequest,
    HttpBackend,
    MockBackend,
    assemble_kg_context,
    assemble_vector_context,
)
from .kg import Triplet, load_graph
from .metrics import RankedList, evaluate
from .predictions import PredictionFilter, PredictionStore


@dataclass
class DatasetDescriptor:
    id: str
    entity_file: str
    triplet_file: str
    prediction_file: Optional[str] = None
    embedding_file: Optional[str] = None
    status: str = "unloaded"  # unloaded | loading | ready | failed
    counts: dict = field(default_factory=dict)
    error: str = ""

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "entity_file": self.entity_file,
            "triplet_file": self.triplet_file,
            "prediction_file": self.prediction_file,
            "embedding_file": self.embedding_file,
            "status": self.status,
        }
        if self.status == "ready":
            out["counts"] = self.counts
        if self.status == "failed":
            out["error"] = self.error
        return out


class AppState:
    def __init__(self, data_dir: str, mock_llm: bool = True, seed: int = 0,
                 synchronous_loads: bool = False):
        self.data_dir = data_dir
        self.mock_llm = mock_llm
        self.seed = seed
        self.synchronous_loads = synchronous_loads
        self.datasets: dict[str, DatasetDescriptor] = {}
        self.graphs: dict[str, object] = {}
        self.stores: dict[str, PredictionStore] = {}
        self.embeddings: dict[str, dict] = {}
        self.gateways: dict[str, Gateway] = {}
        self.chains: dict[str, chain_engine.HypothesisChain] = {}
        self.chain_dataset: dict[str, str] = {}
        self.chain_session: dict[str, str] = {}
        self.reports: dict[str, chain_engine.ChainMatchReport] = {}
        self.sessions: dict[str, dict] = {}
        self.revision = 0
        self.write_lock = threading.RLock()
        self.dataset_locks: dict[str, threading.Lock] = {}
        self.idempotency: dict[tuple, tuple] = {}
        os.makedirs(os.path.join(data_dir, "sessions"), exist_ok=True)
        os.makedirs(os.path.join(data_dir, "chains"), exist_ok=True)

    # -- revision / persistence -------------------------------------------
    def bump(self) -> int:
        with self.write_lock:
            self.revision += 1
            return self.revision

    def session(self, session_id: str, dataset_id: Optional[str] = None) -> dict:
        sess = self.sessions.setdefault(
            session_id,
            {"id": session_id, "dataset_id": dataset_id, "chains": [],
             "lasso_selections": [], "active_chain": None},
        )
        if dataset_id:
            sess["dataset_id"] = dataset_id
        return sess

    def log_session(self, session_id: str, op: str, body: dict):
        path = os.path.join(self.data_dir, "sessions", f"{session_id}.jsonl")
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"op": op, "body": body}) + "\n")

    def persist_chain(self, chain):
        path = os.path.join(self.data_dir, "chains", f"{chain.id}.json")
        chain_engine.save_chain(chain, path)

    # -- datasets --------------------------------------------------------------
    def register_dataset(self, desc: DatasetDescriptor):
        self.datasets[desc.id] = desc
        self.dataset_locks[desc.id] = threading.Lock()
        desc.status = "loading"
        if self.synchronous_loads:
            self._load_dataset(desc.id)
        else:
            threading.Thread(target=self._load_dataset, args=(desc.id,),
                             daemon=True).start()

    def _load_dataset(self, dataset_id: str):
        desc = self.datasets[dataset_id]
        with self.dataset_locks[dataset_id]:
            try:
                g = load_graph(desc.entity_file, desc.triplet_file)
                store = PredictionStore(g, dataset_id=dataset_id)
                if desc.prediction_file:
                    store.load(desc.prediction_file)
                emb = {}
                if desc.embedding_file:
                    emb = layout_engine.load_embedding(desc.embedding_file)
                self.graphs[dataset_id] = g
                self.stores[dataset_id] = store
                self.embeddings[dataset_id] = emb
                self.gateways[dataset_id] = self._make_gateway(g)
                desc.counts = {**g.counts(), "predictions": len(store.records),
                               "embedding_points": len(emb)}
                desc.status = "ready"
            except Exception as exc:  # surface load failures via status
                desc.status = "failed"
                desc.error = str(exc)

    def _make_gateway(self, graph) -> Gateway:
        if self.mock_llm:
            backend = MockBackend(graph, seed=self.seed)
        else:
            backend = HttpBackend(
                base_url=os.environ.get("KGCHAINS_LLM_URL", ""),
                api_key=os.environ.get("KGCHAINS_LLM_KEY", ""),
                model=os.environ.get("KGCHAINS_LLM_MODEL", ""),
            )
        return Gateway(
            backend, graph=graph,
            history_dir=os.path.join(self.data_dir, "history"),
        )

    def ready_dataset(self, dataset_id: str):
        desc = self.datasets.get(dataset_id)
        if desc is None:
            raise LookupError(f"unknown dataset {dataset_id!r}")
        if desc.status != "ready":
            raise NotReady(f"dataset {dataset_id!r} is {desc.status}")
        return desc


class NotReady(Exception):
    pass


def _error(status: int, code: str, message: str, detail=None):
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "detail": detail},
    )


def create_app(data_dir: str, mock_llm: bool = True, seed: int = 0,
               synchronous_loads: bool = False) -> FastAPI:
    app = FastAPI(title="kgchains", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )
    state = AppState(data_dir, mock_llm=mock_llm, seed=seed,
                     synchronous_loads=synchronous_loads)
    app.state.kg = state

    @app.exception_handler(LookupError)
    async def _on_lookup(request, exc):
        return _error(404, "not_found", str(exc))

    @app.exception_handler(UnknownEntityError)
    async def _on_unknown(request, exc):
        return _error(404, "unknown_entity", str(exc))

    @app.exception_handler(NotReady)
    async def _on_not_ready(request, exc):
        return _error(409, "dataset_not_ready", str(exc))

    @app.exception_handler(ContractViolation)
    async def _on_contract(request, exc):
        return _error(422, "contract_violation", str(exc))

    @app.exception_handler(FormatError)
    async def _on_format(request, exc):
        return _error(422, "format_error", str(exc))

    @app.exception_handler(AmbiguousNameError)
    async def _on_ambiguous(request, exc):
        return _error(422, "ambiguous_name", str(exc))

    @app.exception_handler(GatewayTimeout)
    async def _on_timeout(request, exc):
        return _error(504, "gateway_timeout", str(exc))

    @app.exception_handler(GatewayError)
    async def _on_gateway(request, exc):
        return _error(502, "gateway_error", str(exc))

    def idempotent(request: Request, compute):
        """Run a mutating handler once per Idempotency-Key and replay after."""
        key = request.headers.get("Idempotency-Key")
        cache_key = (request.method, request.url.path, key)
        if key is not None and cache_key in state.idempotency:
            return state.idempotency[cache_key]
        with state.write_lock:
            if key is not None and cache_key in state.idempotency:
                return state.idempotency[cache_key]
            result = compute()
            if key is not None:
                state.idempotency[cache_key] = result
            return result

    def envelope(payload: dict, dataset_id: Optional[str] = None) -> dict:
        out = dict(payload)
        out["revision"] = state.revision
        if dataset_id is not None:
            out["dataset_id"] = dataset_id
        return out

    # -- datasets ----------------------------------------------------------
    @app.post("/datasets")
    async def post_datasets(request: Request):
        body = await request.json()

        def compute():
            dataset_id = body.get("id")
            if not dataset_id:
                raise ContractViolation("dataset id is required")
            for key in ("entities", "triplets"):
                if not body.get(key):
                    raise ContractViolation(f"missing required file path {key!r}")
            if dataset_id in state.datasets:
                return envelope(state.datasets[dataset_id].to_json(), dataset_id)
            desc = DatasetDescriptor(
                id=dataset_id,
                entity_file=body["entities"],
                triplet_file=body["triplets"],
                prediction_file=body.get("predictions"),
                embedding_file=body.get("embedding"),
            )
            state.register_dataset(desc)
            state.bump()
            return envelope(desc.to_json(), dataset_id)

        return idempotent(request, compute)

    @app.get("/datasets/{dataset_id}")
    async def get_dataset(dataset_id: str):
        desc = state.datasets.get(dataset_id)
        if desc is None:
            raise LookupError(f"unknown dataset {dataset_id!r}")
        return envelope(desc.to_json(), dataset_id)

    # -- prediction browsing ------------------------------------------------
    @app.get("/search")
    async def search(dataset: str, head: str, n: int = 50,
                     category: Optional[str] = None):
        state.ready_dataset(dataset)
        g = state.graphs[dataset]
        store = state.stores[dataset]
        head_id = head if head in g.entities else g.resolve_name(head)
        if head_id is None:
            raise LookupError(f"unknown head entity {head!r}")
        if category and g.entities[head_id].category != category:
            raise LookupError(
                f"head {head!r} is not in category {category!r}"
            )
        records = store.top_tails(head_id, n=n)
        return envelope(
            {"head": head_id, "rows": [_record_json(r, g, store) for r in records]},
            dataset,
        )

    @app.post("/predictions/filter")
    async def predictions_filter(request: Request):
        body = await request.json()
        dataset = body.get("dataset", "")
        state.ready_dataset(dataset)
        store = state.stores[dataset]
        g = state.graphs[dataset]
        spec = body.get("filter", {})
        f = PredictionFilter(
            head=spec.get("head"),
            category=spec.get("category"),
            entity_terms=[tuple(t) for t in spec.get("entity_terms", [])],
            relation_terms=[tuple(t) for t in spec.get("relation_terms", [])],
            exclude_relation_homogeneous=spec.get("exclude_relation_homogeneous"),
            min_score=spec.get("min_score"),
        )
        views = store.filter_and_rerank(f)
        if "sort" in body:
            sort = body["sort"]
            column = sort.get("column", "score")
            if column == "edge_weight":
                column = ("edge_weight", int(sort.get("hop", 1)))
            ordered = store.sort_by(
                column, sort.get("order", "desc"), [v.record for v in views]
            )
            views = [
                type(views[0])(record=r, display_rank=i + 1)
                for i, r in enumerate(ordered)
            ] if views else []
        return envelope(
            {
                "rows": [
                    {"display_rank": v.display_rank, **_record_json(v.record, g, store)}
                    for v in views
                ]
            },
            dataset,
        )

    # -- embedding & lasso ------------------------------------------------------
    @app.get("/embedding/{dataset}")
    async def get_embedding(dataset: str):
        state.ready_dataset(dataset)
        emb = state.embeddings[dataset]
        return envelope(
            {"points": [{"entity_id": k, "x": x, "y": y}
                        for k, (x, y) in sorted(emb.items())]},
            dataset,
        )

    @app.post("/lasso")
    async def post_lasso(request: Request):
        body = await request.json()
        dataset = body.get("dataset", "")
        state.ready_dataset(dataset)
        polygon = [tuple(p) for p in body.get("polygon", [])]
        ids = layout_engine.lasso_select(state.embeddings[dataset], polygon)
        session_id = body.get("session_id")
        if session_id:
            sess = state.session(session_id, dataset)
            sess["lasso_selections"].append(ids)
            state.log_session(session_id, "lasso", body)
            state.bump()
        return envelope({"selected": ids}, dataset)

    # -- chains -------------------------------------------------------------------
    def _get_chain(chain_id: str):
        chain = state.chains.get(chain_id)
        if chain is None:
            raise LookupError(f"unknown chain {chain_id!r}")
        return chain, state.chain_dataset[chain_id]

    @app.post("/chains")
    async def post_chains(request: Request):
        body = await request.json()

        def compute():
            dataset = body.get("dataset", "")
            state.ready_dataset(dataset)
            positions = [
                (p.get("description", ""), p.get("relation", ""))
                for p in body.get("positions", [])
            ]
            chain = chain_engine.create_chain(positions, chain_id=body.get("id"))
            state.chains[chain.id] = chain
            state.chain_dataset[chain.id] = dataset
            session_id = body.get("session_id", "default")
            state.chain_session[chain.id] = session_id
            sess = state.session(session_id, dataset)
            sess["chains"].append(chain.id)
            sess["active_chain"] = chain.id
            state.persist_chain(chain)
            # record the assigned id so a replay recreates the same chain
            state.log_session(session_id, "chain_create", {**body, "id": chain.id})
            state.bump()
            return envelope({"chain": chain.to_json()}, dataset)

        return idempotent(request, compute)

    @app.post("/chains/{chain_id}/preview")
    async def chain_preview(chain_id: str, request: Request):
        body = await request.json()

        def compute():
            chain, dataset = _get_chain(chain_id)
            state.ready_dataset(dataset)
            g = state.graphs[dataset]
            gw = state.gateways[dataset]
            position = int(body.get("position", 0))
            if not 1 <= position <= chain_engine.POSITIONS:
                raise ContractViolation(f"position must be 1..3, got {position}")
            node = chain.nodes[position - 1]
            matches = chain_engine.preview_entities(
                node, gw, g, k=int(body.get("k", 20))
            )
            chain_engine.map_relation_labels(node, g)
            state.persist_chain(chain)
            state.log_session(
                state.chain_session.get(chain_id, "default"), "chain_preview",
                {"chain_id": chain_id, **body},
            )
            state.bump()
            return envelope({"chain": chain.to_json(),
                             "position": position,
                             "matched": len(matches)}, dataset)

        return idempotent(request, compute)

    @app.post("/chains/{chain_id}/analyze")
    async def chain_analyze(chain_id: str, request: Request):
        def compute():
            chain, dataset = _get_chain(chain_id)
            state.ready_dataset(dataset)
            critique = chain_engine.analyze_chain(chain, state.gateways[dataset])
            state.persist_chain(chain)
            state.log_session(
                state.chain_session.get(chain_id, "default"), "chain_analyze",
                {"chain_id": chain_id},
            )
            state.bump()
            return envelope({"chain": chain.to_json(), "critique": critique},
                            dataset)

        return idempotent(request, compute)

    @app.post("/chains/{chain_id}/retrieve")
    async def chain_retrieve(chain_id: str, request: Request):
        def compute():
            chain, dataset = _get_chain(chain_id)
            state.ready_dataset(dataset)
            store = state.stores[dataset]
            g = state.graphs[dataset]
            report = chain_engine.match_chain(chain, store, g)
            store.mark_alignment(report)
            state.reports[chain_id] = report
            state.persist_chain(chain)
            state.log_session(
                state.chain_session.get(chain_id, "default"), "chain_retrieve",
                {"chain_id": chain_id},
            )
            state.bump()
            return envelope({"report": report.to_json()}, dataset)

        return idempotent(request, compute)

    @app.get("/chains/{chain_id}")
    async def get_chain(chain_id: str):
        chain, dataset = _get_chain(chain_id)
        return envelope({"chain": chain.to_json()}, dataset)

    @app.get("/chains/{chain_id}/upset")
    async def chain_upset(chain_id: str, subset: str = "",
                          exclusive: bool = True):
        _, dataset = _get_chain(chain_id)
        report = state.reports.get(chain_id)
        if report is None:
            raise LookupError(f"chain {chain_id!r} has no match report")
        if subset:
            wanted = {int(s) for s in subset.split(",")}
            ids = chain_engine.upset_slice(report, wanted, exclusive=exclusive)
            return envelope(
                {"subset": sorted(wanted), "exclusive": exclusive,
                 "record_ids": ids, "count": len(ids)},
                dataset,
            )
        bars = [
            {"subset": sorted(s),
             "count": len(chain_engine.upset_slice(report, s, exclusive=True))}
            for s in chain_engine.all_subsets()
        ]
        return envelope(
            {"per_hypothesis": report.per_hypothesis, "bars": bars}, dataset
        )

    # -- layout ------------------------------------------------------------------
    @app.post("/layout")
    async def post_layout(request: Request):
        body = await request.json()
        dataset = body.get("dataset", "")
        state.ready_dataset(dataset)
        g = state.graphs[dataset]
        store = state.stores[dataset]
        record = store.get(int(body.get("record_id", -1)))
        chain = None
        if body.get("chain_id"):
            chain, chain_ds = _get_chain(body["chain_id"])
            if chain_ds != dataset:
                raise ContractViolation(
                    "chain belongs to a different dataset"
                )
        layers = layout_engine.build_layers(
            record.path, chain, g,
            merge_one_hop=bool(body.get("merge_one_hop", True)),
        )
        containers = layout_engine.stack_containers(len(layers))
        seed = int(body.get("seed", 0))
        categories = {eid: g.entities[eid].category for eid in g.entities}
        layouts = [
            layout_engine.compute_treemap(
                layer, container, seed=seed, categories=categories
            )
            for layer, container in zip(layers, containers)
        ]
        edges = layout_engine.derive_cross_edges(layers, g)
        return envelope(
            {
                "layers": [lay.to_json() for lay in layouts],
                "cross_edges": [
                    {"a": a, "b": b, "relation": rel,
                     "layers": list(pair)}
                    for a, b, rel, pair in edges
                ],
            },
            dataset,
        )

    # -- chat -------------------------------------------------------------------
    @app.post("/chat")
    async def post_chat(request: Request):
        body = await request.json()

        def compute():
            dataset = body.get("dataset", "")
            state.ready_dataset(dataset)
            g = state.graphs[dataset]
            gw = state.gateways[dataset]
            mode = body.get("mode", "llm")
            message = body.get("message", "")
            session_id = body.get("session_id", "default")
            state.session(session_id, dataset)
            if mode == "rag":
                kg_context, cited = assemble_kg_context(message, g)
                resp = gw.chat(GatewayRequest(
                    template="recommend_entities",
                    bindings={
                        "kg_context": kg_context,
                        "vector_context": assemble_vector_context(message, g),
                        "query": message,
                    },
                    mode="rag",
                    session_id=session_id,
                ))
                cited_out = [list(t) for t in cited]
            else:
                gw._append_history(session_id, "user", message, "llm")
                resp = gw.chat(GatewayRequest(
                    template="general_response", mode="llm",
                    session_id=session_id,
                ))
                cited_out = []
            state.log_session(session_id, "chat", body)
            state.bump()
            return envelope(
                {
                    "mode": mode,
                    "payload": resp.payload,
                    "raw": resp.raw,
                    "suggestions": resp.suggestions,
                    "cited_triplets": cited_out,
                    "backend": resp.backend_id,
                },
                dataset,
            )

        return idempotent(request, compute)

    # -- kg append --------------------------------------------------------------
    @app.post("/kg/append")
    async def kg_append(request: Request):
        body = await request.json()

        def compute():
            dataset = body.get("dataset", "")
            state.ready_dataset(dataset)
            if not body.get("confirm"):
                raise ContractViolation(
                    "kg append requires the confirm flag"
                )
            triplets = [
                Triplet(t["head"], t["relation"], t["tail"])
                for t in body.get("triplets", [])
            ]
            with state.dataset_locks[dataset]:
                result = state.graphs[dataset].append_triplets(triplets)
            state.bump()
            return envelope(result, dataset)

        return idempotent(request, compute)

    # -- metrics -----------------------------------------------------------------
    @app.post("/metrics/evaluate")
    async def metrics_evaluate(request: Request):
        body = await request.json()
        lists = []
        for obj in body.get("lists", []):
            relevant = set(obj.get("relevant", []))
            candidates = list(obj["candidates"])
            relevance = {c: 1 if c in relevant else 0 for c in candidates}
            for r in relevant:
                relevance.setdefault(r, 1)
            lists.append(RankedList(
                query_id=obj["query_id"],
                candidates=candidates,
                relevance=relevance,
                universe_size=obj.get("universe_size"),
            ))
        metrics = body.get("metrics",
                           ["ndcg", "precision", "recall", "mrr", "mpr", "hit"])
        report = evaluate(lists, metrics, n=int(body.get("n", 50)))
        return envelope({"cutoff": report.cutoff, "macro": report.macro,
                         "per_query": report.per_query})

    # -- sessions ----------------------------------------------------------------
    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        sess = state.sessions.get(session_id)
        if sess is None:
            raise LookupError(f"unknown session {session_id!r}")
        return envelope(dict(sess))

    return app


def _record_json(rec, g, store=None) -> dict:
    return {
        "record_id": rec.record_id,
        "head": rec.head,
        "head_name": g.entities[rec.head].name,
        "tail": rec.tail,
        "tail_name": g.entities[rec.tail].name,
        "score": rec.score,
        "rank": rec.rank,
        "starred": rec.record_id in getattr(store, "starred", set()),
        "path": {
            "origin": rec.path.origin,
            "hops": [
                {"relation": h.relation, "weight": h.weight, "entity": h.entity,
                 "entity_name": g.entities[h.entity].name}
                for h in rec.path.hops
            ],
        },
    }


def session_log_path(data_dir: str, session_id: str) -> str:
    return os.path.join(data_dir, "sessions", f"{session_id}.jsonl")


def replay_session(app_client, data_dir: str, session_id: str):
    """Re-apply a persisted session log through the HTTP surface.

    Returns the list of (op, response json) produced by the replay; used to
    check that a replayed session reconstructs identical chain states and
    match reports.
    """
    routes = {
        "chat": ("POST", "/chat"),
        "lasso": ("POST", "/lasso"),
        "chain_create": ("POST", "/chains"),
    }
    results = []
    with open(session_log_path(data_dir, session_id), encoding="utf-8") as fh:
        for line in fh:
            entry = json.loads(line)
            op, body = entry["op"], entry["body"]
            if op in routes:
                method, path = routes[op]
                resp = app_client.request(method, path, json=body)
            elif op == "chain_preview":
                resp = app_client.post(
                    f"/chains/{body['chain_id']}/preview",
                    json={k: v for k, v in body.items() if k != "chain_id"},
                )
            elif op == "chain_analyze":
                resp = app_client.post(f"/chains/{body['chain_id']}/analyze")
            elif op == "chain_retrieve":
                resp = app_client.post(f"/chains/{body['chain_id']}/retrieve")
            else:
                continue
            results.append((op, resp.json()))
    return results
