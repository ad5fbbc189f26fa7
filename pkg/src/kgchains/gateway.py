"""Pluggable LLM/RAG client: prompt rendering, context assembly, parsing.

Five prompt protocols are shipped as template files; placeholders are bound
at render time and responses are parsed strictly per template schema.  A
deterministic mock backend makes the whole pipeline testable offline; an
HTTP backend speaks a minimal chat-completion protocol.
"""
from __future__ import annotations

import hashlib
import json
import re
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .errors import ContractViolation, GatewayError, GatewayTimeout
from .kg import KnowledgeGraph

TEMPLATE_NAMES = (
    "recommend_entities",
    "analyse_path",
    "retrieve_by_hypothesis",
    "analyze_improve_chain",
    "general_response",
)

RECOMMEND_ENTITY_JSON_FORMAT = (
    '{"entities": [{"entity_name": "...", "category": "...", "reason": "..."}]}'
)
RETRIEVAL_ENTITY_JSON_FORMAT = (
    '{"entities": [{"entity_name": "...", "category": "...", "description": "..."}]}'
)
PATH_OUTPUT_FORMAT = (
    '{"interpretation": "...", "hypothesis_chain": "[A] -> [rel] -> [B] -> [rel] -> '
    '[C] -> [rel] -> [D]"}'
)
HYPO_CHAIN_FORMAT = "[A] -> [rel] -> [B] -> [rel] -> [C] -> [rel] -> [D]"
ANALYZE_AND_IMPROVE_OUTPUT_FORMAT = (
    '{"chain_assessment": "...", "biological_interpretation": "...", '
    '"suggested_improvements": "..."}'
)

DEFAULT_FORMAT_BINDINGS = {
    "recommend_entity_json_format": RECOMMEND_ENTITY_JSON_FORMAT,
    "retrieval_entity_json_format": RETRIEVAL_ENTITY_JSON_FORMAT,
    "path_output_format": PATH_OUTPUT_FORMAT,
    "hypo_chain_format": HYPO_CHAIN_FORMAT,
    "analyze_and_improve_output_format": ANALYZE_AND_IMPROVE_OUTPUT_FORMAT,
}

_PLACEHOLDER = re.compile(r"\{(\w+)\}")


def template_body(name: str) -> str:
    if name not in TEMPLATE_NAMES:
        raise ContractViolation(f"unknown template {name!r}")
    return (
        resources.files("kgchains.templates").joinpath(f"{name}.txt").read_text("utf-8")
    )


def template_placeholders(name: str) -> list[str]:
    return sorted(set(_PLACEHOLDER.findall(template_body(name))))


def render(name: str, bindings: dict) -> str:
    """Single-pass placeholder substitution; every placeholder must be bound."""
    body = template_body(name)
    missing = [p for p in set(_PLACEHOLDER.findall(body)) if p not in bindings]
    if missing:
        raise ContractViolation(
            f"template {name!r}: unbound placeholder(s) {', '.join(sorted(missing))}"
        )
    return _PLACEHOLDER.sub(lambda m: str(bindings[m.group(1)]), body)


# -- response parsing ----------------------------------------------------------

def extract_json(raw: str):
    """Outermost JSON value in a possibly prose-wrapped response."""
    decoder = json.JSONDecoder()
    for i, ch in enumerate(raw):
        if ch in "［[{":
            try:
                value, _ = decoder.raw_decode(raw[i:])
                return value
            except json.JSONDecodeError:
                continue
    raise GatewayError("no JSON value found in response")


def _entity_list(value, keys, warn_range, diagnostics=None):
    if isinstance(value, dict):
        value = value.get("entities", value)
    if not isinstance(value, list):
        raise GatewayError("expected a JSON array of entities")
    out = []
    for i, item in enumerate(value):
        if not isinstance(item, dict):
            raise GatewayError(f"entity {i}: expected an object")
        for key in keys:
            if key not in item:
                raise GatewayError(f"entity {i}: missing key {key!r}")
        out.append({k: item[k] for k in keys})
    low, high = warn_range
    if diagnostics is not None and not low <= len(out) <= high:
        print(
            f"warning: expected {low}-{high} entities, got {len(out)}",
            file=diagnostics,
        )
    return out


def parse_response(name: str, raw: str, diagnostics=None):
    """Typed payload per template; raises GatewayError on schema violations."""
    if not raw:
        raise GatewayError("empty response")
    if name == "recommend_entities":
        return _entity_list(
            extract_json(raw), ("entity_name", "category", "reason"), (5, 7),
            diagnostics,
        )
    if name == "retrieve_by_hypothesis":
        return _entity_list(
            extract_json(raw), ("entity_name", "category", "description"), (15, 20),
            diagnostics,
        )
    if name == "analyse_path":
        value = extract_json(raw)
        if not isinstance(value, dict) or "hypothesis_chain" not in value:
            raise GatewayError("path analysis must contain a hypothesis_chain")
        return value
    if name == "analyze_improve_chain":
        try:
            value = extract_json(raw)
        except GatewayError:
            value = None
        sections = {}
        keys = ("chain_assessment", "biological_interpretation", "suggested_improvements")
        titles = ("Chain Assessment", "Biological Interpretation", "Suggested Improvements")
        if isinstance(value, dict):
            for key in keys:
                if key not in value:
                    raise GatewayError(f"missing section {key!r}")
                sections[key] = value[key]
            return sections
        # fall back to markdown-style **Section** headers
        for key, title in zip(keys, titles):
            m = re.search(
                rf"\*\*{re.escape(title)}\*\*\s*(.*?)(?=\n\s*(?:\d+\.\s*)?\*\*|\Z)",
                raw,
                re.S,
            )
            if not m:
                raise GatewayError(f"missing section {title!r}")
            sections[key] = m.group(1).strip()
        return sections
    if name == "general_response":
        return {"text": raw}
    raise ContractViolation(f"unknown template {name!r}")


# -- local context assembly ------------------------------------------------------

def _query_entity_ids(query: str, g: KnowledgeGraph) -> list[str]:
    """Entity ids name-resolved from the query's word n-grams (up to 3)."""
    words = re.findall(r"[\w/'-]+", query)
    matched = []
    seen = set()
    for size in (3, 2, 1):
        for i in range(len(words) - size + 1):
            candidate = " ".join(words[i : i + size])
            try:
                eid = g.resolve_name(candidate)
            except Exception:
                eid = None
            if eid and eid not in seen:
                seen.add(eid)
                matched.append(eid)
    return matched


def assemble_kg_context(query: str, g: KnowledgeGraph, hops: int = 1, cap: int = 100):
    """Local KG context for a query.

    Entities are matched by name against the query, expanded ``hops`` steps,
    and the incident triplets serialized one per line, truncated to ``cap``
    by combined endpoint degree descending then id.
    Returns (context text, cited (head, relation, tail) list).
    """
    frontier = _query_entity_ids(query, g)
    visited = set(frontier)
    triplets = set()
    for _ in range(max(hops, 0)):
        next_frontier = []
        for eid in frontier:
            for relation, nb in g.neighbors(eid, "out"):
                triplets.add((eid, relation, nb.id))
                if nb.id not in visited:
                    visited.add(nb.id)
                    next_frontier.append(nb.id)
            for relation, nb in g.neighbors(eid, "in"):
                triplets.add((nb.id, relation, eid))
                if nb.id not in visited:
                    visited.add(nb.id)
                    next_frontier.append(nb.id)
        frontier = next_frontier
    ordered = sorted(
        triplets,
        key=lambda t: (-(g.degree(t[0]) + g.degree(t[2])), t[0], t[1], t[2]),
    )[: max(cap, 0)]
    lines = [
        f"{g.entities[h].name} —{r}→ {g.entities[t].name}" for h, r, t in ordered
    ]
    return "\n".join(lines), ordered


def assemble_vector_context(query: str, g: KnowledgeGraph, top_k: int = 5) -> str:
    """Top-k entity description chunks by term-frequency overlap with the query."""
    terms = {w.lower() for w in re.findall(r"\w+", query) if len(w) > 2}
    if not terms:
        return ""
    scored = []
    for ent in g.entities.values():
        if not ent.description:
            continue
        words = re.findall(r"\w+", ent.description.lower())
        score = sum(1 for w in words if w in terms)
        if score:
            scored.append((-score, ent.id, ent))
    scored.sort()
    return "\n".join(f"{e.name}: {e.description}" for _, _, e in scored[:top_k])


# -- backends ---------------------------------------------------------------------


class MockBackend:
    """Deterministic offline backend; same request always yields the same text.

    When a graph is attached, entity-producing templates sample real KG
    entities (preferring ones cited in the kg_context) so downstream
    resolution succeeds.
    """

    id = "mock"

    def __init__(self, graph: Optional[KnowledgeGraph] = None, seed: int = 0):
        self.graph = graph
        self.seed = seed

    def _rng_index(self, prompt: str, i: int, n: int) -> int:
        digest = hashlib.sha256(f"{self.seed}:{i}:{prompt}".encode()).digest()
        return int.from_bytes(digest[:8], "big") % n

    def _candidate_entities(self, prompt: str, count: int):
        g = self.graph
        if g is None or not g.entities:
            return [
                {"entity_name": f"entity_{i}", "category": "Unknown"}
                for i in range(count)
            ]
        cited = []
        for name in re.findall(r"^(.*?) —.*?→ (.*?)$", prompt, re.M):
            cited.extend(name)
        pool = []
        seen = set()
        for name in cited:
            eid = None
            try:
                eid = g.resolve_name(name)
            except Exception:
                pass
            if eid and eid not in seen:
                seen.add(eid)
                pool.append(g.entities[eid])
        all_ids = sorted(g.entities)
        while len(pool) < count:
            eid = all_ids[self._rng_index(prompt, len(pool), len(all_ids))]
            if eid in seen:
                # deterministic linear probe on collision
                idx = all_ids.index(eid)
                for step in range(1, len(all_ids)):
                    alt = all_ids[(idx + step) % len(all_ids)]
                    if alt not in seen:
                        eid = alt
                        break
                else:
                    break
            seen.add(eid)
            pool.append(g.entities[eid])
        return [
            {"entity_name": e.name, "category": e.category} for e in pool[:count]
        ]

    def complete(self, template: str, prompt: str, timeout: Optional[float] = None) -> str:
        if template == "recommend_entities":
            count = 5 + self._rng_index(prompt, 101, 3)
            ents = self._candidate_entities(prompt, count)
            for e in ents:
                e["reason"] = f"relevant to the query context ({e['category']})"
            return json.dumps({"entities": ents})
        if template == "retrieve_by_hypothesis":
            count = 15 + self._rng_index(prompt, 102, 6)
            ents = self._candidate_entities(prompt, count)
            for e in ents:
                e["description"] = f"{e['entity_name']} aligns with the hypothesis."
            return json.dumps({"entities": ents})
        if template == "analyse_path":
            return json.dumps(
                {
                    "interpretation": "Each hop links its subject and object "
                    "through the stated relationship.",
                    "hypothesis_chain": "[upstream intervention] -> [affects] -> "
                    "[intermediate process] -> [drives] -> [downstream process] -> "
                    "[manifests as] -> [phenotype]",
                }
            )
        if template == "analyze_improve_chain":
            return json.dumps(
                {
                    "chain_assessment": "The chain is logically consistent; the "
                    "relations fit the connected entity types.",
                    "biological_interpretation": "The first position plausibly "
                    "influences the intermediate process, which links to the "
                    "final outcome.",
                    "suggested_improvements": "Consider narrowing the middle "
                    "hypothesis to a more specific process.",
                }
            )
        digest = hashlib.sha256(f"{self.seed}:{prompt}".encode()).hexdigest()[:8]
        return json.dumps(
            {
                "text": f"Grounded response ({digest}) based on the provided context.",
                "suggestions": ["explore 1-hop neighbors", "refine the query"],
            }
        )


class HttpBackend:
    """Minimal chat-completion POST client with retries and timeout."""

    def __init__(self, base_url: str, api_key: str = "", model: str = "",
                 timeout: float = 60.0, retries: int = 2):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.timeout = timeout
        self.retries = retries
        self.id = f"http:{self.base_url}"

    def complete(self, template: str, prompt: str, timeout: Optional[float] = None) -> str:
        import httpx

        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last = None
        for attempt in range(self.retries + 1):
            try:
                resp = httpx.post(
                    self.base_url,
                    json=payload,
                    headers=headers,
                    timeout=timeout or self.timeout,
                )
                resp.raise_for_status()
                data = resp.json()
                return data["choices"][0]["message"]["content"]
            except httpx.TimeoutException as exc:
                raise GatewayTimeout(str(exc))
            except Exception as exc:  # retry transient backend failures
                last = exc
                if attempt < self.retries:
                    time.sleep(0.5 * 2**attempt)
        raise GatewayError(f"backend failed after {self.retries + 1} attempts: {last}")


# -- gateway -----------------------------------------------------------------------


@dataclass
class GatewayRequest:
    template: str
    bindings: dict = field(default_factory=dict)
    mode: str = "llm"  # llm | rag
    session_id: str = "default"
    timeout: Optional[float] = None


@dataclass
class GatewayResponse:
    raw: str
    payload: object
    backend_id: str
    latency: float
    mode: str
    suggestions: list = field(default_factory=list)


RAG_TEMPLATES = {"recommend_entities", "retrieve_by_hypothesis"}


class Gateway:
    """Session-aware front door to the configured backend."""

    def __init__(self, backend, graph: Optional[KnowledgeGraph] = None,
                 history_dir=None, diagnostics=None):
        self.backend = backend
        self.graph = graph
        self.history_dir = history_dir
        self.diagnostics = diagnostics
        self.histories: dict[str, list[dict]] = {}

    # -- history ------------------------------------------------------------
    def history(self, session_id: str) -> list[dict]:
        return self.histories.setdefault(session_id, [])

    def history_text(self, session_id: str) -> str:
        return "\n".join(
            f"{h['role']}: {h['content']}" for h in self.history(session_id)
        )

    def _append_history(self, session_id: str, role: str, content: str, mode: str):
        entry = {"role": role, "content": content, "mode": mode}
        self.history(session_id).append(entry)
        if self.history_dir is not None:
            import os

            os.makedirs(self.history_dir, exist_ok=True)
            path = f"{self.history_dir}/{session_id}.jsonl"
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry) + "\n")

    # -- chat -----------------------------------------------------------------
    def chat(self, request: GatewayRequest) -> GatewayResponse:
        if request.mode not in ("llm", "rag"):
            raise ContractViolation(f"bad mode {request.mode!r}")
        bindings = dict(DEFAULT_FORMAT_BINDINGS)
        bindings.update(request.bindings)
        bindings.setdefault("history", self.history_text(request.session_id))
        if request.mode == "rag":
            # rag answers come exclusively from local stores
            needed = set(template_placeholders(request.template)) & {
                "kg_context",
                "vector_context",
            }
            for key in needed:
                if key not in request.bindings:
                    raise ContractViolation(
                        f"rag mode requires locally assembled {key!r}"
                    )
        prompt = render(request.template, bindings)
        start = time.monotonic()
        try:
            raw = self.backend.complete(request.template, prompt, request.timeout)
        except GatewayError:
            self._append_history(
                request.session_id, "system", "backend error", request.mode
            )
            raise
        latency = time.monotonic() - start
        payload = parse_response(request.template, raw, self.diagnostics)
        suggestions = []
        try:
            value = extract_json(raw)
            if isinstance(value, dict) and isinstance(value.get("suggestions"), list):
                suggestions = list(value["suggestions"])
        except GatewayError:
            pass
        user_line = bindings.get("query", f"[{request.template}]")
        self._append_history(request.session_id, "user", str(user_line), request.mode)
        self._append_history(request.session_id, "assistant", raw, request.mode)
        return GatewayResponse(
            raw=raw,
            payload=payload,
            backend_id=getattr(self.backend, "id", "unknown"),
            latency=latency,
            mode=request.mode,
            suggestions=suggestions,
        )

    # -- protocol helpers --------------------------------------------------------
    def recommend_entities(self, query: str, session_id: str = "default",
                           hops: int = 1, cap: int = 100):
        if self.graph is None:
            raise ContractViolation("recommend_entities requires a loaded graph")
        kg_context, _ = assemble_kg_context(query, self.graph, hops=hops, cap=cap)
        vector_context = assemble_vector_context(query, self.graph)
        resp = self.chat(
            GatewayRequest(
                template="recommend_entities",
                bindings={
                    "kg_context": kg_context,
                    "vector_context": vector_context,
                    "query": query,
                },
                mode="rag",
                session_id=session_id,
            )
        )
        return resp.payload

    def retrieve_by_hypothesis(self, description: str, session_id: str = "default",
                               hops: int = 1, cap: int = 100):
        if self.graph is None:
            raise ContractViolation("retrieve_by_hypothesis requires a loaded graph")
        kg_context, _ = assemble_kg_context(description, self.graph, hops=hops, cap=cap)
        resp = self.chat(
            GatewayRequest(
                template="retrieve_by_hypothesis",
                bindings={"kg_context": kg_context, "query": description},
                mode="rag",
                session_id=session_id,
            )
        )
        return resp.payload

    def analyze_chain(self, chain_text: str, session_id: str = "default") -> str:
        self._append_history(session_id, "user", chain_text, "llm")
        resp = self.chat(
            GatewayRequest(
                template="analyze_improve_chain",
                bindings={"query": chain_text},
                mode="llm",
                session_id=session_id,
            )
        )
        return resp.raw
