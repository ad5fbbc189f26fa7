"""Knowledge-graph hypothesis-chain toolkit."""
from .errors import (
    AmbiguousNameError,
    ContractViolation,
    FormatError,
    GatewayError,
    GatewayTimeout,
    KGChainsError,
    UnknownEntityError,
)
from .kg import Entity, KnowledgeGraph, Triplet, load_graph
from .predictions import (
    Hop,
    InterpretativePath,
    PredictionFilter,
    PredictionRecord,
    PredictionStore,
    RankedView,
)
from .chains import (
    ChainMatchReport,
    EntityMatch,
    HypothesisChain,
    HypothesisNode,
    create_chain,
    match_chain,
    upset_slice,
)
from .metrics import MetricReport, RankedList, evaluate
from .layout import compute_treemap, lasso_select, load_embedding
from .gateway import Gateway, GatewayRequest, HttpBackend, MockBackend

__version__ = "0.1.0"

__all__ = [
    "AmbiguousNameError",
    "ChainMatchReport",
    "ContractViolation",
    "Entity",
    "EntityMatch",
    "FormatError",
    "Gateway",
    "GatewayError",
    "GatewayRequest",
    "GatewayTimeout",
    "Hop",
    "HttpBackend",
    "HypothesisChain",
    "HypothesisNode",
    "InterpretativePath",
    "KGChainsError",
    "KnowledgeGraph",
    "MetricReport",
    "MockBackend",
    "PredictionFilter",
    "PredictionRecord",
    "PredictionStore",
    "RankedList",
    "RankedView",
    "Triplet",
    "UnknownEntityError",
    "compute_treemap",
    "create_chain",
    "evaluate",
    "lasso_select",
    "load_embedding",
    "load_graph",
    "match_chain",
    "upset_slice",
]
