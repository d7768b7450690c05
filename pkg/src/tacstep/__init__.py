"""Tactic suggestions for interactive theorem proving.

An HTTP server that turns a proof state and a prefix into ranked tactic
suggestions from a pluggable generator, a checker that classifies suggestions
as complete/valid/invalid against a proof environment, a budgeted best-first
proof-search engine, and evaluation/latency harnesses.
"""

from importlib.resources import files as _files
from pathlib import Path

from .checking import CheckedBatch, check_batch, check_one
from .generation import (
    BackendProtocolError,
    BackendUnavailableError,
    DeadlineError,
    Generator,
    MockGenerator,
    MockRuleTable,
    RemoteBackendConfig,
    RemoteGenerator,
    score_normalize,
)
from .proofenv import (
    CorpusTheorem,
    EnvironmentIntegrityError,
    EnvironmentUnavailableError,
    OutcomeKind,
    ProverOutcome,
    SimProver,
    SimProverTable,
    TableEdgeGenerator,
    apply_tactic,
    brute_force_prove,
    generate_corpus,
    replay_proof,
)
from .protocol import (
    DecodeError,
    Status,
    Suggestion,
    SuggestRequest,
    SuggestResponse,
    TacticState,
    encode_prompt,
    normalize_text,
    parse_completion,
)
from .search import (
    SearchBudget,
    SearchNode,
    SearchOutcome,
    SearchResult,
    SearchStats,
    best_first_search,
    run_attempts,
)

__version__ = "0.1.0"


def data_path(name: str) -> Path:
    """Absolute path of a packaged data file.

    Shipped files: mock_rules.json (rule table for the mock backend),
    example_table.json (simulated transitions for the worked example),
    bench_examples.json (the 17 latency-bench examples).
    """
    return Path(str(_files("tacstep") / "data" / name))

__all__ = [
    "BackendProtocolError",
    "BackendUnavailableError",
    "CheckedBatch",
    "CorpusTheorem",
    "DeadlineError",
    "DecodeError",
    "EnvironmentIntegrityError",
    "EnvironmentUnavailableError",
    "Generator",
    "MockGenerator",
    "MockRuleTable",
    "OutcomeKind",
    "ProverOutcome",
    "RemoteBackendConfig",
    "RemoteGenerator",
    "SearchBudget",
    "SearchNode",
    "SearchOutcome",
    "SearchResult",
    "SearchStats",
    "SimProver",
    "SimProverTable",
    "Status",
    "Suggestion",
    "SuggestRequest",
    "SuggestResponse",
    "TableEdgeGenerator",
    "TacticState",
    "apply_tactic",
    "best_first_search",
    "brute_force_prove",
    "check_batch",
    "check_one",
    "encode_prompt",
    "generate_corpus",
    "normalize_text",
    "parse_completion",
    "replay_proof",
    "run_attempts",
    "score_normalize",
]
