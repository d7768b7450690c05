"""Evaluation and latency-measurement harnesses.

``run_eval`` drives the search engine over a corpus and reports per-theorem
outcomes plus the aggregate pass rate; ``run_latency_bench`` times /suggest
round trips against a live server. Both emit versioned JSON reports that
``render_reports`` turns into deterministic plain-text tables.
"""

from __future__ import annotations

import json
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import ceil
from pathlib import Path
from typing import Sequence

import requests

from .generation import Generator
from .proofenv import (
    CorpusTheorem,
    EnvironmentUnavailableError,
    SimProver,
    SimProverTable,
    generate_corpus,
)
from .protocol import TacticState
from .search import SearchBudget, SearchOutcome, run_attempts

SCHEMA_VERSION = 1

INFRA_FAILURE = "infra-failure"


def format_pass_rate(solved: int, total: int) -> str:
    """Render a solve count the way the proof-search tables do: '27.9% (68/244)'."""
    if total < 1:
        raise ValueError("total must be >= 1")
    if solved < 0 or solved > total:
        raise ValueError("solved must be within [0, total]")
    return f"{round(100 * solved / total, 1):.1f}% ({solved}/{total})"


@dataclass(frozen=True)
class Corpus:
    """A transition table plus the theorems to evaluate over it."""

    corpus_id: str
    table: SimProverTable
    theorems: tuple[CorpusTheorem, ...]

    @classmethod
    def generate(cls, seed: int, count: int, max_depth: int = 4, branching: int = 3,
                 distractors_per_state: int = 4) -> "Corpus":
        table, theorems = generate_corpus(seed, count, max_depth, branching, distractors_per_state)
        corpus_id = f"sim-s{seed}-n{count}-d{max_depth}-b{branching}-x{distractors_per_state}"
        return cls(corpus_id, table, tuple(theorems))

    def to_obj(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "corpus",
            "corpus_id": self.corpus_id,
            "table": self.table.to_obj(),
            "theorems": [
                {
                    "id": t.id,
                    "root": t.root.text,
                    "known_proof": list(t.known_proof),
                    "distractor_count": t.distractor_count,
                }
                for t in self.theorems
            ],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "Corpus":
        _check_schema(obj, "corpus")
        table = SimProverTable.from_obj(obj["table"])
        theorems = tuple(
            CorpusTheorem(
                id=t["id"],
                root=TacticState(t["root"], 1),
                known_proof=tuple(t["known_proof"]),
                distractor_count=t.get("distractor_count", 0),
            )
            for t in obj["theorems"]
        )
        return cls(obj["corpus_id"], table, theorems)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_obj(), ensure_ascii=False, sort_keys=True, indent=1),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "Corpus":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"corpus {path}: not valid JSON at {exc.lineno}:{exc.colno}") from exc
        return cls.from_obj(obj)


@dataclass(frozen=True)
class TheoremResult:
    id: str
    outcome: str
    proof_len: int | None
    wall_time_s: float
    tactics_generated: int


@dataclass(frozen=True)
class EvalReport:
    corpus_id: str
    model_id: str
    budget: SearchBudget
    per_theorem: tuple[TheoremResult, ...]
    solved: int
    total: int
    infra_failures: int

    @property
    def pass_rate(self) -> float:
        return self.solved / self.total

    @property
    def search_label(self) -> str:
        return f"{self.budget.attempts}×{self.budget.expansion_size}"

    def to_obj(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "eval",
            "corpus_id": self.corpus_id,
            "model_id": self.model_id,
            "budget": {
                "attempts": self.budget.attempts,
                "expansion_size": self.budget.expansion_size,
                "max_iterations": self.budget.max_iterations,
                "timeout_s": self.budget.timeout_s,
            },
            "per_theorem": [
                {
                    "id": r.id,
                    "outcome": r.outcome,
                    "proof_len": r.proof_len,
                    "wall_time_s": r.wall_time_s,
                    "tactics_generated": r.tactics_generated,
                }
                for r in self.per_theorem
            ],
            "solved": self.solved,
            "total": self.total,
            "infra_failures": self.infra_failures,
            "pass_rate": self.pass_rate,
            "pass_rate_formatted": format_pass_rate(self.solved, self.total),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_obj(), ensure_ascii=False, sort_keys=True, indent=1),
            encoding="utf-8",
        )


def run_eval(
    corpus: Corpus,
    generator: Generator,
    budget: SearchBudget,
    workers: int = 1,
    salt_base: int = 0,
    max_depth: int | None = None,
) -> EvalReport:
    """Search every theorem of the corpus and aggregate the pass rate.

    Theorems run in parallel workers over a shared simulated prover (which is
    concurrent-safe). An environment failure on one theorem is recorded as an
    infra-failure: counted in the total, excluded from solved, flagged.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    env = SimProver(corpus.table)

    def one(theorem: CorpusTheorem) -> TheoremResult:
        t0 = time.monotonic()
        try:
            result = run_attempts(
                env, generator, theorem.root, budget, max_depth=max_depth, salt_base=salt_base
            )
        except EnvironmentUnavailableError:
            return TheoremResult(theorem.id, INFRA_FAILURE, None, time.monotonic() - t0, 0)
        proof_len = len(result.proof) if result.proof else None
        return TheoremResult(
            theorem.id,
            result.outcome.value,
            proof_len,
            result.stats.wall_time_s,
            result.stats.tactics_generated,
        )

    if workers == 1:
        rows = [one(t) for t in corpus.theorems]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, corpus.theorems))

    solved = sum(1 for r in rows if r.outcome == SearchOutcome.PROVED.value)
    infra = sum(1 for r in rows if r.outcome == INFRA_FAILURE)
    return EvalReport(
        corpus_id=corpus.corpus_id,
        model_id=generator.model_id,
        budget=budget,
        per_theorem=tuple(rows),
        solved=solved,
        total=len(rows),
        infra_failures=infra,
    )


@dataclass(frozen=True)
class LatencyReport:
    backend_id: str
    n: int
    per_example_s: tuple[float, ...]
    missing: int

    @property
    def mean_s(self) -> float:
        return statistics.fmean(self.per_example_s)

    @property
    def p50_s(self) -> float:
        return statistics.median(self.per_example_s)

    @property
    def p90_s(self) -> float:
        ordered = sorted(self.per_example_s)
        return ordered[max(0, ceil(0.9 * len(ordered)) - 1)]

    def to_obj(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "latency",
            "backend_id": self.backend_id,
            "n": self.n,
            "per_example_s": list(self.per_example_s),
            "missing": self.missing,
            "mean_s": self.mean_s,
            "p50_s": self.p50_s,
            "p90_s": self.p90_s,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_obj(), ensure_ascii=False, sort_keys=True, indent=1),
            encoding="utf-8",
        )


def load_bench_examples(path: str | Path) -> list[tuple[str, str]]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    _check_schema(obj, "bench-examples")
    examples = [(e["tactic_state"], e.get("prefix", "")) for e in obj["examples"]]
    if not examples:
        raise ValueError("examples file has no entries")
    return examples


def run_latency_bench(
    endpoint: str,
    examples: Sequence[tuple[str, str]],
    n: int,
    repeats: int = 3,
    request_timeout_s: float = 30.0,
) -> LatencyReport:
    """Time /suggest round trips: median of ``repeats`` per example.

    Strictly sequential (one in-flight request) so the measurement does not
    queue behind itself. One warmup round trip is excluded. A request that
    times out is a missing sample; examples with no surviving sample are
    dropped from the statistics and counted in ``missing``.
    """
    if n < 1 or repeats < 1:
        raise ValueError("n and repeats must be >= 1")
    if not examples:
        raise ValueError("need at least one example")
    session = requests.Session()
    url = endpoint.rstrip("/") + "/suggest"

    try:
        health = session.get(endpoint.rstrip("/") + "/health", timeout=request_timeout_s).json()
        backend_id = f"{health.get('backend', '?')}:{health.get('model_id', '?')}"
    except requests.RequestException as exc:
        raise ConnectionError(f"server unreachable at {endpoint}: {exc}") from exc

    def once(state_text: str, prefix: str) -> float | None:
        body = {"tactic_state": state_text, "prefix": prefix, "n": n}
        t0 = time.monotonic()
        try:
            resp = session.post(url, json=body, timeout=request_timeout_s)
        except requests.Timeout:
            return None
        resp.raise_for_status()
        return time.monotonic() - t0

    once(*examples[0])  # warmup, excluded

    per_example: list[float] = []
    missing = 0
    for state_text, prefix in examples:
        samples = [s for s in (once(state_text, prefix) for _ in range(repeats)) if s is not None]
        if not samples:
            missing += 1
            continue
        per_example.append(statistics.median(samples))
    if not per_example:
        raise ConnectionError("every request timed out; no samples collected")
    return LatencyReport(backend_id=backend_id, n=n, per_example_s=tuple(per_example), missing=missing)


def _check_schema(obj: dict, kind: str) -> None:
    if not isinstance(obj, dict):
        raise ValueError(f"expected a JSON object for {kind}")
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {version!r}; this build reads {SCHEMA_VERSION}")
    if obj.get("kind") != kind:
        raise ValueError(f"expected kind={kind!r}, got {obj.get('kind')!r}")


def _render_eval(obj: dict) -> str:
    if not obj["per_theorem"]:
        raise ValueError("eval report has no per-theorem rows")
    budget = obj["budget"]
    search = f"{budget['attempts']}×{budget['expansion_size']}"
    header = f"{'Model':<22} {'Search':<8} {'Split':<34} {'Pass rate':<18}"
    rule = "-" * len(header)
    row = (
        f"{obj['model_id']:<22} {search:<8} {obj['corpus_id']:<34} "
        f"{obj['pass_rate_formatted']:<18}"
    )
    lines = [header, rule, row]
    if obj.get("infra_failures"):
        lines.append(f"infra-failures: {obj['infra_failures']} (counted in total, not in solved)")
    return "\n".join(lines)


def _render_latency(obj: dict) -> str:
    header = f"{'Backend':<28} {'N':>3} {'Mean (s)':>10} {'P50 (s)':>10} {'P90 (s)':>10} {'Examples':>9}"
    rule = "-" * len(header)
    row = (
        f"{obj['backend_id']:<28} {obj['n']:>3} {obj['mean_s']:>10.4f} "
        f"{obj['p50_s']:>10.4f} {obj['p90_s']:>10.4f} {len(obj['per_example_s']):>9}"
    )
    lines = [header, rule, row]
    if obj.get("missing"):
        lines.append(f"missing samples: {obj['missing']}")
    return "\n".join(lines)


def render_reports(paths: Sequence[str | Path]) -> str:
    """Render saved reports as plain-text tables; identical inputs give
    identical bytes."""
    blocks = []
    for path in paths:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(obj, dict) or obj.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(
                f"{path}: unsupported schema_version {obj.get('schema_version')!r}"
                if isinstance(obj, dict)
                else f"{path}: expected a JSON object"
            )
        kind = obj.get("kind")
        if kind == "eval":
            blocks.append(_render_eval(obj))
        elif kind == "latency":
            blocks.append(_render_latency(obj))
        else:
            raise ValueError(f"{path}: unknown report kind {kind!r}")
    return "\n\n".join(blocks) + "\n"
