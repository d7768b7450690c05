"""Budgeted best-first proof search.

The frontier is a max-priority queue over cumulative candidate score. Each
popped node is expanded by asking the generator for ``expansion_size``
candidates (empty prefix), classifying them, returning immediately on a
completing one, and pushing children for the valid ones. A proof attempt ends
on success, empty frontier, the iteration cap, or the wall clock. Later
attempts re-run with a different tie-break salt so a deterministic generator
does not replay the first attempt verbatim.
"""

from __future__ import annotations

import heapq
import time
import zlib
from dataclasses import dataclass
from enum import Enum

from .checking import check_one
from .generation import score_normalize
from .protocol import Status, TacticState

DEFAULT_MAX_DEPTH = 50


@dataclass(frozen=True)
class SearchBudget:
    """Search budget: at most attempts x expansion_size x max_iterations
    generated tactics, subject to a per-attempt wall-clock timeout."""

    attempts: int = 1
    expansion_size: int = 32
    max_iterations: int = 100
    timeout_s: float = 600.0

    def __post_init__(self):
        if self.attempts < 1:
            raise ValueError("attempts must be >= 1")
        if self.expansion_size < 1:
            raise ValueError("expansion_size must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")

    @property
    def max_tactics(self) -> int:
        return self.attempts * self.expansion_size * self.max_iterations


@dataclass(frozen=True)
class SearchNode:
    """Frontier element: a state, the tactic path that reached it, and the
    cumulative score of that path (root priority is 0)."""

    state: TacticState
    path: tuple[str, ...] = ()
    priority: float = 0.0

    @property
    def depth(self) -> int:
        return len(self.path)


class SearchOutcome(str, Enum):
    PROVED = "proved"
    EXHAUSTED = "exhausted"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class SearchStats:
    iterations: int
    nodes_expanded: int
    tactics_generated: int
    wall_time_s: float
    attempt_index: int | None


@dataclass(frozen=True)
class SearchResult:
    outcome: SearchOutcome
    proof: tuple[str, ...] | None
    stats: SearchStats

    @property
    def proved(self) -> bool:
        return self.outcome is SearchOutcome.PROVED


def _tie_key(salt: int, counter: int) -> int:
    # salt 0 keeps plain FIFO among equal priorities; other salts permute it
    if salt == 0:
        return counter
    return zlib.crc32(f"{salt}:{counter}".encode("utf-8"))


class _AttemptOutcome(Enum):
    PROVED = 0
    EXHAUSTED = 1
    TIMEOUT = 2


def _run_attempt(env, generator, root, budget, salt, max_depth, trace):
    frontier = []
    counter = 0
    heapq.heappush(frontier, (0.0, _tie_key(salt, counter), counter, SearchNode(root)))
    best_seen = {root.key: 0.0}
    iterations = 0
    expanded = 0
    generated = 0
    deadline = time.monotonic() + budget.timeout_s

    while frontier and iterations < budget.max_iterations:
        if time.monotonic() >= deadline:
            return _AttemptOutcome.TIMEOUT, None, iterations, expanded, generated
        neg_priority, _, _, node = heapq.heappop(frontier)
        if best_seen.get(node.state.key, node.priority) > node.priority:
            continue  # superseded by a better path pushed after this entry
        if trace is not None:
            trace.append({"salt": salt, "priority": -neg_priority, "depth": node.depth})
        iterations += 1

        candidates = score_normalize(
            generator.generate(node.state, "", budget.expansion_size)
        )[: budget.expansion_size]
        generated += len(candidates)
        expanded += 1

        for tactic, score in candidates:
            status, next_state = check_one(env, node.state, tactic)
            if status is Status.COMPLETE:
                return (
                    _AttemptOutcome.PROVED,
                    node.path + (tactic,),
                    iterations,
                    expanded,
                    generated,
                )
            if status is not Status.VALID:
                continue
            if max_depth is not None and node.depth + 1 > max_depth:
                continue
            child_priority = node.priority + score
            key = next_state.key
            if key in best_seen and best_seen[key] >= child_priority:
                continue
            best_seen[key] = child_priority
            counter += 1
            child = SearchNode(next_state, node.path + (tactic,), child_priority)
            heapq.heappush(frontier, (-child_priority, _tie_key(salt, counter), counter, child))

        if time.monotonic() >= deadline:
            return _AttemptOutcome.TIMEOUT, None, iterations, expanded, generated

    return _AttemptOutcome.EXHAUSTED, None, iterations, expanded, generated


def best_first_search(
    env,
    generator,
    root: TacticState,
    budget: SearchBudget,
    *,
    max_depth: int | None = DEFAULT_MAX_DEPTH,
    salt_base: int = 0,
    trace: list | None = None,
) -> SearchResult:
    """Run up to ``budget.attempts`` sequential best-first attempts from root.

    The first attempt that proves wins and its index is recorded; statistics
    aggregate over all attempts that ran. With a deterministic generator the
    result is reproducible; attempt k differs from attempt k-1 only through
    the frontier tie-break salt (``salt_base`` + attempt index).

    ``max_depth`` is a safety valve against unbounded paths, can be disabled
    with None. ``trace``, when given, receives one record per popped node.
    Environment failures propagate as exceptions; they are never folded into
    an "exhausted" result.
    """
    if root.goal_count == 0:
        raise ValueError("root state has no goals left to prove")
    start = time.monotonic()
    iterations = expanded = generated = 0
    any_timeout = False

    for attempt in range(budget.attempts):
        kind, proof, it, ex, gen = _run_attempt(
            env, generator, root, budget, salt_base + attempt, max_depth, trace
        )
        iterations += it
        expanded += ex
        generated += gen
        if kind is _AttemptOutcome.PROVED:
            stats = SearchStats(iterations, expanded, generated, time.monotonic() - start, attempt)
            return SearchResult(SearchOutcome.PROVED, tuple(proof), stats)
        if kind is _AttemptOutcome.TIMEOUT:
            any_timeout = True

    stats = SearchStats(iterations, expanded, generated, time.monotonic() - start, None)
    outcome = SearchOutcome.TIMEOUT if any_timeout else SearchOutcome.EXHAUSTED
    return SearchResult(outcome, None, stats)


def run_attempts(
    env,
    generator,
    root: TacticState,
    budget: SearchBudget,
    *,
    max_depth: int | None = DEFAULT_MAX_DEPTH,
    salt_base: int = 0,
    trace: list | None = None,
) -> SearchResult:
    """Union over sequential attempts: success on any attempt is success.

    Alias of :func:`best_first_search`, which already runs the attempt loop;
    kept as the name harness-level call sites use.
    """
    return best_first_search(
        env, generator, root, budget, max_depth=max_depth, salt_base=salt_base, trace=trace
    )
