"""Classify candidate tactics against a proof environment.

A candidate is complete if it closes every goal, valid if it makes progress
without error, invalid otherwise. Environment failures are infrastructure
problems and propagate; they are never reported as "invalid".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .generation import Candidate, score_normalize
from .proofenv import OutcomeKind
from .protocol import Status, Suggestion, TacticState

_STATUS_BY_KIND = {
    OutcomeKind.COMPLETED: Status.COMPLETE,
    OutcomeKind.PROGRESS: Status.VALID,
    OutcomeKind.ERROR: Status.INVALID,
}


def check_one(env, state: TacticState, tactic: str) -> tuple[Status, TacticState | None]:
    """Classify a single tactic; returns the status and, when valid, the new state."""
    if not tactic.strip():
        raise ValueError("tactic must be non-empty")
    outcome = env.apply(state, tactic)
    return _STATUS_BY_KIND[outcome.kind], outcome.next_state


@dataclass(frozen=True)
class CheckedBatch:
    """Deduplicated, classified suggestions in display order.

    Order is status rank (complete, valid, invalid), then score descending,
    then tactic text. No two entries share a normalized tactic.
    """

    state: TacticState
    suggestions: tuple[Suggestion, ...]


def check_batch(env, state: TacticState, candidates: Sequence[Candidate]) -> CheckedBatch:
    """Deduplicate candidates, classify each survivor, and order for display."""
    checked = [
        Suggestion(tactic, score, check_one(env, state, tactic)[0])
        for tactic, score in score_normalize(candidates)
    ]
    checked.sort(key=lambda s: (s.status.rank, -s.score, s.tactic))
    return CheckedBatch(state=state, suggestions=tuple(checked))
