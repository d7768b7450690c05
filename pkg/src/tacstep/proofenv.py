"""Proof environments: apply a tactic to a state and observe the outcome.

Ships a table-driven simulated prover (the test oracle standing in for a real
proof-assistant kernel), a seeded generator of solvable proof corpora with
distractor edges, and a breadth-first brute-force prover used as the
independent oracle for search results.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

from .protocol import TacticState, normalize_text


class OutcomeKind(str, Enum):
    PROGRESS = "progress"
    COMPLETED = "completed"
    ERROR = "error"


class EnvironmentIntegrityError(Exception):
    """A state unknown to the environment was handed in. Caller bug, not a tactic error."""


class EnvironmentUnavailableError(Exception):
    """The environment itself failed (dead subprocess, lost connection)."""


@dataclass(frozen=True)
class ProverOutcome:
    """Result of applying one tactic: progress to a new state, completion, or error.

    Exactly one kind holds: progress carries a next state with >= 1 goal,
    completed means zero goals remain, error carries a non-empty message.
    """

    kind: OutcomeKind
    next_state: TacticState | None = None
    goal_count: int = 0
    message: str = ""

    def __post_init__(self):
        if self.kind is OutcomeKind.PROGRESS:
            if self.next_state is None or self.goal_count < 1:
                raise ValueError("progress requires a next state and goal_count >= 1")
        elif self.kind is OutcomeKind.COMPLETED:
            if self.next_state is not None or self.goal_count != 0:
                raise ValueError("completed requires goal_count == 0 and no next state")
        elif self.kind is OutcomeKind.ERROR:
            if self.next_state is not None or not self.message:
                raise ValueError("error requires a message and no next state")

    @classmethod
    def progress(cls, next_state: TacticState, goal_count: int = 1) -> "ProverOutcome":
        return cls(OutcomeKind.PROGRESS, next_state=next_state, goal_count=goal_count)

    @classmethod
    def completed(cls) -> "ProverOutcome":
        return cls(OutcomeKind.COMPLETED)

    @classmethod
    def error(cls, message: str) -> "ProverOutcome":
        return cls(OutcomeKind.ERROR, message=message)


@dataclass
class SimProverTable:
    """Deterministic transition table: (state, tactic) -> outcome.

    States are identified by whitespace-normalized text. ``entries`` keeps the
    original insertion order so that serialization is byte-reproducible.
    """

    root: TacticState
    entries: list[tuple[str, str, ProverOutcome]] = field(default_factory=list)

    def __post_init__(self):
        self._by_key: dict[tuple[str, str], ProverOutcome] = {}
        self._outgoing: dict[str, list[str]] = {}
        self._state_keys: set[str] = {self.root.key}
        for state_text, tactic_text, outcome in list(self.entries):
            self._index(state_text, tactic_text, outcome)

    def _index(self, state_text: str, tactic_text: str, outcome: ProverOutcome) -> None:
        state_key = normalize_text(state_text)
        self._state_keys.add(state_key)
        if outcome.kind is OutcomeKind.PROGRESS:
            self._state_keys.add(outcome.next_state.key)
        self._by_key[(state_key, normalize_text(tactic_text))] = outcome
        self._outgoing.setdefault(state_key, []).append(tactic_text)

    def add(self, state_text: str, tactic_text: str, outcome: ProverOutcome) -> None:
        self.entries.append((state_text, tactic_text, outcome))
        self._index(state_text, tactic_text, outcome)

    @property
    def state_keys(self) -> set[str]:
        return self._state_keys

    def has_state(self, state: TacticState) -> bool:
        return state.key in self._state_keys

    def lookup(self, state: TacticState, tactic: str) -> ProverOutcome | None:
        return self._by_key.get((state.key, normalize_text(tactic)))

    def outgoing(self, state: TacticState) -> list[str]:
        """Tactic texts with an explicit edge out of this state, in table order."""
        return list(self._outgoing.get(state.key, ()))

    def to_obj(self) -> dict:
        transitions = []
        for state_text, tactic_text, outcome in self.entries:
            entry: dict = {"state": state_text, "tactic": tactic_text, "kind": outcome.kind.value}
            if outcome.kind is OutcomeKind.PROGRESS:
                entry["next_state"] = outcome.next_state.text
                entry["goal_count"] = outcome.goal_count
            elif outcome.kind is OutcomeKind.COMPLETED:
                entry["goal_count"] = 0
            else:
                entry["message"] = outcome.message
            transitions.append(entry)
        return {
            "states": sorted(self._state_keys),
            "root": self.root.text,
            "transitions": transitions,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "SimProverTable":
        table = cls(root=TacticState(obj["root"]))
        for i, entry in enumerate(obj.get("transitions", [])):
            kind = OutcomeKind(entry["kind"])
            if kind is OutcomeKind.PROGRESS:
                outcome = ProverOutcome.progress(
                    TacticState(entry["next_state"], entry.get("goal_count", 1)),
                    entry.get("goal_count", 1),
                )
            elif kind is OutcomeKind.COMPLETED:
                outcome = ProverOutcome.completed()
            else:
                outcome = ProverOutcome.error(entry["message"])
            table.add(entry["state"], entry["tactic"], outcome)
        for state_text in obj.get("states", []):
            table._state_keys.add(normalize_text(state_text))
        return table

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_obj(), ensure_ascii=False, sort_keys=True, indent=1),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "SimProverTable":
        return cls.from_obj(json.loads(Path(path).read_text(encoding="utf-8")))


class SimProver:
    """Prover over a transition table. Safe to share across threads.

    Tactic pairs absent from the table are tactic errors; states absent from
    the table are an integrity violation and raise instead.
    """

    concurrent_safe = True

    def __init__(self, table: SimProverTable):
        self.table = table

    def apply(self, state: TacticState, tactic: str) -> ProverOutcome:
        if not self.table.has_state(state):
            raise EnvironmentIntegrityError(f"state not in table: {state.text[:80]!r}")
        outcome = self.table.lookup(state, tactic)
        if outcome is None:
            return ProverOutcome.error("unknown tactic")
        return outcome


def apply_tactic(env, state: TacticState, tactic: str) -> ProverOutcome:
    """Apply one tactic through any environment handle."""
    return env.apply(state, tactic)


@dataclass(frozen=True)
class CorpusTheorem:
    """One provable theorem of a generated corpus, with its ground-truth proof."""

    id: str
    root: TacticState
    known_proof: tuple[str, ...]
    distractor_count: int


_TACTIC_STEMS = (
    "intro", "apply", "exact", "simp", "rw", "cases", "constructor",
    "rcases", "have", "unfold", "refine", "omega",
)

_ERROR_MESSAGES = (
    "unknown identifier",
    "type mismatch",
    "motive is not type correct",
    "simp made no progress",
    "tactic failed, no applicable rule",
)


def _fresh_tactic(rng: random.Random, used: set[str]) -> str:
    while True:
        stem = rng.choice(_TACTIC_STEMS)
        tactic = f"{stem} h{rng.randrange(1000)}"
        if normalize_text(tactic) not in used:
            used.add(normalize_text(tactic))
            return tactic


def _state_text(theorem_idx: int, label: str, hyp_count: int) -> str:
    lines = [f"h{k} : H{theorem_idx}_{k}" for k in range(hyp_count)]
    lines.append(f"⊢ G{theorem_idx} {label}")
    return "\n".join(lines)


def generate_corpus(
    seed: int,
    count: int,
    max_depth: int = 4,
    branching: int = 3,
    distractors_per_state: int = 4,
) -> tuple[SimProverTable, list[CorpusTheorem]]:
    """Generate a solvable proof-DAG corpus, deterministically from the seed.

    Every theorem carries one ground-truth proof of length <= max_depth.
    Chain states get up to ``branching`` progress edges (the true step plus
    dead-end decoys) and exactly ``distractors_per_state`` error edges, so a
    searcher has to discriminate via checking rather than pattern-match the
    single outgoing edge. Edges only ever point at fresh states: no cycles.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if branching < 1:
        raise ValueError("branching must be >= 1")
    if distractors_per_state < 0:
        raise ValueError("distractors_per_state must be >= 0")

    rng = random.Random(seed)
    table: SimProverTable | None = None
    theorems: list[CorpusTheorem] = []

    for i in range(count):
        proof_len = rng.randint(1, max_depth)
        chain = [TacticState(_state_text(i, f"step{j}", hyp_count=j), goal_count=1)
                 for j in range(proof_len)]
        if table is None:
            table = SimProverTable(root=chain[0])
        proof: list[str] = []
        decoy_serial = 0
        distractor_total = 0

        for j, state in enumerate(chain):
            used: set[str] = set()
            true_tactic = _fresh_tactic(rng, used)
            proof.append(true_tactic)
            if j + 1 < proof_len:
                nxt = chain[j + 1]
                table.add(state.text, true_tactic, ProverOutcome.progress(nxt, nxt.goal_count))
            else:
                table.add(state.text, true_tactic, ProverOutcome.completed())

            side_states = []
            for _ in range(rng.randint(0, branching - 1)):
                decoy = TacticState(
                    _state_text(i, f"decoy{j}_{decoy_serial}", hyp_count=j + 1), goal_count=1
                )
                decoy_serial += 1
                table.add(state.text, _fresh_tactic(rng, used), ProverOutcome.progress(decoy, 1))
                side_states.append(decoy)

            for target in [state] + side_states:
                target_used = used if target is state else set()
                for _ in range(distractors_per_state):
                    message = rng.choice(_ERROR_MESSAGES)
                    table.add(target.text, _fresh_tactic(rng, target_used), ProverOutcome.error(message))
                    distractor_total += 1

        theorems.append(
            CorpusTheorem(
                id=f"thm_{i:03d}",
                root=chain[0],
                known_proof=tuple(proof),
                distractor_count=distractor_total,
            )
        )

    assert table is not None
    return table, theorems


def brute_force_prove(
    table: SimProverTable, root: TacticState, depth_limit: int
) -> list[str] | None:
    """Breadth-first exhaustive enumeration over all table edges.

    Returns a shortest proof within the depth limit, or None. Independent of
    the best-first engine by construction: no generator, no priorities, no
    pruning beyond revisit suppression (safe under BFS level order).
    """
    if depth_limit < 1:
        raise ValueError("depth_limit must be >= 1")
    queue: deque[tuple[TacticState, list[str]]] = deque([(root, [])])
    seen = {root.key}
    while queue:
        state, path = queue.popleft()
        if len(path) >= depth_limit:
            continue
        for tactic in table.outgoing(state):
            outcome = table.lookup(state, tactic)
            if outcome.kind is OutcomeKind.COMPLETED:
                return path + [tactic]
            if outcome.kind is OutcomeKind.PROGRESS:
                key = outcome.next_state.key
                if key not in seen:
                    seen.add(key)
                    queue.append((outcome.next_state, path + [tactic]))
    return None


class TableEdgeGenerator:
    """Generator that emits every tactic with an outgoing edge from the state.

    Stands in for an unrealistically strong model in oracle-equivalence runs:
    with it, whether search solves a theorem depends only on the search and
    checking machinery, which is exactly what those runs measure. Tactics are
    ranked lexicographically with scores 0, -1, -2, ...
    """

    model_id = "table-edges"

    def __init__(self, table: SimProverTable):
        self._table = table

    def generate(self, state: TacticState, prefix: str, n: int) -> list[tuple[str, float]]:
        if n < 1:
            raise ValueError("n must be >= 1")
        tactics = sorted(normalize_text(t) for t in self._table.outgoing(state))
        return [(t, -float(i)) for i, t in enumerate(tactics) if t.startswith(prefix)][:n]


def replay_proof(env, root: TacticState, proof: Iterable[str]) -> bool:
    """Replay a proof through an environment; True iff it ends in completed
    with no intermediate error."""
    state = root
    steps = list(proof)
    for i, tactic in enumerate(steps):
        outcome = env.apply(state, tactic)
        if outcome.kind is OutcomeKind.COMPLETED:
            return i == len(steps) - 1
        if outcome.kind is OutcomeKind.ERROR:
            return False
        state = outcome.next_state
    return False
