"""Wire-level data model shared by the client, the server, and the generators.

Everything here is immutable after construction and safe to pass between
threads. The canonical byte form is UTF-8 JSON with sorted keys, so equal
values always serialize to equal bytes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

GOAL_MARKER = "[GOAL]"
PROOFSTEP_MARKER = "[PROOFSTEP]"
END_OF_TEXT = "<|endoftext|>"

_WS_RUN = re.compile(r"[ \t]+")


def normalize_text(text: str) -> str:
    """Collapse runs of spaces/tabs and trim the ends.

    Used both for deduplicating cosmetically-distinct tactics and as the
    identity key for proof states. Newlines are preserved, so multi-line
    states with different hypotheses stay distinct.
    """
    return _WS_RUN.sub(" ", text).strip()


class Status(str, Enum):
    """Check status of a suggestion. Exactly one applies."""

    COMPLETE = "complete"
    VALID = "valid"
    INVALID = "invalid"
    UNCHECKED = "unchecked"

    @property
    def rank(self) -> int:
        """Display rank: complete sorts first, unchecked last."""
        return _STATUS_RANK[self]


_STATUS_RANK = {
    Status.COMPLETE: 0,
    Status.VALID: 1,
    Status.INVALID: 2,
    Status.UNCHECKED: 3,
}


class DecodeError(ValueError):
    """Inbound bytes do not decode to a well-formed protocol value.

    ``field`` names the offending field so servers can report it.
    """

    def __init__(self, field_name: str, reason: str):
        super().__init__(f"{field_name}: {reason}")
        self.field = field_name


@dataclass(frozen=True)
class TacticState:
    """A pretty-printed proof state: goals left to prove plus hypotheses.

    ``goal_count`` is optional; provers attach it to the states they produce.
    A count of zero means the proof is finished and only ever comes from a
    prover.
    """

    text: str
    goal_count: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "text", self.text.strip())
        if self.goal_count is not None and self.goal_count < 0:
            raise ValueError("goal_count must be >= 0")

    @property
    def key(self) -> str:
        """Whitespace-normalized identity key."""
        return normalize_text(self.text)


@dataclass(frozen=True)
class Suggestion:
    """A candidate tactic with its generator score and check status."""

    tactic: str
    score: float
    status: Status = Status.UNCHECKED

    def __post_init__(self):
        if not self.tactic.strip():
            raise ValueError("suggestion tactic must be non-empty")
        if not isinstance(self.status, Status):
            object.__setattr__(self, "status", Status(self.status))


@dataclass(frozen=True)
class SuggestRequest:
    """A request for ``n`` tactic suggestions constrained to start with ``prefix``."""

    tactic_state: TacticState
    prefix: str = ""
    n: int = 5

    def __post_init__(self):
        if not self.tactic_state.text:
            raise ValueError("tactic_state.text must be non-empty")
        if self.n < 1:
            raise ValueError("n must be >= 1")


@dataclass(frozen=True)
class SuggestResponse:
    """Ordered suggestions plus the serving model id and server-side latency."""

    suggestions: tuple[Suggestion, ...] = field(default_factory=tuple)
    model_id: str = ""
    latency_ms: int = 0

    def __post_init__(self):
        object.__setattr__(self, "suggestions", tuple(self.suggestions))
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be >= 0")


def encode_prompt(state: TacticState, prefix: str) -> str:
    """Build the generator prompt for a proof state and a tactic prefix.

    The end-of-text sentinel terminates training targets, not prompts, so it
    is never appended here.
    """
    if not state.text:
        raise ValueError("cannot encode a prompt for an empty tactic state")
    return f"{GOAL_MARKER}{state.text}{PROOFSTEP_MARKER}{prefix}"


def parse_completion(prefix: str, completion: str) -> str:
    """Assemble a full tactic from a model continuation of the prompt.

    The continuation is cut at the first end-of-text sentinel or newline,
    whichever comes first, and right-trimmed. Only the continuation part is
    trimmed: the result always starts with ``prefix`` verbatim. A result that
    is empty after trimming signals the caller to drop the candidate.
    """
    cut = len(completion)
    for stop in (END_OF_TEXT, "\n"):
        idx = completion.find(stop)
        if idx != -1:
            cut = min(cut, idx)
    return prefix + completion[:cut].rstrip()


def _canonical_bytes(obj: Any) -> bytes:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _parse_json(data: bytes | str) -> dict:
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DecodeError("body", f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise DecodeError("body", "expected a JSON object")
    return obj


def _require_str(obj: dict, field_name: str) -> str:
    if field_name not in obj:
        raise DecodeError(field_name, "missing required field")
    value = obj[field_name]
    if not isinstance(value, str):
        raise DecodeError(field_name, f"expected a string, got {type(value).__name__}")
    return value


def _require_int(obj: dict, field_name: str, minimum: int) -> int:
    if field_name not in obj:
        raise DecodeError(field_name, "missing required field")
    value = obj[field_name]
    if isinstance(value, bool) or not isinstance(value, int):
        raise DecodeError(field_name, f"expected an integer, got {type(value).__name__}")
    if value < minimum:
        raise DecodeError(field_name, f"must be >= {minimum}")
    return value


def request_to_dict(req: SuggestRequest) -> dict:
    body: dict[str, Any] = {
        "tactic_state": req.tactic_state.text,
        "prefix": req.prefix,
        "n": req.n,
    }
    if req.tactic_state.goal_count is not None:
        body["goal_count"] = req.tactic_state.goal_count
    return body


def request_from_dict(obj: dict, default_n: int = 5) -> SuggestRequest:
    text = _require_str(obj, "tactic_state")
    if not text.strip():
        raise DecodeError("tactic_state", "must be non-empty")
    prefix = _require_str(obj, "prefix")
    n = _require_int(obj, "n", 1) if "n" in obj else default_n
    goal_count = None
    if obj.get("goal_count") is not None:
        goal_count = _require_int(obj, "goal_count", 0)
    return SuggestRequest(TacticState(text, goal_count), prefix, n)


def serialize_request(req: SuggestRequest) -> bytes:
    return _canonical_bytes(request_to_dict(req))


def deserialize_request(data: bytes | str, default_n: int = 5) -> SuggestRequest:
    return request_from_dict(_parse_json(data), default_n)


def response_to_dict(resp: SuggestResponse) -> dict:
    return {
        "suggestions": [
            {"tactic": s.tactic, "score": s.score, "status": s.status.value}
            for s in resp.suggestions
        ],
        "model_id": resp.model_id,
        "latency_ms": resp.latency_ms,
    }


def response_from_dict(obj: dict) -> SuggestResponse:
    if "suggestions" not in obj:
        raise DecodeError("suggestions", "missing required field")
    raw = obj["suggestions"]
    if not isinstance(raw, list):
        raise DecodeError("suggestions", "expected an array")
    suggestions = []
    for i, entry in enumerate(raw):
        where = f"suggestions[{i}]"
        if not isinstance(entry, dict):
            raise DecodeError(where, "expected an object")
        tactic = _require_str(entry, "tactic")
        if not tactic.strip():
            raise DecodeError(f"{where}.tactic", "must be non-empty")
        score = entry.get("score")
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            raise DecodeError(f"{where}.score", "expected a number")
        status_text = _require_str(entry, "status")
        try:
            status = Status(status_text)
        except ValueError:
            raise DecodeError(f"{where}.status", f"unknown status {status_text!r}") from None
        suggestions.append(Suggestion(tactic, float(score), status))
    model_id = _require_str(obj, "model_id")
    latency_ms = _require_int(obj, "latency_ms", 0)
    return SuggestResponse(tuple(suggestions), model_id, latency_ms)


def serialize_response(resp: SuggestResponse) -> bytes:
    return _canonical_bytes(response_to_dict(resp))


def deserialize_response(data: bytes | str) -> SuggestResponse:
    return response_from_dict(_parse_json(data))
