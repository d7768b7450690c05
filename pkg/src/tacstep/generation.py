"""Tactic generators: a deterministic rule-table mock and a remote API client.

A generator maps (state, prefix, n) to at most n scored candidates, best
first, every candidate starting with the prefix. Scores only need to give the
search a total order; the remote backend reports cumulative log-probabilities,
mocks use arbitrary descending reals.
"""

from __future__ import annotations

import fnmatch
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence, runtime_checkable

import requests

from .protocol import TacticState, encode_prompt, normalize_text, parse_completion

Candidate = tuple[str, float]

_BACKOFF_BASE_S = 0.25


class GeneratorError(Exception):
    """Base class for generator failures."""


class BackendUnavailableError(GeneratorError):
    """The remote backend could not be reached, even after retries."""


class BackendProtocolError(GeneratorError):
    """The remote backend answered with a payload we cannot interpret."""


class DeadlineError(GeneratorError):
    """The remote backend did not answer within the request timeout."""


@runtime_checkable
class Generator(Protocol):
    """Behavioral interface shared by all tactic generators."""

    model_id: str

    def generate(self, state: TacticState, prefix: str, n: int) -> list[Candidate]:
        """Return at most ``n`` candidates starting with ``prefix``, best first."""
        ...


def score_normalize(candidates: Sequence[Candidate]) -> list[Candidate]:
    """Merge duplicate tactics keeping the best score, then impose a total order.

    Duplicates are detected on whitespace-normalized text; candidates that
    normalize to the empty string are dropped. Ordering is score descending
    with the tactic text as a lexicographic tie-break, so output is
    reproducible regardless of input order.
    """
    best: dict[str, Candidate] = {}
    for tactic, score in candidates:
        key = normalize_text(tactic)
        if not key:
            continue
        held = best.get(key)
        if held is None or score > held[1]:
            best[key] = (tactic, score)
    return sorted(best.values(), key=lambda c: (-c[1], c[0]))


@dataclass(frozen=True)
class MockRule:
    """One rule of a mock table.

    A rule matches a request when the state's normalized text equals or
    glob-matches ``state_pattern`` and the requested prefix starts with
    ``prefix_pattern``. Outputs must honor the rule's own prefix.
    """

    state_pattern: str
    prefix_pattern: str
    outputs: tuple[Candidate, ...]

    def __post_init__(self):
        for tactic, _ in self.outputs:
            if not tactic.startswith(self.prefix_pattern):
                raise ValueError(
                    f"rule output {tactic!r} does not start with prefix {self.prefix_pattern!r}"
                )

    def matches(self, state: TacticState, prefix: str) -> bool:
        pattern = self.state_pattern.strip()
        state_key = state.key
        if state_key != pattern and not fnmatch.fnmatchcase(state_key, pattern):
            return False
        return prefix.startswith(self.prefix_pattern)


@dataclass(frozen=True)
class MockRuleTable:
    """Ordered rule list for the deterministic mock backend; first match wins."""

    rules: tuple[MockRule, ...]

    @classmethod
    def from_obj(cls, obj) -> "MockRuleTable":
        if not isinstance(obj, list):
            raise ValueError("mock rule table must be a JSON array of rules")
        rules = []
        for i, entry in enumerate(obj):
            try:
                outputs = tuple(
                    (o["tactic"], float(o["score"])) for o in entry["outputs"]
                )
                rules.append(MockRule(entry["state"], entry.get("prefix", ""), outputs))
            except (KeyError, TypeError) as exc:
                raise ValueError(f"malformed mock rule at index {i}: {exc}") from exc
        return cls(tuple(rules))

    @classmethod
    def load(cls, path: str | Path) -> "MockRuleTable":
        with open(path, encoding="utf-8") as fh:
            return cls.from_obj(json.load(fh))

    def first_match(self, state: TacticState, prefix: str) -> MockRule | None:
        for rule in self.rules:
            if rule.matches(state, prefix):
                return rule
        return None


class MockGenerator:
    """Deterministic generator backed by an ordered rule table.

    Pure function of (table, state, prefix, n): no network, no clock, no
    hidden state, which makes it the backend of choice for tests and for the
    simulated evaluation corpus.
    """

    def __init__(self, table: MockRuleTable, model_id: str = "mock"):
        self._table = table
        self.model_id = model_id

    def generate(self, state: TacticState, prefix: str, n: int) -> list[Candidate]:
        if n < 1:
            raise ValueError("n must be >= 1")
        rule = self._table.first_match(state, prefix)
        if rule is None:
            return []
        picked = [(t, s) for t, s in rule.outputs if t.startswith(prefix)]
        return score_normalize(picked)[:n]


@dataclass(frozen=True)
class RemoteBackendConfig:
    """Connection and decoding parameters for a completion-style HTTP backend."""

    endpoint_url: str
    model_id: str
    decode_mode: str = "beam"
    beam_width_or_samples: int = 32
    temperature: float = 0.0
    max_new_tokens: int = 128
    request_timeout_s: float = 30.0
    retries: int = 2

    def __post_init__(self):
        if self.decode_mode not in ("beam", "sample"):
            raise ValueError(f"decode_mode must be 'beam' or 'sample', got {self.decode_mode!r}")
        if self.beam_width_or_samples < 1:
            raise ValueError("beam_width_or_samples must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")
        if self.request_timeout_s <= 0:
            raise ValueError("request_timeout_s must be > 0")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


class RemoteGenerator:
    """Client for a completion-style HTTP inference API.

    POST body: {model, prompt, n, max_tokens, beam_width|temperature}.
    Expected response: {"choices": [{"text": ..., "logprob": ...}, ...]}.

    When more candidates are requested than the configured beam width, the
    call is split into batches and the union is deduplicated. Connection
    failures are retried with exponential backoff (capped at the request
    timeout); a timeout is final and raises ``DeadlineError``.
    """

    def __init__(self, config: RemoteBackendConfig, session: requests.Session | None = None):
        self.config = config
        self.model_id = config.model_id
        self._session = session or requests.Session()

    def generate(self, state: TacticState, prefix: str, n: int) -> list[Candidate]:
        if n < 1:
            raise ValueError("n must be >= 1")
        prompt = encode_prompt(state, prefix)
        width = self.config.beam_width_or_samples
        collected: list[Candidate] = []
        remaining = n
        while remaining > 0:
            per_call = min(width, remaining)
            for text, logprob in self._one_call(prompt, per_call):
                tactic = parse_completion(prefix, text)
                if not tactic.strip():
                    continue
                collected.append((tactic, logprob))
            remaining -= per_call
        return score_normalize(collected)[:n]

    def _one_call(self, prompt: str, count: int) -> list[tuple[str, float]]:
        body = {
            "model": self.config.model_id,
            "prompt": prompt,
            "n": count,
            "max_tokens": self.config.max_new_tokens,
        }
        if self.config.decode_mode == "beam":
            body["beam_width"] = self.config.beam_width_or_samples
        else:
            body["temperature"] = self.config.temperature
        payload = self._post_with_retries(body)
        return self._parse_choices(payload)

    def _post_with_retries(self, body: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(self.config.retries + 1):
            try:
                resp = self._session.post(
                    self.config.endpoint_url, json=body, timeout=self.config.request_timeout_s
                )
            except requests.Timeout as exc:
                raise DeadlineError(
                    f"backend did not answer within {self.config.request_timeout_s}s"
                ) from exc
            except requests.RequestException as exc:
                last_error = exc
                self._backoff(attempt)
                continue
            if resp.status_code >= 500:
                last_error = BackendUnavailableError(f"backend returned {resp.status_code}")
                self._backoff(attempt)
                continue
            if resp.status_code != 200:
                raise BackendProtocolError(
                    f"backend rejected the request with status {resp.status_code}"
                )
            try:
                return resp.json()
            except ValueError as exc:
                raise BackendProtocolError(f"backend response is not JSON: {exc}") from exc
        raise BackendUnavailableError(f"backend unreachable after {self.config.retries + 1} tries: {last_error}")

    def _backoff(self, attempt: int) -> None:
        if attempt < self.config.retries:
            time.sleep(min(_BACKOFF_BASE_S * 2 ** attempt, self.config.request_timeout_s))

    @staticmethod
    def _parse_choices(payload) -> list[tuple[str, float]]:
        if not isinstance(payload, dict) or not isinstance(payload.get("choices"), list):
            raise BackendProtocolError("backend response has no 'choices' array")
        out = []
        for i, choice in enumerate(payload["choices"]):
            if not isinstance(choice, dict) or not isinstance(choice.get("text"), str):
                raise BackendProtocolError(f"choice {i} has no text")
            logprob = choice.get("logprob")
            if isinstance(logprob, bool) or not isinstance(logprob, (int, float)):
                raise BackendProtocolError(f"choice {i} has no numeric logprob")
            out.append((choice["text"], float(logprob)))
        return out
