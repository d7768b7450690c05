"""Line-protocol bridge to an out-of-process proof assistant.

One JSON object per line over stdin/stdout. Requests are
``{"op": "init", "theorem": ...}`` or ``{"op": "apply", "token": ..., "tactic": ...}``;
responses mirror ProverOutcome field names (kind, next_state, goal_count,
message) plus an opaque ``token`` naming any state the child issues. Both the
client half (ExternalProver) and a reference child serving a simulated table
(serve_table_stdio) live here, so the protocol can be exercised end to end
without a real proof assistant.
"""

from __future__ import annotations

import json
import queue
import subprocess
import sys
import threading
import time
from typing import IO, Sequence

from .proofenv import (
    CorpusTheorem,
    EnvironmentIntegrityError,
    EnvironmentUnavailableError,
    OutcomeKind,
    ProverOutcome,
    SimProver,
    SimProverTable,
)
from .protocol import TacticState

DEFAULT_TACTIC_TIMEOUT_S = 10.0


class ExternalProver:
    """Client for a line-protocol prover subprocess.

    A handle is strictly single-threaded: one in-flight request at a time
    (enforced with a lock). Run parallel searches with separate handles.
    States returned by the child are remembered by normalized text, so the
    handle can serve as a drop-in proof environment for checking and search.
    """

    concurrent_safe = False

    def __init__(
        self,
        command: Sequence[str],
        per_tactic_timeout_s: float = DEFAULT_TACTIC_TIMEOUT_S,
        init_timeout_s: float = 60.0,
    ):
        if per_tactic_timeout_s <= 0 or init_timeout_s <= 0:
            raise ValueError("timeouts must be > 0")
        self.per_tactic_timeout_s = per_tactic_timeout_s
        self.init_timeout_s = init_timeout_s
        self._proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            bufsize=1,
        )
        self._lock = threading.Lock()
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._tokens: dict[str, str] = {}
        self._next_id = 0
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self) -> None:
        try:
            for line in self._proc.stdout:
                self._lines.put(line)
        finally:
            self._lines.put(None)

    def _request(self, payload: dict, timeout_s: float) -> dict | None:
        """Send one request; None means the per-request clock ran out."""
        with self._lock:
            self._next_id += 1
            payload = dict(payload, id=self._next_id)
            if self._proc.poll() is not None:
                raise EnvironmentUnavailableError("adapter subprocess has exited")
            try:
                self._proc.stdin.write(json.dumps(payload, ensure_ascii=False) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise EnvironmentUnavailableError(f"adapter subprocess pipe closed: {exc}") from exc
            deadline = time.monotonic() + timeout_s
            while True:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return None
                try:
                    line = self._lines.get(timeout=remaining)
                except queue.Empty:
                    return None
                if line is None:
                    raise EnvironmentUnavailableError("adapter subprocess closed its output")
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise EnvironmentUnavailableError(f"adapter spoke garbage: {line!r}") from exc
                if obj.get("id") == self._next_id:
                    return obj
                # stale reply from a timed-out request; drop and keep reading

    def init(self, theorem: str = "") -> TacticState:
        """Handshake: ask the child for the root state of a theorem.

        Waits up to ``init_timeout_s``: child startup (a real assistant loads
        whole libraries here) does not count against the per-tactic budget.
        """
        reply = self._request({"op": "init", "theorem": theorem}, self.init_timeout_s)
        if reply is None:
            raise EnvironmentUnavailableError("adapter did not answer the init handshake in time")
        outcome = self._to_outcome(reply)
        if outcome.kind is not OutcomeKind.PROGRESS:
            raise EnvironmentUnavailableError(f"init failed: {outcome.message or outcome.kind.value}")
        return outcome.next_state

    def apply(self, state: TacticState, tactic: str) -> ProverOutcome:
        token = self._tokens.get(state.key)
        if token is None:
            raise EnvironmentIntegrityError(f"state was never issued by this adapter: {state.text[:80]!r}")
        reply = self._request(
            {"op": "apply", "token": token, "tactic": tactic}, self.per_tactic_timeout_s
        )
        if reply is None:
            return ProverOutcome.error(f"tactic timed out after {self.per_tactic_timeout_s}s")
        return self._to_outcome(reply)

    def _to_outcome(self, reply: dict) -> ProverOutcome:
        kind = reply.get("kind")
        if kind == OutcomeKind.PROGRESS.value:
            state = TacticState(reply.get("next_state", ""), reply.get("goal_count", 1))
            token = reply.get("token")
            if not state.text or not token:
                raise EnvironmentUnavailableError(f"malformed progress reply: {reply!r}")
            self._tokens[state.key] = token
            return ProverOutcome.progress(state, reply.get("goal_count", 1))
        if kind == OutcomeKind.COMPLETED.value:
            return ProverOutcome.completed()
        if kind == OutcomeKind.ERROR.value:
            return ProverOutcome.error(reply.get("message") or "unspecified error")
        raise EnvironmentUnavailableError(f"malformed adapter reply: {reply!r}")

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self) -> "ExternalProver":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def serve_table_stdio(
    table: SimProverTable,
    theorems: Sequence[CorpusTheorem] = (),
    stdin: IO[str] | None = None,
    stdout: IO[str] | None = None,
    apply_delay_s: float = 0.0,
) -> None:
    """Serve a simulated prover over the line protocol until stdin closes.

    ``init`` with an empty or unknown theorem name starts at the table root;
    corpus theorem ids resolve to their own roots. ``apply_delay_s`` slows
    every apply response down, which lets tests drive the client's timeout
    path for real.
    """
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    prover = SimProver(table)
    roots = {t.id: t.root for t in theorems}
    states: dict[str, TacticState] = {}
    serial = 0

    def issue(state: TacticState) -> str:
        nonlocal serial
        serial += 1
        token = f"s{serial}"
        states[token] = state
        return token

    def reply(obj: dict, req: dict) -> None:
        if "id" in req:
            obj["id"] = req["id"]
        stdout.write(json.dumps(obj, ensure_ascii=False) + "\n")
        stdout.flush()

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
        except json.JSONDecodeError:
            stdout.write(json.dumps({"kind": "error", "message": "request is not JSON"}) + "\n")
            stdout.flush()
            continue
        op = req.get("op")
        if op == "init":
            root = roots.get(req.get("theorem", ""), table.root)
            reply(
                {
                    "kind": "progress",
                    "next_state": root.text,
                    "goal_count": root.goal_count or 1,
                    "token": issue(root),
                },
                req,
            )
        elif op == "apply":
            if apply_delay_s > 0:
                time.sleep(apply_delay_s)
            state = states.get(req.get("token", ""))
            if state is None:
                reply({"kind": "error", "message": "unknown state token"}, req)
                continue
            outcome = prover.apply(state, req.get("tactic", ""))
            if outcome.kind is OutcomeKind.PROGRESS:
                reply(
                    {
                        "kind": "progress",
                        "next_state": outcome.next_state.text,
                        "goal_count": outcome.goal_count,
                        "token": issue(outcome.next_state),
                    },
                    req,
                )
            elif outcome.kind is OutcomeKind.COMPLETED:
                reply({"kind": "completed", "goal_count": 0}, req)
            else:
                reply({"kind": "error", "message": outcome.message}, req)
        else:
            reply({"kind": "error", "message": f"unknown op {op!r}"}, req)
