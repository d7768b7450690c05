import json
import subprocess
import sys

import pytest

from tacstep.adapter import ExternalProver
from tacstep.harness import Corpus
from tacstep.proofenv import (
    EnvironmentIntegrityError,
    EnvironmentUnavailableError,
    OutcomeKind,
    SimProver,
    TableEdgeGenerator,
)
from tacstep.protocol import TacticState
from tacstep.search import SearchBudget, run_attempts


@pytest.fixture(scope="module")
def corpus_file(tmp_path_factory):
    corpus = Corpus.generate(seed=5, count=3, max_depth=3, branching=2, distractors_per_state=2)
    path = tmp_path_factory.mktemp("adapter") / "corpus.json"
    corpus.save(path)
    return path, corpus


def _spawn(path, *extra, timeout_s=5.0):
    return ExternalProver(
        [sys.executable, "-m", "tacstep", "sim-stdio", "--table", str(path), *extra],
        per_tactic_timeout_s=timeout_s,
    )


class TestLineProtocol:
    def test_init_handshake_returns_root(self, corpus_file):
        path, corpus = corpus_file
        with _spawn(path) as prover:
            root = prover.init(corpus.theorems[0].id)
            assert root.key == corpus.theorems[0].root.key

    def test_init_without_theorem_uses_table_root(self, corpus_file):
        path, corpus = corpus_file
        with _spawn(path) as prover:
            assert prover.init().key == corpus.table.root.key

    def test_apply_known_proof_reaches_completed(self, corpus_file):
        path, corpus = corpus_file
        theorem = corpus.theorems[0]
        with _spawn(path) as prover:
            state = prover.init(theorem.id)
            for i, tactic in enumerate(theorem.known_proof):
                out = prover.apply(state, tactic)
                if i < len(theorem.known_proof) - 1:
                    assert out.kind is OutcomeKind.PROGRESS
                    state = out.next_state
                else:
                    assert out.kind is OutcomeKind.COMPLETED

    def test_broken_tactic_propagates_error_message(self, corpus_file):
        path, corpus = corpus_file
        with _spawn(path) as prover:
            state = prover.init(corpus.theorems[0].id)
            out = prover.apply(state, "definitely not a tactic")
            assert out.kind is OutcomeKind.ERROR
            assert out.message == "unknown tactic"

    def test_unissued_state_is_integrity_error(self, corpus_file):
        path, _ = corpus_file
        with _spawn(path) as prover:
            prover.init()
            with pytest.raises(EnvironmentIntegrityError):
                prover.apply(TacticState("⊢ never seen"), "intro")

    def test_tactic_timeout_maps_to_error_outcome(self, corpus_file):
        path, corpus = corpus_file
        with _spawn(path, "--delay-s", "2.0", timeout_s=0.3) as prover:
            state = prover.init(corpus.theorems[0].id)
            out = prover.apply(state, corpus.theorems[0].known_proof[0])
            assert out.kind is OutcomeKind.ERROR
            assert "timed out" in out.message

    def test_crashed_subprocess_is_unavailable(self, corpus_file):
        path, corpus = corpus_file
        prover = _spawn(path)
        state = prover.init(corpus.theorems[0].id)
        prover._proc.kill()
        prover._proc.wait()
        with pytest.raises(EnvironmentUnavailableError):
            prover.apply(state, "intro")
        prover.close()

    def test_stale_reply_after_timeout_is_discarded(self, corpus_file):
        path, corpus = corpus_file
        theorem = corpus.theorems[0]
        with _spawn(path, "--delay-s", "0.6", timeout_s=0.2) as prover:
            state = prover.init(theorem.id)
            first = prover.apply(state, theorem.known_proof[0])
            assert first.kind is OutcomeKind.ERROR  # timed out
            # the late reply to the first apply must not be taken for this one
            prover.per_tactic_timeout_s = 5.0
            second = prover.apply(state, "definitely not a tactic")
            assert second.kind is OutcomeKind.ERROR
            assert second.message == "unknown tactic"


class TestSearchOverAdapter:
    def test_search_through_adapter_matches_in_process(self, corpus_file):
        path, corpus = corpus_file
        budget = SearchBudget(attempts=1, expansion_size=8, max_iterations=32, timeout_s=10)
        generator = TableEdgeGenerator(corpus.table)
        for theorem in corpus.theorems:
            local = run_attempts(
                SimProver(corpus.table), generator, theorem.root, budget, max_depth=None
            )
            with _spawn(path) as prover:
                root = prover.init(theorem.id)
                remote = run_attempts(prover, generator, root, budget, max_depth=None)
            assert remote.outcome == local.outcome
            assert remote.proof == local.proof


class TestWireFormat:
    def test_raw_protocol_fields(self, corpus_file):
        path, corpus = corpus_file
        proc = subprocess.Popen(
            [sys.executable, "-m", "tacstep", "sim-stdio", "--table", str(path)],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
        )
        try:
            proc.stdin.write(json.dumps({"op": "init", "theorem": corpus.theorems[0].id}) + "\n")
            proc.stdin.flush()
            reply = json.loads(proc.stdout.readline())
            assert reply["kind"] == "progress"
            assert reply["next_state"] == corpus.theorems[0].root.text
            assert reply["goal_count"] >= 1
            token = reply["token"]

            tactic = corpus.theorems[0].known_proof[0]
            proc.stdin.write(json.dumps({"op": "apply", "token": token, "tactic": tactic}) + "\n")
            proc.stdin.flush()
            reply = json.loads(proc.stdout.readline())
            assert reply["kind"] in ("progress", "completed")
            if reply["kind"] == "completed":
                assert reply["goal_count"] == 0

            proc.stdin.write(json.dumps({"op": "apply", "token": "bogus", "tactic": "x"}) + "\n")
            proc.stdin.flush()
            reply = json.loads(proc.stdout.readline())
            assert reply == {"kind": "error", "message": "unknown state token"}
        finally:
            proc.terminate()
            proc.wait()
