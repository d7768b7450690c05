import pytest

from tacstep.checking import CheckedBatch, check_batch, check_one
from tacstep.proofenv import EnvironmentUnavailableError, OutcomeKind, SimProver
from tacstep.protocol import Status, TacticState

from conftest import EXAMPLE_STATE


class TestCheckOne:
    def test_completing_tactic(self, demo_prover):
        status, nxt = check_one(demo_prover, TacticState(EXAMPLE_STATE), "exact subset_trans")
        assert status is Status.COMPLETE and nxt is None

    def test_progress_tactic_returns_next_state(self, demo_prover):
        status, nxt = check_one(demo_prover, TacticState(EXAMPLE_STATE), "intros h1 h2")
        assert status is Status.VALID
        assert nxt is not None and nxt.goal_count >= 1

    def test_unknown_tactic_is_invalid(self, demo_prover):
        status, nxt = check_one(demo_prover, TacticState(EXAMPLE_STATE), "nonsense 42")
        assert status is Status.INVALID and nxt is None

    def test_empty_tactic_rejected(self, demo_prover):
        with pytest.raises(ValueError):
            check_one(demo_prover, TacticState(EXAMPLE_STATE), "   ")

    def test_environment_failure_is_not_invalid(self):
        class DeadEnv:
            def apply(self, state, tactic):
                raise EnvironmentUnavailableError("gone")

        with pytest.raises(EnvironmentUnavailableError):
            check_one(DeadEnv(), TacticState("⊢ P"), "intro")

    def test_matches_direct_outcome_mapping_exhaustively(self, corpus7):
        # every edge of the table, zero mismatches
        env = SimProver(corpus7.table)
        expected = {
            OutcomeKind.COMPLETED: Status.COMPLETE,
            OutcomeKind.PROGRESS: Status.VALID,
            OutcomeKind.ERROR: Status.INVALID,
        }
        for state_text, tactic_text, outcome in corpus7.table.entries:
            status, _ = check_one(env, TacticState(state_text), tactic_text)
            assert status is expected[outcome.kind]


class TestCheckBatch:
    def test_worked_example_batch_statuses_and_order(self, demo_prover, demo_generator):
        candidates = demo_generator.generate(TacticState(EXAMPLE_STATE), "", 5)
        batch = check_batch(demo_prover, TacticState(EXAMPLE_STATE), candidates)
        statuses = [s.status for s in batch.suggestions]
        assert statuses.count(Status.COMPLETE) == 3
        assert statuses.count(Status.VALID) == 2
        ranks = [s.rank for s in statuses]
        assert ranks == sorted(ranks)

    def test_empty_batch(self, demo_prover):
        batch = check_batch(demo_prover, TacticState(EXAMPLE_STATE), [])
        assert batch.suggestions == ()

    def test_normalization_dedup_keeps_max_score(self, demo_prover):
        batch = check_batch(
            demo_prover, TacticState(EXAMPLE_STATE), [("intro", -1.0), ("intro ", -2.0)]
        )
        assert len(batch.suggestions) == 1
        assert batch.suggestions[0].tactic == "intro"
        assert batch.suggestions[0].score == -1.0

    def test_idempotent_on_checked_output(self, demo_prover, demo_generator):
        candidates = demo_generator.generate(TacticState(EXAMPLE_STATE), "", 5)
        first = check_batch(demo_prover, TacticState(EXAMPLE_STATE), candidates)
        again = check_batch(
            demo_prover,
            TacticState(EXAMPLE_STATE),
            [(s.tactic, s.score) for s in first.suggestions],
        )
        assert again == first

    def test_every_suggestion_has_one_checked_status(self, demo_prover, demo_generator):
        candidates = demo_generator.generate(TacticState(EXAMPLE_STATE), "", 5) + [("bogus", -9.0)]
        batch = check_batch(demo_prover, TacticState(EXAMPLE_STATE), candidates)
        for s in batch.suggestions:
            assert s.status in (Status.COMPLETE, Status.VALID, Status.INVALID)

    def test_score_order_within_status_group(self, demo_prover):
        batch = check_batch(
            demo_prover,
            TacticState(EXAMPLE_STATE),
            [("tauto", -1.05), ("exact subset_trans", -0.22), ("exact Set.Subset.trans", -0.49)],
        )
        completes = [s for s in batch.suggestions if s.status is Status.COMPLETE]
        assert [s.tactic for s in completes] == [
            "exact subset_trans",
            "exact Set.Subset.trans",
            "tauto",
        ]
