from __future__ import annotations

import numpy as np
import pytest

from cardsort.beliefs import ZeroEvidence
from cardsort.cards import CardPlay, Pile, deck, enumerate_rules, sort_card
from cardsort.learner import (
    LearnerConfig,
    LearnerMode,
    conditional_rule_marginal,
    confidence,
    diagnostics,
    has_converged,
    hypothesis_marginal,
    init_learner,
    map_rule,
    map_teacher_hypothesis,
    observe_card,
    record_utterance,
    replay_history,
    rule_marginal,
    select_ce,
    select_feedback,
)
from cardsort.teacher import (
    ASSERTIONS,
    CE,
    Assertion,
    TeacherHypothesis,
    TeacherKind,
    make_utterance,
)

from oracles import level0_posterior

RULES = enumerate_rules()
BASELINE = LearnerConfig(mode=LearnerMode.BASELINE)


def _observe(belief, card_id: int, pile: Pile):
    return observe_card(
        belief, CardPlay(deck()[card_id], pile, len(belief.history) + 1)
    )


def _observe_rule_plays(belief, rule, card_ids):
    for card_id in card_ids:
        card = deck()[card_id]
        belief = _observe(belief, card_id, sort_card(rule, card))
    return belief


class TestInit:
    def test_uniform_joint_posterior(self):
        belief = init_learner()
        assert len(belief.posterior) == 126
        assert np.allclose(belief.posterior.probs, 1 / 126, atol=1e-12)

    def test_marginals_are_uniform(self):
        belief = init_learner()
        assert np.allclose(rule_marginal(belief).probs, 1 / 18, atol=1e-12)
        assert np.allclose(hypothesis_marginal(belief).probs, 1 / 7, atol=1e-12)

    def test_replays_mirror_the_learner(self):
        belief = init_learner()
        assert len(belief.replays) == 7
        for replay in belief.replays:
            assert replay.true_rule is None
            assert replay.history == ()


class TestObserveCard:
    def test_first_play_rule_marginal_uniform_over_consistent(self):
        belief = _observe(init_learner(), 2, Pile.PILE1)
        expected = level0_posterior([(2, 1)])
        assert np.allclose(rule_marginal(belief).probs, expected, atol=1e-12)

    def test_first_play_of_card_zero_boosts_systematic(self):
        belief = _observe(init_learner(), 0, Pile.PILE1)
        systematic = next(
            k for k, h in enumerate(belief.grid) if h.kind is TeacherKind.SYSTEMATIC
        )
        posterior = hypothesis_marginal(belief)[systematic]
        assert posterior == pytest.approx(9 / 11, abs=1e-12)
        assert posterior > 1 / 7

    def test_first_play_of_card_five_kills_systematic(self):
        belief = _observe(init_learner(), 5, Pile.PILE3)
        systematic = next(
            k for k, h in enumerate(belief.grid) if h.kind is TeacherKind.SYSTEMATIC
        )
        assert hypothesis_marginal(belief)[systematic] == 0.0

    def test_contradictory_history_raises_zero_evidence(self):
        belief = _observe(init_learner(), 0, Pile.PILE1)
        belief = _observe(belief, 1, Pile.PILE2)  # leaves only the identity count rule
        with pytest.raises(ZeroEvidence):
            _observe(belief, 2, Pile.PILE1)

    def test_round_numbering_enforced(self):
        belief = init_learner()
        with pytest.raises(ValueError):
            observe_card(belief, CardPlay(deck()[0], Pile.PILE1, 2))

    def test_replayed_card_rejected(self):
        belief = _observe(init_learner(), 0, Pile.PILE1)
        with pytest.raises(ValueError):
            _observe(belief, 0, Pile.PILE1)

    def test_conditional_marginals_match_level0_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(25):
            rule = RULES[int(rng.integers(18))]
            card_ids = [int(c) for c in rng.permutation(27)[: int(rng.integers(1, 10))]]
            belief = _observe_rule_plays(init_learner(), rule, card_ids)
            oracle = level0_posterior(
                [(cid, int(sort_card(rule, deck()[cid]))) for cid in card_ids]
            )
            for k in range(len(belief.grid)):
                conditional = conditional_rule_marginal(belief, k)
                if conditional is not None:
                    assert np.abs(conditional.probs - np.array(oracle)).max() <= 1e-12

    def test_support_monotone(self):
        belief = init_learner()
        support = set(belief.posterior.support())
        rng = np.random.default_rng(8)
        rule = RULES[3]
        for card_id in rng.permutation(27)[:6]:
            card = deck()[int(card_id)]
            belief = _observe(belief, int(card_id), sort_card(rule, card))
            new_support = set(belief.posterior.support())
            assert new_support <= support
            support = new_support


class TestConfidence:
    def test_after_one_play(self):
        belief = _observe(init_learner(), 2, Pile.PILE1)
        red = deck()[0].color
        assert confidence(belief, Assertion(red, Pile.PILE1)) == pytest.approx(1 / 3, abs=1e-12)
        assert confidence(belief, Assertion(red, Pile.PILE2)) == 0.0

    def test_uniform_prior_confidence_is_one_ninth(self):
        belief = init_learner()
        for assertion in ASSERTIONS:
            assert confidence(belief, assertion) == pytest.approx(1 / 9, abs=1e-12)

    def test_pile_sum_equals_dimension_mass(self):
        belief = _observe(init_learner(), 2, Pile.PILE1)
        marginal = rule_marginal(belief).probs
        for value in {a.value for a in ASSERTIONS}:
            total = sum(confidence(belief, Assertion(value, pile)) for pile in Pile)
            dimension = Assertion(value, Pile.PILE1).dimension
            dimension_mass = sum(marginal[r.id] for r in RULES if r.dimension is dimension)
            assert total == pytest.approx(dimension_mass, abs=1e-12)


class TestSelectCe:
    def test_band_examples(self):
        config = LearnerConfig()
        assert select_ce(1 / 3, config) is CE.UNSURE
        assert select_ce(0.95, config) is CE.KNOW
        assert select_ce(0.5, config) is CE.THINK

    def test_left_closed_boundaries(self):
        config = LearnerConfig()
        assert select_ce(0.9, config) is CE.KNOW
        assert select_ce(0.4999999, config) is CE.UNSURE

    def test_monotone_in_confidence(self):
        config = LearnerConfig()
        order = [CE.UNSURE, CE.THINK, CE.KNOW]
        last = -1
        for c in np.linspace(0.0, 1.0, 101):
            level = order.index(select_ce(float(c), config))
            assert level >= last
            last = level

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            select_ce(1.5, LearnerConfig())


class TestSelectFeedback:
    def test_baseline_states_most_confident_assertion_bare(self):
        belief = _observe(init_learner(grid=None, config=BASELINE), 2, Pile.PILE1)
        unplayed = [c for c in deck() if c.id != 2]
        utterance = select_feedback(belief, unplayed)
        assert utterance.ce is None
        assert utterance.rendered == "Reds belong in Pile 1."

    def test_baseline_repeats_itself_on_identical_state(self):
        belief = _observe(init_learner(grid=None, config=BASELINE), 2, Pile.PILE1)
        unplayed = [c for c in deck() if c.id != 2]
        assert select_feedback(belief, unplayed) == select_feedback(belief, unplayed)

    def test_point_mass_belief_says_know_with_rule_assertion(self):
        belief = _observe_rule_plays(init_learner(), RULES[0], list(range(10)))
        assert rule_marginal(belief).max() == pytest.approx(1.0, abs=1e-12)
        utterance = select_feedback(belief, [c for c in deck() if c.id >= 10])
        assert utterance.ce is CE.KNOW
        assert utterance.rendered == "I know Reds belong in Pile 1."

    def test_first_play_yields_unsure_prefix(self):
        belief = _observe(init_learner(), 2, Pile.PILE1)
        utterance = select_feedback(belief, [c for c in deck() if c.id != 2])
        assert utterance.ce is CE.UNSURE

    def test_zero_calibration_single_hypothesis_reduces_to_gain_argmax(self):
        grid = (TeacherHypothesis(TeacherKind.ATTENTIVE, 0.1, 0.2, 0),)
        config = LearnerConfig(calibration_weight=0.0)
        belief = _observe(init_learner(grid=grid, config=config), 2, Pile.PILE1)
        unplayed = [c for c in deck() if c.id != 2]
        utterance = select_feedback(belief, unplayed)

        from cardsort.learner import _teacher_mediated_gain
        from cardsort.teacher import CE_ORDER

        gains = np.array(
            [
                _teacher_mediated_gain(
                    belief.replays[0], rule_marginal(belief).probs, [c.id for c in unplayed]
                )
            ]
            * 81
        )
        best = int(np.argmax(gains))
        expected = make_utterance(CE_ORDER[best % 3], ASSERTIONS[best // 3])
        assert utterance == expected

    def test_empty_deck_still_produces_feedback(self):
        belief = _observe(init_learner(), 2, Pile.PILE1)
        utterance = select_feedback(belief, [])
        assert utterance.ce is CE.UNSURE


class TestConvergenceAndMap:
    def test_uniform_six_not_converged(self):
        belief = _observe(init_learner(), 2, Pile.PILE1)
        assert not has_converged(belief)

    def test_point_mass_converged(self):
        belief = _observe_rule_plays(init_learner(), RULES[0], list(range(10)))
        assert has_converged(belief)
        assert map_rule(belief) is RULES[0]

    def test_threshold_crossing(self):
        config = LearnerConfig(convergence_threshold=0.15)
        belief = _observe(init_learner(config=config), 2, Pile.PILE1)
        assert has_converged(belief, config)

    def test_map_hypothesis_examples(self):
        belief = init_learner()
        assert map_teacher_hypothesis(belief) == 0  # uniform tie -> lowest grid id
        after_zero = _observe(init_learner(), 0, Pile.PILE1)
        assert belief.grid[map_teacher_hypothesis(after_zero)].kind is TeacherKind.SYSTEMATIC
        after_five = _observe(init_learner(), 5, Pile.PILE3)
        assert belief.grid[map_teacher_hypothesis(after_five)].kind is TeacherKind.ATTENTIVE


class TestRecordUtterance:
    def test_replays_hear_what_the_learner_says(self):
        belief = _observe(init_learner(), 2, Pile.PILE1)
        utterance = select_feedback(belief, [c for c in deck() if c.id != 2])
        after = record_utterance(belief, utterance)
        assert after.uttered == (utterance,)
        for replay in after.replays:
            assert replay.heard == (utterance,)

    def test_attentive_replays_update_trust_systematic_does_not(self):
        belief = _observe(init_learner(), 2, Pile.PILE1)
        utterance = make_utterance(CE.UNSURE, Assertion(deck()[0].color, Pile.PILE1))
        after = record_utterance(belief, utterance)
        for replay in after.replays:
            if replay.hypothesis.kind is TeacherKind.SYSTEMATIC:
                assert replay.knowledge_belief.as_list() == [0.5, 0.5]
            else:
                assert replay.knowledge_belief[0] > 0.5


class TestDeterminismAndReplay:
    def test_identical_inputs_identical_outputs(self):
        def run():
            belief = init_learner()
            transcript = []
            for card_id in (2, 9, 14, 20):
                card = deck()[card_id]
                belief = _observe(belief, card_id, sort_card(RULES[0], card))
                utterance = select_feedback(
                    belief, [c for c in deck() if all(p.card.id != c.id for p in belief.history)]
                )
                belief = record_utterance(belief, utterance)
                transcript.append(utterance)
            return belief, transcript

        first_belief, first_transcript = run()
        second_belief, second_transcript = run()
        assert first_transcript == second_transcript
        assert np.array_equal(first_belief.posterior.probs, second_belief.posterior.probs)

    def test_replay_history_rebuilds_identical_state(self):
        belief = init_learner()
        utterances = []
        for card_id in (2, 9, 14):
            card = deck()[card_id]
            belief = _observe(belief, card_id, sort_card(RULES[0], card))
            utterance = select_feedback(
                belief, [c for c in deck() if all(p.card.id != c.id for p in belief.history)]
            )
            belief = record_utterance(belief, utterance)
            utterances.append(utterance)
        rebuilt = replay_history(belief.history, utterances)
        assert np.array_equal(rebuilt.posterior.probs, belief.posterior.probs)
        assert rebuilt.uttered == belief.uttered
        for a, b in zip(rebuilt.replays, belief.replays):
            assert a.knowledge_belief == b.knowledge_belief


class TestDiagnostics:
    def test_serializable_shape(self):
        import json

        belief = _observe(init_learner(), 2, Pile.PILE1)
        data = diagnostics(belief)
        assert len(data["rule_marginal"]) == 18
        assert len(data["hypothesis_marginal"]) == 7
        assert len(data["confidences"]) == 27
        assert data["rounds"] == 1
        json.dumps(data)
