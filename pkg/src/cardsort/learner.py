"""The learner: a joint posterior over (rule x teacher hypothesis) with a
replayed teacher state per hypothesis, plus the feedback policy.

Observing a play updates the joint belief with two factors: whether the rule
sorts the card onto the observed pile, and how likely each hypothesized
teacher was to pick that card. In teacher-aware mode the learner chooses the
utterance maximizing expected information gain routed through the modeled
teacher plus a confidence-calibration bonus; in baseline mode it states its
most confident assertion with no confidence expression.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .beliefs import Distribution, bayes_update, expected_info_gain, softmax_weights, uniform
from .cards import (
    NUM_CARDS,
    NUM_RULES,
    Card,
    CardPlay,
    Rule,
    consistency_row,
    deck,
    enumerate_rules,
    pile_onehot_table,
)
from .teacher import (
    ASSERTIONS,
    CE,
    CE_ANCHORS,
    CE_ORDER,
    Assertion,
    TeacherHypothesis,
    TeacherKind,
    TeacherState,
    Utterance,
    assertion_confidences,
    attentive_card_scores,
    card_choice_weights,
    default_grid,
    init_teacher,
    interpret_feedback,
    make_utterance,
)


class LearnerMode(Enum):
    BASELINE = "baseline"
    TEACHER_AWARE = "teacher_aware"


@dataclass(frozen=True, slots=True)
class LearnerConfig:
    """Thresholds and weights of the feedback policy.

    Confidence below think_threshold is voiced as "I'm unsure if", from there
    up to know_threshold as "I think", and at or above know_threshold as
    "I know" (bands closed on the left).
    """

    think_threshold: float = 0.5
    know_threshold: float = 0.9
    calibration_weight: float = 1.0
    convergence_threshold: float = 0.95
    mode: LearnerMode = LearnerMode.TEACHER_AWARE

    def __post_init__(self) -> None:
        if not (0.0 < self.think_threshold < self.know_threshold < 1.0):
            raise ValueError("need 0 < think_threshold < know_threshold < 1")
        if self.calibration_weight < 0.0:
            raise ValueError("calibration_weight must be non-negative")
        if not (0.0 < self.convergence_threshold <= 1.0):
            raise ValueError("convergence_threshold must be in (0, 1]")


def config_to_json(config: LearnerConfig) -> dict:
    return {
        "mode": config.mode.value,
        "think_threshold": config.think_threshold,
        "know_threshold": config.know_threshold,
        "calibration_weight": config.calibration_weight,
        "convergence_threshold": config.convergence_threshold,
    }


def config_from_json(data: dict) -> LearnerConfig:
    kwargs = {}
    if "mode" in data:
        kwargs["mode"] = LearnerMode(data["mode"])
    for field in ("think_threshold", "know_threshold", "calibration_weight", "convergence_threshold"):
        if field in data:
            kwargs[field] = float(data[field])
    return LearnerConfig(**kwargs)


@dataclass(frozen=True, slots=True)
class JointBelief:
    """Posterior over (rule, hypothesis) cells, hypothesis-major.

    One replayed teacher per hypothesis suffices: the replay depends on the
    hypothesized rule only through placements already observed, so its history
    always equals the learner's and its heard list equals uttered.
    """

    posterior: Distribution
    grid: tuple[TeacherHypothesis, ...]
    replays: tuple[TeacherState, ...]
    history: tuple[CardPlay, ...]
    uttered: tuple[Utterance, ...]
    config: LearnerConfig

    def cell(self, rule_id: int, hypothesis_index: int) -> float:
        return self.posterior[hypothesis_index * NUM_RULES + rule_id]


def init_learner(
    grid: Optional[Sequence[TeacherHypothesis]] = None,
    config: Optional[LearnerConfig] = None,
    knowledge_prior: Optional[Sequence[float]] = None,
) -> JointBelief:
    """Uniform joint posterior with fresh, rule-agnostic teacher replays."""
    grid = tuple(grid) if grid is not None else default_grid()
    config = config if config is not None else LearnerConfig()
    replays = tuple(init_teacher(h, None, knowledge_prior) for h in grid)
    return JointBelief(uniform(NUM_RULES * len(grid)), grid, replays, (), (), config)


def _joint_view(belief: JointBelief) -> np.ndarray:
    return belief.posterior.probs.reshape(len(belief.grid), NUM_RULES)


def rule_marginal(belief: JointBelief) -> Distribution:
    return Distribution(_joint_view(belief).sum(axis=0))


def hypothesis_marginal(belief: JointBelief) -> Distribution:
    return Distribution(_joint_view(belief).sum(axis=1))


def conditional_rule_marginal(belief: JointBelief, hypothesis_index: int) -> Optional[Distribution]:
    """Rule posterior conditioned on one hypothesis; None if its mass is zero."""
    cells = _joint_view(belief)[hypothesis_index]
    total = cells.sum()
    if total <= 0.0:
        return None
    return Distribution(cells / total)


def _unplayed_ids(history: Iterable[CardPlay]) -> list[int]:
    played = {play.card.id for play in history}
    return [i for i in range(NUM_CARDS) if i not in played]


def observe_card(belief: JointBelief, play: CardPlay) -> JointBelief:
    """Joint Bayes update on one observed play.

    Cell (r, h) is weighted by [rule r sorts the card onto the observed pile]
    times P(card | h's replayed teacher); every replay then advances with the
    play. Raises ZeroEvidence when no cell is consistent.
    """
    if play.round != len(belief.history) + 1:
        raise ValueError(f"expected round {len(belief.history) + 1}, got {play.round}")
    unplayed = _unplayed_ids(belief.history)
    if play.card.id not in unplayed:
        raise ValueError(f"card {play.card.id} was already played")
    position = unplayed.index(play.card.id)

    # Attentive card weights share one score vector: the expected-information-
    # gain scores depend only on the replayed posterior, identical across
    # replays, so hypotheses differ by their softmax temperature alone.
    card_likelihood = np.empty(len(belief.grid))
    scores: Optional[np.ndarray] = None
    weights_by_temp: dict[float, np.ndarray] = {}
    for k, state in enumerate(belief.replays):
        if state.hypothesis.kind is TeacherKind.SYSTEMATIC:
            card_likelihood[k] = 1.0 if play.card.id == unplayed[0] else 0.0
        else:
            temp = state.hypothesis.card_temperature
            if temp not in weights_by_temp:
                if scores is None:
                    scores = attentive_card_scores(
                        state.simulated_learner_posterior.probs, unplayed
                    )
                weights_by_temp[temp] = softmax_weights(scores, temp)
            card_likelihood[k] = weights_by_temp[temp][position]

    consistency = consistency_row(play.card.id, play.pile)
    joint_likelihood = (card_likelihood[:, None] * consistency[None, :]).ravel()
    posterior = bayes_update(belief.posterior, joint_likelihood)

    advanced_posterior = bayes_update(belief.replays[0].simulated_learner_posterior, consistency)
    replays = tuple(
        replace(
            state,
            simulated_learner_posterior=advanced_posterior,
            history=state.history + (play,),
        )
        for state in belief.replays
    )
    return replace(belief, posterior=posterior, replays=replays, history=belief.history + (play,))


def confidence(belief: JointBelief, assertion: Assertion) -> float:
    """Rule-marginal mass of rules whose dimension owns the asserted value
    and map it to the asserted pile."""
    conf = assertion_confidences(rule_marginal(belief).probs)
    return float(conf[ASSERTIONS.index(assertion)])


def select_ce(c: float, config: LearnerConfig) -> CE:
    """The confidence expression for a confidence level (left-closed bands)."""
    if not (0.0 <= c <= 1.0):
        raise ValueError("confidence must be in [0, 1]")
    if c >= config.know_threshold:
        return CE.KNOW
    if c >= config.think_threshold:
        return CE.THINK
    return CE.UNSURE


def _teacher_mediated_gain(
    state: TeacherState, rule_probs: np.ndarray, unplayed_ids: Sequence[int]
) -> float:
    """Expected information gain of the teacher's next play for a learner
    holding rule_probs, with the play drawn from this teacher's card policy.

    Outcomes are (card, pile) pairs; the card choice is hypothesis-driven and
    the pile is rule-determined.
    """
    weights = card_choice_weights(state, unplayed_ids)
    onehot = pile_onehot_table()[np.asarray(unplayed_ids, dtype=np.intp)]
    outcome_matrix = (onehot * weights[:, None, None]).transpose(0, 2, 1).reshape(-1, NUM_RULES)
    return expected_info_gain(Distribution(rule_probs), outcome_matrix)


def select_feedback(
    belief: JointBelief, unplayed: Iterable[Card], config: Optional[LearnerConfig] = None
) -> Utterance:
    """Choose the next utterance.

    Baseline: the most confident assertion, bare, ties broken by the fixed
    assertion order. Teacher-aware: argmax over the 81 CE-bearing utterances
    of the hypothesis-weighted information gain through the modeled teacher
    plus calibration_weight * (1 - |confidence - CE anchor|), same tie order.
    """
    config = config if config is not None else belief.config
    marginal = rule_marginal(belief).probs
    conf = assertion_confidences(marginal)
    if config.mode is LearnerMode.BASELINE:
        return make_utterance(None, ASSERTIONS[int(np.argmax(conf))])

    anchors = np.array([CE_ANCHORS[ce] for ce in CE_ORDER])
    calibration = 1.0 - np.abs(conf[:, None] - anchors[None, :])
    utility = config.calibration_weight * calibration.ravel()

    unplayed_ids = sorted(card.id for card in unplayed)
    if unplayed_ids:
        # Feedback moves only the teacher's trust in the learner, never its
        # simulated learner, so the one-step card policy after hearing any
        # utterance is the pre-utterance policy: one gain per hypothesis.
        hyp_marginal = hypothesis_marginal(belief).probs
        expected_gain = 0.0
        for k, state in enumerate(belief.replays):
            if hyp_marginal[k] <= 0.0:
                continue
            expected_gain += hyp_marginal[k] * _teacher_mediated_gain(state, marginal, unplayed_ids)
        utility = utility + expected_gain

    best = int(np.argmax(utility))
    return make_utterance(CE_ORDER[best % len(CE_ORDER)], ASSERTIONS[best // len(CE_ORDER)])


def record_utterance(belief: JointBelief, u: Utterance) -> JointBelief:
    """Append the emitted utterance and let every replayed teacher hear it."""
    replays = tuple(interpret_feedback(state, u) for state in belief.replays)
    return replace(belief, replays=replays, uttered=belief.uttered + (u,))


def has_converged(belief: JointBelief, config: Optional[LearnerConfig] = None) -> bool:
    config = config if config is not None else belief.config
    return rule_marginal(belief).max() >= config.convergence_threshold


def map_rule(belief: JointBelief) -> Rule:
    """Maximum a posteriori rule; ties broken by rule id."""
    return enumerate_rules()[rule_marginal(belief).argmax()]


def map_teacher_hypothesis(belief: JointBelief) -> int:
    """Grid id of the maximum a posteriori hypothesis; ties by grid id."""
    return belief.grid[hypothesis_marginal(belief).argmax()].id


def diagnostics(belief: JointBelief) -> dict:
    """JSON-ready view of the belief internals for logs and debugging."""
    marginal = rule_marginal(belief)
    conf = assertion_confidences(marginal.probs)
    return {
        "rule_marginal": marginal.as_list(),
        "hypothesis_marginal": hypothesis_marginal(belief).as_list(),
        "confidences": [
            {"value": a.value.value, "pile": int(a.pile), "confidence": float(c)}
            for a, c in zip(ASSERTIONS, conf)
        ],
        "map_rule_id": map_rule(belief).id,
        "map_hypothesis_id": map_teacher_hypothesis(belief),
        "converged": has_converged(belief),
        "rounds": len(belief.history),
    }


def replay_history(
    plays: Sequence[CardPlay],
    utterances: Sequence[Utterance],
    grid: Optional[Sequence[TeacherHypothesis]] = None,
    config: Optional[LearnerConfig] = None,
    knowledge_prior: Optional[Sequence[float]] = None,
) -> JointBelief:
    """Rebuild a belief by folding logged plays and utterances in order.

    utterances may be one shorter than plays (a round in flight); the result
    is bit-identical to the live state, which makes logs replayable.
    """
    if not (len(plays) - 1 <= len(utterances) <= len(plays)):
        raise ValueError("need one utterance per play, except possibly the last")
    belief = init_learner(grid, config, knowledge_prior)
    for i, play in enumerate(plays):
        belief = observe_card(belief, play)
        if i < len(utterances):
            belief = record_utterance(belief, utterances[i])
    return belief
