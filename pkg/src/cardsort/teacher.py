"""The simulated teacher: its internal model of the learner, its card policy,
and how it reads the learner's feedback.

A teacher is parameterized by a hypothesis cell: either attentive, with a
card-selection temperature and the temperature it assumes when interpreting
the learner's utterances, or systematic, playing the deck in id order and
ignoring feedback entirely. The same state type is replayed inside the
learner, one copy per hypothesis, to score how likely each observed card
choice was.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .beliefs import (
    Distribution,
    SoftmaxParams,
    bayes_update,
    softmax_policy,
    softmax_weights,
    uniform,
)
from .cards import (
    DIMENSIONS,
    DIMENSION_VALUES,
    FEATURE_VALUES,
    NUM_RULES,
    PILES,
    Card,
    CardPlay,
    FeatureValue,
    Pile,
    Rule,
    consistency_row,
    enumerate_rules,
    pile_onehot_table,
    sort_card,
    value_by_name,
    value_dimension,
)


class InconsistentPlay(Exception):
    """A card placed on a pile that contradicts the teacher's rule."""


class CE(Enum):
    """Confidence expression prepended to an assertion."""

    UNSURE = "unsure"
    THINK = "think"
    KNOW = "know"


CE_ORDER: tuple[CE, ...] = (CE.UNSURE, CE.THINK, CE.KNOW)
CE_PREFIX: dict[CE, str] = {
    CE.UNSURE: "I'm unsure if",
    CE.THINK: "I think",
    CE.KNOW: "I know",
}
# Confidence each expression is anchored to: interior points of the learner's
# CE bands (think threshold 0.5, know threshold 0.9).
CE_ANCHORS: dict[CE, float] = {CE.UNSURE: 0.25, CE.THINK: 0.70, CE.KNOW: 0.97}


@dataclass(frozen=True, slots=True)
class Assertion:
    """A structured claim that one feature value belongs to one pile."""

    value: FeatureValue
    pile: Pile

    @property
    def dimension(self):
        return value_dimension(self.value)


# Fixed assertion order: dimension, value index, pile index. This is the tie
# order for every feedback argmax.
ASSERTIONS: tuple[Assertion, ...] = tuple(
    Assertion(value, pile)
    for dim in DIMENSIONS
    for value in DIMENSION_VALUES[dim]
    for pile in PILES
)
_ASSERTION_INDEX: dict[Assertion, int] = {a: i for i, a in enumerate(ASSERTIONS)}
NUM_ASSERTIONS = len(ASSERTIONS)
NUM_CE_UTTERANCES = NUM_ASSERTIONS * len(CE_ORDER)


def render_utterance(ce: Optional[CE], assertion: Assertion) -> str:
    statement = f"{assertion.value.value}s belong in Pile {int(assertion.pile)}."
    if ce is None:
        return statement
    return f"{CE_PREFIX[ce]} {statement}"


@dataclass(frozen=True, slots=True)
class Utterance:
    """One unit of learner feedback: an optional CE plus an assertion."""

    ce: Optional[CE]
    assertion: Assertion
    rendered: str


def make_utterance(ce: Optional[CE], assertion: Assertion) -> Utterance:
    return Utterance(ce, assertion, render_utterance(ce, assertion))


def utterance_index(u: Utterance) -> int:
    """Index into the 81 CE-bearing utterances (assertion-major, CE-minor)."""
    if u.ce is None:
        raise ValueError("bare utterances are outside the CE utterance set")
    return _ASSERTION_INDEX[u.assertion] * len(CE_ORDER) + CE_ORDER.index(u.ce)


def utterance_to_json(u: Utterance) -> dict:
    return {
        "ce": u.ce.value if u.ce is not None else None,
        "value": u.assertion.value.value,
        "pile": int(u.assertion.pile),
        "text": u.rendered,
    }


def utterance_from_json(data: dict) -> Utterance:
    ce = CE(data["ce"]) if data.get("ce") is not None else None
    assertion = Assertion(value_by_name(data["value"]), Pile(int(data["pile"])))
    return make_utterance(ce, assertion)


@lru_cache(maxsize=1)
def assertion_support() -> np.ndarray:
    """(27, 18) indicator: rule r supports assertion a (r owns a's dimension
    and maps a's value to a's pile). Each assertion is backed by exactly two
    rules."""
    support = np.zeros((NUM_ASSERTIONS, NUM_RULES), dtype=np.float64)
    for i, assertion in enumerate(ASSERTIONS):
        for rule in enumerate_rules():
            if rule.dimension is assertion.dimension and rule.pile_for(assertion.value) is assertion.pile:
                support[i, rule.id] = 1.0
    support.flags.writeable = False
    return support


def assertion_confidences(rule_probs: np.ndarray) -> np.ndarray:
    """(27,) confidence of each assertion under a distribution over rules."""
    return assertion_support() @ rule_probs


# ---------------------------------------------------------------------------
# Teacher hypotheses and state.


class TeacherKind(Enum):
    ATTENTIVE = "attentive"
    SYSTEMATIC = "systematic"


@dataclass(frozen=True, slots=True)
class TeacherHypothesis:
    """One cell of the teacher-model grid.

    card_temperature governs how noisily the teacher picks informative cards;
    feedback_temperature is the temperature the teacher assumes when reading
    the learner's utterances. Both are unused for systematic teachers.
    """

    kind: TeacherKind
    card_temperature: Optional[float]
    feedback_temperature: Optional[float]
    id: int

    def __post_init__(self) -> None:
        if self.kind is TeacherKind.ATTENTIVE:
            for name, temp in (
                ("card_temperature", self.card_temperature),
                ("feedback_temperature", self.feedback_temperature),
            ):
                if temp is None or not (temp > 0.0 and np.isfinite(temp)):
                    raise ValueError(f"attentive teachers need a positive finite {name}")


@lru_cache(maxsize=1)
def default_grid() -> tuple[TeacherHypothesis, ...]:
    """Attentive card temperatures {0.1, 1, 10} x feedback temperatures
    {0.2, 5}, plus one systematic teacher: 7 hypotheses."""
    grid = []
    for card_temp in (0.1, 1.0, 10.0):
        for feedback_temp in (0.2, 5.0):
            grid.append(
                TeacherHypothesis(TeacherKind.ATTENTIVE, card_temp, feedback_temp, len(grid))
            )
    grid.append(TeacherHypothesis(TeacherKind.SYSTEMATIC, None, None, len(grid)))
    return tuple(grid)


def hypothesis_to_json(h: TeacherHypothesis) -> dict:
    return {
        "kind": h.kind.value,
        "card_temperature": h.card_temperature,
        "feedback_temperature": h.feedback_temperature,
        "id": h.id,
    }


def hypothesis_from_json(data: dict, id: Optional[int] = None) -> TeacherHypothesis:
    kind = TeacherKind(data["kind"])
    card_temp = data.get("card_temperature")
    feedback_temp = data.get("feedback_temperature")
    return TeacherHypothesis(
        kind,
        float(card_temp) if card_temp is not None else None,
        float(feedback_temp) if feedback_temp is not None else None,
        int(data["id"]) if id is None else id,
    )


# Learner-knowledge types the teacher reasons over: a rational learner tracks
# the public card history; a confused one is stuck at the uniform prior.
RATIONAL, CONFUSED = 0, 1
KNOWLEDGE_TYPES = ("rational", "confused")


@dataclass(frozen=True, slots=True)
class TeacherState:
    """Immutable teacher-side state.

    simulated_learner_posterior is the teacher's deterministic replay of a
    plain Bayesian learner on the public card history; utterances never touch
    it, they only move knowledge_belief. true_rule is None inside learner-side
    replays, where the rule is known only through the observed placements.
    """

    hypothesis: TeacherHypothesis
    true_rule: Optional[Rule]
    simulated_learner_posterior: Distribution
    knowledge_belief: Distribution
    history: tuple[CardPlay, ...] = ()
    heard: tuple[Utterance, ...] = ()


def init_teacher(
    hypothesis: TeacherHypothesis,
    true_rule: Optional[Rule],
    knowledge_prior: Optional[Sequence[float]] = None,
) -> TeacherState:
    prior = Distribution(knowledge_prior) if knowledge_prior is not None else uniform(2)
    if len(prior) != 2:
        raise ValueError("knowledge prior covers exactly the two learner types")
    return TeacherState(hypothesis, true_rule, uniform(NUM_RULES), prior)


def attentive_card_scores(rule_probs: np.ndarray, unplayed_ids: Sequence[int]) -> np.ndarray:
    """Expected information gain of playing each card, for a learner holding
    rule_probs. With rule-determined placements this is the entropy of the
    pile distribution the card induces."""
    ids = np.asarray(unplayed_ids, dtype=np.intp)
    pile_mass = np.tensordot(pile_onehot_table()[ids], rule_probs, axes=([1], [0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pile_mass > 0.0, pile_mass * np.log2(pile_mass), 0.0)
    return -terms.sum(axis=1)


def card_choice_weights(state: TeacherState, unplayed_ids: Sequence[int]) -> np.ndarray:
    """Probability of the teacher picking each unplayed card (ascending id).

    This is the card marginal of card_policy; it depends on the hypothesis and
    the simulated learner, never on the true rule.
    """
    if len(unplayed_ids) == 0:
        raise ValueError("no cards left to play")
    if state.hypothesis.kind is TeacherKind.SYSTEMATIC:
        weights = np.zeros(len(unplayed_ids))
        weights[int(np.argmin(unplayed_ids))] = 1.0
        return weights
    scores = attentive_card_scores(state.simulated_learner_posterior.probs, unplayed_ids)
    return softmax_weights(scores, state.hypothesis.card_temperature)


def card_policy(
    state: TeacherState, unplayed: Iterable[Card]
) -> tuple[tuple[tuple[Card, Pile], ...], Distribution]:
    """Distribution over the teacher's next play.

    The pile is always the true rule's placement; only the card choice is
    noisy. Returns the candidate plays (ascending card id) and their
    probabilities.
    """
    if state.true_rule is None:
        raise ValueError("card_policy needs a teacher that knows the rule")
    cards = sorted(unplayed, key=lambda c: c.id)
    if not cards:
        raise ValueError("no cards left to play")
    weights = card_choice_weights(state, [c.id for c in cards])
    plays = tuple((card, sort_card(state.true_rule, card)) for card in cards)
    return plays, Distribution(weights)


def utterance_likelihoods(state: TeacherState) -> tuple[np.ndarray, np.ndarray]:
    """P(utterance | learner type) over the 81 CE-bearing utterances.

    The teacher scores each utterance by how well its CE anchor matches the
    assertion's confidence under the type's belief (the simulated posterior
    for a rational learner, uniform for a confused one), then softmaxes the
    scores at its assumed feedback temperature. Both tables sum to 1.
    """
    if state.hypothesis.kind is not TeacherKind.ATTENTIVE:
        raise ValueError("only attentive teachers interpret feedback")
    anchors = np.array([CE_ANCHORS[ce] for ce in CE_ORDER])
    params = SoftmaxParams(state.hypothesis.feedback_temperature)
    tables = []
    for belief in (state.simulated_learner_posterior.probs, np.full(NUM_RULES, 1.0 / NUM_RULES)):
        conf = assertion_confidences(belief)
        scores = 1.0 - np.abs(conf[:, None] - anchors[None, :])
        tables.append(softmax_policy(scores.ravel(), params).probs)
    return tables[0], tables[1]


def interpret_feedback(state: TeacherState, u: Utterance) -> TeacherState:
    """Record the utterance and, for attentive teachers hearing a CE-bearing
    utterance, Bayes-update the belief over learner-knowledge types.

    Systematic teachers ignore feedback; bare utterances carry no calibration
    signal, so they update nothing for any teacher kind. The simulated learner
    posterior is never touched here.
    """
    heard = state.heard + (u,)
    if state.hypothesis.kind is TeacherKind.SYSTEMATIC or u.ce is None:
        return replace(state, heard=heard)
    rational, confused = utterance_likelihoods(state)
    idx = utterance_index(u)
    likelihood = np.array([rational[idx], confused[idx]])
    belief = bayes_update(state.knowledge_belief, likelihood)
    return replace(state, knowledge_belief=belief, heard=heard)


def observe_own_play(state: TeacherState, play: CardPlay) -> TeacherState:
    """Advance the teacher's simulated learner with its own play."""
    if state.true_rule is not None and sort_card(state.true_rule, play.card) is not play.pile:
        raise InconsistentPlay(
            f"card {play.card.id} belongs on pile {int(sort_card(state.true_rule, play.card))},"
            f" not {int(play.pile)}"
        )
    posterior = bayes_update(
        state.simulated_learner_posterior, consistency_row(play.card.id, play.pile)
    )
    return replace(state, simulated_learner_posterior=posterior, history=state.history + (play,))


def believes_learner_knows(
    state: TeacherState, knowledge_threshold: float, trust_threshold: float
) -> bool:
    """Whether the teacher judges that the learner has the rule.

    Attentive teachers require both a confident simulated learner and trust
    that the learner is rational; systematic teachers use only the first
    clause.
    """
    if state.simulated_learner_posterior.max() < knowledge_threshold:
        return False
    if state.hypothesis.kind is TeacherKind.SYSTEMATIC:
        return True
    return state.knowledge_belief[RATIONAL] >= trust_threshold
