"""Cards, piles, and sorting rules for the three-pile card game.

Everything here is an immutable value; the deck and rule enumerations are
the fixed vocabulary every other module builds on.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from functools import lru_cache
from itertools import permutations
from typing import Iterable, Union

import numpy as np


class Color(Enum):
    RED = "Red"
    BLUE = "Blue"
    GREEN = "Green"


class Shape(Enum):
    DIAMOND = "Diamond"
    OVAL = "Oval"
    SQUIGGLE = "Squiggle"


class Count(Enum):
    ONE = "One"
    TWO = "Two"
    THREE = "Three"


class Pile(IntEnum):
    PILE1 = 1
    PILE2 = 2
    PILE3 = 3

    @property
    def index(self) -> int:
        return self.value - 1


class Dimension(Enum):
    COLOR = "Color"
    SHAPE = "Shape"
    COUNT = "Count"


FeatureValue = Union[Color, Shape, Count]

PILES: tuple[Pile, ...] = tuple(Pile)
DIMENSIONS: tuple[Dimension, ...] = tuple(Dimension)
DIMENSION_VALUES: dict[Dimension, tuple[FeatureValue, ...]] = {
    Dimension.COLOR: tuple(Color),
    Dimension.SHAPE: tuple(Shape),
    Dimension.COUNT: tuple(Count),
}
# All nine feature values in dimension declaration order; the global index of
# a value is 3 * dimension_index + value_index.
FEATURE_VALUES: tuple[FeatureValue, ...] = tuple(Color) + tuple(Shape) + tuple(Count)

_VALUE_DIMENSION: dict[FeatureValue, Dimension] = {
    value: dim for dim, values in DIMENSION_VALUES.items() for value in values
}
_VALUE_INDEX: dict[FeatureValue, int] = {
    value: i for values in DIMENSION_VALUES.values() for i, value in enumerate(values)
}
_VALUE_BY_NAME: dict[str, FeatureValue] = {value.value: value for value in FEATURE_VALUES}

NUM_CARDS = 27
NUM_RULES = 18


def value_dimension(value: FeatureValue) -> Dimension:
    return _VALUE_DIMENSION[value]


def value_index(value: FeatureValue) -> int:
    """Index of a value inside its own dimension (declaration order)."""
    return _VALUE_INDEX[value]


def value_by_name(name: str) -> FeatureValue:
    try:
        return _VALUE_BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown feature value {name!r}") from None


@dataclass(frozen=True, slots=True)
class Card:
    """One of the 27 (color, shape, count) combinations.

    id = 9 * color_index + 3 * shape_index + count_index.
    """

    color: Color
    shape: Shape
    count: Count
    id: int

    def value_on(self, dimension: Dimension) -> FeatureValue:
        if dimension is Dimension.COLOR:
            return self.color
        if dimension is Dimension.SHAPE:
            return self.shape
        return self.count


@dataclass(frozen=True, slots=True)
class Rule:
    """A sorting rule: one feature dimension and a bijection value -> pile.

    ``piles[i]`` is the pile for the dimension's i-th value in declaration
    order; the bijection uses each pile exactly once.
    """

    dimension: Dimension
    piles: tuple[Pile, Pile, Pile]
    id: int

    def pile_for(self, value: FeatureValue) -> Pile:
        if value_dimension(value) is not self.dimension:
            raise ValueError(f"{value} is not a {self.dimension.value} value")
        return self.piles[value_index(value)]

    @property
    def mapping(self) -> dict[FeatureValue, Pile]:
        return dict(zip(DIMENSION_VALUES[self.dimension], self.piles))


@dataclass(frozen=True, slots=True)
class CardPlay:
    """A card placed on a pile in a given round (rounds start at 1)."""

    card: Card
    pile: Pile
    round: int

    def __post_init__(self) -> None:
        if self.round < 1:
            raise ValueError("round indices start at 1")


@lru_cache(maxsize=1)
def deck() -> tuple[Card, ...]:
    """All 27 cards, sorted by id."""
    cards = []
    for ci, color in enumerate(Color):
        for si, shape in enumerate(Shape):
            for ni, count in enumerate(Count):
                cards.append(Card(color, shape, count, 9 * ci + 3 * si + ni))
    return tuple(cards)


@lru_cache(maxsize=1)
def enumerate_rules() -> tuple[Rule, ...]:
    """All 18 rules: dimensions in declaration order, pile permutations in
    lexicographic order within each dimension."""
    rules = []
    for dim in DIMENSIONS:
        for perm in permutations(PILES):
            rules.append(Rule(dim, perm, len(rules)))
    return tuple(rules)


def sort_card(rule: Rule, card: Card) -> Pile:
    """The pile the rule assigns to the card."""
    return rule.pile_for(card.value_on(rule.dimension))


def consistent_rules(history: Iterable[CardPlay]) -> frozenset[int]:
    """Ids of every rule that sorts the whole history as observed.

    Empty when the history is self-contradictory; callers decide policy.
    """
    remaining = set(range(NUM_RULES))
    rules = enumerate_rules()
    for play in history:
        remaining = {r for r in remaining if sort_card(rules[r], play.card) is play.pile}
        if not remaining:
            break
    return frozenset(remaining)


# ---------------------------------------------------------------------------
# Canonical JSON encodings (the wire and log vocabulary for all modules).


def card_to_json(card: Card) -> dict:
    return {
        "color": card.color.value,
        "shape": card.shape.value,
        "count": card.count.value,
        "id": card.id,
    }


def card_from_json(data: dict) -> Card:
    card = deck()[int(data["id"])]
    expected = (data["color"], data["shape"], data["count"])
    actual = (card.color.value, card.shape.value, card.count.value)
    if expected != actual:
        raise ValueError(f"card id {data['id']} does not match features {expected}")
    return card


def rule_to_json(rule: Rule) -> dict:
    return {
        "dimension": rule.dimension.value,
        "mapping": {value.value: int(pile) for value, pile in rule.mapping.items()},
        "id": rule.id,
    }


def rule_from_json(data: dict) -> Rule:
    rule = enumerate_rules()[int(data["id"])]
    mapping = {value_by_name(k): Pile(int(v)) for k, v in data["mapping"].items()}
    if rule.dimension.value != data["dimension"] or rule.mapping != mapping:
        raise ValueError(f"rule id {data['id']} does not match its mapping")
    return rule


def play_to_json(play: CardPlay) -> dict:
    return {"card_id": play.card.id, "pile": int(play.pile), "round": play.round}


def play_from_json(data: dict) -> CardPlay:
    return CardPlay(deck()[int(data["card_id"])], Pile(int(data["pile"])), int(data["round"]))


# ---------------------------------------------------------------------------
# Precomputed lookup tables for the numeric modules.


@lru_cache(maxsize=1)
def pile_index_table() -> np.ndarray:
    """(27, 18) int8 table: pile index 0..2 of card c under rule r."""
    table = np.empty((NUM_CARDS, NUM_RULES), dtype=np.int8)
    for card in deck():
        for rule in enumerate_rules():
            table[card.id, rule.id] = sort_card(rule, card).index
    table.flags.writeable = False
    return table


@lru_cache(maxsize=1)
def pile_onehot_table() -> np.ndarray:
    """(27, 18, 3) float64 one-hot of pile_index_table."""
    idx = pile_index_table()
    onehot = np.zeros((NUM_CARDS, NUM_RULES, 3), dtype=np.float64)
    cards, rules = np.meshgrid(np.arange(NUM_CARDS), np.arange(NUM_RULES), indexing="ij")
    onehot[cards, rules, idx.astype(np.intp)] = 1.0
    onehot.flags.writeable = False
    return onehot


def consistency_row(card_id: int, pile: Pile) -> np.ndarray:
    """(18,) indicator over rules that place this card on this pile."""
    return pile_onehot_table()[card_id, :, pile.index]
