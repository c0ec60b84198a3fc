"""Finite discrete distributions and the updates every agent model shares.

Distributions are immutable, always normalized, and keep zero-weight entries
in place so hypothesis indices stay stable. Entropy and information are in
bits. Normalized probabilities below PROB_FLOOR are clamped to exactly zero,
which keeps support monotonicity testable instead of leaving phantom mass to
rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

PROB_FLOOR = 1e-15
SUM_TOLERANCE = 1e-9


class ZeroEvidence(Exception):
    """An observation with zero probability under every hypothesis."""


class DivergentSupport(Exception):
    """KL divergence requested where p has mass and q has none."""


@dataclass(frozen=True, slots=True)
class SoftmaxParams:
    """Temperature of a noisily rational choice: exp(score / temperature).

    temperature -> 0 approaches perfectly rational argmax choice,
    temperature -> inf approaches the uniform (perfectly irrational) choice.
    """

    temperature: float

    def __post_init__(self) -> None:
        if not (self.temperature > 0.0 and np.isfinite(self.temperature)):
            raise ValueError("temperature must be positive and finite")


class Distribution:
    """A normalized probability vector over an indexed hypothesis set."""

    __slots__ = ("_probs",)

    def __init__(self, probs: Union[Sequence[float], np.ndarray]):
        arr = np.asarray(probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("a distribution needs a non-empty 1-d weight vector")
        if arr.min() < 0.0:
            raise ValueError("probabilities must be non-negative")
        if abs(float(arr.sum()) - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"probabilities must sum to 1, got {arr.sum()!r}")
        arr = arr.copy()
        arr.flags.writeable = False
        self._probs = arr

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    def __len__(self) -> int:
        return int(self._probs.size)

    def __getitem__(self, index: int) -> float:
        return float(self._probs[index])

    def __iter__(self):
        return iter(self._probs.tolist())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        return np.array_equal(self._probs, other._probs)

    def __repr__(self) -> str:
        return f"Distribution({self._probs.tolist()!r})"

    def argmax(self) -> int:
        """Index of the maximal probability; first index wins ties."""
        return int(np.argmax(self._probs))

    def max(self) -> float:
        return float(self._probs.max())

    def support(self) -> np.ndarray:
        return np.flatnonzero(self._probs > 0.0)

    def as_list(self) -> list[float]:
        return [float(p) for p in self._probs]


def uniform(n: int) -> Distribution:
    if n < 1:
        raise ValueError("support size must be at least 1")
    return Distribution(np.full(n, 1.0 / n))


def point_mass(n: int, index: int) -> Distribution:
    probs = np.zeros(n)
    probs[index] = 1.0
    return Distribution(probs)


def normalize_weights(arr: np.ndarray) -> np.ndarray:
    """Raw normalization with the sub-floor clamp; shared by every update."""
    total = float(arr.sum())
    if total <= 0.0:
        raise ValueError("weights sum to zero")
    probs = arr / total
    floored = np.where(probs < PROB_FLOOR, 0.0, probs)
    return floored / floored.sum()


def normalized(weights: Union[Sequence[float], np.ndarray]) -> Distribution:
    """Normalize non-negative weights, clamping sub-floor mass to exact zero."""
    arr = np.asarray(weights, dtype=np.float64)
    if arr.min() < 0.0:
        raise ValueError("weights must be non-negative")
    return Distribution(normalize_weights(arr))


def bayes_update(prior: Distribution, likelihood: Union[Sequence[float], np.ndarray]) -> Distribution:
    """Posterior proportional to prior * likelihood.

    Raises ZeroEvidence when every product is zero; eliminated hypotheses
    (prior mass zero) never regain mass.
    """
    lik = np.asarray(likelihood, dtype=np.float64)
    if lik.shape != prior.probs.shape:
        raise ValueError("likelihood length must match the prior")
    if lik.min() < 0.0:
        raise ValueError("likelihoods must be non-negative")
    products = prior.probs * lik
    if float(products.max()) <= 0.0:
        raise ZeroEvidence("observation impossible under every hypothesis")
    return normalized(products)


def _entropy_bits(probs: np.ndarray) -> float:
    positive = probs[probs > 0.0]
    return float(-(positive * np.log2(positive)).sum())


def entropy(d: Distribution) -> float:
    """Shannon entropy in bits; 0 log 0 treated as 0."""
    return _entropy_bits(d.probs)


def expected_info_gain(
    prior: Distribution, outcome_likelihoods: Union[Sequence[Sequence[float]], np.ndarray]
) -> float:
    """Expected reduction of the prior's entropy after observing one outcome.

    ``outcome_likelihoods[o][h]`` is the (possibly unnormalized) weight of
    outcome o under hypothesis h; each hypothesis column is normalized over
    outcomes. Outcomes with zero marginal probability contribute zero.
    """
    lik = np.asarray(outcome_likelihoods, dtype=np.float64)
    if lik.ndim != 2 or lik.shape[1] != len(prior):
        raise ValueError("need an (outcomes x hypotheses) matrix matching the prior")
    if lik.min() < 0.0:
        raise ValueError("likelihoods must be non-negative")

    column_totals = lik.sum(axis=0)
    safe_totals = np.where(column_totals > 0.0, column_totals, 1.0)
    joint = (lik / safe_totals) * prior.probs
    outcome_marginal = joint.sum(axis=1)
    total = float(outcome_marginal.sum())
    if total <= 0.0:
        raise ValueError("no outcome has positive probability under the prior")

    # H(posterior | o) = log2 m_o - sum_h joint log2 joint / m_o, per outcome.
    with np.errstate(divide="ignore", invalid="ignore"):
        joint_log = np.where(joint > 0.0, joint * np.log2(joint), 0.0).sum(axis=1)
    mass = outcome_marginal
    safe_mass = np.where(mass > 0.0, mass, 1.0)
    posterior_entropy = np.where(mass > 0.0, np.log2(safe_mass) - joint_log / safe_mass, 0.0)
    expected_posterior = float(((mass / total) * posterior_entropy).sum())
    return _entropy_bits(prior.probs) - expected_posterior


def softmax_weights(scores: np.ndarray, temperature: float) -> np.ndarray:
    """Raw Boltzmann weights, max-shifted for overflow safety."""
    shifted = (scores - scores.max()) / temperature
    return normalize_weights(np.exp(shifted))


def softmax_policy(scores: Union[Sequence[float], np.ndarray], params: SoftmaxParams) -> Distribution:
    """Boltzmann choice probabilities: p_i proportional to exp(score_i / T)."""
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("scores must be non-empty")
    if not np.isfinite(arr).all():
        raise ValueError("scores must be finite")
    return Distribution(softmax_weights(arr, params.temperature))


def kl_divergence(p: Distribution, q: Distribution) -> float:
    """KL(p || q) in bits; DivergentSupport when p has mass outside q's."""
    if len(p) != len(q):
        raise ValueError("distributions must share a support size")
    pp, qq = p.probs, q.probs
    if np.any((pp > 0.0) & (qq <= 0.0)):
        raise DivergentSupport("p puts mass where q has none")
    mask = pp > 0.0
    return float((pp[mask] * np.log2(pp[mask] / qq[mask])).sum())
