"""Seeded episode loop and batch experiment runner.

An episode alternates: the teacher samples a play, the learner updates and
answers with an utterance, the teacher interprets it. Every episode emits a
JSONL event trace that replays to bit-identical state. Randomness comes from
counter-based Philox streams keyed by the episode seed: one stream for the
teacher's card sampling, one (jumped) stream for setup choices such as rule
randomization, so logs are reproducible event-by-event.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .beliefs import ZeroEvidence
from .cards import (
    NUM_CARDS,
    CardPlay,
    Pile,
    Rule,
    deck,
    enumerate_rules,
    play_from_json,
    rule_from_json,
    rule_to_json,
)
from .learner import (
    JointBelief,
    LearnerConfig,
    config_from_json,
    config_to_json,
    has_converged,
    hypothesis_marginal,
    init_learner,
    map_rule,
    map_teacher_hypothesis,
    observe_card,
    record_utterance,
    rule_marginal,
    select_feedback,
)
from .teacher import (
    InconsistentPlay,
    TeacherHypothesis,
    TeacherState,
    believes_learner_knows,
    card_policy,
    default_grid,
    hypothesis_from_json,
    hypothesis_to_json,
    init_teacher,
    interpret_feedback,
    observe_own_play,
    utterance_from_json,
    utterance_to_json,
)

REPLAY_TOLERANCE = 1e-12


class UnmatchedSeeds(Exception):
    """Paired comparison requested over configs whose seed sets differ."""


class TerminationPolicy(Enum):
    LEARNER_CONVERGES = "learner_converges"
    TEACHER_BELIEVES_KNOWN = "teacher_believes_known"
    DECK_EXHAUSTED = "deck_exhausted"


@dataclass(frozen=True, slots=True)
class EpisodeConfig:
    """Everything that determines an episode given its seed."""

    seed: int
    true_teacher: TeacherHypothesis
    true_rule: Optional[Rule] = None  # None -> seeded random rule
    learner: LearnerConfig = LearnerConfig()
    grid: tuple[TeacherHypothesis, ...] = default_grid()
    termination: TerminationPolicy = TerminationPolicy.TEACHER_BELIEVES_KNOWN
    knowledge_threshold: float = 0.95
    trust_threshold: float = 0.8
    trust_prior: tuple[float, float] = (0.5, 0.5)
    name: str = "episode"


@dataclass(frozen=True, slots=True)
class EpisodeResult:
    seed: int
    rounds: int
    converged: bool
    learner_map_rule_correct: bool
    teacher_map_correct: bool
    true_hypothesis_posterior_trace: tuple[float, ...]
    true_hypothesis_prior: float
    misunderstanding_events: int
    false_stop: bool
    termination: str
    map_hypothesis_id: Optional[int] = None
    completed: bool = True
    error: Optional[str] = None


def _teacher_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """(card-sampling stream, setup stream) for one episode."""
    bits = np.random.Philox(key=seed)
    return np.random.Generator(bits), np.random.Generator(bits.jumped(1))


def _sample_index(rng: np.random.Generator, probs: np.ndarray) -> int:
    cumulative = np.cumsum(probs)
    idx = int(np.searchsorted(cumulative, rng.random(), side="right"))
    return min(idx, len(probs) - 1)


def _matching_grid_index(grid: Sequence[TeacherHypothesis], true: TeacherHypothesis) -> Optional[int]:
    for k, h in enumerate(grid):
        if (
            h.kind is true.kind
            and h.card_temperature == true.card_temperature
            and h.feedback_temperature == true.feedback_temperature
        ):
            return k
    return None


def _should_stop(policy: TerminationPolicy, converged: bool, believes: bool) -> Optional[str]:
    if policy is TerminationPolicy.LEARNER_CONVERGES and converged:
        return "learner_converged"
    if policy is TerminationPolicy.TEACHER_BELIEVES_KNOWN and believes:
        return "teacher_believes_known"
    return None


def run_episode(config: EpisodeConfig) -> tuple[EpisodeResult, list[dict]]:
    """Run one seeded episode; failures become records, never exceptions."""
    card_stream, setup_stream = _teacher_streams(config.seed)
    rule = config.true_rule
    if rule is None:
        rule = enumerate_rules()[int(setup_stream.integers(len(enumerate_rules())))]

    teacher = init_teacher(config.true_teacher, rule, config.trust_prior)
    belief = init_learner(config.grid, config.learner, config.trust_prior)
    true_index = _matching_grid_index(config.grid, config.true_teacher)
    prior = float(hypothesis_marginal(belief)[true_index]) if true_index is not None else 0.0

    trace: list[dict] = [
        {
            "kind": "episode_config",
            "name": config.name,
            "seed": config.seed,
            "rule": rule_to_json(rule),
            "true_teacher": hypothesis_to_json(config.true_teacher),
            "grid": [hypothesis_to_json(h) for h in config.grid],
            "learner": config_to_json(config.learner),
            "termination": config.termination.value,
            "knowledge_threshold": config.knowledge_threshold,
            "trust_threshold": config.trust_threshold,
            "trust_prior": list(config.trust_prior),
        }
    ]

    unplayed = list(deck())
    posterior_trace: list[float] = []
    misunderstandings = 0
    termination = "deck_exhausted"
    error: Optional[str] = None
    rounds = 0

    for round_number in range(1, NUM_CARDS + 1):
        plays, dist = card_policy(teacher, unplayed)
        card, pile = plays[_sample_index(card_stream, dist.probs)]
        play = CardPlay(card, pile, round_number)
        unplayed.remove(card)
        try:
            teacher = observe_own_play(teacher, play)
            belief = observe_card(belief, play)
        except (ZeroEvidence, InconsistentPlay) as exc:
            termination, error = "failed", f"{type(exc).__name__}: {exc}"
            break
        rounds = round_number
        trace.append({"kind": "card_played", "round": round_number, **_play_payload(play)})

        utterance = select_feedback(belief, unplayed, config.learner)
        belief = record_utterance(belief, utterance)
        teacher = interpret_feedback(teacher, utterance)
        trace.append({"kind": "utterance", "round": round_number, **utterance_to_json(utterance)})

        converged = has_converged(belief, config.learner)
        believes = believes_learner_knows(
            teacher, config.knowledge_threshold, config.trust_threshold
        )
        misunderstanding = believes != converged
        misunderstandings += int(misunderstanding)
        true_posterior = (
            float(hypothesis_marginal(belief)[true_index]) if true_index is not None else 0.0
        )
        posterior_trace.append(true_posterior)
        trace.append(
            {
                "kind": "round_state",
                "round": round_number,
                "rule_marginal": rule_marginal(belief).as_list(),
                "hypothesis_marginal": hypothesis_marginal(belief).as_list(),
                "knowledge_belief": teacher.knowledge_belief.as_list(),
                "converged": converged,
                "believes": believes,
                "misunderstanding": misunderstanding,
                "true_hypothesis_posterior": true_posterior,
            }
        )

        stop = _should_stop(config.termination, converged, believes)
        if stop is not None:
            termination = stop
            break

    completed = error is None
    converged = has_converged(belief, config.learner) if completed else False
    map_correct = completed and map_rule(belief).id == rule.id
    teacher_map_correct = (
        completed
        and true_index is not None
        and map_teacher_hypothesis(belief) == config.grid[true_index].id
    )
    false_stop = termination == "teacher_believes_known" and not (converged and map_correct)
    map_hypothesis_id = map_teacher_hypothesis(belief) if completed else None
    result = EpisodeResult(
        seed=config.seed,
        rounds=rounds,
        converged=converged,
        learner_map_rule_correct=map_correct,
        teacher_map_correct=teacher_map_correct,
        true_hypothesis_posterior_trace=tuple(posterior_trace),
        true_hypothesis_prior=prior,
        misunderstanding_events=misunderstandings,
        false_stop=false_stop,
        termination=termination,
        map_hypothesis_id=map_hypothesis_id,
        completed=completed,
        error=error,
    )
    trace.append(
        {
            "kind": "episode_end",
            "rounds": rounds,
            "converged": converged,
            "termination": termination,
            "map_rule_id": map_rule(belief).id if completed else None,
            "map_hypothesis_id": map_hypothesis_id,
            "learner_map_rule_correct": map_correct,
            "teacher_map_correct": teacher_map_correct,
            "misunderstanding_events": misunderstandings,
            "false_stop": false_stop,
            "completed": completed,
            "error": error,
        }
    )
    return result, trace


def _play_payload(play: CardPlay) -> dict:
    return {"card_id": play.card.id, "pile": int(play.pile)}


# ---------------------------------------------------------------------------
# Batch runner.


def _episode_row(config: EpisodeConfig, index: int, result: EpisodeResult) -> dict:
    return {
        "config": config.name,
        "mode": config.learner.mode.value,
        "episode_index": index,
        "seed": result.seed,
        "rounds": result.rounds,
        "converged": result.converged,
        "learner_map_rule_correct": result.learner_map_rule_correct,
        "teacher_map_correct": result.teacher_map_correct,
        "misunderstanding_events": result.misunderstanding_events,
        "false_stop": result.false_stop,
        "termination": result.termination,
        "completed": result.completed,
        "error": result.error,
        "true_hypothesis_posterior_trace": list(result.true_hypothesis_posterior_trace),
        "true_hypothesis_prior": result.true_hypothesis_prior,
    }


AGGREGATE_FIELDS = (
    "config",
    "mode",
    "episodes",
    "completed",
    "mean_rounds",
    "median_rounds",
    "convergence_rate",
    "map_hypothesis_accuracy",
    "map_rule_accuracy",
    "mean_misunderstandings",
    "false_stop_rate",
)


def _aggregate(config: EpisodeConfig, results: Sequence[EpisodeResult]) -> dict:
    done = [r for r in results if r.completed]
    row = {
        "config": config.name,
        "mode": config.learner.mode.value,
        "episodes": len(results),
        "completed": len(done),
    }
    if done:
        rounds = sorted(r.rounds for r in done)
        row.update(
            mean_rounds=float(np.mean([r.rounds for r in done])),
            median_rounds=float(np.median(rounds)),
            convergence_rate=float(np.mean([r.converged for r in done])),
            map_hypothesis_accuracy=float(np.mean([r.teacher_map_correct for r in done])),
            map_rule_accuracy=float(np.mean([r.learner_map_rule_correct for r in done])),
            mean_misunderstandings=float(np.mean([r.misunderstanding_events for r in done])),
            false_stop_rate=float(np.mean([r.false_stop for r in done])),
        )
    else:
        row.update({field: "" for field in AGGREGATE_FIELDS if field not in row})
    return row


def _dump_json(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def run_batch(
    configs: Sequence[EpisodeConfig],
    episodes_per_config: int,
    base_seed: int,
    out_dir: Optional[Path] = None,
) -> tuple[list[dict], list[dict]]:
    """Run every config on the shared seed set base_seed + 0..N-1.

    Writes metrics.csv, episodes.jsonl and traces/<config>_<index>.jsonl when
    out_dir is given; outputs are byte-identical across reruns.
    """
    if out_dir is not None:
        out_dir = Path(out_dir)
        (out_dir / "traces").mkdir(parents=True, exist_ok=True)

    aggregates: list[dict] = []
    episode_rows: list[dict] = []
    for config in configs:
        results = []
        for index in range(episodes_per_config):
            episode_config = replace(config, seed=base_seed + index)
            result, trace = run_episode(episode_config)
            results.append(result)
            episode_rows.append(_episode_row(episode_config, index, result))
            if out_dir is not None:
                trace_path = out_dir / "traces" / f"{config.name}_{index:04d}.jsonl"
                trace_path.write_text("".join(_dump_json(event) + "\n" for event in trace))
        aggregates.append(_aggregate(config, results))

    if out_dir is not None:
        with (out_dir / "metrics.csv").open("w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=AGGREGATE_FIELDS)
            writer.writeheader()
            writer.writerows(aggregates)
        with (out_dir / "episodes.jsonl").open("w") as handle:
            for row in episode_rows:
                handle.write(_dump_json(row) + "\n")
    return aggregates, episode_rows


def recovery_curve(results: Sequence[EpisodeResult]) -> list[float]:
    """Mean posterior on the true hypothesis per round, across episodes.

    Entry 0 is the prior; entry t the mean after round t, with episodes that
    terminated early padded by their final value.
    """
    if not results:
        return []
    longest = max(len(r.true_hypothesis_posterior_trace) for r in results)
    curve = [float(np.mean([r.true_hypothesis_prior for r in results]))]
    for t in range(longest):
        values = []
        for r in results:
            trace = r.true_hypothesis_posterior_trace
            if trace:
                values.append(trace[min(t, len(trace) - 1)])
            else:
                values.append(r.true_hypothesis_prior)
        curve.append(float(np.mean(values)))
    return curve


COMPARE_METRICS = ("rounds", "misunderstanding_events", "converged", "false_stop")


def compare_modes(
    table: Sequence[dict],
    baseline_mode: str = "baseline",
    other_mode: str = "teacher_aware",
    metrics: Sequence[str] = COMPARE_METRICS,
    resamples: int = 10_000,
    seed: int = 0,
) -> dict[str, dict]:
    """Paired per-seed deltas (other - baseline) with bootstrap intervals.

    table rows are episode records from run_batch; both modes must cover the
    same seeds or UnmatchedSeeds is raised. Intervals are 95% percentile
    bootstrap over the paired differences, seeded.
    """
    by_mode: dict[str, dict[int, dict]] = {baseline_mode: {}, other_mode: {}}
    for row in table:
        mode = row.get("mode")
        if mode in by_mode:
            by_mode[mode][int(row["seed"])] = row
    baseline_rows, other_rows = by_mode[baseline_mode], by_mode[other_mode]
    if not baseline_rows or set(baseline_rows) != set(other_rows):
        raise UnmatchedSeeds(
            f"modes cover different seeds: {len(baseline_rows)} baseline vs {len(other_rows)} {other_mode}"
        )

    seeds = sorted(baseline_rows)
    rng = np.random.Generator(np.random.Philox(key=seed))
    summary: dict[str, dict] = {}
    for metric in metrics:
        diffs = np.array(
            [float(other_rows[s][metric]) - float(baseline_rows[s][metric]) for s in seeds]
        )
        samples = rng.integers(0, len(diffs), size=(resamples, len(diffs)))
        means = diffs[samples].mean(axis=1)
        summary[metric] = {
            "delta": float(diffs.mean()),
            "ci_low": float(np.percentile(means, 2.5)),
            "ci_high": float(np.percentile(means, 97.5)),
            "pairs": len(diffs),
        }
    return summary


# ---------------------------------------------------------------------------
# Trace replay.


def replay_trace(lines: Iterable[str]) -> dict:
    """Re-run the learner and teacher over a logged trace.

    Recomputes every posterior and policy choice and reports the maximum
    deviation from the logged values; a trace is replayable when ok is True
    (all deviations within 1e-12 and every discrete choice matches).
    """
    events = [json.loads(line) for line in lines if line.strip()]
    if not events or events[0].get("kind") != "episode_config":
        raise ValueError("trace must start with an episode_config event")
    header = events[0]
    rule = rule_from_json(header["rule"])
    grid = tuple(hypothesis_from_json(h) for h in header["grid"])
    learner_config = config_from_json(header["learner"])
    trust_prior = tuple(header["trust_prior"])

    teacher = init_teacher(hypothesis_from_json(header["true_teacher"]), rule, trust_prior)
    belief = init_learner(grid, learner_config, trust_prior)

    max_deviation = 0.0
    errors: list[str] = []
    rounds = 0
    pending_unplayed: list[int] = []

    def check(name: str, logged: Sequence[float], computed: Sequence[float], round_number: int) -> None:
        nonlocal max_deviation
        deviation = float(np.max(np.abs(np.asarray(logged) - np.asarray(computed))))
        max_deviation = max(max_deviation, deviation)
        if deviation > REPLAY_TOLERANCE:
            errors.append(f"round {round_number}: {name} deviates by {deviation:.3e}")

    for event in events[1:]:
        kind = event["kind"]
        if kind == "card_played":
            play = play_from_json(event)
            teacher = observe_own_play(teacher, play)
            belief = observe_card(belief, play)
            rounds = event["round"]
            pending_unplayed = [c.id for c in deck() if all(p.card.id != c.id for p in belief.history)]
        elif kind == "utterance":
            logged = utterance_from_json(event)
            recomputed = select_feedback(
                belief, [deck()[i] for i in pending_unplayed], learner_config
            )
            if recomputed != logged:
                errors.append(
                    f"round {event['round']}: policy chose {recomputed.rendered!r},"
                    f" trace has {logged.rendered!r}"
                )
            belief = record_utterance(belief, logged)
            teacher = interpret_feedback(teacher, logged)
        elif kind == "round_state":
            round_number = event["round"]
            check("rule_marginal", event["rule_marginal"], rule_marginal(belief).as_list(), round_number)
            check(
                "hypothesis_marginal",
                event["hypothesis_marginal"],
                hypothesis_marginal(belief).as_list(),
                round_number,
            )
            check(
                "knowledge_belief",
                event["knowledge_belief"],
                teacher.knowledge_belief.as_list(),
                round_number,
            )
            converged = has_converged(belief, learner_config)
            believes = believes_learner_knows(
                teacher, header["knowledge_threshold"], header["trust_threshold"]
            )
            if event["converged"] != converged or event["believes"] != believes:
                errors.append(f"round {round_number}: convergence/belief flags diverge")
        elif kind == "episode_end":
            if event["completed"]:
                if event["map_rule_id"] != map_rule(belief).id:
                    errors.append("final MAP rule diverges")
                if event["rounds"] != rounds:
                    errors.append("round count diverges")
    return {"ok": not errors, "max_deviation": max_deviation, "rounds": rounds, "errors": errors}


def replay_trace_file(path: Path) -> dict:
    return replay_trace(Path(path).read_text().splitlines())


# ---------------------------------------------------------------------------
# JSON experiment configuration.


def _rule_from_config(value, field: str) -> Optional[Rule]:
    if value is None or value == "random":
        return None
    if isinstance(value, int):
        if not 0 <= value < len(enumerate_rules()):
            raise ValueError(f"{field}: rule id out of range")
        return enumerate_rules()[value]
    if isinstance(value, dict):
        return rule_from_json(value)
    raise ValueError(f"{field}: expected a rule id, rule object, or 'random'")


def episode_config_from_json(data: dict, grid: Optional[Sequence[TeacherHypothesis]] = None) -> EpisodeConfig:
    """Build an EpisodeConfig from one entry of the experiment config file."""
    if grid is None:
        if "teacher_grid" in data:
            grid = tuple(
                hypothesis_from_json({**h, "id": i}) for i, h in enumerate(data["teacher_grid"])
            )
        else:
            grid = default_grid()
    true_teacher = data["true_teacher"]
    if isinstance(true_teacher, int):
        teacher_hypothesis = grid[true_teacher]
    else:
        teacher_hypothesis = hypothesis_from_json({**true_teacher, "id": true_teacher.get("id", 0)})
    return EpisodeConfig(
        seed=int(data.get("seed", 0)),
        true_teacher=teacher_hypothesis,
        true_rule=_rule_from_config(data.get("true_rule", "random"), "true_rule"),
        learner=config_from_json(data.get("learner", {})),
        grid=tuple(grid),
        termination=TerminationPolicy(data.get("termination", "teacher_believes_known")),
        knowledge_threshold=float(data.get("knowledge_threshold", 0.95)),
        trust_threshold=float(data.get("trust_threshold", 0.8)),
        trust_prior=tuple(data.get("trust_prior", (0.5, 0.5))),
        name=str(data.get("name", "episode")),
    )


def batch_configs_from_json(data: dict) -> list[EpisodeConfig]:
    """Parse the experiment config file: a single config or {"configs": [...]}.

    A top-level "teacher_grid" applies to every config that does not override
    it.
    """
    shared_grid = None
    if "teacher_grid" in data:
        shared_grid = tuple(
            hypothesis_from_json({**h, "id": i}) for i, h in enumerate(data["teacher_grid"])
        )
    entries = data["configs"] if "configs" in data else [data]
    configs = []
    for i, entry in enumerate(entries):
        entry = dict(entry)
        entry.setdefault("name", f"config{i}")
        grid = shared_grid if "teacher_grid" not in entry else None
        configs.append(episode_config_from_json(entry, grid))
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ValueError("config names must be unique")
    return configs
