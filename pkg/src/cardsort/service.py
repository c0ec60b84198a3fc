"""HTTP service for live teaching sessions.

A human teacher plays cards against the learner over a JSON API; every
session is an append-only event log (one JSONL file per session) whose fold
is the session state, so a restart rebuilds every open session exactly.
Events are pushed to subscribers over a server-sent event stream that resumes
from a last-seen index without gaps or duplicates.
"""

from __future__ import annotations

import asyncio
import json
import secrets
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from starlette.concurrency import run_in_threadpool

from .cards import (
    NUM_CARDS,
    CardPlay,
    Pile,
    card_to_json,
    deck,
    enumerate_rules,
    play_from_json,
    rule_from_json,
    rule_to_json,
    sort_card,
)
from .learner import (
    JointBelief,
    LearnerConfig,
    LearnerMode,
    config_from_json,
    config_to_json,
    diagnostics,
    has_converged,
    init_learner,
    map_rule,
    observe_card,
    record_utterance,
    select_feedback,
)
from .teacher import utterance_from_json, utterance_to_json

import numpy as np


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str, field_name: Optional[str] = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.field = field_name


def _invalid_config(message: str, field_name: Optional[str] = None) -> ServiceError:
    return ServiceError(400, "invalid_config", message, field_name)


@dataclass
class Session:
    """One live session: pure fold of its event log plus subscriber plumbing."""

    id: str
    rule: object
    config: LearnerConfig
    seed: int
    debug: bool
    created_at: str
    belief: JointBelief
    path: Path
    events: list[dict] = field(default_factory=list)
    played_ids: set[int] = field(default_factory=set)
    ended: bool = False
    converged_round: Optional[int] = None
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    condition: asyncio.Condition = field(default_factory=asyncio.Condition)

    @property
    def round(self) -> int:
        return len(self.belief.history)


class SessionStore:
    """All sessions, persisted one JSONL file per session under data_dir."""

    def __init__(self, data_dir: Path, debug_default: bool = False):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.debug_default = debug_default
        self.sessions: dict[str, Session] = {}
        for path in sorted(self.data_dir.glob("*.jsonl")):
            session = self._fold(path)
            self.sessions[session.id] = session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise ServiceError(404, "unknown_session", f"no session {session_id!r}")
        return session

    def create(self, body: dict) -> Session:
        seed = body.get("seed", 0)
        if not isinstance(seed, int):
            raise _invalid_config("seed must be an integer", "seed")
        rule_spec = body.get("rule", "random")
        if rule_spec == "random":
            rng = np.random.Generator(np.random.Philox(key=seed))
            rule = enumerate_rules()[int(rng.integers(len(enumerate_rules())))]
        elif isinstance(rule_spec, int):
            if not 0 <= rule_spec < len(enumerate_rules()):
                raise _invalid_config("rule id must be in 0..17", "rule")
            rule = enumerate_rules()[rule_spec]
        elif isinstance(rule_spec, dict):
            try:
                rule = rule_from_json(rule_spec)
            except (KeyError, ValueError) as exc:
                raise _invalid_config(str(exc), "rule")
        else:
            raise _invalid_config("rule must be an id, a rule object, or 'random'", "rule")

        overrides = dict(body.get("config", {}))
        if "mode" in body:
            overrides["mode"] = body["mode"]
        try:
            config = config_from_json(overrides)
        except ValueError as exc:
            message = str(exc)
            field_name = None
            for name in ("think_threshold", "know_threshold", "calibration_weight",
                         "convergence_threshold", "mode"):
                if name in message or name in overrides and not _valid_field(overrides, name):
                    field_name = name
                    break
            raise _invalid_config(message, field_name)

        session = Session(
            id=secrets.token_hex(6),
            rule=rule,
            config=config,
            seed=seed,
            debug=bool(body.get("debug", self.debug_default)),
            created_at=datetime.now(timezone.utc).isoformat(),
            belief=init_learner(config=config),
            path=self.data_dir / "pending",
        )
        session.path = self.data_dir / f"{session.id}.jsonl"
        header = {
            "kind": "session_created",
            "session_id": session.id,
            "rule": rule_to_json(rule),
            "config": config_to_json(config),
            "seed": seed,
            "debug": session.debug,
            "created_at": session.created_at,
        }
        session.path.write_text(json.dumps(header) + "\n")
        self.sessions[session.id] = session
        return session

    def _fold(self, path: Path) -> Session:
        lines = path.read_text().splitlines()
        header = json.loads(lines[0])
        config = config_from_json(header["config"])
        session = Session(
            id=header["session_id"],
            rule=rule_from_json(header["rule"]),
            config=config,
            seed=header["seed"],
            debug=header["debug"],
            created_at=header["created_at"],
            belief=init_learner(config=config),
            path=path,
        )
        for line in lines[1:]:
            event = json.loads(line)
            session.events.append(event)
            if event["kind"] == "card_played":
                play = play_from_json({**event["payload"], "round": event["round"]})
                session.belief = observe_card(session.belief, play)
                session.played_ids.add(play.card.id)
                if session.converged_round is None and has_converged(session.belief):
                    session.converged_round = play.round
            elif event["kind"] == "utterance_emitted":
                session.belief = record_utterance(
                    session.belief, utterance_from_json(event["payload"])
                )
            elif event["kind"] == "session_ended":
                session.ended = True
        return session

    def append_event(self, session: Session, kind: str, payload: dict, round_number: int) -> dict:
        event = {"index": len(session.events), "kind": kind, "payload": payload, "round": round_number}
        session.events.append(event)
        with session.path.open("a") as handle:
            handle.write(json.dumps(event) + "\n")
        return event


def _valid_field(overrides: dict, name: str) -> bool:
    try:
        config_from_json({name: overrides[name]})
        return True
    except (ValueError, KeyError):
        return False


def _session_summary(session: Session) -> dict:
    summary = {
        "session_id": session.id,
        "rule": rule_to_json(session.rule),
        "mode": session.config.mode.value,
        "round": session.round,
        "ended": session.ended,
        "converged": has_converged(session.belief),
        "created_at": session.created_at,
        "history": [
            {"card_id": play.card.id, "pile": int(play.pile), "round": play.round}
            for play in session.belief.history
        ],
        "utterances": [utterance_to_json(u) for u in session.belief.uttered],
    }
    if session.ended:
        summary["summary"] = _end_summary(session)
    if session.debug:
        summary["diagnostics"] = diagnostics(session.belief)
    return summary


def _end_summary(session: Session) -> dict:
    guess = map_rule(session.belief)
    converged = has_converged(session.belief)
    rounds = session.round
    return {
        "map_rule": rule_to_json(guess),
        "correct": guess.id == session.rule.id,
        "rounds": rounds,
        "misunderstanding": {
            "ended_before_convergence": not converged,
            "converged_round": session.converged_round,
            "rounds_after_convergence": (
                rounds - session.converged_round if session.converged_round is not None else 0
            ),
        },
    }


def create_app(
    data_dir: Path, ui_dir: Optional[Path] = None, debug_default: bool = False
) -> FastAPI:
    """Build the service; sessions under data_dir are reloaded on startup."""
    app = FastAPI(title="cardsort sessions")
    store = SessionStore(Path(data_dir), debug_default=debug_default)
    app.state.store = store

    @app.exception_handler(ServiceError)
    async def handle_service_error(_request: Request, exc: ServiceError) -> JSONResponse:
        body = {"code": exc.code, "message": exc.message}
        if exc.field is not None:
            body["field"] = exc.field
        return JSONResponse(status_code=exc.status, content=body)

    @app.get("/api/rules")
    async def list_rules() -> list[dict]:
        return [rule_to_json(rule) for rule in enumerate_rules()]

    @app.post("/api/sessions")
    async def create_session(request: Request) -> dict:
        body = await request.json()
        if not isinstance(body, dict):
            raise _invalid_config("request body must be a JSON object")
        session = store.create(body)
        return {
            "session_id": session.id,
            "rule": rule_to_json(session.rule),
            "mode": session.config.mode.value,
            "round": 0,
            "deck": [card_to_json(card) for card in deck()],
            "created_at": session.created_at,
            "debug": session.debug,
        }

    @app.post("/api/sessions/{session_id}/plays")
    async def submit_play(session_id: str, request: Request) -> dict:
        body = await request.json()
        session = store.get(session_id)
        async with session.lock:
            if session.ended:
                raise ServiceError(409, "session_closed", "session already ended")
            try:
                card_id = int(body["card_id"])
                pile = Pile(int(body["pile"]))
            except (KeyError, ValueError, TypeError):
                raise ServiceError(400, "invalid_play", "need card_id 0..26 and pile 1..3")
            if not 0 <= card_id < NUM_CARDS:
                raise ServiceError(400, "invalid_play", "card_id must be in 0..26")
            if card_id in session.played_ids:
                raise ServiceError(409, "card_already_played", f"card {card_id} was already played")
            card = deck()[card_id]
            expected = sort_card(session.rule, card)
            if expected is not pile:
                raise ServiceError(
                    409,
                    "wrong_pile",
                    f"your rule places card {card_id} on pile {int(expected)}, not {int(pile)}",
                )

            play = CardPlay(card, pile, session.round + 1)
            belief, utterance = await run_in_threadpool(_advance, session.belief, play)
            session.belief = belief
            session.played_ids.add(card_id)
            if session.converged_round is None and has_converged(session.belief):
                session.converged_round = play.round
            store.append_event(
                session, "card_played", {"card_id": card_id, "pile": int(pile)}, play.round
            )
            store.append_event(session, "utterance_emitted", utterance_to_json(utterance), play.round)
            async with session.condition:
                session.condition.notify_all()
            return {
                "utterance": utterance_to_json(utterance),
                "round": play.round,
                "converged": has_converged(session.belief),
            }

    @app.get("/api/sessions/{session_id}")
    async def get_session(session_id: str) -> dict:
        return _session_summary(store.get(session_id))

    @app.post("/api/sessions/{session_id}/end")
    async def end_session(session_id: str) -> dict:
        session = store.get(session_id)
        async with session.lock:
            if session.ended:
                raise ServiceError(409, "session_closed", "session already ended")
            summary = _end_summary(session)
            session.ended = True
            store.append_event(session, "session_ended", summary, session.round)
            async with session.condition:
                session.condition.notify_all()
            return summary

    @app.get("/api/sessions/{session_id}/events")
    async def stream_events(session_id: str, request: Request, after: int = -1) -> StreamingResponse:
        session = store.get(session_id)
        last_event_id = request.headers.get("last-event-id")
        if last_event_id is not None:
            after = int(last_event_id)

        async def generate():
            next_index = after + 1
            while True:
                async with session.condition:
                    while len(session.events) <= next_index and not session.ended:
                        await session.condition.wait()
                    pending = list(session.events[next_index:])
                    ended = session.ended
                for event in pending:
                    yield f"id: {event['index']}\ndata: {json.dumps(event)}\n\n"
                    next_index = event["index"] + 1
                if ended and next_index >= len(session.events):
                    return

        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.get("/api/sessions/{session_id}/trace")
    async def download_trace(session_id: str) -> PlainTextResponse:
        session = store.get(session_id)
        return PlainTextResponse(session.path.read_text(), media_type="application/x-ndjson")

    @app.get("/api/sessions/{session_id}/debug")
    async def debug_view(session_id: str) -> dict:
        session = store.get(session_id)
        if not session.debug:
            raise ServiceError(403, "debug_disabled", "session was not created with debug=true")
        return diagnostics(session.belief)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def _advance(belief: JointBelief, play: CardPlay):
    """Learner computation for one play (runs off the event loop)."""
    belief = observe_card(belief, play)
    unplayed = [card for card in deck() if all(p.card.id != card.id for p in belief.history)]
    utterance = select_feedback(belief, unplayed)
    belief = record_utterance(belief, utterance)
    return belief, utterance
