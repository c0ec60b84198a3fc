import { describe, expect, it } from "vitest";

import {
  applyEvent,
  applySummary,
  clearPending,
  initialState,
  markPending,
  pileCards,
  trayCards,
  type ViewState,
} from "../state";
import type { CreatedSession, SessionEvent } from "../types";

const DECK = [
  { color: "Red", shape: "Diamond", count: "One", id: 0 },
  { color: "Red", shape: "Diamond", count: "Two", id: 1 },
  { color: "Blue", shape: "Oval", count: "Three", id: 14 },
];

const CREATED: CreatedSession = {
  session_id: "abc123",
  rule: { dimension: "Color", mapping: { Red: 1, Blue: 2, Green: 3 }, id: 0 },
  mode: "teacher_aware",
  round: 0,
  deck: DECK,
  created_at: "2026-01-01T00:00:00Z",
  debug: false,
};

function played(index: number, cardId: number, pile: number, round: number): SessionEvent {
  return { index, kind: "card_played", payload: { card_id: cardId, pile }, round };
}

function uttered(index: number, round: number, ce: "unsure" | "think" | "know" | null): SessionEvent {
  return {
    index,
    kind: "utterance_emitted",
    payload: { ce, value: "Red", pile: 1, text: "I think Reds belong in Pile 1." },
    round,
  };
}

describe("applyEvent", () => {
  it("moves a card from the tray to its pile", () => {
    const state = applyEvent(initialState(CREATED), played(0, 0, 1, 1));
    expect(state.placements[0]).toBe(1);
    expect(state.round).toBe(1);
    expect(trayCards(state).map((card) => card.id)).toEqual([1, 14]);
    expect(pileCards(state, 1).map((entry) => entry.card.id)).toEqual([0]);
  });

  it("appends utterances to the transcript with their CE level", () => {
    let state = applyEvent(initialState(CREATED), played(0, 0, 1, 1));
    state = applyEvent(state, uttered(1, 1, "unsure"));
    expect(state.transcript).toHaveLength(1);
    expect(state.transcript[0]).toEqual({
      round: 1,
      ce: "unsure",
      text: "I think Reds belong in Pile 1.",
    });
  });

  it("is idempotent by event index", () => {
    let state = applyEvent(initialState(CREATED), played(0, 0, 1, 1));
    state = applyEvent(state, uttered(1, 1, "think"));
    const replayed = applyEvent(applyEvent(state, played(0, 0, 1, 1)), uttered(1, 1, "think"));
    expect(replayed).toBe(state);
    expect(replayed.transcript).toHaveLength(1);
  });

  it("confirms an optimistic placement without duplication", () => {
    let state = markPending(initialState(CREATED), 0, 1);
    expect(pileCards(state, 1)).toEqual([{ card: DECK[0], pending: true }]);
    state = applyEvent(state, played(0, 0, 1, 1));
    expect(state.pending).toEqual({});
    expect(pileCards(state, 1)).toEqual([{ card: DECK[0], pending: false }]);
  });

  it("stores the end summary and clears selection", () => {
    let state = initialState(CREATED);
    state = { ...state, selectedCard: 1 };
    const summary = {
      map_rule: CREATED.rule,
      correct: true,
      rounds: 1,
      misunderstanding: {
        ended_before_convergence: false,
        converged_round: 1,
        rounds_after_convergence: 0,
      },
    };
    state = applyEvent(state, {
      index: 2,
      kind: "session_ended",
      payload: summary,
      round: 1,
    });
    expect(state.ended).toBe(true);
    expect(state.summary).toEqual(summary);
    expect(state.selectedCard).toBeNull();
  });

  it("never invents display content: utterance text comes from the payload", () => {
    const event = uttered(0, 1, "know");
    const state = applyEvent(initialState(CREATED), event);
    expect(state.transcript[0].text).toBe((event.payload as { text: string }).text);
  });
});

describe("optimistic rollback", () => {
  it("returns the card to the tray", () => {
    const state = markPending(initialState(CREATED), 0, 2);
    const rolled = clearPending(state, 0);
    expect(trayCards(rolled).map((card) => card.id)).toContain(0);
    expect(pileCards(rolled, 2)).toEqual([]);
  });
});

describe("applySummary", () => {
  it("seeds the fold from a full session summary", () => {
    const summary = {
      session_id: "abc123",
      rule: CREATED.rule,
      mode: "teacher_aware",
      round: 2,
      ended: false,
      converged: false,
      created_at: CREATED.created_at,
      history: [
        { card_id: 0, pile: 1, round: 1 },
        { card_id: 1, pile: 1, round: 2 },
      ],
      utterances: [
        { ce: "unsure" as const, value: "Red", pile: 1, text: "a" },
        { ce: "think" as const, value: "Red", pile: 1, text: "b" },
      ],
    };
    const state: ViewState = applySummary(initialState(CREATED), summary);
    expect(state.round).toBe(2);
    expect(state.placements).toEqual({ 0: 1, 1: 1 });
    expect(state.transcript.map((entry) => entry.ce)).toEqual(["unsure", "think"]);
    expect(state.lastEventIndex).toBe(3);
    const next = applyEvent(state, played(3, 14, 2, 3));
    expect(next.lastEventIndex).toBe(3); // duplicate of the last folded event
    const fresh = applyEvent(state, played(4, 14, 2, 3));
    expect(fresh.placements[14]).toBe(2);
  });
});
