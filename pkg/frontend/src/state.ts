// Pure view state: a fold over server events plus local selection. The
// client computes nothing about rules or beliefs; every displayed number and
// utterance comes from a server payload.

import type {
  CardInfo,
  CardPlayedPayload,
  CreatedSession,
  EndSummary,
  RuleInfo,
  SessionEvent,
  SessionSummary,
  UtterancePayload,
} from "./types";

export type ConnectionStatus = "connecting" | "open" | "reconnecting" | "closed";

export interface TranscriptEntry {
  round: number;
  ce: UtterancePayload["ce"];
  text: string;
}

export interface ViewState {
  sessionId: string;
  rule: RuleInfo;
  mode: string;
  deck: CardInfo[];
  /** Confirmed placements: card id -> pile number. */
  placements: Record<number, number>;
  /** Optimistic placements awaiting server confirmation. */
  pending: Record<number, number>;
  transcript: TranscriptEntry[];
  round: number;
  converged: boolean;
  ended: boolean;
  summary: EndSummary | null;
  lastEventIndex: number;
  selectedCard: number | null;
  hoveredPile: number | null;
  connection: ConnectionStatus;
  notice: string | null;
}

export function initialState(created: CreatedSession): ViewState {
  return {
    sessionId: created.session_id,
    rule: created.rule,
    mode: created.mode,
    deck: created.deck,
    placements: {},
    pending: {},
    transcript: [],
    round: created.round,
    converged: false,
    ended: false,
    summary: null,
    lastEventIndex: -1,
    selectedCard: null,
    hoveredPile: null,
    connection: "connecting",
    notice: null,
  };
}

/** Seed the fold from a full summary (page reload of an existing session). */
export function applySummary(state: ViewState, summary: SessionSummary): ViewState {
  const placements: Record<number, number> = {};
  for (const entry of summary.history) {
    placements[entry.card_id] = entry.pile;
  }
  const transcript = summary.utterances.map((utterance, i) => ({
    round: i + 1,
    ce: utterance.ce,
    text: utterance.text,
  }));
  return {
    ...state,
    placements,
    transcript,
    round: summary.round,
    converged: summary.converged,
    ended: summary.ended,
    summary: summary.summary ?? null,
    lastEventIndex: summary.history.length + summary.utterances.length - 1 + (summary.ended ? 1 : 0),
  };
}

/** Apply one pushed event; duplicates (by index) are ignored. */
export function applyEvent(state: ViewState, event: SessionEvent): ViewState {
  if (event.index <= state.lastEventIndex) {
    return state;
  }
  const next: ViewState = { ...state, lastEventIndex: event.index };
  if (event.kind === "card_played") {
    const payload = event.payload as CardPlayedPayload;
    next.placements = { ...state.placements, [payload.card_id]: payload.pile };
    const pending = { ...state.pending };
    delete pending[payload.card_id];
    next.pending = pending;
    next.round = event.round;
  } else if (event.kind === "utterance_emitted") {
    const payload = event.payload as UtterancePayload;
    next.transcript = [
      ...state.transcript,
      { round: event.round, ce: payload.ce, text: payload.text },
    ];
  } else if (event.kind === "session_ended") {
    next.ended = true;
    next.summary = event.payload as EndSummary;
    next.selectedCard = null;
  }
  return next;
}

export function markPending(state: ViewState, cardId: number, pile: number): ViewState {
  return {
    ...state,
    pending: { ...state.pending, [cardId]: pile },
    selectedCard: null,
  };
}

/** Roll an optimistic placement back (wrong pile, closed session, ...). */
export function clearPending(state: ViewState, cardId: number): ViewState {
  const pending = { ...state.pending };
  delete pending[cardId];
  return { ...state, pending };
}

export function selectCard(state: ViewState, cardId: number | null): ViewState {
  return { ...state, selectedCard: cardId };
}

export function setConnection(state: ViewState, connection: ConnectionStatus): ViewState {
  return { ...state, connection };
}

export function setNotice(state: ViewState, notice: string | null): ViewState {
  return { ...state, notice };
}

export function setConverged(state: ViewState, converged: boolean): ViewState {
  return { ...state, converged };
}

/** Cards still in the tray: neither confirmed nor optimistically placed. */
export function trayCards(state: ViewState): CardInfo[] {
  return state.deck.filter(
    (card) => !(card.id in state.placements) && !(card.id in state.pending),
  );
}

/** Cards shown on a pile, confirmed first, optimistic marked. */
export function pileCards(state: ViewState, pile: number): { card: CardInfo; pending: boolean }[] {
  const shown: { card: CardInfo; pending: boolean }[] = [];
  for (const card of state.deck) {
    if (state.placements[card.id] === pile) {
      shown.push({ card, pending: false });
    } else if (state.pending[card.id] === pile) {
      shown.push({ card, pending: true });
    }
  }
  return shown;
}
