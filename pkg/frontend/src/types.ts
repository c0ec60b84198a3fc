// Wire types mirroring the session service's JSON payloads.

export interface CardInfo {
  color: string;
  shape: string;
  count: string;
  id: number;
}

export interface RuleInfo {
  dimension: string;
  mapping: Record<string, number>;
  id: number;
}

export type CeLevel = "unsure" | "think" | "know";

export interface UtterancePayload {
  ce: CeLevel | null;
  value: string;
  pile: number;
  text: string;
}

export interface CardPlayedPayload {
  card_id: number;
  pile: number;
}

export interface MisunderstandingSummary {
  ended_before_convergence: boolean;
  converged_round: number | null;
  rounds_after_convergence: number;
}

export interface EndSummary {
  map_rule: RuleInfo;
  correct: boolean;
  rounds: number;
  misunderstanding: MisunderstandingSummary;
}

export type EventKind = "card_played" | "utterance_emitted" | "session_ended";

export interface SessionEvent {
  index: number;
  kind: EventKind;
  payload: CardPlayedPayload | UtterancePayload | EndSummary;
  round: number;
}

export interface CreatedSession {
  session_id: string;
  rule: RuleInfo;
  mode: string;
  round: number;
  deck: CardInfo[];
  created_at: string;
  debug: boolean;
}

export interface HistoryEntry {
  card_id: number;
  pile: number;
  round: number;
}

export interface SessionSummary {
  session_id: string;
  rule: RuleInfo;
  mode: string;
  round: number;
  ended: boolean;
  converged: boolean;
  created_at: string;
  history: HistoryEntry[];
  utterances: UtterancePayload[];
  summary?: EndSummary;
}

export interface PlayResponse {
  utterance: UtterancePayload;
  round: number;
  converged: boolean;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  field?: string;
}
