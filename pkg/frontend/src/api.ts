// Thin fetch client for the session API. The injectable fetch keeps the
// client testable without a browser or server.

import type {
  ApiErrorBody,
  CreatedSession,
  EndSummary,
  PlayResponse,
  RuleInfo,
  SessionSummary,
} from "./types";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly field?: string;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.code = body.code;
    this.status = status;
    this.field = body.field;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface CreateSessionRequest {
  rule: number | "random";
  mode: string;
  seed?: number;
  debug?: boolean;
  config?: Record<string, number | string>;
}

export interface Api {
  listRules(): Promise<RuleInfo[]>;
  createSession(body: CreateSessionRequest): Promise<CreatedSession>;
  submitPlay(sessionId: string, cardId: number, pile: number): Promise<PlayResponse>;
  getSession(sessionId: string): Promise<SessionSummary>;
  endSession(sessionId: string): Promise<EndSummary>;
  fetchTrace(sessionId: string): Promise<string>;
}

async function parseError(response: Response): Promise<ApiError> {
  let body: ApiErrorBody;
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    body = { code: "unexpected", message: `HTTP ${response.status}` };
  }
  return new ApiError(response.status, body);
}

export function makeApi(fetchImpl: FetchLike = (input, init) => fetch(input, init)): Api {
  async function request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetchImpl(path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  return {
    listRules: () => request<RuleInfo[]>("/api/rules"),
    createSession: (body) =>
      request<CreatedSession>("/api/sessions", {
        method: "POST",
        body: JSON.stringify(body),
      }),
    submitPlay: (sessionId, cardId, pile) =>
      request<PlayResponse>(`/api/sessions/${sessionId}/plays`, {
        method: "POST",
        body: JSON.stringify({ card_id: cardId, pile }),
      }),
    getSession: (sessionId) => request<SessionSummary>(`/api/sessions/${sessionId}`),
    endSession: (sessionId) =>
      request<EndSummary>(`/api/sessions/${sessionId}/end`, { method: "POST" }),
    fetchTrace: async (sessionId) => {
      const response = await fetchImpl(`/api/sessions/${sessionId}/trace`);
      if (!response.ok) {
        throw await parseError(response);
      }
      return response.text();
    },
  };
}
