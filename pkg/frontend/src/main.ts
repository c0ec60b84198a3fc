// App wiring: start screen -> live board -> summary.

import { ApiError, makeApi } from "./api";
import { renderBoard, renderStart } from "./render";
import {
  applyEvent,
  clearPending,
  initialState,
  markPending,
  selectCard,
  setConnection,
  setConverged,
  setNotice,
  type ViewState,
} from "./state";
import { SessionStream } from "./stream";
import type { RuleInfo } from "./types";

const api = makeApi();
const root = document.getElementById("app") as HTMLElement;

let state: ViewState | null = null;
let stream: SessionStream | null = null;

function rerender(): void {
  if (state !== null) {
    renderBoard(root, state, boardHandlers);
  }
}

function update(next: ViewState): void {
  state = next;
  rerender();
}

const boardHandlers = {
  onSelectCard(cardId: number): void {
    if (!state || state.ended) return;
    update(selectCard(state, state.selectedCard === cardId ? null : cardId));
  },

  onDropPile(pile: number): void {
    if (!state || state.ended || state.selectedCard === null) return;
    const cardId = state.selectedCard;
    update(markPending(state, cardId, pile)); // optimistic move
    api.submitPlay(state.sessionId, cardId, pile).then(
      (response) => {
        if (!state) return;
        // The stream delivers the authoritative events; just track the flag.
        update(setConverged(state, response.converged));
      },
      (error) => {
        if (!state) return;
        let message = error instanceof Error ? error.message : String(error);
        if (error instanceof ApiError && error.code === "wrong_pile") {
          message = `That pile contradicts your rule: ${error.message}`;
        }
        update(setNotice(clearPending(state, cardId), message)); // snap back
      },
    );
  },

  onEnd(): void {
    if (!state || state.ended) return;
    api.endSession(state.sessionId).then(
      () => {
        // session_ended arrives on the stream and flips the view.
      },
      (error) => {
        if (!state) return;
        if (error instanceof ApiError && error.code === "session_closed") {
          return; // already ended elsewhere; the summary view is on its way
        }
        update(setNotice(state, error instanceof Error ? error.message : String(error)));
      },
    );
  },

  onDownload(): void {
    if (!state) return;
    const sessionId = state.sessionId;
    api.fetchTrace(sessionId).then((text) => {
      const blob = new Blob([text], { type: "application/x-ndjson" });
      const link = document.createElement("a");
      link.href = URL.createObjectURL(blob);
      link.download = `session-${sessionId}.jsonl`;
      link.click();
      URL.revokeObjectURL(link.href);
    });
  },

  onDismissNotice(): void {
    if (!state) return;
    update(setNotice(state, null));
  },
};

function startSession(form: {
  rule: number | "random";
  mode: string;
  seed: number;
  debug: boolean;
}, rules: RuleInfo[]): void {
  api
    .createSession({ rule: form.rule, mode: form.mode, seed: form.seed, debug: form.debug })
    .then(
      (created) => {
        state = initialState(created);
        rerender();
        stream = new SessionStream(created.session_id, {
          onEvent(event) {
            if (!state) return;
            update(applyEvent(state, event));
          },
          onStatus(status) {
            if (!state) return;
            update(setConnection(state, status));
          },
        });
        stream.start(-1);
      },
      (error) => {
        const message =
          error instanceof ApiError && error.field
            ? `${error.field}: ${error.message}`
            : error instanceof Error
              ? error.message
              : String(error);
        renderStart(root, rules, message, { onSubmit: (f) => startSession(f, rules) });
      },
    );
}

api.listRules().then(
  (rules) => {
    renderStart(root, rules, null, { onSubmit: (form) => startSession(form, rules) });
  },
  (error) => {
    renderStart(root, [], error instanceof Error ? error.message : String(error), {
      onSubmit: (form) => startSession(form, []),
    });
  },
);
