// DOM rendering from ViewState. Full re-render per state change; the board
// is 27 cards, so simplicity wins over diffing.

import { pileCards, trayCards, type ViewState } from "./state";
import type { CardInfo, RuleInfo } from "./types";

export interface BoardHandlers {
  onSelectCard(cardId: number): void;
  onDropPile(pile: number): void;
  onEnd(): void;
  onDownload(): void;
  onDismissNotice(): void;
}

const SHAPE_GLYPHS: Record<string, string> = {
  Diamond: "◆",
  Oval: "⬮",
  Squiggle: "∿",
};
const COUNT_REPEATS: Record<string, number> = { One: 1, Two: 2, Three: 3 };
const CE_LABELS: Record<string, string> = {
  unsure: "unsure",
  think: "thinks",
  know: "knows",
};

export function describeRule(rule: RuleInfo): string {
  const parts = Object.entries(rule.mapping).map(([value, pile]) => `${value} → Pile ${pile}`);
  return `${rule.dimension}: ${parts.join(", ")}`;
}

function cardNode(card: CardInfo, options: { selected?: boolean; pending?: boolean }): HTMLElement {
  const node = document.createElement("button");
  node.type = "button";
  node.className = `card color-${card.color.toLowerCase()}`;
  if (options.selected) node.classList.add("selected");
  if (options.pending) node.classList.add("pending");
  node.dataset.cardId = String(card.id);
  node.setAttribute("aria-label", `${card.count} ${card.color} ${card.shape}s`);
  const glyph = SHAPE_GLYPHS[card.shape] ?? "?";
  node.textContent = glyph.repeat(COUNT_REPEATS[card.count] ?? 1);
  return node;
}

function transcriptNode(state: ViewState): HTMLElement {
  const panel = document.createElement("section");
  panel.className = "transcript";
  panel.setAttribute("aria-label", "learner feedback");
  const heading = document.createElement("h2");
  heading.textContent = "Learner feedback";
  panel.append(heading);
  const list = document.createElement("ol");
  for (const entry of state.transcript) {
    const item = document.createElement("li");
    item.className = "bubble";
    const round = document.createElement("span");
    round.className = "round";
    round.textContent = `round ${entry.round}`;
    item.append(round);
    if (entry.ce !== null) {
      const badge = document.createElement("span");
      badge.className = `ce ce-${entry.ce}`;
      badge.setAttribute("aria-label", `learner ${CE_LABELS[entry.ce] ?? entry.ce}`);
      badge.textContent = entry.ce;
      item.append(badge);
    }
    const text = document.createElement("span");
    text.className = entry.ce !== null ? "utterance ce-text" : "utterance";
    text.textContent = entry.text;
    item.append(text);
    list.append(item);
  }
  panel.append(list);
  return panel;
}

function summaryNode(state: ViewState, handlers: BoardHandlers): HTMLElement {
  const panel = document.createElement("section");
  panel.className = "summary";
  const heading = document.createElement("h2");
  heading.textContent = "Session over";
  panel.append(heading);
  const summary = state.summary;
  if (summary) {
    const guess = document.createElement("p");
    guess.textContent = `The learner's guess: ${describeRule(summary.map_rule)}`;
    const verdict = document.createElement("p");
    verdict.className = summary.correct ? "correct" : "incorrect";
    verdict.textContent = summary.correct
      ? `Correct, after ${summary.rounds} rounds.`
      : `Incorrect, after ${summary.rounds} rounds.`;
    panel.append(guess, verdict);
    if (summary.misunderstanding.ended_before_convergence) {
      const note = document.createElement("p");
      note.textContent = "You stopped before the learner had settled on a rule.";
      panel.append(note);
    } else if (summary.misunderstanding.rounds_after_convergence > 0) {
      const note = document.createElement("p");
      note.textContent = `The learner was already sure for the last ${summary.misunderstanding.rounds_after_convergence} round(s).`;
      panel.append(note);
    }
  }
  const download = document.createElement("button");
  download.type = "button";
  download.id = "download";
  download.textContent = "Download session trace";
  download.addEventListener("click", handlers.onDownload);
  panel.append(download);
  return panel;
}

export function renderBoard(root: HTMLElement, state: ViewState, handlers: BoardHandlers): void {
  root.replaceChildren();

  const header = document.createElement("header");
  const title = document.createElement("h1");
  title.textContent = "Teach the sorting rule";
  const ruleBanner = document.createElement("p");
  ruleBanner.className = "rule-banner";
  ruleBanner.textContent = `Your rule — ${describeRule(state.rule)}`;
  const status = document.createElement("span");
  status.className = `connection ${state.connection}`;
  status.textContent = state.connection;
  header.append(title, ruleBanner, status);
  root.append(header);

  if (state.notice) {
    const notice = document.createElement("div");
    notice.className = "notice";
    notice.setAttribute("role", "alert");
    const text = document.createElement("span");
    text.textContent = state.notice;
    const dismiss = document.createElement("button");
    dismiss.type = "button";
    dismiss.textContent = "dismiss";
    dismiss.addEventListener("click", handlers.onDismissNotice);
    notice.append(text, dismiss);
    root.append(notice);
  }

  const board = document.createElement("main");
  board.className = "board";
  const piles = document.createElement("div");
  piles.className = "piles";
  for (const pile of [1, 2, 3]) {
    const zone = document.createElement("section");
    zone.className = "pile";
    zone.dataset.pile = String(pile);
    const label = document.createElement("h2");
    label.textContent = `Pile ${pile}`;
    zone.append(label);
    for (const { card, pending } of pileCards(state, pile)) {
      zone.append(cardNode(card, { pending }));
    }
    if (!state.ended) {
      zone.addEventListener("click", () => handlers.onDropPile(pile));
    }
    piles.append(zone);
  }
  board.append(piles);

  if (!state.ended) {
    const tray = document.createElement("section");
    tray.className = "tray";
    const label = document.createElement("h2");
    label.textContent = state.selectedCard === null ? "Pick a card" : "Now pick a pile";
    tray.append(label);
    for (const card of trayCards(state)) {
      const node = cardNode(card, { selected: state.selectedCard === card.id });
      node.addEventListener("click", (event) => {
        event.stopPropagation();
        handlers.onSelectCard(card.id);
      });
      tray.append(node);
    }
    board.append(tray);

    const controls = document.createElement("div");
    controls.className = "controls";
    const convergence = document.createElement("span");
    convergence.className = "converged-flag";
    convergence.textContent = state.converged
      ? "The learner reports it is confident."
      : `Round ${state.round}`;
    const end = document.createElement("button");
    end.type = "button";
    end.id = "end-session";
    end.textContent = "End session & reveal";
    end.addEventListener("click", handlers.onEnd);
    controls.append(convergence, end);
    board.append(controls);
  } else {
    board.append(summaryNode(state, handlers));
  }

  board.append(transcriptNode(state));
  root.append(board);
}

export interface StartHandlers {
  onSubmit(form: { rule: number | "random"; mode: string; seed: number; debug: boolean }): void;
}

export function renderStart(
  root: HTMLElement,
  rules: RuleInfo[],
  error: string | null,
  handlers: StartHandlers,
): void {
  root.replaceChildren();
  const panel = document.createElement("main");
  panel.className = "start";
  const title = document.createElement("h1");
  title.textContent = "Start a teaching session";
  panel.append(title);

  if (error) {
    const banner = document.createElement("p");
    banner.className = "inline-error";
    banner.setAttribute("role", "alert");
    banner.textContent = error;
    panel.append(banner);
  }

  const form = document.createElement("form");

  const ruleLabel = document.createElement("label");
  ruleLabel.textContent = "Rule ";
  const ruleSelect = document.createElement("select");
  ruleSelect.name = "rule";
  const randomOption = document.createElement("option");
  randomOption.value = "random";
  randomOption.textContent = "Random (revealed to you)";
  ruleSelect.append(randomOption);
  for (const rule of rules) {
    const option = document.createElement("option");
    option.value = String(rule.id);
    option.textContent = describeRule(rule);
    ruleSelect.append(option);
  }
  ruleLabel.append(ruleSelect);

  const modeLabel = document.createElement("label");
  modeLabel.textContent = "Learner feedback ";
  const modeSelect = document.createElement("select");
  modeSelect.name = "mode";
  for (const [value, text] of [
    ["teacher_aware", "confidence-aware"],
    ["baseline", "baseline"],
  ]) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = text;
    modeSelect.append(option);
  }
  modeLabel.append(modeSelect);

  const seedLabel = document.createElement("label");
  seedLabel.textContent = "Seed ";
  const seedInput = document.createElement("input");
  seedInput.type = "number";
  seedInput.name = "seed";
  seedInput.value = "0";
  seedLabel.append(seedInput);

  const debugLabel = document.createElement("label");
  const debugInput = document.createElement("input");
  debugInput.type = "checkbox";
  debugInput.name = "debug";
  debugLabel.append(debugInput, document.createTextNode(" debug session"));

  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = "Start";

  form.append(ruleLabel, modeLabel, seedLabel, debugLabel, submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    handlers.onSubmit({
      rule: ruleSelect.value === "random" ? "random" : Number(ruleSelect.value),
      mode: modeSelect.value,
      seed: Number(seedInput.value) || 0,
      debug: debugInput.checked,
    });
  });
  panel.append(form);
  root.append(panel);
}
