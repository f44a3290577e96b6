// DOM rendering. The whole interface is re-rendered from the ClientView on
// every server frame; at this board size that is cheaper than being clever.

import type { UserInput } from "./actions.js";
import type { ClientView } from "./state.js";
import { remainingSeconds } from "./state.js";
import type { TargetObj, WorldObj } from "./protocol.js";

export type ActionSink = (input: UserInput) => void;

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** One cell per grid position; blocks show their current face symbol. */
export function renderBoard(view: ClientView, onAction: ActionSink): HTMLElement {
  const board = el("div", "board");
  const world = view.world;
  if (world === null) return board;
  board.style.setProperty("--cols", String(world.width));

  const byCell = new Map<string, { id: number; symbol: string }>();
  for (const b of world.blocks) {
    byCell.set(`${b.x},${b.y}`, { id: b.id, symbol: b.faces[b.face] });
  }
  const marked = new Set(view.gestures.map((g) => `${g.x},${g.y}`));

  for (let y = 0; y < world.height; y++) {
    for (let x = 0; x < world.width; x++) {
      const cell = el("div", "cell");
      cell.dataset.x = String(x);
      cell.dataset.y = String(y);
      if (marked.has(`${x},${y}`)) cell.classList.add("gesture-mark");

      const block = byCell.get(`${x},${y}`);
      if (block) {
        const tile = el("div", "tile", block.symbol);
        tile.dataset.block = String(block.id);
        if (view.role === "robot" && view.phase === "playing") {
          tile.draggable = true;
          tile.addEventListener("dragstart", (ev) => {
            (ev as DragEvent).dataTransfer?.setData("text/plain", String(block.id));
          });
          tile.addEventListener("dblclick", () =>
            onAction({ kind: "block-flip", block: block.id })
          );
        } else {
          tile.draggable = false;
        }
        cell.appendChild(tile);
      }

      if (view.role === "human" && view.phase === "playing") {
        cell.addEventListener("click", () => onAction({ kind: "board-click", x, y }));
      }
      if (view.role === "robot" && view.phase === "playing") {
        cell.addEventListener("dragover", (ev) => ev.preventDefault());
        cell.addEventListener("drop", (ev) => {
          ev.preventDefault();
          const raw = (ev as DragEvent).dataTransfer?.getData("text/plain");
          const id = raw ? Number(raw) : NaN;
          if (Number.isInteger(id)) onAction({ kind: "block-drop", block: id, x, y });
        });
      }
      board.appendChild(cell);
    }
  }
  return board;
}

/** Static goal view shown beside the human's board. */
export function renderTarget(target: TargetObj, world: WorldObj): HTMLElement {
  const panel = el("div", "target-panel");
  panel.appendChild(el("h3", "panel-title", "Goal"));
  const grid = el("div", "board target-board");
  grid.style.setProperty("--cols", String(world.width));
  const byCell = new Map<string, string>();
  const symbols = new Map(world.blocks.map((b) => [b.id, b.faces[b.face]]));
  for (const entry of target.required) {
    byCell.set(`${entry.x},${entry.y}`, entry.face ?? symbols.get(entry.id) ?? "?");
  }
  for (let y = 0; y < world.height; y++) {
    for (let x = 0; x < world.width; x++) {
      const cell = el("div", "cell");
      const symbol = byCell.get(`${x},${y}`);
      if (symbol !== undefined) cell.appendChild(el("div", "tile ghost", symbol));
      grid.appendChild(cell);
    }
  }
  panel.appendChild(grid);
  return panel;
}

export function renderApp(root: HTMLElement, view: ClientView, onAction: ActionSink): void {
  root.textContent = "";
  const shell = el("div", "shell");

  const header = el("header", "header");
  header.appendChild(el("h1", undefined, "blocktalk"));
  if (view.phase === "connecting") header.appendChild(el("p", "status", "connecting..."));
  if (view.phase === "waiting") header.appendChild(el("p", "status", "waiting for a partner..."));
  if (view.phase === "playing" || view.phase === "over") {
    header.appendChild(el("p", "role-badge", `you are the ${view.role}`));
    const timer = el("p", "timer", `${Math.ceil(remainingSeconds(view))}s left`);
    header.appendChild(timer);
    if (view.role === "human") {
      const text =
        view.completion === null
          ? `score: - (${view.completionReason ?? "n/a"})`
          : `score: ${view.completion.toFixed(3)}`;
      header.appendChild(el("p", "score", text));
    }
  }
  shell.appendChild(header);

  const main = el("main", "columns");
  const boardColumn = el("section", "board-column");
  boardColumn.appendChild(renderBoard(view, onAction));
  main.appendChild(boardColumn);

  if (view.role === "human" && view.target && view.world) {
    main.appendChild(renderTarget(view.target, view.world));
  }

  const side = el("aside", "side-panel");
  const log = el("div", "chat-log");
  for (const line of view.chat) {
    log.appendChild(el("p", "chat-line", line.text));
  }
  side.appendChild(log);
  if (view.role === "human" && view.phase === "playing") {
    const form = el("form", "chat-form") as HTMLFormElement;
    const input = el("input", "chat-input") as HTMLInputElement;
    input.placeholder = "instruct your robot...";
    const button = el("button", "chat-send", "send") as HTMLButtonElement;
    button.type = "submit";
    form.appendChild(input);
    form.appendChild(button);
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      onAction({ kind: "chat-submit", text: input.value });
      input.value = "";
    });
    side.appendChild(form);
  }
  main.appendChild(side);
  shell.appendChild(main);

  if (view.gameOver) {
    const over = el("div", "game-over");
    const metrics = view.gameOver.metrics as { completion_score?: number | null };
    const score =
      typeof metrics.completion_score === "number"
        ? metrics.completion_score.toFixed(3)
        : "-";
    over.appendChild(
      el("p", undefined, `game over (${view.gameOver.reason}); completion ${score}`)
    );
    shell.appendChild(over);
  }
  if (view.lastError) {
    shell.appendChild(el("div", "toast", view.lastError));
  }
  root.appendChild(shell);
}
