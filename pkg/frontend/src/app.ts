// Browser entry point: one socket, one reducer, full re-render per frame.

import { emitUserAction, type UserInput } from "./actions.js";
import { renderApp } from "./board.js";
import { decode, encode, joinMessage, ProtocolError } from "./protocol.js";
import { initialView, pruneGestures, reduce, type ClientView } from "./state.js";

export function startApp(root: HTMLElement, url?: string): void {
  const target = url ?? `ws://${window.location.host}/ws`;
  const socket = new WebSocket(target);
  let view: ClientView = initialView();

  const render = () => renderApp(root, view, onAction);

  function onAction(input: UserInput): void {
    if (view.role === null || view.phase !== "playing") return;
    const message = emitUserAction(view.role, input);
    if (message !== null) socket.send(encode(message));
  }

  socket.addEventListener("open", () => {
    socket.send(encode(joinMessage()));
    view = { ...view, phase: "waiting" };
    render();
  });

  socket.addEventListener("message", (ev) => {
    try {
      view = reduce(view, decode(String(ev.data)), Date.now());
    } catch (err) {
      if (err instanceof ProtocolError) {
        view = { ...view, lastError: err.message };
      } else {
        throw err;
      }
    }
    render();
  });

  socket.addEventListener("close", () => {
    if (view.phase !== "over") {
      view = { ...view, lastError: "connection closed" };
      render();
    }
  });

  // countdown + gesture fading tick
  window.setInterval(() => {
    view = pruneGestures(view, Date.now());
    render();
  }, 500);

  render();
}

declare global {
  interface Window {
    blocktalkStart?: typeof startApp;
  }
}

if (typeof window !== "undefined") {
  window.blocktalkStart = startApp;
  const root = document.getElementById("app");
  if (root) startApp(root);
}
