// Input-to-wire mapping with affordance-level role enforcement: disallowed
// inputs never become messages (the server checks again anyway).

import {
  chatMessage,
  flipMessage,
  gestureMessage,
  moveMessage,
  type ClientMessage,
  type Role,
} from "./protocol.js";

export type UserInput =
  | { kind: "board-click"; x: number; y: number }
  | { kind: "chat-submit"; text: string }
  | { kind: "block-drop"; block: number; x: number; y: number }
  | { kind: "block-flip"; block: number };

/**
 * Map one user input to at most one wire message.
 * Returns null for inputs the role is not allowed to perform; callers treat
 * that as "the control should not even exist".
 */
export function emitUserAction(role: Role, input: UserInput): ClientMessage | null {
  if (role === "human") {
    switch (input.kind) {
      case "board-click":
        return gestureMessage(input.x, input.y);
      case "chat-submit": {
        const text = input.text.trim();
        return text ? chatMessage(text) : null;
      }
      default:
        return null; // humans never move or flip blocks from this client
    }
  }
  switch (input.kind) {
    case "block-drop":
      return moveMessage(input.block, input.x, input.y);
    case "block-flip":
      return flipMessage(input.block);
    default:
      return null; // robots have no chat box and clicks are not gestures
  }
}
