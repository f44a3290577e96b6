// Client-side view state. All transitions funnel through one reducer over
// server messages: the client never applies a move locally, it waits for the
// server's state frame, so the rendered board can never diverge.

import type {
  GameOverPayload,
  Role,
  ScorePayload,
  ServerMessage,
  TargetObj,
  WorldObj,
} from "./protocol.js";

export const GESTURE_FADE_MS = 2000;

export interface ChatLine {
  text: string;
  t: number;
}

export interface GestureMark {
  x: number;
  y: number;
  /** wall-clock ms when the mark should disappear */
  fadeAt: number;
}

export interface ClientView {
  phase: "connecting" | "waiting" | "playing" | "over";
  role: Role | null;
  sessionId: string | null;
  world: WorldObj | null;
  /** goal configuration; populated for the human role only */
  target: TargetObj | null;
  timeLimitS: number;
  /** session clock of the last server frame, ms */
  lastT: number;
  /** live completion score; human only, null when undefined */
  completion: number | null;
  completionReason: string | null;
  chat: ChatLine[];
  gestures: GestureMark[];
  gameOver: GameOverPayload | null;
  lastError: string | null;
}

export function initialView(): ClientView {
  return {
    phase: "connecting",
    role: null,
    sessionId: null,
    world: null,
    target: null,
    timeLimitS: 0,
    lastT: 0,
    completion: null,
    completionReason: null,
    chat: [],
    gestures: [],
    gameOver: null,
    lastError: null,
  };
}

export function remainingSeconds(view: ClientView): number {
  if (view.phase !== "playing") return 0;
  return Math.max(0, view.timeLimitS - view.lastT / 1000);
}

/** Drop gesture highlights whose fade deadline has passed. */
export function pruneGestures(view: ClientView, now: number): ClientView {
  const gestures = view.gestures.filter((g) => g.fadeAt > now);
  return gestures.length === view.gestures.length ? view : { ...view, gestures };
}

export function reduce(view: ClientView, message: ServerMessage, now = 0): ClientView {
  switch (message.type) {
    case "paired": {
      const p = message.payload;
      return {
        ...view,
        phase: "playing",
        role: p.role,
        sessionId: p.session_id,
        world: p.world,
        target: p.target ?? null,
        timeLimitS: p.time_limit_s,
        lastT: 0,
        completion: p.score?.completion ?? null,
        completionReason: p.score?.reason ?? null,
        lastError: null,
      };
    }
    case "state":
      return { ...view, world: message.payload.world, lastT: message.payload.t };
    case "chat":
      return {
        ...view,
        chat: [...view.chat, { text: message.payload.text, t: message.payload.t }],
        lastT: message.payload.t,
      };
    case "gesture":
      return {
        ...view,
        gestures: [
          ...view.gestures,
          { x: message.payload.x, y: message.payload.y, fadeAt: now + GESTURE_FADE_MS },
        ],
        lastT: message.payload.t,
      };
    case "score":
      return applyScore(view, message.payload);
    case "game_over":
      return {
        ...view,
        phase: "over",
        world: message.payload.final_world,
        gameOver: message.payload,
      };
    case "error":
      return { ...view, lastError: `${message.payload.code}: ${message.payload.message}` };
  }
}

function applyScore(view: ClientView, score: ScorePayload): ClientView {
  return {
    ...view,
    completion: score.completion,
    completionReason: score.reason ?? null,
    lastT: score.t,
  };
}
