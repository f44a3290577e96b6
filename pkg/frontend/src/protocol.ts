// Wire protocol v1: newline-free JSON envelopes over one websocket.
// The server is authoritative; these types mirror its payload schemas.

export const PROTOCOL_VERSION = 1;

export type Role = "human" | "robot";

export interface BlockObj {
  id: number;
  faces: string[];
  face: number;
  x: number;
  y: number;
}

export interface WorldObj {
  width: number;
  height: number;
  blocks: BlockObj[];
}

export interface TargetEntry {
  id: number;
  x: number;
  y: number;
  face: string | null;
}

export interface TargetObj {
  required: TargetEntry[];
}

export interface ScorePayload {
  completion: number | null;
  reason?: string;
  platform_count?: number;
  t: number;
}

export interface PairedPayload {
  session_id: string;
  role: Role;
  world: WorldObj;
  time_limit_s: number;
  policy: { kind: string; seed: number; robot_first: boolean };
  objective: string;
  protocol_version: number;
  target?: TargetObj; // present only for the human role
  score?: ScorePayload;
  platform?: { x: number; y: number; width: number; height: number };
}

export interface GameOverPayload {
  session_id: string;
  reason: "deadline" | "abort";
  metrics: Record<string, unknown>;
  final_world: WorldObj;
}

export type ServerMessage =
  | { type: "paired"; payload: PairedPayload }
  | { type: "state"; payload: { world: WorldObj; t: number } }
  | { type: "chat"; payload: { text: string; t: number } }
  | { type: "gesture"; payload: { x: number; y: number; t: number } }
  | { type: "score"; payload: ScorePayload }
  | { type: "game_over"; payload: GameOverPayload }
  | { type: "error"; payload: { code: string; message: string } };

export type ClientMessage =
  | { type: "join"; payload: Record<string, never> }
  | { type: "chat"; payload: { text: string } }
  | { type: "gesture"; payload: { x: number; y: number } }
  | { type: "move"; payload: { block: number; to: { x: number; y: number } } }
  | { type: "flip"; payload: { block: number } };

export class ProtocolError extends Error {}

export function encode(message: ClientMessage): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, ...message });
}

/** Parse and version-check one frame from the server. */
export function decode(raw: string): ServerMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    throw new ProtocolError(`unparseable frame: ${raw.slice(0, 80)}`);
  }
  const frame = obj as { v?: number; type?: string; payload?: unknown };
  if (frame.v !== PROTOCOL_VERSION) {
    throw new ProtocolError(`protocol version mismatch: got ${frame.v}`);
  }
  if (typeof frame.type !== "string" || typeof frame.payload !== "object" || frame.payload === null) {
    throw new ProtocolError("malformed envelope");
  }
  return frame as ServerMessage;
}

export const joinMessage = (): ClientMessage => ({ type: "join", payload: {} });

export const chatMessage = (text: string): ClientMessage => ({
  type: "chat",
  payload: { text },
});

export const gestureMessage = (x: number, y: number): ClientMessage => ({
  type: "gesture",
  payload: { x, y },
});

export const moveMessage = (block: number, x: number, y: number): ClientMessage => ({
  type: "move",
  payload: { block, to: { x, y } },
});

export const flipMessage = (block: number): ClientMessage => ({
  type: "flip",
  payload: { block },
});
