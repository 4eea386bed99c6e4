/** Message schema of the console websocket stream.
 *
 * The browser is a pure view/controller: it never computes intensities or
 * classifications, it only renders what the server sends. Parsing is
 * therefore strict; anything malformed is dropped (with a console
 * diagnostic at the call site) rather than guessed at.
 */

export const SITE_NAMES = [
  "index_mid",
  "middle_mid",
  "ring_mid",
  "pinky_mid",
  "thumb",
  "palm_edge",
  "palm_center",
] as const;

export const SITE_COUNT = SITE_NAMES.length;

export const PHASES = ["Idle", "Clasped", "Released"] as const;
export type Phase = (typeof PHASES)[number];

export interface StateMessage {
  type: "state";
  t_us: number;
  phase: Phase;
  dist: number[]; // SITE_COUNT intensities in [0, 1]
  own_grip: number;
  opp_grip: number;
  stale: boolean;
}

export interface ClassifiedMessage {
  type: "classified";
  emotion: string;
  subtendency: number;
  distance: number;
}

export interface EventMessage {
  type: "event";
  name: string;
  t_us: number;
}

export interface ErrorMessage {
  type: "error";
  reason: string;
}

export type ServerMessage =
  | StateMessage
  | ClassifiedMessage
  | EventMessage
  | ErrorMessage;

const isFiniteNumber = (v: unknown): v is number =>
  typeof v === "number" && Number.isFinite(v);

const clamp01 = (v: number): number => Math.min(1, Math.max(0, v));

function asState(raw: Record<string, unknown>): StateMessage | null {
  const { t_us, phase, dist, own_grip, opp_grip, stale } = raw;
  if (!isFiniteNumber(t_us) || typeof stale !== "boolean") return null;
  if (!PHASES.includes(phase as Phase)) return null;
  if (!isFiniteNumber(own_grip) || !isFiniteNumber(opp_grip)) return null;
  if (!Array.isArray(dist) || dist.length !== SITE_COUNT) return null;
  if (!dist.every(isFiniteNumber)) return null;
  return {
    type: "state",
    t_us,
    phase: phase as Phase,
    dist: dist.map(clamp01),
    own_grip: clamp01(own_grip),
    opp_grip: clamp01(opp_grip),
    stale,
  };
}

export function parseServerMessage(text: string): ServerMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const msg = raw as Record<string, unknown>;
  switch (msg.type) {
    case "state":
      return asState(msg);
    case "classified":
      return typeof msg.emotion === "string" &&
        isFiniteNumber(msg.subtendency) &&
        isFiniteNumber(msg.distance)
        ? {
            type: "classified",
            emotion: msg.emotion,
            subtendency: msg.subtendency,
            distance: msg.distance,
          }
        : null;
    case "event":
      return typeof msg.name === "string" && isFiniteNumber(msg.t_us)
        ? { type: "event", name: msg.name, t_us: msg.t_us }
        : null;
    case "error":
      return typeof msg.reason === "string"
        ? { type: "error", reason: msg.reason }
        : null;
    default:
      return null;
  }
}

export type Role = "a" | "b";

export function makeJoin(session: string, role: Role): string {
  return JSON.stringify({ type: "join", session, role });
}

export function makeReplayJoin(file: string, speed = 1.0): string {
  return JSON.stringify({ type: "join", role: "replay", file, speed });
}

/** Grip is clamped to [0, 1]; wrist components become clamped integers. */
export function makeInput(
  grip: number,
  wristMm: readonly [number, number, number],
): string {
  const bound = 500; // the drag pane never maps beyond +-0.5 m
  const wrist = wristMm.map((v) =>
    Math.max(-bound, Math.min(bound, Math.round(v))),
  );
  return JSON.stringify({ type: "input", grip: clamp01(grip), wrist_mm: wrist });
}
