/** View state derived from the server stream, latest frame wins.
 *
 * The model keeps no history beyond the current frame (the stream
 * contract: render from the latest state only) plus the sticky bits a
 * human needs across frames: the last classification verdict, whether
 * the media cue is active, and a short event log.
 */

import {
  SITE_COUNT,
  type Phase,
  type ServerMessage,
  type StateMessage,
} from "./protocol.js";

export interface Verdict {
  emotion: string;
  subtendency: number;
  distance: number;
}

export interface ViewState {
  phase: Phase;
  dist: readonly number[];
  ownGrip: number;
  oppGrip: number;
  stale: boolean;
  tUs: number;
  verdict: Verdict | null;
  mediaActive: boolean;
  events: readonly string[];
  errors: readonly string[];
  frames: number;
}

const EVENT_LOG_LIMIT = 20;

const zeroView = (): ViewState => ({
  phase: "Idle",
  dist: new Array(SITE_COUNT).fill(0),
  ownGrip: 0,
  oppGrip: 0,
  stale: true,
  tUs: 0,
  verdict: null,
  mediaActive: false,
  events: [],
  errors: [],
  frames: 0,
});

export const allZero = (dist: readonly number[]): boolean =>
  dist.every((v) => v === 0);

export class ConsoleModel {
  private view: ViewState = zeroView();

  state(): ViewState {
    return this.view;
  }

  apply(msg: ServerMessage): void {
    switch (msg.type) {
      case "state":
        this.applyState(msg);
        break;
      case "classified":
        this.view = {
          ...this.view,
          verdict: {
            emotion: msg.emotion,
            subtendency: msg.subtendency,
            distance: msg.distance,
          },
        };
        break;
      case "event":
        this.view = {
          ...this.view,
          mediaActive:
            msg.name === "media_start"
              ? true
              : msg.name === "replay_end"
                ? false
                : this.view.mediaActive,
          events: [...this.view.events, msg.name].slice(-EVENT_LOG_LIMIT),
        };
        break;
      case "error":
        this.view = {
          ...this.view,
          errors: [...this.view.errors, msg.reason].slice(-EVENT_LOG_LIMIT),
        };
        break;
    }
  }

  private applyState(msg: StateMessage): void {
    this.view = {
      ...this.view,
      phase: msg.phase,
      dist: msg.dist,
      ownGrip: msg.own_grip,
      oppGrip: msg.opp_grip,
      stale: msg.stale,
      tUs: msg.t_us,
      frames: this.view.frames + 1,
    };
  }
}

// --- input shaping -----------------------------------------------------------

/** Range slider (0..100) to grip pressure. */
export function gripFromSlider(value: number): number {
  if (!Number.isFinite(value)) return 0;
  return Math.min(1, Math.max(0, value / 100));
}

/** Pointer drag offset to wrist displacement, x right / y up, in mm. */
export function wristFromDrag(
  dxPx: number,
  dyPx: number,
  mmPerPx = 1,
): [number, number, number] {
  const toMm = (px: number) => Math.round(px * mmPerPx);
  return [toMm(dxPx), toMm(-dyPx), 0];
}

// --- input pacing --------------------------------------------------------------

/** Sends the current input at most once per tick, and only when it changed
 * or the keepalive ran out (the server holds the last value between
 * messages, so silence means "unchanged", not "released"). */
export class InputPacer {
  private lastSent = "";
  private ticksSinceSend = 0;

  constructor(
    private readonly send: (text: string) => void,
    private readonly keepaliveTicks = 30,
  ) {}

  tick(encoded: string): boolean {
    this.ticksSinceSend += 1;
    if (encoded === this.lastSent && this.ticksSinceSend < this.keepaliveTicks) {
      return false;
    }
    this.send(encoded);
    this.lastSent = encoded;
    this.ticksSinceSend = 0;
    return true;
  }
}
