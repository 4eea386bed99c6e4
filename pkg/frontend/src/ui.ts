/** DOM/canvas rendering and input binding.
 *
 * Everything DOM-touching lives inside ConsoleUI so the pure helpers
 * (site layout, color ramp) stay importable from tests without a browser.
 */

import { SITE_NAMES } from "./protocol.js";
import { gripFromSlider, wristFromDrag, type ViewState } from "./model.js";

/** Marker centers in normalized canvas coordinates, palm facing viewer. */
export const SITE_LAYOUT: readonly { x: number; y: number; label: string }[] = [
  { x: 0.3, y: 0.18, label: "index" },
  { x: 0.45, y: 0.12, label: "middle" },
  { x: 0.6, y: 0.16, label: "ring" },
  { x: 0.74, y: 0.26, label: "pinky" },
  { x: 0.12, y: 0.52, label: "thumb" },
  { x: 0.78, y: 0.62, label: "palm edge" },
  { x: 0.45, y: 0.6, label: "palm center" },
];

const RAMP: readonly [number, [number, number, number]][] = [
  [0.0, [30, 36, 48]],
  [0.5, [255, 170, 40]],
  [1.0, [255, 60, 40]],
];

/** Piecewise-linear color ramp over intensity in [0, 1]. */
export function colorFor(intensity: number): string {
  const v = Math.min(1, Math.max(0, intensity));
  for (let i = 1; i < RAMP.length; i++) {
    const [hi, chi] = RAMP[i]!;
    if (v <= hi) {
      const [lo, clo] = RAMP[i - 1]!;
      const f = hi === lo ? 0 : (v - lo) / (hi - lo);
      const mix = clo.map((c, k) => Math.round(c + f * (chi[k]! - c)));
      return `rgb(${mix[0]},${mix[1]},${mix[2]})`;
    }
  }
  return "rgb(255,60,40)";
}

export interface InputHandlers {
  onGrip(grip: number): void;
  onWrist(wrist: [number, number, number]): void;
}

export class ConsoleUI {
  private readonly canvas: HTMLCanvasElement;
  private readonly ctx: CanvasRenderingContext2D;
  private readonly phaseBadge: HTMLElement;
  private readonly staleBadge: HTMLElement;
  private readonly gripMeter: HTMLElement;
  private readonly oppMeter: HTMLElement;
  private readonly verdictPanel: HTMLElement;
  private readonly mediaPane: HTMLElement;
  private readonly eventLog: HTMLElement;
  private readonly slider: HTMLInputElement;

  constructor(doc: Document, handlers: InputHandlers) {
    const get = <T extends HTMLElement>(id: string): T => {
      const el = doc.getElementById(id);
      if (!el) throw new Error(`missing #${id}`);
      return el as T;
    };
    this.canvas = get<HTMLCanvasElement>("hand");
    const ctx = this.canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
    this.phaseBadge = get("phase");
    this.staleBadge = get("stale");
    this.gripMeter = get("own-grip");
    this.oppMeter = get("opp-grip");
    this.verdictPanel = get("verdict");
    this.mediaPane = get("media");
    this.eventLog = get("events");
    this.slider = get<HTMLInputElement>("grip-slider");

    this.slider.addEventListener("input", () => {
      handlers.onGrip(gripFromSlider(Number(this.slider.value)));
    });
    doc.addEventListener("keydown", (ev) => {
      if (ev.code === "Space" && !ev.repeat) {
        ev.preventDefault();
        handlers.onGrip(gripFromSlider(Number(this.slider.value)));
      }
    });
    doc.addEventListener("keyup", (ev) => {
      if (ev.code === "Space") handlers.onGrip(0);
    });

    const pane = get("swing");
    let origin: [number, number] | null = null;
    pane.addEventListener("pointerdown", (ev) => {
      origin = [ev.clientX, ev.clientY];
      pane.setPointerCapture(ev.pointerId);
    });
    pane.addEventListener("pointermove", (ev) => {
      if (!origin) return;
      handlers.onWrist(wristFromDrag(ev.clientX - origin[0], ev.clientY - origin[1]));
    });
    const release = () => {
      origin = null;
      handlers.onWrist([0, 0, 0]);
    };
    pane.addEventListener("pointerup", release);
    pane.addEventListener("pointercancel", release);
  }

  render(view: ViewState): void {
    this.drawHand(view.dist);
    this.phaseBadge.textContent = view.phase;
    this.phaseBadge.dataset.phase = view.phase;
    this.staleBadge.hidden = !view.stale;
    this.gripMeter.style.width = `${view.ownGrip * 100}%`;
    this.oppMeter.style.width = `${view.oppGrip * 100}%`;
    this.verdictPanel.textContent = view.verdict
      ? `${view.verdict.emotion} / style ${view.verdict.subtendency}` +
        ` (d=${view.verdict.distance.toFixed(3)})`
      : "awaiting a completed handshake";
    this.mediaPane.classList.toggle("active", view.mediaActive);
    this.eventLog.textContent = view.events.slice(-5).join(" · ");
  }

  private drawHand(dist: readonly number[]): void {
    const { width: w, height: h } = this.canvas;
    const ctx = this.ctx;
    ctx.clearRect(0, 0, w, h);

    ctx.strokeStyle = "#3a4256";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.ellipse(0.47 * w, 0.58 * h, 0.3 * w, 0.26 * h, 0, 0, 2 * Math.PI);
    ctx.stroke();
    for (const finger of SITE_LAYOUT.slice(0, 5)) {
      ctx.beginPath();
      ctx.ellipse(finger.x * w, finger.y * h + 0.05 * h, 0.055 * w, 0.11 * h,
                  ent(finger.x), 0, 2 * Math.PI);
      ctx.stroke();
    }

    ctx.font = "11px system-ui, sans-serif";
    ctx.textAlign = "center";
    SITE_LAYOUT.forEach((site, i) => {
      const v = dist[i] ?? 0;
      ctx.beginPath();
      ctx.arc(site.x * w, site.y * h, 0.05 * w + 0.02 * w * v, 0, 2 * Math.PI);
      ctx.fillStyle = colorFor(v);
      ctx.fill();
      ctx.strokeStyle = "#0b0e14";
      ctx.stroke();
      ctx.fillStyle = "#aab3c5";
      ctx.fillText(site.label, site.x * w, site.y * h + 0.09 * h);
    });
  }
}

/** Slight outward tilt for the finger outlines, by horizontal position. */
function ent(x: number): number {
  return (x - 0.45) * 0.9;
}

export { SITE_NAMES };
