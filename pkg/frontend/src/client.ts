/** Thin websocket wrapper: joins one session, streams the held input at a
 * fixed cadence (33 ms, well under the 60 Hz ceiling), and forwards every
 * parsed server message to the model. Malformed frames are dropped with a
 * console diagnostic.
 */

import {
  makeInput,
  makeJoin,
  parseServerMessage,
  type Role,
  type ServerMessage,
} from "./protocol.js";
import { InputPacer } from "./model.js";

const INPUT_PERIOD_MS = 33;

export class ConsoleClient {
  private socket: WebSocket | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private pacer: InputPacer | null = null;
  private grip = 0;
  private wrist: [number, number, number] = [0, 0, 0];

  constructor(
    private readonly url: string,
    private readonly onMessage: (msg: ServerMessage) => void,
    private readonly onClose: () => void = () => {},
  ) {}

  connect(session: string, role: Role): void {
    const socket = new WebSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      socket.send(makeJoin(session, role));
      this.pacer = new InputPacer((text) => socket.send(text));
      this.timer = setInterval(() => this.flush(), INPUT_PERIOD_MS);
    };
    socket.onmessage = (event) => {
      const msg = parseServerMessage(String(event.data));
      if (msg === null) {
        console.warn("dropped malformed server message", event.data);
        return;
      }
      this.onMessage(msg);
    };
    socket.onclose = () => {
      this.stop();
      this.onClose();
    };
  }

  setGrip(grip: number): void {
    this.grip = grip;
  }

  setWrist(wrist: [number, number, number]): void {
    this.wrist = wrist;
  }

  private flush(): void {
    if (this.socket?.readyState === WebSocket.OPEN && this.pacer) {
      this.pacer.tick(makeInput(this.grip, this.wrist));
    }
  }

  private stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  close(): void {
    this.stop();
    this.socket?.close();
  }
}
