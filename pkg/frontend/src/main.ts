/** Entry point: wire query parameters, websocket client, model, and UI. */

import { ConsoleClient } from "./client.js";
import { ConsoleModel } from "./model.js";
import { ConsoleUI } from "./ui.js";
import type { Role } from "./protocol.js";

function wsUrl(): string {
  const params = new URLSearchParams(location.search);
  const server = params.get("server");
  if (server) return server;
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${location.host}/ws`;
}

function start(): void {
  const params = new URLSearchParams(location.search);
  const session = params.get("session") ?? "default";
  const role = (params.get("role") === "b" ? "b" : "a") as Role;

  const model = new ConsoleModel();
  const client = new ConsoleClient(
    wsUrl(),
    (msg) => model.apply(msg),
    () => {
      const banner = document.getElementById("connection");
      if (banner) banner.hidden = false;
    },
  );
  const ui = new ConsoleUI(document, {
    onGrip: (grip) => client.setGrip(grip),
    onWrist: (wrist) => client.setWrist(wrist),
  });

  const roleBadge = document.getElementById("role");
  if (roleBadge) roleBadge.textContent = `session ${session} · role ${role}`;

  client.connect(session, role);
  const frame = () => {
    ui.render(model.state());
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

start();
