// Browser entry point: connect the emulator to the serving origin's /ws
// endpoint. The session id comes from ?session=... (printed by `serve`).

import { EmulatorClient } from "./client.js";

function boot(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get("session") ?? "";
  const scheme = window.location.protocol === "https:" ? "wss" : "ws";
  const url = params.get("server") ?? `${scheme}://${window.location.host}/ws`;

  if (!sessionId) {
    root.innerHTML =
      '<div id="error-banner">missing ?session=&lt;id&gt; — ' +
      "start the server with `holoproxy serve --ui` and copy the printed session id</div>";
    return;
  }

  const client = new EmulatorClient(root, { url, sessionId });
  client.connect();

  const bar = document.getElementById("status-bar");
  if (bar) {
    const reconnect = document.createElement("button");
    reconnect.id = "reconnect-btn";
    reconnect.textContent = "reconnect";
    reconnect.addEventListener("click", () => client.reconnect());
    const reapply = document.createElement("button");
    reapply.id = "reapply-btn";
    reapply.title = "clear local caches and re-render from the latest snapshot";
    reapply.textContent = "re-apply snapshot";
    reapply.addEventListener("click", () => client.reapplySnapshot());
    bar.append(reconnect, reapply);
  }
}

boot();
