import { LabelerClient, SocketLike } from "./client.js";
import { mount } from "./ui.js";

function domSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  const adapter: SocketLike = {
    send: (d) => ws.send(d),
    close: () => ws.close(),
    onmessage: null,
    onopen: null,
    onclose: null,
  };
  ws.onopen = (ev) => adapter.onopen?.(ev);
  ws.onclose = (ev) => adapter.onclose?.(ev);
  ws.onmessage = (ev) => adapter.onmessage?.({ data: ev.data });
  return adapter;
}

const params = new URLSearchParams(location.search);
const base = params.get("server") ?? `ws://${location.hostname}:8765`;
const client = new LabelerClient(base, domSocket);
mount(document.getElementById("app")!, client);
client.connect();
