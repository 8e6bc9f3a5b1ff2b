/** End-to-end: a scripted client completes a T=20 session against the real
 * service and the resulting model state is bit-identical to an in-process
 * run fed the same answers.  Also exercises double-submit suppression and
 * reconnect-resume over a real socket. */

import { ChildProcess, execFile, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { LabelerClient, SocketLike } from "../src/client.js";
import { Bit } from "../src/protocol.js";

const PORT = 18765;
const BASE = `ws://127.0.0.1:${PORT}`;
const T = 20;
const SEED = 42;

const scriptedBit = (t: number): Bit => (t % 2 === 0 ? -1 : 1);

let server: ChildProcess;

async function waitForHealth(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const res = await fetch(`http://127.0.0.1:${PORT}/healthz`);
      if (res.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("session service did not come up");
}

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-m", "weaklearn.cli", "serve", "--task", "median", "-T", String(T),
     "--seed", String(SEED), "--bind", `127.0.0.1:${PORT}`],
    { stdio: "ignore" },
  );
  await waitForHealth();
}, 60_000);

afterAll(() => {
  server?.kill();
});

interface Tap {
  received: string[];
  sent: string[];
}

function tappedFactory(tap: Tap) {
  return (url: string): SocketLike => {
    const ws = new WebSocket(url);
    const adapter: SocketLike = {
      send: (data: string) => {
        tap.sent.push(data);
        ws.send(data);
      },
      close: () => ws.close(),
      onmessage: null,
      onopen: null,
      onclose: null,
    };
    ws.onopen = (ev) => adapter.onopen?.(ev);
    ws.onclose = (ev) => adapter.onclose?.(ev);
    ws.onmessage = (ev) => {
      tap.received.push(String(ev.data));
      adapter.onmessage?.({ data: ev.data });
    };
    return adapter;
  };
}

function inProcessFinalState(bits: number[]): Promise<string> {
  const script = [
    "import sys, json",
    "from weaklearn.oracle import SessionConfig, SessionRunner, dumps_protocol",
    "bits = json.loads(sys.argv[1])",
    `runner = SessionRunner(SessionConfig(step_kind='median', T=len(bits), seed=${SEED}))`,
    "for bit in bits:",
    "    q = runner.current_query()",
    "    runner.submit_answer(q['t'], bit)",
    "print(dumps_protocol(runner.state_message()))",
  ].join("\n");
  return new Promise((resolve, reject) => {
    execFile("python3", ["-c", script, JSON.stringify(bits)], (err, stdout) =>
      err ? reject(err) : resolve(stdout.trim()),
    );
  });
}

describe("scripted session against the live service", () => {
  it(
    "completes T=20 bit-identically, suppresses double-submits, and resumes after reconnect",
    async () => {
      const tap: Tap = { received: [], sent: [] };
      const client = new LabelerClient(BASE, tappedFactory(tap));
      const scheduled = new Set<number>();
      const sentOk = new Set<number>();
      let reconnected = false;
      let doubleSubmitSecondSend: boolean | null = null;

      const done = new Promise<void>((resolve, reject) => {
        const timer = setTimeout(() => reject(new Error("session timed out")), 45_000);
        client.onChange((s) => {
          if (s.done) {
            clearTimeout(timer);
            resolve();
            return;
          }
          const q = s.outstanding;
          if (!q || scheduled.has(q.t) || sentOk.has(q.t)) return;
          if (q.t === 11 && !reconnected) {
            // drop the connection mid-session; resume with the session id
            reconnected = true;
            client.disconnect();
            setTimeout(() => client.connect(), 100);
            return;
          }
          scheduled.add(q.t);
          queueMicrotask(() => {
            scheduled.delete(q.t);
            const sent = client.answer(q.t, scriptedBit(q.t));
            if (sent) sentOk.add(q.t);
            if (q.t === 5 && sent) {
              // double-submit: the second call must not reach the wire
              doubleSubmitSecondSend = client.answer(q.t, scriptedBit(q.t));
            }
          });
        });
      });

      client.connect();
      await done;

      // exactly one answer frame per step, in order, despite the double-submit
      const answers = tap.sent.map((f) => JSON.parse(f));
      expect(answers.map((a) => a.t)).toEqual(
        Array.from({ length: T }, (_, i) => i + 1),
      );
      expect(doubleSubmitSecondSend).toBe(false);
      expect(reconnected).toBe(true);
      expect(client.session.history).toHaveLength(T);
      expect(client.session.stateT).toBe(T);

      // reconnect resumed without duplication: states observed once each
      const stateTs = tap.received
        .map((f) => JSON.parse(f))
        .filter((m) => m.type === "state")
        .map((m) => m.t);
      expect(stateTs).toEqual(Array.from({ length: T }, (_, i) => i + 1));

      // bit-identical model: the final wire state equals the in-process run
      const finalWire = JSON.parse(
        tap.received.filter((f) => JSON.parse(f).type === "state").at(-1)!,
      );
      const bits = answers.map((a) => a.bit);
      const local = JSON.parse(await inProcessFinalState(bits));
      expect(finalWire.t).toBe(local.t);
      expect(finalWire.riskEstimate).toBe(local.riskEstimate);
      expect(finalWire.preview).toEqual(local.preview);
    },
    60_000,
  );
});
