/** Wire protocol of the session service: message shapes, validation, and
 * serialization.  The client never does model math; it only relays bits. */

export type Bit = -1 | 0 | 1;

export interface QueryMessage {
  type: "query";
  t: number;
  sessionId: string;
  x: number[];
  kind: "halfspace" | "membership" | "shiftedHalfspace";
  z?: number[];
  u?: number[];
  set?: number[];
  threshold?: number;
}

export interface StateMessage {
  type: "state";
  t: number;
  sessionId: string;
  riskEstimate: number;
  preview: [number, number][];
}

export interface DoneMessage {
  type: "done";
  t: number;
  sessionId: string;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  message: string;
}

export type ServerMessage = QueryMessage | StateMessage | DoneMessage | ErrorMessage;

export class ProtocolError extends Error {}

function isNumberArray(v: unknown): v is number[] {
  return Array.isArray(v) && v.every((e) => typeof e === "number" && isFinite(e));
}

function asRecord(v: unknown): Record<string, unknown> {
  if (typeof v !== "object" || v === null || Array.isArray(v)) {
    throw new ProtocolError("message is not a JSON object");
  }
  return v as Record<string, unknown>;
}

function requireInt(obj: Record<string, unknown>, key: string): number {
  const v = obj[key];
  if (typeof v !== "number" || !Number.isInteger(v) || v < 0) {
    throw new ProtocolError(`field ${key} must be a non-negative integer`);
  }
  return v;
}

function requireString(obj: Record<string, unknown>, key: string): string {
  const v = obj[key];
  if (typeof v !== "string") {
    throw new ProtocolError(`field ${key} must be a string`);
  }
  return v;
}

/** Parse and validate one server message; throws ProtocolError on anything
 * that does not conform to the schema. */
export function parseServerMessage(text: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    throw new ProtocolError("not valid JSON");
  }
  const obj = asRecord(raw);
  const type = obj["type"];
  if (type === "query") {
    const kind = obj["kind"];
    if (kind !== "halfspace" && kind !== "membership" && kind !== "shiftedHalfspace") {
      throw new ProtocolError(`unknown query kind ${String(kind)}`);
    }
    if (!isNumberArray(obj["x"])) {
      throw new ProtocolError("query x must be a number array");
    }
    const msg: QueryMessage = {
      type: "query",
      t: requireInt(obj, "t"),
      sessionId: requireString(obj, "sessionId"),
      x: obj["x"],
      kind,
    };
    if (kind === "halfspace") {
      if (!isNumberArray(obj["z"]) || !isNumberArray(obj["u"])) {
        throw new ProtocolError("halfspace query needs z and u arrays");
      }
      msg.z = obj["z"];
      msg.u = obj["u"];
    } else if (kind === "membership") {
      if (!isNumberArray(obj["set"]) || obj["set"].length === 0) {
        throw new ProtocolError("membership query needs a non-empty set");
      }
      msg.set = obj["set"];
    } else {
      if (!isNumberArray(obj["u"]) || typeof obj["threshold"] !== "number") {
        throw new ProtocolError("shifted-halfspace query needs u and threshold");
      }
      msg.u = obj["u"];
      msg.threshold = obj["threshold"];
    }
    return msg;
  }
  if (type === "state") {
    const preview = obj["preview"];
    if (
      !Array.isArray(preview) ||
      !preview.every((p) => isNumberArray(p) && p.length === 2)
    ) {
      throw new ProtocolError("state preview must be an array of [x, f(x)] pairs");
    }
    const risk = obj["riskEstimate"];
    if (typeof risk !== "number") {
      throw new ProtocolError("state riskEstimate must be a number");
    }
    return {
      type: "state",
      t: requireInt(obj, "t"),
      sessionId: requireString(obj, "sessionId"),
      riskEstimate: risk,
      preview: preview as [number, number][],
    };
  }
  if (type === "done") {
    return {
      type: "done",
      t: requireInt(obj, "t"),
      sessionId: requireString(obj, "sessionId"),
    };
  }
  if (type === "error") {
    return {
      type: "error",
      code: requireString(obj, "code"),
      message: requireString(obj, "message"),
    };
  }
  throw new ProtocolError(`unknown message type ${String(type)}`);
}

/** The bit domain of a query: halfspace answers are signs, membership and
 * shifted-halfspace answers are indicators. */
export function bitDomain(kind: QueryMessage["kind"]): readonly Bit[] {
  return kind === "halfspace" ? [-1, 1] : [0, 1];
}

export function answerText(t: number, bit: Bit): string {
  return JSON.stringify({ type: "answer", t, bit });
}
