/** Client-side session state machine.  Pure reducer: state transitions are
 * driven only by parsed server messages and user answers, which keeps every
 * protocol rule unit-testable without a socket. */

import {
  Bit,
  ProtocolError,
  QueryMessage,
  ServerMessage,
  StateMessage,
  answerText,
  bitDomain,
  parseServerMessage,
} from "./protocol.js";

export interface HistoryEntry {
  t: number;
  query: QueryMessage;
  bit: Bit;
}

export interface UiSession {
  connection: "connecting" | "open" | "closed";
  sessionId: string | null;
  /** At most one outstanding query at a time. */
  outstanding: QueryMessage | null;
  /** Append-only record of answered queries. */
  history: HistoryEntry[];
  /** Highest state.t seen; used to drop stale state messages. */
  stateT: number;
  riskHistory: number[];
  preview: [number, number][];
  done: boolean;
  errorBanner: string | null;
}

export function initialSession(): UiSession {
  return {
    connection: "connecting",
    sessionId: null,
    outstanding: null,
    history: [],
    stateT: 0,
    riskHistory: [],
    preview: [],
    done: false,
    errorBanner: null,
  };
}

export function applyMessage(session: UiSession, msg: ServerMessage): UiSession {
  switch (msg.type) {
    case "query": {
      // The server re-issues the current query after errors and on
      // reconnect; adopting it (re-)arms exactly one answer for that t.
      return {
        ...session,
        sessionId: msg.sessionId,
        outstanding: msg,
        errorBanner: null,
      };
    }
    case "state": {
      if (msg.t <= session.stateT) {
        return session; // stale or duplicate state: drop
      }
      return applyState(session, msg);
    }
    case "done": {
      return { ...session, done: true, outstanding: null };
    }
    case "error": {
      // Connection is kept; the server re-issues the query when answerable.
      return { ...session, errorBanner: `${msg.code}: ${msg.message}` };
    }
  }
}

function applyState(session: UiSession, msg: StateMessage): UiSession {
  return {
    ...session,
    sessionId: msg.sessionId,
    stateT: msg.t,
    riskHistory: [...session.riskHistory, msg.riskEstimate],
    preview: msg.preview,
  };
}

/** Feed one raw socket frame through the reducer.  Malformed frames set the
 * error banner and leave the rest of the session untouched. */
export function applyServerText(session: UiSession, text: string): UiSession {
  let msg: ServerMessage;
  try {
    msg = parseServerMessage(text);
  } catch (e) {
    if (e instanceof ProtocolError) {
      return { ...session, errorBanner: `malformed message: ${e.message}` };
    }
    throw e;
  }
  return applyMessage(session, msg);
}

export interface SubmitResult {
  session: UiSession;
  /** Wire frame to send, or null when the submission was suppressed
   * (no outstanding query, wrong t, done, or already answered). */
  wire: string | null;
}

/** Answer the outstanding query.  Idempotent per issued query: the first
 * submission clears the outstanding slot, so a double-submit produces no
 * second frame. */
export function submitAnswer(session: UiSession, t: number, bit: Bit): SubmitResult {
  const q = session.outstanding;
  if (session.done || q === null || q.t !== t) {
    return { session, wire: null };
  }
  if (!bitDomain(q.kind).includes(bit)) {
    return {
      session: { ...session, errorBanner: `bit ${bit} invalid for ${q.kind}` },
      wire: null,
    };
  }
  return {
    session: {
      ...session,
      outstanding: null,
      history: [...session.history, { t, query: q, bit }],
    },
    wire: answerText(t, bit),
  };
}

export function setConnection(
  session: UiSession,
  connection: UiSession["connection"],
): UiSession {
  return { ...session, connection };
}
