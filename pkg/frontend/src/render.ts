/** Turns a wire query into a concrete yes/no prompt.  1-D halfspace queries
 * become an "is the true value above z?" question with the threshold drawn
 * on the preview chart; anything higher-dimensional falls back to a textual
 * sign prompt.  No model math happens here. */

import { Bit, QueryMessage } from "./protocol.js";

export interface AnswerOption {
  label: string;
  bit: Bit;
}

export interface Prompt {
  kind: "threshold" | "sign" | "membership" | "shifted";
  text: string;
  options: AnswerOption[];
  /** Chart overlay for 1-D regression prompts. */
  threshold?: number;
  /** Candidate-set chips for membership prompts. */
  chips?: string[];
}

function fmt(v: number): string {
  return Number.isInteger(v) ? String(v) : v.toPrecision(6);
}

function vec(v: number[]): string {
  return `(${v.map(fmt).join(", ")})`;
}

export function renderQuery(q: QueryMessage): Prompt {
  if (q.kind === "halfspace") {
    const z = q.z ?? [];
    const u = q.u ?? [];
    if (z.length === 1 && u.length === 1) {
      // sign(u * (y - z)): "yes, above" answers +1 when u points up.
      const up: Bit = (u[0] ?? 1) >= 0 ? 1 : -1;
      return {
        kind: "threshold",
        text: `Is the true value above ${fmt(z[0] ?? 0)}?`,
        threshold: z[0] ?? 0,
        options: [
          { label: "yes (above)", bit: up },
          { label: "no (below)", bit: (up === 1 ? -1 : 1) as Bit },
        ],
      };
    }
    return {
      kind: "sign",
      text: `What is the sign of ⟨y − z, u⟩ for z = ${vec(z)}, u = ${vec(u)}?`,
      options: [
        { label: "positive (+1)", bit: 1 },
        { label: "negative (−1)", bit: -1 },
      ],
    };
  }
  if (q.kind === "membership") {
    const chips = (q.set ?? []).map((c) => `class ${c}`);
    return {
      kind: "membership",
      text: "Is the true label one of these?",
      chips,
      options: [
        { label: "yes (in set)", bit: 1 },
        { label: "no (not in set)", bit: 0 },
      ],
    };
  }
  return {
    kind: "shifted",
    text: `Is ⟨y, u⟩ below ${fmt(q.threshold ?? 0)} for u = ${vec(q.u ?? [])}?`,
    options: [
      { label: "yes (below)", bit: 1 },
      { label: "no (at or above)", bit: 0 },
    ],
  };
}
