/** Minimal DOM shell around the protocol client: prompt panel, answer
 * buttons, risk sparkline, and the 1-D prediction preview with threshold
 * overlay.  All numerical state comes from the server. */

import { LabelerClient } from "./client.js";
import { renderQuery } from "./render.js";
import { UiSession } from "./session.js";
import { Bit } from "./protocol.js";

function polyline(points: [number, number][], w: number, h: number): string {
  if (points.length === 0) return "";
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1]);
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yLo = Math.min(...ys);
  const yHi = Math.max(...ys);
  const sx = (x: number) => ((x - xLo) / (xHi - xLo || 1)) * (w - 20) + 10;
  const sy = (y: number) => h - 10 - ((y - yLo) / (yHi - yLo || 1)) * (h - 20);
  return points.map(([x, y]) => `${sx(x).toFixed(1)},${sy(y).toFixed(1)}`).join(" ");
}

export function mount(root: HTMLElement, client: LabelerClient): void {
  root.innerHTML = `
    <div id="status"></div>
    <div id="banner" style="color:#b00"></div>
    <div id="prompt"></div>
    <div id="buttons"></div>
    <svg id="preview" width="480" height="200" viewBox="0 0 480 200"></svg>
    <svg id="risk" width="480" height="60" viewBox="0 0 480 60"></svg>
  `;
  const el = (id: string) => root.querySelector<HTMLElement>(`#${id}`)!;

  const draw = (s: UiSession) => {
    el("status").textContent =
      `${s.connection} — step ${s.stateT}` + (s.done ? " (done)" : "");
    el("banner").textContent = s.errorBanner ?? "";
    const buttons = el("buttons");
    buttons.innerHTML = "";
    const prompt = s.outstanding && !s.done ? renderQuery(s.outstanding) : null;
    el("prompt").textContent = prompt
      ? prompt.text + (prompt.chips ? ` [${prompt.chips.join(", ")}]` : "")
      : s.done
        ? "Session complete."
        : "Waiting for the next query…";
    if (prompt && s.outstanding) {
      const t = s.outstanding.t;
      for (const opt of prompt.options) {
        const b = document.createElement("button");
        b.textContent = opt.label;
        b.onclick = () => client.answer(t, opt.bit as Bit);
        buttons.appendChild(b);
      }
    }
    const pts = polyline(s.preview, 480, 200);
    let overlay = "";
    if (prompt?.threshold !== undefined && s.preview.length > 0) {
      const ys = s.preview.map((p) => p[1]);
      const yLo = Math.min(...ys, prompt.threshold);
      const yHi = Math.max(...ys, prompt.threshold);
      const y = 190 - ((prompt.threshold - yLo) / (yHi - yLo || 1)) * 180;
      overlay = `<line x1="10" y1="${y.toFixed(1)}" x2="470" y2="${y.toFixed(1)}"
        stroke="#b00" stroke-dasharray="4 3"/>`;
    }
    el("preview").innerHTML = pts
      ? `<polyline points="${pts}" fill="none" stroke="#16c"/>` + overlay
      : "";
    const riskPts = polyline(s.riskHistory.map((r, i) => [i, r]), 480, 60);
    el("risk").innerHTML = riskPts
      ? `<polyline points="${riskPts}" fill="none" stroke="#888"/>`
      : "";
  };

  client.onChange(draw);
  draw(client.session);
}
