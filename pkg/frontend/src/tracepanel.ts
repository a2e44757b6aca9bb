import { writeFileSync } from "node:fs";
import { autocorrelation } from "./acf.js";
import { readTrace, type Sweep } from "./jsonl.js";
import { SvgDoc, drawFrame, fmt } from "./svg.js";

/** Extract a scalar series from a trace: "k" or "center:IDX:DIM" (component
 * centers in canonical cluster order). */
export function extractSeries(sweeps: Sweep[], selector: string): number[] {
  if (selector === "k") return sweeps.map((s) => s.k);
  const match = /^center:(\d+):(\d+)$/.exec(selector);
  if (!match) throw new Error(`unknown series selector '${selector}' (use k or center:IDX:DIM)`);
  const idx = Number(match[1]);
  const dim = Number(match[2]);
  return sweeps.map((s) => {
    if (idx >= s.centers.length || dim >= s.centers[idx].length) {
      throw new Error(`series center:${idx}:${dim} out of range at iteration ${s.iteration}`);
    }
    return s.centers[idx][dim];
  });
}

/** Side-by-side trace plot and autocorrelation panel of one chain series. */
export function buildTracePanel(tracePath: string, selector: string, title: string): string {
  const sweeps = readTrace(tracePath);
  const series = extractSeries(sweeps, selector);
  const iters = sweeps.map((s) => s.iteration);
  const maxLag = Math.min(50, series.length - 1);
  const acf = autocorrelation(series, maxLag);

  const doc = new SvgDoc(760, 340);
  doc.text(380, 22, title, 'font-size="14" text-anchor="middle" font-weight="bold"');

  const lo = Math.min(...series);
  const hi = Math.max(...series);
  const pad = (hi - lo || 1) * 0.08;
  const left = drawFrame(
    doc,
    { left: 60, top: 45, width: 300, height: 240 },
    [iters[0], iters[iters.length - 1]],
    [lo - pad, hi + pad],
    "iteration",
    selector,
  );
  const path = series
    .map((v, t) => `${t === 0 ? "M" : "L"}${fmt(left.x(iters[t]))} ${fmt(left.y(v))}`)
    .join("");
  doc.add(`<path d="${path}" fill="none" stroke="#3182bd" stroke-width="1"/>`);

  const right = drawFrame(
    doc,
    { left: 450, top: 45, width: 280, height: 240 },
    [-0.5, maxLag + 0.5],
    [Math.min(0, ...acf) - 0.05, 1.0],
    "lag",
    "autocorrelation",
  );
  const zero = right.y(0);
  doc.line(right.left, zero, right.right, zero, 'stroke="#bbbbbb" stroke-width="0.7"');
  for (let lag = 0; lag <= maxLag; lag++) {
    doc.line(right.x(lag), zero, right.x(lag), right.y(acf[lag]), 'stroke="#e6550d" stroke-width="2"');
  }
  return doc.toString();
}

export function renderTracePanel(tracePath: string, selector: string, outPath: string, title: string): void {
  writeFileSync(outPath, buildTracePanel(tracePath, selector, title));
}
