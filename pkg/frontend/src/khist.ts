import { writeFileSync } from "node:fs";
import { readCsv } from "./csv.js";
import { SvgDoc, drawFrame, fmt } from "./svg.js";

/** Bar chart of the posterior distribution of the component count. */
export function buildKHistogram(khistPath: string, title: string): string {
  const table = readCsv(khistPath, ["k", "probability"]);
  const ck = table.header.indexOf("k");
  const cp = table.header.indexOf("probability");
  const ks = table.rows.map((r) => r[ck]);
  const probs = table.rows.map((r) => r[cp]);
  const kLo = Math.min(...ks) - 1;
  const kHi = Math.max(...ks) + 1;
  const pMax = Math.max(...probs);

  const doc = new SvgDoc(480, 360);
  doc.text(240, 22, title, 'font-size="14" text-anchor="middle" font-weight="bold"');
  const frame = drawFrame(
    doc,
    { left: 60, top: 40, width: 390, height: 280 },
    [kLo, kHi],
    [0, Math.max(pMax * 1.1, 0.05)],
    "number of components K",
    "posterior probability",
  );
  const barWidth = (frame.x(1) - frame.x(0)) * 0.8;
  for (let i = 0; i < ks.length; i++) {
    const xc = frame.x(ks[i]);
    const yTop = frame.y(probs[i]);
    doc.add(
      `<rect x="${fmt(xc - barWidth / 2)}" y="${fmt(yTop)}" width="${fmt(barWidth)}" ` +
        `height="${fmt(frame.bottom - yTop)}" fill="#3182bd" stroke="black" stroke-width="0.5"/>`,
    );
  }
  return doc.toString();
}

export function renderKHistogram(khistPath: string, outPath: string, title: string): void {
  writeFileSync(outPath, buildKHistogram(khistPath, title));
}
