/** Minimal deterministic SVG assembly: no layout engine, every coordinate
 * is computed from the inputs alone. */

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 === 0 ? 1 : d1 - d0;
  const f = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  f.range = range;
  return f;
}

export function ticks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo];
  const step = tickStep(lo, hi, count);
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-9 * step; v += step) out.push(round6(v));
  return out;
}

function tickStep(lo: number, hi: number, count: number): number {
  const raw = (hi - lo) / Math.max(count, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  if (norm >= 5) return 10 * mag;
  if (norm >= 2) return 5 * mag;
  if (norm >= 1) return 2 * mag;
  return mag;
}

export function round6(v: number): number {
  return Math.round(v * 1e6) / 1e6;
}

export function fmt(v: number): string {
  return String(round6(v));
}

export class SvgDoc {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${width}" height="${height}" fill="white"/>`,
    );
  }

  add(element: string): void {
    this.parts.push(element);
  }

  text(x: number, y: number, content: string, attrs = ""): void {
    this.add(`<text x="${fmt(x)}" y="${fmt(y)}" ${attrs}>${escapeXml(content)}</text>`);
  }

  line(x1: number, y1: number, x2: number, y2: number, attrs: string): void {
    this.add(`<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ${attrs}/>`);
  }

  toString(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface Frame {
  x: Scale;
  y: Scale;
  left: number;
  top: number;
  right: number;
  bottom: number;
}

/** Plot frame with axes, tick marks and labels inside the given region. */
export function drawFrame(
  doc: SvgDoc,
  region: { left: number; top: number; width: number; height: number },
  xDomain: [number, number],
  yDomain: [number, number],
  xLabel: string,
  yLabel: string,
): Frame {
  const left = region.left;
  const top = region.top;
  const right = region.left + region.width;
  const bottom = region.top + region.height;
  const x = linearScale(xDomain, [left, right]);
  const y = linearScale(yDomain, [bottom, top]);
  const axis = 'stroke="black" stroke-width="1"';
  doc.line(left, bottom, right, bottom, axis);
  doc.line(left, bottom, left, top, axis);
  for (const t of ticks(xDomain[0], xDomain[1])) {
    doc.line(x(t), bottom, x(t), bottom + 4, axis);
    doc.text(x(t), bottom + 16, fmt(t), 'font-size="10" text-anchor="middle"');
  }
  for (const t of ticks(yDomain[0], yDomain[1])) {
    doc.line(left - 4, y(t), left, y(t), axis);
    doc.text(left - 6, y(t) + 3, fmt(t), 'font-size="10" text-anchor="end"');
  }
  doc.text((left + right) / 2, bottom + 30, xLabel, 'font-size="11" text-anchor="middle"');
  doc.add(
    `<text x="${fmt(left - 34)}" y="${fmt((top + bottom) / 2)}" font-size="11" ` +
      `text-anchor="middle" transform="rotate(-90 ${fmt(left - 34)} ${fmt((top + bottom) / 2)})">` +
      `${escapeXml(yLabel)}</text>`,
  );
  return { x, y, left, top, right, bottom };
}
