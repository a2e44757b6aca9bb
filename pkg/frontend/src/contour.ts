import { writeFileSync } from "node:fs";
import { contours } from "d3-contour";
import { readCsv, readGrid } from "./csv.js";
import { SvgDoc, drawFrame, fmt } from "./svg.js";

export interface ContourResult {
  svg: string;
  closedCurves: number;
  levels: number[];
}

/** Level curves of a fitted density over a scatter of the observations. */
export function buildContourFigure(
  gridPath: string,
  dataPath: string,
  title: string,
  nLevels = 9,
): ContourResult {
  const grid = readGrid(gridPath);
  const data = readCsv(dataPath, ["x1", "x2"]);
  const c1 = data.header.indexOf("x1");
  const c2 = data.header.indexOf("x2");

  const n1 = grid.x1.length;
  const n2 = grid.x2.length;
  // d3-contour reads values[row * width + column]; use x1 as the column
  // axis so ring coordinates come out as (x1 index, x2 index)
  const transposed = new Array<number>(n1 * n2);
  for (let i = 0; i < n1; i++) {
    for (let j = 0; j < n2; j++) transposed[j * n1 + i] = grid.values[i * n2 + j];
  }
  const vmax = Math.max(...grid.values);
  if (!(vmax > 0)) throw new Error(`${gridPath}: density grid has no positive values`);
  const levels: number[] = [];
  for (let l = 1; l <= nLevels; l++) levels.push((vmax * l) / (nLevels + 1));
  const polygons = contours().size([n1, n2]).thresholds(levels)(transposed);

  const doc = new SvgDoc(520, 440);
  doc.text(260, 22, title, 'font-size="14" text-anchor="middle" font-weight="bold"');
  const frame = drawFrame(
    doc,
    { left: 60, top: 40, width: 430, height: 360 },
    [grid.x1[0], grid.x1[n1 - 1]],
    [grid.x2[0], grid.x2[n2 - 1]],
    "x1",
    "x2",
  );
  const toX = (gi: number) => frame.x(grid.x1[0] + (gi / (n1 - 1)) * (grid.x1[n1 - 1] - grid.x1[0]));
  const toY = (gj: number) => frame.y(grid.x2[0] + (gj / (n2 - 1)) * (grid.x2[n2 - 1] - grid.x2[0]));

  for (const row of data.rows) {
    doc.add(
      `<circle cx="${fmt(frame.x(row[c1]))}" cy="${fmt(frame.y(row[c2]))}" r="1.6" ` +
        `fill="#9ecae1" fill-opacity="0.7"/>`,
    );
  }

  let closed = 0;
  for (const multi of polygons) {
    for (const polygon of multi.coordinates) {
      for (const ring of polygon) {
        const path = ring
          .map((pt, idx) => `${idx === 0 ? "M" : "L"}${fmt(toX(pt[0]))} ${fmt(toY(pt[1]))}`)
          .join("");
        doc.add(`<path d="${path}Z" fill="none" stroke="#636363" stroke-width="1"/>`);
        closed += 1;
      }
    }
  }
  return { svg: doc.toString(), closedCurves: closed, levels };
}

export function renderContour(gridPath: string, dataPath: string, outPath: string, title: string): ContourResult {
  const result = buildContourFigure(gridPath, dataPath, title);
  writeFileSync(outPath, result.svg);
  return result;
}
