import { readFileSync } from "node:fs";

export class InputError extends Error {
  constructor(file: string, line: number | null, message: string) {
    super(line === null ? `${file}: ${message}` : `${file}:${line}: ${message}`);
  }
}

export interface Table {
  header: string[];
  rows: number[][];
}

/** Read a comma-separated numeric table with one header row. */
export function readCsv(path: string, expectedHeader?: string[]): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new InputError(path, null, "cannot read file");
  }
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length === 0) throw new InputError(path, null, "empty file");
  const header = lines[0].split(",").map((t) => t.trim());
  if (expectedHeader) {
    for (const col of expectedHeader) {
      if (!header.includes(col)) {
        throw new InputError(path, 1, `missing column '${col}' in header ${header.join(",")}`);
      }
    }
  }
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const toks = lines[i].split(",");
    if (toks.length !== header.length) {
      throw new InputError(path, i + 1, `expected ${header.length} columns, found ${toks.length}`);
    }
    const row = toks.map((t) => Number(t));
    const bad = row.findIndex((v) => Number.isNaN(v));
    if (bad >= 0) throw new InputError(path, i + 1, `non-numeric value '${toks[bad].trim()}'`);
    rows.push(row);
  }
  if (rows.length === 0) throw new InputError(path, null, "no data rows");
  return { header, rows };
}

export interface Grid {
  x1: number[]; // sorted unique coordinates, slow axis of the flattening
  x2: number[];
  values: number[]; // row-major over (x1, x2)
}

/** Reassemble a density grid written as x1,x2,density rows. */
export function readGrid(path: string): Grid {
  const table = readCsv(path, ["x1", "x2", "density"]);
  const i1 = table.header.indexOf("x1");
  const i2 = table.header.indexOf("x2");
  const iv = table.header.indexOf("density");
  const x1 = uniqueSorted(table.rows.map((r) => r[i1]));
  const x2 = uniqueSorted(table.rows.map((r) => r[i2]));
  if (x1.length * x2.length !== table.rows.length) {
    throw new InputError(path, null, `rows (${table.rows.length}) do not fill a ${x1.length}x${x2.length} grid`);
  }
  const values = new Array<number>(table.rows.length).fill(NaN);
  const pos1 = new Map(x1.map((v, i) => [v, i]));
  const pos2 = new Map(x2.map((v, i) => [v, i]));
  for (const r of table.rows) {
    values[pos1.get(r[i1])! * x2.length + pos2.get(r[i2])!] = r[iv];
  }
  return { x1, x2, values };
}

function uniqueSorted(values: number[]): number[] {
  return [...new Set(values)].sort((a, b) => a - b);
}
