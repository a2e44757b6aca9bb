import { readFileSync } from "node:fs";
import { InputError } from "./csv.js";

export interface Sweep {
  iteration: number;
  k: number;
  ell: number;
  sizes: number[];
  centers: number[][]; // k rows, occupied clusters first
  lambdas: number[][];
  assignments: number[];
}

/** Read a sampler trace: one JSON record per retained sweep. */
export function readTrace(path: string): Sweep[] {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new InputError(path, null, "cannot read file");
  }
  const sweeps: Sweep[] = [];
  const lines = text.split(/\r?\n/);
  for (let i = 0; i < lines.length; i++) {
    if (lines[i].trim().length === 0) continue;
    let rec: Record<string, unknown>;
    try {
      rec = JSON.parse(lines[i]);
    } catch {
      throw new InputError(path, i + 1, "not valid JSON");
    }
    const k = asInt(rec.k, path, i + 1, "k");
    const flatC = asNumbers(rec.centers, path, i + 1, "centers");
    const flatL = asNumbers(rec.lambdas, path, i + 1, "lambdas");
    if (k === 0 || flatC.length % k !== 0) {
      throw new InputError(path, i + 1, `centers length ${flatC.length} not divisible by k=${k}`);
    }
    const p = flatC.length / k;
    sweeps.push({
      iteration: asInt(rec.iteration, path, i + 1, "iteration"),
      k,
      ell: asInt(rec.ell, path, i + 1, "ell"),
      sizes: asNumbers(rec.sizes, path, i + 1, "sizes"),
      centers: unflatten(flatC, p),
      lambdas: unflatten(flatL, p),
      assignments: asNumbers(rec.assignments, path, i + 1, "assignments"),
    });
  }
  if (sweeps.length === 0) throw new InputError(path, null, "empty trace");
  return sweeps;
}

function unflatten(flat: number[], p: number): number[][] {
  const out: number[][] = [];
  for (let i = 0; i < flat.length; i += p) out.push(flat.slice(i, i + p));
  return out;
}

function asInt(v: unknown, file: string, line: number, field: string): number {
  if (typeof v !== "number" || !Number.isInteger(v)) {
    throw new InputError(file, line, `field '${field}' must be an integer`);
  }
  return v;
}

function asNumbers(v: unknown, file: string, line: number, field: string): number[] {
  if (!Array.isArray(v) || v.some((x) => typeof x !== "number")) {
    throw new InputError(file, line, `field '${field}' must be a numeric array`);
  }
  return v as number[];
}
