#!/usr/bin/env node
import { renderContour } from "./contour.js";
import { renderKHistogram } from "./khist.js";
import { renderTracePanel } from "./tracepanel.js";

const USAGE = `usage:
  rgmix-figures contour --grid density_grid.csv --data data.csv --out fig.svg [--title T]
  rgmix-figures khist --khist k_hist.csv --out fig.svg [--title T]
  rgmix-figures tracepanel --trace trace.jsonl --series k|center:IDX:DIM --out fig.svg [--title T]
`;

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed arguments near '${key}'`);
    }
    flags.set(key.slice(2), argv[i + 1]);
  }
  return flags;
}

function need(flags: Map<string, string>, name: string): string {
  const v = flags.get(name);
  if (v === undefined) throw new Error(`missing required flag --${name}`);
  return v;
}

export function run(argv: string[]): number {
  const [command, ...rest] = argv;
  if (!command) {
    process.stderr.write(USAGE);
    return 2;
  }
  try {
    const flags = parseFlags(rest);
    const title = flags.get("title") ?? "";
    if (command === "contour") {
      const result = renderContour(need(flags, "grid"), need(flags, "data"), need(flags, "out"), title);
      process.stdout.write(`wrote ${flags.get("out")} (${result.closedCurves} closed level curves)\n`);
    } else if (command === "khist") {
      renderKHistogram(need(flags, "khist"), need(flags, "out"), title);
      process.stdout.write(`wrote ${flags.get("out")}\n`);
    } else if (command === "tracepanel") {
      renderTracePanel(need(flags, "trace"), need(flags, "series") ?? "k", need(flags, "out"), title);
      process.stdout.write(`wrote ${flags.get("out")}\n`);
    } else {
      process.stderr.write(USAGE);
      return 2;
    }
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : String(err)}\n`);
    return 1;
  }
  return 0;
}

if (process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "")) {
  process.exit(run(process.argv.slice(2)));
}
