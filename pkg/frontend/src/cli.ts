#!/usr/bin/env node
/** figplots: render simulator KPI CSVs into deterministic SVG figures.
 *
 * Usage:
 *   figplots --figure modes_bar --csv results/fig2.csv --out fig2.svg [--period-ms 10]
 *
 * Exit codes: 0 success, 1 data/render error, 2 usage error.
 */
import { readFileSync, writeFileSync } from "node:fs";
import { parseKpiCsv } from "./csv.js";
import { FigureKind, FigureSpec, renderFigure } from "./figures.js";

const FIGURES: FigureKind[] = [
  "modes_bar", "harq_fd_bars", "cooperative_lines", "throughput_lines",
];

export function parseArgs(argv: string[]): FigureSpec {
  const opts = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new UsageError(`malformed argument near ${key}`);
    }
    opts.set(key.slice(2), value);
  }
  const figure = opts.get("figure");
  const csv = opts.get("csv");
  const out = opts.get("out");
  if (!figure || !csv || !out) {
    throw new UsageError("--figure, --csv and --out are required");
  }
  if (!FIGURES.includes(figure as FigureKind)) {
    throw new UsageError(
      `unknown figure ${figure}; expected one of ${FIGURES.join(", ")}`);
  }
  const spec: FigureSpec = {
    figure: figure as FigureKind,
    csvPath: csv,
    outPath: out,
  };
  const period = opts.get("period-ms");
  if (period !== undefined) {
    const p = Number(period);
    if (Number.isNaN(p)) {
      throw new UsageError(`--period-ms must be numeric, got ${period}`);
    }
    spec.periodMs = p;
  }
  if (!out.endsWith(".svg")) {
    throw new UsageError("output format is inferred from the extension; only .svg is supported");
  }
  return spec;
}

export class UsageError extends Error {}

export function main(argv: string[]): number {
  let spec: FigureSpec;
  try {
    spec = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`usage error: ${(err as Error).message}\n`);
    return 2;
  }
  try {
    const rows = parseKpiCsv(readFileSync(spec.csvPath, "utf-8"));
    const svg = renderFigure(spec, rows);
    writeFileSync(spec.outPath, svg, "utf-8");
    process.stdout.write(`${spec.figure}: ${rows.length} rows -> ${spec.outPath}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
