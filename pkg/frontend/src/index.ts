export { parseKpiCsv, aggregate, groupBy, REQUIRED_COLUMNS } from "./csv.js";
export type { KpiRow, Aggregate } from "./csv.js";
export { renderFigure, modesBar, harqFdBars, cooperativeLines,
         throughputLines } from "./figures.js";
export type { FigureKind, FigureSpec } from "./figures.js";
export { main, parseArgs, UsageError } from "./cli.js";
