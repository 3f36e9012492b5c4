/** The four figure builders: mode bars, HARQ/FD bars, cooperative lines,
 * A2I throughput lines.  All aggregate seed means with min/max whiskers. */

import { Aggregate, KpiRow, aggregate, groupBy } from "./csv.js";
import { HEIGHT, MARGIN, PALETTE, Svg, WIDTH, linearScale, ticks } from "./svg.js";

export type FigureKind =
  | "modes_bar"
  | "harq_fd_bars"
  | "cooperative_lines"
  | "throughput_lines";

export interface FigureSpec {
  figure: FigureKind;
  csvPath: string;
  outPath: string;
  periodMs?: number;
  modes?: string[];
}

const MODE_ORDER = ["random", "mode2_noreeval", "mode2", "mode1"];
const MODE_LABELS: Record<string, string> = {
  random: "random",
  mode2_noreeval: "mode 2 w/o re-eval",
  mode2: "mode 2 w/ re-eval",
  mode1: "controlled (mode 1)",
  cooperative: "cooperative",
};

function plotArea() {
  return {
    x0: MARGIN.left,
    x1: WIDTH - MARGIN.right,
    y0: HEIGHT - MARGIN.bottom,
    y1: MARGIN.top + 12,
  };
}

function requireRows(rows: KpiRow[], what: string): void {
  if (rows.length === 0) {
    throw new Error(`no rows after filter (${what})`);
  }
}

function prrValues(rows: KpiRow[]): number[] {
  return rows.filter((r) => r.prr !== null).map((r) => r.prr as number);
}

function yAxis(svg: Svg, lo: number, hi: number, label: string) {
  const area = plotArea();
  const scale = linearScale(lo, hi, area.y0, area.y1);
  for (const t of ticks(lo, hi, 5)) {
    const y = scale(t);
    svg.line(area.x0, y, area.x1, y, "#dddddd");
    svg.text(area.x0 - 8, y + 4, t.toFixed(hi - lo < 0.2 ? 3 : 1), 10, "end");
  }
  svg.line(area.x0, area.y0, area.x0, area.y1, "#222222");
  svg.line(area.x0, area.y0, area.x1, area.y0, "#222222");
  svg.text(16, (area.y0 + area.y1) / 2, label, 11, "middle", "#222222", -90);
  return scale;
}

function whisker(svg: Svg, x: number, agg: Aggregate, scale: (v: number) => number) {
  if (agg.max - agg.min <= 0) {
    return;
  }
  svg.line(x, scale(agg.min), x, scale(agg.max), "#444444");
  svg.line(x - 3, scale(agg.min), x + 3, scale(agg.min), "#444444");
  svg.line(x - 3, scale(agg.max), x + 3, scale(agg.max), "#444444");
}

/** Reception-ratio comparison of the allocation modes (one group size). */
export function modesBar(rows: KpiRow[], periodMs: number): string {
  const filtered = rows.filter(
    (r) => r.period_ms === periodMs && !r.harq && r.duplex === "half");
  requireRows(filtered, `modes_bar, period ${periodMs} ms`);
  const byMode = groupBy(filtered, (r) => r.alloc_mode);
  const modes = MODE_ORDER.filter((m) => byMode.has(m));
  requireRows(modes.length ? filtered : [], "no known allocation modes");

  const aggs = modes.map((m) => aggregate(prrValues(byMode.get(m)!)));
  const lo = Math.min(0.9, ...aggs.map((a) => a.min)) - 0.01;
  const svg = new Svg(`Packet reception ratio by allocation mode (${periodMs} ms)`);
  const area = plotArea();
  const scale = yAxis(svg, lo, 1.0, "PRR");
  const slot = (area.x1 - area.x0) / modes.length;
  modes.forEach((mode, i) => {
    const agg = aggs[i];
    const cx = area.x0 + slot * (i + 0.5);
    const w = slot * 0.55;
    svg.rect(cx - w / 2, scale(agg.mean), w, area.y0 - scale(agg.mean),
             PALETTE[i % PALETTE.length], 0.85);
    whisker(svg, cx, agg, scale);
    svg.text(cx, scale(agg.mean) - 6, agg.mean.toFixed(4), 11);
    svg.text(cx, area.y0 + 16, MODE_LABELS[mode] ?? mode, 10);
  });
  return svg.render();
}

/** Grouped bars: plain half duplex vs HARQ vs full duplex over group size. */
export function harqFdBars(rows: KpiRow[], periodMs: number): string {
  const m2 = rows.filter(
    (r) => r.period_ms === periodMs && r.alloc_mode === "mode2");
  requireRows(m2, `harq_fd_bars, period ${periodMs} ms`);
  const schemes = [
    { label: "no HARQ (HD)", pick: (r: KpiRow) => !r.harq && r.duplex === "half" },
    { label: "HARQ", pick: (r: KpiRow) => r.harq && r.duplex === "half" },
    { label: "FD", pick: (r: KpiRow) => !r.harq && r.duplex === "full" },
  ];
  const sizes = [...new Set(m2.map((r) => r.n_agvs))].sort((a, b) => a - b);
  const cells: { size: number; scheme: number; agg: Aggregate }[] = [];
  for (const [si, size] of sizes.entries()) {
    for (const [ci, scheme] of schemes.entries()) {
      const sel = m2.filter((r) => r.n_agvs === size && scheme.pick(r));
      if (sel.length > 0) {
        cells.push({ size: si, scheme: ci, agg: aggregate(prrValues(sel)) });
      }
    }
  }
  requireRows(cells.length ? m2 : [], "no scheme rows");
  const lo = Math.min(...cells.map((c) => c.agg.min)) - 0.005;
  const svg = new Svg(
    `PRR with HARQ and full duplex (${periodMs} ms generation period)`);
  const area = plotArea();
  const scale = yAxis(svg, lo, 1.0, "PRR");
  const groupW = (area.x1 - area.x0) / sizes.length;
  const barW = (groupW * 0.7) / schemes.length;
  for (const cell of cells) {
    const x0 = area.x0 + groupW * cell.size + groupW * 0.15
      + barW * cell.scheme;
    svg.rect(x0, scale(cell.agg.mean), barW * 0.9,
             area.y0 - scale(cell.agg.mean), PALETTE[cell.scheme], 0.85);
    whisker(svg, x0 + barW * 0.45, cell.agg, scale);
    svg.text(x0 + barW * 0.45, scale(cell.agg.mean) - 4,
             cell.agg.mean.toFixed(4), 8);
  }
  sizes.forEach((size, si) => {
    svg.text(area.x0 + groupW * (si + 0.5), area.y0 + 16, `${size} UEs`, 11);
  });
  schemes.forEach((scheme, ci) => {
    const lx = area.x0 + 110 * ci + 10;
    svg.rect(lx, HEIGHT - 22, 12, 10, PALETTE[ci], 0.85);
    svg.text(lx + 18, HEIGHT - 13, scheme.label, 10, "start");
  });
  return svg.render();
}

function lineSeries(svg: Svg, points: { x: number; y: number }[],
                    color: string, dashed: boolean) {
  for (let i = 1; i < points.length; i++) {
    svg.line(points[i - 1].x, points[i - 1].y, points[i].x, points[i].y,
             color, 2, dashed);
  }
  for (const p of points) {
    svg.circle(p.x, p.y, 3.5, color);
  }
}

/** Leader-coordinated vs autonomous sensing over the group size. */
export function cooperativeLines(rows: KpiRow[]): string {
  const sel = rows.filter(
    (r) => ["cooperative", "mode2"].includes(r.alloc_mode)
      && !r.harq && r.duplex === "half");
  requireRows(sel, "cooperative_lines");
  const periods = [...new Set(sel.map((r) => r.period_ms))].sort((a, b) => b - a);
  const sizes = [...new Set(sel.map((r) => r.n_agvs))].sort((a, b) => a - b);
  const aggs = new Map<string, Aggregate>();
  let lo = 1.0;
  for (const mode of ["cooperative", "mode2"]) {
    for (const p of periods) {
      for (const k of sizes) {
        const vals = prrValues(sel.filter(
          (r) => r.alloc_mode === mode && r.period_ms === p && r.n_agvs === k));
        if (vals.length) {
          const a = aggregate(vals);
          aggs.set(`${mode}|${p}|${k}`, a);
          lo = Math.min(lo, a.min);
        }
      }
    }
  }
  const svg = new Svg("Cooperative vs autonomous allocation");
  const area = plotArea();
  const scale = yAxis(svg, lo - 0.005, 1.0, "PRR");
  const xs = linearScale(sizes[0], sizes[sizes.length - 1],
                         area.x0 + 40, area.x1 - 40);
  for (const k of sizes) {
    svg.text(xs(k), area.y0 + 16, String(k), 11);
  }
  svg.text((area.x0 + area.x1) / 2, area.y0 + 34, "# of UEs", 11);
  let legendY = HEIGHT - 22;
  ["cooperative", "mode2"].forEach((mode, mi) => {
    periods.forEach((p, pi) => {
      const pts = sizes
        .filter((k) => aggs.has(`${mode}|${p}|${k}`))
        .map((k) => ({ x: xs(k), y: scale(aggs.get(`${mode}|${p}|${k}`)!.mean) }));
      if (pts.length === 0) {
        return;
      }
      lineSeries(svg, pts, PALETTE[mi], pi === 1);
      const lx = area.x0 + 150 * (mi * periods.length + pi);
      svg.line(lx, legendY + 4, lx + 16, legendY + 4, PALETTE[mi], 2, pi === 1);
      svg.text(lx + 22, legendY + 8,
               `${MODE_LABELS[mode] ?? mode} ${p} ms`, 9, "start");
    });
  });
  return svg.render();
}

/** Infrastructure uplink throughput over group size, one line per period. */
export function throughputLines(rows: KpiRow[]): string {
  const sel = rows.filter((r) => r.throughput_a2i_mbps > 0);
  requireRows(sel, "throughput_lines");
  const periods = [...new Set(sel.map((r) => r.period_ms))].sort((a, b) => a - b);
  const sizes = [...new Set(sel.map((r) => r.n_agvs))].sort((a, b) => a - b);
  let hi = 0;
  const aggs = new Map<string, Aggregate>();
  for (const p of periods) {
    for (const k of sizes) {
      const vals = sel
        .filter((r) => r.period_ms === p && r.n_agvs === k)
        .map((r) => r.throughput_a2i_mbps);
      if (vals.length) {
        const a = aggregate(vals);
        aggs.set(`${p}|${k}`, a);
        hi = Math.max(hi, a.max);
      }
    }
  }
  const svg = new Svg("Achieved infrastructure (A2I) throughput");
  const area = plotArea();
  const scale = yAxis(svg, 0, hi * 1.1, "Throughput [Mbps]");
  const xs = linearScale(sizes[0], sizes[sizes.length - 1],
                         area.x0 + 40, area.x1 - 40);
  for (const k of sizes) {
    svg.text(xs(k), area.y0 + 16, String(k), 11);
  }
  svg.text((area.x0 + area.x1) / 2, area.y0 + 34, "# of UEs", 11);
  periods.forEach((p, pi) => {
    const pts = sizes
      .filter((k) => aggs.has(`${p}|${k}`))
      .map((k) => ({ x: xs(k), y: scale(aggs.get(`${p}|${k}`)!.mean) }));
    lineSeries(svg, pts, PALETTE[pi], false);
    pts.forEach((pt, i) => {
      const a = aggs.get(`${p}|${sizes[i]}`)!;
      svg.text(pt.x, pt.y - 8, a.mean.toFixed(2), 9);
    });
    const lx = area.x0 + 110 * pi;
    svg.line(lx, HEIGHT - 18, lx + 16, HEIGHT - 18, PALETTE[pi], 2);
    svg.text(lx + 22, HEIGHT - 14, `${p} ms`, 10, "start");
  });
  return svg.render();
}

export function renderFigure(spec: FigureSpec, rows: KpiRow[]): string {
  switch (spec.figure) {
    case "modes_bar":
      return modesBar(rows, spec.periodMs ?? 10);
    case "harq_fd_bars":
      return harqFdBars(rows, spec.periodMs ?? 10);
    case "cooperative_lines":
      return cooperativeLines(rows);
    case "throughput_lines":
      return throughputLines(rows);
    default:
      throw new Error(`unknown figure kind ${(spec as FigureSpec).figure}`);
  }
}
