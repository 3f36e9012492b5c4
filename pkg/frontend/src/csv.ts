/** KPI CSV parsing against the simulator's export schema. */

export interface KpiRow {
  run_id: string;
  seed: number;
  alloc_mode: string;
  n_agvs: number;
  period_ms: number;
  harq: boolean;
  duplex: string;
  prr: number | null;
  throughput_a2a_mbps: number;
  throughput_a2i_mbps: number;
  generated: number;
  delivered: number;
  expired: number;
}

export const REQUIRED_COLUMNS = [
  "run_id", "seed", "alloc_mode", "n_agvs", "period_ms", "harq", "duplex",
  "prr", "throughput_a2a_mbps", "throughput_a2i_mbps", "generated",
  "delivered", "expired",
] as const;

function splitCsvLine(line: string): string[] {
  // the exporter never quotes fields; keep the parser in lockstep
  return line.split(",");
}

export function parseKpiCsv(text: string): KpiRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error("empty CSV: no header row");
  }
  const header = splitCsvLine(lines[0]);
  const index = new Map(header.map((name, i) => [name, i]));
  const missing = REQUIRED_COLUMNS.filter((c) => !index.has(c));
  if (missing.length > 0) {
    throw new Error(`CSV schema mismatch: missing columns ${missing.join(", ")}`);
  }
  const rows: KpiRow[] = [];
  for (const line of lines.slice(1)) {
    const parts = splitCsvLine(line);
    const get = (c: string) => parts[index.get(c)!] ?? "";
    const num = (c: string) => {
      const v = Number(get(c));
      if (Number.isNaN(v)) {
        throw new Error(`CSV value for ${c} is not numeric: ${get(c)!}`);
      }
      return v;
    };
    rows.push({
      run_id: get("run_id"),
      seed: num("seed"),
      alloc_mode: get("alloc_mode"),
      n_agvs: num("n_agvs"),
      period_ms: num("period_ms"),
      harq: get("harq") === "1",
      duplex: get("duplex"),
      prr: get("prr") === "" ? null : num("prr"),
      throughput_a2a_mbps: num("throughput_a2a_mbps"),
      throughput_a2i_mbps: num("throughput_a2i_mbps"),
      generated: num("generated"),
      delivered: num("delivered"),
      expired: num("expired"),
    });
  }
  return rows;
}

export interface Aggregate {
  mean: number;
  min: number;
  max: number;
  n: number;
}

/** Mean with min/max whiskers over the seeds of one configuration. */
export function aggregate(values: number[]): Aggregate {
  if (values.length === 0) {
    throw new Error("cannot aggregate zero values");
  }
  const sum = values.reduce((a, b) => a + b, 0);
  return {
    mean: sum / values.length,
    min: Math.min(...values),
    max: Math.max(...values),
    n: values.length,
  };
}

export function groupBy<T, K extends string | number>(
  rows: T[],
  key: (row: T) => K,
): Map<K, T[]> {
  const out = new Map<K, T[]>();
  for (const row of rows) {
    const k = key(row);
    const bucket = out.get(k);
    if (bucket) {
      bucket.push(row);
    } else {
      out.set(k, [row]);
    }
  }
  return out;
}
