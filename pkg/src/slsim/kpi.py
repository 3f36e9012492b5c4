"""KPI computation (PRR, throughput) and deterministic CSV export."""
from __future__ import annotations

import csv
from dataclasses import dataclass

from .engine import RunReport

CSV_COLUMNS = ("run_id", "seed", "alloc_mode", "n_agvs", "period_ms", "harq",
               "duplex", "prr", "throughput_a2a_mbps", "throughput_a2i_mbps",
               "generated", "delivered", "expired")


@dataclass
class KpiRecord:
    run_id: str
    seed: int
    alloc_mode: str
    n_agvs: int
    period_ms: int
    harq: bool
    duplex: str
    prr: float | None
    throughput_a2a_mbps: float
    throughput_a2i_mbps: float
    generated: int
    delivered: int
    expired: int


def prr(report: RunReport) -> float | None:
    """Awareness-traffic packet reception ratio.

    Successful (packet, receiver) pairs over intended pairs, counted after
    warm-up; None when no packets were counted.
    """
    pairs = report.a2a.intended_pairs
    if pairs == 0:
        return None
    return report.a2a.success_pairs / pairs


def throughput_mbps(report: RunReport, traffic_class: str) -> float:
    """Delivered unique-packet bits per counted second, in Mbps."""
    ctr = report.a2a if traffic_class == "a2a" else report.a2i
    if report.counted_duration_s <= 0:
        return 0.0
    return ctr.delivered_bits / report.counted_duration_s / 1e6


def record_from_report(report: RunReport, run_id: str) -> KpiRecord:
    cfg = report.config
    gen = report.a2a.generated + report.a2i.generated
    delivered = (report.a2a.delivered_full + report.a2a.delivered_partial +
                 report.a2i.delivered_full + report.a2i.delivered_partial)
    expired = report.a2a.expired + report.a2i.expired
    return KpiRecord(
        run_id=run_id, seed=cfg.seed, alloc_mode=cfg.alloc_mode,
        n_agvs=cfg.n_group_agvs, period_ms=cfg.packet_period_ms,
        harq=cfg.harq_enabled, duplex=cfg.duplex, prr=prr(report),
        throughput_a2a_mbps=throughput_mbps(report, "a2a"),
        throughput_a2i_mbps=throughput_mbps(report, "a2i"),
        generated=gen, delivered=delivered, expired=expired)


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_csv(records: list, destination: str) -> None:
    """Header plus one row per record, in KpiRecord field order.

    Floats use their shortest round-trip representation so the byte output
    is deterministic and re-parses exactly.
    """
    try:
        with open(destination, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for rec in records:
                writer.writerow([_format(getattr(rec, col))
                                 for col in CSV_COLUMNS])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {destination}: {exc}") from exc


def read_csv(path: str) -> list:
    """Parse a KPI CSV back into records (inverse of export_csv)."""
    records = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            records.append(KpiRecord(
                run_id=row["run_id"], seed=int(row["seed"]),
                alloc_mode=row["alloc_mode"], n_agvs=int(row["n_agvs"]),
                period_ms=int(row["period_ms"]), harq=row["harq"] == "1",
                duplex=row["duplex"],
                prr=float(row["prr"]) if row["prr"] != "" else None,
                throughput_a2a_mbps=float(row["throughput_a2a_mbps"]),
                throughput_a2i_mbps=float(row["throughput_a2i_mbps"]),
                generated=int(row["generated"]),
                delivered=int(row["delivered"]),
                expired=int(row["expired"])))
    return records
