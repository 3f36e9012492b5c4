#!/usr/bin/env python3
"""Run the four evaluation campaigns and export one CSV per figure.

Produces results/fig2.csv ... fig5.csv (allocation-mode comparison, HARQ and
full-duplex comparison, cooperative comparison, A2I throughput scaling).
Pass --fast for a quick smoke campaign (short runs, 2 seeds).

Figures can then be rendered with the frontend:
    node frontend/dist/cli.js --figure modes_bar --csv results/fig2.csv \
        --out results/fig2.svg
"""
import argparse
import pathlib
import sys

from slsim.config import ScenarioConfig
from slsim.engine import run
from slsim.kpi import export_csv, record_from_report


def simulate(records, run_id, **kw):
    cfg = ScenarioConfig(**kw)
    rep = run(cfg)
    rec = record_from_report(rep, run_id=run_id)
    records.append(rec)
    prr = "n/a" if rec.prr is None else f"{rec.prr:.4f}"
    print(f"  {run_id}: prr={prr} tput_a2i={rec.throughput_a2i_mbps:.3f} Mbps")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--duration-s", type=float, default=60.0)
    parser.add_argument("--fast", action="store_true",
                        help="2 seeds x 10 s, for smoke testing")
    parser.add_argument("--only", choices=["fig2", "fig3", "fig4", "fig5"],
                        help="produce a single figure CSV")
    args = parser.parse_args(argv)
    if args.fast:
        args.seeds, args.duration_s = 2, 10.0
    seeds = range(1, args.seeds + 1)
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    common = dict(sim_duration_s=args.duration_s, n_a2i_links=10)

    if args.only in (None, "fig2"):
        print("fig2: allocation mode comparison (4 AGVs, 10 ms)")
        records = []
        for mode in ("random", "mode2_noreeval", "mode2", "mode1"):
            for seed in seeds:
                simulate(records, f"fig2-{mode}-s{seed}", alloc_mode=mode,
                         n_group_agvs=4, packet_period_ms=10, seed=seed,
                         **common)
        export_csv(records, str(out / "fig2.csv"))

    if args.only in (None, "fig3"):
        print("fig3: HARQ and full duplex over group size")
        records = []
        for period in (10, 3):
            for harq, duplex in ((False, "half"), (True, "half"),
                                 (False, "full")):
                for k in (4, 6, 8):
                    for seed in seeds:
                        simulate(records,
                                 f"fig3-{period}ms-h{int(harq)}-{duplex}-"
                                 f"k{k}-s{seed}",
                                 alloc_mode="mode2", n_group_agvs=k,
                                 packet_period_ms=period, harq_enabled=harq,
                                 duplex=duplex, seed=seed, **common)
        export_csv(records, str(out / "fig3.csv"))

    if args.only in (None, "fig4"):
        print("fig4: cooperative vs autonomous allocation")
        records = []
        for period in (10, 3):
            for mode in ("cooperative", "mode2"):
                for k in (4, 6, 8):
                    for seed in seeds:
                        simulate(records,
                                 f"fig4-{period}ms-{mode}-k{k}-s{seed}",
                                 alloc_mode=mode, n_group_agvs=k,
                                 packet_period_ms=period, seed=seed, **common)
        export_csv(records, str(out / "fig4.csv"))

    if args.only in (None, "fig5"):
        print("fig5: A2I throughput scaling (one data link per carrier)")
        records = []
        for period in (10, 3):
            for k in (4, 6, 8):
                for seed in seeds:
                    simulate(records, f"fig5-{period}ms-k{k}-s{seed}",
                             alloc_mode="mode2", n_group_agvs=k,
                             packet_period_ms=period, n_a2i_links=k,
                             sim_duration_s=args.duration_s, seed=seed)
        export_csv(records, str(out / "fig5.csv"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
