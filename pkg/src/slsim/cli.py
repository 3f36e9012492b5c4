"""Command line front end: single runs, parameter sweeps, config validation.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, ScenarioConfig, load_config
from .engine import run as run_sim
from .kpi import export_csv, record_from_report

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _base_config(args) -> ScenarioConfig:
    if args.config:
        return load_config(args.config)
    return ScenarioConfig()


def _apply_single_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    overrides = {}
    if args.mode is not None:
        overrides["alloc_mode"] = args.mode
    if args.agvs is not None:
        overrides["n_group_agvs"] = args.agvs
    if args.period_ms is not None:
        overrides["packet_period_ms"] = args.period_ms
    if args.harq is not None:
        overrides["harq_enabled"] = args.harq == "on"
    if args.duplex is not None:
        overrides["duplex"] = args.duplex
    if args.a2i is not None:
        overrides["n_a2i_links"] = args.a2i
    if args.duration_s is not None:
        overrides["sim_duration_s"] = args.duration_s
    if args.seed is not None:
        overrides["seed"] = args.seed
    return cfg.with_overrides(**overrides)


def _csv_list(text: str, convert):
    return [convert(part) for part in text.split(",") if part != ""]


def cmd_run(args) -> int:
    cfg = _apply_single_overrides(_base_config(args), args)
    report = run_sim(cfg)
    rec = record_from_report(report, run_id="run-0")
    export_csv([rec], args.out)
    prr_txt = "n/a" if rec.prr is None else f"{rec.prr:.4f}"
    print(f"run seed={cfg.seed} mode={cfg.alloc_mode} agvs={cfg.n_group_agvs} "
          f"period={cfg.packet_period_ms}ms prr={prr_txt} "
          f"tput_a2i={rec.throughput_a2i_mbps:.4f}Mbps -> {args.out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _base_config(args)
    modes = _csv_list(args.mode, str) if args.mode else [base.alloc_mode]
    agvs = _csv_list(args.agvs, int) if args.agvs else [base.n_group_agvs]
    periods = _csv_list(args.period_ms, int) if args.period_ms \
        else [base.packet_period_ms]
    harqs = [h == "on" for h in _csv_list(args.harq, str)] if args.harq \
        else [base.harq_enabled]
    duplexes = _csv_list(args.duplex, str) if args.duplex else [base.duplex]
    seeds = [base.seed + i for i in range(args.seeds)]
    if args.duration_s is not None:
        base = base.with_overrides(sim_duration_s=args.duration_s)
    if args.a2i is not None:
        base = base.with_overrides(n_a2i_links=args.a2i)

    combos = [(m, k, p, h, d, s)
              for m in modes for k in agvs for p in periods
              for h in harqs for d in duplexes for s in seeds]
    records = []
    for idx, (m, k, p, h, d, s) in enumerate(combos):
        cfg = base.with_overrides(alloc_mode=m, n_group_agvs=k,
                                  packet_period_ms=p, harq_enabled=h,
                                  duplex=d, seed=s)
        report = run_sim(cfg)
        records.append(record_from_report(report, run_id=f"sweep-{idx}"))
        if not args.quiet:
            rec = records[-1]
            prr_txt = "n/a" if rec.prr is None else f"{rec.prr:.4f}"
            print(f"[{idx + 1}/{len(combos)}] mode={m} agvs={k} period={p} "
                  f"harq={int(h)} duplex={d} seed={s} prr={prr_txt}")
    records.sort(key=lambda r: (r.alloc_mode, r.n_agvs, r.period_ms,
                                r.harq, r.duplex, r.seed))
    export_csv(records, args.out)
    print(f"sweep: {len(records)} rows -> {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    if not args.config:
        print("validate: --config <path> is required", file=sys.stderr)
        return EXIT_USAGE
    cfg = load_config(args.config)
    cfg.validate()
    print(f"{args.config}: OK "
          f"(mode={cfg.alloc_mode}, agvs={cfg.n_group_agvs}, "
          f"period={cfg.packet_period_ms}ms, seed={cfg.seed})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slsim",
        description="NR-sidelink resource allocation simulator for AGV groups")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, lists=False):
        p.add_argument("--config", help="scenario YAML file")
        p.add_argument("--mode", help="allocation mode" +
                       (" (comma list)" if lists else ""))
        p.add_argument("--agvs", type=(str if lists else int),
                       help="group size" + (" (comma list)" if lists else ""))
        p.add_argument("--period-ms", dest="period_ms",
                       type=(str if lists else int),
                       help="packet period in ms" +
                       (" (comma list)" if lists else ""))
        p.add_argument("--harq", choices=None if lists else ("on", "off"),
                       help="HARQ retransmission" +
                       (" (comma list of on/off)" if lists else ""))
        p.add_argument("--duplex", help="half or full" +
                       (" (comma list)" if lists else ""))
        p.add_argument("--a2i", type=int, help="number of A2I links")
        p.add_argument("--duration-s", dest="duration_s", type=float,
                       help="simulated seconds")

    p_run = sub.add_parser("run", help="run one scenario")
    add_common(p_run)
    p_run.add_argument("--seed", type=int, help="run seed")
    p_run.add_argument("--out", required=True, help="output CSV path")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="cross-product of scenario axes")
    add_common(p_sweep, lists=True)
    p_sweep.add_argument("--seeds", type=int, default=1,
                         help="number of seeds (base seed, base+1, ...)")
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.add_argument("--quiet", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="lint a scenario file")
    p_val.add_argument("--config", help="scenario YAML file")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
