"""Command-line entry point: ``tmu-sim run | sweep | lint``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from .axi_model import read_trace, write_trace
from .config import parse_kv_text
from .harness import (
    PRESETS,
    ConfigRejected,
    SimConfig,
    apply_kv,
    lint,
    parse_grid,
    preset,
    run,
    sweep,
)


def _parse_set(items: list[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for item in items:
        if "=" not in item:
            raise ConfigRejected(f"--set expects key=value, got {item!r}")
        key, value = (p.strip() for p in item.split("=", 1))
        key = key.lower()
        out[key] = out[key] + "\n" + value if key in out else value
    return out


def _load_config(path: Optional[str], preset_name: Optional[str], sets: list[str]) -> SimConfig:
    cfg = preset(preset_name) if preset_name else SimConfig()
    if path:
        cfg = apply_kv(cfg, parse_kv_text(Path(path).read_text()))
    if sets:
        cfg = apply_kv(cfg, _parse_set(sets))
    cfg.validate()
    return cfg


def _add_config_args(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--config", required=required, help="flat key=value config file")
    p.add_argument("--preset", choices=PRESETS, help="start from a named preset")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key or register (repeatable)")


def cmd_run(args) -> int:
    cfg = _load_config(args.config, args.preset, args.set)
    result = run(cfg)
    rep = result.report
    print(f"variant={rep.variant} cycles={rep.total_cycles} txns={rep.n_txns} "
          f"done={rep.n_done} aborted={rep.n_aborted} "
          f"faults={rep.n_faults_injected} detected={rep.n_detected}")
    for ev in result.events:
        print(f"  cycle {ev['cycle']}: {ev['kind']} {ev.get('what', '')} -> {ev['action']}")
    if args.dump_ott:
        for i, dump in enumerate(result.ott_dumps):
            print(f"OTT before isolation {i}:")
            print("\n".join(f"  {line}" for line in dump))
        if result.tmu is not None:
            print("OTT at end of run:")
            print("\n".join(f"  {line}" for line in result.tmu.dump_ott()))
    if args.trace_out:
        with open(args.trace_out, "w", newline="") as fh:
            write_trace(result.trace, fh)
    if args.report_out:
        Path(args.report_out).write_text(rep.to_json())
    return 0 if result.valid else 2


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config, args.preset, args.set)
    axes = parse_grid(Path(args.grid).read_text()) if args.grid else {}
    results = sweep(cfg, axes, parallel=args.jobs != 1, workers=args.jobs or None)
    rows = []
    for res in results:
        params = " ".join(f"{k}={v}" for k, v in res.params.items()) or "(base)"
        if res.report is None:
            print(f"{params}: error {res.error}")
        else:
            r = res.report
            lat = [d.get("latency_from_issue") for d in r.detection_latencies if d.get("detected")]
            print(f"{params}: cycles={r.total_cycles} done={r.n_done} aborted={r.n_aborted} "
                  f"detected={r.n_detected}/{r.n_faults_injected} latency_from_issue={lat}")
        rows.append({"params": res.params, "error": res.error,
                     "report": res.report.to_dict() if res.report else None})
    if args.report_out:
        Path(args.report_out).write_text(json.dumps(rows, indent=2) + "\n")
    return 0 if all(r.error is None for r in results) else 1


def cmd_lint(args) -> int:
    cfg = _load_config(args.config, args.preset, args.set)
    with open(args.trace, newline="") as fh:
        verdicts = lint(read_trace(fh), cfg)
    for v in verdicts:
        print(f"cycle {v.cycle}: {v.kind} {v.label} slot={v.slot}")
    print(f"{len(verdicts)} verdict(s)")
    return 1 if verdicts else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tmu-sim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log recovery steps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one configuration")
    _add_config_args(p, required=False)
    p.add_argument("--dump-ott", action="store_true", help="print the OTT contents")
    p.add_argument("--trace-out", metavar="CSV")
    p.add_argument("--report-out", metavar="JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run the cross product of a parameter grid")
    _add_config_args(p, required=False)
    p.add_argument("--grid", help="key=v1,v2,... per sweep axis")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (0: one per CPU)")
    p.add_argument("--report-out", metavar="JSON")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("lint", help="replay the guards over a recorded trace")
    p.add_argument("--trace", required=True, metavar="CSV")
    _add_config_args(p, required=False)
    p.set_defaults(func=cmd_lint)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigRejected, ValueError, OSError) as exc:
        print(f"tmu-sim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
