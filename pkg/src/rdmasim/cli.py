"""Command line front end.

Two commands.  `run` executes one configuration, or the full grid when
the config file has a [sweep] section, across one or more seeds, and
writes per-flow, summary, and tail CSVs plus a manifest.  `compare`
runs named variants of the same scenario (same fabric, workload, and
seeds; different transport settings) and emits metric ratio tables
against a chosen baseline.  All outputs are deterministic: the same
invocation produces byte-identical files.
"""

from __future__ import annotations

import argparse
import copy
import itertools
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, Resolved, RunConfig, apply_setting, load_ini
from .metrics import (aggregate, write_flow_csv, write_ratio_csv,
                      write_summary_csv, write_tail_csv)
from .runner import Run


def _apply_all(cfg: RunConfig, settings) -> None:
    for dotted, raw in settings:
        apply_setting(cfg, dotted, raw)


def _parse_set(raw: str):
    if "=" not in raw:
        raise ConfigError(f"--set {raw!r} is not section.key=value")
    dotted, value = raw.split("=", 1)
    return dotted.strip(), value.strip()


def _seed_list(args, base_seed: int) -> list:
    if args.seed_list:
        return [int(s) for s in args.seed_list.split(",") if s.strip()]
    return [base_seed + i for i in range(args.seeds)]


def _expand_sweep(sweeps: dict) -> list:
    """Cartesian product of sweep axes as lists of (dotted, raw) pairs."""
    if not sweeps:
        return [[]]
    keys = sorted(sweeps)
    combos = []
    for values in itertools.product(*(sweeps[k] for k in keys)):
        combos.append(list(zip(keys, values)))
    return combos


def _point_label(combo) -> str:
    if not combo:
        return "point"
    return "__".join(f"{k}={v}" for k, v in combo)


def _execute_point(cfg: RunConfig, seeds, out: Path, quiet: bool):
    """Run one configuration for every seed; write per-seed directories
    and a pooled summary over all seeds' flows."""
    out.mkdir(parents=True, exist_ok=True)
    pooled_records = []
    pooled_counters: dict = {}
    manifest = None
    mtu = None
    for seed in seeds:
        c = copy.deepcopy(cfg)
        c.seed = seed
        rv = Resolved(c)
        mtu = rv.mtu
        if manifest is None:
            manifest = rv.manifest()
            manifest["seeds"] = list(seeds)
        res = Run(rv).execute()
        sdir = out / f"seed_{seed}"
        sdir.mkdir(exist_ok=True)
        summary = aggregate(res.records, rv.mtu, res.counters)
        write_flow_csv(sdir / "flows.csv", res.records)
        write_summary_csv(sdir / "summary.csv", summary)
        write_tail_csv(sdir / "tail.csv", summary)
        if len(seeds) > 1:
            # Burst groups are numbered per run; keep seeds' bursts
            # apart in the pool or their spans would merge.
            pooled_records.extend(
                replace(r, group=f"s{seed}b{r.group}")
                if r.group is not None else r
                for r in res.records)
        else:
            pooled_records.extend(res.records)
        for k, v in res.counters.items():
            pooled_counters[k] = pooled_counters.get(k, 0) + v
        if not quiet:
            if summary.n_flows:
                note = (f"{summary.n_flows} flows, avg slowdown "
                        f"{summary.avg_slowdown:.3f}")
            else:
                note = "no completed flows"
            print(f"{out.name} seed {seed}: {note}", file=sys.stderr)
    pooled = aggregate(pooled_records, mtu, pooled_counters)
    write_summary_csv(out / "summary.csv", pooled)
    write_tail_csv(out / "tail.csv", pooled)
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return pooled


def cmd_run(args) -> int:
    if args.config:
        cfg, sweeps = load_ini(args.config)
    else:
        cfg, sweeps = RunConfig(), {}
    _apply_all(cfg, [_parse_set(s) for s in args.set])
    seeds = _seed_list(args, cfg.seed)
    out = Path(args.out)
    combos = _expand_sweep(sweeps)
    if combos == [[]]:
        _execute_point(cfg, seeds, out, args.quiet)
        return 0
    out.mkdir(parents=True, exist_ok=True)
    index_lines = ["directory," + ",".join(sorted(sweeps))]
    for combo in combos:
        point_cfg = copy.deepcopy(cfg)
        _apply_all(point_cfg, combo)
        label = _point_label(combo)
        _execute_point(point_cfg, seeds, out / label, args.quiet)
        index_lines.append(label + "," + ",".join(v for _, v in combo))
    (out / "index.csv").write_text("\n".join(index_lines) + "\n")
    return 0


def _parse_variant(raw: str):
    """NAME[:key=value,key=value...] from one --variant argument."""
    name, _, rest = raw.partition(":")
    if not name:
        raise ConfigError(f"--variant {raw!r} has no name")
    settings = []
    if rest:
        for chunk in rest.split(","):
            settings.append(_parse_set(chunk))
    return name, settings


def cmd_compare(args) -> int:
    if args.config:
        base, sweeps = load_ini(args.config)
        if sweeps:
            raise ConfigError("compare does not take a [sweep] section")
    else:
        base = RunConfig()
    _apply_all(base, [_parse_set(s) for s in args.set])
    variants = [_parse_variant(v) for v in args.variant]
    names = [n for n, _ in variants]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate variant names")
    baseline = args.baseline or names[-1]
    if baseline not in names:
        raise ConfigError(f"baseline {baseline!r} is not a variant")
    seeds = _seed_list(args, base.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summaries = {}
    signature = None
    for name, settings in variants:
        cfg = copy.deepcopy(base)
        _apply_all(cfg, settings)
        sig = Resolved(cfg).scenario_signature()
        if signature is None:
            signature = sig
        elif sig != signature:
            raise ConfigError(
                f"variant {name!r} changes the scenario, not just the "
                f"transport; comparisons would be meaningless")
        summaries[name] = _execute_point(cfg, seeds, out / name, args.quiet)
    for name in names:
        if name == baseline:
            continue
        write_ratio_csv(out / f"ratio_{name}_over_{baseline}.csv",
                        name, baseline, summaries[name], summaries[baseline])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rdmasim",
        description="Packet-level datacenter fabric and RDMA transport "
                    "simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute one config or a sweep grid")
    run.add_argument("--config", help="INI run configuration")
    run.add_argument("--set", action="append", default=[],
                     metavar="SECTION.KEY=VALUE",
                     help="override one setting (repeatable)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seeds", type=int, default=1,
                     help="number of consecutive seeds starting at run.seed")
    run.add_argument("--seed-list", help="explicit comma-separated seeds")
    run.add_argument("--quiet", action="store_true")
    run.set_defaults(fn=cmd_run)

    cmp_ = sub.add_parser("compare",
                          help="run variants of one scenario and emit ratios")
    cmp_.add_argument("--config", help="INI run configuration")
    cmp_.add_argument("--set", action="append", default=[],
                      metavar="SECTION.KEY=VALUE")
    cmp_.add_argument("--variant", action="append", required=True,
                      metavar="NAME:KEY=VALUE[,KEY=VALUE...]",
                      help="named settings delta (repeatable)")
    cmp_.add_argument("--baseline",
                      help="variant used as the ratio denominator "
                           "(default: last)")
    cmp_.add_argument("--out", required=True)
    cmp_.add_argument("--seeds", type=int, default=1)
    cmp_.add_argument("--seed-list")
    cmp_.add_argument("--quiet", action="store_true")
    cmp_.set_defaults(fn=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
