#!/usr/bin/env python3
"""Coordinated-burst completion: selective retransmission vs pausing.

For each fan-in M, a set of M senders repeatedly blasts one receiver
with no other traffic, once over a lossy fabric with the selective
transport and once over a pausing fabric with go-back-N.  The figure
of merit is the request completion time of a burst: the span from the
first flow's start to the last flow's finish.  Writes rct_ratio.csv
with the per-fan-in mean RCTs and their ratio.
"""

import argparse
import csv
import sys
from pathlib import Path

from rdmasim.cli import main as cli_main
from rdmasim.metrics import read_summary_csv


def mean_rct_ns(summary_csv) -> float:
    rows = read_summary_csv(summary_csv)
    rcts = [v for k, v in rows.items()
            if k.startswith("rct_group") and k.endswith("_ns")]
    if not rcts:
        raise SystemExit(f"{summary_csv} has no burst completion rows")
    return sum(rcts) / len(rcts)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--fan-ins", default="8,12")
    ap.add_argument("--total-bytes", type=int, default=30_000_000)
    ap.add_argument("--repeats", type=int, default=4)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--arity", type=int, default=4)
    ap.add_argument("--quiet", action="store_true")
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fan_ins = [int(m) for m in args.fan_ins.split(",")]
    results = []
    for m in fan_ins:
        point = out / f"m{m}"
        cli = [
            "compare", "--out", str(point),
            "--set", f"topology.arity={args.arity}",
            "--set", "workload.kind=incast",
            "--set", f"workload.incast_fan_in={m}",
            "--set", f"workload.incast_total_bytes={args.total_bytes}",
            "--set", f"workload.incast_repeats={args.repeats}",
            "--seeds", str(args.seeds),
            "--variant", "irn:transport.kind=irn,topology.pfc=false",
            "--variant", "roce_pfc:transport.kind=gbn,topology.pfc=true",
            "--baseline", "roce_pfc",
        ]
        if args.quiet:
            cli.append("--quiet")
        rc = cli_main(cli)
        if rc != 0:
            return rc
        irn = mean_rct_ns(point / "irn" / "summary.csv")
        roce = mean_rct_ns(point / "roce_pfc" / "summary.csv")
        results.append((m, irn, roce, irn / roce))

    with open(out / "rct_ratio.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fan_in", "irn_rct_ns", "roce_pfc_rct_ns", "ratio"])
        for m, irn, roce, ratio in results:
            w.writerow([m, f"{irn:.9g}", f"{roce:.9g}", f"{ratio:.9g}"])
    for m, irn, roce, ratio in results:
        print(f"fan-in {m}: irn {irn/1e6:.3f} ms, pausing {roce/1e6:.3f} ms, "
              f"ratio {ratio:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
