#!/usr/bin/env python3
"""Which ingredient matters: loss recovery or the window cap?

Runs three senders on the same lossy fabric and seeds:

    irn            selective retransmission + window cap
    irn_no_window  selective retransmission, cap disabled
    irn_go_back_n  window cap kept, recovery swapped for go-back-N

Average flow completion time should get strictly worse down that list.
Ratio tables are written against the full irn variant.
"""

import argparse
import sys

from rdmasim.cli import main as cli_main

VARIANTS = [
    "irn:transport.kind=irn,topology.pfc=false",
    "irn_no_window:transport.kind=irn,transport.bdp_fc=false,topology.pfc=false",
    "irn_go_back_n:transport.kind=gbn,transport.bdp_fc=true,topology.pfc=false",
]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--load", type=float, default=0.7)
    ap.add_argument("--flows", type=int, default=10_000)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--arity", type=int, default=4)
    ap.add_argument("--quiet", action="store_true")
    args = ap.parse_args(argv)

    cli = [
        "compare", "--out", args.out,
        "--set", f"topology.arity={args.arity}",
        "--set", f"workload.load={args.load}",
        "--set", f"workload.flow_count={args.flows}",
        "--seeds", str(args.seeds),
        "--baseline", "irn",
    ]
    if args.quiet:
        cli.append("--quiet")
    for v in VARIANTS:
        cli += ["--variant", v]
    return cli_main(cli)


if __name__ == "__main__":
    sys.exit(main())
