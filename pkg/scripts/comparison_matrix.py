#!/usr/bin/env python3
"""Transport-by-fabric comparison at one offered load.

Runs the four standard variants on the same scenario and seeds:

    irn         selective retransmission, lossy fabric
    irn_pfc     selective retransmission over a pausing fabric
    roce_pfc    go-back-N over a pausing fabric (the classic deployment)
    roce_nopfc  go-back-N with drops and no pausing

and writes per-variant summaries plus ratio tables against roce_pfc.
"""

import argparse
import sys

from rdmasim.cli import main as cli_main

VARIANTS = [
    "irn:transport.kind=irn,topology.pfc=false",
    "irn_pfc:transport.kind=irn,topology.pfc=true",
    "roce_pfc:transport.kind=gbn,topology.pfc=true",
    "roce_nopfc:transport.kind=gbn,topology.pfc=false",
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
        "--baseline", "roce_pfc",
    ]
    if args.quiet:
        cli.append("--quiet")
    for v in VARIANTS:
        cli += ["--variant", v]
    return cli_main(cli)


if __name__ == "__main__":
    sys.exit(main())
