#!/usr/bin/env python3
"""Print the per-connection state the selective transport adds to a NIC."""

import argparse
import sys

from rdmasim.verbs import state_overhead_report


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.strip())
    ap.add_argument("--bitmap-width", type=int, default=128,
                    help="tracked sequence window per bitmap")
    args = ap.parse_args(argv)
    report = state_overhead_report(args.bitmap_width)
    width = max(len(k) for k in report)
    for key, value in report.items():
        print(f"{key:<{width}}  {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
