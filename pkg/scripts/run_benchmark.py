#!/usr/bin/env python
"""Run the zero-sum game benchmark and print a short report.

Equivalent to `svifeas replicate-sec7`, kept as a script for quick edits
(change the horizon or seed count below without touching a config file).
"""
import argparse

from svifeas.harness import replicate_zero_sum_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--out", default="out")
    ap.add_argument("--horizon", type=int, default=5000)
    args = ap.parse_args()

    summary = replicate_zero_sum_study(seed_count=args.seeds, out_dir=args.out,
                                       horizon=args.horizon)
    for block, entry in summary["blocks"].items():
        print(f"[{block}]")
        for col, v in entry["final"].items():
            print(f"  final {col} = {v:.6g}")
        for col, s in entry["slope"].items():
            print(f"  loglog slope {col} = {s:.4f}")
    print("files:", *summary["files"], sep="\n  ")


if __name__ == "__main__":
    main()
