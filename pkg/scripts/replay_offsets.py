#!/usr/bin/env python3
"""Project alternative speed offsets open-loop over a recorded run.

Either pass --log with an existing run_log.csv or let the script simulate
the canonical scenario first. Every logged advisory/prevailing pair is
re-evaluated under each offset without feedback, and the resulting
setpoint traces are written side by side for plotting.
"""

import argparse
import csv
from pathlib import Path

from middleway import canonical_scenario, offset_replay, read_run_log, run


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--log", type=Path, default=None,
                        help="existing run_log.csv (default: simulate)")
    parser.add_argument("--offsets", default="2,4,6",
                        help="comma-separated offsets in m/s")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=Path("out/replay"))
    return parser.parse_args()


def main() -> None:
    args = parse_args()
    offsets = [float(tok) for tok in args.offsets.split(",") if tok.strip()]
    if args.log is not None:
        log = read_run_log(args.log)
    else:
        print("simulating canonical scenario for the source log")
        log = run(canonical_scenario(seed=args.seed))
    replay = offset_replay(log, offsets)

    args.out.mkdir(parents=True, exist_ok=True)
    dest = args.out / "replay_v_des.csv"
    with open(dest, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t", "vehicle_id", "v_pr", "v_gr",
             *(f"v_des_offset_{k:g}" for k in offsets)]
        )
        for i in range(len(replay.t)):
            writer.writerow(
                [
                    f"{replay.t[i]:.3f}",
                    replay.vehicle_id[i],
                    f"{replay.v_pr[i]:.6f}",
                    f"{replay.v_gr[i]:.6f}",
                    *(f"{replay.v_des[k][i]:.6f}" for k in offsets),
                ]
            )

    print(f"{len(replay.t)} samples replayed at offsets {offsets}")
    for k in offsets:
        trace = replay.v_des[k]
        print(f"  offset {k:g}: mean v_des {trace.mean():6.2f} m/s, "
              f"min {trace.min():6.2f}, max {trace.max():6.2f}")
    print(f"wrote {dest}")


if __name__ == "__main__":
    main()
