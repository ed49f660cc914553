"""Soundness fuzzing over a grid of program sizes.

    python3 scripts/fuzz_campaign.py --count 2000 --sizes 10 25 40 --deep
"""

import argparse
import json
import time

from etr.soundness import run_fuzz
from etr.stack import run_deep


def campaign(count: int, sizes: list[int], seed: int, deep: bool) -> dict:
    rows = {}
    for size in sizes:
        start = time.perf_counter()
        rep = run_fuzz(count, size, seed=seed, deep=deep)
        rows[size] = {**rep.to_json(), "seconds": round(time.perf_counter() - start, 2)}
        print(f"size {size:3d}: {rep.programs_run} programs, {rep.violations} violations, "
              f"{rep.fuel_exhausted} out of fuel, {rows[size]['seconds']}s")
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=1000)
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 25, 40])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--deep", action="store_true")
    ap.add_argument("--out", help="write the per-size reports as JSON")
    args = ap.parse_args()
    rows = run_deep(campaign, args.count, args.sizes, args.seed, args.deep)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
    raise SystemExit(0 if all(r["violations"] == 0 for r in rows.values()) else 5)


if __name__ == "__main__":
    main()
