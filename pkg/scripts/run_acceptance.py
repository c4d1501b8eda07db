"""Run the acceptance criteria and print one line per criterion.

Usage: python3 scripts/run_acceptance.py [--threads N] [--only 4 5] [--json out.json]
"""
import argparse
import json
import sys

from plbarrier.acceptance import run_all


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--only", type=int, nargs="*")
    ap.add_argument("--json")
    args = ap.parse_args()
    results = run_all(args.seed, None, args.threads, args.only)
    for r in results:
        print(r.line())
        for f in r.failures[1:]:
            print("    " + f)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([r.to_dict(with_runtime=True) for r in results], fh, indent=2)
    return 0 if all(r.ok for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
