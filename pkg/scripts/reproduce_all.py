"""Run every worked-example battery and print a summary; exit 1 if any check fails."""
import argparse
import sys
from pathlib import Path

from divprop.io import dumps_canonical
from divprop.reproduce import BATTERIES, reproduce


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--samples", type=int, default=500)
    ap.add_argument("--json", type=Path, help="also write the full reports here")
    args = ap.parse_args()

    reports = [reproduce(name, args.seed, args.samples) for name in sorted(BATTERIES)]
    for r in reports:
        print(r.summary())
    if args.json:
        args.json.write_text(dumps_canonical(reports) + "\n")
    ok = all(r.passed for r in reports)
    print(f"\n{sum(r.passed for r in reports)}/{len(reports)} batteries passed")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
