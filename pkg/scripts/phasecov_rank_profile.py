"""Rank and Bloch entries of the rank-dropping phase-covariant model along a time grid.

The built-in ``phasecov-drop`` model loses the coherences at t1 = 1 (rank 4 -> 2)
and relaxes to |0><0| at t2 = 2 (rank 1).
"""
import argparse
import csv
import sys

import numpy as np

from divprop.models import builtin_model
from divprop.operators import min_choi_eigenvalue, svd


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default="phasecov-drop")
    ap.add_argument("--stop", type=float, default=3.0)
    ap.add_argument("--points", type=int, default=31)
    args = ap.parse_args()

    model = builtin_model(args.model)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["t", "rank", "T11", "T30", "T33", "min_choi_eig"])
    for t in np.linspace(0.0, args.stop, args.points):
        T = model.transfer(float(t))
        w.writerow([repr(float(t)), svd(T).rank, repr(float(T[1, 1])), repr(float(T[3, 0])), repr(float(T[3, 3])),
                    repr(min_choi_eigenvalue(T))])
    return 0


if __name__ == "__main__":
    sys.exit(main())
