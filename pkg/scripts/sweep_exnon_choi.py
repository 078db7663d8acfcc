"""Tabulate the smallest (doubled) Choi eigenvalue over the EX-NON propagator family.

Writes CSV rows ``a32,a33,min_eig,closed_form`` where the closed form is
``1 - sqrt(a32^2 + a33^2 + 1)``; the only nonnegative entry sits at the origin.
"""
import argparse
import csv
import math
import sys

import numpy as np

from divprop.models import builtin_model
from divprop.propagator import propagator_family, tp_inverse_family
from divprop.reproduce import doubled_choi_eigenvalues


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--range", type=float, default=2.0, help="half-width of the square grid")
    ap.add_argument("--points", type=int, default=41)
    args = ap.parse_args()

    psi = builtin_model("exnon").transfer(1.0)
    fam = propagator_family(psi, tp_inverse_family(psi))
    axis = np.linspace(-args.range, args.range, args.points)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["a32", "a33", "min_eig", "closed_form"])
    for a in axis:
        for b in axis:
            lam = doubled_choi_eigenvalues(fam.at(a32=a, a33=b))[0]
            w.writerow([repr(float(a)), repr(float(b)), repr(float(lam)),
                        repr(1 - math.sqrt(a * a + b * b + 1))])
    return 0


if __name__ == "__main__":
    sys.exit(main())
