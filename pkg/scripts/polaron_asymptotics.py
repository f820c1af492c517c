"""Polaron energy against its leading logarithmic form over a range of densities."""
import argparse
import time

import numpy as np

from polaron2d.gfunc import PhysParams
from polaron2d.polaron import HoleKernel, asymptotic_polaron, solve_polaron


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mass-ratio", type=float, default=2.0)
    ap.add_argument("--l2eb", type=float, default=100.0)
    ap.add_argument("--decades", type=float, nargs=2, default=(3.0, 7.0), help="log10 mu~ range; cost grows ~10x per decade")
    ap.add_argument("--points", type=int, default=9)
    ap.add_argument("--kernel", default="continuum", choices=("continuum", "lattice", "auto"))
    args = ap.parse_args()

    print("mu_tilde,e_p,leading,band,scaled_deviation,seconds")
    for mt in np.logspace(*args.decades, args.points):
        p = PhysParams.scaled(args.mass_ratio, mt, args.l2eb)
        t0 = time.perf_counter()
        sol = solve_polaron(p, hole_kernel=HoleKernel(p, args.kernel))
        lead, band = asymptotic_polaron(p)
        print(f"{mt:.6g},{sol.e_p:.12g},{lead:.12g},{band:.6g},{abs(sol.e_p - lead) / band:.6g},"
              f"{time.perf_counter() - t0:.2f}", flush=True)


if __name__ == "__main__":
    main()
