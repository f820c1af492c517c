"""Critical mass ratio of the stability condition as the density parameter eps grows."""
import argparse

import numpy as np

from polaron2d.errors import BracketError
from polaron2d.stability import critical_mass, stability_margin


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, nargs="*", default=[0.0, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2])
    ap.add_argument("--margin-grid", action="store_true", help="also print the eps=0 margin on M in [1, 2]")
    ap.add_argument("--quad-tol", type=float, default=1e-10)
    args = ap.parse_args()

    print("eps,m_star,bracket_lo,bracket_hi")
    for e in args.eps:
        try:
            m, (lo, hi) = critical_mass(e, quad_tol=args.quad_tol)
            print(f"{e:g},{m:.10f},{lo:.10f},{hi:.10f}")
        except BracketError as exc:
            print(f"{e:g},nan,nan,nan  # {exc}")
    if args.margin_grid:
        print("\nM,alpha,margin")
        for M in np.linspace(1.0, 2.0, 21):
            r = stability_margin(M, 0.0, quad_tol=args.quad_tol)
            print(f"{M:.3f},{r.alpha:.10f},{r.margin:+.3e}")


if __name__ == "__main__":
    main()
