"""Gap of the perturbed polaron equation as a function of the coupling shift r."""
import argparse
import math

from polaron2d.errors import Polaron2DError
from polaron2d.gfunc import PhysParams
from polaron2d.polaron import HoleKernel, solve_perturbed, solve_polaron


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mass-ratio", type=float, default=2.0)
    ap.add_argument("--l2eb", type=float, default=100.0)
    ap.add_argument("--mu-tilde", type=float, nargs="+", default=[1e4, 1e5, 1e6])
    ap.add_argument("--r", type=float, nargs="+", default=[0.0, 0.1, 0.3, 0.6, 1.0, 37.0])
    args = ap.parse_args()

    print("mu_tilde,r,g0_minus_r,lambda,gap,scaled_gap,status")
    for mt in args.mu_tilde:
        p = PhysParams.scaled(args.mass_ratio, mt, args.l2eb)
        hk = HoleKernel(p, "continuum")
        sol = solve_polaron(p, hole_kernel=hk)
        g0 = hk.g_origin(-sol.e_p)
        for r in args.r:
            try:
                ps = solve_perturbed(p, r, polaron=sol, hole_kernel=hk)
                scaled = ps.gap * p.log_mu_tilde / ((1 + r) * abs(sol.e_p))
                print(f"{mt:g},{r:g},{g0 - r:.4g},{ps.lam:.10g},{ps.gap:.4g},{scaled:.4g},ok")
            except Polaron2DError as exc:
                print(f"{mt:g},{r:g},{g0 - r:.4g},nan,nan,{math.nan},{type(exc).__name__}")


if __name__ == "__main__":
    main()
