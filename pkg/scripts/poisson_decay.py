"""Decay of the sum-minus-integral residual of G with the box size."""
import argparse

from polaron2d.gfunc import PhysParams, poisson_residual


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--boxes", type=float, nargs="+", default=[10.0, 14.0, 20.0, 28.0, 40.0])
    ap.add_argument("--mass-ratio", type=float, default=2.0)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--tau", type=float, default=1.0)
    ap.add_argument("--qx", type=float, default=0.0)
    args = ap.parse_args()

    p = PhysParams.build(args.mass_ratio, -1.0, args.mu, args.boxes[0])
    table = poisson_residual(p, [args.qx, 0.0], args.tau, args.boxes)
    print("box,residual,scaled")
    for r in table.rows:
        print(f"{r.box:g},{r.residual:.6e},{r.scaled:.6g}")
    print(f"# spread of scaled residual: {table.spread:.4g}")


if __name__ == "__main__":
    main()
