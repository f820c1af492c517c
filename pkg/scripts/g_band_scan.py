"""Weighted distance of the lattice G from its leading logarithm, per density and box."""
import argparse

from polaron2d.certify import lemma31_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mass-ratio", type=float, default=2.0)
    ap.add_argument("--mu-tilde", type=float, nargs="+", default=[1e2, 1e3, 1e4, 1e5])
    ap.add_argument("--l2eb", type=float, nargs="+", default=[1.0, 100.0])
    args = ap.parse_args()

    scan = lemma31_scan(args.mass_ratio, tuple(args.mu_tilde), tuple(args.l2eb))
    print("mu_tilde,l2eb,max_weighted_discrepancy")
    for (mt, l2eb), v in sorted(scan.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        print(f"{mt:g},{l2eb:g},{v:.6g}")


if __name__ == "__main__":
    main()
