"""Homogenization lower-bound gap on the disk, including the best delta for each c."""
import argparse

from polya_lab.fem import ball_exact
from polya_lab.homogenization import best_delta, sup_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=2)
    args = ap.parse_args()
    base = ball_exact(args.m)
    print(f"{'c':>8} {'delta':>8} {'gap':>10}")
    for c in (1e2, 1e4, 1e6, 1e8, 1e10, 1e12):
        for d in (1e-1, 1e-2, 1e-3, 1e-4, best_delta(c)):
            (pt,) = sup_curve(base, [c], [d], shape="ball")
            print(f"{c:>8.0e} {d:>8.1e} {pt.gap:>10.3e}")


if __name__ == "__main__":
    main()
