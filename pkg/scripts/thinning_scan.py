"""G and G_q along the rectangles 1 x 1/n, with the convex sandwich at each q."""
import argparse

from polya_lab.functionals import Name, evaluate
from polya_lab.search import regime_scan, thinning_metrics


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ell", type=float, default=0.03)
    args = ap.parse_args()
    ns = (1, 2, 4, 8, 16, 32)
    metrics = thinning_metrics(ns, ell=args.ell)
    for n, mt in zip(ns, metrics):
        print(f"n={n:<3} G={evaluate(Name.G, mt).value:.6f}")
    scan = regime_scan(qs=(0.5, 2 / 3, 1.0), ns=ns, metrics=metrics)
    for q in (0.5, 2 / 3, 1.0):
        print(f"q={q:.4f} trend={scan.trend(q)}")
        for r in scan.for_q(q):
            print(f"  n={r.n:<3} G_q={r.G_q:.4e}  [{r.lower:.3e}, {r.upper:.3e}]")


if __name__ == "__main__":
    main()
