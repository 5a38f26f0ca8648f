"""Print the m = 2 regime table: thresholds and classifier verdicts over a q grid."""
import argparse

from polya_lab.modecoeffs import classify, kohler_jobin_q, threshold_qprime, threshold_qstar


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--qs", default="0.1,0.3,0.5,0.6,0.7,0.8,0.9,0.95,1.0,1.5")
    args = ap.parse_args()
    m = args.m
    print(f"m={m}  Kohler-Jobin q={kohler_jobin_q(m):.7f}  q*={threshold_qstar(m):.7f}  q'={threshold_qprime(m):.7f}")
    print(f"{'q':>6}  {'F_q':<22}{'G_q':<22}")
    for q in (float(s) for s in args.qs.split(",")):
        f, g = classify("F_q", m, q), classify("G_q", m, q)
        print(f"{q:>6.3f}  {f.verdict.value:<22}{g.verdict.value:<22}")


if __name__ == "__main__":
    main()
