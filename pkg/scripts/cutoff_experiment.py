"""Cutoff evidence for the hypercube walk against the bounded four-point and two-point families."""
import argparse

from chainlimit.experiments import CutoffConfig, run_cutoff
from chainlimit.family import boundedness_report, builtin_family


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--max-dim", type=int, default=12)
    a = p.parse_args()
    ev, rep = run_cutoff(CutoffConfig(n_list=tuple(range(4, a.max_dim + 1))))
    print(f"hypercube cutoff evidence: {ev.cutoff}")
    for n, early, late in ev.rows():
        print(f"  d={n:2d}  G(0.5)={early:9.4f}  G(2)-1={late:.4f}")
    print("hypercube flags:", rep.flags())
    ev4, _ = run_cutoff(CutoffConfig(family="four_point", normalize=True))
    print(f"four_point (normalized) cutoff evidence: {ev4.cutoff}")
    for name in ("two_point", "four_point", "two_blocks"):
        print(f"{name} flags:", boundedness_report(builtin_family(name)).flags())


if __name__ == "__main__":
    main()
