"""Sweep conjugate times over fibration index and charge, comparing all three detectors.

    python3 scripts/conjugate_sweep.py --n 1 2 3 --u0 0 0.5 1 2 --T 7
"""

import argparse
import time

from hopf_sr import comparison, jacobi
from hopf_sr.acceptance import grid_phase_point


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--u0", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0])
    ap.add_argument("--T", type=float, default=7.0)
    args = ap.parse_args()

    print(f"{'n':>2} {'u0':>5} {'gap s~v':>9} {'gap s~c':>9} {'count':>5} {'bounds':>9}  first times")
    for n in args.n:
        d_c = comparison.c_dimension(n)
        for u0 in args.u0:
            lam = grid_phase_point(n, u0)
            t0 = time.time()
            s = jacobi.conjugate_times_structural(lam, args.T)
            v = jacobi.conjugate_times_variational(lam, args.T)
            c = jacobi.closed_form_conjugate_times(4 + u0**2, 1 + u0**2 / 4, d_c, args.T)
            gaps = []
            for other in (v, c):
                if other.multiplicities != s.multiplicities:
                    gaps.append(float("inf"))
                else:
                    gaps.append(max((abs(a - b) for a, b in zip(s.times, other.times)), default=0.0))
            b = comparison.bounds_check(v, u0, n, args.T)
            head = ", ".join(f"{t:.4f}x{m}" for t, m in s.entries[:3])
            print(
                f"{n:>2} {u0:>5.2f} {gaps[0]:>9.1e} {gaps[1]:>9.1e} {v.total:>5} "
                f"{b.z_lower:>3}..{b.z_upper:<3}  {head}  ({time.time() - t0:.1f}s)"
            )


if __name__ == "__main__":
    main()
