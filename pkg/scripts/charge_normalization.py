"""Which multiple of the raw vertical momentum governs the conjugate times?

Integrates the linearized flow for covectors with raw vertical momentum
``v = Re<p, iz>`` and reports the first conjugate time next to two candidate
formulas: 2 pi / sqrt(4 + (2v)^2), the closed-form prediction with charge
u0 = 2v, and 2 pi / sqrt(4 + v^2), the same formula with the raw value.
Also prints the measured ratio between the curvature of the connection form
and the Kaehler form, which is where the factor comes from.

    python3 scripts/charge_normalization.py --n 2 --raw 0.25 0.5 1
"""

import argparse
import math

import numpy as np

from hopf_sr import flow, geometry, jacobi


def first_time(lam, T):
    report = jacobi.conjugate_times_variational(lam, T)
    return report.entries[0] if report.entries else (None, 0)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--raw", type=float, nargs="+", default=[0.25, 0.5, 1.0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    ratios = []
    for _ in range(200):
        z = geometry.SpherePoint(geometry.random_sphere(rng, args.n))
        X = geometry.HorizontalVector(z, geometry.random_horizontal(rng, z.z, unit=False))
        Y = geometry.HorizontalVector(z, geometry.random_horizontal(rng, z.z, unit=False))
        r = geometry.curvature_form_ratio(z, X, Y)
        if r is not None:
            ratios.append(r)
    print(f"d(omega)(X,Y) / g(JX,Y): mean {np.mean(ratios):.6f}, spread {np.ptp(ratios):.1e} over {len(ratios)} planes")

    print(f"{'raw v':>6} {'measured':>10} {'mult':>4} {'u0=2v':>10} {'u0=v':>10}")
    for v in args.raw:
        lam = flow.random_phase_point(rng, args.n, 2 * v)
        assert abs(flow.vertical_momentum(lam) - v) < 1e-12
        t, m = first_time(lam, 4.0)
        doubled = 2 * math.pi / math.sqrt(4 + (2 * v) ** 2)
        raw = 2 * math.pi / math.sqrt(4 + v**2)
        print(f"{v:>6.3f} {t:>10.6f} {m:>4} {doubled:>10.6f} {raw:>10.6f}")


if __name__ == "__main__":
    main()
