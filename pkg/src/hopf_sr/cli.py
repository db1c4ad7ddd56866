"""Command-line front end.

Exit codes: 0 success, 1 numerical or assertion failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import acceptance, comparison, flow, geometry, jacobi

METHODS = ("structural", "variational", "closed", "all")
AGREEMENT_TOL = 1e-4
BOUNDS_HEADER = ["u0", "T", "dc", "z_lower", "predicted", "measured", "z_upper", "pass"]


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    n: int = 2
    u0: float = 0.0
    T: float = 1.0
    steps: Optional[int] = None
    tol: float = 1e-6
    seed: int = 0
    method: str = "all"
    format: str = "json"

    def __post_init__(self):
        if self.n < 1:
            raise UsageError("--n must be >= 1")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise UsageError("--T must be positive")
        if not math.isfinite(self.u0):
            raise UsageError("--u0 must be finite")
        if self.steps is None:
            self.steps = math.ceil(jacobi.STEPS_PER_UNIT_TIME * self.T)
        if self.steps < 1:
            raise UsageError("--steps must be a positive integer")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.seed < 0:
            raise UsageError("--seed must be non-negative")
        if self.method not in METHODS:
            raise UsageError(f"--method must be one of {METHODS}")
        if self.format not in ("json", "csv"):
            raise UsageError("--format must be json or csv")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        return cls(args.n, args.u0, args.T, args.steps, args.tol, args.seed, args.method, args.format)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _dump_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def parse_direction(text: Optional[str], n: int) -> Optional[np.ndarray]:
    """Horizontal direction at z0 = e_1: an index into the real basis of H, or 2n real components."""
    if text is None:
        return None
    parts = [s for s in text.replace(" ", "").split(",") if s]
    try:
        values = [float(s) for s in parts]
    except ValueError:
        raise UsageError(f"malformed direction {text!r}") from None
    if len(values) == 1 and "," not in text and parts[0].lstrip("-").isdigit():
        k = int(values[0])
        if not 0 <= k < 2 * n:
            raise UsageError(f"direction index must lie in [0, {2 * n})")
        values = [0.0] * (2 * n)
        values[k] = 1.0
    if len(values) != 2 * n or not all(math.isfinite(v) for v in values):
        raise UsageError(f"direction needs {2 * n} finite components, got {len(values)}")
    v = np.zeros(n + 1, complex)
    v[1:] = np.array(values[0::2]) + 1j * np.array(values[1::2])
    if np.linalg.norm(v) < 1e-12:
        raise UsageError("direction must be non-zero")
    return v


def initial_covector(config: RunConfig, direction: Optional[np.ndarray]) -> flow.PhasePoint:
    if direction is None:
        return flow.random_phase_point(np.random.default_rng(config.seed), config.n, config.u0)
    z0 = np.zeros(config.n + 1, complex)
    z0[0] = 1.0
    return flow.phase_point(z0, direction, config.u0)


# ---------------------------------------------------------------------------
# curvature audit
# ---------------------------------------------------------------------------


def curvature_audit(
    config: RunConfig,
    samples: int = 100_000,
    riemann: Callable = geometry.riemann4_array,
    diagnostic_samples: int = 100,
) -> dict:
    rng = np.random.default_rng(config.seed)
    n = config.n
    z = geometry.random_sphere(rng, n, samples)
    X = geometry.random_horizontal(rng, z, unit=False)
    Y = geometry.random_horizontal(rng, z, unit=False)
    area2 = geometry.re_inner(X, X) * geometry.re_inner(Y, Y) - geometry.re_inner(X, Y) ** 2
    sec = riemann(X, Y, X, Y) / area2
    violations = int(np.sum((sec < 1 - 1e-9) | (sec > 4 + 1e-9)))

    m = min(samples, 1000)
    Zs = geometry.random_horizontal(rng, z[:m], unit=False)
    Ws = geometry.random_horizontal(rng, z[:m], unit=False)
    Xs, Ys = X[:m], Y[:m]
    r = riemann(Xs, Ys, Zs, Ws)
    residuals = {
        "antisymmetry_xy": float(np.max(np.abs(r + riemann(Ys, Xs, Zs, Ws)))),
        "antisymmetry_zw": float(np.max(np.abs(r + riemann(Xs, Ys, Ws, Zs)))),
        "pair_symmetry": float(np.max(np.abs(r - riemann(Zs, Ws, Xs, Ys)))),
        "bianchi": float(np.max(np.abs(r + riemann(Ys, Zs, Xs, Ws) + riemann(Zs, Xs, Ys, Ws)))),
    }

    ratios = []
    skipped = 0
    for k in range(diagnostic_samples):
        base = geometry.SpherePoint(z[k])
        hx = geometry.HorizontalVector(base, geometry.project_horizontal(base.z, X[k]))
        hy = geometry.HorizontalVector(base, geometry.project_horizontal(base.z, Y[k]))
        ratio = geometry.curvature_form_ratio(base, hx, hy)
        if ratio is None:
            skipped += 1
        else:
            ratios.append(ratio)
    ratios = np.array(ratios)
    return {
        "n": n,
        "seed": config.seed,
        "samples": samples,
        "sectional_min": float(sec.min()),
        "sectional_max": float(sec.max()),
        "violations": violations,
        "symmetry_residuals": residuals,
        "curvature_form_ratio": {
            "mean": float(ratios.mean()) if ratios.size else None,
            "spread": float(ratios.max() - ratios.min()) if ratios.size else None,
            "samples": int(ratios.size),
            "skipped": skipped,
        },
    }


def _bad_tensor(X, Y, Z, W):
    # negative control: flips the sign of the holomorphic term
    g = geometry.re_inner
    return g(X, Z) * g(Y, W) - g(Y, Z) * g(X, W) - 3.0 * g(1j * X, Y) * g(1j * Z, W)


def cmd_curvature_audit(args) -> int:
    config = RunConfig.from_args(args)
    riemann = _bad_tensor if args.inject_bad_tensor else geometry.riemann4_array
    report = curvature_audit(config, args.samples, riemann)
    if config.format == "json":
        text = _dump_json(report)
    else:
        flat = {k: v for k, v in report.items() if not isinstance(v, dict)}
        flat.update({f"residual_{k}": v for k, v in report["symmetry_residuals"].items()})
        flat.update({f"ratio_{k}": v for k, v in report["curvature_form_ratio"].items()})
        text = _dump_csv(list(flat), [list(flat.values())])
    _emit(text, args.out)
    return 0 if report["violations"] == 0 else 1


# ---------------------------------------------------------------------------
# geodesic
# ---------------------------------------------------------------------------


def geodesic_table(config: RunConfig, lam: flow.PhasePoint, stride: int = 1) -> tuple[list[str], list[list[float]]]:
    arc = flow.integrate_extremal(lam, config.T, config.steps)
    idx = np.arange(0, len(arc.times), stride)
    if idx[-1] != len(arc.times) - 1:
        idx = np.append(idx, len(arc.times) - 1)
    zc, pc = flow.closed_form_arrays(lam, arc.times[idx])
    dev = np.maximum(np.max(np.abs(arc.z[idx] - zc), axis=1), np.max(np.abs(arc.p[idx] - pc), axis=1))
    h = arc.hamiltonian()[idx]
    u0 = geometry.CURVATURE_FORM_SCALE * arc.vertical_momentum()[idx]
    d = config.n + 1
    header = ["t"]
    header += [f"re_z{k}" for k in range(d)] + [f"im_z{k}" for k in range(d)]
    header += [f"re_p{k}" for k in range(d)] + [f"im_p{k}" for k in range(d)]
    header += ["h", "u0", "closed_form_dev"]
    cols = [arc.times[idx][:, None], arc.z[idx].real, arc.z[idx].imag, arc.p[idx].real, arc.p[idx].imag]
    cols += [h[:, None], u0[:, None], dev[:, None]]
    return header, np.hstack(cols).tolist()


def cmd_geodesic(args) -> int:
    config = RunConfig.from_args(args)
    lam = initial_covector(config, parse_direction(args.direction, config.n))
    try:
        header, rows = geodesic_table(config, lam, args.stride)
    except flow.IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return 1
    if config.format == "json":
        text = _dump_json({"config": asdict(config), "columns": header, "rows": rows})
    else:
        text = _dump_csv(header, rows)
    _emit(text, args.out)
    return 0


# ---------------------------------------------------------------------------
# conjugate
# ---------------------------------------------------------------------------


def conjugate_reports(config: RunConfig, lam: flow.PhasePoint) -> dict[str, jacobi.ConjugateReport]:
    reports = {}
    if config.method in ("structural", "all"):
        reports["structural"] = jacobi.conjugate_times_structural(lam, config.T, config.steps, config.tol)
    if config.method in ("variational", "all"):
        reports["variational"] = jacobi.conjugate_times_variational(lam, config.T, config.steps, config.tol)
    if config.method in ("closed", "all"):
        u0 = flow.charge(lam)
        reports["closed_form"] = jacobi.closed_form_conjugate_times(
            4 + u0**2, 1 + u0**2 / 4, 2 * config.n - 2, config.T
        )
    return reports


def agreement(reports: dict[str, jacobi.ConjugateReport], tol: float = AGREEMENT_TOL) -> dict:
    names = sorted(reports)
    pairs = {}
    ok = True
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            ra, rb = reports[a], reports[b]
            same_len = len(ra.entries) == len(rb.entries)
            gap = max((abs(s - t) for s, t in zip(ra.times, rb.times)), default=0.0) if same_len else None
            mism = sum(x != y for x, y in zip(ra.multiplicities, rb.multiplicities)) if same_len else None
            good = same_len and gap <= tol and mism == 0
            pairs[f"{a}~{b}"] = {"max_time_gap": gap, "multiplicity_mismatches": mism, "agree": good}
            ok = ok and good
    return {"pairs": pairs, "tolerance": tol, "agree": ok}


def cmd_conjugate(args) -> int:
    config = RunConfig.from_args(args)
    lam = initial_covector(config, parse_direction(args.direction, config.n))
    try:
        reports = conjugate_reports(config, lam)
    except jacobi.RefinementError as exc:
        print(f"{exc}", file=sys.stderr)
        return 1
    except flow.IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return 1
    agree = agreement(reports) if len(reports) > 1 else {"pairs": {}, "tolerance": AGREEMENT_TOL, "agree": True}
    if config.format == "json":
        text = _dump_json(
            {"config": asdict(config), "reports": {k: r.to_dict() for k, r in reports.items()}, "agreement": agree}
        )
    else:
        rows = [[k, t, m] for k, r in reports.items() for t, m in r.entries]
        text = _dump_csv(["method", "time", "multiplicity"], rows)
    _emit(text, args.out)
    return 0 if agree["agree"] else 1


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def _parse_grid(text: str, name: str) -> list[float]:
    try:
        values = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"malformed {name} grid {text!r}") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise UsageError(f"{name} grid must hold finite numbers")
    return values


def bounds_table(config: RunConfig, u0_grid: Sequence[float], T_grid: Sequence[float], direction=None) -> list[dict]:
    if any(T <= 0 for T in T_grid):
        raise UsageError("T grid values must be positive")
    T_max = max(T_grid)
    rows = []
    for u0 in u0_grid:
        cell = RunConfig(config.n, u0, T_max, None, config.tol, config.seed, config.method, config.format)
        lam = initial_covector(cell, direction)
        if config.method == "structural":
            full = jacobi.conjugate_times_structural(lam, T_max, tol_rank=config.tol)
        elif config.method == "closed":
            full = jacobi.closed_form_conjugate_times(4 + u0**2, 1 + u0**2 / 4, 2 * config.n - 2, T_max)
            full = jacobi.ConjugateReport(full.entries, full.method, T_max, full.tolerances, u0)
        else:
            full = jacobi.conjugate_times_variational(lam, T_max, tol_rank=config.tol)
        cor = comparison.corollary_intervals(u0, config.n)
        for T in T_grid:
            rep = full.truncated(T)
            b = comparison.bounds_check(rep, u0, config.n, T)
            first = rep.times[0] if rep.entries else None
            rows.append(
                {
                    "u0": u0,
                    "T": T,
                    "dc": b.d_c,
                    "z_lower": b.z_lower,
                    "predicted": b.predicted,
                    "measured": b.measured,
                    "z_upper": b.z_upper,
                    "pass": b.passed,
                    "method": full.method,
                    "conjugate_free_radius": cor.conjugate_free,
                    "first_time": first,
                    "conjugate_free_respected": cor.check(rep)["conjugate_free"],
                }
            )
    return rows


def cmd_bounds(args) -> int:
    config = RunConfig.from_args(args)
    u0_grid = _parse_grid(args.u0_grid, "u0") if args.u0_grid else [config.u0]
    T_grid = _parse_grid(args.T_grid, "T") if args.T_grid else [config.T]
    direction = parse_direction(args.direction, config.n)
    try:
        rows = bounds_table(config, u0_grid, T_grid, direction)
    except (jacobi.RefinementError, flow.IntegrationError) as exc:
        print(f"{exc}", file=sys.stderr)
        return 1
    if config.format == "json":
        text = _dump_json({"config": asdict(config), "rows": rows})
    else:
        text = _dump_csv(BOUNDS_HEADER, [[r[k] for k in BOUNDS_HEADER] for r in rows])
    _emit(text, args.out)
    return 0 if all(r["pass"] for r in rows) else 1


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------


def cmd_selftest(args) -> int:
    selected = acceptance.CRITERIA
    if args.only:
        keys = [k.strip().upper() for k in args.only.split(",") if k.strip()]
        unknown = [k for k in keys if k not in acceptance.CRITERIA]
        if unknown:
            raise UsageError(f"unknown criteria {unknown}")
        selected = {k: acceptance.CRITERIA[k] for k in keys}
    results = acceptance.run_all(selected)
    if args.format == "json":
        text = _dump_json(
            {"passed": all(r.passed for r in results), "criteria": [r.to_dict() for r in results]}
        )
    else:
        text = "".join(r.line() + "\n" for r in results)
    _emit(text, args.out)
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, T_default: float = 1.0) -> None:
    p.add_argument("--n", type=int, default=2, help="fibration index (sphere S^{2n+1})")
    p.add_argument("--u0", type=float, default=0.0, help="vertical momentum (charge) of the extremal")
    p.add_argument("--T", type=float, default=T_default, help="time horizon")
    p.add_argument("--steps", type=int, default=None, help="integration steps (default ceil(4000 T))")
    p.add_argument("--tol", type=float, default=1e-6, help="relative rank tolerance for conjugate detection")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=METHODS, default="all")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hopf-sr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curvature-audit", help="sample Fubini-Study sectional curvatures")
    _common(p)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--inject-bad-tensor", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_curvature_audit)

    direction_help = "horizontal direction at z0=e1: index in [0, 2n) or 2n comma-separated reals (default: random from --seed)"
    p = sub.add_parser("geodesic", help="integrate a normal extremal")
    _common(p, T_default=2 * math.pi)
    p.add_argument("--direction", default=None, help=direction_help)
    p.add_argument("--stride", type=int, default=1, help="emit every k-th grid node")
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("conjugate", help="conjugate times along an extremal")
    _common(p, T_default=7.0)
    p.add_argument("--direction", default=None, help=direction_help)
    p.set_defaults(func=cmd_conjugate)

    p = sub.add_parser("bounds", help="comparison bounds over a (u0, T) grid")
    _common(p, T_default=7.0)
    p.add_argument("--u0-grid", default=None, help="comma-separated u0 values")
    p.add_argument("--T-grid", default=None, help="comma-separated horizons")
    p.add_argument("--direction", default=None, help=direction_help)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("selftest", help="run the acceptance criteria")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("--only", default=None, help="comma-separated criterion keys, e.g. C1,C9")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "stride", 1) < 1:
        parser.error("--stride must be positive")
    if getattr(args, "samples", 1) < 1:
        parser.error("--samples must be positive")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
