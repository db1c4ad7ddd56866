"""Acceptance criteria, runnable from pytest or ``hopf-sr selftest``.

Every criterion returns a :class:`CriterionResult`; tolerances are fixed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import comparison, flow, geometry, jacobi

GRID_U0 = (0.0, 0.5, 1.0, 2.0)
GRID_N = (1, 2, 3)
GRID_T = 7.0
TIME_TOL = 1e-4


@dataclass
class CriterionResult:
    key: str
    title: str
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.key} {self.title}"

    def to_dict(self) -> dict:
        return {"criterion": self.key, "title": self.title, "passed": self.passed, "details": self.details}


def grid_phase_point(n: int, u0: float) -> flow.PhasePoint:
    """Seeded random covector on h = 1/2 with charge ``u0``; one per grid cell."""
    rng = np.random.default_rng(1000 * n + int(round(100 * u0)))
    return flow.random_phase_point(rng, n, u0)


@lru_cache(maxsize=None)
def grid_reports(n: int, u0: float, T: float = GRID_T):
    lam = grid_phase_point(n, u0)
    return (
        jacobi.conjugate_times_structural(lam, T),
        jacobi.conjugate_times_variational(lam, T),
        jacobi.closed_form_conjugate_times(4 + u0**2, 1 + u0**2 / 4, 2 * n - 2, T),
    )


def _reports_agree(a, b, tol: float = TIME_TOL) -> bool:
    if a.multiplicities != b.multiplicities:
        return False
    return all(abs(s - t) <= tol for s, t in zip(a.times, b.times))


def _max_time_gap(a, b) -> float:
    if len(a.entries) != len(b.entries):
        return math.inf
    return max((abs(s - t) for s, t in zip(a.times, b.times)), default=0.0)


# ---------------------------------------------------------------------------


def criterion_curvature_bounds(samples: int = 100_000) -> CriterionResult:
    details = {}
    ok = True
    for n in (1, 2, 3, 4):
        rng = np.random.default_rng(n)
        z = geometry.random_sphere(rng, n, samples)
        X = geometry.random_horizontal(rng, z, unit=False)
        Y = geometry.random_horizontal(rng, z, unit=False)
        sec = geometry.sectional_curvature_array(X, Y)
        Xu = X / np.linalg.norm(X, axis=-1, keepdims=True)
        holo = geometry.sectional_curvature_array(Xu, 1j * Xu)
        cell = {"min": float(sec.min()), "max": float(sec.max()), "holomorphic_err": float(np.max(np.abs(holo - 4)))}
        good = sec.min() >= 1 - 1e-9 and sec.max() <= 4 + 1e-9 and cell["holomorphic_err"] <= 1e-12
        if n >= 2:
            # Y orthogonal to X and JX spans a totally real plane with X
            Yr = Y - geometry.re_inner(Y, Xu)[:, None] * Xu - geometry.re_inner(Y, 1j * Xu)[:, None] * (1j * Xu)
            real = geometry.sectional_curvature_array(Xu, Yr)
            cell["totally_real_err"] = float(np.max(np.abs(real - 1)))
            good = good and cell["totally_real_err"] <= 1e-12
        cell["passed"] = bool(good)
        details[f"n={n}"] = cell
        ok = ok and good
    return CriterionResult("C1", "sectional curvature in [1, 4], extremes attained", ok, details)


def criterion_conservation() -> CriterionResult:
    details = {}
    ok = True
    for u0 in (0.0, 1.0):
        lam = grid_phase_point(2, u0)
        arc = flow.integrate_extremal(lam, 10.0, 10_000)
        drift = {
            "h": float(np.max(np.abs(arc.hamiltonian() - arc.hamiltonian()[0]))),
            "u0": float(np.max(np.abs(arc.vertical_momentum() - arc.vertical_momentum()[0]))),
            "radius": float(np.max(np.abs(arc.radius() - 1))),
            "gauge": float(np.max(np.abs(arc.gauge()))),
        }
        good = max(drift.values()) <= 1e-8
        details[f"u0={u0}"] = {**drift, "passed": bool(good)}
        ok = ok and good
    return CriterionResult("C2", "conservation of h, u0, |z|, gauge (RK4, step 1e-3, T=10)", ok, details)


def criterion_closed_form(count: int = 20) -> CriterionResult:
    details = {}
    ok = True
    for n in (1, 2, 3):
        rng = np.random.default_rng(300 + n)
        worst = 0.0
        for _ in range(count):
            lam = flow.random_phase_point(rng, n, rng.uniform(-2, 2))
            arc = flow.integrate_extremal(lam, 10.0)
            z, p = flow.closed_form_arrays(lam, arc.times)
            worst = max(worst, float(np.max(np.abs(arc.z - z))), float(np.max(np.abs(arc.p - p))))
        details[f"n={n}"] = {"sup_gap": worst, "passed": worst <= 1e-6}
        ok = ok and worst <= 1e-6
    return CriterionResult("C3", "closed-form vs RK4 geodesics, sup gap <= 1e-6 over T=10", ok, details)


def criterion_oracle_triangle() -> CriterionResult:
    details = {}
    ok = True
    for n in GRID_N:
        for u0 in GRID_U0:
            s, v, c = grid_reports(n, u0)
            good = _reports_agree(s, v) and _reports_agree(s, c) and _reports_agree(v, c)
            details[f"n={n},u0={u0}"] = {
                "structural": s.entries,
                "variational": v.entries,
                "closed_form": c.entries,
                "gap_sv": _max_time_gap(s, v),
                "gap_vc": _max_time_gap(v, c),
                "passed": good,
            }
            ok = ok and good
    return CriterionResult("C4", "structural / variational / closed-form agreement (1e-4, multiplicities)", ok, details)


def criterion_first_conjugate_time() -> CriterionResult:
    details = {}
    ok = True
    for n in GRID_N:
        for u0 in GRID_U0:
            expected = 2 * math.pi / math.sqrt(4 + u0**2)
            mult = 2 * n - 1
            cell = {}
            good = True
            for rep in grid_reports(n, u0):
                first = rep.entries[0] if rep.entries else (math.nan, 0)
                hit = abs(first[0] - expected) <= TIME_TOL and first[1] == mult
                radius = math.pi / math.sqrt(4 + u0**2 / 4)
                early = any(t < radius - TIME_TOL for t in rep.times)
                cell[rep.method] = {"first": first, "passed": hit and not early}
                good = good and hit and not early
            cell["expected"] = (expected, mult)
            details[f"n={n},u0={u0}"] = cell
            ok = ok and good
    return CriterionResult("C5", "first conjugate time 2pi/sqrt(4+u0^2), multiplicity 2n-1", ok, details)


def criterion_comparison_bounds() -> CriterionResult:
    details = {}
    ok = True
    for n in GRID_N:
        for u0 in GRID_U0:
            _, v, _ = grid_reports(n, u0)
            b = comparison.bounds_check(v, u0, n, GRID_T)
            pattern = comparison.z_function(4 + u0**2, 1 + u0**2 / 4, 2 * n - 2, GRID_T)
            good = b.passed and b.measured == pattern
            details[f"n={n},u0={u0}"] = {**b.to_dict(), "pattern": pattern, "passed": good}
            ok = ok and good
    return CriterionResult("C6", "comparison bounds contain the measured count, which equals the Z pattern", ok, details)


def criterion_curvature_constants() -> CriterionResult:
    details = {}
    ok = True
    for n in GRID_N:
        for u0 in GRID_U0:
            lam = grid_phase_point(n, u0)
            arc = flow.integrate_extremal(lam, 10.0)
            r0 = jacobi.curvature_maps(lam)
            d_c = 2 * n - 2
            err = {
                "bb": abs(r0.r_bb - (4 + u0**2)),
                "bc": float(np.linalg.norm(r0.r_bc)) if d_c else 0.0,
                "cc": float(np.linalg.norm(r0.r_cc - (1 + u0**2 / 4) * np.eye(d_c))) if d_c else 0.0,
            }
            exact_zero = r0.r_aa == 0 and not np.any(r0.r_ac)
            drift = 0.0
            for k in range(0, len(arc.times), 1000):
                rt = jacobi.curvature_maps(flow.PhasePoint(arc.z[k], arc.p[k]))
                drift = max(drift, abs(rt.r_bb - r0.r_bb))
                if d_c:
                    drift = max(drift, float(np.max(np.abs(rt.r_cc - r0.r_cc))), float(np.max(np.abs(rt.r_bc))))
            good = max(err.values()) <= 1e-9 and exact_zero and drift <= 1e-9
            details[f"n={n},u0={u0}"] = {**err, "t_drift": drift, "aa_ac_zero": bool(exact_zero), "passed": bool(good)}
            ok = ok and good
    return CriterionResult("C7", "curvature maps equal (4+u0^2, 0, (1+u0^2/4) I, 0, 0) and are t-invariant", ok, details)


def _tangent_variations(lam: flow.PhasePoint, rng: np.random.Generator, count: int):
    """Random variations preserving |z| = 1 and the gauge to first order."""
    z, p = lam.z, lam.p
    dz = rng.standard_normal((count, z.size)) + 1j * rng.standard_normal((count, z.size))
    dz = dz - geometry.re_inner(dz, z)[:, None] * z
    dp = rng.standard_normal((count, z.size)) + 1j * rng.standard_normal((count, z.size))
    # Re<dp, z> + Re<p, dz> = 0
    dp = dp - (geometry.re_inner(dp, z) + geometry.re_inner(dz, p))[:, None] * z
    return dz, dp


def criterion_symplectic_integrity(T: float = 10.0) -> CriterionResult:
    steps = math.ceil(jacobi.STEPS_PER_UNIT_TIME * T)
    details = {}
    ok = True
    for n in (1, 3):
        lam = grid_phase_point(n, 1.0)
        traj = jacobi.structural_ode_integrate(jacobi.curvature_maps(lam), T, steps)
        s_drift = traj.pairing_drift()
        dz0, dp0 = jacobi.initial_variations(lam)
        rz, rp = _tangent_variations(lam, np.random.default_rng(n), 4)
        vf = jacobi.linearized_flow(lam, np.vstack([dz0, rz]), np.vstack([dp0, rp]), T, steps)
        v_drift = vf.pairing_drift()
        good = s_drift <= 1e-8 and v_drift <= 1e-8
        details[f"n={n}"] = {"darboux_drift": s_drift, "variational_drift": v_drift, "passed": good}
        ok = ok and good
    return CriterionResult("C8", "Darboux and variational sigma-pairing drift <= 1e-8 over T=10", ok, details)


def sign_scan_tan_roots(omega_b: float, T: float, spacing: float = 1e-5) -> int:
    """Dense sign-change count of tan(y) - y on (0, sqrt(omega_b) T / 2], skipping pole cells."""
    Y = math.sqrt(omega_b) * T / 2
    N = max(2, math.ceil(Y / spacing))
    y = np.linspace(1e-6, Y, N)
    f = np.tan(y) - y
    flips = np.signbit(f[:-1]) != np.signbit(f[1:])
    # cells containing a pole (k + 1/2) pi flip sign without a root
    pole = np.floor(y[:-1] / math.pi - 0.5) != np.floor(y[1:] / math.pi - 0.5)
    return int(np.sum(flips & ~pole))


def criterion_tan_roots(count: int = 100) -> CriterionResult:
    rng = np.random.default_rng(9)
    mismatches = []
    for _ in range(count):
        omega_b = float(rng.uniform(0.5, 10.0))
        T = float(rng.uniform(0.1, 20.0))
        a, b = comparison.count_tan_roots(omega_b, T), sign_scan_tan_roots(omega_b, T)
        if a != b:
            mismatches.append((omega_b, T, a, b))
    y1 = comparison.tan_root(1)
    ok = not mismatches and abs(y1 - 4.4934) <= 1e-3
    return CriterionResult(
        "C9", "tan-root counter vs sign-scan oracle; y1 = 4.4934", ok, {"mismatches": mismatches, "y1": y1}
    )


CRITERIA: dict[str, Callable[[], CriterionResult]] = {
    "C1": criterion_curvature_bounds,
    "C2": criterion_conservation,
    "C3": criterion_closed_form,
    "C4": criterion_oracle_triangle,
    "C5": criterion_first_conjugate_time,
    "C6": criterion_comparison_bounds,
    "C7": criterion_curvature_constants,
    "C8": criterion_symplectic_integrity,
    "C9": criterion_tan_roots,
}


def run_all(criteria: dict[str, Callable[[], CriterionResult]] | None = None) -> list[CriterionResult]:
    results = []
    for key, fn in (criteria or CRITERIA).items():
        try:
            results.append(fn())
        except Exception as exc:  # a crash is a named failure, not an aborted suite
            results.append(CriterionResult(key, fn.__name__, False, {"error": f"{type(exc).__name__}: {exc}"}))
    return results
