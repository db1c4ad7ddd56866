"""Conjugate point counting function and the comparison bounds along Hopf extremals."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

from scipy.optimize import bisect

TIE_TOL = 1e-12
BRACKET_PAD = 1e-9
UO_MATCH_TOL = 1e-6


@lru_cache(maxsize=None)
def tan_root(k: int) -> float:
    """The root of tan(y) = y in (k pi, k pi + pi/2), k >= 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    lo = k * math.pi + BRACKET_PAD
    hi = k * math.pi + math.pi / 2 - BRACKET_PAD
    return bisect(lambda y: math.tan(y) - y, lo, hi, xtol=1e-12, maxiter=200)


def tan_equation_times(omega_b: float, T: float) -> list[float]:
    """Solutions x in (0, T] of tan(sqrt(omega_b) x / 2) = sqrt(omega_b) x / 2."""
    half = math.sqrt(omega_b) / 2
    out = []
    k = 1
    while k * math.pi / half <= T + TIE_TOL:
        x = tan_root(k) / half
        if x > T + TIE_TOL:
            break
        out.append(x)
        k += 1
    return out


def count_tan_roots(omega_b: float, T: float) -> int:
    if omega_b <= 0 or T <= 0:
        return 0
    return len(tan_equation_times(omega_b, T))


def _floor(x: float) -> int:
    # closed right endpoint: a value within TIE_TOL below an integer counts as that integer
    return math.floor(x + TIE_TOL)


def z_function(omega_b: float, omega_c: float, d_c: int, T: float) -> int:
    """Conjugate point count predicted by constant curvature data (omega_b, omega_c) on (0, T]."""
    if T <= 0:
        return 0
    return (
        d_c * _floor(T * math.sqrt(omega_c) / math.pi)
        + _floor(T * math.sqrt(omega_b) / (2 * math.pi))
        + count_tan_roots(omega_b, T)
    )


def c_dimension(n: int) -> int:
    if n < 1:
        raise ValueError("fibration index must be >= 1")
    return 2 * n - 2


@dataclass(frozen=True)
class BoundsReport:
    u0: float
    T: float
    d_c: int
    z_lower: int
    z_upper: int
    predicted: int
    measured: int
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def bounds_check(measured, u0: float, n: int, T: float) -> BoundsReport:
    """Check a measured conjugate report against the comparison bounds.

    ``measured`` is a :class:`~hopf_sr.jacobi.ConjugateReport`; if it carries
    a charge it must agree with ``u0``.
    """
    from .jacobi import closed_form_conjugate_times

    report_u0 = getattr(measured, "u0", None)
    if report_u0 is not None and abs(report_u0 - u0) > UO_MATCH_TOL:
        raise ValueError(f"report was measured at u0 = {report_u0}, not {u0}")
    d_c = c_dimension(n)
    lower = z_function(1 + u0**2, 1 + u0**2 / 4, d_c, T)
    upper = z_function(4 + u0**2, 4 + u0**2 / 4, d_c, T)
    predicted = closed_form_conjugate_times(4 + u0**2, 1 + u0**2 / 4, d_c, T).total
    count = measured.count_upto(T)
    return BoundsReport(u0, T, d_c, lower, upper, predicted, count, lower <= count <= upper)


@dataclass(frozen=True)
class CorollaryIntervals:
    u0: float
    d_c: int
    conjugate_free: float
    first_guarantee: float
    second_guarantee: float

    def check(self, report) -> dict[str, bool]:
        """Verify the three statements against a measured conjugate report."""
        strictly_inside = [t for t, _ in report.entries if t < self.conjugate_free - 1e-9]
        return {
            "conjugate_free": not strictly_inside,
            "first_guarantee": report.count_upto(self.first_guarantee + 1e-6) >= self.d_c,
            "second_guarantee": report.count_upto(self.second_guarantee + 1e-6) >= self.d_c + 1,
        }

    def to_dict(self) -> dict:
        return asdict(self)


def corollary_intervals(u0: float, n: int) -> CorollaryIntervals:
    """Conjugate-free radius and the two guaranteed-count radii."""
    return CorollaryIntervals(
        u0=u0,
        d_c=c_dimension(n),
        conjugate_free=math.pi / math.sqrt(4 + u0**2 / 4),
        first_guarantee=2 * math.pi / math.sqrt(4 + u0**2),
        second_guarantee=2 * math.pi / math.sqrt(1 + u0**2),
    )
