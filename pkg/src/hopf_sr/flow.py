"""Normal extremals of the Hopf sub-Riemannian structure in ambient coordinates.

A covector at ``z`` is represented by an ambient momentum ``p`` defined up to
the gauge shift ``p -> p + s z``; the representative with ``Re<p, z> = 0`` is
used throughout. The gauge-fixed Hamiltonian system is

    z' = p - u0 iz,
    p' = -u0 ip - (2h + u0^2) z,

with ``u0 = Re<p, iz>`` and ``h = |p_H|^2 / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import (
    CURVATURE_FORM_SCALE,
    SpherePoint,
    as_complex,
    project_horizontal,
    random_horizontal,
    random_sphere,
    re_inner,
)

GAUGE_TOL = 1e-10
MAX_DEFAULT_STEP = 1e-3


class IntegrationError(RuntimeError):
    """Raised when the state stops being finite during integration."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t = {time:.6g}")
        self.time = time


@dataclass(frozen=True, eq=False)
class PhasePoint:
    z: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        z = as_complex(self.z)
        p = as_complex(self.p)
        if z.ndim != 1 or z.shape != p.shape:
            raise ValueError("z and p must be 1-d arrays of the same length")
        norm = np.linalg.norm(z)
        if not np.isfinite(norm) or norm == 0.0:
            raise ValueError("base point must be a finite non-zero vector")
        object.__setattr__(self, "z", z / norm)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.z.size - 1

    @property
    def base(self) -> SpherePoint:
        return SpherePoint(self.z)

    @property
    def gauge(self) -> float:
        return float(re_inner(self.p, self.z))

    def horizontal_momentum(self) -> np.ndarray:
        return project_horizontal(self.z, self.p)


def hamiltonian_array(z, p):
    iz = 1j * z
    return 0.5 * (re_inner(p, p) - re_inner(p, z) ** 2 - re_inner(p, iz) ** 2)


def vertical_momentum_array(z, p):
    return re_inner(p, 1j * z)


def hamiltonian(lam: PhasePoint) -> float:
    """Half the squared norm of the horizontal part of the momentum."""
    return float(hamiltonian_array(lam.z, lam.p))


def vertical_momentum(lam: PhasePoint) -> float:
    """Raw pairing of the momentum with the unit vertical field ``iz``."""
    return float(vertical_momentum_array(lam.z, lam.p))


def charge(lam: PhasePoint) -> float:
    """Vertical momentum measured against the Hopf curvature form.

    This is the parameter that enters the curvature maps and the conjugate
    point counting bounds; it equals ``CURVATURE_FORM_SCALE`` times
    :func:`vertical_momentum`.
    """
    return CURVATURE_FORM_SCALE * vertical_momentum(lam)


def normalize_gauge(lam: PhasePoint) -> PhasePoint:
    return PhasePoint(lam.z, lam.p - re_inner(lam.p, lam.z) * lam.z)


def phase_point(z, direction, u0: float = 0.0) -> PhasePoint:
    """Covector on the level set h = 1/2 with horizontal direction ``direction`` and charge ``u0``.

    ``direction`` is projected to the horizontal space at ``z`` and normalized.
    """
    z = SpherePoint(z).z
    ph = project_horizontal(z, as_complex(direction))
    norm = np.linalg.norm(ph)
    if not np.isfinite(norm) or norm < 1e-9:
        raise ValueError("direction has no horizontal component at z")
    ph = ph / norm
    return PhasePoint(z, ph + (u0 / CURVATURE_FORM_SCALE) * 1j * z)


def random_phase_point(rng: np.random.Generator, n: int, u0: float = 0.0) -> PhasePoint:
    z = random_sphere(rng, n)
    return phase_point(z, random_horizontal(rng, z), u0)


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def flow_rhs(z, p):
    """Gauge-fixed extremal vector field; broadcasts over leading axes."""
    iz = 1j * z
    u0 = re_inner(p, iz)[..., None]
    mult = (re_inner(p, p) - re_inner(p, z) ** 2)[..., None]  # 2h + u0^2
    return p - u0 * iz, -u0 * 1j * p - mult * z


def _rk4_step(z, p, dt):
    k1z, k1p = flow_rhs(z, p)
    k2z, k2p = flow_rhs(z + 0.5 * dt * k1z, p + 0.5 * dt * k1p)
    k3z, k3p = flow_rhs(z + 0.5 * dt * k2z, p + 0.5 * dt * k2p)
    k4z, k4p = flow_rhs(z + dt * k3z, p + dt * k3p)
    z = z + dt / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z)
    p = p + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
    return z, p


def _renormalize(z, p):
    z = z / np.linalg.norm(z, axis=-1, keepdims=True)
    p = p - re_inner(p, z)[..., None] * z
    return z, p


def default_steps(T: float, max_step: float = MAX_DEFAULT_STEP) -> int:
    return max(1, math.ceil(T / max_step - 1e-9))


@dataclass(frozen=True, eq=False)
class GeodesicArc:
    initial: PhasePoint
    times: np.ndarray
    z: np.ndarray
    p: np.ndarray
    step: float
    method: str = "rk4"

    @property
    def states(self) -> list[PhasePoint]:
        return [PhasePoint(z, p) for z, p in zip(self.z, self.p)]

    def hamiltonian(self) -> np.ndarray:
        return hamiltonian_array(self.z, self.p)

    def vertical_momentum(self) -> np.ndarray:
        return vertical_momentum_array(self.z, self.p)

    def gauge(self) -> np.ndarray:
        return re_inner(self.p, self.z)

    def radius(self) -> np.ndarray:
        return np.linalg.norm(self.z, axis=-1)


def integrate_extremal(lam0: PhasePoint, T: float, steps: Optional[int] = None) -> GeodesicArc:
    """Classical RK4 on the gauge-fixed system, renormalizing |z| and the gauge after each step."""
    if not T > 0:
        raise ValueError("T must be positive")
    if steps is None:
        steps = default_steps(T)
    if steps < 1:
        raise ValueError("steps must be a positive integer")
    dt = T / steps
    zs = np.empty((steps + 1, lam0.z.size), dtype=complex)
    ps = np.empty_like(zs)
    z, p = _renormalize(lam0.z, lam0.p)
    zs[0], ps[0] = z, p
    for k in range(steps):
        z, p = _renormalize(*_rk4_step(z, p, dt))
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(p))):
            raise IntegrationError("non-finite extremal state", (k + 1) * dt)
        zs[k + 1], ps[k + 1] = z, p
    times = np.linspace(0.0, T, steps + 1)
    return GeodesicArc(lam0, times, zs, ps, dt)


def closed_form_arrays(lam0: PhasePoint, t) -> tuple[np.ndarray, np.ndarray]:
    """Exact solution of the gauge-fixed system at the times ``t`` (any shape)."""
    t = np.asarray(t, dtype=float)[..., None]
    z0, p0 = lam0.z, lam0.p
    u0 = vertical_momentum(lam0)
    omega = math.sqrt(max(2.0 * hamiltonian(lam0) + u0 * u0, 0.0))
    phase = np.exp(-1j * u0 * t)
    if omega == 0.0:
        return np.broadcast_to(z0, t.shape[:-1] + z0.shape).copy(), np.zeros(t.shape[:-1] + z0.shape, complex)
    c, s = np.cos(omega * t), np.sin(omega * t)
    z = phase * (c * z0 + (s / omega) * p0)
    p = phase * (-omega * s * z0 + c * p0)
    return z, p


def closed_form_geodesic(lam0: PhasePoint, t: float) -> PhasePoint:
    z, p = closed_form_arrays(lam0, t)
    return PhasePoint(z, p)
