"""Ambient model of S^{2n+1} in C^{n+1}, its Hopf splitting and the Fubini-Study curvature.

Vectors are complex numpy arrays of shape ``(..., n + 1)``. The real inner
product on C^{n+1} = R^{2n+2} is ``Re<a, b>``; the complex structure on
horizontal lifts is multiplication by ``i``. All base-manifold quantities on
CP^n are evaluated on horizontal lifts at sphere points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

SPHERE_TOL = 1e-12
HORIZONTAL_TOL = 1e-12
DEGENERATE_AREA = 1e-14

# Ratio dw(X, Y) / g(JX, Y) between the Hopf curvature form and the Kaehler
# form of J = i. ``curvature_form_ratio`` measures it; tests pin it.
CURVATURE_FORM_SCALE = 2.0


# ---------------------------------------------------------------------------
# array-level primitives (broadcast over leading axes)
# ---------------------------------------------------------------------------


def as_complex(v) -> np.ndarray:
    return np.asarray(v, dtype=complex)


def to_real(v) -> np.ndarray:
    """Interleaved real coordinates (x_1, y_1, ..., x_{n+1}, y_{n+1})."""
    v = as_complex(v)
    out = np.empty(v.shape[:-1] + (2 * v.shape[-1],))
    out[..., 0::2] = v.real
    out[..., 1::2] = v.imag
    return out


def from_real(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] % 2:
        raise ValueError(f"need an even number of real components, got {x.shape[-1]}")
    return x[..., 0::2] + 1j * x[..., 1::2]


def re_inner(a, b) -> np.ndarray:
    """Real part of the Hermitian product, i.e. the Euclidean product on R^{2n+2}."""
    return np.sum(a.real * b.real + a.imag * b.imag, axis=-1)


def project_horizontal(z, v) -> np.ndarray:
    """Remove the normal (z) and vertical (iz) components of ``v`` at ``z``."""
    z = as_complex(z)
    v = as_complex(v)
    iz = 1j * z
    return v - re_inner(v, z)[..., None] * z - re_inner(v, iz)[..., None] * iz


def riemann4_array(X, Y, Z, W) -> np.ndarray:
    g = re_inner
    JX, JY, JZ = 1j * X, 1j * Y, 1j * Z
    return (
        g(X, Z) * g(Y, W)
        - g(Y, Z) * g(X, W)
        + g(JX, Z) * g(JY, W)
        - g(JY, Z) * g(JX, W)
        + 2.0 * g(JX, Y) * g(JZ, W)
    )


def sectional_curvature_array(X, Y) -> np.ndarray:
    # Orthonormalize the plane first (two passes) so that nearly parallel
    # inputs do not lose digits to the area cancellation.
    X, Y = as_complex(X), as_complex(Y)
    Xu = X / np.linalg.norm(X, axis=-1, keepdims=True)
    Yo = Y
    for _ in range(2):
        Yo = Yo - re_inner(Yo, Xu)[..., None] * Xu
        Yo = Yo / np.linalg.norm(Yo, axis=-1, keepdims=True)
    return riemann4_array(Xu, Yo, Xu, Yo)


def random_sphere(rng: np.random.Generator, n: int, size=None) -> np.ndarray:
    shape = () if size is None else tuple(np.atleast_1d(size))
    w = rng.standard_normal(shape + (n + 1,)) + 1j * rng.standard_normal(shape + (n + 1,))
    return w / np.linalg.norm(w, axis=-1, keepdims=True)


def random_horizontal(rng: np.random.Generator, z, unit: bool = True) -> np.ndarray:
    z = as_complex(z)
    w = rng.standard_normal(z.shape) + 1j * rng.standard_normal(z.shape)
    v = project_horizontal(z, w)
    if unit:
        v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return v


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpherePoint:
    z: np.ndarray

    def __post_init__(self):
        z = as_complex(self.z)
        if z.ndim != 1 or z.size < 2:
            raise ValueError("a sphere point needs at least two complex coordinates")
        norm = np.linalg.norm(z)
        if not np.isfinite(norm) or norm == 0.0:
            raise ValueError("cannot normalize a zero or non-finite vector")
        object.__setattr__(self, "z", z / norm)

    @property
    def n(self) -> int:
        """Fibration index: the point lies on S^{2n+1}."""
        return self.z.size - 1

    def same_as(self, other: "SpherePoint", tol: float = SPHERE_TOL) -> bool:
        return self.z.shape == other.z.shape and bool(np.all(np.abs(self.z - other.z) <= tol))


@dataclass(frozen=True, eq=False)
class HorizontalVector:
    base: SpherePoint
    v: np.ndarray

    def __post_init__(self):
        v = as_complex(self.v)
        if v.shape != self.base.z.shape:
            raise ValueError("vector and base point dimensions differ")
        z = self.base.z
        scale = max(1.0, float(np.linalg.norm(v)))
        if abs(re_inner(v, z)) > HORIZONTAL_TOL * scale or abs(re_inner(v, 1j * z)) > HORIZONTAL_TOL * scale:
            raise ValueError("vector is not horizontal at its base point")
        object.__setattr__(self, "v", v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.v))


def _common_base(*vectors: HorizontalVector) -> SpherePoint:
    base = vectors[0].base
    for h in vectors[1:]:
        if not base.same_as(h.base):
            raise ValueError("horizontal vectors live at different base points")
    return base


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def vertical_field(z: SpherePoint) -> np.ndarray:
    """Unit generator ``iz`` of the circle action."""
    return 1j * z.z


def horizontal_project(z: SpherePoint, v) -> HorizontalVector:
    return HorizontalVector(z, project_horizontal(z.z, v))


def complex_structure(h: HorizontalVector) -> HorizontalVector:
    return HorizontalVector(h.base, 1j * h.v)


def fs_metric(u: HorizontalVector, v: HorizontalVector) -> float:
    """Fubini-Study product of the projections, computed on horizontal lifts."""
    _common_base(u, v)
    return float(re_inner(u.v, v.v))


def riemann4(X: HorizontalVector, Y: HorizontalVector, Z: HorizontalVector, W: HorizontalVector) -> float:
    """Curvature tensor of constant holomorphic sectional curvature 4, fully covariant."""
    _common_base(X, Y, Z, W)
    return float(riemann4_array(X.v, Y.v, Z.v, W.v))


def sectional_curvature(X: HorizontalVector, Y: HorizontalVector) -> float:
    _common_base(X, Y)
    area2 = float(re_inner(X.v, X.v) * re_inner(Y.v, Y.v) - re_inner(X.v, Y.v) ** 2)
    if area2 < DEGENERATE_AREA:
        raise ValueError(f"degenerate plane (area^2 = {area2:.3e})")
    return float(sectional_curvature_array(X.v, Y.v))


def connection_form(z: SpherePoint, v) -> float:
    """Component of ``v`` along the unit vertical field; tangency is the caller's business."""
    return float(re_inner(as_complex(v), 1j * z.z))


def _ambient_connection(w: np.ndarray, v: np.ndarray) -> float:
    # extension of the connection form to C^{n+1}; pulls back to it on the sphere
    return float(re_inner(v, 1j * w))


def constant_extension(v: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    return lambda w: v


def horizontal_extension(v: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Extend ``v`` by horizontal projection at the radial projection of each point."""

    def field(w):
        return project_horizontal(w / np.linalg.norm(w), v)

    return field


def curvature_form(
    z: SpherePoint,
    X: HorizontalVector,
    Y: HorizontalVector,
    step: float = 1e-4,
    extension: Callable[[np.ndarray], Callable] = constant_extension,
) -> float:
    """Exterior derivative of the connection form on (X, Y) by central differences.

    Uses dw(X, Y) = X w(Y) - Y w(X) - w([X, Y]) for the extended fields, with
    directional derivatives and the bracket taken by central differences.
    """
    _common_base(X, Y)
    z0 = z.z
    fx, fy = extension(X.v), extension(Y.v)

    def ddir(f, direction):
        return (f(z0 + step * direction) - f(z0 - step * direction)) / (2 * step)

    x_of_wy = ddir(lambda w: _ambient_connection(w, fy(w)), X.v)
    y_of_wx = ddir(lambda w: _ambient_connection(w, fx(w)), Y.v)
    bracket = ddir(fy, X.v) - ddir(fx, Y.v)
    return x_of_wy - y_of_wx - _ambient_connection(z0, bracket)


def curvature_form_ratio(
    z: SpherePoint,
    X: HorizontalVector,
    Y: HorizontalVector,
    step: float = 1e-4,
    min_denominator: float = 1e-6,
    extension: Callable[[np.ndarray], Callable] = constant_extension,
) -> Optional[float]:
    """Ratio dw(X, Y) / g(JX, Y), or ``None`` when the Kaehler form is too small to divide by."""
    denom = fs_metric(complex_structure(X), Y)
    if abs(denom) <= min_denominator:
        return None
    return curvature_form(z, X, Y, step=step, extension=extension) / denom


# Alias used by the CLI audit; returns None to signal a skipped sample.
curvature_form_diagnostic = curvature_form_ratio
