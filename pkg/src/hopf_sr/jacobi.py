"""Jacobi curves of Hopf extremals: curvature maps, structural equations and conjugate times.

Two detectors locate conjugate times independently. The structural one
integrates the normal moving frame driven by the curvature maps; the
variational one propagates the linearized extremal flow and never touches
curvature. Both look for dips of the smallest singular value of a
(2n x 2n) matrix whose kernel is the intersection being tested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.optimize import minimize_scalar

from . import comparison
from .flow import (
    PhasePoint,
    IntegrationError,
    _renormalize,
    charge,
    flow_rhs,
    hamiltonian,
)
from .geometry import (
    HorizontalVector,
    SpherePoint,
    as_complex,
    re_inner,
    riemann4_array,
    to_real,
)

LEVEL_TOL = 1e-9
DEGENERATE_MOMENTUM = 1e-9
TOL_RANK = 1e-6
GUARD = 1e-3
STEPS_PER_UNIT_TIME = 4000
COINCIDENCE_TOL = 1e-9


class DegenerateMomentumError(ValueError):
    pass


class RefinementError(RuntimeError):
    """Two conjugate time candidates could not be separated on the grid."""


# ---------------------------------------------------------------------------
# canonical splitting and curvature maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CanonicalSplitting:
    base: PhasePoint
    a_dir: np.ndarray
    b_dir: HorizontalVector
    c_basis: tuple[HorizontalVector, ...]

    @property
    def d_c(self) -> int:
        return len(self.c_basis)

    @property
    def p_h(self) -> np.ndarray:
        # unit horizontal momentum, recovered from b = i p_h
        return -1j * self.b_dir.v


def _gram_schmidt_complement(fixed: list[np.ndarray], candidates, count: int, tol: float = 1e-6) -> list[np.ndarray]:
    """Orthonormal real vectors orthogonal to ``fixed`` (assumed orthonormal), drawn from ``candidates``."""
    basis = list(fixed)
    out = []
    for w in candidates:
        for b in basis:
            w = w - re_inner(w, b) * b
        norm = np.linalg.norm(w)
        if norm <= tol:
            continue
        w = w / norm
        for b in basis:  # second pass for orthogonality at machine precision
            w = w - re_inner(w, b) * b
        w = w / np.linalg.norm(w)
        basis.append(w)
        out.append(w)
        if len(out) == count:
            break
    return out


def _standard_real_basis(dim: int):
    for k in range(dim):
        e = np.zeros(dim, complex)
        e[k] = 1.0
        yield e
        yield 1j * e


def canonical_splitting(lam: PhasePoint) -> CanonicalSplitting:
    z = lam.z
    ph = lam.horizontal_momentum()
    norm = np.linalg.norm(ph)
    if norm < DEGENERATE_MOMENTUM:
        raise DegenerateMomentumError("horizontal momentum vanishes; no extremal direction")
    if abs(hamiltonian(lam) - 0.5) > LEVEL_TOL:
        raise ValueError(f"expected h = 1/2, got h = {hamiltonian(lam):.12g}")
    ph = ph / norm
    base = SpherePoint(z)
    d_c = 2 * lam.n - 2
    fixed = [z, 1j * z, ph, 1j * ph]
    c = _gram_schmidt_complement(fixed, _standard_real_basis(z.size), d_c)
    if len(c) != d_c:
        raise RuntimeError("Gram-Schmidt completion of the c-block failed")
    return CanonicalSplitting(
        base=lam,
        a_dir=1j * z,
        b_dir=HorizontalVector(base, 1j * ph),
        c_basis=tuple(HorizontalVector(base, v) for v in c),
    )


@dataclass(frozen=True, eq=False)
class CurvatureCoefficients:
    r_aa: float
    r_ac: np.ndarray
    r_bb: float
    r_bc: np.ndarray
    r_cc: np.ndarray

    def __post_init__(self):
        r_ac = np.asarray(self.r_ac, float).reshape(-1)
        r_bc = np.asarray(self.r_bc, float).reshape(-1)
        r_cc = np.asarray(self.r_cc, float).reshape(r_ac.size, r_ac.size)
        if r_bc.size != r_ac.size:
            raise ValueError("r_ac and r_bc must have the same length")
        if not np.allclose(r_cc, r_cc.T, atol=1e-12, rtol=0):
            raise ValueError("r_cc must be symmetric")
        object.__setattr__(self, "r_ac", r_ac)
        object.__setattr__(self, "r_bc", r_bc)
        object.__setattr__(self, "r_cc", r_cc)

    @property
    def d_c(self) -> int:
        return self.r_ac.size

    @classmethod
    def constant(cls, omega_b: float, omega_c: float, d_c: int) -> "CurvatureCoefficients":
        return cls(0.0, np.zeros(d_c), omega_b, np.zeros(d_c), omega_c * np.eye(d_c))


def curvature_maps(lam: PhasePoint) -> CurvatureCoefficients:
    """Curvature maps along the extremal through ``lam`` in its canonical splitting basis.

    The vertical momentum enters through :func:`hopf_sr.flow.charge`.
    """
    split = canonical_splitting(lam)
    u0 = charge(lam)
    ph = split.p_h
    jph = split.b_dir.v
    r_bb = float(riemann4_array(ph, jph, ph, jph)) + u0**2
    if split.d_c:
        C = np.array([c.v for c in split.c_basis])
        r_bc = riemann4_array(ph, jph, ph, C)
        r_cc = riemann4_array(ph[None, None], C[:, None], ph[None, None], C[None, :])
        r_cc = 0.5 * (r_cc + r_cc.T) + (u0**2 / 4) * np.eye(split.d_c)
    else:
        r_bc = np.zeros(0)
        r_cc = np.zeros((0, 0))
    return CurvatureCoefficients(0.0, np.zeros(split.d_c), r_bb, r_bc, r_cc)


# ---------------------------------------------------------------------------
# structural equations
# ---------------------------------------------------------------------------

CoefficientProvider = Union[CurvatureCoefficients, Callable[[float], CurvatureCoefficients]]


def coefficient_matrix(coeffs: CurvatureCoefficients, variant: str = "normal") -> np.ndarray:
    """Matrix C with frame' = C @ frame for the row order (E_a, E_b, E_c, F_a, F_b, F_c).

    ``variant="printed"`` uses E_b' = E_c instead of E_b' = F_b and needs d_c = 1.
    """
    d = coeffs.d_c
    m = 2 + d
    ea, eb, ec = 0, 1, np.arange(2, m)
    fa, fb, fc = m, m + 1, np.arange(m + 2, 2 * m)
    C = np.zeros((2 * m, 2 * m))
    C[ea, eb] = 1.0
    if variant == "normal":
        C[eb, fb] = 1.0
    elif variant == "printed":
        if d != 1:
            raise ValueError("the printed structural equation is only defined for d_c = 1")
        C[eb, ec[0]] = 1.0
    else:
        raise ValueError(f"unknown structural variant {variant!r}")
    C[ec, fc] = 1.0
    C[fa, ea] = -coeffs.r_aa
    C[fa, ec] = -coeffs.r_ac
    C[fb, fa] = -1.0
    C[fb, eb] = -coeffs.r_bb
    C[fb, ec] = -coeffs.r_bc
    C[fc, ea] = -coeffs.r_ac
    C[fc, eb] = -coeffs.r_bc
    C[np.ix_(fc, ec)] = -coeffs.r_cc.T
    return C


def symplectic_form(dim: int) -> np.ndarray:
    """Standard form with sigma(E_i, F_j) = delta_ij on a space of dimension 2 * dim."""
    I = np.eye(dim)
    Z = np.zeros((dim, dim))
    return np.block([[Z, I], [-I, Z]])


def _rk4_propagator(C: np.ndarray, dt: float) -> np.ndarray:
    # one classical RK4 step of x' = C x is multiplication by this matrix
    A = dt * C
    A2 = A @ A
    A3 = A2 @ A
    return np.eye(len(C)) + A + A2 / 2 + A3 / 6 + A3 @ A / 24


def _rk4_linear_step(Cfun, t: float, S: np.ndarray, dt: float) -> np.ndarray:
    C1, C2, C4 = Cfun(t), Cfun(t + dt / 2), Cfun(t + dt)
    k1 = C1 @ S
    k2 = C2 @ (S + dt / 2 * k1)
    k3 = C2 @ (S + dt / 2 * k2)
    k4 = C4 @ (S + dt * k3)
    return S + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass(frozen=True)
class DarbouxFrameState:
    time: float
    matrix: np.ndarray  # rows: coordinates of E_a, E_b, E_c..., F_a, F_b, F_c... in the t=0 basis

    @property
    def half(self) -> int:
        return self.matrix.shape[0] // 2

    @property
    def E(self) -> np.ndarray:
        return self.matrix[: self.half]

    @property
    def F(self) -> np.ndarray:
        return self.matrix[self.half :]

    def pairings(self) -> np.ndarray:
        """Gram matrix of sigma on the frame; the identity frame gives the standard form."""
        return self.matrix @ symplectic_form(self.half) @ self.matrix.T


@dataclass(frozen=True, eq=False)
class FrameTrajectory:
    times: np.ndarray
    frames: np.ndarray
    variant: str
    _step_from: Callable[[int, float], np.ndarray] = field(repr=False)

    def __len__(self) -> int:
        return len(self.times)

    def state(self, k: int) -> DarbouxFrameState:
        return DarbouxFrameState(float(self.times[k]), self.frames[k])

    def at(self, t: float) -> np.ndarray:
        """Frame at an arbitrary time, stepping from the nearest grid node at or before ``t``."""
        k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 1))
        return self._step_from(k, t)

    def pairing_drift(self) -> float:
        m = self.frames.shape[1] // 2
        Om = symplectic_form(m)
        G = self.frames @ Om @ np.swapaxes(self.frames, 1, 2)
        return float(np.max(np.abs(G - Om)))

    def intersection_matrices(self) -> np.ndarray:
        """M_ij(t) = sigma(E_i(t), E_j(0)) for every grid time."""
        m = self.frames.shape[1] // 2
        return -self.frames[:, :m, m:]


def structural_ode_integrate(
    coeffs: CoefficientProvider, T: float, steps: int, variant: str = "normal"
) -> FrameTrajectory:
    """Integrate the normal moving frame from the identity Darboux frame with RK4."""
    if not T > 0:
        raise ValueError("T must be positive")
    if steps < 1:
        raise ValueError("steps must be a positive integer")
    dt = T / steps
    times = np.linspace(0.0, T, steps + 1)
    if callable(coeffs):
        def Cfun(t):
            return coefficient_matrix(coeffs(t), variant)
        dim = len(Cfun(0.0))
    else:
        C = coefficient_matrix(coeffs, variant)
        dim = len(C)
        P = _rk4_propagator(C, dt)

    frames = np.empty((steps + 1, dim, dim))
    S = np.eye(dim)
    frames[0] = S
    for k in range(steps):
        S = _rk4_linear_step(Cfun, times[k], S, dt) if callable(coeffs) else P @ S
        if not np.all(np.isfinite(S)):
            raise IntegrationError("non-finite frame", times[k + 1])
        frames[k + 1] = S

    def step_from(k: int, t: float) -> np.ndarray:
        delta = t - times[k]
        if delta == 0.0:
            return frames[k]
        if callable(coeffs):
            return _rk4_linear_step(Cfun, times[k], frames[k], delta)
        return _rk4_propagator(C, delta) @ frames[k]

    return FrameTrajectory(times, frames, variant, step_from)


# ---------------------------------------------------------------------------
# reports and the shared detector
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConjugateReport:
    entries: tuple[tuple[float, int], ...]
    method: str
    T: float
    tolerances: dict = field(default_factory=dict)
    u0: Optional[float] = None

    def __post_init__(self):
        entries = tuple((float(t), int(m)) for t, m in self.entries)
        prev = 0.0
        for t, m in entries:
            if not (prev < t <= self.T + COINCIDENCE_TOL):
                raise ValueError(f"conjugate times must increase within (0, T]; got {t}")
            if m < 1:
                raise ValueError("multiplicities must be positive")
            prev = t
        object.__setattr__(self, "entries", entries)

    @property
    def total(self) -> int:
        return sum(m for _, m in self.entries)

    @property
    def times(self) -> list[float]:
        return [t for t, _ in self.entries]

    @property
    def multiplicities(self) -> list[int]:
        return [m for _, m in self.entries]

    def count_upto(self, t: float) -> int:
        return sum(m for s, m in self.entries if s <= t)

    def truncated(self, T: float) -> "ConjugateReport":
        return ConjugateReport(
            tuple((s, m) for s, m in self.entries if s <= T), self.method, T, dict(self.tolerances), self.u0
        )

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "T": self.T,
            "u0": self.u0,
            "entries": [{"time": t, "multiplicity": m} for t, m in self.entries],
            "total": self.total,
            "tolerances": dict(self.tolerances),
        }


def _singular_values(M: np.ndarray) -> np.ndarray:
    return np.linalg.svd(M, compute_uv=False)


def detect_rank_drops(
    times: np.ndarray,
    matrices: np.ndarray,
    evaluate: Callable[[int, float], np.ndarray],
    tol_rank: float = TOL_RANK,
    guard: float = GUARD,
) -> list[tuple[float, int]]:
    """Times in (guard, T] where the sampled matrix family loses rank, with the nullity there.

    Candidates are grid-local minima of the smallest singular value. Each is
    refined by bounded Brent minimization of its square (a smooth function
    near a root), re-evaluating the family with ``evaluate(k, t)`` from grid
    node ``k``. A candidate is accepted when the refined smallest singular
    value is below ``tol_rank`` times the largest one.
    """
    smin = _singular_values(matrices)[:, -1]
    N = len(times) - 1
    h = times[1] - times[0]
    found: list[tuple[float, int]] = []
    for k in range(1, N + 1):
        if times[k] <= guard:
            continue
        if not (smin[k] <= smin[k - 1] and (k == N or smin[k] < smin[k + 1])):
            continue
        lo, hi = max(times[k - 1], guard), times[min(k + 1, N)]
        node = k - 1

        def f(t):
            return _singular_values(evaluate(node, t))[-1] ** 2

        res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
        t_star = float(res.x)
        sv = _singular_values(evaluate(node, t_star))
        scale = sv[0]
        nullity = int(np.sum(sv < tol_rank * scale))
        if nullity == 0:
            continue
        if found and t_star - found[-1][0] < 2 * h:
            raise RefinementError(
                f"conjugate candidates at t = {found[-1][0]:.6f} and {t_star:.6f} are closer than "
                f"the grid can separate; increase steps"
            )
        found.append((t_star, nullity))
    return found


def _detection_steps(T: float, steps: Optional[int]) -> int:
    if steps is None:
        steps = math.ceil(STEPS_PER_UNIT_TIME * T)
    if steps < 1:
        raise ValueError("steps must be a positive integer")
    return steps


def conjugate_times_structural(
    lam: PhasePoint,
    T: float,
    steps: Optional[int] = None,
    tol_rank: float = TOL_RANK,
    variant: str = "normal",
    coeffs: Optional[CoefficientProvider] = None,
) -> ConjugateReport:
    """Conjugate times from the moving frame driven by the curvature maps at ``lam``.

    Along Hopf extremals the curvature maps are constant; pass ``coeffs`` to
    drive the frame with other (possibly time-dependent) data.
    """
    steps = _detection_steps(T, steps)
    if coeffs is None:
        coeffs = curvature_maps(lam)
    traj = structural_ode_integrate(coeffs, T, steps, variant)
    m = traj.frames.shape[1] // 2

    def evaluate(k, t):
        return -traj._step_from(k, t)[:m, m:]

    entries = detect_rank_drops(traj.times, traj.intersection_matrices(), evaluate, tol_rank)
    return ConjugateReport(
        tuple(entries),
        "structural",
        T,
        {"tol_rank": tol_rank, "guard": GUARD, "steps": steps, "variant": variant},
        charge(lam),
    )


# ---------------------------------------------------------------------------
# linearized flow (independent oracle)
# ---------------------------------------------------------------------------


def _packed_rhs(X: np.ndarray, K: int) -> np.ndarray:
    """Extremal field and its linearization; rows of X are z, p, dz_1..dz_K, dp_1..dp_K."""
    z, p = X[0], X[1]
    dz, dp = X[2 : 2 + K], X[2 + K :]
    iz = 1j * z
    u0 = np.vdot(iz, p).real
    mult = np.vdot(p, p).real - np.vdot(z, p).real ** 2
    du0 = (dp @ iz.conj()).real + ((1j * dz) @ p.conj()).real
    pdp = (dp @ p.conj()).real
    out = np.empty_like(X)
    out[0] = p - u0 * iz
    out[1] = -u0 * 1j * p - mult * z
    out[2 : 2 + K] = dp - np.outer(du0, iz) - (u0 * 1j) * dz
    out[2 + K :] = -np.outer(du0, 1j * p) - (u0 * 1j) * dp - np.outer(2 * pdp, z) - mult * dz
    return out


def _variational_step(X: np.ndarray, K: int, dt: float) -> np.ndarray:
    k1 = _packed_rhs(X, K)
    k2 = _packed_rhs(X + (dt / 2) * k1, K)
    k3 = _packed_rhs(X + (dt / 2) * k2, K)
    k4 = _packed_rhs(X + dt * k3, K)
    return X + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass(frozen=True, eq=False)
class VariationalFlow:
    times: np.ndarray
    z: np.ndarray
    p: np.ndarray
    dz: np.ndarray  # (N+1, K, n+1)
    dp: np.ndarray

    def pairings(self) -> np.ndarray:
        """sigma(v_a, v_b) = Re<dp_a, dz_b> - Re<dp_b, dz_a> at each grid time."""
        P = to_real(self.dp)
        Z = to_real(self.dz)
        G = P @ np.swapaxes(Z, 1, 2)
        return G - np.swapaxes(G, 1, 2)

    def pairing_drift(self) -> float:
        G = self.pairings()
        return float(np.max(np.abs(G - G[0])))

    def state_at(self, k: int, t: float):
        """(z, p, dz, dp) at time ``t``, stepping from grid node ``k``."""
        delta = t - self.times[k]
        if delta == 0.0:
            return self.z[k], self.p[k], self.dz[k], self.dp[k]
        K = self.dz.shape[1]
        X = _variational_step(np.vstack([self.z[k], self.p[k], self.dz[k], self.dp[k]]), K, delta)
        return X[0], X[1], X[2 : 2 + K], X[2 + K :]


def linearized_flow(lam0: PhasePoint, dz0, dp0, T: float, steps: int) -> VariationalFlow:
    """Propagate the variations (dz0[k], dp0[k]) along the extremal from ``lam0``."""
    if not T > 0:
        raise ValueError("T must be positive")
    dz = np.atleast_2d(as_complex(dz0)).copy()
    dp = np.atleast_2d(as_complex(dp0)).copy()
    dt = T / steps
    N1 = steps + 1
    K = dz.shape[0]
    z, p = _renormalize(lam0.z, lam0.p)
    X = np.vstack([z, p, dz, dp])
    packed = np.empty((N1,) + X.shape, complex)
    packed[0] = X
    for k in range(steps):
        X = _variational_step(X, K, dt)
        # reference arc only; variations are left untouched
        X[0], X[1] = _renormalize(X[0], X[1])
        packed[k + 1] = X
    bad = ~np.all(np.isfinite(packed.reshape(N1, -1)), axis=1)
    if bad.any():
        raise IntegrationError("non-finite variational state", float(np.argmax(bad) * dt))
    zs, ps = packed[:, 0], packed[:, 1]
    dzs, dps = packed[:, 2 : 2 + K], packed[:, 2 + K :]
    return VariationalFlow(np.linspace(0.0, T, N1), zs, ps, dzs, dps)


def initial_variations(lam0: PhasePoint) -> tuple[np.ndarray, np.ndarray]:
    """2n momentum variations tangent to the level set and transverse to the flow direction."""
    z = lam0.z
    zdot = flow_rhs(z, lam0.p)[0]
    zdot = zdot / np.linalg.norm(zdot)
    K = 2 * lam0.n
    dp = np.array(_gram_schmidt_complement([z, zdot], _standard_real_basis(z.size), K))
    if len(dp) != K:
        raise RuntimeError("could not build the variation basis")
    return np.zeros_like(dp), dp


def _projected_variations(z, p, dz) -> np.ndarray:
    """Real matrices (..., K, 2n+2) of dz with the z and z' components removed."""
    zdot = flow_rhs(z, p)[0]
    u = zdot / np.linalg.norm(zdot, axis=-1, keepdims=True)
    z_, u_ = z[..., None, :], u[..., None, :]
    w = dz - re_inner(dz, z_)[..., None] * z_
    w = w - re_inner(w, u_)[..., None] * u_
    return to_real(w)


def conjugate_times_variational(
    lam0: PhasePoint, T: float, steps: Optional[int] = None, tol_rank: float = TOL_RANK
) -> ConjugateReport:
    """Brute-force conjugate times from the linearized extremal flow."""
    if abs(hamiltonian(lam0) - 0.5) > LEVEL_TOL:
        raise ValueError(f"expected h = 1/2, got h = {hamiltonian(lam0):.12g}")
    if abs(lam0.gauge) > 1e-10:
        raise ValueError("initial covector is not gauge-fixed")
    steps = _detection_steps(T, steps)
    dz0, dp0 = initial_variations(lam0)
    vf = linearized_flow(lam0, dz0, dp0, T, steps)
    mats = _projected_variations(vf.z, vf.p, vf.dz)

    def evaluate(k, t):
        z, p, dz, _ = vf.state_at(k, t)
        return _projected_variations(z, p, dz)

    entries = detect_rank_drops(vf.times, mats, evaluate, tol_rank)
    return ConjugateReport(
        tuple(entries), "variational", T, {"tol_rank": tol_rank, "guard": GUARD, "steps": steps}, charge(lam0)
    )


# ---------------------------------------------------------------------------
# closed-form predictor
# ---------------------------------------------------------------------------


def closed_form_conjugate_times(omega_b: float, omega_c: float, d_c: int, T: float) -> ConjugateReport:
    """Conjugate times of the constant-coefficient structural equations on (0, T]."""
    raw: list[tuple[float, int]] = []
    eps = comparison.TIE_TOL
    if d_c > 0:
        k = 1
        while k * math.pi / math.sqrt(omega_c) <= T + eps:
            raw.append((k * math.pi / math.sqrt(omega_c), d_c))
            k += 1
    k = 1
    while 2 * math.pi * k / math.sqrt(omega_b) <= T + eps:
        raw.append((2 * math.pi * k / math.sqrt(omega_b), 1))
        k += 1
    raw.extend((x, 1) for x in comparison.tan_equation_times(omega_b, T))
    raw.sort()
    merged: list[list] = []
    for t, m in raw:
        if merged and abs(t - merged[-1][0]) <= COINCIDENCE_TOL:
            merged[-1][1] += m
        else:
            merged.append([t, m])
    return ConjugateReport(
        tuple((min(t, T), m) for t, m in merged), "closed_form", T, {"coincidence": COINCIDENCE_TOL}
    )
