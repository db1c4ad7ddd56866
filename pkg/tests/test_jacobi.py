import math

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import basis, charges, fibration_index, seeds
from hopf_sr import flow, jacobi
from hopf_sr.flow import PhasePoint, phase_point
from hopf_sr.geometry import re_inner
from hopf_sr.jacobi import ConjugateReport, CurvatureCoefficients


def _lam(seed, n, u0):
    return flow.random_phase_point(np.random.default_rng(seed), n, u0)


class TestCanonicalSplitting:
    @given(seeds, fibration_index, charges)
    def test_orthonormal_and_horizontal(self, seed, n, u0):
        split = jacobi.canonical_splitting(_lam(seed, n, u0))
        z = split.base.z
        vecs = [split.p_h, split.b_dir.v] + [c.v for c in split.c_basis]
        G = np.array([[re_inner(a, b) for b in vecs] for a in vecs])
        np.testing.assert_allclose(G, np.eye(len(vecs)), atol=1e-12)
        for v in vecs:
            assert abs(re_inner(v, z)) <= 1e-12 and abs(re_inner(v, 1j * z)) <= 1e-12
        assert split.d_c == 2 * n - 2

    def test_degenerate_momentum(self):
        z = basis(2, 0)
        with pytest.raises(jacobi.DegenerateMomentumError):
            jacobi.canonical_splitting(PhasePoint(z, 0.5j * z))

    def test_off_level_set(self):
        with pytest.raises(ValueError):
            jacobi.canonical_splitting(PhasePoint(basis(2, 0), 2 * basis(2, 1)))


class TestCurvatureMaps:
    @given(seeds, fibration_index, charges)
    def test_constant_values(self, seed, n, u0):
        c = jacobi.curvature_maps(_lam(seed, n, u0))
        assert c.r_aa == 0.0
        assert abs(c.r_bb - (4 + u0**2)) <= 1e-10
        assert np.max(np.abs(c.r_bc), initial=0) <= 1e-10
        assert np.max(np.abs(c.r_cc - (1 + u0**2 / 4) * np.eye(2 * n - 2)), initial=0) <= 1e-10

    def test_invariant_along_extremal(self):
        lam = phase_point(basis(3, 0), basis(3, 2), 1.5)
        ref = jacobi.curvature_maps(lam)
        arc = flow.integrate_extremal(lam, 4.0, steps=4000)
        for state in arc.states[::500]:
            c = jacobi.curvature_maps(state)
            assert abs(c.r_bb - ref.r_bb) <= 1e-10
            assert np.max(np.abs(c.r_cc - ref.r_cc)) <= 1e-10

    def test_coefficient_validation(self):
        with pytest.raises(ValueError):
            CurvatureCoefficients(0, [0, 0], 4, [0], np.eye(2))
        with pytest.raises(ValueError):
            CurvatureCoefficients(0, [0, 0], 4, [0, 0], [[1, 2], [0, 1]])


class TestStructuralEquations:
    @given(charges, fibration_index)
    def test_coefficient_matrix_is_hamiltonian(self, u0, n):
        c = CurvatureCoefficients.constant(4 + u0**2, 1 + u0**2 / 4, 2 * n - 2)
        C = jacobi.coefficient_matrix(c)
        Om = jacobi.symplectic_form(len(C) // 2)
        np.testing.assert_allclose(C @ Om + Om @ C.T, 0, atol=1e-14)

    def test_generic_coefficients_are_hamiltonian(self, rng):
        A = rng.standard_normal((3, 3))
        c = CurvatureCoefficients(0.3, rng.standard_normal(3), 2.0, rng.standard_normal(3), A + A.T)
        C = jacobi.coefficient_matrix(c)
        Om = jacobi.symplectic_form(5)
        np.testing.assert_allclose(C @ Om + Om @ C.T, 0, atol=1e-14)

    def test_printed_variant_breaks_pairings(self):
        c = CurvatureCoefficients.constant(5.0, 1.25, 1)
        good = jacobi.structural_ode_integrate(c, 5.0, 5000)
        bad = jacobi.structural_ode_integrate(c, 5.0, 5000, variant="printed")
        assert good.pairing_drift() <= 1e-10
        assert bad.pairing_drift() > 1e-2

    def test_variant_validation(self):
        with pytest.raises(ValueError):
            jacobi.coefficient_matrix(CurvatureCoefficients.constant(4, 1, 2), "printed")
        with pytest.raises(ValueError):
            jacobi.coefficient_matrix(CurvatureCoefficients.constant(4, 1, 2), "other")

    def test_callable_coefficients_match_constant(self):
        c = CurvatureCoefficients.constant(4.25, 1.0625, 2)
        a = jacobi.structural_ode_integrate(c, 3.0, 3000)
        b = jacobi.structural_ode_integrate(lambda t: c, 3.0, 3000)
        np.testing.assert_allclose(a.frames[-1], b.frames[-1], atol=1e-12)
        np.testing.assert_allclose(a.at(1.23456), b.at(1.23456), atol=1e-12)

    def test_frame_at_off_grid_time(self):
        c = CurvatureCoefficients.constant(4.0, 1.0, 0)
        traj = jacobi.structural_ode_integrate(c, 2.0, 2000)
        fine = jacobi.structural_ode_integrate(c, 1.0005, 2001)
        np.testing.assert_allclose(traj.at(1.0005), fine.frames[-1], atol=1e-12)

    def test_initial_frame_is_darboux(self):
        traj = jacobi.structural_ode_integrate(CurvatureCoefficients.constant(4, 1, 2), 1.0, 10)
        state = traj.state(0)
        np.testing.assert_array_equal(state.pairings(), jacobi.symplectic_form(4))
        assert state.E.shape == state.F.shape == (4, 8)


class TestConjugateReport:
    def test_accessors(self):
        r = ConjugateReport(((1.0, 2), (2.5, 1)), "x", 3.0)
        assert r.total == 3 and r.times == [1.0, 2.5] and r.multiplicities == [2, 1]
        assert r.count_upto(2.0) == 2 and r.truncated(2.0).entries == ((1.0, 2),)
        assert r.to_dict()["entries"][1] == {"time": 2.5, "multiplicity": 1}

    @pytest.mark.parametrize("entries", [((2.0, 1), (1.0, 1)), ((0.0, 1),), ((4.0, 1),), ((1.0, 0),)])
    def test_validation(self, entries):
        with pytest.raises(ValueError):
            ConjugateReport(entries, "x", 3.0)


class TestRankDropDetector:
    @staticmethod
    def _family(diag):
        times = np.linspace(0.0, 2.0, 2001)

        def evaluate(k, t):
            return np.diag([f(t) for f in diag])

        mats = np.array([evaluate(0, t) for t in times])
        return times, mats, evaluate

    def test_multiplicity_is_nullity(self):
        times, mats, ev = self._family([lambda t: t - 1, lambda t: 2 * (t - 1), lambda t: t - 1.5])
        found = jacobi.detect_rank_drops(times, mats, ev)
        assert [m for _, m in found] == [2, 1]
        assert abs(found[0][0] - 1.0) <= 1e-9 and abs(found[1][0] - 1.5) <= 1e-9

    def test_unresolved_pair_raises(self):
        times, mats, ev = self._family([lambda t: t - 1, lambda t: t - 1.0019])
        with pytest.raises(jacobi.RefinementError):
            jacobi.detect_rank_drops(times, mats, ev)

    def test_guard_excludes_origin(self):
        times, mats, ev = self._family([lambda t: t, lambda t: t - 1.2])
        found = jacobi.detect_rank_drops(times, mats, ev)
        assert len(found) == 1 and abs(found[0][0] - 1.2) <= 1e-9

    def test_shallow_dip_is_not_a_root(self):
        times, mats, ev = self._family([lambda t: (t - 1) ** 2 + 0.1, lambda t: 1.0 + 0 * t])
        assert jacobi.detect_rank_drops(times, mats, ev) == []


class TestLinearizedFlow:
    def test_matches_finite_differences(self, rng):
        lam = flow.random_phase_point(rng, 2, 0.7)
        dz0 = flow.random_phase_point(rng, 2).p
        dz0 = dz0 - re_inner(dz0, lam.z) * lam.z
        dp0 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        # keep the gauge condition to first order, as the nonlinear integrator enforces it
        dp0 = dp0 - (re_inner(dp0, lam.z) + re_inner(lam.p, dz0)) * lam.z
        T, steps, eps = 2.0, 2000, 1e-6
        vf = jacobi.linearized_flow(lam, dz0, dp0, T, steps)

        def end(s):
            z = lam.z + s * dz0
            p = lam.p + s * dp0
            arc = flow.integrate_extremal(PhasePoint(z, p), T, steps)
            return arc.z[-1]

        fd = (end(eps) - end(-eps)) / (2 * eps)
        # renormalization only alters the normal direction, so compare tangentially
        z_T = vf.z[-1]
        diff = fd - vf.dz[-1, 0]
        diff = diff - re_inner(diff, z_T) * z_T
        assert np.linalg.norm(diff) <= 1e-6 * (1 + np.linalg.norm(fd))

    def test_pairings_conserved(self, rng):
        lam = flow.random_phase_point(rng, 2, 1.0)
        z = lam.z[None]
        dz0 = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
        dz0 = dz0 - re_inner(dz0, z)[:, None] * z
        dp0 = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
        dp0 = dp0 - (re_inner(dp0, z) + re_inner(lam.p[None], dz0))[:, None] * z
        vf = jacobi.linearized_flow(lam, dz0, dp0, 5.0, 5000)
        assert vf.pairing_drift() <= 1e-8

    def test_initial_variations_are_transverse(self, rng):
        lam = flow.random_phase_point(rng, 3, 0.4)
        dz, dp = jacobi.initial_variations(lam)
        assert dp.shape == (6, 4) and not dz.any()
        zdot = flow.flow_rhs(lam.z, lam.p)[0]
        assert np.max(np.abs(re_inner(dp, lam.z[None]))) <= 1e-12
        assert np.max(np.abs(re_inner(dp, zdot[None]))) <= 1e-12


class TestConjugateTimes:
    def test_first_time_at_zero_charge(self):
        lam = phase_point(basis(2, 0), basis(2, 1))
        for method in (jacobi.conjugate_times_structural, jacobi.conjugate_times_variational):
            report = method(lam, 3.3)
            assert report.multiplicities == [3]
            assert abs(report.times[0] - math.pi) <= 1e-6

    def test_closed_form_unit_charge_circle_bundle(self):
        r = jacobi.closed_form_conjugate_times(5.0, 1.25, 0, 7.0)
        y1 = jacobi.comparison.tan_root(1)
        assert r.multiplicities == [1, 1, 1, 1]
        np.testing.assert_allclose(
            r.times, [2 * math.pi / math.sqrt(5), 2 * y1 / math.sqrt(5), 4 * math.pi / math.sqrt(5),
                      2 * jacobi.comparison.tan_root(2) / math.sqrt(5)], atol=1e-12,
        )

    def test_coincident_times_merge(self):
        # omega_b = 4 omega_c puts 2 pi / sqrt(omega_b) on pi / sqrt(omega_c)
        r = jacobi.closed_form_conjugate_times(4.0, 1.0, 2, 3.2)
        assert r.entries == ((math.pi, 3),)

    @settings(max_examples=4)
    @given(seeds, charges)
    def test_structural_matches_closed_form(self, seed, u0):
        lam = _lam(seed, 2, u0)
        s = jacobi.conjugate_times_structural(lam, 5.0)
        c = jacobi.closed_form_conjugate_times(4 + u0**2, 1 + u0**2 / 4, 2, 5.0)
        assert s.multiplicities == c.multiplicities
        np.testing.assert_allclose(s.times, c.times, atol=1e-6)

    def test_variational_requires_level_set(self):
        with pytest.raises(ValueError):
            jacobi.conjugate_times_variational(PhasePoint(basis(1, 0), 2 * basis(1, 1)), 1.0)
        with pytest.raises(ValueError):
            jacobi.conjugate_times_variational(PhasePoint(basis(1, 0), basis(1, 1) + 0.3 * basis(1, 0)), 1.0)
