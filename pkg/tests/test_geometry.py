import numpy as np
import pytest
from hypothesis import given

from conftest import basis, fibration_index, random_frame, seeds
from hopf_sr import geometry as g
from hopf_sr.geometry import HorizontalVector, SpherePoint


def test_real_complex_views_agree(rng):
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    x = g.to_real(v)
    assert x[2] == v[1].real and x[3] == v[1].imag
    np.testing.assert_array_equal(g.from_real(x), v)


def test_sphere_point_normalizes():
    z = SpherePoint([3.0, 4.0j])
    assert abs(np.linalg.norm(z.z) - 1) <= 1e-12
    with pytest.raises(ValueError):
        SpherePoint([0.0, 0.0])


def test_horizontal_vector_rejects_vertical_and_normal():
    z = SpherePoint(basis(2, 0))
    with pytest.raises(ValueError):
        HorizontalVector(z, 1j * z.z)
    with pytest.raises(ValueError):
        HorizontalVector(z, z.z)


class TestVerticalField:
    def test_at_e1(self):
        V = g.vertical_field(SpherePoint(basis(2, 0)))
        np.testing.assert_array_equal(g.to_real(V), [0, 1, 0, 0, 0, 0])

    @given(seeds, fibration_index)
    def test_unit_and_tangent(self, seed, n):
        z = SpherePoint(g.random_sphere(np.random.default_rng(seed), n))
        V = g.vertical_field(z)
        assert abs(g.re_inner(V, z.z)) <= 1e-15
        assert abs(np.linalg.norm(V) - 1) <= 1e-12

    def test_linearity(self):
        z = SpherePoint(np.array([1, 1, 0]) / np.sqrt(2))
        np.testing.assert_allclose(g.vertical_field(z), 1j * np.array([1, 1, 0]) / np.sqrt(2), atol=1e-15)


class TestHorizontalProject:
    def test_annihilates_vertical_and_normal(self, rng):
        z = SpherePoint(g.random_sphere(rng, 3))
        assert np.linalg.norm(g.horizontal_project(z, 1j * z.z).v) <= 1e-15
        assert np.linalg.norm(g.horizontal_project(z, z.z).v) <= 1e-15

    @given(seeds, fibration_index)
    def test_idempotent_and_self_adjoint(self, seed, n):
        r = np.random.default_rng(seed)
        z = SpherePoint(g.random_sphere(r, n))
        a = r.standard_normal(n + 1) + 1j * r.standard_normal(n + 1)
        b = r.standard_normal(n + 1) + 1j * r.standard_normal(n + 1)
        Pa = g.horizontal_project(z, a).v
        np.testing.assert_allclose(g.horizontal_project(z, Pa).v, Pa, atol=1e-14)
        lhs = g.re_inner(Pa, b)
        rhs = g.re_inner(a, g.horizontal_project(z, b).v)
        assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))


class TestComplexStructure:
    @given(seeds, fibration_index)
    def test_square_isometry_antisymmetry(self, seed, n):
        _, X, Y, _ = random_frame(seed, n)
        JX = g.complex_structure(X)
        np.testing.assert_allclose(g.complex_structure(JX).v, -X.v, atol=0)
        assert abs(g.fs_metric(JX, X)) <= 1e-12 * X.norm() ** 2
        assert abs(JX.norm() - X.norm()) <= 1e-12 * X.norm()
        assert abs(g.fs_metric(JX, g.complex_structure(Y)) - g.fs_metric(X, Y)) <= 1e-12 * X.norm() * Y.norm()


class TestMetric:
    def test_orthonormal_pair(self):
        z = SpherePoint(basis(2, 0))
        u, v = HorizontalVector(z, basis(2, 1)), HorizontalVector(z, basis(2, 2))
        assert g.fs_metric(u, v) == 0 and g.fs_metric(u, u) == 1 and g.fs_metric(v, v) == 1

    @given(seeds, fibration_index)
    def test_norm(self, seed, n):
        _, X, _, _ = random_frame(seed, n)
        assert abs(g.fs_metric(X, X) - X.norm() ** 2) <= 1e-12 * X.norm() ** 2

    def test_mismatched_base(self):
        u = HorizontalVector(SpherePoint(basis(2, 0)), basis(2, 1))
        v = HorizontalVector(SpherePoint(basis(2, 2)), basis(2, 1))
        with pytest.raises(ValueError):
            g.fs_metric(u, v)


class TestRiemann:
    def setup_method(self):
        self.z = SpherePoint(basis(2, 0))
        self.X = HorizontalVector(self.z, basis(2, 1))
        self.JX = g.complex_structure(self.X)
        self.Y = HorizontalVector(self.z, basis(2, 2))

    def test_holomorphic_plane(self):
        assert g.riemann4(self.X, self.JX, self.X, self.JX) == pytest.approx(4, abs=1e-12)

    def test_totally_real_plane(self):
        assert g.riemann4(self.X, self.Y, self.X, self.Y) == pytest.approx(1, abs=1e-12)

    @given(seeds, fibration_index)
    def test_repeated_first_pair_vanishes(self, seed, n):
        _, X, Y, r = random_frame(seed, n)
        assert g.riemann4(X, X, Y, X) == 0.0

    @given(seeds, fibration_index)
    def test_algebraic_symmetries(self, seed, n):
        r = np.random.default_rng(seed)
        z = g.random_sphere(r, n)
        X, Y, Z, W = (g.random_horizontal(r, z) for _ in range(4))
        R = g.riemann4_array
        base = R(X, Y, Z, W)
        assert abs(base + R(Y, X, Z, W)) <= 1e-12
        assert abs(base + R(X, Y, W, Z)) <= 1e-12
        assert abs(base - R(Z, W, X, Y)) <= 1e-12
        assert abs(base + R(Y, Z, X, W) + R(Z, X, Y, W)) <= 1e-12


class TestSectionalCurvature:
    def test_extremes(self):
        z = SpherePoint(basis(3, 0))
        X = HorizontalVector(z, basis(3, 1))
        assert g.sectional_curvature(X, g.complex_structure(X)) == pytest.approx(4, abs=1e-12)
        Y = HorizontalVector(z, basis(3, 2, 1j))
        assert g.sectional_curvature(X, Y) == pytest.approx(1, abs=1e-12)

    @given(seeds, fibration_index)
    def test_closed_form_for_orthonormalized_inputs(self, seed, n):
        _, X, Y, _ = random_frame(seed, n)
        Xu = X.v / X.norm()
        Yo = Y.v - g.re_inner(Y.v, Xu) * Xu
        Yo = Yo / np.linalg.norm(Yo)
        expected = 1 + 3 * g.re_inner(1j * Xu, Yo) ** 2
        assert abs(g.sectional_curvature(X, Y) - expected) <= 1e-12
        assert 1 - 1e-9 <= expected <= 4 + 1e-9

    def test_random_planes_in_range(self, rng):
        for n in (1, 2, 3, 4):
            z = g.random_sphere(rng, n, 20_000)
            sec = g.sectional_curvature_array(g.random_horizontal(rng, z), g.random_horizontal(rng, z))
            assert sec.min() >= 1 - 1e-9 and sec.max() <= 4 + 1e-9

    def test_degenerate_plane(self):
        z = SpherePoint(basis(2, 0))
        X = HorizontalVector(z, basis(2, 1))
        with pytest.raises(ValueError):
            g.sectional_curvature(X, HorizontalVector(z, 2 * basis(2, 1)))


class TestConnectionForm:
    def test_values(self, rng):
        z = SpherePoint(g.random_sphere(rng, 2))
        assert g.connection_form(z, 1j * z.z) == pytest.approx(1, abs=1e-15)
        assert g.connection_form(z, g.random_horizontal(rng, z.z)) == pytest.approx(0, abs=1e-15)
        # not tangent, still evaluated
        assert g.connection_form(z, 3 * z.z) == pytest.approx(0, abs=1e-15)


class TestCurvatureFormDiagnostic:
    def test_ratio_is_constant_and_pinned(self):
        ratios = []
        for seed in range(100):
            z, X, Y, _ = random_frame(seed, 1 + seed % 4)
            ratio = g.curvature_form_diagnostic(z, X, Y)
            if ratio is not None:
                ratios.append(ratio)
        ratios = np.array(ratios)
        assert len(ratios) >= 95
        assert ratios.max() - ratios.min() <= 2e-4
        assert abs(ratios.mean() - g.CURVATURE_FORM_SCALE) <= 2e-4

    def test_extensions_agree(self):
        # the horizontal extension routes everything through the bracket term
        for seed in range(20):
            z, X, Y, _ = random_frame(seed, 2)
            a = g.curvature_form(z, X, Y, extension=g.constant_extension)
            b = g.curvature_form(z, X, Y, extension=g.horizontal_extension)
            assert abs(a - b) <= 2e-4 * (1 + abs(a))

    @given(seeds, fibration_index)
    def test_antisymmetry(self, seed, n):
        z, X, Y, _ = random_frame(seed, n)
        assert abs(g.curvature_form(z, X, Y) + g.curvature_form(z, Y, X)) <= 2e-4

    def test_skips_when_kaehler_form_vanishes(self):
        z = SpherePoint(basis(2, 0))
        X = HorizontalVector(z, basis(2, 1))
        Y = HorizontalVector(z, basis(2, 2))
        assert g.curvature_form_diagnostic(z, X, Y) is None
