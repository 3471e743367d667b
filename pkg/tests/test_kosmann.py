import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import fd_jacobian
from lorentzlie import diffgeo as dg
from lorentzlie import kosmann as ko
from lorentzlie.exprlang import Scope, evaluate
from lorentzlie.fields import ExprArray
from lorentzlie.scenes import builtin_scene, random_polynomial_vector

CART = Scope(("t", "x", "y", "z"))
IDENTITY = dg.FrameField.identity()
SCHWARZSCHILD = builtin_scene("schwarzschild")


def vf(*sources):
    return ko.VectorField.from_strings(list(sources), CART, 4)


def poly_pair(seed, dim=4):
    rng = np.random.default_rng(seed)
    return random_polynomial_vector(rng, dim, 2, 0.5), random_polynomial_vector(rng, dim, 2, 0.5)


def fd_vertical(xi: ko.VectorField, frame: dg.FrameField, p, h=1e-5):
    """nabla^[b xi^a] from central differences of the components and the Levi-Civita symbols."""
    p = np.asarray(p, dtype=float)
    dxi = fd_jacobian(lambda q: np.array(xi(q)), p, h)  # [nu, mu]
    gam = dg.christoffel_at(frame, p)
    nab = dxi + np.einsum("nlm,l->nm", gam, np.array(xi(p)))
    e = frame(p)
    eup = frame.signature.eta @ np.linalg.inv(e).T
    full = np.einsum("an,nm,bm->ab", e, nab, eup)
    return 0.5 * (full - full.T)


class TestNaturalLift:
    def test_translation(self):
        lift = ko.natural_lift_at(vf("1", "0", "0", "0"), [0.1, 0.2, 0.3, 0.4])
        assert not lift.fiber.any()
        assert np.array_equal(lift.base, [1, 0, 0, 0])

    def test_shear(self):
        lift = ko.natural_lift_at(vf("x", "0", "0", "0"), [0.1, 0.2, 0.3, 0.4])
        want = np.zeros((4, 4))
        want[1, 0] = 1.0  # d_1 xi^0
        assert np.array_equal(lift.fiber, want)

    def test_dilation(self):
        lift = ko.natural_lift_at(vf("t", "x", "y", "z"), [0.1, 0.2, 0.3, 0.4])
        assert np.array_equal(lift.fiber, np.eye(4))


class TestLieDerivativeOfMetric:
    def test_boost_is_killing(self):
        assert not ko.lie_derivative_metric_at(vf("x", "t", "0", "0"), IDENTITY, [0.3, -0.2, 0.5, 0.1]).any()

    def test_dilation_doubles_the_metric(self):
        lg = ko.lie_derivative_metric_at(vf("t", "x", "y", "z"), IDENTITY, [0.3, -0.2, 0.5, 0.1])
        assert np.array_equal(lg, 2 * IDENTITY.signature.eta)

    def test_static_time_translation(self, scenes):
        scene = scenes["schwarzschild"]
        assert ko.killing_residual(scene.vectors["killing_t"], scene.frame, scene.sample_points(20, 1)) < 1e-10

    def test_both_forms_agree(self, scenes):
        scene = scenes["schwarzschild"]
        xi = poly_pair(3)[0]
        for p in scene.sample_points(10, 2):
            direct, cov = ko.lie_derivative_metric_at(xi, scene.frame, p, both=True)
            assert np.abs(direct - cov).max() < 1e-10 * max(1.0, np.abs(direct).max())

    def test_matches_finite_differences(self, scenes):
        scene = scenes["minkowski-spherical"]
        xi = poly_pair(4)[0]
        p = np.array([0.2, 1.4, 1.1, 0.6])
        g = lambda q: dg.induced_metric(scene.frame, q).g
        dg_ = fd_jacobian(g, p)  # [m, n, l]
        dxi = fd_jacobian(lambda q: np.array(xi(q)), p)  # [l, m]
        gp, x = g(p), np.array(xi(p))
        want = np.einsum("l,mnl->mn", x, dg_) + dxi.T @ gp + gp @ dxi
        assert np.abs(ko.lie_derivative_metric_at(xi, scene.frame, p) - want).max() < 1e-7


class TestKilling:
    def test_minkowski_catalog(self, scenes):
        scene = scenes["minkowski-cartesian"]
        pts = scene.sample_points(20, 0)
        assert len(scene.killing) == 10
        for name in scene.killing:
            assert ko.killing_residual(scene.vectors[name], scene.frame, pts) < 1e-10, name

    @pytest.mark.parametrize("name", ["minkowski-spherical", "schwarzschild", "de-sitter-static"])
    def test_static_spherical_catalogs(self, scenes, name):
        scene = scenes[name]
        pts = scene.sample_points(30, 0)
        assert {"killing_t", "rot_x", "rot_y", "rot_z"} <= set(scene.killing)
        for k in scene.killing:
            assert ko.is_killing(scene.vectors[k], scene.frame, pts, 1e-9), k

    def test_non_killing_field(self):
        corners = [[s0, s1, 0, 0] for s0 in (-1, 1) for s1 in (-1, 1)]
        assert ko.killing_residual(vf("t*x", "0", "0", "0"), IDENTITY, corners) >= 0.5

    def test_zero_field(self):
        assert ko.killing_residual(vf("0", "0", "0", "0"), IDENTITY, [[0.1, 0.2, 0.3, 0.4]]) == 0.0


class TestKosmannLift:
    def test_translation(self):
        lift = ko.kosmann_lift_at(vf("1", "0", "0", "0"), IDENTITY, [0.1, 0.2, 0.3, 0.4])
        assert not lift.generator.any() and not lift.vertical.any()

    def test_boost_value(self):
        lift = ko.kosmann_lift_at(vf("x", "t", "0", "0"), IDENTITY, [0.0, 0.0, 0.0, 0.0])
        want = np.zeros((4, 4))
        want[0, 1], want[1, 0] = -1.0, 1.0
        assert np.abs(lift.vertical - want).max() <= 1e-12
        assert np.abs(fd_vertical(vf("x", "t", "0", "0"), IDENTITY, [0.3, 0.1, 0.2, 0.4]) - want).max() < 1e-9

    def test_rotation_value(self):
        lift = ko.kosmann_lift_at(vf("0", "-y", "x", "0"), IDENTITY, [0.2, 0.5, -0.3, 0.1])
        assert lift.vertical[1, 2] == pytest.approx(1.0, abs=1e-14)
        assert np.abs(lift.vertical).sum() == pytest.approx(2.0)

    @pytest.mark.parametrize("name", ["minkowski-spherical", "schwarzschild", "de-sitter-static"])
    def test_vertical_part_matches_fd_oracle(self, scenes, name):
        scene = scenes[name]
        xi = poly_pair(7)[0]
        for p in scene.sample_points(5, 6):
            got = ko.kosmann_lift_at(xi, scene.frame, p).vertical
            assert np.abs(got - fd_vertical(xi, scene.frame, p)).max() < 1e-7

    @pytest.mark.parametrize("name", ["minkowski-cartesian", "minkowski-spherical", "schwarzschild",
                                      "de-sitter-static"])
    def test_routes_agree(self, scenes, name):
        scene = scenes[name]
        rng = np.random.default_rng(8)
        fields = [random_polynomial_vector(rng, 4, 2, 0.5) for _ in range(3)]
        for xi in fields:
            for p in scene.sample_points(10, 9):
                routes = ko.kosmann_routes_at(xi, scene.frame, p)
                ref = routes["connection_free"]
                for r in routes.values():
                    assert np.abs(r - ref).max() < 1e-10
                assert np.array_equal(ref, -ref.T)
                assert ko.kosmann_lift_at(xi, scene.frame, p).consistency < 1e-10

    @given(st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 1000))
    def test_linearity(self, a, b, seed):
        frame = SCHWARZSCHILD.frame
        xi, zeta = poly_pair(seed)
        combo = xi.scaled(a) + zeta.scaled(b)
        p = [0.1, 6.0, 1.2, 0.3]
        lhs = ko.kosmann_lift_at(combo, frame, p).generator
        rhs = a * ko.kosmann_lift_at(xi, frame, p).generator + b * ko.kosmann_lift_at(zeta, frame, p).generator
        assert np.abs(lhs - rhs).max() < 1e-10 * max(1.0, np.abs(rhs).max())


class TestCommutator:
    def test_translations_commute(self):
        c = ko.vector_commutator(vf("1", "0", "0", "0"), vf("0", "1", "0", "0"))
        assert all(evaluate(e, [0.3] * 4) == 0 for e in c.exprs)

    def test_boost_with_time_translation(self):
        c = ko.vector_commutator(vf("x", "t", "0", "0"), vf("1", "0", "0", "0"))
        assert [evaluate(e, [0.3, 0.1, 0.2, 0.4]) for e in c.exprs] == [0, -1, 0, 0]

    @given(st.integers(0, 10_000))
    def test_antisymmetry_and_self_bracket(self, seed):
        xi, zeta = poly_pair(seed)
        p = [0.2, -0.3, 0.5, 0.1]
        assert np.abs(np.array(ko.vector_commutator(xi, xi)(p))).max() < 1e-14
        a = np.array(ko.vector_commutator(xi, zeta)(p))
        b = np.array(ko.vector_commutator(zeta, xi)(p))
        assert np.abs(a + b).max() < 1e-14

    def test_matches_finite_differences(self):
        xi, zeta = poly_pair(12)
        p = np.array([0.3, 0.1, -0.4, 0.2])
        dx = fd_jacobian(lambda q: np.array(xi(q)), p)
        dz = fd_jacobian(lambda q: np.array(zeta(q)), p)
        want = dz @ np.array(xi(p)) - dx @ np.array(zeta(p))
        assert np.abs(np.array(ko.vector_commutator(xi, zeta)(p)) - want).max() < 1e-8


class TestDefect:
    @pytest.mark.parametrize("name", ["minkowski-cartesian", "schwarzschild", "de-sitter-static"])
    def test_identity_on_random_pairs(self, scenes, name):
        scene = scenes[name]
        for seed in range(5):
            xi, zeta = poly_pair(100 + seed)
            for p in scene.sample_points(4, seed):
                assert ko.kosmann_defect_residual(xi, zeta, scene.frame, p).residual < 1e-8

    def test_literal_reading_flips_the_sign(self, scenes):
        scene = scenes["schwarzschild"]
        xi, zeta = poly_pair(5)
        p = scene.sample_points(1, 2)[0]
        raised = ko.kosmann_defect_residual(xi, zeta, scene.frame, p)
        literal = ko.kosmann_defect_residual(xi, zeta, scene.frame, p, reading="literal")
        assert np.abs(raised.rhs).max() > 1e-3
        assert np.abs(literal.rhs + raised.rhs).max() < 1e-12
        assert literal.residual > 1e-3

    def test_killing_pairs(self, scenes):
        scene = scenes["minkowski-cartesian"]
        names = scene.killing
        for p in scene.sample_points(3, 4):
            for a in names[::3]:
                for b in names[1::3]:
                    d = ko.kosmann_defect_residual(scene.vectors[a], scene.vectors[b], scene.frame, p)
                    assert np.abs(d.lhs).max() < 1e-12 and np.abs(d.rhs).max() < 1e-12

    def test_equal_fields(self, scenes):
        xi, _ = poly_pair(9)
        scene = scenes["schwarzschild"]
        d = ko.kosmann_defect_residual(xi, xi, scene.frame, scene.sample_points(1, 5)[0])
        assert np.abs(d.lhs).max() < 1e-10 and np.abs(d.rhs).max() < 1e-10

    def test_so_bracket_matches_matrix_commutator(self):
        rng = np.random.default_rng(0)
        eta = dg.LORENTZIAN.eta
        a, b = rng.standard_normal((2, 4, 4))
        a, b = a - a.T, b - b.T
        ma, mb = a @ eta, b @ eta  # A^a_c
        want = (ma @ mb - mb @ ma) @ np.linalg.inv(eta)
        assert np.abs(ko.so_bracket(a, b, eta) - want).max() < 1e-14


class TestGaugeGenerator:
    def test_lorentz_part_is_antisymmetrized(self):
        g = ko.GaugeGenerator.from_strings(["t", "0", "0", "0"], [["0", "x", "1", "0"], ["0"] * 4, ["3", "0", "0", "0"],
                                                                    ["0"] * 4], CART, 4)
        _, lor = g.jets([0.1, 0.4, 0.2, 0.3], 0)
        v = lor.value
        assert np.array_equal(v, -v.T)
        assert v[0, 1] == pytest.approx(0.2) and v[0, 2] == pytest.approx(-1.0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            ko.GaugeGenerator(ExprArray(np.zeros(4), 4), ExprArray(np.zeros((3, 3)), 4))
