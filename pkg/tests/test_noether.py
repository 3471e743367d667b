import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import fd_jacobian
from lorentzlie import diffgeo as dg
from lorentzlie import kosmann as ko
from lorentzlie import noether as no
from lorentzlie.exprlang import Scope
from lorentzlie.fields import ExprArray
from lorentzlie.jets import Jet
from lorentzlie.scenes import random_polynomial_vector

CART = Scope(("t", "x", "y", "z"))
SPH = Scope(("t", "r", "theta", "phi"), {"q": 1.0})
IDENTITY = dg.FrameField.identity()
ETA = dg.LORENTZIAN.eta


def em(*sources, scope=CART):
    return no.EMField.from_strings(list(sources), scope, 4)


def gauge_gen(base, chi, scope=CART):
    return no.EMGaugeGenerator.from_strings(base, chi, scope, 4)


def sphere(r, nodes=(16, 32)):
    return no.SurfaceQuadrature({0: 0.0, 1: r}, {2: (0.3, math.pi - 0.3), 3: (0.0, 2 * math.pi)}, nodes)


class TestMaxwell:
    def test_vanishing_potential(self):
        field = em("0", "0", "0", "0")
        assert no.maxwell_lagrangian_at(field, IDENTITY, [0.1] * 4) == 0.0
        assert not no.em_stress_at(field, IDENTITY, [0.1] * 4).any()

    def test_uniform_electric_field(self):
        e_val = 1.7
        field = em(f"-{e_val}*x", "0", "0", "0")
        p = [0.1, 0.2, 0.3, 0.4]
        assert no.maxwell_lagrangian_at(field, IDENTITY, p) == pytest.approx(e_val ** 2 / 2)
        h = no.em_stress_at(field, IDENTITY, p)
        # F_{10} = -E, so F_{m0} F^m_0 = -E^2 and 1/4 F^2 g_00 = -E^2/2
        assert h[0, 0] == pytest.approx(-e_val ** 2 / 2)
        assert np.abs(h - h.T).max() == 0.0

    def test_pure_gauge(self):
        field = em("2*t*x", "t^2 + y", "x", "0")
        assert abs(no.maxwell_lagrangian_at(field, IDENTITY, [0.3, 0.1, 0.2, 0.5])) < 1e-15

    @given(st.integers(0, 10_000))
    def test_stress_is_traceless(self, seed):
        from lorentzlie.scenes import builtin_scene
        rng = np.random.default_rng(seed)
        field = no.EMField(random_polynomial_vector(rng, 4, 2, 1.0).components)
        frame = builtin_scene("schwarzschild").frame
        p = [0.2, 6.0, 1.0, 0.3]
        h = no.em_stress_at(field, frame, p)
        trace = np.einsum("ab,ab->", dg.induced_metric(frame, p).ginv, h)
        assert abs(trace) < 1e-10 * max(1.0, np.abs(h).max())

    def test_coulomb_solves_maxwell(self, scenes):
        scene = scenes["minkowski-spherical"]
        for p in scene.sample_points(50, 1):
            assert np.abs(no.maxwell_residual_at(scene.em["coulomb"], scene.frame, p)).max() < 1e-9

    def test_uniform_field_is_source_free(self):
        assert not no.maxwell_residual_at(em("-x", "y", "0", "z"), IDENTITY, [0.1, 0.2, 0.3, 0.4]).any()

    def test_sourceful_profile(self):
        res = no.maxwell_residual_at(em("x^2", "0", "0", "0"), IDENTITY, [0.1, 0.7, 0.3, 0.4])
        assert res == pytest.approx([-2.0, 0, 0, 0])

    def test_residual_matches_fd_of_density(self, scenes):
        scene = scenes["minkowski-spherical"]
        field = em("r*t", "sin(theta)", "phi*r", "t^2", scope=SPH)
        p = np.array([0.3, 1.5, 1.1, 0.5])
        dens = lambda q: no.maxwell_density_jet(field, scene.frame, q, 0).value
        want = np.einsum("mnm->n", fd_jacobian(dens, p))
        assert np.abs(no.maxwell_residual_at(field, scene.frame, p) - want).max() < 1e-7


class TestEMLieDerivative:
    def test_rigid_gauge(self):
        val, direct, res = no.em_lie_derivative_at(em("x", "t", "0", "0"), gauge_gen(["0"] * 4, "3"), IDENTITY,
                                                   [0.1, 0.2, 0.3, 0.4])
        assert not val.any() and res == 0

    def test_local_gauge(self):
        val, _, _ = no.em_lie_derivative_at(em("x", "t", "0", "0"), gauge_gen(["0"] * 4, "t*y"), IDENTITY,
                                            [0.1, 0.2, 0.3, 0.4])
        assert val == pytest.approx([-0.3, 0, -0.1, 0])

    def test_symmetry_translation(self):
        val, _, _ = no.em_lie_derivative_at(em("-x", "0", "0", "0"), gauge_gen(["1", "0", "0", "1"], "0"), IDENTITY,
                                            [0.1, 0.2, 0.3, 0.4])
        assert not val.any()

    def test_forms_agree(self):
        rng = np.random.default_rng(3)
        field = no.EMField(random_polynomial_vector(rng, 4, 2, 1.0).components)
        base = random_polynomial_vector(rng, 4, 2, 1.0).components
        chi_src = np.empty((), dtype=object)
        chi_src[()] = random_polynomial_vector(rng, 4, 2, 1.0).components.exprs[0]
        chi = ExprArray(chi_src, 4)
        gen = no.EMGaugeGenerator(base, chi)
        for p in np.random.default_rng(4).uniform(-1, 1, (10, 4)):
            assert no.em_lie_derivative_at(field, gen, IDENTITY, p)[2] < 1e-10


class TestEMCurrents:
    def test_conservation_for_killing_generators(self, scenes):
        scene = scenes["minkowski-spherical"]
        for name in scene.killing:
            gen = no.EMGaugeGenerator(scene.vectors[name].components, ExprArray.parse("t*r + phi", scene.scope, 4))
            for p in scene.sample_points(5, 2):
                assert abs(no.em_current_divergence_at(scene.em["coulomb"], gen, scene.frame, p)) < 1e-6

    def test_current_is_divergence_of_superpotential_on_shell(self, scenes):
        scene = scenes["minkowski-cartesian"]
        gen = no.EMGaugeGenerator(ExprArray.parse(["0"] * 4, scene.scope, 4), ExprArray.parse("t*x - y^2", scene.scope, 4))
        for p in scene.sample_points(5, 3):
            e_mu = no.em_noether_current_at(scene.em["wave"], gen, scene.frame, p)
            u = no.em_superpotential_jet(scene.em["wave"], gen, scene.frame, p, 1)
            assert np.abs(e_mu - no.superpotential_divergence(u)).max() < 1e-8


class TestGaussCharge:
    def test_radius_independence_and_linearity(self, scenes):
        scene = scenes["minkowski-spherical"]
        gen = gauge_gen(["0"] * 4, "1", SPH)
        field = scene.em["coulomb"]
        q2, res2 = no.gauss_charge(field, gen, scene.frame, sphere(2.0), scene.domain)
        q5, res5 = no.gauss_charge(field, gen, scene.frame, sphere(5.0), scene.domain)
        assert abs(q2.value - q5.value) < 1e-4 * abs(q5.value)
        assert max(res2, res5) < 1e-9
        assert q2.value == pytest.approx(-2 * math.pi * 2 * math.cos(0.3), rel=1e-12)
        doubled, _ = no.gauss_charge(field.scaled(2.0), gen, scene.frame, sphere(2.0), scene.domain)
        assert abs(doubled.value - 2 * q2.value) < 1e-12 * abs(q2.value)

    def test_zero_charge(self, scenes):
        scene = scenes["minkowski-spherical"]
        gen = gauge_gen(["0"] * 4, "1", SPH)
        q, _ = no.gauss_charge(em("0", "0", "0", "0", scope=SPH), gen, scene.frame, sphere(2.0))
        assert q.value == 0.0

    def test_surface_outside_domain(self, scenes):
        scene = scenes["minkowski-spherical"]
        with pytest.raises(no.QuadratureError):
            no.gauss_charge(scene.em["coulomb"], gauge_gen(["0"] * 4, "1", SPH), scene.frame, sphere(9.0),
                            scene.domain)

    def test_invalid_surfaces(self):
        with pytest.raises(no.QuadratureError):
            no.SurfaceQuadrature({0: 0.0}, {2: (0, 1), 3: (0, 1)})
        with pytest.raises(no.QuadratureError):
            no.SurfaceQuadrature({0: 0.0, 1: 1.0}, {2: (0, 1), 3: (0, 1)}, nodes=(4, 16))
        with pytest.raises(no.QuadratureError):
            no.SurfaceQuadrature({0: 0.0, 1: 1.0}, {2: (1, 0), 3: (0, 1)})
        with pytest.raises(no.QuadratureError):
            no.SurfaceQuadrature({0: 0.0, 1: 1.0}, {2: (0, 1), 3: (0, 1)}, rule="simpson")


class TestSurfaceCharge:
    def test_zero_superpotential(self):
        q = no.surface_charge(lambda p: np.zeros((4, 4)), sphere(2.0))
        assert q.value == 0.0 and q.error_estimate == 0.0

    @given(st.floats(-5, 5))
    def test_linearity_in_scale(self, c):
        u = lambda p: np.outer([1, p[2], 0, 0], [0, 1, 0, p[3]]) * np.sin(p[2])
        base = no.surface_charge(u, sphere(2.0)).value
        scaled = no.surface_charge(lambda p: c * u(p), sphere(2.0)).value
        assert scaled == pytest.approx(c * base, rel=1e-13, abs=1e-13)

    def test_rules_converge_to_the_same_value(self):
        u = lambda p: np.full((4, 4), np.sin(p[2]) * np.cos(p[3]) ** 2)
        exact = 2 * math.cos(0.3) * math.pi
        for rule, tol in (("gauss", 1e-12), ("midpoint", 1e-3)):
            s = no.SurfaceQuadrature({0: 0.0, 1: 1.0}, {2: (0.3, math.pi - 0.3), 3: (0, 2 * math.pi)}, (64, 64), rule)
            assert no.surface_charge(u, s).value == pytest.approx(exact, rel=tol)


class TestGravity:
    @pytest.mark.parametrize("name", ["minkowski-cartesian", "minkowski-spherical", "schwarzschild"])
    def test_vacuum_certificates(self, scenes, name):
        scene = scenes[name]
        grav = scene.gravity()
        for p in scene.sample_points(10, 4):
            fe = no.tA_field_eq_residuals_at(grav, p)
            assert fe.einstein_norm < 1e-7 and fe.torsion < 1e-9
            assert abs(no.tA_lagrangian_at(grav, p)) < 1e-7

    def test_de_sitter_field_equations(self, scenes):
        scene = scenes["de-sitter-static"]
        lam = scene.constants["Lambda"]
        grav = scene.gravity()
        for p in scene.sample_points(5, 5):
            fe = no.tA_field_eq_residuals_at(grav, p)
            assert np.abs(fe.einstein - lam * scene.frame(p)).max() < 1e-9
            assert fe.torsion < 1e-9

    def test_de_sitter_density_matches_contraction(self, scenes):
        scene = scenes["de-sitter-static"]
        grav = scene.gravity()
        eps = dg.epsilon_symbol(4)
        for p in scene.sample_points(3, 6):
            riem = dg.curvature_at(scene.frame, p).riemann
            e = scene.frame(p)
            oracle = 0.0
            for idx in np.argwhere(eps != 0):
                m_, n_, r_, s_ = idx
                oracle += 0.5 * eps[m_, n_, r_, s_] * np.einsum("ab,c,d,abcd->", riem[:, :, m_, n_], e[:, r_], e[:, s_], eps)
            got = no.tA_lagrangian_at(grav, p)
            assert got == pytest.approx(oracle, rel=1e-12)

    def test_off_shell_connection(self, scenes):
        scene = scenes["schwarzschild"]
        grav = scene.gravity()
        delta = 0.1
        pert = grav.with_connection(grav.connection.perturbed(0, 2, 3, delta))
        for p in scene.sample_points(3, 7):
            assert no.tA_field_eq_residuals_at(pert, p).torsion >= 0.5 * delta

    def test_torsion_matches_finite_differences(self, scenes):
        scene = scenes["schwarzschild"]
        grav = scene.gravity()
        pert = grav.with_connection(grav.connection.perturbed(1, 2, 2, 0.05))
        p = np.array([0.1, 5.0, 1.0, 0.5])
        e = scene.frame(p)
        de = fd_jacobian(scene.frame, p)  # [a, nu, mu]
        gam = pert.connection.jet(p, 0).value
        gm = np.einsum("acm,cb->abm", gam, ETA)
        d_e = np.einsum("anm->amn", de) + np.einsum("abm,bn->amn", gm, e)
        want = np.abs(d_e - np.swapaxes(d_e, 1, 2)).max()
        assert no.torsion_residual(pert, p) == pytest.approx(want, rel=1e-7)


class TestConnectionLieDerivative:
    def test_rigid_generator_on_flat_connection(self):
        gen = ko.GaugeGenerator.from_strings(["0"] * 4, [["0", "1", "0", "0.5"], ["0"] * 4, ["0", "2", "0", "0"],
                                                          ["0"] * 4], CART, 4)
        res = no.connection_lie_derivative_at(gen, no.GravityScene(IDENTITY), [0.1, 0.2, 0.3, 0.4])
        assert not res.value.any() and res.residual == 0

    def test_kosmann_generators_of_killing_fields(self, scenes):
        scene = scenes["schwarzschild"]
        for name in scene.killing:
            gen = no.kosmann_gauge_generator(scene.vectors[name], scene.frame)
            for p in scene.sample_points(3, 8):
                res = no.connection_lie_derivative_at(gen, scene.gravity(), p)
                assert np.abs(res.value).max() < 1e-9 and res.residual < 1e-9

    def test_zero_generator(self, scenes):
        gen = ko.GaugeGenerator.from_strings(["0"] * 4, [["0"] * 4] * 4, CART, 4)
        res = no.connection_lie_derivative_at(gen, scenes["schwarzschild"].gravity(), [0, 5, 1, 0])
        assert not res.value.any()

    def test_forms_agree_for_random_generators(self, scenes):
        rng = np.random.default_rng(9)
        base = random_polynomial_vector(rng, 4, 2, 0.5).components
        lor = np.empty((4, 4), dtype=object)
        for a in range(4):
            lor[a, :] = random_polynomial_vector(rng, 4, 2, 0.5).components.exprs
        gen = ko.GaugeGenerator(base, ExprArray(lor, 4))
        scene = scenes["de-sitter-static"]
        for p in scene.sample_points(5, 9):
            assert no.connection_lie_derivative_at(gen, scene.gravity(), p).residual < 1e-9


class TestSuperpotentials:
    def test_zero_generator(self, scenes):
        assert not no.tA_superpotential_at(scenes["schwarzschild"].gravity(), np.zeros((4, 4)), [0, 5, 1, 0]).U.any()

    def test_constant_boost_generator(self):
        gen = np.zeros((4, 4))
        gen[0, 1], gen[1, 0] = -1.0, 1.0
        u = no.tA_superpotential_at(no.GravityScene(IDENTITY), gen, [0.0] * 4).U
        assert u[0, 1] == pytest.approx(-4.0)

    def test_komar_vanishes_for_flat_translation(self, scenes):
        scene = scenes["minkowski-spherical"]
        for p in scene.sample_points(5, 10):
            assert np.abs(no.komar_superpotential_at(scene.vectors["killing_t"], scene.frame, p).U).max() < 1e-14

    def test_schwarzschild_komar_profile(self, scenes):
        scene = scenes["schwarzschild"]
        for p in scene.sample_points(5, 11):
            r, th = p[1], p[2]
            u = no.komar_superpotential_at(scene.vectors["killing_t"], scene.frame, p)
            # 4 r^2 sin(theta) * M / r^2 with M = 1
            assert u.U[0, 1] == pytest.approx(4 * math.sin(th), rel=1e-12)
            assert u.antisymmetry_residual == 0.0

    def test_tA_with_kosmann_generator_is_minus_komar(self, scenes):
        scene = scenes["schwarzschild"]
        for name in scene.killing:
            xi = scene.vectors[name]
            for p in scene.sample_points(5, 12):
                uk = no.komar_superpotential_at(xi, scene.frame, p).U
                ut = no.tA_superpotential_at(scene.gravity(), no.kosmann_vertical_generator_jet(xi, scene.frame, p), p).U
                assert np.abs(ut + uk).max() < 1e-8

    def test_komar_conservation(self, scenes):
        scene = scenes["schwarzschild"]
        rng = np.random.default_rng(13)
        fields = [scene.vectors["killing_t"], random_polynomial_vector(rng, 4, 2, 0.5)]
        for xi in fields:
            for p in scene.sample_points(5, 13):
                assert abs(no.double_divergence(no.komar_jet(xi, scene.frame, p, 2))) < 1e-6 * max(
                    1.0, np.abs(no.komar_jet(xi, scene.frame, p, 2).coeffs[2]).max())

    def test_komar_charge_radius_independence(self, scenes):
        scene = scenes["schwarzschild"]
        xi = scene.vectors["killing_t"]
        u = lambda p: no.komar_superpotential_at(xi, scene.frame, p).U
        q4 = no.surface_charge(u, sphere(4.0, (64, 128)), scene.domain)
        q8 = no.surface_charge(u, sphere(8.0, (64, 128)), scene.domain)
        assert abs(q4.value / q8.value - 1) < 1e-3
        assert q4.error_estimate < 1e-8


class TestHolst:
    def test_epsilon_lowering_table(self):
        mixed = no.lorentz_epsilon_mixed(ETA)
        eps = dg.epsilon_symbol(4)
        for c, d, a, b in [(0, 1, 2, 3), (2, 3, 0, 1), (1, 3, 0, 2), (0, 0, 1, 2)]:
            assert mixed[c, d, a, b] == ETA[c, c] * ETA[d, d] * eps[c, d, a, b]
        assert mixed[0, 1, 2, 3] == -1.0

    def test_zero_generator(self, scenes):
        h = no.holst_difference_superpotential_at(scenes["schwarzschild"].gravity(), [0, 5, 1, 0],
                                                  generator=np.zeros((4, 4)))
        assert not h.U.any() and not h.divergence.any()

    @pytest.mark.parametrize("name", ["schwarzschild", "de-sitter-static", "minkowski-spherical"])
    def test_kosmann_correction_is_a_divergence_of_a_divergence(self, scenes, name):
        scene = scenes[name]
        rng = np.random.default_rng(14)
        grav = scene.gravity()
        for _ in range(2):
            xi = random_polynomial_vector(rng, 4, 2, 0.5)
            for p in scene.sample_points(4, 14):
                h = no.holst_difference_superpotential_at(grav, p, xi=xi)
                assert abs(h.kosmann_double_divergence) < 1e-7
                assert abs(h.double_divergence) < 1e-7
                assert np.abs(h.divergence).max() < 1e-7
                assert np.abs(h.U + grav.beta * h.kosmann_form).max() < 1e-9

    def test_generic_constant_generator_is_not_conserved(self, scenes):
        scene = scenes["schwarzschild"]
        gen = np.random.default_rng(15).uniform(-1, 1, (4, 4))
        gen = gen - gen.T
        worst = 0.0
        for p in scene.sample_points(5, 15):
            h = no.holst_difference_superpotential_at(scene.gravity(), p, generator=gen)
            worst = max(worst, np.abs(h.divergence).max())
        assert worst > 1e-3

    def test_generator_forms_agree(self, scenes):
        scene = scenes["schwarzschild"]
        xi = scene.vectors["rot_x"]
        p = [0.1, 6.0, 1.0, 0.4]
        kos = no.holst_difference_superpotential_at(scene.gravity(), p, xi=xi)
        jet = no.kosmann_vertical_generator_jet(xi, scene.frame, p, 2)
        via_jet = no.holst_difference_superpotential_at(scene.gravity(), p, generator=jet)
        gen = no.kosmann_gauge_generator(xi, scene.frame)
        assert np.abs(kos.U - via_jet.U).max() < 1e-14
        assert isinstance(jet, Jet) and gen.dim == 4

    def test_needs_four_dimensions(self):
        frame = dg.FrameField.identity(dg.Signature(1, 2))
        with pytest.raises(dg.DimensionError):
            no.holst_difference_superpotential_at(no.GravityScene(frame), [0, 0, 0], generator=np.zeros((3, 3)))
