"""Field theories on a frame: Maxwell and tetrad-affine gravity.

Densities carry their weight explicitly (sqrt|g| or e = |det e^a_mu|), so
a conserved current is a vector density E^mu with d_mu E^mu = 0 and a
superpotential is an antisymmetric density with E^mu = d_nu U^{mu nu}.
Charges integrate U over coordinate 2-surfaces.

Form-to-density convention: a 4-form w equals L dx^0 ^ dx^1 ^ dx^2 ^ dx^3,
and curvature two-forms are R^{ab} = 1/2 R^{ab}_{mu nu} dx^mu ^ dx^nu.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from . import jets
from .diffgeo import DimensionError, FrameField, LorentzConnection, curvature_from_jet, epsilon_symbol, mixed
from .exprlang import Scope
from .fields import ExprArray
from .jets import Jet, contract
from .kosmann import GaugeGenerator, VectorField, kosmann_generator_jet, kosmann_vertical_jet


class QuadratureError(ValueError):
    pass


# --------------------------------------------------------------------------
# Maxwell theory

class EMField:
    """A potential A_mu(x); F_{mu nu} = d_mu A_nu - d_nu A_mu."""

    def __init__(self, potential: ExprArray, name: str = ""):
        self.potential = potential
        self.name = name

    @classmethod
    def from_strings(cls, sources, scope: Scope, dim: int, name: str = "") -> "EMField":
        return cls(ExprArray.parse(list(sources), scope, dim), name)

    @property
    def dim(self) -> int:
        return self.potential.dim

    def jet(self, p, order: int) -> Jet:
        return self.potential.jet(p, order)

    def scaled(self, c: float) -> "EMField":
        src = np.empty(self.potential.shape, dtype=object)
        for i, e in enumerate(self.potential.exprs):
            src[i] = c * e
        return EMField(ExprArray(src, self.dim), self.name)


@dataclass
class EMGaugeGenerator:
    """Pair (xi^mu, xi) of a spacetime vector field and a gauge scalar."""

    base: ExprArray
    gauge: ExprArray  # shape ()

    @classmethod
    def from_strings(cls, base, gauge, scope: Scope, dim: int) -> "EMGaugeGenerator":
        return cls(ExprArray.parse(list(base), scope, dim), ExprArray.parse(gauge, scope, dim))


def field_strength_jet(a: Jet) -> Jet:
    da = a.grad()  # da[n, m] = d_m A_n
    return contract("nm->mn", da) - da


def _maxwell_pieces(em: EMField, frame: FrameField, p, order: int):
    geo = frame.geometry(p, max(order - 1, 0))
    f = field_strength_jet(em.jet(p, order + 1))
    ginv = geo.ginv.truncate(order)
    f_up = contract("ma,nb,ab->mn", ginv, ginv, f)
    return geo, f, f_up


def maxwell_lagrangian_jet(em: EMField, frame: FrameField, p, order: int = 0) -> Jet:
    geo, f, f_up = _maxwell_pieces(em, frame, p, order)
    return contract(",mn,mn->", geo.sqrt_g.truncate(order), f, f_up) * -0.25


def maxwell_lagrangian_at(em: EMField, frame: FrameField, p) -> float:
    """-1/4 sqrt|g| F_{mu nu} F^{mu nu}."""
    return float(maxwell_lagrangian_jet(em, frame, p).value)


def em_stress_at(em: EMField, frame: FrameField, p) -> np.ndarray:
    """H_{ab} = F_{ma} F^m_b - 1/4 F^2 g_ab."""
    geo, f, f_up = _maxwell_pieces(em, frame, p, 0)
    f, f_up = f.value, f_up.value
    ginv, g = geo.ginv.value, geo.g.value
    f_mixed = ginv @ f  # F^m_b
    f2 = float(np.einsum("mn,mn->", f, f_up))
    return np.einsum("ma,mb->ab", f, f_mixed) - 0.25 * f2 * g


def maxwell_density_jet(em: EMField, frame: FrameField, p, order: int) -> Jet:
    """sqrt|g| F^{mu nu}."""
    geo, _, f_up = _maxwell_pieces(em, frame, p, order)
    return contract(",mn->mn", geo.sqrt_g.truncate(order), f_up)


def maxwell_residual_at(em: EMField, frame: FrameField, p) -> np.ndarray:
    """d_mu (sqrt|g| F^{mu nu}) for each nu."""
    dens = maxwell_density_jet(em, frame, p, 1)
    return np.einsum("mnm->n", dens.coeffs[1])


def _em_lie_jets(em: EMField, gen: EMGaugeGenerator, p, order: int):
    a = em.jet(p, order + 1)
    xi = gen.base.jet(p, order + 1)
    chi = gen.gauge.jet(p, order + 1)
    return a, xi, chi


def em_lie_derivative_jet(em: EMField, gen: EMGaugeGenerator, p, order: int = 0) -> Jet:
    """xi^l F_{l mu} - d_mu(xi - xi^l A_l)."""
    a, xi, chi = _em_lie_jets(em, gen, p, order)
    f = field_strength_jet(a)
    scalar = chi - contract("l,l->", xi, a)
    return contract("l,lm->m", xi.truncate(order), f) - scalar.grad()


def em_lie_derivative_at(em: EMField, gen: EMGaugeGenerator, frame: FrameField | None, p):
    """Returns (displayed form, direct form xi^l d_l A + d_mu xi^l A_l - d_mu xi, residual)."""
    a, xi, chi = _em_lie_jets(em, gen, p, 0)
    value = em_lie_derivative_jet(em, gen, p, 0).value
    direct = a.coeffs[1] @ xi.value + xi.coeffs[1].T @ a.value - chi.coeffs[1]
    return value, direct, float(np.abs(value - direct).max())


def em_noether_current_jet(em: EMField, gen: EMGaugeGenerator, frame: FrameField, p, order: int = 0) -> Jet:
    """E^mu = -sqrt|g| F^{mu nu} L_Xi A_nu - xi^mu L_M."""
    dens = maxwell_density_jet(em, frame, p, order)
    lie = em_lie_derivative_jet(em, gen, p, order)
    lag = maxwell_lagrangian_jet(em, frame, p, order)
    xi = gen.base.jet(p, order)
    return -contract("mn,n->m", dens, lie) - contract("m,->m", xi, lag)


def em_noether_current_at(em, gen, frame, p) -> np.ndarray:
    return em_noether_current_jet(em, gen, frame, p).value


def em_current_divergence_at(em, gen, frame, p) -> float:
    return float(np.trace(em_noether_current_jet(em, gen, frame, p, 1).coeffs[1]))


def em_superpotential_jet(em: EMField, gen: EMGaugeGenerator, frame: FrameField, p, order: int = 0) -> Jet:
    """U^{mu nu} = sqrt|g| F^{mu nu} (xi - xi^l A_l)."""
    dens = maxwell_density_jet(em, frame, p, order)
    a = em.jet(p, order)
    scalar = gen.gauge.jet(p, order) - contract("l,l->", gen.base.jet(p, order), a)
    return contract("mn,->mn", dens, scalar)


def em_superpotential_at(em, gen, frame, p) -> np.ndarray:
    return em_superpotential_jet(em, gen, frame, p).value


# --------------------------------------------------------------------------
# Tetrad-affine gravity

@dataclass
class GravityScene:
    frame: FrameField
    connection: LorentzConnection | None = None
    beta: float = 1.0

    def __post_init__(self):
        if self.connection is None:
            self.connection = LorentzConnection(self.frame)

    @property
    def dim(self) -> int:
        return self.frame.dim

    def with_connection(self, connection: LorentzConnection) -> "GravityScene":
        return GravityScene(self.frame, connection, self.beta)


def _require_4d(m: int):
    if m != 4:
        raise DimensionError("tetrad-affine densities are defined in dimension 4")


def tA_lagrangian_at(scene: GravityScene, p) -> float:
    """1/2 eps^{mnrs} R^{ab}_{mn} e^c_r e^d_s eps_{abcd}."""
    _require_4d(scene.dim)
    eps = epsilon_symbol(4)
    riem = curvature_from_jet(scene.connection.jet(p, 1), scene.frame.eta).value
    e = scene.frame(p)
    return 0.5 * float(np.einsum("mnrs,abmn,cr,ds,abcd->", eps, riem, e, e, eps))


@dataclass(frozen=True)
class FieldEquationResiduals:
    einstein: np.ndarray  # R^a_mu - 1/2 R e^a_mu
    torsion: float  # max |T^a_{mu nu}|

    @property
    def einstein_norm(self) -> float:
        return float(np.abs(self.einstein).max())


def torsion_residual(scene: GravityScene, p) -> float:
    """Largest component of T^a_{mu nu} = D_mu e^a_nu - D_nu e^a_mu.

    In four dimensions the connection equation D(e^a ^ e^b) = 0 holds exactly when
    this torsion vanishes, and the tensor form keeps the size of an off-shell
    perturbation visible without combinatorial factors.
    """
    geo = scene.frame.geometry(p, 0)
    gam = scene.connection.jet(p, 0).value
    de = geo.e.coeffs[1]  # [a, nu, mu] = d_mu e^a_nu
    d_e = np.transpose(de, (0, 2, 1)) + np.einsum("abm,bn->amn", mixed(gam, geo.eta), geo.e.value)
    return float(np.abs(d_e - np.swapaxes(d_e, 1, 2)).max())


def tA_field_eq_residuals_at(scene: GravityScene, p) -> FieldEquationResiduals:
    geo = scene.frame.geometry(p, 0)
    riem = curvature_from_jet(scene.connection.jet(p, 1), geo.eta).value
    einv = geo.einv.value
    ricci = np.einsum("abmn,nb->am", riem, einv)
    scalar = float(np.einsum("abmn,ma,nb->", riem, einv, einv))
    einstein = ricci - 0.5 * scalar * geo.e.value
    return FieldEquationResiduals(einstein, torsion_residual(scene, p))


def _lorentz_covariant_pair(x: Jet, gam: Jet, eta) -> Jet:
    """D_nu X^{ab} = d_nu X^{ab} + Gamma^a_{c nu} X^{cb} + Gamma^b_{c nu} X^{ac}."""
    k = min(x.order - 1, gam.order)
    gm = mixed(gam.truncate(k), eta)
    xx = x.truncate(k)
    return x.grad().truncate(k) + contract("acn,cb->abn", gm, xx) + contract("bcn,ac->abn", gm, xx)


@dataclass(frozen=True)
class ConnectionLieAt:
    value: np.ndarray  # xi^l R^{ab}_{l nu} + D_nu xhat^{ab}
    direct: np.ndarray  # xi^l d_l Gamma + d_nu xi^l Gamma_l + D_nu xi^{ab}
    residual: float


def connection_lie_derivative_at(gen: GaugeGenerator, scene: GravityScene, p) -> ConnectionLieAt:
    eta = scene.frame.eta
    gam = scene.connection.jet(p, 1)
    xi, xab = gen.jets(p, 1)
    xhat = xab + contract("l,abl->ab", xi, gam)
    riem = curvature_from_jet(gam, eta).value
    value = np.einsum("l,abln->abn", xi.value, riem) + _lorentz_covariant_pair(xhat, gam, eta).value
    direct = (np.einsum("l,abnl->abn", xi.value, gam.coeffs[1]) + np.einsum("ln,abl->abn", xi.coeffs[1], gam.value)
              + _lorentz_covariant_pair(xab, gam, eta).value)
    return ConnectionLieAt(value, direct, float(np.abs(value - direct).max()))


def kosmann_gauge_generator(xi: VectorField, frame: FrameField) -> "KosmannGenerator":
    return KosmannGenerator(xi, frame)


class KosmannGenerator:
    """Gauge generator (xi^mu, xi_K^{ab}) whose Lorentz part is evaluated from the frame."""

    def __init__(self, xi: VectorField, frame: FrameField):
        self.xi = xi
        self.frame = frame

    @property
    def dim(self) -> int:
        return self.xi.dim

    def jets(self, p, order: int):
        geo = self.frame.geometry(p, order)
        xj = self.xi.jet(p, order + 1)
        return xj.truncate(order), kosmann_generator_jet(xj, geo)


@dataclass(frozen=True)
class SuperpotentialAt:
    U: np.ndarray

    @property
    def antisymmetry_residual(self) -> float:
        return float(np.abs(self.U + self.U.T).max())


def tA_superpotential_jet(scene: GravityScene, generator: Jet, p) -> Jet:
    """4 e e_a^mu e_b^nu xhat^{ab}."""
    geo = scene.frame.geometry(p, max(generator.order - 1, 0))
    k = min(generator.order, geo.einv.order)
    einv = geo.einv.truncate(k)
    return contract(",ma,nb,ab->mn", geo.sqrt_g.truncate(k), einv, einv, generator.truncate(k)) * 4.0


def tA_superpotential_at(scene: GravityScene, generator, p) -> SuperpotentialAt:
    """``generator`` is xhat^{ab} = xi^{ab} + xi^l Gamma^{ab}_l as an array or jet."""
    if not isinstance(generator, Jet):
        generator = Jet([np.asarray(generator, dtype=float)], scene.dim)
    return SuperpotentialAt(tA_superpotential_jet(scene, generator, p).value)


def kosmann_vertical_generator_jet(xi: VectorField, frame: FrameField, p, order: int = 0) -> Jet:
    """Kosmann xhat^{ab} = xi_K^{ab} + omega^{ab}_l xi^l = nabla^[b xi^a]."""
    geo = frame.geometry(p, order)
    return kosmann_vertical_jet(xi.jet(p, order + 1), geo)


def komar_jet(xi: VectorField, frame: FrameField, p, order: int = 0) -> Jet:
    """4 e nabla^[mu xi^nu] with the Levi-Civita connection."""
    geo = frame.geometry(p, order)
    xj = xi.jet(p, order + 1)
    nab = xj.grad().truncate(order) + contract("nlm,l->nm", geo.christoffel.truncate(order), xj.truncate(order))
    up = contract("ml,nl->mn", geo.ginv.truncate(order), nab)  # nabla^mu xi^nu
    return jets.antisym(up) * geo.sqrt_g.truncate(order) * 4.0


def komar_superpotential_at(xi: VectorField, frame: FrameField, p) -> SuperpotentialAt:
    return SuperpotentialAt(komar_jet(xi, frame, p).value)


def superpotential_divergence(u: Jet) -> np.ndarray:
    """E^mu = d_nu U^{mu nu} at the jet's point."""
    return np.einsum("mnn->m", u.coeffs[1])


def double_divergence(u: Jet) -> float:
    return float(np.einsum("mnmn->", u.coeffs[2]))


# --------------------------------------------------------------------------
# Holst correction

def lorentz_epsilon_mixed(eta) -> np.ndarray:
    """eps^{cd}_{ab} = eta^{ce} eta^{df} eps_{efab}."""
    eps = epsilon_symbol(len(eta))
    return np.einsum("ce,df,efab->cdab", eta, eta, eps)


@dataclass(frozen=True)
class HolstAt:
    U: np.ndarray  # beta e e_c^mu e_d^nu eps^{cd}_{ab} xhat^{ab}
    divergence: np.ndarray  # d_nu U^{mu nu}
    double_divergence: float
    kosmann_form: np.ndarray | None = None  # e eps^{mu nu}_{rho sigma} nabla^rho xi^sigma
    kosmann_double_divergence: float | None = None


def holst_difference_jet(scene: GravityScene, generator: Jet, p) -> Jet:
    _require_4d(scene.dim)
    geo = scene.frame.geometry(p, max(generator.order - 1, 0))
    k = min(generator.order, geo.einv.order)
    einv = geo.einv.truncate(k)
    epsm = lorentz_epsilon_mixed(geo.eta)
    return contract(",mc,nd,cdab,ab->mn", geo.sqrt_g.truncate(k), einv, einv, epsm, generator.truncate(k)) * scene.beta


def kosmann_holst_form_jet(xi: VectorField, frame: FrameField, p, order: int) -> Jet:
    """e eps^{mu nu}_{rho sigma} nabla^rho xi^sigma, reduced to c eps^{mu nu k l} d_k xi_l.

    The Levi-Civita tensor density e eps^{mu nu k l} equals c times the symbol,
    c = det(eta) sign(det e), and nabla_[k xi_l] = d_[k xi_l].
    """
    _require_4d(frame.dim)
    geo = frame.geometry(p, order)
    xj = xi.jet(p, order + 1)
    low = contract("lm,m->l", geo.g.truncate(order + 1), xj)
    c = float(np.linalg.det(geo.eta)) * float(np.sign(np.linalg.det(geo.e.value)))
    return contract("mnkl,lk->mn", epsilon_symbol(4), low.grad()) * c


def holst_difference_superpotential_at(scene: GravityScene, p, generator=None, xi: VectorField | None = None) -> HolstAt:
    """Holst minus tetrad-affine superpotential.

    Give either an explicit ``generator`` xhat^{ab} (array, jet or
    GaugeGenerator) or a vector field ``xi`` for the Kosmann lift; in the
    latter case the reduced Kosmann form is returned as well.
    """
    _require_4d(scene.dim)
    if xi is not None:
        gen = kosmann_vertical_generator_jet(xi, scene.frame, p, 2)
    elif isinstance(generator, GaugeGenerator):
        base, xab = generator.jets(p, 2)
        gen = xab + contract("l,abl->ab", base, scene.connection.jet(p, 2))
    elif isinstance(generator, Jet):
        gen = generator
    else:
        gen = Jet.constant(np.asarray(generator, dtype=float), scene.dim, 2)
    u = holst_difference_jet(scene, gen, p)
    div = superpotential_divergence(u)
    ddiv = double_divergence(u) if u.order >= 2 else float("nan")
    if xi is None:
        return HolstAt(u.value, div, ddiv)
    form = kosmann_holst_form_jet(xi, scene.frame, p, 2)
    return HolstAt(u.value, div, ddiv, form.value, double_divergence(form))


# --------------------------------------------------------------------------
# Surface charges

@dataclass
class SurfaceQuadrature:
    """A coordinate 2-surface: two frozen coordinates, two integrated ranges."""

    frozen: Mapping[int, float]
    ranges: Mapping[int, tuple[float, float]]
    nodes: tuple[int, int] = (16, 16)
    rule: str = "gauss"

    def __post_init__(self):
        if len(self.frozen) != 2 or len(self.ranges) != 2:
            raise QuadratureError("a surface needs two frozen and two integrated coordinates")
        if set(self.frozen) & set(self.ranges):
            raise QuadratureError("a coordinate cannot be both frozen and integrated")
        if min(self.nodes) < 8:
            raise QuadratureError("node counts must be at least 8")
        if self.rule not in ("gauss", "midpoint"):
            raise QuadratureError(f"unknown rule {self.rule!r}")
        for lo, hi in self.ranges.values():
            if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
                raise QuadratureError(f"invalid range [{lo}, {hi}]")

    @property
    def pair(self) -> tuple[int, int]:
        a, b = sorted(self.frozen)
        return a, b

    @property
    def integrated(self) -> tuple[int, int]:
        a, b = sorted(self.ranges)
        return a, b

    def check_domain(self, domain: Sequence[tuple[float, float]]):
        for i, v in self.frozen.items():
            lo, hi = domain[i]
            if not lo <= v <= hi:
                raise QuadratureError(f"frozen coordinate x{i} = {v} outside [{lo}, {hi}]")
        for i, (a, b) in self.ranges.items():
            lo, hi = domain[i]
            if a < lo - 1e-12 or b > hi + 1e-12:
                raise QuadratureError(f"range of x{i} leaves the chart domain")

    def points_weights(self, nodes: tuple[int, int] | None = None):
        nodes = nodes or self.nodes
        i, j = self.integrated
        xs, wx = _rule(self.rule, nodes[0], *self.ranges[i])
        ys, wy = _rule(self.rule, nodes[1], *self.ranges[j])
        m = 1 + max(list(self.frozen) + list(self.ranges))
        pts, wts = [], []
        for x, a in zip(xs, wx):
            for y, b in zip(ys, wy):
                p = np.zeros(m)
                for k, v in self.frozen.items():
                    p[k] = v
                p[i], p[j] = x, y
                pts.append(p)
                wts.append(a * b)
        return pts, np.array(wts)


def _rule(rule: str, n: int, lo: float, hi: float):
    if rule == "gauss":
        x, w = np.polynomial.legendre.leggauss(n)
    else:
        x = -1 + (2 * np.arange(n) + 1) / n
        w = np.full(n, 2.0 / n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1), w * half


@dataclass(frozen=True)
class ChargeResult:
    value: float
    error_estimate: float
    nodes: tuple[int, int]


def _pairwise_sum(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    while len(x) > 1:
        if len(x) % 2:
            x = np.append(x, 0.0)
        x = x[0::2] + x[1::2]
    return float(x[0]) if len(x) else 0.0


def surface_charge(U: Callable, surface: SurfaceQuadrature, domain=None) -> ChargeResult:
    """Q = integral of U^{mu nu} over the surface, (mu, nu) the frozen pair.

    The error estimate compares against the rule with half the nodes.
    """
    if domain is not None:
        surface.check_domain(domain)
    mu, nu = surface.pair

    def integrate(nodes):
        pts, wts = surface.points_weights(nodes)
        vals = np.array([U(p)[mu, nu] for p in pts])
        return _pairwise_sum(vals * wts)

    value = integrate(surface.nodes)
    coarse = tuple(max(2, n // 2) for n in surface.nodes)
    err = abs(value - integrate(coarse))
    return ChargeResult(value, err, tuple(surface.nodes))


def gauss_charge(em: EMField, gen: EMGaugeGenerator, frame: FrameField, surface: SurfaceQuadrature, domain=None):
    """Charge of U = sqrt|g| F^{mu nu} xi over the surface plus the Maxwell residual there."""

    def u(p):
        dens = maxwell_density_jet(em, frame, p, 0).value
        return dens * gen.gauge(p)

    charge = surface_charge(u, surface, domain)
    pts, _ = surface.points_weights((4, 4))
    res = max(float(np.abs(maxwell_residual_at(em, frame, p)).max()) for p in pts)
    return charge, res
