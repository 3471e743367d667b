"""Lorentz tensors and their Lie derivatives.

A Lorentz tensor of rank (p, q) has p upper and q lower Lorentz indices,
stored as an array of shape ``(m,) * (p + q)`` with upper slots first.
Generators xi^{ab} of so(eta) act slot by slot:

    upper slot:  + xi^a_c t^{..c..}
    lower slot:  - xi^c_b t_{..c..}          with xi^a_c = xi^{ad} eta_dc

and the Lie derivative along Xi = (xi^mu, xi^{ab}) is
xi^mu d_mu t - action(xi^{ab}, t).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .diffgeo import FrameField, FrameGeometry, mixed
from .exprlang import Scope
from .fields import ExprArray
from .jets import Jet, contract
from .kosmann import (GaugeGenerator, VectorField, commutator_jet, kosmann_generator_jet,
                      kosmann_vertical_jet, lie_metric_jet, lifted_bracket_jet)


class SceneMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Representation:
    """Tensor power of the defining representation: p upper, q lower slots."""

    p: int
    q: int
    m: int = 4

    def __post_init__(self):
        if self.p < 0 or self.q < 0 or self.p + self.q > 4:
            raise ValueError(f"unsupported rank ({self.p}, {self.q})")

    @property
    def rank(self) -> int:
        return self.p + self.q

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m,) * self.rank

    @property
    def size(self) -> int:
        return self.m ** self.rank


class LorentzTensorField:
    def __init__(self, rep: Representation, components: ExprArray, name: str = ""):
        if components.shape != rep.shape:
            raise ValueError(f"components shape {components.shape} does not match rank ({rep.p}, {rep.q})")
        self.rep = rep
        self.components = components
        self.name = name

    @classmethod
    def from_strings(cls, rank, sources, scope: Scope, dim: int, name: str = "") -> "LorentzTensorField":
        rep = Representation(rank[0], rank[1], dim)
        src = np.asarray(sources, dtype=object).reshape(rep.shape) if rep.rank else np.asarray(sources, dtype=object)
        return cls(rep, ExprArray.parse(src, scope, dim), name)

    @classmethod
    def constant(cls, rank, values, dim: int) -> "LorentzTensorField":
        rep = Representation(rank[0], rank[1], dim)
        return cls(rep, ExprArray(np.asarray(values, dtype=float).reshape(rep.shape), dim))

    def __call__(self, p) -> np.ndarray:
        return self.components(p)

    def jet(self, p, order: int) -> Jet:
        return self.components.jet(p, order)


def _slot_specs(n: int):
    src = jets.letters(n)
    (dummy,) = jets.letters(1, skip=src)
    return src, dummy


def generator_action(xi, t, upper: int, lower: int, eta):
    """so(eta) action of xi^{ab} on a rank (upper, lower) tensor; arrays or jets."""
    n = upper + lower
    if n == 0:
        return t * 0.0
    xm = contract("ad,dc->ac", xi, eta)
    src, c = _slot_specs(n)
    out = None
    for slot in range(n):
        replaced = src[:slot] + c + src[slot + 1:]
        if slot < upper:
            term = contract(f"{src[slot]}{c},{replaced}->{src}", xm, t)
        else:
            term = -contract(f"{c}{src[slot]},{replaced}->{src}", xm, t)
        out = term if out is None else out + term
    return out


class GeneratorBasis:
    """sigma_ab on the defining representation, (sigma_ab)^c_d = 1/2(d^c_a eta_bd - d^c_b eta_ad).

    With this normalization xi^{ab} sigma_ab reproduces xi^c_d.
    """

    def __init__(self, eta):
        self.eta = np.asarray(eta, dtype=float)
        m = len(self.eta)
        delta = np.eye(m)
        self.sigma = 0.5 * (np.einsum("ca,bd->abcd", delta, self.eta) - np.einsum("cb,ad->abcd", delta, self.eta))

    def matrix(self, xi) -> np.ndarray:
        return np.einsum("ab,abcd->cd", xi, self.sigma)

    def structure_residual(self) -> float:
        """max |[sigma_ab, sigma_cd] - (sum of eta * sigma)| over all index values."""
        s, eta = self.sigma, self.eta
        comm = np.einsum("abij,cdjk->abcdik", s, s) - np.einsum("cdij,abjk->abcdik", s, s)
        # [S_ab, S_cd] = 1/2(eta_bc S_ad - eta_ac S_bd - eta_bd S_ac + eta_ad S_bc)
        expect = 0.5 * (np.einsum("bc,adik->abcdik", eta, s) - np.einsum("ac,bdik->abcdik", eta, s)
                        - np.einsum("bd,acik->abcdik", eta, s) + np.einsum("ad,bcik->abcdik", eta, s))
        return float(np.abs(comm - expect).max())


# --------------------------------------------------------------------------
# Lie derivatives on jets

def gauge_lie_jet(xi: Jet, xhat: Jet, t: Jet, upper: int, lower: int, eta) -> Jet:
    """xi^mu d_mu t - action(xhat, t); output order = min(t.order - 1, xi.order, xhat.order)."""
    k = min(t.order - 1, xi.order, xhat.order)
    n = upper + lower
    src, mu = _slot_specs(n)
    transport = contract(f"{mu},{src}{mu}->{src}", xi.truncate(k), t.grad().truncate(k))
    return transport - generator_action(xhat.truncate(k), t.truncate(k), upper, lower, eta)


def lorentz_covariant_jet(t: Jet, connection: Jet, upper: int, lower: int, eta) -> Jet:
    """nabla_mu t = d_mu t + action(Gamma_mu, t); new index last."""
    k = min(t.order - 1, connection.order)
    n = upper + lower
    dt = t.grad().truncate(k)
    if n == 0:
        return dt
    src, mu = _slot_specs(n)
    tt = t.truncate(k)
    per_mu = [generator_action(connection.truncate(k)[:, :, i], tt, upper, lower, eta) for i in range(connection.shape[-1])]
    return dt + Jet.stack(per_mu, axis=n)


def gauge_lie_covariant_jet(xi: Jet, xhat: Jet, t: Jet, geo: FrameGeometry, upper: int, lower: int) -> Jet:
    """xi^mu nabla_mu t - action(xhat + omega.xi, t) using the frame spin connection."""
    k = min(t.order - 1, xi.order, xhat.order, geo.order)
    n = upper + lower
    src, mu = _slot_specs(n)
    cov = lorentz_covariant_jet(t.truncate(k + 1), geo.omega.truncate(k), upper, lower, geo.eta)
    vert = xhat.truncate(k) + contract("abm,m->ab", geo.omega.truncate(k), xi.truncate(k))
    return (contract(f"{mu},{src}{mu}->{src}", xi.truncate(k), cov)
            - generator_action(vert, t.truncate(k), upper, lower, geo.eta))


def kosmann_lie_jet(xi: Jet, t: Jet, geo: FrameGeometry, upper: int, lower: int) -> Jet:
    return gauge_lie_jet(xi, kosmann_generator_jet(xi, geo), t, upper, lower, geo.eta)


# --------------------------------------------------------------------------
# Pointwise API

@dataclass(frozen=True)
class LieDerivativeAt:
    value: np.ndarray
    alternate: np.ndarray  # independently computed form
    residual: float


def gauge_lie_derivative_at(gen: GaugeGenerator, t: LorentzTensorField, frame: FrameField, p) -> LieDerivativeAt:
    geo = frame.geometry(p, 0)
    xi, xhat = gen.jets(p, 0)
    tj = t.jet(p, 1)
    up, lo = t.rep.p, t.rep.q
    direct = gauge_lie_jet(xi, xhat, tj, up, lo, frame.eta).value
    cov = gauge_lie_covariant_jet(xi, xhat, tj, geo, up, lo).value
    return LieDerivativeAt(direct, cov, float(np.abs(direct - cov).max()) if direct.size else 0.0)


def kosmann_lie_derivative_at(xi: VectorField, t: LorentzTensorField, frame: FrameField, p) -> LieDerivativeAt:
    """Lie derivative along the Kosmann lift of xi.

    The alternate value is the covariant form; for rank (1, 0) it is written
    as xi^d nabla_d v^a - xi_V^{ac} v_c.
    """
    geo = frame.geometry(p, 0)
    xj = xi.jet(p, 1)
    tj = t.jet(p, 1)
    up, lo = t.rep.p, t.rep.q
    xhat = kosmann_generator_jet(xj, geo)
    direct = gauge_lie_jet(xj, xhat, tj, up, lo, geo.eta).value
    if (up, lo) == (1, 0):
        alt = _closed_form_vector(xj, tj, geo).value
    else:
        alt = gauge_lie_covariant_jet(xj, xhat, tj, geo, up, lo).value
    return LieDerivativeAt(direct, alt, float(np.abs(direct - alt).max()) if direct.size else 0.0)


def _closed_form_vector(xi: Jet, v: Jet, geo: FrameGeometry) -> Jet:
    cov = lorentz_covariant_jet(v, geo.omega, 1, 0, geo.eta).truncate(0)
    vert = kosmann_vertical_jet(xi, geo).truncate(0)
    v_low = contract("c,cd->d", v.truncate(0), geo.eta)
    return contract("d,ad->a", xi.truncate(0), cov) - contract("ac,c->a", vert, v_low)


def killing_closed_form_vector_at(xi: VectorField, v: LorentzTensorField, frame: FrameField, p) -> np.ndarray:
    """nabla_d(xi^d v^a) - nabla_c xi^a v^c; equals the Kosmann Lie derivative when xi is Killing."""
    geo = frame.geometry(p, 0)
    xj, vj = xi.jet(p, 1), v.jet(p, 1)
    cov_v = lorentz_covariant_jet(vj, geo.omega, 1, 0, geo.eta).value  # [a, mu]
    nabla_xi = xj.coeffs[1] + np.einsum("nlm,l->nm", geo.christoffel.value, xj.value)  # [nu, mu]
    div = np.trace(nabla_xi)
    nabla_c_xi_a = np.einsum("an,nm,mc->ac", geo.e.value, nabla_xi, geo.einv.value)
    return cov_v @ xj.value + div * vj.value - nabla_c_xi_a @ vj.value


# --------------------------------------------------------------------------
# Frame transport

def frame_transport(direction: str, tensor, frame: FrameField, p, upper: int, lower: int) -> np.ndarray:
    """Move every index between coordinate and Lorentz frames.

    ``to_lorentz`` maps t^{mu..}_{nu..} to e^a_mu ... e_b^nu ...;
    ``to_spacetime`` is its inverse.
    """
    geo = frame.geometry(p, 0)
    return _transport(direction, np.asarray(tensor, dtype=float), geo.e.value, geo.einv.value, upper, lower)


def _swap(x):
    return x.transpose(1, 0) if isinstance(x, Jet) else x.T


def _transport(direction, t, e, einv, upper, lower):
    if direction == "to_lorentz":
        up_m, lo_m = e, _swap(einv)  # v^a = e^a_mu v^mu ; w_b = e_b^nu w_nu
    elif direction == "to_spacetime":
        up_m, lo_m = einv, _swap(e)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    n = upper + lower
    src, c = _slot_specs(n)
    out = t
    for slot in range(n):
        replaced = src[:slot] + c + src[slot + 1:]
        mat = up_m if slot < upper else lo_m
        out = contract(f"{src[slot]}{c},{replaced}->{src}", mat, out)
    return out


def transport_jet(t: Jet, geo: FrameGeometry, upper: int, lower: int) -> Jet:
    """Jet version of ``to_lorentz``."""
    k = min(t.order, geo.e.order)
    return _transport("to_lorentz", t.truncate(k), geo.e.truncate(k), geo.einv.truncate(k), upper, lower)


# --------------------------------------------------------------------------
# Identities

@dataclass(frozen=True)
class FrameLieAt:
    direct: np.ndarray  # L_xi e^a_mu from the gauge-natural formula
    covariant: np.ndarray  # same from xi^l nabla_l e + nabla_mu xi^l e - xi_V e
    metric_form: np.ndarray  # 1/2 (L_xi g)_{mu l} e^{a l}
    residual: float


def frame_lie_jet(xi: Jet, geo: FrameGeometry) -> Jet:
    """L_xi e^a_mu = xi^l d_l e^a_mu + d_mu xi^l e^a_l - xi_K^a_c e^c_mu."""
    xhat = kosmann_generator_jet(xi, geo)
    k = min(xhat.order, geo.e.order - 1)
    e = geo.e.truncate(k)
    return (contract("l,aml->am", xi.truncate(k), geo.e.grad().truncate(k))
            + contract("lm,al->am", xi.grad().truncate(k), e)
            - contract("ad,dc,cm->am", xhat.truncate(k), geo.eta, e))


def frame_lie_derivative_at(xi: VectorField, frame: FrameField, p) -> FrameLieAt:
    geo = frame.geometry(p, 0)
    xj = xi.jet(p, 1)
    direct = frame_lie_jet(xj, geo).value
    e, eup, eta = geo.e.value, geo.eup.value, geo.eta
    # nabla_l e^a_m = d_l e^a_m + omega^a_{cl} e^c_m - Gamma^n_{ml} e^a_n  (vanishes identically)
    nabla_e = (geo.e.coeffs[1] + np.einsum("acl,cm->aml", mixed(geo.omega.value, eta), e)
               - np.einsum("nml,an->aml", geo.christoffel.value, e))
    nabla_xi = xj.coeffs[1] + np.einsum("nlm,l->nm", geo.christoffel.value, xj.value)  # [l, mu]
    vert = kosmann_vertical_jet(xj, geo).value
    covariant = (np.einsum("l,aml->am", xj.value, nabla_e) + np.einsum("lm,al->am", nabla_xi, e)
                 - np.einsum("ac,cm->am", vert @ eta, e))
    lg = lie_metric_jet(xj, geo).value
    metric_form = 0.5 * np.einsum("ml,al->am", lg, eup)
    res = max(np.abs(direct - metric_form).max(), np.abs(covariant - metric_form).max())
    return FrameLieAt(direct, covariant, metric_form, float(res))


def frame_lie_derivative_identity_residual(xi: VectorField, frame: FrameField, p) -> float:
    return frame_lie_derivative_at(xi, frame, p).residual


def vector_transport_identity_residual(xi: VectorField, v: VectorField, frame: FrameField, p) -> float:
    """L_xi (e^a_mu v^mu) against [xi, v]^mu e^a_mu + (L_xi e^a_mu) v^mu."""
    geo = frame.geometry(p, 0)
    xj, vj = xi.jet(p, 1), v.jet(p, 1)
    va = transport_jet(vj, geo, 1, 0)
    lhs = kosmann_lie_jet(xj, va, geo, 1, 0).value
    bracket = commutator_jet(xj, vj).value
    rhs = geo.e.value @ bracket + frame_lie_jet(xj, geo).value @ vj.value
    return float(np.abs(lhs - rhs).max())


@dataclass(frozen=True)
class NaturalityDefectAt:
    lhs: np.ndarray  # L_[xi,zeta] v
    commutator: np.ndarray  # [L_xi, L_zeta] v
    defect: np.ndarray  # quarter-defect term
    residual: float


def vector_naturality_defect_at(xi: VectorField, zeta: VectorField, v: LorentzTensorField,
                                frame: FrameField, p) -> NaturalityDefectAt:
    if (v.rep.p, v.rep.q) != (1, 0):
        raise ValueError("the defect formula is for Lorentz vectors")
    geo = frame.geometry(p, 1)
    geo0 = frame.geometry(p, 0)
    xj, zj, vj = xi.jet(p, 2), zeta.jet(p, 2), v.jet(p, 2)
    comm = commutator_jet(xj, zj)
    lhs = kosmann_lie_jet(comm, vj, geo0, 1, 0).value
    lz_v = kosmann_lie_jet(zj, vj, geo, 1, 0)
    lx_v = kosmann_lie_jet(xj, vj, geo, 1, 0)
    commutator = (kosmann_lie_jet(xj.truncate(1), lz_v, geo0, 1, 0).value
                  - kosmann_lie_jet(zj.truncate(1), lx_v, geo0, 1, 0).value)
    lx = lie_metric_jet(xj.truncate(1), geo0).value
    lz = lie_metric_jet(zj.truncate(1), geo0).value
    ginv, eup = geo0.ginv.value, geo0.eup.value
    v_sp = geo0.einv.value @ vj.value  # v^alpha = e_c^alpha v^c
    # the term is antisymmetric under lx <-> lz; writing it that way makes xi = zeta give exactly zero
    defect = 0.25 * (np.einsum("A,BR,aS,RS,AB->a", v_sp, ginv, eup, lx, lz)
                     - np.einsum("A,BR,aS,RS,AB->a", v_sp, ginv, eup, lz, lx))
    res = float(np.abs(lhs - commutator - defect).max())
    return NaturalityDefectAt(lhs, commutator, defect, res)


def vector_naturality_defect_residual(xi, zeta, v, frame, p) -> float:
    return vector_naturality_defect_at(xi, zeta, v, frame, p).residual


def gauge_bracket_jets(g1: GaugeGenerator, g2: GaugeGenerator, p, order: int, eta):
    """Base commutator and fiber bracket of two generators, as jets of ``order``."""
    x1, h1 = g1.jets(p, order + 1)
    x2, h2 = g2.jets(p, order + 1)
    return commutator_jet(x1, x2), lifted_bracket_jet(x1, h1, x2, h2, eta)


def gauge_naturality_residual(g1: GaugeGenerator, g2: GaugeGenerator, t: LorentzTensorField,
                              frame: FrameField, p) -> float:
    """max |[L_Xi1, L_Xi2] t - L_[Xi1,Xi2] t|."""
    eta = frame.eta
    up, lo = t.rep.p, t.rep.q
    tj = t.jet(p, 2)
    x1, h1 = g1.jets(p, 1)
    x2, h2 = g2.jets(p, 1)
    inner2 = gauge_lie_jet(x2, h2, tj, up, lo, eta)
    inner1 = gauge_lie_jet(x1, h1, tj, up, lo, eta)
    left = (gauge_lie_jet(x1.truncate(0), h1.truncate(0), inner2, up, lo, eta)
            - gauge_lie_jet(x2.truncate(0), h2.truncate(0), inner1, up, lo, eta)).value
    base, fiber = gauge_bracket_jets(g1, g2, p, 0, eta)
    right = gauge_lie_jet(base, fiber, tj, up, lo, eta).value
    return float(np.abs(left - right).max())


def plane_generator(a: int, b: int, dim: int = 4, signature_r: int = 1) -> VectorField:
    """Killing field of flat space for the (a, b) plane.

    Boost planes (a timelike, b spacelike) give x^b d_a + x^a d_b and
    rotation planes give x^a d_b - x^b d_a.
    """
    comps = ["0"] * dim
    if (a < signature_r) != (b < signature_r):
        comps[a], comps[b] = f"x{b}", f"x{a}"
    else:
        comps[a], comps[b] = f"-x{b}", f"x{a}"
    return VectorField.from_strings(comps, Scope(dim=dim), dim, name=f"plane{a}{b}")


@dataclass(frozen=True)
class BoostReport:
    lie: np.ndarray  # from the Kosmann Lie derivative
    expected: np.ndarray  # -lambda^a_b v^b with lambda^a_b = d_b xi^a
    residual: float


def boost_transformation_check(v, plane: tuple[int, int], frame: FrameField, p, xi: VectorField | None = None) -> BoostReport:
    """Infinitesimal Lorentz transformation of a constant Lorentz vector."""
    if not frame.is_identity():
        raise SceneMismatch("the boost check needs the identity frame on flat space")
    m = frame.dim
    if xi is None:
        xi = plane_generator(*plane, m, frame.signature.r)
    vec = LorentzTensorField.constant((1, 0), v, m)
    lie = kosmann_lie_derivative_at(xi, vec, frame, p).value
    lam = xi.jet(p, 1).coeffs[1]  # lam[a, b] = d_b xi^a
    expected = -lam @ np.asarray(v, dtype=float)
    return BoostReport(lie, expected, float(np.abs(lie - expected).max()))
