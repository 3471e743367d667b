"""Lifts of spacetime vector fields to the frame bundles.

The natural lift carries the full Jacobian of a vector field.  The Kosmann
lift keeps only its skew (so(eta)) part as seen through a frame.  It is
computed here along three independent routes:

* ``levi_civita``: the antisymmetrized frame components of nabla xi, minus omega.xi;
* ``frame_covariant``: nabla_b xi^a built from the Lorentz components xi^a = e^a_mu xi^mu;
* ``connection_free``: an expression that uses only e, its inverse and ordinary derivatives.

Agreement between the three is what makes the lift independent of the connection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import jets
from .diffgeo import FrameField, FrameGeometry, mixed
from .exprlang import Expr, Scope, simplify
from .fields import ExprArray
from .jets import Jet, contract


class VectorField:
    """A spacetime vector field xi^mu(x) given by expressions."""

    def __init__(self, components: ExprArray, name: str = ""):
        if len(components.shape) != 1:
            raise ValueError("vector field components must be one-dimensional")
        self.components = components
        self.name = name

    @classmethod
    def from_strings(cls, sources: Sequence, scope: Scope, dim: int, name: str = "") -> "VectorField":
        return cls(ExprArray.parse(list(sources), scope, dim), name)

    @classmethod
    def from_exprs(cls, exprs: Sequence, dim: int, name: str = "") -> "VectorField":
        arr = np.empty(len(exprs), dtype=object)
        arr[:] = list(exprs)
        return cls(ExprArray(arr, dim), name)

    @property
    def dim(self) -> int:
        return self.components.dim

    def __call__(self, p) -> np.ndarray:
        return self.components(p)

    def jet(self, p, order: int) -> Jet:
        return self.components.jet(p, order)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField.from_exprs([simplify(a + b) for a, b in zip(self.exprs, other.exprs)], self.dim)

    def scaled(self, c: float) -> "VectorField":
        return VectorField.from_exprs([simplify(c * a) for a in self.exprs], self.dim)

    @property
    def exprs(self) -> list[Expr]:
        return list(self.components.exprs)

    def strings(self) -> list[str]:
        return self.components.strings()


def vector_commutator(xi: VectorField, zeta: VectorField) -> VectorField:
    """[xi, zeta]^mu = xi^l d_l zeta^mu - zeta^l d_l xi^mu, built symbolically."""
    m = xi.dim
    fx, fz = xi.components.fields, zeta.components.fields
    out = []
    for mu in range(m):
        total = None
        for lam in range(m):
            term = fx[lam].expr * fz[mu].derivative((lam,)) - fz[lam].expr * fx[mu].derivative((lam,))
            total = term if total is None else total + term
        out.append(simplify(total))
    return VectorField.from_exprs(out, m)


def commutator_jet(xi: Jet, zeta: Jet) -> Jet:
    """Jet-level vector commutator; loses one derivative order."""
    return (contract("l,ml->m", xi.truncate(xi.order - 1), zeta.grad())
            - contract("l,ml->m", zeta.truncate(zeta.order - 1), xi.grad()))


# --------------------------------------------------------------------------
# Natural lift and Lie derivative of the metric

@dataclass(frozen=True)
class NaturalLiftAt:
    base: np.ndarray  # xi^mu
    fiber: np.ndarray  # fiber[mu, nu] = d_mu xi^nu


def natural_lift_at(xi: VectorField, p) -> NaturalLiftAt:
    j = xi.jet(p, 1)
    return NaturalLiftAt(j.value.copy(), j.coeffs[1].T.copy())


def lie_metric_jet(xi: Jet, geo: FrameGeometry) -> Jet:
    """(L_xi g)_{mn} = xi^l d_l g_mn + d_m xi^l g_ln + d_n xi^l g_ml."""
    dxi = xi.grad()  # dxi[l, m] = d_m xi^l
    g = geo.g
    k = min(dxi.order, g.order - 1)
    term = contract("lm,ln->mn", dxi.truncate(k), g.truncate(k))
    return contract("l,mnl->mn", xi.truncate(k), g.grad().truncate(k)) + term + contract("mn->nm", term)


def lie_metric_covariant_jet(xi: Jet, geo: FrameGeometry) -> Jet:
    """2 nabla_(m xi_n) with xi_n = g_nl xi^l."""
    k = min(xi.order - 1, geo.order)
    low = contract("nl,l->n", geo.g.truncate(k + 1), xi.truncate(k + 1))
    dlow = low.grad()  # [n, m] = d_m xi_n
    cov = dlow - contract("anm,a->nm", geo.christoffel.truncate(k), low.truncate(k))
    return cov + contract("nm->mn", cov)


def lie_derivative_metric_at(xi: VectorField, frame: FrameField, p, both: bool = False):
    """L_xi g at p; with ``both`` also returns the covariant form 2 nabla_(m xi_n)."""
    geo = frame.geometry(p, 0)
    xj = xi.jet(p, 1)
    direct = lie_metric_jet(xj, geo).value
    if not both:
        return direct
    return direct, lie_metric_covariant_jet(xj, geo).value


def killing_residual(xi: VectorField, frame: FrameField, points: Iterable) -> float:
    res = 0.0
    for p in points:
        res = max(res, float(np.abs(lie_derivative_metric_at(xi, frame, p)).max()))
    return res


def is_killing(xi: VectorField, frame: FrameField, points: Iterable, tol: float = 1e-8) -> bool:
    return killing_residual(xi, frame, points) < tol


# --------------------------------------------------------------------------
# Kosmann lift

def _nabla_vector(xi: Jet, geo: FrameGeometry, k: int) -> Jet:
    """nabla_mu xi^nu as ``[nu, mu]`` (Levi-Civita), jet order k."""
    return xi.grad().truncate(k) + contract("nlm,l->nm", geo.christoffel.truncate(k), xi.truncate(k))


def kosmann_vertical_jet(xi: Jet, geo: FrameGeometry, route: str = "levi_civita") -> Jet:
    """xi_V^{ab} = nabla^[b xi^a] along the requested route (order = xi.order - 1)."""
    k = min(xi.order - 1, geo.order)
    e, eup = geo.e.truncate(k), geo.eup.truncate(k)
    if route == "levi_civita":
        grad = _nabla_vector(xi, geo, k)
        full = contract("an,nm,bm->ab", e, grad, eup)
        return jets.antisym(full)
    if route == "frame_covariant":
        xa = contract("am,m->a", geo.e.truncate(k + 1), xi.truncate(k + 1))
        om = mixed(geo.omega.truncate(k), geo.eta)
        dxa = xa.grad() + contract("acm,c->am", om, xa.truncate(k))  # nabla_mu xi^a
        nabla_b = contract("am,mb->ab", dxa, geo.einv.truncate(k))  # nabla_b xi^a
        raised = contract("ad,bd->ab", nabla_b, geo.eta)  # nabla^b xi^a
        return jets.antisym(raised)
    if route == "connection_free":
        return kosmann_generator_jet(xi, geo, route) + contract("abm,m->ab", geo.omega.truncate(k), xi.truncate(k))
    raise ValueError(f"unknown route {route!r}")


def kosmann_generator_jet(xi: Jet, geo: FrameGeometry, route: str = "levi_civita") -> Jet:
    """xi_K^{ab} = xi_V^{ab} - omega^{ab}_mu xi^mu."""
    k = min(xi.order - 1, geo.order)
    if route == "connection_free":
        # antisym[e^a_n d_m xi^n e^{bm} - e^a_l xi^m d_m e^{bl}]
        e, eup = geo.e.truncate(k), geo.eup.truncate(k)
        t1 = contract("an,nm,bm->ab", e, xi.grad().truncate(k), eup)
        t2 = contract("al,m,blm->ab", e, xi.truncate(k), geo.eup.grad().truncate(k))
        return jets.antisym(t1 - t2)
    vert = kosmann_vertical_jet(xi, geo, route)
    return vert - contract("abm,m->ab", geo.omega.truncate(k), xi.truncate(k))


@dataclass(frozen=True)
class KosmannLiftAt:
    base: np.ndarray  # xi^mu
    generator: np.ndarray  # xi_K^{ab}
    vertical: np.ndarray  # xi_V^{ab} = xi_K^{ab} + omega^{ab}_mu xi^mu
    consistency: float  # max |xi_V - xi_K - omega.xi| between independent routes


def kosmann_lift_at(xi: VectorField, frame: FrameField, p, route: str = "levi_civita") -> KosmannLiftAt:
    geo = frame.geometry(p, 0)
    xj = xi.jet(p, 1)
    gen = kosmann_generator_jet(xj, geo, "connection_free" if route == "levi_civita" else route).value
    vert = kosmann_vertical_jet(xj, geo, route).value
    omega_xi = np.einsum("abm,m->ab", geo.omega.value, xj.value)
    consistency = float(np.abs(vert - gen - omega_xi).max())
    return KosmannLiftAt(xj.value.copy(), gen, vert, consistency)


def kosmann_routes_at(xi: VectorField, frame: FrameField, p) -> dict[str, np.ndarray]:
    """xi_K^{ab} from each of the three routes."""
    geo = frame.geometry(p, 0)
    xj = xi.jet(p, 1)
    return {r: kosmann_generator_jet(xj, geo, r).value for r in ("levi_civita", "frame_covariant", "connection_free")}


# --------------------------------------------------------------------------
# Commutator defect

def so_bracket(a, b, eta):
    """([A, B])^{ab} = A^a_c B^{cb} - B^a_c A^{cb}, A^a_c = A^{ad} eta_dc."""
    return contract("ac,cb->ab", contract("ad,dc->ac", a, eta), b) - contract("ac,cb->ab", contract("ad,dc->ac", b, eta), a)


def lifted_bracket_jet(xi: Jet, xhat: Jet, zeta: Jet, zhat: Jet, eta) -> Jet:
    """Fiber part of the bracket of two generators (xi, xhat), (zeta, zhat).

    xi^m d_m zhat - zeta^m d_m xhat - [xhat, zhat]; the relative minus sign is
    the one for which the Lie derivative is a Lie-algebra homomorphism.
    """
    k = min(xhat.order, zhat.order) - 1
    return (contract("m,abm->ab", xi.truncate(k), zhat.grad().truncate(k))
            - contract("m,abm->ab", zeta.truncate(k), xhat.grad().truncate(k))
            - so_bracket(xhat.truncate(k), zhat.truncate(k), eta))


@dataclass(frozen=True)
class DefectAt:
    lhs: np.ndarray
    rhs: np.ndarray
    residual: float


def kosmann_defect_residual(xi: VectorField, zeta: VectorField, frame: FrameField, p,
                            reading: str = "raised") -> DefectAt:
    """Failure of the Kosmann lift to preserve commutators.

    lhs = lift([xi, zeta]) - [lift xi, lift zeta] and
    rhs = 1/2 skew_ab e^a_al (L_zeta g)^{al lam} (L_xi g)_{lam be} e^{b be}.
    With ``reading="raised"`` the first Lie derivative has its indices raised
    with g; ``"literal"`` uses L_zeta(g^{-1}) = -g^-1 (L_zeta g) g^-1 instead.
    """
    geo = frame.geometry(p, 1)
    xj, zj = xi.jet(p, 2), zeta.jet(p, 2)
    eta = geo.eta
    xhat = kosmann_generator_jet(xj, geo)
    zhat = kosmann_generator_jet(zj, geo)
    bracket = lifted_bracket_jet(xj, xhat, zj, zhat, eta).value
    comm = commutator_jet(xj, zj)
    lhs = kosmann_generator_jet(comm, geo.frame.geometry(p, 0)).value - bracket
    lx = lie_metric_jet(xj.truncate(1), geo).value
    lz = lie_metric_jet(zj.truncate(1), geo).value
    ginv = geo.ginv.value
    lz_up = ginv @ lz @ ginv
    if reading == "literal":
        lz_up = -lz_up
    elif reading != "raised":
        raise ValueError(f"unknown reading {reading!r}")
    full = 0.5 * np.einsum("aA,AL,LB,bB->ab", geo.e.value, lz_up, lx, geo.eup.value)
    rhs = jets.antisym(full)
    return DefectAt(lhs, rhs, float(np.abs(lhs - rhs).max()))


# --------------------------------------------------------------------------
# Gauge generators

class GaugeGenerator:
    """Xi = xi^mu d_mu + xi^{ab} sigma_ab; the Lorentz part is antisymmetrized."""

    def __init__(self, base: ExprArray, lorentz: ExprArray):
        m = base.dim
        if base.shape != (m,) or lorentz.shape != (m, m):
            raise ValueError("generator shapes must be (m,) and (m, m)")
        src = lorentz.exprs
        skew = np.empty((m, m), dtype=object)
        for a in range(m):
            for b in range(m):
                skew[a, b] = simplify(0.5 * (src[a, b] - src[b, a]))
        self.base = base
        self.lorentz = ExprArray(skew, m)

    @classmethod
    def from_strings(cls, base, lorentz, scope: Scope, dim: int) -> "GaugeGenerator":
        return cls(ExprArray.parse(list(base), scope, dim), ExprArray.parse(lorentz, scope, dim))

    @property
    def dim(self) -> int:
        return self.base.dim

    def jets(self, p, order: int) -> tuple[Jet, Jet]:
        return self.base.jet(p, order), self.lorentz.jet(p, order)
