"""Frames, induced metrics, Levi-Civita and spin connections, curvature.

Index conventions used throughout the package:

* ``e[a, mu]`` is the frame e^a_mu (row = Lorentz index).
* ``einv[mu, a]`` is the inverse frame e_a^mu, ``eup[a, mu]`` is
  e^{a mu} = eta^{ab} e_b^mu.
* ``christoffel[alpha, beta, mu]`` is Gamma^alpha_{beta mu}.
* ``omega[a, b, mu]`` is omega^{ab}_mu, and curvature ``R[a, b, mu, nu]``
  is R^{ab}_{mu nu}.
* Derivative axes of jets are always appended last, so ``x.grad()[..., mu]``
  is the partial derivative along coordinate ``mu``.

Lorentz indices are moved with eta and Greek indices with g; the helpers
here are the only place where either happens.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import jets
from .exprlang import Scope
from .fields import ExprArray
from .jets import Jet, contract

SINGULAR_TOL = 1e-12


class SingularFrame(ValueError):
    def __init__(self, point, det=None):
        self.point = tuple(float(x) for x in point)
        self.det = det
        super().__init__(f"frame is singular at {self.point} (det = {det})")


class SingularMetric(SingularFrame):
    pass


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Signature:
    """Counts of +1 and -1 entries of eta; the +1 entries come first."""

    r: int
    s: int

    def __post_init__(self):
        if self.r < 0 or self.s < 0 or self.r + self.s < 2:
            raise ValueError(f"invalid signature ({self.r}, {self.s})")

    @property
    def m(self) -> int:
        return self.r + self.s

    @property
    def eta(self) -> np.ndarray:
        return np.diag([1.0] * self.r + [-1.0] * self.s)


LORENTZIAN = Signature(1, 3)


# --------------------------------------------------------------------------
# Frames

class FrameField:
    """An m x m array of expressions e^a_mu(x) together with eta."""

    def __init__(self, components: ExprArray, signature: Signature):
        if components.shape != (signature.m, signature.m):
            raise DimensionError(f"frame shape {components.shape} does not match signature {signature}")
        self.components = components
        self.signature = signature
        self.eta = signature.eta
        self._cache: dict = {}

    @classmethod
    def from_strings(cls, sources, scope: Scope, signature: Signature = LORENTZIAN) -> "FrameField":
        return cls(ExprArray.parse(sources, scope, signature.m), signature)

    @classmethod
    def identity(cls, signature: Signature = LORENTZIAN) -> "FrameField":
        return cls(ExprArray(np.eye(signature.m), signature.m), signature)

    @property
    def dim(self) -> int:
        return self.signature.m

    def __call__(self, p) -> np.ndarray:
        return self.components(p)

    def jet(self, p, order: int) -> Jet:
        return self.components.jet(p, order)

    def geometry(self, p, order: int = 1) -> "FrameGeometry":
        """Frame-derived quantities at ``p`` whose connection jets have ``order``."""
        key = (tuple(float(x) for x in p), order)
        geo = self._cache.get(key)
        if geo is None:
            if len(self._cache) > 256:
                self._cache.clear()
            geo = self._cache[key] = FrameGeometry(self, p, order)
        return geo

    def is_identity(self) -> bool:
        target = np.eye(self.dim)
        for idx in np.ndindex(self.components.shape):
            expr = self.components.fields[idx].expr
            if getattr(expr, "value", None) != target[idx]:
                return False
        return True


class FrameGeometry:
    """All frame-induced data at one point.

    ``order`` is the derivative order carried by the connection jets; the
    frame itself is expanded one order higher and curvature one lower.
    """

    def __init__(self, frame: FrameField, p, order: int = 1):
        self.frame = frame
        self.point = np.asarray(p, dtype=float)
        self.order = order
        eta = frame.eta
        self.eta = eta
        e = frame.jet(p, order + 1)
        sign, logdet = np.linalg.slogdet(e.value)
        det = sign * np.exp(logdet)
        if abs(det) < SINGULAR_TOL:
            raise SingularFrame(p, det)
        self.e = e
        self.einv = jets.inv(e)
        self.eup = contract("ab,mb->am", eta, self.einv)
        self.g = contract("am,ab,bn->mn", e, eta, e)
        self.ginv = contract("ma,ab,nb->mn", self.einv, eta, self.einv)
        ld = jets.logabsdet(e, self.einv)
        self.det_e = jets.exp(ld) * float(sign)
        self.sqrt_g = jets.exp(ld)  # |det g| = det(e)^2 since |det eta| = 1
        self.christoffel = christoffel_from_jets(self.g, self.ginv)
        raw = (contract("ax,xym,by->abm", e.truncate(order), self.christoffel, self.eup.truncate(order))
               + contract("ax,bxm->abm", e.truncate(order), self.eup.grad()))
        self.omega_antisymmetry_residual = float(np.abs(raw.value + np.swapaxes(raw.value, 0, 1)).max())
        self.omega = jets.antisym(raw)

    def curvature(self) -> Jet:
        return curvature_from_jet(self.omega, self.eta)


def christoffel_from_jets(g: Jet, ginv: Jet) -> Jet:
    """Gamma^a_{bm} = 1/2 g^{al} (d_b g_lm + d_m g_lb - d_l g_bm)."""
    dg = g.grad()  # dg[l, m, b] = d_b g_{lm}
    t = contract("lmb->lbm", dg) + dg - contract("bml->lbm", dg)
    return contract("al,lbm->abm", ginv.truncate(dg.order), t) * 0.5


def raise_lorentz(x, eta, axis: int = 0):
    """Contract the Lorentz axis ``axis`` of ``x`` with eta (eta is its own inverse)."""
    n = len(x.shape)
    idx = jets.letters(n + 1)
    src = idx[:n]
    out = src[:axis] + idx[n] + src[axis + 1:]
    return contract(f"{src[axis]}{idx[n]},{src}->{out}", eta, x)


lower_lorentz = raise_lorentz


def mixed(omega, eta):
    """omega^a_{c mu} = omega^{ad}_mu eta_{dc} (second index lowered)."""
    return contract("adm,dc->acm", omega, eta)


def curvature_from_jet(w: Jet, eta) -> Jet:
    """R^{ab}_{mn} = d_m w^{ab}_n - d_n w^{ab}_m + w^a_{cm} w^{cb}_n - w^a_{cn} w^{cb}_m."""
    dw = w.grad()  # dw[a, b, n, m] = d_m w^{ab}_n
    wl = mixed(w.truncate(dw.order), eta)
    wk = w.truncate(dw.order)
    quad = contract("acm,cbn->abmn", wl, wk)
    return (contract("abnm->abmn", dw) - dw) + (quad - contract("abmn->abnm", quad))


def covariant_derivative(t: Jet, christoffel: Jet, upper: int, lower: int) -> Jet:
    """Levi-Civita derivative of a Greek tensor t^{up...}_{low...}; the new index is last."""
    n = upper + lower
    if len(t.shape) != n:
        raise DimensionError(f"tensor has {len(t.shape)} slots, expected {n}")
    dt = t.grad()
    gam = christoffel.truncate(dt.order)
    tt = t.truncate(dt.order)
    src = jets.letters(n)
    mu, dummy = jets.letters(2, skip=src)
    result = dt
    for slot in range(n):
        replaced = src[:slot] + dummy + src[slot + 1:]
        if slot < upper:
            spec = f"{src[slot]}{dummy}{mu},{replaced}->{src}{mu}"
            result = result + contract(spec, gam, tt)
        else:
            spec = f"{dummy}{src[slot]}{mu},{replaced}->{src}{mu}"
            result = result - contract(spec, gam, tt)
    return result


# --------------------------------------------------------------------------
# Public pointwise operations

@dataclass(frozen=True)
class MetricAt:
    g: np.ndarray
    ginv: np.ndarray
    sqrt_abs_det: float


@dataclass(frozen=True)
class SpinConnectionAt:
    omega: np.ndarray
    antisymmetry_residual: float


@dataclass(frozen=True)
class CurvatureAt:
    riemann: np.ndarray  # R^{ab}_{mu nu}
    ricci: np.ndarray | None  # R^a_mu = R^{ab}_{mu nu} e_b^nu
    scalar: float | None  # R^{ab}_{mu nu} e_a^mu e_b^nu


def induced_metric(frame: FrameField, p) -> MetricAt:
    geo = frame.geometry(p, 0)
    return MetricAt(geo.g.value.copy(), geo.ginv.value.copy(), float(geo.sqrt_g.value))


def _metric_jets(metric, p, order):
    if isinstance(metric, FrameField):
        geo = metric.geometry(p, order)
        return geo.g, geo.ginv
    g = metric.jet(p, order + 1)
    if abs(np.linalg.det(g.value)) < SINGULAR_TOL:
        raise SingularMetric(p, np.linalg.det(g.value))
    return g, jets.inv(g)


def christoffel_at(metric, p) -> np.ndarray:
    """Christoffel symbols of a frame's induced metric or of an explicit metric ExprArray."""
    g, ginv = _metric_jets(metric, p, 0)
    return christoffel_from_jets(g, ginv).value


def spin_connection_at(frame: FrameField, p) -> SpinConnectionAt:
    geo = frame.geometry(p, 0)
    return SpinConnectionAt(geo.omega.value.copy(), geo.omega_antisymmetry_residual)


def frame_compatibility_residual(frame: FrameField, p, christoffel=None, omega=None) -> float:
    """max |d_m e_a^n + Gamma^n_{lm} e_a^l - omega^c_{am} e_c^n|."""
    geo = frame.geometry(p, 0)
    gam = geo.christoffel.value if christoffel is None else np.asarray(christoffel)
    om = geo.omega.value if omega is None else np.asarray(omega)
    einv = geo.einv.value
    deinv = geo.einv.coeffs[1]  # [n, a, m]
    om_mixed = np.einsum("cdm,da->cam", om, geo.eta)
    res = deinv + np.einsum("nlm,la->nam", gam, einv) - np.einsum("cam,nc->nam", om_mixed, einv)
    return float(np.abs(res).max())


def covariant_derivative_at(t: ExprArray, metric, p, upper: int, lower: int) -> np.ndarray:
    """nabla_mu t with one Christoffel term per index (new index last)."""
    g, ginv = _metric_jets(metric, p, 0)
    gam = christoffel_from_jets(g, ginv)
    return covariant_derivative(t.jet(p, 1), gam, upper, lower).value


def metricity_residual(metric, p) -> float:
    """max |nabla_mu g_{ab}| of the Levi-Civita connection."""
    g, ginv = _metric_jets(metric, p, 0)
    gam = christoffel_from_jets(g, ginv)
    return float(np.abs(covariant_derivative(g, gam, 0, 2).value).max())


class LorentzConnection:
    """A dynamical Lorentz connection Gamma^{ab}_mu.

    It is the spin connection of ``frame`` plus an optional antisymmetrized
    ``offset``; with ``frame=None`` the offset alone is the connection.
    """

    def __init__(self, frame: FrameField | None = None, offset: ExprArray | None = None, dim: int | None = None):
        if frame is None and offset is None:
            raise ValueError("need a frame, an offset, or both")
        self.frame = frame
        self.offset = offset
        self.dim = frame.dim if frame is not None else offset.dim

    @property
    def induced(self) -> bool:
        return self.offset is None

    def jet(self, p, order: int) -> Jet:
        out = None
        if self.frame is not None:
            out = self.frame.geometry(p, order).omega
        if self.offset is not None:
            off = jets.antisym(self.offset.jet(p, order))
            out = off if out is None else out + off
        return out

    def perturbed(self, a: int, b: int, mu: int, delta: float) -> "LorentzConnection":
        m = self.dim
        arr = np.zeros((m, m, m))
        arr[a, b, mu] += delta
        arr[b, a, mu] -= delta
        if self.offset is not None:
            base = self.offset.exprs
            src = np.empty(arr.shape, dtype=object)
            for idx in np.ndindex(arr.shape):
                src[idx] = base[idx] + float(arr[idx])
            return LorentzConnection(self.frame, ExprArray(src, m))
        # offsets are antisymmetrized when evaluated, so store twice the skew part
        return LorentzConnection(self.frame, ExprArray(arr, m))


def curvature_at(connection, p, frame: FrameField | None = None) -> CurvatureAt:
    """Curvature of a Lorentz connection (or of a frame's spin connection)."""
    if isinstance(connection, FrameField):
        frame = connection
        connection = LorentzConnection(frame)
    if frame is None:
        frame = connection.frame
    eta = frame.eta if frame is not None else np.eye(connection.dim)
    riem = curvature_from_jet(connection.jet(p, 1), eta).value
    if frame is None:
        return CurvatureAt(riem, None, None)
    einv = frame.geometry(p, 0).einv.value
    ricci = np.einsum("abmn,nb->am", riem, einv)
    scalar = float(np.einsum("abmn,ma,nb->", riem, einv, einv))
    return CurvatureAt(riem, ricci, scalar)


def first_bianchi_residual(connection, p, frame: FrameField) -> float:
    """max |R^a_{[rho mu nu]}| with R^a_{rho mu nu} = R^a_{b mu nu} e^b_rho."""
    cur = curvature_at(connection, p, frame)
    e = frame(p)
    r = np.einsum("abmn,bc,cr->armn", cur.riemann, frame.eta, e)
    total = np.zeros_like(r)
    for perm in itertools.permutations(range(3)):
        total += _perm_sign(perm) * np.transpose(r, (0,) + tuple(1 + i for i in perm))
    return float(np.abs(total / 6.0).max())


def _perm_sign(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def epsilon(indices: Sequence[int], dim: int = 4) -> int:
    """Totally antisymmetric symbol with epsilon(0, 1, ..., dim-1) = +1."""
    if dim != 4 or len(indices) != 4:
        raise DimensionError("the epsilon symbol is only used in dimension 4")
    if any(not 0 <= i < dim for i in indices) or len(set(indices)) < len(indices):
        return 0
    return _perm_sign(indices)


def epsilon_symbol(dim: int = 4) -> np.ndarray:
    if dim != 4:
        raise DimensionError("the epsilon symbol is only used in dimension 4")
    eps = np.zeros((dim,) * dim)
    for perm in itertools.permutations(range(dim)):
        eps[perm] = _perm_sign(perm)
    return eps
