"""Exact derivative propagation at a point.

A :class:`Jet` stores an array-valued quantity at one chart point together
with all of its partial derivatives up to a fixed order, ``coeffs[k]``
having shape ``shape + (m,) * k``.  Products, inverses and elementwise
functions follow the Leibniz / Faa di Bruno rules, so quantities built from
symbolic field derivatives stay exact (up to rounding) through inverses,
Christoffel symbols, connections and curvature.
"""

from __future__ import annotations

import itertools
import string

import numpy as np

_DERIV_LETTERS = "PQRSTUVW"  # reserved einsum letters for derivative axes


class Jet:
    __slots__ = ("coeffs", "dim")

    def __init__(self, coeffs, dim: int):
        self.coeffs = tuple(np.asarray(c, dtype=float) for c in coeffs)
        self.dim = int(dim)

    @classmethod
    def constant(cls, value, dim: int, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        return cls([value] + [np.zeros(value.shape + (dim,) * k) for k in range(1, order + 1)], dim)

    @classmethod
    def from_value_and_grad(cls, value, grad: "Jet") -> "Jet":
        return cls((np.asarray(value, dtype=float),) + grad.coeffs, grad.dim)

    @classmethod
    def stack(cls, jets, axis: int = 0) -> "Jet":
        order = min(j.order for j in jets)
        coeffs = [np.stack([j.coeffs[k] for j in jets], axis=axis) for k in range(order + 1)]
        return cls(coeffs, jets[0].dim)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs[0].shape

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError(f"jet of order {self.order} cannot supply order {order}")
        return Jet(self.coeffs[: order + 1], self.dim)

    def grad(self) -> "Jet":
        """Jet of the gradient; the new last shape axis is the derivative index."""
        if self.order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        return Jet(self.coeffs[1:], self.dim)

    def __getitem__(self, idx) -> "Jet":
        return Jet([c[idx] for c in self.coeffs], self.dim)

    def transpose(self, *axes) -> "Jet":
        n = len(self.shape)
        out = []
        for k, c in enumerate(self.coeffs):
            out.append(np.transpose(c, tuple(axes) + tuple(range(n, n + k))))
        return Jet(out, self.dim)

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(np.broadcast_to(np.asarray(other, float), self.shape), self.dim, self.order)

    def __add__(self, other):
        other = self._coerce(other)
        k = min(self.order, other.order)
        return Jet([a + b for a, b in zip(self.coeffs[: k + 1], other.coeffs[: k + 1])], self.dim)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Jet([-c for c in self.coeffs], self.dim)

    def __mul__(self, scalar):
        if isinstance(scalar, Jet):
            if scalar.shape == ():
                return contract("...,->...", self, scalar)
            if self.shape == ():
                return contract(",...->...", self, scalar)
            raise TypeError("use contract() for products of non-scalar jets")
        return Jet([c * scalar for c in self.coeffs], self.dim)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, Jet):
            return self * reciprocal(scalar)
        return Jet([c / scalar for c in self.coeffs], self.dim)

    def __repr__(self):
        return f"Jet(shape={self.shape}, order={self.order}, dim={self.dim})"


def _split(spec: str):
    ins, out = spec.split("->")
    return ins.split(","), out


def contract(spec: str, *operands):
    """``np.einsum`` over jets (and plain arrays treated as constants).

    Only explicit index letters from ``a-z`` (and a leading ``...``) may be
    used; the result carries derivatives up to the smallest operand order.
    """
    in_specs, out = _split(spec)
    if len(in_specs) != len(operands):
        raise ValueError("spec/operand count mismatch")
    jet_pos = [i for i, op in enumerate(operands) if isinstance(op, Jet)]
    if not jet_pos:
        return np.einsum(spec, *operands)
    order = min(operands[i].order for i in jet_pos)
    dim = operands[jet_pos[0]].dim
    coeffs = []
    for k in range(order + 1):
        letters = _DERIV_LETTERS[:k]
        total = None
        # distribute each derivative axis over the jet operands (Leibniz)
        for assign in itertools.product(range(len(jet_pos)), repeat=k):
            subs, args = [], []
            for idx, op in enumerate(operands):
                if isinstance(op, Jet):
                    which = jet_pos.index(idx)
                    mine = "".join(letters[d] for d in range(k) if assign[d] == which)
                    args.append(op.coeffs[len(mine)])
                    subs.append(in_specs[idx] + mine)
                else:
                    args.append(np.asarray(op, dtype=float))
                    subs.append(in_specs[idx])
            term = np.einsum(",".join(subs) + "->" + out + letters, *args)
            total = term if total is None else total + term
        coeffs.append(total)
    return Jet(coeffs, dim)


def apply(u: Jet, derivs) -> Jet:
    """Elementwise ``f(u)`` given ``derivs = [f(u0), f'(u0), f''(u0), f'''(u0)]``."""
    c = u.coeffs
    K = u.order
    if K > 3:
        raise NotImplementedError("elementwise composition implemented to third order")
    out = [np.asarray(derivs[0], float)]
    if K >= 1:
        f1 = np.asarray(derivs[1], float)
        out.append(f1[..., None] * c[1])
    if K >= 2:
        f2 = np.asarray(derivs[2], float)
        out.append(f2[..., None, None] * np.einsum("...i,...j->...ij", c[1], c[1])
                   + f1[..., None, None] * c[2])
    if K >= 3:
        f3 = np.asarray(derivs[3], float)
        mixed = (np.einsum("...ij,...k->...ijk", c[2], c[1])
                 + np.einsum("...ik,...j->...ijk", c[2], c[1])
                 + np.einsum("...jk,...i->...ijk", c[2], c[1]))
        out.append(f3[..., None, None, None] * np.einsum("...i,...j,...k->...ijk", c[1], c[1], c[1])
                   + f2[..., None, None, None] * mixed
                   + f1[..., None, None, None] * c[3])
    return Jet(out, u.dim)


def exp(u: Jet) -> Jet:
    v = np.exp(u.value)
    return apply(u, [v, v, v, v])


def reciprocal(u: Jet) -> Jet:
    v = u.value
    return apply(u, [1 / v, -1 / v**2, 2 / v**3, -6 / v**4])


def inv(a: Jet) -> Jet:
    """Inverse of a square-matrix jet, solved order by order from A B = I."""
    b0 = np.linalg.inv(a.value)
    coeffs = [b0]
    for k in range(1, a.order + 1):
        letters = _DERIV_LETTERS[:k]
        rhs = np.zeros_like(a.coeffs[k])
        for mask in itertools.product((0, 1), repeat=k):
            if not any(mask):
                continue  # the A0 B_k term is what we solve for
            la = "".join(letters[d] for d in range(k) if mask[d])
            lb = "".join(letters[d] for d in range(k) if not mask[d])
            rhs = rhs + np.einsum(f"ij{la},jk{lb}->ik{letters}", a.coeffs[len(la)], coeffs[len(lb)])
        coeffs.append(-np.einsum(f"ij,jk{letters}->ik{letters}", b0, rhs))
    return Jet(coeffs, a.dim)


def logabsdet(a: Jet, a_inv: Jet | None = None) -> Jet:
    """``log|det A|`` via its gradient ``tr(A^-1 dA)``."""
    _, value = np.linalg.slogdet(a.value)
    if a.order == 0:
        return Jet([value], a.dim)
    if a_inv is None:
        a_inv = inv(a)
    grad = contract("ab,bai->i", a_inv.truncate(a.order - 1), a.grad())
    return Jet.from_value_and_grad(value, grad)


def antisym(t: Jet | np.ndarray, i: int = 0, j: int = 1):
    """Weight-1/2 skew part over shape axes ``i, j``."""
    if isinstance(t, Jet):
        n = len(t.shape)
        axes = list(range(n))
        axes[i], axes[j] = axes[j], axes[i]
        return (t - t.transpose(*axes)) * 0.5
    return 0.5 * (t - np.swapaxes(t, i, j))


def sym(t: Jet | np.ndarray, i: int = 0, j: int = 1):
    if isinstance(t, Jet):
        n = len(t.shape)
        axes = list(range(n))
        axes[i], axes[j] = axes[j], axes[i]
        return (t + t.transpose(*axes)) * 0.5
    return 0.5 * (t + np.swapaxes(t, i, j))


def letters(n: int, skip: str = "") -> str:
    """First ``n`` lowercase einsum letters not in ``skip``."""
    pool = [c for c in string.ascii_lowercase if c not in skip]
    return "".join(pool[:n])
