"""Arrays of expressions that evaluate to jets at chart points."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .exprlang import CompiledField, Const, Expr, Scope, parse_expr, to_string
from .jets import Jet


class ExprArray:
    """An n-dimensional array of :class:`CompiledField` over an m-dim chart."""

    def __init__(self, exprs, dim: int):
        arr = np.empty(np.shape(exprs), dtype=object) if np.ndim(exprs) else np.empty((), dtype=object)
        src = np.asarray(exprs, dtype=object)
        for idx in np.ndindex(src.shape):
            e = src[idx]
            if not isinstance(e, Expr):
                e = Const(float(e))
            arr[idx] = CompiledField(e, dim)
        self.fields = arr
        self.dim = dim

    @classmethod
    def parse(cls, sources, scope: Scope, dim: int) -> "ExprArray":
        src = np.asarray(sources, dtype=object)
        exprs = np.empty(src.shape, dtype=object)
        for idx in np.ndindex(src.shape):
            s = src[idx]
            exprs[idx] = parse_expr(s, scope) if isinstance(s, str) else Const(float(s))
        return cls(exprs, dim)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.fields.shape

    @property
    def exprs(self) -> np.ndarray:
        out = np.empty(self.shape, dtype=object)
        for idx in np.ndindex(self.shape):
            out[idx] = self.fields[idx].expr
        return out

    def strings(self):
        """Nested lists of printed expressions (round-trippable through parse)."""
        out = np.empty(self.shape, dtype=object)
        for idx in np.ndindex(self.shape):
            out[idx] = to_string(self.fields[idx].expr)
        return out.tolist()

    def __call__(self, p: Sequence[float]) -> np.ndarray:
        out = np.empty(self.shape)
        for idx in np.ndindex(self.shape):
            out[idx] = self.fields[idx](p)
        return out

    def jet(self, p: Sequence[float], order: int) -> Jet:
        m = self.dim
        coeffs = [np.empty(self.shape + (m,) * k) for k in range(order + 1)]
        for idx in np.ndindex(self.shape):
            taylor = self.fields[idx].taylor(p, order)
            for k in range(order + 1):
                coeffs[k][idx] = taylor[k]
        return Jet(coeffs, m)

    def __repr__(self):
        return f"ExprArray(shape={self.shape}, dim={self.dim})"
