"""Shared oracles and generators for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from lorentzlie.exprlang import (Add, Call, Const, Coord, Div, DomainError, Mul, Neg, Pow, Sub, evaluate)
from lorentzlie.scenes import builtin_scene

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SCENE_NAMES = ("minkowski-cartesian", "minkowski-spherical", "schwarzschild", "de-sitter-static")


@pytest.fixture(scope="session")
def scenes():
    return {name: builtin_scene(name) for name in SCENE_NAMES}


# --------------------------------------------------------------------------
# sympy bridge

_SYMPY_FN = {"sin": sp.sin, "cos": sp.cos, "tan": sp.tan, "exp": sp.exp,
             "log": sp.log, "sqrt": sp.sqrt, "abs": sp.Abs}


def to_sympy(e, xs):
    """Structural translation of an Expr tree into sympy over symbols ``xs``."""
    if isinstance(e, Const):
        return sp.Float(e.value) if e.value != int(e.value) else sp.Integer(int(e.value))
    if isinstance(e, Coord):
        return xs[e.index]
    if isinstance(e, Neg):
        return -to_sympy(e.arg, xs)
    if isinstance(e, Call):
        return _SYMPY_FN[e.fn](to_sympy(e.arg, xs))
    if isinstance(e, Pow):
        return to_sympy(e.base, xs) ** to_sympy(e.exponent, xs)
    ops = {Add: lambda a, b: a + b, Sub: lambda a, b: a - b, Mul: lambda a, b: a * b, Div: lambda a, b: a / b}
    return ops[type(e)](to_sympy(e.left, xs), to_sympy(e.right, xs))


def sympy_symbols(m):
    return sp.symbols(f"x0:{m}", real=True)


# --------------------------------------------------------------------------
# finite differences

def central_fd(f, p, i, h):
    p = np.asarray(p, dtype=float)
    step = np.zeros_like(p)
    step[i] = h
    return (f(p + step) - f(p - step)) / (2.0 * h)


def fd_jacobian(f, p, h=1e-5):
    """Stack of central differences along every coordinate, derivative axis last."""
    cols = [central_fd(f, p, i, h) for i in range(len(p))]
    return np.stack(cols, axis=-1)


# --------------------------------------------------------------------------
# random expressions

_UNARY = ("sin", "cos", "exp", "log", "sqrt")


def random_expr(rng: np.random.Generator, m: int, depth: int):
    if depth == 0 or rng.uniform() < 0.2:
        if rng.uniform() < 0.6:
            return Coord(int(rng.integers(m)))
        return Const(round(float(rng.uniform(0.5, 2.0)), 3))
    kind = rng.integers(7)
    if kind < 4:
        left, right = random_expr(rng, m, depth - 1), random_expr(rng, m, depth - 1)
        return (Add, Sub, Mul, Div)[kind](left, right)
    if kind == 4:
        return Pow(random_expr(rng, m, depth - 1), Const(float(rng.integers(2, 4))))
    if kind == 5:
        return Neg(random_expr(rng, m, depth - 1))
    return Call(str(rng.choice(_UNARY)), random_expr(rng, m, depth - 1))


def well_behaved(e, p, radius=1e-2, bound=1e3):
    """True when ``e`` evaluates to moderate finite values on a small box around ``p``."""
    p = np.asarray(p, dtype=float)
    for corner in (np.zeros_like(p), radius * np.ones_like(p), -radius * np.ones_like(p)):
        try:
            v = evaluate(e, p + corner)
        except (DomainError, OverflowError, ValueError, ZeroDivisionError):
            return False
        if not math.isfinite(v) or abs(v) > bound:
            return False
    return True


def expr_strategy(m: int, max_leaves: int = 12):
    """Hypothesis strategy over Expr trees built from coordinates, constants and the safe functions."""
    leaves = st.one_of(st.integers(0, m - 1).map(Coord),
                       st.floats(-3, 3, allow_nan=False).map(lambda v: Const(round(v, 3))))

    def extend(children):
        binary = st.tuples(st.sampled_from([Add, Sub, Mul]), children, children).map(lambda t: t[0](t[1], t[2]))
        unary = st.tuples(st.sampled_from(["sin", "cos", "abs"]), children).map(lambda t: Call(t[0], t[1]))
        powers = st.tuples(children, st.integers(0, 3)).map(lambda t: Pow(t[0], Const(float(t[1]))))
        return st.one_of(binary, unary, powers, children.map(Neg))

    return st.recursive(leaves, extend, max_leaves=max_leaves)


# --------------------------------------------------------------------------
# acceptance report

def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", ()))
            if rep.when == "call" and "criterion" in props:
                lines.append((props["criterion"], f"{'PASS' if rep.passed else 'FAIL'} criterion {props['criterion']:>2}: "
                                                  f"{props.get('summary', '')}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
