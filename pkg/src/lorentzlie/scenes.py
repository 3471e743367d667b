"""Scene documents: a chart, a frame, and named fields living on it.

A scene is described by a JSON object::

    {"name": ..., "dimension": 4, "signature": [1, 3],
     "coordinates": ["t", "r", "theta", "phi"],
     "domain": [[lo, hi], ...], "constants": {"M": 1.0},
     "frame": [[expr, ...], ...],
     "vectors": {name: [expr, ...]},
     "tensors": {name: {"rank": [p, q], "space": "lorentz" | "spacetime", "components": [...]}},
     "em": {name: {"A": [expr, ...]}},
     "beta": 1.0, "seed": 0,
     "killing": [vector names], "vacuum": true, "cosmological_constant": 0}

Domain bounds may be numbers or constant expressions such as ``"pi - 0.3"``.
The last three keys are optional certificates: ``killing`` lists fields
claimed to be Killing, ``vacuum`` claims the frame solves the vacuum field
equations, and ``cosmological_constant`` claims R^a_mu - R e^a_mu / 2 = L e^a_mu.
"""

from __future__ import annotations

import copy
import itertools
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .diffgeo import FrameField, Signature, SingularFrame
from .exprlang import Const, Coord, LexError, ParseError, Scope, evaluate, parse_expr, simplify
from .fields import ExprArray
from .kosmann import VectorField
from .lorentz import LorentzTensorField, Representation
from .noether import EMField, GravityScene


class UnknownScene(KeyError):
    pass


class SchemaError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class SceneParseError(SchemaError):
    def __init__(self, path: str, error: Exception):
        self.position = getattr(error, "position", None)
        self.error = error
        super().__init__(path, str(error))


@dataclass
class SpacetimeTensorField:
    rank: tuple[int, int]
    components: ExprArray
    name: str = ""

    def __call__(self, p):
        return self.components(p)

    def jet(self, p, order):
        return self.components.jet(p, order)


@dataclass
class Scene:
    name: str
    signature: Signature
    coordinates: list[str]
    domain: list[tuple[float, float]]
    constants: dict[str, float]
    frame: FrameField
    vectors: dict[str, VectorField] = field(default_factory=dict)
    tensors: dict[str, Any] = field(default_factory=dict)
    em: dict[str, EMField] = field(default_factory=dict)
    beta: float = 1.0
    seed: int = 0
    killing: list[str] = field(default_factory=list)
    vacuum: bool = False
    cosmological_constant: float | None = None
    document: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.signature.m

    @property
    def scope(self) -> Scope:
        return Scope(tuple(self.coordinates), dict(self.constants), self.dim)

    def gravity(self) -> GravityScene:
        return GravityScene(self.frame, beta=self.beta)

    def sample_points(self, n: int, seed: int | None = None) -> np.ndarray:
        """``n`` points uniform in the domain box, from ``seed`` (default: the scene seed)."""
        rng = np.random.default_rng(self.seed if seed is None else seed)
        lo = np.array([d[0] for d in self.domain])
        hi = np.array([d[1] for d in self.domain])
        return lo + (hi - lo) * rng.random((n, self.dim))

    def contains(self, p, slack: float = 1e-12) -> bool:
        return all(lo - slack <= x <= hi + slack for x, (lo, hi) in zip(p, self.domain))

    def vector(self, name: str) -> VectorField:
        try:
            return self.vectors[name]
        except KeyError:
            raise SchemaError(f"vectors.{name}", "no such vector field") from None

    def fingerprint(self) -> str:
        return fingerprint(self.document)


def fingerprint(document: Mapping) -> str:
    blob = json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode()).hexdigest()


# --------------------------------------------------------------------------
# Built-in catalog

def _diag(entries) -> list[list]:
    m = len(entries)
    return [[entries[i] if i == j else 0 for j in range(m)] for i in range(m)]


def _minkowski_cartesian() -> dict:
    vectors = {f"trans{i}": ["1" if j == i else "0" for j in range(4)] for i in range(4)}
    names = ["t", "x", "y", "z"]
    for i, j in ((1, 2), (1, 3), (2, 3)):
        comp = ["0"] * 4
        comp[i], comp[j] = f"-{names[j]}", names[i]
        vectors[f"rot{i}{j}"] = comp
    for i in (1, 2, 3):
        comp = ["0"] * 4
        comp[0], comp[i] = names[i], "t"
        vectors[f"boost0{i}"] = comp
    killing = list(vectors)
    vectors.update({
        "dilation": ["t", "x", "y", "z"],
        "poly_a": ["t*x", "0", "0", "0"],
        "poly_b": ["x^2 + 0.5*t*y", "t*z - y", "0.3*x*y", "z^2 - t"],
        "poly_c": ["y*z", "t^2 + x", "0.7*x*t - z", "0.2*y^2"],
    })
    return {
        "name": "minkowski-cartesian",
        "dimension": 4,
        "signature": [1, 3],
        "coordinates": names,
        "domain": [[-1, 1]] * 4,
        "constants": {"E": 1.0},
        "frame": _diag(["1", "1", "1", "1"]),
        "vectors": vectors,
        "tensors": {
            "v_time": {"rank": [1, 0], "space": "lorentz", "components": ["1", "0", "0", "0"]},
            "v_poly": {"rank": [1, 0], "space": "lorentz", "components": ["t*x", "y + 1", "z*t", "x^2"]},
            "t_mixed": {"rank": [1, 1], "space": "lorentz",
                        "components": [[f"{a + 1}*x + {b}*t*y" for b in range(4)] for a in range(4)]},
            "eta_low": {"rank": [0, 2], "space": "lorentz", "components": _diag(["1", "-1", "-1", "-1"])},
        },
        "em": {
            "uniform": {"A": ["-E*x", "0", "0", "0"]},
            "wave": {"A": ["0", "0", "sin(t - z)", "0"]},
        },
        "beta": 1.0,
        "seed": 0,
        "killing": killing,
        "vacuum": True,
    }


_SPHERICAL_ROTATIONS = {
    "rot_x": ["0", "0", "-sin(phi)", "-cos(theta)/sin(theta)*cos(phi)"],
    "rot_y": ["0", "0", "cos(phi)", "-cos(theta)/sin(theta)*sin(phi)"],
    "rot_z": ["0", "0", "0", "1"],
}

_SPHERICAL_DOMAIN = [[-1, 1], None, [0.3, "pi - 0.3"], [0, "2*pi"]]


def _static_spherical(name, f_expr, r_range, constants, vacuum, extra_vectors, em=None) -> dict:
    vectors = {"killing_t": ["1", "0", "0", "0"], **_SPHERICAL_ROTATIONS}
    killing = list(vectors)
    vectors.update(extra_vectors)
    domain = list(_SPHERICAL_DOMAIN)
    domain[1] = list(r_range)
    if f_expr == "1":
        frame = _diag(["1", "1", "r", "r*sin(theta)"])
    else:
        frame = _diag([f"sqrt({f_expr})", f"1/sqrt({f_expr})", "r", "r*sin(theta)"])
    return {
        "name": name,
        "dimension": 4,
        "signature": [1, 3],
        "coordinates": ["t", "r", "theta", "phi"],
        "domain": domain,
        "constants": constants,
        "frame": frame,
        "vectors": vectors,
        "tensors": {
            "v_radial": {"rank": [1, 0], "space": "spacetime", "components": ["0", "1", "0", "0"]},
            "v_poly": {"rank": [1, 0], "space": "lorentz", "components": ["t*r", "theta", "phi*t", "r"]},
        },
        "em": em or {},
        "beta": 1.0,
        "seed": 0,
        "killing": killing,
        "vacuum": vacuum,
    }


_POLY_SPHERICAL = {
    "poly_a": ["r*t + theta^2", "0.3*t*phi", "r*phi", "t^2 - r"],
    "poly_b": ["phi*r", "theta*t", "0.2*r^2", "t*theta"],
    "poly_c": ["t^2", "r*theta", "0.1*t*phi", "phi - theta*r"],
    "poly_d": ["0.5*r", "t*phi + 1", "theta", "0.05*r^2*t"],
    "poly_e": ["theta*phi", "0.1*r^2", "t*theta", "r"],
}


def _minkowski_spherical() -> dict:
    return _static_spherical("minkowski-spherical", "1", [0.5, 5], {"q": 1.0}, True, _POLY_SPHERICAL,
                             em={"coulomb": {"A": ["q/r", "0", "0", "0"]}})


def _schwarzschild() -> dict:
    return _static_spherical("schwarzschild", "1 - 2*M/r", ["3*M", "20*M"], {"M": 1.0}, True, _POLY_SPHERICAL)


def _de_sitter() -> dict:
    doc = _static_spherical("de-sitter-static", "1 - Lambda*r^2/3", [0.5, 4], {"Lambda": 0.1}, False, _POLY_SPHERICAL)
    doc["cosmological_constant"] = "Lambda"
    return doc


BUILTIN_DOCUMENTS = {
    "minkowski-cartesian": _minkowski_cartesian,
    "minkowski-spherical": _minkowski_spherical,
    "schwarzschild": _schwarzschild,
    "de-sitter-static": _de_sitter,
}


def builtin_document(name: str) -> dict:
    try:
        return BUILTIN_DOCUMENTS[name]()
    except KeyError:
        raise UnknownScene(name) from None


def builtin_scene(name: str) -> Scene:
    return load_scene(builtin_document(name))


# --------------------------------------------------------------------------
# Loading

_KNOWN_KEYS = {"name", "dimension", "signature", "coordinates", "domain", "constants", "frame", "vectors",
               "tensors", "em", "beta", "seed", "killing", "vacuum", "cosmological_constant"}


def _parse(source, scope: Scope, path: str):
    if isinstance(source, bool) or not isinstance(source, (str, int, float)):
        raise SchemaError(path, "expected an expression string or number")
    if not isinstance(source, str):
        return Const(float(source))
    try:
        return parse_expr(source, scope)
    except (LexError, ParseError) as exc:
        raise SceneParseError(path, exc) from exc


def _expr_array(src, shape, scope, path, dim) -> ExprArray:
    arr = np.empty(shape, dtype=object)

    def walk(node, idx, p):
        depth = len(idx)
        if depth == len(shape):
            arr[idx] = _parse(node, scope, p)
            return
        if not isinstance(node, list) or len(node) != shape[depth]:
            raise SchemaError(p, f"expected a list of length {shape[depth]}")
        for i, child in enumerate(node):
            walk(child, idx + (i,), f"{p}[{i}]")

    walk(src, (), path)
    return ExprArray(arr, dim)


def _number(doc, key, kind, default=None):
    if key not in doc:
        if default is None:
            raise SchemaError(key, "missing required key")
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, kind):
        raise SchemaError(key, f"expected {kind.__name__ if isinstance(kind, type) else 'number'}")
    return v


def _bound(v, scope: Scope, path: str) -> float:
    expr = simplify(_parse(v, Scope((), scope.constants, 0), path))
    try:
        value = evaluate(expr, ())
    except (IndexError, TypeError):
        raise SchemaError(path, "value must not depend on coordinates") from None
    if not math.isfinite(value):
        raise SchemaError(path, "value must be finite")
    return value


def load_scene(document, check_samples: int = 200) -> Scene:
    """Build a Scene from a JSON string, a path, or an already parsed mapping."""
    if isinstance(document, Path) or (isinstance(document, str) and not document.lstrip().startswith("{")):
        try:
            document = Path(document).read_text()
        except OSError as exc:
            raise SchemaError("<file>", str(exc)) from exc
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError("<document>", f"invalid JSON: {exc}") from exc
    if not isinstance(document, Mapping):
        raise SchemaError("<document>", "expected a JSON object")
    doc = copy.deepcopy(dict(document))
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise SchemaError(sorted(unknown)[0], "unknown key")

    dim = _number(doc, "dimension", int)
    sig = doc.get("signature", [1, dim - 1])
    if not (isinstance(sig, list) and len(sig) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in sig)):
        raise SchemaError("signature", "expected [r, s]")
    try:
        signature = Signature(*sig)
    except ValueError as exc:
        raise SchemaError("signature", str(exc)) from None
    if signature.m != dim:
        raise SchemaError("signature", f"r + s = {signature.m} does not match dimension {dim}")

    coords = doc.get("coordinates", [f"x{i}" for i in range(dim)])
    if not (isinstance(coords, list) and len(coords) == dim and all(isinstance(c, str) for c in coords)):
        raise SchemaError("coordinates", f"expected {dim} names")
    if len(set(coords)) != dim:
        raise SchemaError("coordinates", "aliases must be unique")

    constants = doc.get("constants", {})
    if not isinstance(constants, dict):
        raise SchemaError("constants", "expected an object")
    for k, v in constants.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"constants.{k}", "expected a number")
        if k in coords:
            raise SchemaError(f"constants.{k}", "name clashes with a coordinate")
    scope = Scope(tuple(coords), {k: float(v) for k, v in constants.items()}, dim)

    raw_domain = doc.get("domain", [[-1, 1]] * dim)
    if not (isinstance(raw_domain, list) and len(raw_domain) == dim):
        raise SchemaError("domain", f"expected {dim} intervals")
    domain = []
    for i, iv in enumerate(raw_domain):
        if not (isinstance(iv, list) and len(iv) == 2):
            raise SchemaError(f"domain[{i}]", "expected [lo, hi]")
        lo, hi = _bound(iv[0], scope, f"domain[{i}][0]"), _bound(iv[1], scope, f"domain[{i}][1]")
        if not lo < hi:
            raise SchemaError(f"domain[{i}]", "empty interval")
        domain.append((lo, hi))

    if "frame" not in doc:
        raise SchemaError("frame", "missing required key")
    frame = FrameField(_expr_array(doc["frame"], (dim, dim), scope, "frame", dim), signature)

    vectors = {}
    for name, comps in _mapping(doc, "vectors").items():
        vectors[name] = VectorField(_expr_array(comps, (dim,), scope, f"vectors.{name}", dim), name)

    tensors = {}
    for name, spec in _mapping(doc, "tensors").items():
        path = f"tensors.{name}"
        if not isinstance(spec, dict):
            raise SchemaError(path, "expected an object")
        rank = spec.get("rank")
        if not (isinstance(rank, list) and len(rank) == 2 and all(isinstance(x, int) for x in rank)):
            raise SchemaError(f"{path}.rank", "expected [p, q]")
        space = spec.get("space", "lorentz")
        if space not in ("lorentz", "spacetime"):
            raise SchemaError(f"{path}.space", "expected 'lorentz' or 'spacetime'")
        try:
            rep = Representation(rank[0], rank[1], dim)
        except ValueError as exc:
            raise SchemaError(f"{path}.rank", str(exc)) from None
        comps = _expr_array(spec.get("components"), rep.shape, scope, f"{path}.components", dim)
        if space == "lorentz":
            tensors[name] = LorentzTensorField(rep, comps, name)
        else:
            tensors[name] = SpacetimeTensorField((rank[0], rank[1]), comps, name)

    em = {}
    for name, spec in _mapping(doc, "em").items():
        if not isinstance(spec, dict) or "A" not in spec:
            raise SchemaError(f"em.{name}", "expected an object with key 'A'")
        em[name] = EMField(_expr_array(spec["A"], (dim,), scope, f"em.{name}.A", dim), name)

    beta = float(_number(doc, "beta", (int, float), 1.0))
    seed = _number(doc, "seed", int, 0)
    killing = doc.get("killing", [])
    if not isinstance(killing, list) or any(k not in vectors for k in killing):
        raise SchemaError("killing", "expected a list of declared vector names")
    vacuum = doc.get("vacuum", False)
    if not isinstance(vacuum, bool):
        raise SchemaError("vacuum", "expected a boolean")

    lam = doc.get("cosmological_constant")
    if lam is not None:
        lam = _bound(lam, scope, "cosmological_constant")

    scene = Scene(str(doc.get("name", "unnamed")), signature, list(coords), domain, dict(scope.constants), frame,
                  vectors, tensors, em, beta, seed, list(killing), vacuum, lam, doc)
    _check_frame(scene, check_samples)
    return scene


def _mapping(doc, key) -> dict:
    val = doc.get(key, {})
    if not isinstance(val, dict):
        raise SchemaError(key, "expected an object")
    return val


def _check_frame(scene: Scene, n: int):
    for p in scene.sample_points(n):
        try:
            e = scene.frame(p)
        except ArithmeticError as exc:
            raise SchemaError("frame", f"cannot evaluate at {tuple(p)}: {exc}") from None
        det = np.linalg.det(e)
        if not np.isfinite(det) or abs(det) < 1e-12:
            raise SingularFrame(p, det)


def serialize(scene: Scene) -> dict:
    """The scene document; loading it again gives an equivalent scene."""
    return copy.deepcopy(scene.document)


def perturb_document(document: Mapping, a: int, mu: int, delta: float) -> dict:
    """Copy of a scene document with ``delta`` added to frame component (a, mu)."""
    doc = copy.deepcopy(dict(document))
    entry = doc["frame"][a][mu]
    doc["frame"][a][mu] = f"({entry}) + {delta!r}" if isinstance(entry, str) else entry + delta
    return doc


# --------------------------------------------------------------------------
# Random test fields

def random_polynomial_vector(rng: np.random.Generator, dim: int, degree: int = 2, scale: float = 1.0,
                             name: str = "") -> VectorField:
    """xi^mu = sum of monomials of degree <= ``degree`` with uniform(-scale, scale) coefficients."""
    monomials = [()]
    for d in range(1, degree + 1):
        monomials += list(itertools.combinations_with_replacement(range(dim), d))
    comps = []
    for _ in range(dim):
        expr = None
        for m in monomials:
            c = float(rng.uniform(-scale, scale))
            term = Const(c)
            for i in m:
                term = term * Coord(i)
            expr = term if expr is None else expr + term
        comps.append(simplify(expr))
    return VectorField.from_exprs(comps, dim, name)

