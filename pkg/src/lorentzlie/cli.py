"""Command-line interface.

    lorentzlie lift   --scene NAME|PATH --vector V [--point ...|--grid n]
    lorentzlie lie    --scene S --vector V --tensor T [--rank p,q]
    lorentzlie verify --scene S --suite NAME
    lorentzlie charge --scene S --superpotential komar|tA|holst|em --vector V --surface r=8M
    lorentzlie scene  --scene S

Exit status: 0 when every check passes, 1 when a check fails, 2 on usage
errors, 3 when the scene cannot be loaded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kosmann, lorentz, noether
from .diffgeo import DimensionError, SingularFrame
from .exprlang import DomainError, LexError, ParseError, evaluate, parse_expr, simplify
from .fields import ExprArray
from .scenes import SchemaError, Scene, UnknownScene, builtin_document, load_scene
from .suites import SUITES, Check, SuiteContext, UnknownSuite, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_SCENE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--scene", required=True, help="built-in scene name or path to a scene JSON file")
    common.add_argument("--point", action="append", default=[], help="comma separated chart point (repeatable)")
    common.add_argument("--grid", type=int, default=None, help="number of seeded random points in the domain")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--tol", type=float, default=None, help="override the pass threshold")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--timing", action="store_true", help="include wall-clock timing in the report")

    parser = _Parser(prog="lorentzlie", description="Kosmann lifts and Lie derivatives of Lorentz tensors")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("lift", parents=[common], help="Kosmann lift of a vector field")
    p.add_argument("--vector", required=True)

    p = sub.add_parser("lie", parents=[common], help="Kosmann Lie derivative of a tensor field")
    p.add_argument("--vector", required=True)
    p.add_argument("--tensor", required=True)
    p.add_argument("--rank", default=None, help="expected rank p,q of the tensor")

    p = sub.add_parser("verify", parents=[common], help="run a suite of identity checks")
    p.add_argument("--suite", required=True, help=f"one of: all, {', '.join(SUITES)}")

    p = sub.add_parser("charge", parents=[common], help="surface charge of a superpotential")
    p.add_argument("--superpotential", choices=("komar", "tA", "holst", "em"), default="komar")
    p.add_argument("--vector", default=None)
    p.add_argument("--em", default=None, help="EM field name (for --superpotential em)")
    p.add_argument("--surface", action="append", default=[], help="<coord>=<expr>[,<coord>=<expr>] (repeatable)")
    p.add_argument("--nodes", default="16x32")
    p.add_argument("--rule", choices=("gauss", "midpoint"), default="gauss")

    sub.add_parser("scene", parents=[common], help="validate a scene and print its document")
    return parser


# --------------------------------------------------------------------------
# Argument helpers

def _load(ref: str) -> Scene:
    try:
        doc = builtin_document(ref)
    except UnknownScene:
        if not Path(ref).exists():
            raise UnknownScene(ref) from None
        return load_scene(Path(ref))
    return load_scene(doc)


def _value(source: str, scene: Scene) -> float:
    scope = scene.scope
    try:
        expr = simplify(parse_expr(source.strip(), type(scope)((), scope.constants, 0)))
        return evaluate(expr, ())
    except (LexError, ParseError, DomainError, IndexError) as exc:
        raise UsageError(f"cannot evaluate {source!r}: {exc}") from None


def _points(args, scene: Scene, default_grid: int = 20) -> tuple[np.ndarray, int]:
    seed = scene.seed if args.seed is None else args.seed
    if args.point:
        pts = []
        for spec in args.point:
            parts = spec.split(",")
            if len(parts) != scene.dim:
                raise UsageError(f"--point needs {scene.dim} coordinates, got {spec!r}")
            p = [_value(x, scene) for x in parts]
            if not scene.contains(p):
                raise UsageError(f"point {spec!r} lies outside the chart domain")
            pts.append(p)
        return np.array(pts, dtype=float), seed
    n = default_grid if args.grid is None else args.grid
    if n < 1:
        raise UsageError("--grid must be positive")
    return scene.sample_points(n, seed), seed


def _vector(scene: Scene, name: str):
    if name not in scene.vectors:
        raise UsageError(f"scene {scene.name!r} has no vector field {name!r}")
    return scene.vectors[name]


def _clean(x):
    """JSON-ready copy with numpy types converted and -0.0 normalized."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        if not math.isfinite(v):
            return repr(v)
        return v + 0.0
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# --------------------------------------------------------------------------
# Commands

def cmd_lift(args, scene: Scene):
    xi = _vector(scene, args.vector)
    pts, seed = _points(args, scene)
    tol = 1e-10 if args.tol is None else args.tol
    results, checks = [], []
    for p in pts:
        lift = kosmann.kosmann_lift_at(xi, scene.frame, p)
        routes = kosmann.kosmann_routes_at(xi, scene.frame, p)
        spread = max(float(np.abs(a - b).max()) for a in routes.values() for b in routes.values())
        results.append({"point": p, "xi": lift.base, "generator": lift.generator, "vertical": lift.vertical,
                        "route_spread": spread, "consistency": lift.consistency})
        checks.append(Check("lift_consistency", max(spread, lift.consistency), tol))
    return results, checks, seed


def cmd_lie(args, scene: Scene):
    xi = _vector(scene, args.vector)
    if args.tensor not in scene.tensors:
        raise UsageError(f"scene {scene.name!r} has no tensor field {args.tensor!r}")
    t = scene.tensors[args.tensor]
    if isinstance(t, lorentz.LorentzTensorField):
        rank = (t.rep.p, t.rep.q)
    else:
        rank = tuple(t.rank)
    if args.rank is not None:
        try:
            want = tuple(int(x) for x in args.rank.split(","))
        except ValueError:
            raise UsageError(f"bad --rank {args.rank!r}") from None
        if want != rank:
            raise UsageError(f"tensor {args.tensor!r} has rank {rank}, not {want}")
    if not isinstance(t, lorentz.LorentzTensorField):
        if rank != (1, 0):
            raise UsageError("spacetime tensors are supported for rank (1, 0) only")
        t = _transported_vector(t, scene)
    pts, seed = _points(args, scene)
    tol = 1e-10 if args.tol is None else args.tol
    results, checks = [], []
    for p in pts:
        ld = lorentz.kosmann_lie_derivative_at(xi, t, scene.frame, p)
        results.append({"point": p, "rank": list(rank), "lie": ld.value, "alternate": ld.alternate,
                        "residual": ld.residual})
        checks.append(Check("covariant_form_agrees", ld.residual, tol))
    return results, checks, seed


def _transported_vector(t, scene: Scene):
    """Lorentz components e^a_mu v^mu of a spacetime vector as expressions."""
    frame_exprs = scene.frame.components.exprs
    v = t.components.exprs
    m = scene.dim
    out = np.empty(m, dtype=object)
    for a in range(m):
        total = None
        for mu in range(m):
            term = frame_exprs[a, mu] * v[mu]
            total = term if total is None else total + term
        out[a] = simplify(total)
    return lorentz.LorentzTensorField(lorentz.Representation(1, 0, m), ExprArray(out, m))


def cmd_verify(args, scene: Scene):
    pts, seed = _points(args, scene)
    ctx = SuiteContext(scene, pts, seed, args.tol)
    try:
        checks = run_suite(args.suite, ctx)
    except UnknownSuite:
        raise UsageError(f"unknown suite {args.suite!r}; choose from all, {', '.join(SUITES)}") from None
    return [c.as_dict() for c in checks], checks, seed


def _parse_surface(spec: str, scene: Scene, nodes, rule) -> noether.SurfaceQuadrature:
    frozen = {}
    for part in spec.split(","):
        if "=" not in part:
            raise UsageError(f"bad --surface entry {part!r}")
        name, expr = part.split("=", 1)
        name = name.strip()
        if name in scene.coordinates:
            idx = scene.coordinates.index(name)
        elif name.startswith("x") and name[1:].isdigit() and int(name[1:]) < scene.dim:
            idx = int(name[1:])
        else:
            raise UsageError(f"unknown coordinate {name!r}")
        frozen[idx] = _value(expr, scene)
    if len(frozen) == 1:
        # freeze the lowest remaining coordinate at its domain midpoint
        rest = [i for i in range(scene.dim) if i not in frozen]
        lo, hi = scene.domain[rest[0]]
        frozen[rest[0]] = 0.5 * (lo + hi)
    if len(frozen) != 2 or scene.dim != 4:
        raise UsageError("a surface freezes two of four coordinates")
    ranges = {i: scene.domain[i] for i in range(scene.dim) if i not in frozen}
    try:
        surface = noether.SurfaceQuadrature(frozen, ranges, nodes, rule)
        surface.check_domain(scene.domain)
    except noether.QuadratureError as exc:
        raise UsageError(str(exc)) from None
    return surface


def _superpotential(args, scene: Scene):
    kind = args.superpotential
    if kind == "em":
        if args.em not in scene.em:
            raise UsageError("--superpotential em needs --em NAME of a field in the scene")
        em = scene.em[args.em]
        gauge = ExprArray(np.array(parse_expr("1"), dtype=object), scene.dim)
        base = ExprArray(np.zeros(scene.dim), scene.dim)
        gen = noether.EMGaugeGenerator(base, gauge)

        def residual(p):
            return float(np.abs(noether.maxwell_residual_at(em, scene.frame, p)).max())

        return (lambda p: noether.em_superpotential_at(em, gen, scene.frame, p)), residual
    if args.vector is None:
        raise UsageError(f"--superpotential {kind} needs --vector")
    xi = _vector(scene, args.vector)
    grav = scene.gravity()

    def residual(p):
        fe = noether.tA_field_eq_residuals_at(grav, p)
        return max(fe.einstein_norm, fe.torsion)

    if kind == "komar":
        return (lambda p: noether.komar_superpotential_at(xi, scene.frame, p).U), residual
    if kind == "tA":
        return (lambda p: noether.tA_superpotential_at(
            grav, noether.kosmann_vertical_generator_jet(xi, scene.frame, p), p).U), residual
    return (lambda p: noether.holst_difference_superpotential_at(grav, p, xi=xi).U), residual


def cmd_charge(args, scene: Scene):
    try:
        n2, n3 = (int(x) for x in args.nodes.lower().split("x"))
    except ValueError:
        raise UsageError(f"bad --nodes {args.nodes!r}; expected like 64x128") from None
    if min(n2, n3) < 8:
        raise UsageError("node counts must be at least 8")
    specs = list(args.surface)
    if not specs:
        raise UsageError("charge needs --surface")
    surfaces = [_parse_surface(s, scene, (n2, n3), args.rule) for s in specs]
    if len(surfaces) == 1:
        # reference surface: same frozen pair, first given coordinate moved to its domain midpoint
        s0 = surfaces[0]
        first = next(iter(s0.frozen))
        frozen = dict(s0.frozen)
        lo, hi = scene.domain[first]
        frozen[first] = 0.5 * (frozen[first] + 0.5 * (lo + hi))
        surfaces.append(noether.SurfaceQuadrature(frozen, dict(s0.ranges), s0.nodes, s0.rule))
    try:
        u, residual = _superpotential(args, scene)
    except DimensionError as exc:
        raise UsageError(str(exc)) from None
    results, charges = [], []
    for s in surfaces:
        q = noether.surface_charge(u, s, scene.domain)
        pts, _ = s.points_weights((4, 4))
        res = max(residual(p) for p in pts)
        charges.append(q.value)
        results.append({"surface": {scene.coordinates[k]: v for k, v in sorted(s.frozen.items())},
                        "pair": list(s.pair), "charge": q.value, "error_estimate": q.error_estimate,
                        "nodes": list(q.nodes), "field_equation_residual": res})
    scale = max(abs(charges[0]), 1e-300)
    drift = max(abs(c - charges[0]) for c in charges) / scale if charges[0] != 0 else max(abs(c) for c in charges)
    tol = 1e-3 if args.tol is None else args.tol
    checks = [Check("charges_finite", 0.0 if all(math.isfinite(c) for c in charges) else 1.0, 0.5),
              Check("surface_independence", drift, tol)]
    results.append({"stability": {"relative_drift": drift, "charges": charges}})
    return results, checks, None


def cmd_scene(args, scene: Scene):
    summary = {"name": scene.name, "dimension": scene.dim,
               "signature": [scene.signature.r, scene.signature.s], "coordinates": scene.coordinates,
               "domain": [list(d) for d in scene.domain], "vectors": sorted(scene.vectors),
               "tensors": sorted(scene.tensors), "em": sorted(scene.em), "killing": scene.killing,
               "vacuum": scene.vacuum, "document": scene.document}
    return [summary], [], scene.seed


COMMANDS = {"lift": cmd_lift, "lie": cmd_lie, "verify": cmd_verify, "charge": cmd_charge, "scene": cmd_scene}


def _render_text(report: dict) -> str:
    lines = [f"lorentzlie {report['version']} {report['command']} scene={report['scene']['name']} "
             f"fingerprint={report['scene']['fingerprint'][:16]} seed={report['seed']}"]
    for c in report["checks"]:
        rel = "<" if c["mode"] == "below" else ">"
        lines.append(f"{'PASS' if c['pass'] else 'FAIL'} {c['check']} {c['value']:.3e} {rel} {c['threshold']:.1e}")
    if report["command"] in ("lift", "lie", "charge"):
        for r in report["results"]:
            lines.append(json.dumps(r, sort_keys=True))
    lines.append("OK" if report["passed"] else "FAILED")
    return "\n".join(lines) + "\n"


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.command is None:
        parser.print_help(stderr)
        return EXIT_USAGE
    start = time.perf_counter()
    try:
        scene = _load(args.scene)
    except UnknownScene as exc:
        print(f"scene error: unknown scene {exc.args[0]!r}", file=stderr)
        return EXIT_SCENE
    except (SchemaError, SingularFrame, ParseError, LexError) as exc:
        print(f"scene error: {exc}", file=stderr)
        return EXIT_SCENE
    try:
        results, checks, seed = COMMANDS[args.command](args, scene)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except (SingularFrame, DomainError, lorentz.SceneMismatch) as exc:
        print(f"scene error: {exc}", file=stderr)
        return EXIT_SCENE
    report = {
        "schema": 1,
        "tool": "lorentzlie",
        "version": __version__,
        "command": args.command,
        "scene": {"name": scene.name, "fingerprint": scene.fingerprint()},
        "seed": seed,
        "results": results,
        "checks": [c.as_dict() for c in checks],
        "passed": all(c.passed for c in checks),
    }
    if args.timing:
        report["timing_seconds"] = time.perf_counter() - start
    report = _clean(report)
    text = (json.dumps(report, sort_keys=True, indent=2) + "\n") if args.format == "json" else _render_text(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        stdout.write(text)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def main() -> None:
    sys.exit(run())
