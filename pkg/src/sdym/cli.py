"""Command-line front end: ``sdym <command> [--config PATH] [--out PATH] ...``.

Every command reads an optional JSON config, runs its checks and writes a
canonical report (sorted keys, 17 significant digits, trailing newline).
Exit status is 0 when every check passes, 1 when a check fails or the
pipeline raises, and 2 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
import warnings
from fractions import Fraction

import jsonschema
import numpy as np

from . import __version__
from .algebra import ID2, TAU1, TAU2, TAU3, det2, mat_exp2
from .connection import (Grid, NotHarmonicError, NotRealError, curvature, ja_check, reducible_from_harmonic,
                         sdym_residual, yang_j_from_a, yang_pohlmeyer_residual)
from .orbits import classify_sl2c, classify_sl2r, decompose_minkowski, invariant_I, act
from .polyfield import U, UBAR, V, VBAR, MatrixPolyField, PolyField, random_harmonic
from .riemann_hilbert import (AliasingWarning, JumpingPointError, MatrixLoop, PipelineAbort, birkhoff_split,
                              connection_pipeline, j_from_split, laurent_from_samples, load_loop_corpus,
                              unit_circle)
from .symmetry import (GeneratorT, IdentityField, commuting_chain_check, finite_type_residual, flow_patching,
                       type_of)
from .twistor import (BadRepresentativeError, BandwidthError, ContourSpec, TwistorRep, cauchy_F_exact,
                      patching_from_rep, penrose_a, penrose_a_exact)

COMMANDS = ("reducible", "penrose", "patch", "split", "flow", "finite-type", "orbit", "selftest")
FLOW_CSV_HEADER = "t,max_split_residual,max_yp_residual,jump_count"

_POLY = {
    "type": "array",
    "items": {
        "type": "object",
        "properties": {k: {"type": "integer", "minimum": 0} for k in ("eu", "eubar", "ev", "evbar")}
        | {"re": {"type": "number"}, "im": {"type": "number"}},
        "required": ["eu", "eubar", "ev", "evbar"],
        "additionalProperties": False,
    },
}
_REP = {
    "type": "array",
    "items": {
        "type": "object",
        "properties": {"d1": {"type": "integer", "minimum": 0}, "d2": {"type": "integer", "minimum": 0},
                       "k": {"type": "integer"}, "re": {"type": "number"}, "im": {"type": "number"}},
        "required": ["d1", "d2", "k"],
        "additionalProperties": False,
    },
}
_VEC4 = {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4}
_MATRIX = {"type": "array", "minItems": 4, "maxItems": 4,
           "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}}
_LOOP = {"type": "object", "properties": {"point": _VEC4, "samples": {"type": "array", "items": _MATRIX}},
         "required": ["point", "samples"]}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "a": _POLY,
        "rep": _REP,
        "points": {"type": "array", "items": _VEC4},
        "samples": {"type": "integer", "minimum": 1},
        "grid": {
            "type": "object",
            "properties": {"center": _VEC4, "extent": {"type": "number", "exclusiveMinimum": 0},
                           "points": {"type": "integer", "minimum": 3},
                           "h": {"type": "number", "exclusiveMinimum": 0}},
            "additionalProperties": False,
        },
        "contour": {
            "type": "object",
            "properties": {"radius": {"type": "number", "exclusiveMinimum": 0},
                           "nodes": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "M": {"type": "integer", "minimum": 1},
        "band": {"type": "integer", "minimum": 1},
        "times": {"type": "array", "items": {"type": "number"}},
        "loops": {"oneOf": [{"type": "string"}, {"type": "array", "items": _LOOP}]},
        "matrices": {"type": "array", "items": _MATRIX},
        "d_max": {"type": "integer", "minimum": 0},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "expect_algebraically_special": {"type": "boolean"},
    },
    "additionalProperties": False,
}


class ConfigError(ValueError):
    """Unreadable or invalid configuration (exit status 2)."""


# -- canonical output ----------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = "%.17g" % x
    return s if any(c in s for c in ".en") else s + ".0"


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return _plain(obj.item())
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, tuple):
        return [_plain(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    """Sorted keys, floats as ``%.17g``, no insignificant whitespace."""
    obj = _plain(obj)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(json.dumps(k) + ":" + canonical_json(v) for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


class Report:
    """Check records plus command-specific results."""

    def __init__(self, command: str = "", config: dict | None = None, seed: int | None = None):
        self.command = command
        self.config = config or {}
        self.seed = seed
        self.checks: list = []
        self.results: dict = {}
        self.jumping_points: list = []
        self.errors: list = []
        self.table: list | None = None

    def check(self, name: str, value, tolerance: float):
        value = float(value)
        ok = bool(math.isfinite(value) and value <= tolerance)
        self.checks.append({"name": name, "max_residual": value, "tolerance": float(tolerance), "pass": ok})
        return ok

    def error(self, exc: BaseException, where: str):
        self.errors.append({"where": where, "type": type(exc).__name__, "message": str(exc)})

    @property
    def passed(self) -> bool:
        return not self.errors and all(c["pass"] for c in self.checks)

    def to_json(self) -> dict:
        return {
            "toolkit": {"name": "sdym", "version": __version__},
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "checks": self.checks,
            "results": self.results,
            "jumping_points": self.jumping_points,
            "errors": self.errors,
            "pass": self.passed,
        }


def emit(report: Report, fmt: str = "json") -> bytes:
    """Canonical bytes of ``report``; ``csv`` gives the flow table when present, else the checks."""
    if fmt == "json":
        return (canonical_json(report.to_json()) + "\n").encode()
    if fmt != "csv":
        raise ValueError("format is 'json' or 'csv'")
    buf = io.StringIO()
    if report.table is not None:
        buf.write(FLOW_CSV_HEADER + "\n")
        for row in report.table:
            buf.write("%s,%s,%s,%d\n" % (_fmt_float(row["t"]), _fmt_float(row["max_split_residual"]),
                                         _fmt_float(row["max_yp_residual"]), row["jump_count"]))
    else:
        buf.write("name,max_residual,tolerance,pass\n")
        for c in report.checks:
            buf.write("%s,%s,%s,%s\n" % (c["name"], _fmt_float(c["max_residual"]), _fmt_float(c["tolerance"]),
                                         "true" if c["pass"] else "false"))
    return buf.getvalue().encode()


# -- inputs --------------------------------------------------------------------------

SPECIAL_A = U * UBAR - V * VBAR
SPECIAL_REP = TwistorRep({(1, 1, -2): 1})


def _harmonic(cfg) -> PolyField:
    return PolyField.from_json(cfg["a"], exact=True) if "a" in cfg else SPECIAL_A


def _rep(cfg) -> TwistorRep:
    return TwistorRep.from_json(cfg["rep"], exact=True) if "rep" in cfg else SPECIAL_REP


def _points(cfg, rng, default=10):
    if "points" in cfg:
        return np.asarray(cfg["points"], dtype=float)
    return rng.uniform(-0.5, 0.5, size=(cfg.get("samples", default), 4))


def _grid(cfg, **defaults):
    g = dict(defaults)
    g.update(cfg.get("grid", {}))
    return Grid(tuple(g.get("center", (0.0, 0.0, 0.0, 0.0))), float(g["extent"]), int(g["points"])), float(g["h"])


def _matrix(m):
    a = np.asarray(m, dtype=float)
    return (a[:, 0] + 1j * a[:, 1]).reshape(2, 2)


def _poly_str(p: PolyField) -> str:
    return repr(p)[len("PolyField("):-1]


# -- commands ------------------------------------------------------------------------


def cmd_reducible(cfg, rng, report, threads):
    a = _harmonic(cfg)
    A = reducible_from_harmonic(a)
    res = sdym_residual(A)
    report.check("sdym_exact", max(r.max_abs() for r in res), 0.0)
    F = curvature(A)
    special = max(F.F_uvbar.max_abs(), F.F_vubar.max_abs())
    if cfg.get("expect_algebraically_special", "a" not in cfg):
        report.check("algebraically_special", special, 0.0)
    grid, h = _grid(cfg, extent=0.2, points=5, h=0.01)
    yp = yang_pohlmeyer_residual(yang_j_from_a(a), grid, h)
    report.check("yang_pohlmeyer_fd", yp.max_residual, cfg.get("tolerance", 1e-2))
    report.results.update(a=_poly_str(a), algebraically_special=special == 0, yp_argmax=yp.argmax_point)


def cmd_penrose(cfg, rng, report, threads):
    f = _rep(cfg)
    a = penrose_a_exact(f)
    report.check("harmonic", a.laplacian().max_abs(), 0.0)
    c = ContourSpec(**cfg["contour"]) if "contour" in cfg else ContourSpec()
    pts = _points(cfg, rng)
    quad = penrose_a(f, pts, c)
    exact = a.evaluate(pts)
    scale = max(1.0, float(np.max(np.abs(exact)))) if len(pts) else 1.0
    report.check("quadrature_vs_residue", np.max(np.abs(quad - exact)) / scale if len(pts) else 0.0,
                 cfg.get("tolerance", 1e-12))
    report.results.update(a=_poly_str(a), values=[[float(v.real), float(v.imag)] for v in quad])


def cmd_patch(cfg, rng, report, threads):
    f = _rep(cfg)
    G = patching_from_rep(f)
    F = cauchy_F_exact(f)
    report.check("cauchy_at_zero", (F.get(0, PolyField()) - penrose_a_exact(f)).max_abs(), 0.0)
    r1, r2 = G.annihilation_residuals()
    report.check("twistor_annihilation", max(r1.max_abs(), r2.max_abs()), 0.0)
    report.check("reality", G.reality_defect(_points(cfg, rng)), cfg.get("tolerance", 1e-10))
    report.results["phi"] = {str(n): _poly_str(p) for n, p in G.phi.items()}


def _default_loops(rng, n=5, samples=128):
    G = patching_from_rep(SPECIAL_REP)
    pts = rng.uniform(-0.5, 0.5, size=(n, 4))
    z = unit_circle(samples)
    vals = G(pts, z)
    return [(p, MatrixLoop(v, z)) for p, v in zip(pts, vals)]


def cmd_split(cfg, rng, report, threads):
    loops = load_loop_corpus(cfg["loops"]) if "loops" in cfg else _default_loops(rng)
    M = cfg.get("M", 24)
    band = cfg.get("band", M)
    out, worst, det_err = [], 0.0, 0.0
    for point, loop in loops:
        rec = {"point": [float(c) for c in point]}
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", AliasingWarning)
            lb = laurent_from_samples(loop, band)
        rec["aliasing_warning"] = bool(caught)
        try:
            fac = birkhoff_split(lb, M)
        except JumpingPointError as exc:
            report.jumping_points.append(rec["point"])
            rec["jump"] = str(exc)
            out.append(rec)
            continue
        J = j_from_split(fac)
        worst = max(worst, fac.residual)
        det_err = max(det_err, float(np.max(np.abs(fac.psi0.det(loop.z) - 1))))
        rec.update(residual=fac.residual, condition=fac.condition,
                   J=[[float(x.real), float(x.imag)] for x in J.reshape(4)])
        out.append(rec)
    tol = cfg.get("tolerance", 1e-10)
    report.check("split_residual", worst, tol)
    report.check("det_psi0", det_err, 1e-8)
    report.results["loops"] = out


def cmd_flow(cfg, rng, report, threads):
    f = _rep(cfg)
    G = patching_from_rep(f)
    T = GeneratorT.diagonal(G.phi, Fraction(-1, 2))
    times = cfg.get("times", [0.0, 0.5, 1.0])
    grid, h = _grid(cfg, extent=0.3, points=5, h=0.05)
    M = cfg.get("M", 16)
    tol = cfg.get("tolerance", 1e-2)
    pts = rng.uniform(-0.5, 0.5, size=(4, 4))
    z = unit_circle(64)
    report.check("flat_orbit_round_trip",
                 np.max(np.abs(flow_patching(IdentityField(), T, 1.0)(pts, z) - G(pts, z))), 1e-12)
    rows = []
    for t in times:
        r = connection_pipeline(flow_patching(IdentityField(), T, t), grid, h, M, threads=threads)
        rows.append({"t": float(t), "max_split_residual": r.max_split_residual,
                     "max_yp_residual": r.max_yp_residual, "jump_count": r.jump_count})
        report.jumping_points.extend(r.jumping_points)
        report.check(f"yang_pohlmeyer_t={t:g}", r.max_yp_residual, tol)
    report.table = rows
    report.results["flow"] = rows


def cmd_finite_type(cfg, rng, report, threads):
    a = _harmonic(cfg)
    res = type_of(a, cfg.get("d_max", 8))
    report.check("finite_type_found", 0.0 if res.finite else math.inf, 0.0)
    if not res.finite:
        report.results["d"] = None
        return
    report.check("chain_residual", max(r.max_abs() for r in finite_type_residual(res.chain)), 0.0)
    cc = commuting_chain_check(res.chain)
    report.results.update(d=res.d, chain={str(n): _poly_str(c[0, 0]) for n, c in sorted(res.chain.coeffs.items())},
                          **cc.to_json())


def _orbit_record(g):
    I = invariant_I(g)
    u, v = decompose_minkowski(g)
    c = classify_sl2c(g)
    rec = {"I": I, "u": list(u), "v": list(v), "class": str(c), "boundary_flag": c.boundary}
    if np.max(np.abs(g.imag)) == 0:
        r = classify_sl2r(g.real)
        rec["sl2r_class"] = str(r)
        rec["sl2r_boundary_flag"] = r.boundary
    defect = max(abs(u.norm2 + 0.5 * (I + 1)), abs(v.norm2 + 0.5 * (I - 1)), abs(u.dot(v)))
    return rec, defect


def cmd_orbit(cfg, rng, report, threads):
    mats = [_matrix(m) for m in cfg["matrices"]] if "matrices" in cfg else [ID2.copy()]
    recs, defect, excess = [], 0.0, 0.0
    for g in mats:
        rec, d = _orbit_record(g)
        recs.append(rec)
        defect = max(defect, d)
        excess = max(excess, rec["I"] - 1)
    report.check("minkowski_identities", defect, 1e-9)
    report.check("I_at_most_one", max(excess, 0.0), 1e-9)
    report.results["orbits"] = recs


def _rand_sl2c(rng, s=0.5):
    xi = rng.normal(size=3) * s + 1j * rng.normal(size=3) * s
    return mat_exp2(xi[0] * TAU1 + xi[1] * TAU2 + xi[2] * TAU3)


def cmd_selftest(cfg, rng, report, threads):
    """Small deterministic versions of the module checks."""
    worst = 0.0
    for _ in range(5):
        A = reducible_from_harmonic(random_harmonic(4, rng))
        worst = max(worst, max(r.max_abs() for r in sdym_residual(A)))
    report.check("reducible_sdym_exact", worst, 0.0)

    pts = rng.uniform(-0.5, 0.5, size=(20, 4))
    Jspecial = yang_j_from_a(SPECIAL_A)
    Ahol = MatrixPolyField.from_constant(1j * TAU3)
    report.check("ja_check", np.max(np.abs(ja_check(Jspecial, Ahol, pts))), 1e-12)

    a = penrose_a_exact(SPECIAL_REP)
    report.check("penrose_exact", (a - SPECIAL_A).max_abs(), 0.0)
    report.check("penrose_quadrature", np.max(np.abs(penrose_a(SPECIAL_REP, pts) - SPECIAL_A.evaluate(pts))), 1e-12)

    G = patching_from_rep(SPECIAL_REP)
    r1, r2 = G.annihilation_residuals()
    report.check("twistor_annihilation", max(r1.max_abs(), r2.max_abs()), 0.0)
    report.check("reality", G.reality_defect(pts[:10]), 1e-10)

    worst, det_err = 0.0, 0.0
    z = unit_circle(128)
    for _ in range(5):
        c = rng.normal(size=(2, 3)) * 0.05
        xi = (c[0, 0] * TAU1 + c[0, 1] * TAU2 + c[0, 2] * TAU3)[None] * z[:, None, None] \
            + (c[1, 0] * TAU1 + c[1, 1] * TAU2 + c[1, 2] * TAU3)[None] / z[:, None, None]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AliasingWarning)
            fac = birkhoff_split(laurent_from_samples(MatrixLoop(mat_exp2(xi), z), 24), 24)
        worst = max(worst, fac.residual)
        det_err = max(det_err, float(np.max(np.abs(det2(fac.psi0(z)) - 1))))
    report.check("split_residual", worst, 1e-10)
    report.check("split_det", det_err, 1e-8)

    T = GeneratorT.diagonal(G.phi, Fraction(-1, 2))
    report.check("flat_orbit_round_trip",
                 np.max(np.abs(flow_patching(IdentityField(), T, 1.0)(pts[:5], z[:64]) - G(pts[:5], z[:64]))), 1e-12)

    res = type_of(SPECIAL_A)
    report.check("type_of_special", abs((res.d if res.finite else math.inf) - 1), 0.0)
    cc = commuting_chain_check(res.chain)
    report.check("commuting_direction",
                 np.max(np.abs(cc.direction - TAU3)) if cc.direction is not None else math.inf, 1e-12)

    inv_err, defect, excess = 0.0, 0.0, 0.0
    for _ in range(200):
        g, h = _rand_sl2c(rng), _rand_sl2c(rng)
        rec, d = _orbit_record(g)
        defect = max(defect, d)
        excess = max(excess, rec["I"] - 1)
        inv_err = max(inv_err, abs(invariant_I(act(h, g)) - rec["I"]))
    report.check("orbit_invariance", inv_err, 1e-9)
    report.check("minkowski_identities", defect, 1e-9)
    report.check("I_at_most_one", max(excess, 0.0), 1e-9)


HANDLERS = {
    "reducible": cmd_reducible,
    "penrose": cmd_penrose,
    "patch": cmd_patch,
    "split": cmd_split,
    "flow": cmd_flow,
    "finite-type": cmd_finite_type,
    "orbit": cmd_orbit,
    "selftest": cmd_selftest,
}

PIPELINE_ERRORS = (NotHarmonicError, NotRealError, BadRepresentativeError, BandwidthError, JumpingPointError,
                   PipelineAbort, ArithmeticError, ValueError)


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config does not match the schema: {exc.message}") from exc


def run(command: str, config: dict | None = None, *, seed: int = 0, threads: int | None = None) -> Report:
    """Run ``command`` on a validated ``config``; pipeline failures become error records."""
    if command not in HANDLERS:
        raise ConfigError(f"unknown command {command!r}")
    config = config or {}
    validate_config(config)
    if isinstance(config.get("loops"), str):
        try:
            open(config["loops"]).close()
        except OSError as exc:
            raise ConfigError(f"cannot read loop corpus: {exc}") from exc
    report = Report(command, config, seed)
    rng = np.random.default_rng(seed)
    try:
        HANDLERS[command](config, rng, report, threads)
    except PIPELINE_ERRORS as exc:
        report.error(exc, command)
    return report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sdym", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", metavar="PATH", help="JSON run configuration")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--seed", type=int, default=0, help="seed for randomised inputs (default 0)")
    p.add_argument("--threads", type=int, default=None, help="worker threads for grid sweeps")
    p.add_argument("--version", action="version", version=f"sdym {__version__}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        report = run(args.command, cfg, seed=args.seed, threads=args.threads)
    except ConfigError as exc:
        print(f"sdym: error: {exc}", file=sys.stderr)
        return 2
    data = emit(report, args.format)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    for e in report.errors:
        print(f"sdym: {e['type']}: {e['message']}", file=sys.stderr)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
