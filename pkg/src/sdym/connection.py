"""Gauge connections on open subsets of R^4 and their verification.

Connections are stored by their complex components ``A_u, A_v, A_ubar,
A_vbar`` as :class:`~sdym.polyfield.MatrixPolyField`.  Curvature and the
self-duality residuals are exact polynomial computations.  Quantities that
involve transcendental functions of the fields (the Yang J-function
``exp(a tau3)``) are checked on grids with centred finite differences using

    d_u = (d_t - i d_x)/2,  d_ubar = (d_t + i d_x)/2,
    d_v = (d_y + i d_z)/2,  d_vbar = (d_y - i d_z)/2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .algebra import TAU3, dagger, det2, frob, inv2
from .polyfield import MatrixPolyField, PolyField

__all__ = [
    "Grid",
    "ConnectionField",
    "CurvatureSet",
    "YangJ",
    "ResidualReport",
    "NotHarmonicError",
    "NotRealError",
    "SingularJError",
    "reducible_from_harmonic",
    "curvature",
    "sdym_residual",
    "parallel_section_residual",
    "yang_j_from_a",
    "ja_check",
    "yang_pohlmeyer_residual",
    "yang_pohlmeyer_exact",
    "gauge_transform_J",
    "gauge_transform_J_diag",
    "linearisation_residual",
    "linearisation_exact",
    "stencil_points",
    "yp_from_stencil",
]

COMPONENTS = ("u", "v", "ubar", "vbar")


class NotHarmonicError(ValueError):
    pass


class NotRealError(ValueError):
    pass


class SingularJError(ArithmeticError):
    def __init__(self, point):
        super().__init__(f"J is singular at stencil point {list(np.round(point, 12))}")
        self.point = np.asarray(point)


@dataclass(frozen=True)
class Grid:
    """Cubic lattice of ``points**4`` sites centred at ``center``, spanning ``center +- extent``."""

    center: tuple = (0.0, 0.0, 0.0, 0.0)
    extent: float = 0.4
    points: int = 9

    def __post_init__(self):
        if self.points < 1:
            raise ValueError("a grid needs at least one point per axis")

    @property
    def spacing(self) -> float:
        return 2 * self.extent / (self.points - 1) if self.points > 1 else 0.0

    def array(self) -> np.ndarray:
        axes = [np.linspace(c - self.extent, c + self.extent, self.points) if self.points > 1
                else np.array([float(c)]) for c in self.center]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @classmethod
    def from_json(cls, data):
        return cls(tuple(float(c) for c in data.get("center", (0, 0, 0, 0))),
                   float(data.get("extent", 0.4)), int(data.get("points", 9)))

    def to_json(self):
        return {"center": list(self.center), "extent": self.extent, "points": self.points}


@dataclass(frozen=True)
class ConnectionField:
    A_u: MatrixPolyField
    A_v: MatrixPolyField
    A_ubar: MatrixPolyField
    A_vbar: MatrixPolyField

    def __post_init__(self):
        for name in COMPONENTS:
            tr = getattr(self, "A_" + name).trace()
            if not tr.is_zero(1e-12 if not tr.is_exact else 0.0):
                raise ValueError(f"component A_{name} is not traceless")

    @classmethod
    def flat(cls):
        z = MatrixPolyField.zero()
        return cls(z, z, z, z)

    def component(self, var) -> MatrixPolyField:
        return getattr(self, "A_" + var)

    def is_su2(self, tol=0.0) -> bool:
        """``A_ubar = -A_u^dagger`` and ``A_vbar = -A_v^dagger``."""
        return ((self.A_ubar + self.A_u.dagger()).is_zero(tol)
                and (self.A_vbar + self.A_v.dagger()).is_zero(tol))


@dataclass(frozen=True)
class CurvatureSet:
    F_uv: MatrixPolyField
    F_uubar: MatrixPolyField
    F_vvbar: MatrixPolyField
    F_ubarvbar: MatrixPolyField
    F_uvbar: MatrixPolyField
    F_vubar: MatrixPolyField

    def items(self):
        return [(name, getattr(self, name)) for name in
                ("F_uv", "F_uubar", "F_vvbar", "F_ubarvbar", "F_uvbar", "F_vubar")]

    def algebraically_special(self, tol=0.0) -> bool:
        return self.F_uvbar.is_zero(tol) and self.F_vubar.is_zero(tol)


@dataclass
class ResidualReport:
    component: str
    max_residual: float
    argmax_point: list | None = None
    values: np.ndarray | None = field(default=None, repr=False)

    def __float__(self):
        return float(self.max_residual)

    def to_json(self):
        return {"component": self.component, "max_residual": float(self.max_residual),
                "argmax_point": None if self.argmax_point is None else [float(c) for c in self.argmax_point]}


def _default_tol(p: PolyField):
    return 0.0 if p.is_exact else 1e-12 * max(1.0, p.max_abs())


def reducible_from_harmonic(a: PolyField, *, validate=True) -> ConnectionField:
    """Reducible SU2 connection ``A = (1/2)(da - dbar a) tau3`` of a real harmonic ``a``.

    Non-harmonic or non-real input is rejected; ``validate=False`` bypasses the
    checks so that the recipe can be applied to arbitrary fields in tests.
    """
    if validate:
        tol = _default_tol(a)
        if not a.laplacian().is_zero(tol * 16):
            raise NotHarmonicError("seed function is not harmonic")
        if not a.is_real(tol):
            raise NotRealError("seed function is not real")
    h = _half(a)
    return ConnectionField(
        A_u=MatrixPolyField.from_scalar(a.derive("u") * h, TAU3),
        A_v=MatrixPolyField.from_scalar(a.derive("v") * h, TAU3),
        A_ubar=MatrixPolyField.from_scalar(a.derive("ubar") * (-h), TAU3),
        A_vbar=MatrixPolyField.from_scalar(a.derive("vbar") * (-h), TAU3),
    )


def _half(p: PolyField):
    return Fraction(1, 2) if p.is_exact else 0.5


def _F(A: ConnectionField, a: str, b: str) -> MatrixPolyField:
    Aa, Ab = A.component(a), A.component(b)
    return Ab.derive(a) - Aa.derive(b) + Aa.commutator(Ab)


def curvature(A: ConnectionField) -> CurvatureSet:
    """``F_ab = d_a A_b - d_b A_a + [A_a, A_b]`` for the six independent pairs."""
    return CurvatureSet(
        F_uv=_F(A, "u", "v"),
        F_uubar=_F(A, "u", "ubar"),
        F_vvbar=_F(A, "v", "vbar"),
        F_ubarvbar=_F(A, "ubar", "vbar"),
        F_uvbar=_F(A, "u", "vbar"),
        F_vubar=_F(A, "v", "ubar"),
    )


def sdym_residual(A: ConnectionField):
    """``(F_uv, F_uubar + F_vvbar, F_ubarvbar)``; all zero iff ``A`` is self-dual."""
    F = curvature(A)
    return F.F_uv, F.F_uubar + F.F_vvbar, F.F_ubarvbar


def parallel_section_residual(A: ConnectionField, eta: MatrixPolyField) -> list:
    """``d_c eta + [A_c, eta]`` for ``c`` in ``(u, v, ubar, vbar)``."""
    return [eta.derive(c) + A.component(c).commutator(eta) for c in COMPONENTS]


# -- Yang J-function -------------------------------------------------------------

def _sampler(obj) -> Callable:
    if isinstance(obj, YangJ):
        return obj.sample
    if isinstance(obj, MatrixPolyField):
        return obj.evaluate
    if callable(obj):
        return obj
    raise TypeError(f"cannot sample {type(obj).__name__} as a matrix field")


class YangJ:
    """Yang J-function, exact (``exp(a tau3)`` or a polynomial matrix) or sampled.

    ``exponent`` holds ``a`` when ``J = exp(a tau3)``; ``poly`` holds a
    polynomial matrix representation.  ``sample(points)`` always works.
    """

    def __init__(self, sampler: Callable | None = None, *, exponent: PolyField | None = None,
                 poly: MatrixPolyField | None = None):
        self.exponent = exponent
        self.poly = poly
        if sampler is None:
            if exponent is not None:
                sampler = self._sample_exponent
            elif poly is not None:
                sampler = poly.evaluate
            else:
                raise ValueError("YangJ needs a sampler, an exponent or a polynomial")
        self._sampler = sampler

    @property
    def flag(self) -> str:
        return "exact" if (self.exponent is not None or self.poly is not None) else "sampled"

    def _sample_exponent(self, points):
        a = self.exponent.evaluate(points)
        out = np.zeros(a.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = np.exp(a)
        out[..., 1, 1] = np.exp(-a)
        return out

    def sample(self, points):
        return np.asarray(self._sampler(np.asarray(points, dtype=float)), dtype=complex)

    __call__ = sample


def yang_j_from_a(a: PolyField, *, check_real=True) -> YangJ:
    """``J = exp(a tau3)``; exact-mode residuals are available through the exponent."""
    if check_real and not a.is_real(_default_tol(a)):
        raise NotRealError("exponent must be a real field")
    return YangJ(exponent=a)


def ja_check(J, Ahol: MatrixPolyField, points) -> np.ndarray:
    """Pointwise ``J A + A^dagger J`` for holomorphic ``A(u, v)``; shape ``(P, 2, 2)``."""
    if not Ahol.is_holomorphic():
        raise ValueError("A must depend on (u, v) only")
    Jv = _sampler(J)(np.asarray(points, dtype=float))
    Av = Ahol.evaluate(points)
    return Jv @ Av + dagger(Av) @ Jv


# -- finite-difference machinery -----------------------------------------------------

_AXES = np.eye(4)


def stencil_points(points, h):
    """Centre and axis neighbours: arrays ``(P, 4)``, ``(P, 4, 4)``, ``(P, 4, 4)``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 4)
    plus = pts[:, None, :] + h * _AXES[None]
    minus = pts[:, None, :] - h * _AXES[None]
    return pts, plus, minus


def _sample_stencil(fn, points, h):
    pts, plus, minus = stencil_points(points, h)
    c = fn(pts)
    p = fn(plus.reshape(-1, 4)).reshape(len(pts), 4, 2, 2)
    m = fn(minus.reshape(-1, 4)).reshape(len(pts), 4, 2, 2)
    return pts, plus, minus, c, p, m


def _complex_derivs(c, p, m, h):
    """First complex derivatives and the two Laplacian pieces from centred stencils."""
    d1 = (p - m) / (2 * h)  # (P, 4, 2, 2) along t, x, y, z
    d2 = (p - 2 * c[:, None] + m) / (h * h)
    du = 0.5 * (d1[:, 0] - 1j * d1[:, 1])
    dub = 0.5 * (d1[:, 0] + 1j * d1[:, 1])
    dv = 0.5 * (d1[:, 2] + 1j * d1[:, 3])
    dvb = 0.5 * (d1[:, 2] - 1j * d1[:, 3])
    # d_u d_ubar = (d_tt + d_xx)/4, d_v d_vbar = (d_yy + d_zz)/4
    duub = 0.25 * (d2[:, 0] + d2[:, 1])
    dvvb = 0.25 * (d2[:, 2] + d2[:, 3])
    return du, dub, dv, dvb, duub, dvvb


def _check_invertible(pts, plus, minus, c, p, m, tol=1e-12):
    for vals, where in ((c, pts), (p, plus), (m, minus)):
        d = np.abs(det2(vals))
        bad = d < tol
        if np.any(bad):
            idx = np.argwhere(bad)[0]
            raise SingularJError(where[tuple(idx)])


def yp_from_stencil(c, p, m, h):
    """Pointwise ``d_u(J_ubar J^-1) + d_v(J_vbar J^-1)`` from stencil samples of ``J``."""
    du, dub, dv, dvb, duub, dvvb = _complex_derivs(c, p, m, h)
    Ji = inv2(c)
    return duub @ Ji - dub @ Ji @ du @ Ji + dvvb @ Ji - dvb @ Ji @ dv @ Ji


def _report(name, pts, values):
    norms = frob(values)
    k = int(np.argmax(norms)) if len(norms) else 0
    return ResidualReport(name, float(norms[k]) if len(norms) else 0.0,
                          list(pts[k]) if len(norms) else None, norms)


def yang_pohlmeyer_residual(J, grid: Grid | np.ndarray | None = None, h: float = 0.1) -> ResidualReport:
    """Sup over ``grid`` of ``||d_u(J_ubar J^-1) + d_v(J_vbar J^-1)||`` by centred differences.

    ``grid`` gives the evaluation points; ``h`` is the stencil step, so the
    same points can be re-evaluated with a refined step.
    """
    pts = _grid_points(grid)
    pts, plus, minus, c, p, m = _sample_stencil(_sampler(J), pts, h)
    _check_invertible(pts, plus, minus, c, p, m)
    return _report("yang_pohlmeyer", pts, yp_from_stencil(c, p, m, h))


def _grid_points(grid):
    if grid is None:
        grid = Grid()
    if isinstance(grid, Grid):
        return grid.array()
    return np.asarray(grid, dtype=float).reshape(-1, 4)


def yang_pohlmeyer_exact(J: YangJ) -> MatrixPolyField:
    """Exact residual for ``J = exp(a tau3)``: ``(1/4) Laplacian(a) tau3``."""
    if J.exponent is None:
        raise ValueError("exact mode needs J = exp(a tau3)")
    lap = J.exponent.laplacian()
    q = _half(lap) * _half(lap)
    return MatrixPolyField.from_scalar(lap * q, TAU3)


def gauge_transform_J(J, R: MatrixPolyField) -> YangJ:
    """``J -> R^dagger J R`` for holomorphic, unimodular ``R(u, v)``."""
    if not R.is_holomorphic():
        raise ValueError("gauge matrix must be holomorphic in (u, v)")
    d = R.det() - 1
    # constant matrices converted from floats carry rounding, so exactness is not required
    if not d.is_zero(1e-12 * max(1.0, R.max_abs() ** 2)):
        raise ValueError("gauge matrix must have unit determinant")
    if isinstance(J, YangJ) and J.poly is not None:
        return YangJ(poly=R.dagger() @ J.poly @ R)
    Rs = R.evaluate
    fn = _sampler(J)

    def sample(points):
        r = Rs(points)
        return dagger(r) @ fn(points) @ r

    return YangJ(sample)


def gauge_transform_J_diag(J, h: PolyField) -> YangJ:
    """Gauge by ``R = exp(h tau3)`` with holomorphic ``h``; stays exact for abelian ``J``."""
    if not h.is_holomorphic():
        raise ValueError("gauge exponent must be holomorphic in (u, v)")
    if isinstance(J, YangJ) and J.exponent is not None:
        return YangJ(exponent=J.exponent + h + h.conjugate())
    fn = _sampler(J)

    def sample(points):
        hv = h.evaluate(points)
        r = np.zeros(hv.shape + (2, 2), dtype=complex)
        r[..., 0, 0] = np.exp(hv)
        r[..., 1, 1] = np.exp(-hv)
        return dagger(r) @ fn(points) @ r

    return YangJ(sample)


def linearisation_residual(J, Jdot, grid: Grid | np.ndarray | None = None, h: float = 0.1) -> ResidualReport:
    """Sup-norm of ``d_u(J d_ubar(J^-1 Jdot) J^-1) + d_v(J d_vbar(J^-1 Jdot) J^-1)``."""
    pts = _grid_points(grid)
    jf, df = _sampler(J), _sampler(Jdot)
    pts, plus, minus, c, p, m = _sample_stencil(jf, pts, h)
    _check_invertible(pts, plus, minus, c, p, m)

    def kf(x):
        return inv2(jf(x)) @ df(x)

    _, _, _, kc, kp, km = _sample_stencil(kf, pts, h)
    du, _, dv, _, _, _ = _complex_derivs(c, p, m, h)
    _, kub, _, kvb, kuub, kvvb = _complex_derivs(kc, kp, km, h)
    Ji = inv2(c)
    res = (du @ kub @ Ji + c @ kuub @ Ji - c @ kub @ Ji @ du @ Ji
           + dv @ kvb @ Ji + c @ kvvb @ Ji - c @ kvb @ Ji @ dv @ Ji)
    return _report("linearisation", pts, res)


def linearisation_exact(J: YangJ, K: MatrixPolyField) -> MatrixPolyField:
    """Exact linearised residual for abelian ``J = exp(a tau3)`` and diagonal ``K = J^-1 Jdot``.

    ``K`` commutes with ``J`` so the residual collapses to ``(1/4) Laplacian(K)``.
    """
    if J.exponent is None:
        raise ValueError("exact mode needs J = exp(a tau3)")
    if not (K[0, 1].is_zero() and K[1, 0].is_zero()):
        raise ValueError("exact mode needs K = J^-1 Jdot diagonal")
    lap = K.laplacian()
    return lap * (_half(K[0, 0]) * _half(K[0, 0]))
