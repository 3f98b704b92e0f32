"""Symmetry action on patching matrices and the finite-type chain conditions.

Loop fields are callables ``G(points, z)`` returning samples of shape
``(P, N, 2, 2)`` for points ``(P, 4)`` and spectral values ``(N,)``.
:class:`~sdym.twistor.PatchingMatrix`, :class:`GeneratorT` and the results of
:func:`crane_action` and :func:`flow_patching` all follow this protocol.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .algebra import ID2, TAU3, dagger, frob, mat_exp2, sigma_array
from .polyfield import Laurent, MatrixPolyField, PolyField
from .riemann_hilbert import LaurentBand, unit_circle

__all__ = [
    "GeneratorT",
    "IdentityField",
    "FiniteTypeChain",
    "TypeResult",
    "CommutingResult",
    "NotHarmonicError",
    "as_loop_field",
    "star_field",
    "crane_action",
    "gdot_rhs",
    "flow_patching",
    "commutator_check",
    "finite_type_residual",
    "extend_chain",
    "type_of",
    "commuting_chain_check",
]


class NotHarmonicError(ValueError):
    """The chain cannot be extended: its integrability condition fails."""


def _as_matrix(p) -> MatrixPolyField:
    if isinstance(p, MatrixPolyField):
        return p
    return MatrixPolyField.from_scalar(p, ID2)


class GeneratorT:
    """Laurent series ``T = sum_n T_n z^n`` with traceless polynomial-matrix coefficients."""

    def __init__(self, coeffs: Laurent | dict, *, check=True):
        series = coeffs if isinstance(coeffs, Laurent) else Laurent(coeffs)
        self.series = series.map(_as_matrix)
        if check:
            for n, c in self.series.items():
                if not c.trace().is_zero():
                    raise ValueError(f"coefficient z^{n} is not traceless")
            bad = self.annihilation_defect()
            if bad:
                raise ValueError(f"generator is not annihilated by the twistor operators (defect {bad:.3g})")

    @classmethod
    def diagonal(cls, phi: Laurent, scale=1, direction=TAU3) -> GeneratorT:
        """``scale * phi * direction`` for a scalar Laurent series ``phi``."""
        d = np.asarray(direction) * 1
        return cls(phi.map(lambda p: MatrixPolyField.from_scalar(p * scale, d)))

    @classmethod
    def constant(cls, coeffs: dict) -> GeneratorT:
        """``x``-independent generator from ``{n: 2x2 array}``."""
        return cls({n: MatrixPolyField.from_constant(m) for n, m in coeffs.items()})

    def annihilation_defect(self) -> float:
        r1 = self.series.derive("ubar") - self.series.derive("v").shift(1)
        r2 = self.series.derive("vbar") + self.series.derive("u").shift(1)
        return max(r1.max_abs(), r2.max_abs())

    def star(self) -> GeneratorT:
        return GeneratorT(self.series.star(), check=False)

    def __add__(self, other: GeneratorT) -> GeneratorT:
        return GeneratorT(self.series + other.series, check=False)

    def scale(self, c) -> GeneratorT:
        return GeneratorT(self.series.scale(c), check=False)

    def __call__(self, points, z):
        return self.series.evaluate(np.asarray(points, dtype=float).reshape(-1, 4), np.asarray(z).reshape(-1))

    def to_json(self):
        out = []
        for n, c in self.series.items():
            for idx, p in enumerate(c.entries):
                if not p.is_zero():
                    out.append({"n": int(n), "entry": [idx // 2, idx % 2], "poly": p.to_json()})
        return out

    @classmethod
    def from_json(cls, data, *, check=True, exact=False) -> GeneratorT:
        acc: dict = {}
        for rec in data:
            n = int(rec["n"])
            i, j = (int(x) for x in rec["entry"])
            entries = list(acc.get(n, MatrixPolyField.zero()).entries)
            p = PolyField.from_json(rec["poly"])
            if exact:
                p = p.to_exact()
            entries[2 * i + j] = entries[2 * i + j] + p
            acc[n] = MatrixPolyField(tuple(entries))
        return cls(acc, check=check)


class IdentityField:
    """The loop field ``G = Id``, the patching matrix of the flat connection."""

    def __call__(self, points, z):
        p = np.asarray(points).reshape(-1, 4).shape[0]
        return np.broadcast_to(ID2, (p, np.asarray(z).reshape(-1).size, 2, 2)).copy()


def as_loop_field(obj):
    """Wrap constants, :class:`LaurentBand` loops and Laurent series as loop fields."""
    if isinstance(obj, LaurentBand):
        def field(points, z, _b=obj):
            p = np.asarray(points).reshape(-1, 4).shape[0]
            return np.broadcast_to(_b(np.asarray(z).reshape(-1)), (p, np.size(z), 2, 2)).copy()
        return field
    if isinstance(obj, Laurent):
        return lambda points, z: obj.evaluate(np.asarray(points, dtype=float).reshape(-1, 4), np.asarray(z).reshape(-1))
    if isinstance(obj, np.ndarray) and obj.shape == (2, 2):
        return lambda points, z: np.broadcast_to(obj, (np.asarray(points).reshape(-1, 4).shape[0], np.size(z), 2, 2)).copy()
    if callable(obj):
        return obj
    raise TypeError(f"cannot use {type(obj).__name__} as a loop field")


def star_field(G):
    """``G*(x, z) = G(x, -1/conj(z))^dagger``."""
    G = as_loop_field(G)
    return lambda points, z: dagger(G(points, sigma_array(np.asarray(z).reshape(-1))))


class _CraneAction:
    def __init__(self, g, G):
        self.g = as_loop_field(g)
        self.G = as_loop_field(G)
        self.g_star = star_field(self.g)

    def __call__(self, points, z):
        return self.g(points, z) @ self.G(points, z) @ self.g_star(points, z)


def crane_action(g, G):
    """``(g . G)(x, z) = g(x, z) G(x, z) g*(x, z)`` as a new loop field."""
    return _CraneAction(g, G)


def gdot_rhs(G, T, rho0=None, rho_inf=None):
    """Loop field ``-T G - G T* + rho_inf G + G rho_0``."""
    G = as_loop_field(G)
    T = as_loop_field(T)
    T_star = star_field(T)
    r0 = as_loop_field(rho0) if rho0 is not None else None
    ri = as_loop_field(rho_inf) if rho_inf is not None else None

    def field(points, z):
        g = G(points, z)
        out = -T(points, z) @ g - g @ T_star(points, z)
        if ri is not None:
            out = out + ri(points, z) @ g
        if r0 is not None:
            out = out + g @ r0(points, z)
        return out

    return field


@dataclass
class FlowState:
    """``G_t = exp(-t T) G exp(-t T*)``, the closed-form flow with both gauge fields zero."""

    t: float
    base: object
    generator: object

    def __post_init__(self):
        self._G = as_loop_field(self.base)
        self._T = as_loop_field(self.generator)
        self._T_star = star_field(self._T)

    def __call__(self, points, z):
        left = mat_exp2(-self.t * self._T(points, z))
        right = mat_exp2(-self.t * self._T_star(points, z))
        if isinstance(self._G, IdentityField):
            return left @ right
        return left @ self._G(points, z) @ right


def flow_patching(G, T, t: float) -> FlowState:
    if not np.isfinite(t):
        raise ValueError("flow time must be finite")
    return FlowState(float(t), G, T)


def commutator_check(T, points, nodes: int = 64) -> float:
    """Sup of ``||T T* - T* T||`` over ``points`` and ``nodes`` unit-circle samples."""
    T = as_loop_field(T)
    z = unit_circle(nodes)
    a = T(points, z)
    b = star_field(T)(points, z)
    return float(np.max(frob(a @ b - b @ a)))


# finite type

_DERIV_PAIRS = ("ubar", "v"), ("vbar", "u")


@dataclass
class FiniteTypeChain:
    """Coefficients ``a_n`` for ``n = -d..d`` of ``Phi = sum a_n z^n``."""

    d: int
    coeffs: dict

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("d must be nonnegative")
        self.coeffs = {int(n): _as_matrix(c) for n, c in self.coeffs.items()}
        extra = [n for n in self.coeffs if abs(n) > self.d]
        if extra:
            raise ValueError(f"coefficients outside -d..d: {extra}")

    @classmethod
    def scalar(cls, coeffs: dict, direction=TAU3) -> FiniteTypeChain:
        d = max((abs(n) for n in coeffs), default=0)
        return cls(d, {n: MatrixPolyField.from_scalar(p, direction) for n, p in coeffs.items()})

    def get(self, n) -> MatrixPolyField:
        return self.coeffs.get(n, MatrixPolyField.zero())

    @property
    def series(self) -> Laurent:
        return Laurent(self.coeffs)

    def is_real(self) -> bool:
        s = self.series
        return (s.star() - s).is_zero()

    def generator(self) -> GeneratorT:
        return GeneratorT(self.series)


def finite_type_residual(chain: FiniteTypeChain) -> list:
    """All chain residuals as exact polynomials.

    Order: ``d_ubar a_-d``, ``d_vbar a_-d``; then for ``n = -d..d-1`` the pair
    ``d_ubar a_{n+1} - d_v a_n``, ``d_vbar a_{n+1} + d_u a_n``; then
    ``d_v a_d``, ``d_u a_d``.
    """
    d = chain.d
    a = chain.get
    out = [a(-d).derive("ubar"), a(-d).derive("vbar")]
    for n in range(-d, d):
        out.append(a(n + 1).derive("ubar") - a(n).derive("v"))
        out.append(a(n + 1).derive("vbar") + a(n).derive("u"))
    out += [a(d).derive("v"), a(d).derive("u")]
    return out


def _entrywise(fn, a):
    if isinstance(a, MatrixPolyField):
        return MatrixPolyField(tuple(fn(p) for p in a.entries))
    return fn(a)


def _is_harmonic(a) -> bool:
    if isinstance(a, MatrixPolyField):
        return all(p.laplacian().is_zero() for p in a.entries)
    return a.laplacian().is_zero()


def _step_up(a: PolyField) -> PolyField:
    # d_ubar b = d_v a, d_vbar b = -d_u a; no pure (u, v) part
    first = a.derive("v").integrate("ubar")
    rest = (-a.derive("u") - first.derive("vbar")).integrate("vbar")
    return (first + rest).drop_holomorphic()


def _step_down(a: PolyField) -> PolyField:
    # d_v b = d_ubar a, d_u b = -d_vbar a; no pure (ubar, vbar) part
    first = a.derive("ubar").integrate("v")
    rest = (-a.derive("vbar") - first.derive("u")).integrate("u")
    return (first + rest).drop_antiholomorphic()


def extend_chain(a, direction: str = "up"):
    """A particular next link of the chain through a harmonic ``a``.

    ``up`` solves ``d_ubar b = d_v a``, ``d_vbar b = -d_u a`` with the pure
    ``(u, v)`` part of ``b`` set to zero; ``down`` solves ``d_v b = d_ubar a``,
    ``d_u b = -d_vbar a`` with the pure ``(ubar, vbar)`` part set to zero.
    """
    if direction not in ("up", "down"):
        raise ValueError("direction is 'up' or 'down'")
    if not _is_harmonic(a):
        raise NotHarmonicError("chain link is not harmonic; the next link does not exist")
    return _entrywise(_step_up if direction == "up" else _step_down, a)


@dataclass
class TypeResult:
    d: int | None
    chain: FiniteTypeChain | None

    @property
    def finite(self) -> bool:
        return self.d is not None

    def __int__(self):
        if self.d is None:
            raise ValueError("not of finite type within the search bound")
        return self.d


def _walk(a: PolyField, direction: str, d_max: int):
    """Links from ``a`` until the boundary condition holds; ``None`` if ``d_max`` is exceeded."""
    stop = ("v", "u") if direction == "up" else ("ubar", "vbar")
    links = [a]
    while not all(links[-1].derive(x).is_zero() for x in stop):
        if len(links) > d_max:
            return None
        links.append(extend_chain(links[-1], direction))
    return links


def type_of(a: PolyField, d_max: int = 8, direction=TAU3) -> TypeResult:
    """Smallest ``d`` for which a chain ``a_-d..a_d`` through ``a_0 = a`` exists, with a witness."""
    if not a.laplacian().is_zero():
        raise NotHarmonicError("finite type is only defined for harmonic functions")
    up = _walk(a, "up", d_max)
    down = _walk(a, "down", d_max)
    if up is None or down is None:
        return TypeResult(None, None)
    d = max(len(up), len(down)) - 1
    coeffs = {n: p for n, p in enumerate(up)}
    coeffs.update({-n: p for n, p in enumerate(down) if n})
    chain = FiniteTypeChain(d, {n: MatrixPolyField.from_scalar(p, direction) for n, p in coeffs.items()
                                if not p.is_zero()})
    return TypeResult(d, chain)


@dataclass
class CommutingResult:
    commuting: bool
    direction: np.ndarray | None
    real_a0: bool | None

    @property
    def reducible(self) -> bool:
        return bool(self.commuting and self.direction is not None and self.real_a0)

    def to_json(self):
        d = None if self.direction is None else [[float(x.real), float(x.imag)] for x in self.direction.reshape(4)]
        return {"commuting": self.commuting, "direction": d, "real_a0": self.real_a0, "reducible": self.reducible}


def _normalise_direction(alpha: np.ndarray) -> np.ndarray:
    s2 = -(alpha[0, 0] * alpha[1, 1] - alpha[0, 1] * alpha[1, 0])  # alpha^2 = s2 Id when traceless
    if abs(s2) > 1e-12:
        alpha = alpha / np.sqrt(s2)
    else:
        alpha = alpha / np.linalg.norm(alpha)
    flat = alpha.reshape(4)
    lead = flat[np.flatnonzero(np.abs(flat) > 1e-12)[0]]
    alpha = alpha * (abs(lead) / lead)
    return np.where(np.abs(alpha) < 1e-14, 0, alpha)


def commuting_chain_check(chain: FiniteTypeChain) -> CommutingResult:
    """Pairwise commutators of the links, and the common direction when they commute.

    If every ``[a_i, a_j]`` vanishes the coefficient matrices span one line
    ``C alpha``; ``alpha`` is normalised to ``alpha^2 = Id`` (or unit norm when
    nilpotent) with its leading entry positive.  ``real_a0`` reports whether
    ``a_0 = s alpha`` has real ``s``.
    """
    links = [c for _, c in sorted(chain.coeffs.items()) if not c.is_zero()]
    for a, b in combinations(links, 2):
        if not a.commutator(b).is_zero():
            return CommutingResult(False, None, None)
    mats = [np.asarray(c.coefficient_matrix(m), dtype=complex).reshape(4)
            for c in links for m in c.monomials()]
    if not mats:
        return CommutingResult(True, None, None)
    _, sv, vh = np.linalg.svd(np.array(mats))
    if len(sv) > 1 and sv[1] > 1e-10 * sv[0]:
        # commuting but not collinear: only possible with a central part
        return CommutingResult(True, None, None)
    alpha = _normalise_direction(vh[0].conj().reshape(2, 2))
    a0 = chain.get(0)
    k = int(np.argmax(np.abs(alpha.reshape(4))))
    s = a0.entries[k] * complex(1 / alpha.reshape(4)[k])
    return CommutingResult(True, alpha, bool(s.is_real(1e-12)))
