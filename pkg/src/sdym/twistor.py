"""Contour transforms from twistor representatives to harmonic data and patching matrices.

A representative is a Laurent polynomial in the spectral variable ``w``

    f = sum c * p1**d1 * p2**d2 * w**k,   p1 = u - w*vbar,  p2 = v + w*ubar,

so every contour integral over ``|w| = r`` can be done two ways: exactly, by
reading off residues at ``w = 0`` (and ``w = z``), and numerically, by the
trapezoid rule on equispaced nodes.  The two must agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Mapping

import numpy as np

from .algebra import TAU3, dagger, frob, sigma_array
from .connection import ConnectionField
from .polyfield import U, UBAR, V, VBAR, Laurent, MatrixPolyField, PolyField, complex_coords, exact_coeff

__all__ = [
    "TwistorRep",
    "ContourSpec",
    "PatchingMatrix",
    "BandwidthError",
    "BadRepresentativeError",
    "penrose_a",
    "penrose_a_exact",
    "cauchy_F",
    "cauchy_F_exact",
    "patching_from_rep",
    "twistor_annihilation",
    "alp_residual",
    "alp_log_residual",
]


class BandwidthError(ValueError):
    """Too few contour nodes for the integrand's w-bandwidth."""


class BadRepresentativeError(ValueError):
    """The representative does not produce a real harmonic function."""


def _binom_poly(a: PolyField, b: PolyField, n: int) -> dict:
    """Coefficients in ``w`` of ``(a + w b)**n``."""
    return {j: (a ** (n - j)) * (b ** j) * math.comb(n, j) for j in range(n + 1)}


class TwistorRep:
    """Laurent polynomial ``f(p1, p2, w)``; ``terms`` maps ``(d1, d2, k)`` to coefficients."""

    __slots__ = ("terms", "__dict__")

    def __init__(self, terms: Mapping[tuple, object]):
        self.terms = {}
        for key, c in terms.items():
            d1, d2, k = (int(x) for x in key)
            if d1 < 0 or d2 < 0:
                raise ValueError("powers of p1, p2 must be nonnegative")
            if c != 0:
                self.terms[(d1, d2, k)] = c

    @classmethod
    def from_json(cls, data, exact=False):
        terms = {}
        for t in data:
            key = (int(t["d1"]), int(t["d2"]), int(t["k"]))
            c = complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))
            c = exact_coeff(c) if exact else c
            terms[key] = terms[key] + c if key in terms else c
        return cls(terms)

    def to_json(self):
        return [{"d1": d1, "d2": d2, "k": k, "re": float(complex(c).real), "im": float(complex(c).imag)}
                for (d1, d2, k), c in sorted(self.terms.items())]

    def conjugate(self) -> TwistorRep:
        """Representative of the complex-conjugate harmonic function.

        Pulling the contour integral back along ``w -> -1/conj(w)`` gives
        ``-w**-2 * conj(f)(p2/w, -p1/w, -1/w)``.
        """
        out: dict = {}
        for (d1, d2, k), c in self.terms.items():
            key = (d2, d1, -d1 - d2 - k - 2)
            cc = -c.conjugate() if hasattr(c, "conjugate") else -c
            if (d2 + k) % 2:
                cc = -cc
            out[key] = out[key] + cc if key in out else cc
        return TwistorRep(out)

    def __add__(self, other: TwistorRep) -> TwistorRep:
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out[key] + c if key in out else c
        return TwistorRep(out)

    def scale(self, c) -> TwistorRep:
        return TwistorRep({key: v * c for key, v in self.terms.items()})

    def real_part(self) -> TwistorRep:
        """Representative of ``Re a``."""
        exact = all(not isinstance(c, (float, complex)) for c in self.terms.values())
        return (self + self.conjugate()).scale(Fraction(1, 2) if exact else 0.5)

    @property
    def w_range(self) -> tuple:
        """Nominal ``(min, max)`` power of ``w`` after expanding ``p1, p2``."""
        if not self.terms:
            return (0, 0)
        return (min(k for _, _, k in self.terms), max(k + d1 + d2 for d1, d2, k in self.terms))

    @property
    def bandwidth(self) -> int:
        lo, hi = self.w_range
        return max(abs(lo), abs(hi))

    @cached_property
    def w_expansion(self) -> dict:
        """``{m: f_m}`` with ``f = sum_m f_m(u, ubar, v, vbar) w**m``."""
        out: dict = {}
        for (d1, d2, k), c in self.terms.items():
            e1 = _binom_poly(U, -VBAR, d1)
            e2 = _binom_poly(V, UBAR, d2)
            for i, p in e1.items():
                for j, q in e2.items():
                    m = k + i + j
                    term = p * q * c
                    out[m] = out[m] + term if m in out else term
        return {m: p for m, p in out.items() if not p.is_zero()}

    def evaluate(self, points, w):
        """``f(p1(x, w), p2(x, w), w)`` on points ``(P, 4)`` x nodes ``(N,)``."""
        u, ub, v, vb = complex_coords(np.asarray(points, dtype=float).reshape(-1, 4))
        w = np.asarray(w, dtype=complex).reshape(-1)
        p1 = u[:, None] - w[None, :] * vb[:, None]
        p2 = v[:, None] + w[None, :] * ub[:, None]
        out = np.zeros(p1.shape, dtype=complex)
        for (d1, d2, k), c in self.terms.items():
            out += complex(c) * p1 ** d1 * p2 ** d2 * w[None, :] ** k
        return out


@dataclass(frozen=True)
class ContourSpec:
    radius: float = 1.0
    nodes: int = 64

    @classmethod
    def auto(cls, f: TwistorRep, radius=1.0):
        return cls(radius, 2 * f.bandwidth + 8)

    def points(self, n=None):
        n = self.nodes if n is None else n
        return self.radius * np.exp(2j * np.pi * np.arange(n) / n)


def penrose_a_exact(f: TwistorRep) -> PolyField:
    """Residue at ``w = 0``: the coefficient of ``w**-1``."""
    return f.w_expansion.get(-1, PolyField())


def _check_nodes(f: TwistorRep, c: ContourSpec):
    need = 2 * f.bandwidth + 2
    if c.nodes < need:
        raise BandwidthError(f"{c.nodes} contour nodes; the integrand needs at least {need}")


def penrose_a(f: TwistorRep, points, c: ContourSpec = ContourSpec()) -> np.ndarray:
    """Trapezoid rule for ``(1/2 pi i) \\oint f(u - w vbar, v + w ubar, w) dw`` on ``|w| = r``."""
    _check_nodes(f, c)
    w = c.points()
    vals = f.evaluate(points, w) * w[None, :]
    return np.sum(vals, axis=1) / c.nodes


def cauchy_F_exact(f: TwistorRep) -> Laurent:
    """Exact ``F(x, z)`` for ``|z|`` inside the contour.

    Expanding ``(w + z)/(w - z) = 1 + 2 sum_{j>=1} (z/w)**j`` gives
    ``F_0 = f_{-1}`` and ``F_j = 2 f_{j-1}`` for ``j >= 1``; in particular
    ``F(x, 0)`` is the Penrose transform.
    """
    fw = f.w_expansion
    out = {}
    if -1 in fw:
        out[0] = fw[-1]
    for m, p in fw.items():
        if m >= 0:
            out[m + 1] = p * 2
    return Laurent(out)


def cauchy_F(f: TwistorRep, points, z, c: ContourSpec = ContourSpec(), *, tail_eps=1e-17) -> np.ndarray:
    """Trapezoid evaluation of the Cauchy-kernel transform at points ``(P, 4)`` and ``z`` ``(Z,)``.

    The kernel ``(w + z)/(w - z)`` is not band-limited; the node count is raised
    until the geometric tail ``(|z|/r)**N`` is below ``tail_eps``.
    """
    _check_nodes(f, c)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    ratio = np.max(np.abs(z)) / c.radius
    if np.any(np.abs(np.abs(z) - c.radius) < 1e-12 * c.radius):
        raise ValueError("z lies on the integration contour")
    n = c.nodes
    if 0 < ratio < 1:
        n = max(n, f.bandwidth + 2 + int(math.ceil(math.log(tail_eps) / math.log(ratio))))
    elif ratio > 1:
        inv = 1.0 / np.min(np.abs(z)) * c.radius
        if inv < 1:
            n = max(n, f.bandwidth + 2 + int(math.ceil(math.log(tail_eps) / math.log(inv))))
    w = c.points(n)
    fv = f.evaluate(points, w) * w[None, :]
    kern = (w[None, :] + z[:, None]) / (w[None, :] - z[:, None])
    return np.sum(fv[:, None, :] * kern[None, :, :], axis=-1) / n


def twistor_annihilation(phi: Laurent):
    """Coefficient-wise residuals of ``(d_ubar - z d_v) phi`` and ``(d_vbar + z d_u) phi``."""
    r1 = phi.derive("ubar") - phi.derive("v").shift(1)
    r2 = phi.derive("vbar") + phi.derive("u").shift(1)
    return r1, r2


class PatchingMatrix:
    """``G(x, z) = exp(phi(x, z) direction)`` with ``phi`` a Laurent series of fields."""

    def __init__(self, phi: Laurent, direction=TAU3):
        self.phi = phi
        self.direction = np.asarray(direction, dtype=complex)
        self._diag = np.allclose(self.direction, TAU3)

    def star(self) -> PatchingMatrix:
        return PatchingMatrix(self.phi.star(), dagger(self.direction))

    def is_real(self) -> bool:
        return (self.phi.star() - self.phi).is_zero() and np.allclose(dagger(self.direction), self.direction)

    def annihilation_residuals(self):
        return twistor_annihilation(self.phi)

    def exponent(self, points, z):
        return self.phi.evaluate(points, z)

    def __call__(self, points, z):
        ph = self.phi.evaluate(points, z)
        if self._diag:
            out = np.zeros(ph.shape + (2, 2), dtype=complex)
            out[..., 0, 0] = np.exp(ph)
            out[..., 1, 1] = np.exp(-ph)
            return out
        from .algebra import mat_exp2
        return mat_exp2(ph[..., None, None] * self.direction)

    sample = __call__

    def star_sample(self, points, z):
        """``G*(x, z) = G(x, sigma(z))^dagger`` evaluated directly."""
        return dagger(self(points, sigma_array(z)))

    def reality_defect(self, points, nodes=64) -> float:
        """Largest relative mismatch between ``G`` and ``G*`` on the unit circle."""
        z = np.exp(2j * np.pi * np.arange(nodes) / nodes)
        g = self(points, z)
        return float(np.max(frob(g - self.star_sample(points, z)) / frob(g)))


def patching_from_rep(f: TwistorRep, *, check_real=True) -> PatchingMatrix:
    """``G = exp[(F + F*)/2 tau3]`` with ``F`` the Cauchy transform of ``f``.

    ``phi_n = (F_n + (-1)^n conj(F_{-n}))/2``.  A representative whose
    Penrose transform is not real is rejected.
    """
    F = cauchy_F_exact(f)
    a = F.get(0, PolyField())
    if check_real:
        tol = 0.0 if a.is_exact else 1e-12 * max(1.0, a.max_abs())
        if not a.is_real(tol):
            raise BadRepresentativeError("Penrose transform of the representative is not real")
    half = Fraction(1, 2) if all(c.is_exact for _, c in F.items()) else 0.5
    phi = (F + F.star()).scale(half)
    return PatchingMatrix(phi)


def alp_residual(Psi: Laurent, A: ConnectionField):
    """Residual series of the associated linear problem for polynomial ``Psi``.

    ``(d_vbar + z d_u) Psi + (A_vbar + z A_u) Psi`` and
    ``(d_ubar - z d_v) Psi + (A_ubar - z A_v) Psi``.
    """
    Av = Laurent({0: A.A_vbar, 1: A.A_u})
    Au = Laurent({0: A.A_ubar, 1: -A.A_v})
    r1 = Psi.derive("vbar") + Psi.derive("u").shift(1) + Av * Psi
    r2 = Psi.derive("ubar") - Psi.derive("v").shift(1) + Au * Psi
    return r1, r2


def alp_log_residual(F: Laurent, A: ConnectionField, direction=TAU3):
    """Linear-problem residual for ``Psi = exp(F/2 direction)`` divided by ``Psi`` on the right.

    Since ``Psi`` commutes with its derivative here, ``(d + A) Psi = L Psi`` with
    ``L = (1/2)(dF) direction + A``; the pair of ``L`` series is returned and
    vanishes exactly when ``Psi`` solves the linear problem.
    """
    half = Fraction(1, 2) if all(c.is_exact for _, c in F.items()) else 0.5
    dF1 = F.derive("vbar") + F.derive("u").shift(1)
    dF2 = F.derive("ubar") - F.derive("v").shift(1)
    as_matrix = lambda s: s.map(lambda p: MatrixPolyField.from_scalar(p * half, direction))
    l1 = as_matrix(dF1) + Laurent({0: A.A_vbar, 1: A.A_u})
    l2 = as_matrix(dF2) + Laurent({0: A.A_ubar, 1: -A.A_v})
    return l1, l2
