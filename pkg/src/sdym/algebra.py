"""2x2 complex matrix algebra used throughout the toolkit.

Matrices are numpy arrays of shape ``(..., 2, 2)``; every function here is
vectorised over the leading axes.  The exact arithmetic needed for identity
tests lives in :class:`GaussianRational`, which plugs into the polynomial
machinery of :mod:`sdym.polyfield`.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np

__all__ = [
    "GaussianRational",
    "QI",
    "ID2",
    "TAU1",
    "TAU2",
    "TAU3",
    "EPS",
    "INF",
    "DomainError",
    "sigma",
    "sigma_array",
    "star_loop",
    "dagger",
    "det2",
    "trace2",
    "inv2",
    "commutator",
    "mat_exp2",
    "hermitian_sqrt",
    "frob",
]


class GaussianRational:
    """Exact complex number ``re + i*im`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is Fraction else Fraction(re)
        self.im = im if type(im) is Fraction else Fraction(im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    @classmethod
    def _coerce(cls, other):
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (int, Rational)):
            return cls(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) + other
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) * other
        return GaussianRational(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) / other
        n = o.re * o.re + o.im * o.im
        return self * GaussianRational(o.re / n, -o.im / n)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return other / complex(self)
        return o / self

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    @property
    def real(self):
        return self.re

    @property
    def imag(self):
        return self.im

    def __abs__(self):
        return abs(complex(self))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __eq__(self, other):
        if type(other) is int:
            return not self.im and self.re == other
        o = self._coerce(other)
        if o is None:
            try:
                return complex(self) == complex(other)
            except TypeError:
                return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        return f"QI({self.re}, {self.im})"


QI = GaussianRational

ID2 = np.eye(2, dtype=complex)
TAU1 = np.array([[0, 1], [1, 0]], dtype=complex)
TAU2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
TAU3 = np.array([[1, 0], [0, -1]], dtype=complex)
# skew generator of SL2(R) orbits
EPS = np.array([[0, 1], [-1, 0]], dtype=complex)


class _Infinity:
    """The point at infinity on CP^1."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


class DomainError(ValueError):
    """A loop was evaluated outside the annulus on which it is defined."""


def sigma(z):
    """The antiholomorphic involution ``z -> -1/conj(z)`` of CP^1."""
    if z is INF:
        return 0j
    z = complex(z)
    if z == 0:
        return INF
    return -1.0 / z.conjugate()


def sigma_array(z):
    """Vectorised :func:`sigma` for finite, nonzero ``z``."""
    z = np.asarray(z, dtype=complex)
    return -1.0 / np.conj(z)


def dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def det2(m):
    m = np.asarray(m)
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def trace2(m):
    m = np.asarray(m)
    return m[..., 0, 0] + m[..., 1, 1]


def inv2(m):
    """Inverse via the adjugate; no singularity check."""
    m = np.asarray(m)
    out = np.empty(m.shape, dtype=np.result_type(m.dtype, complex))
    d = det2(m)
    out[..., 0, 0] = m[..., 1, 1] / d
    out[..., 1, 1] = m[..., 0, 0] / d
    out[..., 0, 1] = -m[..., 0, 1] / d
    out[..., 1, 0] = -m[..., 1, 0] / d
    return out


def commutator(a, b):
    return a @ b - b @ a


def frob(m):
    """Frobenius norm over the trailing 2x2 axes."""
    return np.sqrt(np.sum(np.abs(m) ** 2, axis=(-2, -1)))


def star_loop(g, z, annulus=None):
    """Evaluate ``g*(z) = g(sigma(z))^dagger``.

    ``g`` is a callable from a spectral point to a 2x2 matrix.  If
    ``annulus = (r_in, r_out)`` is given, ``sigma(z)`` must lie in the open
    annulus ``r_in < |w| < r_out``.
    """
    w = sigma(z)
    if annulus is not None:
        r_in, r_out = annulus
        if w is INF or not (r_in < abs(w) < r_out):
            raise DomainError(f"sigma({z!r}) = {w!r} lies outside the annulus {annulus}")
    return dagger(np.asarray(g(w), dtype=complex))


_SINHC_SERIES_CUTOFF = 1e-4


def _sinhc(s):
    small = np.abs(s) < _SINHC_SERIES_CUTOFF
    safe = np.where(small, 1.0, s)
    s2 = s * s
    return np.where(small, 1.0 + s2 / 6.0 + s2 * s2 / 120.0, np.sinh(safe) / safe)


def mat_exp2(m):
    """Closed-form exponential of 2x2 matrices.

    With ``m = (tr m / 2) Id + m0`` and ``s**2 = -det m0``,
    ``exp(m) = exp(tr m / 2) (cosh(s) Id + sinh(s)/s m0)``.  Both ``cosh`` and
    ``sinh(s)/s`` are even in ``s`` so the branch of the square root is
    irrelevant; the nilpotent limit ``s -> 0`` uses the Taylor series.
    """
    m = np.asarray(m, dtype=complex)
    if not (m[..., 0, 1].any() or m[..., 1, 0].any()):
        out = np.zeros_like(m)
        out[..., 0, 0] = np.exp(m[..., 0, 0])
        out[..., 1, 1] = np.exp(m[..., 1, 1])
        return out
    half_tr = 0.5 * trace2(m)
    m0 = m - half_tr[..., None, None] * ID2
    s2 = m0[..., 0, 0] ** 2 + m0[..., 0, 1] * m0[..., 1, 0]
    s = np.sqrt(s2)
    c = np.cosh(s)
    sc = _sinhc(s)
    out = sc[..., None, None] * m0
    out[..., 0, 0] += c
    out[..., 1, 1] += c
    return np.exp(half_tr)[..., None, None] * out


def hermitian_sqrt(h, tol=1e-12):
    """Hermitian positive-definite square root of a 2x2 Hermitian PD matrix.

    Uses ``S = (H + sqrt(det H) Id) / sqrt(tr H + 2 sqrt(det H))``.
    """
    h = np.asarray(h, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(h))))
    if np.max(np.abs(h - dagger(h))) > tol * scale:
        raise ValueError("matrix is not Hermitian")
    d = det2(h).real
    t = trace2(h).real
    if np.any(t <= 0) or np.any(d <= 0):
        raise ValueError("matrix is not positive definite")
    rd = np.sqrt(d)
    return (h + rd[..., None, None] * ID2) / np.sqrt(t + 2 * rd)[..., None, None]
