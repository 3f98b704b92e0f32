"""Polynomial fields on R^4 in the complex coordinates (u, ubar, v, vbar).

``u = t + i x`` and ``v = y - i z``; the four symbols are treated as
formally independent, so a field is *real* when it equals its
:meth:`PolyField.conjugate` as a polynomial.

Coefficients may be Python ``complex``/``float`` (float mode) or
``int``/``Fraction``/:class:`~sdym.algebra.GaussianRational` (exact mode);
the two modes mix by promotion to ``complex``.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Callable, Iterable, Mapping, NamedTuple

import numpy as np

from .algebra import GaussianRational

__all__ = [
    "VARS",
    "R4Point",
    "complex_coords",
    "PolyField",
    "MatrixPolyField",
    "Laurent",
    "U",
    "UBAR",
    "V",
    "VBAR",
    "exact_coeff",
    "harmonic_basis",
    "random_harmonic",
    "random_poly",
]

VARS = ("u", "ubar", "v", "vbar")
_VAR_ALIASES = {"u": 0, "ubar": 1, "ū": 1, "v": 2, "vbar": 3, "v̄": 3}
# exponent swap realising complex conjugation: u <-> ubar, v <-> vbar
_CONJ_PERM = (1, 0, 3, 2)


class R4Point(NamedTuple):
    t: float
    x: float
    y: float
    z: float


def complex_coords(points):
    """Return ``(u, ubar, v, vbar)`` arrays for points of shape ``(..., 4)``."""
    p = np.asarray(points, dtype=float)
    t, x, y, z = p[..., 0], p[..., 1], p[..., 2], p[..., 3]
    return t + 1j * x, t - 1j * x, y - 1j * z, y + 1j * z


def _var_index(var):
    if isinstance(var, int):
        return var
    try:
        return _VAR_ALIASES[var]
    except KeyError:
        raise ValueError(f"unknown variable {var!r}; expected one of {VARS}") from None


def _is_exact(c):
    return isinstance(c, (int, Rational, GaussianRational)) and not isinstance(c, bool)


def exact_coeff(c):
    """Convert a numeric scalar to an exact coefficient (floats convert exactly)."""
    if _is_exact(c):
        return c
    c = complex(c)
    re, im = Fraction(c.real), Fraction(c.imag)
    if im == 0:
        return re.numerator if re.denominator == 1 else re
    return GaussianRational(re, im)


def _conj(c):
    return c.conjugate()


class PolyField:
    """Polynomial in the four commuting symbols ``u, ubar, v, vbar``.

    ``terms`` maps exponent tuples ``(e_u, e_ubar, e_v, e_vbar)`` to nonzero
    coefficients.  Instances are treated as immutable.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple, object] | None = None):
        clean = {}
        if terms:
            for mono, c in terms.items():
                if c:
                    clean[tuple(int(e) for e in mono)] = c
        self.terms = clean

    # -- constructors -------------------------------------------------------
    @classmethod
    def const(cls, c):
        return cls({(0, 0, 0, 0): c})

    @classmethod
    def var(cls, name):
        e = [0, 0, 0, 0]
        e[_var_index(name)] = 1
        return cls({tuple(e): 1})

    @classmethod
    def monomial(cls, exps, c=1):
        return cls({tuple(exps): c})

    # -- arithmetic ---------------------------------------------------------
    @staticmethod
    def _lift(other):
        if isinstance(other, PolyField):
            return other
        if isinstance(other, (int, float, complex, Rational, GaussianRational)):
            return PolyField.const(other)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for m, c in o.terms.items():
            out[m] = out[m] + c if m in out else c
        return PolyField(out)

    __radd__ = __add__

    def __neg__(self):
        return PolyField({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PolyField):
            if self.is_exact and other.is_exact:
                return _exact_product(self, other)
            out = {}
            for (m1, c1), (m2, c2) in itertools.product(self.terms.items(), other.terms.items()):
                m = (m1[0] + m2[0], m1[1] + m2[1], m1[2] + m2[2], m1[3] + m2[3])
                c = c1 * c2
                out[m] = out[m] + c if m in out else c
            return PolyField(out)
        if isinstance(other, (int, float, complex, Rational, GaussianRational)):
            return PolyField({m: c * other for m, c in self.terms.items()})
        return NotImplemented

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, (int, Rational)):
            other = Fraction(other)
        return PolyField({m: c / other for m, c in self.terms.items()})

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not polynomial")
        out = PolyField.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if self.terms.keys() != o.terms.keys():
            return False
        return all(self.terms[m] == o.terms[m] for m in self.terms)

    __hash__ = None

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        if not self.terms:
            return "PolyField(0)"
        parts = []
        for m in sorted(self.terms):
            sym = "*".join(f"{v}^{e}" if e > 1 else v for v, e in zip(VARS, m) if e)
            parts.append(f"({self.terms[m]})" + (f"*{sym}" if sym else ""))
        return "PolyField(" + " + ".join(parts) + ")"

    # -- calculus -----------------------------------------------------------
    def derive(self, var) -> PolyField:
        """Formal partial derivative with respect to ``u``, ``ubar``, ``v`` or ``vbar``."""
        k = _var_index(var)
        out = {}
        for m, c in self.terms.items():
            e = m[k]
            if e:
                mm = list(m)
                mm[k] = e - 1
                out[tuple(mm)] = c * e
        return PolyField(out)

    def conjugate(self) -> PolyField:
        out = {}
        for m, c in self.terms.items():
            out[tuple(m[i] for i in _CONJ_PERM)] = _conj(c)
        return PolyField(out)

    def laplacian(self) -> PolyField:
        """Flat Laplacian ``4 (d_u d_ubar + d_v d_vbar)``."""
        return (self.derive(0).derive(1) + self.derive(2).derive(3)) * 4

    def integrate(self, var) -> PolyField:
        """Termwise antiderivative (zero constant of integration)."""
        k = _var_index(var)
        out = {}
        for m, c in self.terms.items():
            mm = list(m)
            mm[k] += 1
            e = mm[k]
            out[tuple(mm)] = c / (Fraction(e) if _is_exact(c) else e)
        return PolyField(out)

    # -- predicates and measures ---------------------------------------------
    def is_zero(self, tol=0.0) -> bool:
        if tol == 0.0:
            return not self.terms
        return self.max_abs() <= tol

    def max_abs(self) -> float:
        return max((abs(complex(c)) for c in self.terms.values()), default=0.0)

    @property
    def is_exact(self) -> bool:
        return all(_is_exact(c) for c in self.terms.values())

    def is_real(self, tol=0.0) -> bool:
        return (self - self.conjugate()).is_zero(tol)

    def is_harmonic(self, tol=0.0) -> bool:
        return self.laplacian().is_zero(tol)

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=-1)

    @property
    def holomorphic_degree(self) -> int:
        """Maximal degree in ``(u, v)``."""
        return max((m[0] + m[2] for m in self.terms), default=-1)

    @property
    def antiholomorphic_degree(self) -> int:
        """Maximal degree in ``(ubar, vbar)``."""
        return max((m[1] + m[3] for m in self.terms), default=-1)

    def depends_on(self, var) -> bool:
        k = _var_index(var)
        return any(m[k] for m in self.terms)

    def is_holomorphic(self) -> bool:
        return not (self.depends_on(1) or self.depends_on(3))

    def drop_holomorphic(self) -> PolyField:
        """Remove the monomials built from ``u`` and ``v`` alone."""
        return PolyField({m: c for m, c in self.terms.items() if m[1] or m[3]})

    def drop_antiholomorphic(self) -> PolyField:
        return PolyField({m: c for m, c in self.terms.items() if m[0] or m[2]})

    def constant_term(self):
        return self.terms.get((0, 0, 0, 0), 0)

    # -- conversions --------------------------------------------------------
    def to_float(self) -> PolyField:
        return PolyField({m: complex(c) for m, c in self.terms.items()})

    def to_exact(self) -> PolyField:
        return PolyField({m: exact_coeff(c) for m, c in self.terms.items()})

    def evaluate(self, points):
        """Evaluate at points of shape ``(..., 4)`` given as ``(t, x, y, z)``."""
        coords = complex_coords(points)
        shape = np.shape(coords[0])
        out = np.zeros(shape, dtype=complex)
        powers = [dict() for _ in range(4)]

        def pw(k, e):
            cache = powers[k]
            if e not in cache:
                cache[e] = coords[k] ** e
            return cache[e]

        for m, c in self.terms.items():
            term = np.full(shape, complex(c))
            for k, e in enumerate(m):
                if e:
                    term = term * pw(k, e)
            out += term
        return out

    def to_json(self) -> list:
        return [
            {"eu": m[0], "eubar": m[1], "ev": m[2], "evbar": m[3],
             "re": float(complex(c).real), "im": float(complex(c).imag)}
            for m, c in sorted(self.terms.items())
        ]

    @classmethod
    def from_json(cls, data: Iterable[Mapping], exact=False) -> PolyField:
        terms = {}
        for t in data:
            m = (int(t["eu"]), int(t["eubar"]), int(t["ev"]), int(t["evbar"]))
            c = complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))
            c = exact_coeff(c) if exact else c
            terms[m] = terms[m] + c if m in terms else c
        return cls(terms)


U = PolyField.var("u")
UBAR = PolyField.var("ubar")
V = PolyField.var("v")
VBAR = PolyField.var("vbar")

def _gaussian_integers(p: PolyField):
    """``(terms, D)`` with integer pairs ``(re, im)`` such that ``c = (re + i im) / D``."""
    parts = {m: (Fraction(c.real), Fraction(c.imag)) for m, c in p.terms.items()}
    D = math.lcm(1, *(q.denominator for pair in parts.values() for q in pair))
    return {m: (int(re * D), int(im * D)) for m, (re, im) in parts.items()}, D


def _exact_product(p: PolyField, q: PolyField) -> PolyField:
    # Fraction arithmetic dominates otherwise; integers are an order of magnitude faster
    a, da = _gaussian_integers(p)
    b, db = _gaussian_integers(q)
    acc = {}
    for m1, (r1, i1) in a.items():
        for m2, (r2, i2) in b.items():
            m = (m1[0] + m2[0], m1[1] + m2[1], m1[2] + m2[2], m1[3] + m2[3])
            re, im = acc.get(m, (0, 0))
            acc[m] = (re + r1 * r2 - i1 * i2, im + r1 * i2 + i1 * r2)
    D = da * db
    return PolyField({m: _rational_pair(Fraction(re, D), Fraction(im, D))
                      for m, (re, im) in acc.items() if re or im})


def _rational_pair(re: Fraction, im: Fraction):
    if im:
        return GaussianRational(re, im)
    return re.numerator if re.denominator == 1 else re


_ZERO = PolyField()


class MatrixPolyField:
    """2x2 matrix of :class:`PolyField` entries, stored row-major."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        flat = list(entries)
        if len(flat) == 2 and not isinstance(flat[0], PolyField):
            flat = [flat[0][0], flat[0][1], flat[1][0], flat[1][1]]
        if len(flat) != 4:
            raise ValueError("a 2x2 matrix needs four entries")
        self.entries = tuple(e if isinstance(e, PolyField) else PolyField.const(e) for e in flat)

    @classmethod
    def zero(cls):
        return cls([_ZERO] * 4)

    @classmethod
    def from_constant(cls, m):
        """Constant matrix; numpy float entries are converted exactly."""
        m = np.asarray(m, dtype=object) if not isinstance(m, np.ndarray) else m
        return cls([PolyField.const(exact_coeff(m[i][j])) for i in (0, 1) for j in (0, 1)])

    @classmethod
    def from_scalar(cls, p: PolyField, m) -> MatrixPolyField:
        """The matrix field ``p * m`` for a constant matrix ``m``."""
        return cls([p * exact_coeff(m[i][j]) for i in (0, 1) for j in (0, 1)])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[2 * i + j]

    def __add__(self, other):
        if not isinstance(other, MatrixPolyField):
            return NotImplemented
        return MatrixPolyField([a + b for a, b in zip(self.entries, other.entries)])

    def __sub__(self, other):
        if not isinstance(other, MatrixPolyField):
            return NotImplemented
        return MatrixPolyField([a - b for a, b in zip(self.entries, other.entries)])

    def __neg__(self):
        return MatrixPolyField([-a for a in self.entries])

    def __mul__(self, other):
        # scaling by a scalar or a PolyField; matrix products use ``@``
        if isinstance(other, MatrixPolyField):
            return NotImplemented
        return MatrixPolyField([a * other for a in self.entries])

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        return MatrixPolyField([a / other for a in self.entries])

    def __matmul__(self, other):
        if not isinstance(other, MatrixPolyField):
            return NotImplemented
        a, b = self.entries, other.entries
        return MatrixPolyField([
            a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3],
        ])

    def __eq__(self, other):
        if not isinstance(other, MatrixPolyField):
            return NotImplemented
        return all(a == b for a, b in zip(self.entries, other.entries))

    __hash__ = None

    def __repr__(self):
        e = self.entries
        return f"MatrixPolyField([[{e[0]!r}, {e[1]!r}], [{e[2]!r}, {e[3]!r}]])"

    def dagger(self) -> MatrixPolyField:
        e = self.entries
        return MatrixPolyField([e[0].conjugate(), e[2].conjugate(), e[1].conjugate(), e[3].conjugate()])

    conjugate = dagger

    def transpose(self) -> MatrixPolyField:
        e = self.entries
        return MatrixPolyField([e[0], e[2], e[1], e[3]])

    def derive(self, var) -> MatrixPolyField:
        return MatrixPolyField([a.derive(var) for a in self.entries])

    def laplacian(self) -> MatrixPolyField:
        return MatrixPolyField([a.laplacian() for a in self.entries])

    def trace(self) -> PolyField:
        return self.entries[0] + self.entries[3]

    def det(self) -> PolyField:
        e = self.entries
        return e[0] * e[3] - e[1] * e[2]

    def commutator(self, other) -> MatrixPolyField:
        # closed form; the diagonal products cancel and are never formed
        (a00, a01, a10, a11), (b00, b01, b10, b11) = self.entries, other.entries
        da, db = a00 - a11, b00 - b11
        c00 = a01 * b10 - b01 * a10
        return MatrixPolyField([c00, da * b01 - db * a01, db * a10 - da * b10, -c00])

    def is_zero(self, tol=0.0) -> bool:
        return all(a.is_zero(tol) for a in self.entries)

    def max_abs(self) -> float:
        return max(a.max_abs() for a in self.entries)

    def is_holomorphic(self) -> bool:
        return all(a.is_holomorphic() for a in self.entries)

    def monomials(self) -> set:
        return set().union(*(a.terms.keys() for a in self.entries))

    def coefficient_matrix(self, mono) -> np.ndarray:
        return np.array([[complex(self[i, j].terms.get(mono, 0)) for j in (0, 1)] for i in (0, 1)])

    def to_float(self) -> MatrixPolyField:
        return MatrixPolyField([a.to_float() for a in self.entries])

    def evaluate(self, points):
        vals = [a.evaluate(points) for a in self.entries]
        out = np.stack(vals, axis=-1)
        return out.reshape(out.shape[:-1] + (2, 2))


def _coeff_is_zero(c):
    if isinstance(c, (PolyField, MatrixPolyField)):
        return c.is_zero()
    return c == 0


def _coeff_adjoint(c):
    if isinstance(c, MatrixPolyField):
        return c.dagger()
    if isinstance(c, PolyField):
        return c.conjugate()
    return c.conjugate()


def _coeff_product(a, b):
    if isinstance(a, MatrixPolyField) and isinstance(b, MatrixPolyField):
        return a @ b
    return a * b


class Laurent:
    """Finite Laurent series ``sum_n c_n z**n`` with field-valued coefficients.

    Coefficients are :class:`PolyField` or :class:`MatrixPolyField`; zero
    coefficients are dropped.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[int, object] | None = None):
        self.coeffs = {int(n): c for n, c in (coeffs or {}).items() if not _coeff_is_zero(c)}

    @property
    def min_degree(self):
        return min(self.coeffs, default=0)

    @property
    def max_degree(self):
        return max(self.coeffs, default=0)

    @property
    def bandwidth(self):
        return max((abs(n) for n in self.coeffs), default=0)

    def __getitem__(self, n):
        return self.coeffs.get(n)

    def get(self, n, default=None):
        return self.coeffs.get(n, default)

    def items(self):
        return sorted(self.coeffs.items())

    def __add__(self, other):
        out = dict(self.coeffs)
        for n, c in other.coeffs.items():
            out[n] = out[n] + c if n in out else c
        return Laurent(out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return Laurent({n: -c for n, c in self.coeffs.items()})

    def scale(self, s):
        return Laurent({n: c * s for n, c in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, Laurent):
            out = {}
            for (n1, a), (n2, b) in itertools.product(self.coeffs.items(), other.coeffs.items()):
                p = _coeff_product(a, b)
                n = n1 + n2
                out[n] = out[n] + p if n in out else p
            return Laurent(out)
        return self.scale(other)

    def __rmul__(self, other):
        return Laurent({n: other * c for n, c in self.coeffs.items()})

    def shift(self, k: int) -> Laurent:
        """Multiply by ``z**k``."""
        return Laurent({n + k: c for n, c in self.coeffs.items()})

    def map(self, fn: Callable) -> Laurent:
        return Laurent({n: fn(c) for n, c in self.coeffs.items()})

    def derive(self, var) -> Laurent:
        return self.map(lambda c: c.derive(var))

    def star(self) -> Laurent:
        """Coefficients of ``phi*(z) = phi(-1/conj(z))^dagger``: ``(-1)^m adj(phi_{-m})``."""
        return Laurent({-n: _coeff_adjoint(c) * (-1) ** (n % 2) for n, c in self.coeffs.items()})

    def is_zero(self) -> bool:
        return not self.coeffs

    def max_abs(self) -> float:
        return max((c.max_abs() for c in self.coeffs.values()), default=0.0)

    def __eq__(self, other):
        if not isinstance(other, Laurent):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def __repr__(self):
        return "Laurent({" + ", ".join(f"{n}: {c!r}" for n, c in self.items()) + "})"

    def evaluate(self, points, z):
        """Values at points ``(P, 4)`` and spectral samples ``z`` ``(N,)``.

        Returns ``(P, N)`` for scalar coefficients, ``(P, N, 2, 2)`` for matrix ones.
        """
        pts = np.asarray(points, dtype=float).reshape(-1, 4)
        z = np.asarray(z, dtype=complex).reshape(-1)
        if not self.coeffs:
            return np.zeros((len(pts), len(z)), dtype=complex)
        vals = [np.asarray(c.evaluate(pts), dtype=complex) for c in self.coeffs.values()]
        tail = vals[0].shape[1:]
        # (P, K, m) coefficient values against (N, K) powers of z, one batched product
        cv = np.stack([v.reshape(len(pts), -1) for v in vals], axis=1)
        zn = np.stack([z ** n for n in self.coeffs], axis=1)
        return np.matmul(zn, cv).reshape((len(pts), len(z)) + tail)


# -- harmonic polynomials ------------------------------------------------------

def _monomials(degree):
    return [m for m in itertools.product(range(degree + 1), repeat=4) if sum(m) == degree]


@lru_cache(maxsize=None)
def harmonic_basis(degree: int) -> tuple:
    """Rational basis of the homogeneous harmonic polynomials of ``degree``.

    Computed as the exact null space of the Laplacian between homogeneous
    monomial spaces.
    """
    from sympy import QQ
    from sympy.polys.matrices import DomainMatrix

    src = _monomials(degree)
    if degree < 2:
        return tuple(PolyField.monomial(m) for m in src)
    dst = {m: i for i, m in enumerate(_monomials(degree - 2))}
    rows = [[QQ(0)] * len(src) for _ in dst]
    for j, m in enumerate(src):
        if m[0] and m[1]:
            rows[dst[(m[0] - 1, m[1] - 1, m[2], m[3])]][j] += QQ(m[0] * m[1])
        if m[2] and m[3]:
            rows[dst[(m[0], m[1], m[2] - 1, m[3] - 1)]][j] += QQ(m[2] * m[3])
    ns = DomainMatrix(rows, (len(dst), len(src)), QQ).nullspace().to_Matrix()
    basis = []
    for r in range(ns.rows):
        terms = {}
        for j, m in enumerate(src):
            q = ns[r, j]
            if q != 0:
                terms[m] = Fraction(int(q.p), int(q.q))
        basis.append(PolyField(terms))
    return tuple(basis)


def random_harmonic(max_degree: int, rng: np.random.Generator, *, exact=True, real=True,
                    span=3) -> PolyField:
    """Random harmonic polynomial of degree ``<= max_degree``.

    Integer combinations (entries in ``[-span, span]``, real and imaginary
    parts) of the exact harmonic basis; ``real=True`` symmetrises with the
    conjugate, which preserves harmonicity.
    """
    p = PolyField()
    for d in range(max_degree + 1):
        for b in harmonic_basis(d):
            re, im = (int(x) for x in rng.integers(-span, span + 1, size=2))
            p = p + b * GaussianRational(re, im)
    if real:
        p = (p + p.conjugate()) * Fraction(1, 2)
    return p if exact else p.to_float()


def random_poly(max_degree: int, rng: np.random.Generator, *, exact=True, density=0.5, span=3) -> PolyField:
    """Random (generally non-harmonic) polynomial for algebraic property tests."""
    terms = {}
    for d in range(max_degree + 1):
        for m in _monomials(d):
            if rng.random() < density:
                re, im = (int(x) for x in rng.integers(-span, span + 1, size=2))
                terms[m] = GaussianRational(re, im)
    p = PolyField(terms)
    return p if exact else p.to_float()
