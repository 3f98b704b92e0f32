"""Independent reference computations used to freeze expected values.

Nothing here imports the package internals it is checking: curvature is
recomputed with sympy in Cartesian coordinates, matrix exponentials with a
Taylor series, Laurent coefficients with Bessel functions, and finite-type
chains with a dense linear ansatz.
"""
from __future__ import annotations

import itertools

import numpy as np
import sympy as sp
from scipy.special import iv

t, x, y, z = sp.symbols("t x y z", real=True)
u_s, ub_s, v_s, vb_s = t + sp.I * x, t - sp.I * x, y - sp.I * z, y + sp.I * z


def d_u(f):
    return (sp.diff(f, t) - sp.I * sp.diff(f, x)) / 2


def d_ub(f):
    return (sp.diff(f, t) + sp.I * sp.diff(f, x)) / 2


def d_v(f):
    return (sp.diff(f, y) + sp.I * sp.diff(f, z)) / 2


def d_vb(f):
    return (sp.diff(f, y) - sp.I * sp.diff(f, z)) / 2


def sympy_reducible_residuals(a_expr):
    """Self-duality residuals of ``A = (1/2)(da - dbar a) tau3`` from scratch.

    All components are multiples of tau3 so commutators vanish and
    ``F_ab = (d_a A_b - d_b A_a)``; returns the scalar coefficients of
    ``(F_uv, F_uubar + F_vvbar, F_ubarvbar, F_uvbar, F_vubar)``.
    """
    Au, Av = d_u(a_expr) / 2, d_v(a_expr) / 2
    Aub, Avb = -d_ub(a_expr) / 2, -d_vb(a_expr) / 2
    F = lambda da, Ab, db, Aa: sp.simplify(sp.expand(da(Ab) - db(Aa)))
    return (
        F(d_u, Av, d_v, Au),
        sp.simplify(F(d_u, Aub, d_ub, Au) + F(d_v, Avb, d_vb, Av)),
        F(d_ub, Avb, d_vb, Aub),
        F(d_u, Avb, d_vb, Au),
        F(d_v, Aub, d_ub, Av),
    )


def taylor_expm(m, terms=20, squarings=10):
    """Scaling-and-squaring Taylor exponential."""
    a = np.asarray(m, dtype=complex) / 2 ** squarings
    out = np.eye(a.shape[-1], dtype=complex)
    term = np.eye(a.shape[-1], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ a / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def bessel_coefficients(c, band):
    """Coefficients of ``exp(c (z + 1/z))``: ``I_n(2c)``."""
    return {n: iv(n, 2 * c) for n in range(-band, band + 1)}


def residue_F_special(point, zval):
    """``|u|^2 - |v|^2 - 2 z ubar vbar`` at a Cartesian point."""
    tt, xx, yy, zz = point
    u, v = tt + 1j * xx, yy - 1j * zz
    return abs(u) ** 2 - abs(v) ** 2 - 2 * zval * np.conj(u) * np.conj(v)


# -- finite-type ansatz ------------------------------------------------------------


def _monomials(max_degree):
    return [m for m in itertools.product(range(max_degree + 1), repeat=4) if sum(m) <= max_degree]


def _deriv_matrix(monos, k):
    """Matrix of d/d(var k) acting on coefficient vectors over ``monos``."""
    index = {m: i for i, m in enumerate(monos)}
    D = np.zeros((len(monos), len(monos)))
    for j, m in enumerate(monos):
        if m[k]:
            lower = list(m)
            lower[k] -= 1
            D[index[tuple(lower)], j] = m[k]
    return D


def chain_feasible(a0: dict, d: int, max_degree: int) -> bool:
    """Does a chain ``a_-d..a_d`` with ``a_0`` fixed exist among polynomials of degree ``<= max_degree``?

    ``a0`` maps exponent tuples ``(eu, eubar, ev, evbar)`` to complex
    coefficients.  The chain and boundary relations are linear in the
    unknown coefficients, so feasibility is a least-squares residual check.
    """
    monos = _monomials(max_degree)
    nm = len(monos)
    Du, Dub, Dv, Dvb = (_deriv_matrix(monos, k) for k in range(4))
    a0v = np.zeros(nm, dtype=complex)
    for m, c in a0.items():
        a0v[monos.index(m)] = c
    unknown = [n for n in range(-d, d + 1) if n != 0]
    col = {n: i for i, n in enumerate(unknown)}
    rows, rhs = [], []

    def add(terms):
        """``terms``: list of (matrix, n) summing to zero."""
        block = np.zeros((nm, nm * len(unknown)), dtype=complex)
        b = np.zeros(nm, dtype=complex)
        for mat, n in terms:
            if n == 0:
                b -= mat @ a0v
            elif n in col:
                block[:, col[n] * nm:(col[n] + 1) * nm] += mat
        rows.append(block)
        rhs.append(b)

    add([(Dub, -d)])
    add([(Dvb, -d)])
    for n in range(-d, d):
        add([(Dub, n + 1), (-Dv, n)])
        add([(Dvb, n + 1), (Du, n)])
    add([(Dv, d)])
    add([(Du, d)])
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    if A.shape[1] == 0:
        return bool(np.linalg.norm(b) < 1e-9)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return bool(np.linalg.norm(A @ sol - b) < 1e-9 * max(1.0, np.linalg.norm(b)))


def brute_force_type(a0: dict, d_max: int, max_degree: int):
    for d in range(d_max + 1):
        if chain_feasible(a0, d, max_degree):
            return d
    return None


def i_invariant(g):
    """``I[g]`` from the entries: ``Re(a conj d) - (|b|^2 + |c|^2)/2``."""
    (a, b), (c, d) = np.asarray(g)
    return float((a * np.conj(d)).real - (abs(b) ** 2 + abs(c) ** 2) / 2)


