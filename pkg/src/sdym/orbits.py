"""Orbits of the constant actions ``g -> h g h^T`` on SL2(R) and ``g -> h g h^dagger`` on SL2(C).

Every ``g`` splits into Hermitian and skew-Hermitian parts,
``U = t + x tau1 + y tau2 + z tau3`` and ``V = i (T + X tau1 + Y tau2 + Z tau3)``,
and with the Minkowski norm ``||u||^2 = -t^2 + x^2 + y^2 + z^2`` (so that
``det U = -||u||^2``) the invariant ``I[g] = tr(g (g^-1)^dagger)/2`` fixes
``||u||^2 = -(I + 1)/2``, ``||v||^2 = -(I - 1)/2`` and ``<u, v> = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .algebra import EPS, TAU1, TAU2, TAU3, dagger, det2, inv2

__all__ = [
    "MinkowskiVec",
    "OrbitClassC",
    "OrbitClassR",
    "invariant_I",
    "decompose_minkowski",
    "classify_sl2c",
    "classify_sl2r",
    "act",
    "sl2r_vector",
    "BOUNDARY_TOL",
]

BOUNDARY_TOL = 1e-8
DET_TOL = 1e-10


class MinkowskiVec(NamedTuple):
    t: float
    x: float
    y: float
    z: float

    @property
    def norm2(self) -> float:
        return -self.t ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2

    def dot(self, other: MinkowskiVec) -> float:
        return -self.t * other.t + self.x * other.x + self.y * other.y + self.z * other.z

    def euclidean(self) -> float:
        return float(np.sqrt(self.t ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2))


def _sign(x) -> str:
    return "+" if x >= 0 else "-"


@dataclass(frozen=True)
class OrbitClassC:
    tag: str
    sign: str | None
    invariant: float
    boundary: bool = False

    def __str__(self):
        return f"{self.tag}({self.sign})" if self.sign else self.tag


@dataclass(frozen=True)
class OrbitClassR:
    tag: str
    sign: str | None
    alpha: float
    boundary: bool = False

    def __str__(self):
        return f"{self.tag}({self.sign})" if self.sign else self.tag


def _unit_det(g, what="g"):
    g = np.asarray(g, dtype=complex)
    if g.shape != (2, 2):
        raise ValueError(f"{what} must be a 2x2 matrix")
    # relative to the size of the entries, since det loses digits as ||g||^2 grows
    if abs(det2(g) - 1) > DET_TOL * max(1.0, float(np.sum(np.abs(g) ** 2))):
        raise ValueError(f"{what} must have unit determinant (det = {det2(g):.6g})")
    return g


def invariant_I(g) -> float:
    """``I[g] = tr(g (g^-1)^dagger) / 2``, real for unit-determinant ``g``."""
    g = _unit_det(g)
    val = 0.5 * np.trace(g @ dagger(inv2(g)))
    if abs(val.imag) > 1e-10 * max(1.0, float(np.sum(np.abs(g) ** 2))):
        raise ValueError("invariant has a nonzero imaginary part")
    return float(val.real)


def _pauli_coords(h) -> MinkowskiVec:
    """Coordinates of a Hermitian ``h = t + x tau1 + y tau2 + z tau3``."""
    return MinkowskiVec(*(float(0.5 * np.trace(h @ p).real) for p in (np.eye(2), TAU1, TAU2, TAU3)))


def decompose_minkowski(g) -> tuple:
    """``(u, v)`` from ``U = (g + g^dagger)/2`` and ``V = (g - g^dagger)/2 = i(T + X.tau)``."""
    g = _unit_det(g)
    U = 0.5 * (g + dagger(g))
    V = 0.5 * (g - dagger(g))
    return _pauli_coords(U), _pauli_coords(-1j * V)


def classify_sl2c(g, tol: float = BOUNDARY_TOL) -> OrbitClassC:
    """Orbit class of ``g`` under ``g -> h g h^dagger``.

    Values of ``I`` within ``tol`` of ``+-1`` are snapped to the boundary case
    and ``boundary`` is set when the snap was not exact.
    """
    I = invariant_I(g)
    if I > 1 + 1e-9:
        raise ValueError(f"I = {I} exceeds 1; the input cannot have unit determinant")
    u, _ = decompose_minkowski(g)
    if abs(I - 1) <= tol:
        return OrbitClassC("HermitianSheet", _sign(u.t), I, I != 1)
    if abs(I + 1) <= tol:
        snapped = I != -1
        if u.euclidean() <= tol:
            return OrbitClassC("SkewHermitian", None, I, snapped or u.euclidean() != 0)
        return OrbitClassC("NullConeBundle", _sign(u.t), I, snapped)
    if I > -1:
        return OrbitClassC("HyperboloidBundle", _sign(u.t), I)
    return OrbitClassC("OneSheet", None, I)


def classify_sl2r(g, tol: float = BOUNDARY_TOL) -> OrbitClassR:
    """Orbit class of real ``g`` under ``g -> h g h^T``.

    ``g = U + alpha eps`` with ``U = ((t + x, y), (y, t - x))`` symmetric, and
    ``||u||^2 = -t^2 + x^2 + y^2 = alpha^2 - 1``.  The orbit depends on
    ``|alpha|`` and, on the two-sheeted and cone cases, on the sign of ``t``.
    """
    g = np.asarray(g)
    if np.iscomplexobj(g):
        if np.max(np.abs(g.imag)) > 1e-12:
            raise ValueError("classify_sl2r needs a real matrix")
        g = g.real
    g = _unit_det(g).real
    alpha = 0.5 * (g[0, 1] - g[1, 0])
    U = g - alpha * EPS.real
    t = 0.5 * (U[0, 0] + U[1, 1])
    x = 0.5 * (U[0, 0] - U[1, 1])
    y = U[0, 1]
    a = abs(alpha)
    if a <= tol:
        return OrbitClassR("TwoSheet", _sign(t), a, a != 0)
    if abs(a - 1) <= tol:
        r = float(np.sqrt(t * t + x * x + y * y))
        if r <= tol:
            return OrbitClassR("FixedPoint", None, a, a != 1 or r != 0)
        return OrbitClassR("NullCone", _sign(t), a, a != 1)
    if a < 1:
        return OrbitClassR("Hyperboloid2", _sign(t), a)
    return OrbitClassR("OneSheet", None, a)


def sl2r_vector(g) -> MinkowskiVec:
    """``(t, x, y, 0)`` of the symmetric part of a real ``g``."""
    g = np.real(np.asarray(g))
    alpha = 0.5 * (g[0, 1] - g[1, 0])
    U = g - alpha * EPS.real
    return MinkowskiVec(float(0.5 * (U[0, 0] + U[1, 1])), float(0.5 * (U[0, 0] - U[1, 1])), float(U[0, 1]), 0.0)


def act(h, g, flavor: str = "dagger"):
    """``h g h^T`` (``flavor='transpose'``) or ``h g h^dagger`` (``'dagger'``)."""
    h = _unit_det(h, "h")
    g = np.asarray(g)
    if flavor == "dagger":
        return h @ g @ dagger(h)
    if flavor == "transpose":
        out = h @ g @ h.T
        return out.real if not np.iscomplexobj(g) and np.max(np.abs(out.imag)) == 0 else out
    raise ValueError("flavor is 'transpose' or 'dagger'")
