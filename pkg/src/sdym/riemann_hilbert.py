"""Birkhoff factorisation of 2x2 matrix loops and the loop-to-connection pipeline.

A loop ``G`` sampled on a circle is written ``G = Psi_inf^-1 Psi_0`` with
``Psi_0`` holomorphic inside and ``Psi_inf`` holomorphic outside, normalised by
``Psi_inf(inf) = Id``.  Writing ``Psi_inf = sum_{k=0}^{M} q_{-k} z^{-k}`` with
``q_0 = Id``, the negative Fourier modes of ``Psi_inf G`` must vanish:

    sum_{k=1}^{M} q_{-k} g_{n+k} = -g_n,   n = -M, ..., -1,

a block-Toeplitz linear system.  ``Psi_0`` is then the nonnegative part of
``Psi_inf G``, and ``J = Psi_0(0)``.
"""
from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .algebra import ID2, TAU3, det2, frob, inv2
from .connection import Grid, _grid_points, stencil_points, yp_from_stencil
from .polyfield import Laurent, PolyField

__all__ = [
    "MatrixLoop",
    "LaurentBand",
    "BirkhoffFactors",
    "AbelianFactors",
    "PipelineReport",
    "JumpingPointError",
    "PipelineAbort",
    "AliasingWarning",
    "unit_circle",
    "laurent_from_samples",
    "birkhoff_split",
    "birkhoff_split_batch",
    "abelian_split_exact",
    "j_from_split",
    "connection_pipeline",
    "load_loop_corpus",
    "dump_loop_corpus",
    "COND_LIMIT",
]

COND_LIMIT = 1e12
DET_TOL = 1e-10


class JumpingPointError(ArithmeticError):
    """The loop admits no normalised splitting (or only an ill-conditioned one)."""

    def __init__(self, message, condition=np.inf, point=None):
        super().__init__(message)
        self.condition = condition
        self.point = point


class PipelineAbort(RuntimeError):
    """Too many grid points jump for the verification to mean anything."""


class AliasingWarning(UserWarning):
    pass


def unit_circle(n: int, radius=1.0) -> np.ndarray:
    return radius * np.exp(2j * np.pi * np.arange(n) / n)


@dataclass
class MatrixLoop:
    """Samples ``G(z_j)`` of a loop on a circle ``|z| = r``.

    ``z`` defaults to equispaced points on the unit circle; a loop may also be
    built from a callable with :meth:`from_function`, which keeps the callable
    for resampling.
    """

    samples: np.ndarray
    z: np.ndarray | None = None
    generator: object = None
    check_det: bool = True

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex).reshape(-1, 2, 2)
        n = len(self.samples)
        self.z = unit_circle(n) if self.z is None else np.asarray(self.z, dtype=complex).reshape(-1)
        if len(self.z) != n:
            raise ValueError("one spectral point per sample is required")
        if self.check_det:
            err = np.max(np.abs(det2(self.samples) - 1.0)) if n else 0.0
            if err > DET_TOL:
                raise ValueError(f"loop samples do not have unit determinant (error {err:.3g})")

    @classmethod
    def from_function(cls, g, n=64, radius=1.0, **kw):
        z = unit_circle(n, radius)
        return cls(np.asarray(g(z), dtype=complex), z, generator=g, **kw)

    def resample(self, n, radius=1.0) -> MatrixLoop:
        if self.generator is None:
            raise ValueError("loop has no generator to resample from")
        return MatrixLoop.from_function(self.generator, n, radius, check_det=self.check_det)

    def __len__(self):
        return len(self.samples)

    def to_json(self):
        return [[[float(x.real), float(x.imag)] for x in s.reshape(4)] for s in self.samples]


@dataclass
class LaurentBand:
    """Finite Laurent expansion ``sum_n c_n z^n`` of a matrix loop."""

    coeffs: dict
    residual: float = 0.0
    loop: MatrixLoop | None = None

    @property
    def min_degree(self) -> int:
        return min(self.coeffs) if self.coeffs else 0

    @property
    def max_degree(self) -> int:
        return max(self.coeffs) if self.coeffs else 0

    def get(self, n):
        return self.coeffs.get(n, np.zeros((2, 2), dtype=complex))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape + (2, 2), dtype=complex)
        for n, c in self.coeffs.items():
            out += (z ** n)[..., None, None] * c
        return out

    def det(self, z):
        return det2(self(z))


def laurent_from_samples(loop: MatrixLoop, band: int, *, alias_tol=1e-8) -> LaurentBand:
    """Discrete Fourier coefficients ``c_n = (1/S) sum_j G_j z_j^-n`` for ``|n| <= band``.

    ``z_j^-n`` is taken from the stored spectral points, so the coefficients
    do not depend on the order in which samples are stored.
    """
    s = len(loop)
    if s < 2 * band + 1:
        raise ValueError(f"{s} samples cannot resolve a band of {band}")
    ns = np.arange(-band, band + 1)
    basis = loop.z[None, :] ** (-ns[:, None])  # (2B+1, S)
    c = np.einsum("ns,sij->nij", basis, loop.samples) / s
    coeffs = {int(n): c[i] for i, n in enumerate(ns)}
    top = max(np.max(np.abs(coeffs[-band])), np.max(np.abs(coeffs[band]))) if band else 0.0
    if band and top > alias_tol:
        warnings.warn(f"top Laurent coefficients are {top:.3g}; the band may be aliased", AliasingWarning,
                      stacklevel=2)
    lb = LaurentBand(coeffs, loop=loop)
    lb.residual = float(np.max(frob(lb(loop.z) - loop.samples))) if s else 0.0
    # drop exact zeros so that monomial loops report only their support
    floor = 1e-15 * max(1.0, max(float(np.max(np.abs(v))) for v in coeffs.values()))
    lb.coeffs = {n: v for n, v in coeffs.items() if np.max(np.abs(v)) > floor}
    return lb


@dataclass
class BirkhoffFactors:
    """``G = Psi_inf^-1 Psi_0``; ``psi_inf`` has powers ``-M..0`` and ``psi_inf(inf) = Id``."""

    psi0: LaurentBand
    psi_inf: LaurentBand
    residual: float
    condition: float

    def product_defect(self, z, g):
        return frob(self.psi_inf(z) @ g - self.psi0(z))


def _toeplitz_system(g, M):
    """Matrix and right-hand side of the transposed block system.

    ``g`` has shape ``(..., 2K+1, 2, 2)`` holding coefficients ``-K..K``.
    Returns ``A`` ``(..., 2M, 2M)`` and ``B`` ``(..., 2M, 2)`` with ``A X = B``
    where ``X`` stacks ``q_{-k}^T`` for ``k = 1..M``.
    """
    K = (g.shape[-3] - 1) // 2

    def coef(n):
        n = np.asarray(n)
        idx = np.clip(n + K, 0, 2 * K)
        out = g[..., idx, :, :]
        mask = (np.abs(n) <= K)[..., None, None]
        return np.where(mask, out, 0)

    ns = np.arange(-M, 0)
    ks = np.arange(1, M + 1)
    blocks = coef(ns[:, None] + ks[None, :])  # (..., M(n), M(k), 2, 2) = g_{n+k}
    # row block n, column block k of the transposed system: g_{n+k}^T
    bt = np.swapaxes(blocks, -1, -2)
    A = np.swapaxes(bt, -3, -2).reshape(g.shape[:-3] + (2 * M, 2 * M))
    rhs = -np.swapaxes(coef(ns), -1, -2).reshape(g.shape[:-3] + (2 * M, 2))
    return A, rhs


def _assemble(g, q, M):
    """``Psi_inf`` coefficients (``-M..0``) and nonnegative part of ``Psi_inf G``."""
    K = (g.shape[-3] - 1) // 2
    qs = np.concatenate([np.broadcast_to(ID2, q.shape[:-3] + (1, 2, 2)), q], axis=-3)  # q_0, q_-1, ...
    psi0 = []
    for n in range(0, K + 1):
        acc = 0
        for k in range(0, M + 1):
            if -K <= n + k <= K:
                acc = acc + qs[..., k, :, :] @ g[..., n + k + K, :, :]
        psi0.append(acc if not isinstance(acc, int) else np.zeros(g.shape[:-3] + (2, 2), dtype=complex))
    return qs, np.stack(psi0, axis=-3)


def birkhoff_split(band: LaurentBand, M: int, *, cond_limit=COND_LIMIT) -> BirkhoffFactors:
    """Normalised Birkhoff factorisation with truncation order ``M``.

    The block system is solved by QR with column pivoting; its 2-norm
    condition number is reported and a singular or badly conditioned system
    raises :class:`JumpingPointError`.
    """
    K = max(abs(band.min_degree), abs(band.max_degree), 1)
    g = np.stack([band.get(n) for n in range(-K, K + 1)])
    if M == 0:
        q = np.zeros((0, 2, 2), dtype=complex)
        cond = 1.0
    else:
        A, rhs = _toeplitz_system(g, M)
        cond = float(np.linalg.cond(A)) if np.all(np.isfinite(A)) else np.inf
        if not np.isfinite(cond) or cond > cond_limit:
            raise JumpingPointError(f"splitting system has condition number {cond:.3g}", cond)
        Q, R, P = scipy.linalg.qr(A, pivoting=True)
        y = scipy.linalg.solve_triangular(R, Q.conj().T @ rhs)
        x = np.empty_like(y)
        x[P] = y
        q = np.swapaxes(x.reshape(M, 2, 2), -1, -2)
    qs, p0 = _assemble(g, q, M)
    psi_inf = LaurentBand({-k: qs[k] for k in range(M + 1)})
    psi0 = LaurentBand({n: p0[n] for n in range(p0.shape[0])})
    if abs(det2(p0[0])) < 1e-12:
        raise JumpingPointError("Psi_0(0) is singular", cond)
    if band.loop is not None:
        z, gs = band.loop.z, band.loop.samples
    else:
        z = unit_circle(4 * K + 4)
        gs = band(z)
    res = float(np.max(frob(psi_inf(z) @ gs - psi0(z))))
    return BirkhoffFactors(psi0, psi_inf, res, cond)


def birkhoff_split_batch(g, M: int, *, cond_limit=COND_LIMIT):
    """Batched split of coefficient stacks ``g`` ``(B, 2K+1, 2, 2)``.

    Returns ``(J, q, ok, cond)``: ``J = Psi_0(0)``, the ``Psi_inf``
    coefficients ``q_{-1..-M}``, a mask of successful splits, and the 1-norm
    condition numbers.  Failed entries carry NaN.
    """
    g = np.asarray(g, dtype=complex)
    nb = g.shape[0]
    A, rhs = _toeplitz_system(g, M)
    ok = np.all(np.isfinite(A), axis=(-2, -1))
    cond = np.full(nb, np.inf)
    q = np.full((nb, M, 2, 2), np.nan, dtype=complex)
    idx = np.flatnonzero(ok)
    if len(idx):
        Ai = A[idx]
        try:
            inv = np.linalg.inv(Ai)
            c = np.linalg.norm(Ai, 1, axis=(-2, -1)) * np.linalg.norm(inv, 1, axis=(-2, -1))
        except np.linalg.LinAlgError:
            inv = np.empty_like(Ai)
            c = np.empty(len(idx))
            for j, a in enumerate(Ai):
                try:
                    inv[j] = np.linalg.inv(a)
                    c[j] = np.linalg.norm(a, 1) * np.linalg.norm(inv[j], 1)
                except np.linalg.LinAlgError:
                    inv[j] = np.nan
                    c[j] = np.inf
        c = np.where(np.isfinite(c), c, np.inf)
        cond[idx] = c
        x = inv @ rhs[idx]
        q[idx] = np.swapaxes(x.reshape(len(idx), M, 2, 2), -1, -2)
    ok = np.isfinite(cond) & (cond <= cond_limit)
    K = (g.shape[1] - 1) // 2
    J = g[:, K].copy()
    for k in range(1, min(M, K) + 1):
        J = J + q[:, k - 1] @ g[:, K + k]
    ok &= np.abs(det2(J)) > 1e-12
    J[~ok] = np.nan
    return J, q, ok, cond


class AbelianFactors:
    """Exact split of ``exp(phi tau3)`` for a scalar Laurent exponent ``phi``.

    ``Psi_inf = exp(-phi_- tau3)``, ``Psi_0 = exp((phi_0 + phi_+) tau3)``.
    """

    def __init__(self, phi: Laurent, direction=TAU3):
        self.phi = phi
        self.direction = direction
        self.negative = Laurent({n: p for n, p in phi.items() if n < 0})
        self.nonnegative = Laurent({n: p for n, p in phi.items() if n >= 0})

    @property
    def j_exponent(self) -> PolyField:
        """Exponent of ``J = Psi_0(0)``: the ``z**0`` coefficient of ``phi``."""
        return self.phi.get(0, PolyField())

    @staticmethod
    def _exp(e):
        out = np.zeros(e.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = np.exp(e)
        out[..., 1, 1] = np.exp(-e)
        return out

    def psi0(self, points, z):
        return self._exp(self.nonnegative.evaluate(points, z))

    def psi_inf(self, points, z):
        return self._exp(-self.negative.evaluate(points, z))

    def j(self, points):
        return self._exp(self.j_exponent.evaluate(points))


def abelian_split_exact(phi: Laurent) -> AbelianFactors:
    return AbelianFactors(phi)


def j_from_split(factors) -> np.ndarray:
    """``J = Psi_0(0)`` under the ``Psi_inf(inf) = Id`` normalisation."""
    if isinstance(factors, BirkhoffFactors):
        return factors.psi0.get(0)
    raise TypeError("j_from_split expects BirkhoffFactors; use AbelianFactors.j for exact splits")


@dataclass
class PipelineReport:
    max_yp_residual: float
    yp_argmax: list | None
    max_split_residual: float
    split_residuals: np.ndarray
    jumping_points: list
    excised: int
    n_points: int
    yp_residuals: np.ndarray = field(repr=False, default=None)
    max_condition: float = 0.0

    @property
    def jump_count(self) -> int:
        return len(self.jumping_points)

    def to_json(self):
        return {
            "max_yp_residual": self.max_yp_residual,
            "yp_argmax": self.yp_argmax,
            "max_split_residual": self.max_split_residual,
            "jumping_points": [list(map(float, p)) for p in self.jumping_points],
            "jump_count": self.jump_count,
            "excised": self.excised,
            "n_points": self.n_points,
            "max_condition": self.max_condition,
        }


def _dft(samples, z, modes):
    """Coefficients ``(1/N) sum_s G_s z_s^-k`` for each mode ``k``: ``(P, N, 2, 2) -> (P, K, 2, 2)``."""
    p, n = samples.shape[:2]
    basis = z[:, None] ** (-modes[None, :]) / n  # (N, K)
    flat = np.ascontiguousarray(samples.transpose(0, 2, 3, 1)).reshape(p * 4, n)
    return (flat @ basis).reshape(p, 2, 2, len(modes)).transpose(0, 3, 1, 2)


def _synth(coeffs, z, modes):
    """Inverse of :func:`_dft` on the points ``z``."""
    p, k = coeffs.shape[:2]
    basis = z[None, :] ** modes[:, None]  # (K, N)
    flat = np.ascontiguousarray(coeffs.transpose(0, 2, 3, 1)).reshape(p * 4, k)
    return (flat @ basis).reshape(p, 2, 2, len(z)).transpose(0, 3, 1, 2)


def _split_chunk(Gfield, pts, z, M, K):
    s = np.asarray(Gfield(pts, z), dtype=complex)  # (P, N, 2, 2)
    n = len(z)
    g = _dft(s, z, np.arange(-K, K + 1))
    J, q, ok, cond = birkhoff_split_batch(g, M)
    # residual of the split on the samples: the negative modes of Psi_inf G
    psi_inf = _synth(q, z, -np.arange(1, M + 1)) + ID2
    neg_modes = np.arange(-(n // 2), 0)
    neg = _synth(_dft(psi_inf @ s, z, neg_modes), z, neg_modes)
    res = np.max(frob(neg), axis=1)
    res[~ok] = np.nan
    return J, ok, res, cond


def connection_pipeline(Gfield, grid: Grid | np.ndarray | None = None, h: float = 0.05, M: int = 16, *,
                        nodes: int | None = None, band: int | None = None, chunk: int = 512,
                        threads: int | None = None, max_jump_fraction=0.2) -> PipelineReport:
    """Split ``Gfield`` on every stencil point of ``grid`` and check Yang-Pohlmeyer for ``J``.

    ``Gfield(points, z)`` returns loop samples of shape ``(P, N, 2, 2)``.
    Grid points whose stencil touches a jumping point are excised; more than
    ``max_jump_fraction`` excised points aborts the run.
    """
    pts = _grid_points(grid)
    nodes = nodes or max(64, 4 * M + 8)
    band = band or M
    if nodes < 2 * band + 1:
        raise ValueError("too few spectral nodes for the requested band")
    z = unit_circle(nodes)
    c, plus, minus = stencil_points(pts, h)
    allpts = np.concatenate([c, plus.reshape(-1, 4), minus.reshape(-1, 4)])
    uniq, inverse = np.unique(np.round(allpts, 12), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    chunks = [uniq[i:i + chunk] for i in range(0, len(uniq), chunk)]
    work = lambda p: _split_chunk(Gfield, p, z, M, band)
    if threads and threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(work, chunks))
    else:
        results = [work(p) for p in chunks]
    J = np.concatenate([r[0] for r in results])
    ok = np.concatenate([r[1] for r in results])
    res = np.concatenate([r[2] for r in results])
    cond = np.concatenate([r[3] for r in results])

    npts = len(pts)
    Jall = J[inverse]
    okall = ok[inverse]
    Jc = Jall[:npts]
    Jp = Jall[npts:npts * 5].reshape(npts, 4, 2, 2)
    Jm = Jall[npts * 5:].reshape(npts, 4, 2, 2)
    keep = okall[:npts] & okall[npts:npts * 5].reshape(npts, 4).all(1) & okall[npts * 5:].reshape(npts, 4).all(1)
    jumping = [list(map(float, p)) for p in uniq[~ok]]
    excised = int(npts - keep.sum())
    if npts and excised > max_jump_fraction * npts:
        raise PipelineAbort(f"{excised} of {npts} grid points excised by jumping points")
    yp = np.full(npts, np.nan)
    if keep.any():
        yp[keep] = frob(yp_from_stencil(Jc[keep], Jp[keep], Jm[keep], h))
    split_res = res[inverse[:npts]]
    finite_yp = yp[np.isfinite(yp)]
    k = int(np.nanargmax(yp)) if finite_yp.size else None
    good = np.isfinite(res)
    return PipelineReport(
        max_yp_residual=float(finite_yp.max()) if finite_yp.size else 0.0,
        yp_argmax=list(map(float, pts[k])) if k is not None else None,
        max_split_residual=float(np.max(res[good])) if good.any() else 0.0,
        split_residuals=split_res,
        jumping_points=jumping,
        excised=excised,
        n_points=npts,
        yp_residuals=yp,
        max_condition=float(np.max(cond[good])) if good.any() else 0.0,
    )


def load_loop_corpus(path_or_data):
    """Read ``[{point: [t, x, y, z], samples: [[[re, im] x 4] x N]}]`` into ``(point, MatrixLoop)`` pairs."""
    if isinstance(path_or_data, (str, bytes)) or hasattr(path_or_data, "__fspath__"):
        with open(path_or_data) as fh:
            data = json.load(fh)
    else:
        data = path_or_data
    out = []
    for rec in data:
        s = np.asarray(rec["samples"], dtype=float)
        samples = (s[..., 0] + 1j * s[..., 1]).reshape(-1, 2, 2)
        out.append((np.asarray(rec["point"], dtype=float), MatrixLoop(samples)))
    return out


def dump_loop_corpus(pairs):
    return [{"point": list(map(float, p)), "samples": loop.to_json()} for p, loop in pairs]
