"""Finite-difference oracle on a truncated interval.

-u'' + (x + q) u = lambda u on (0, L) is discretized by second-order central
differences with u(L) = 0.  Dirichlet at 0 gives the standard symmetric
tridiagonal matrix.  For Neumann the node x_0 = 0 is kept as an unknown with
the ghost-point row (2 u_0 - 2 u_1)/h^2 + V_0 u_0, which is made symmetric by
the diagonal similarity that scales u_0 by sqrt(2).

Eigenvalues come from Sturm counts (number of negative pivots of T - sigma)
and bisection, so the result for index k does not depend on any other index.
The potential enters through cell averages (exact integrals over
[x_i - h/2, x_i + h/2]), which keeps second order for discontinuous q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConvergenceError, DomainError, TruncationError
from .spectra import BoundaryCondition

BUFFER = 10.0
BISECT_RTOL = 1e-10


@dataclass(frozen=True)
class FdConfig:
    length: float
    n: int
    k_max: int

    def __post_init__(self):
        if not self.length > 0:
            raise DomainError("FD length must be positive")
        if self.n < 100:
            raise DomainError("FD grid needs n >= 100 interior nodes")
        if self.k_max < 1:
            raise DomainError("k_max must be >= 1")

    @property
    def h(self):
        return self.length / (self.n + 1)

    @classmethod
    def default(cls, k_max, q=None, points_per_unit=1000):
        """Length with a 12-unit forbidden buffer beyond the k_max-th turning point."""
        lam = (1.5 * math.pi * k_max) ** (2.0 / 3.0)
        shift = 0.0 if q is None else max(0.0, -q.l1_norm())
        length = math.ceil(lam + shift + BUFFER + 2.0)
        return cls(float(length), int(points_per_unit * length), k_max)

    def as_dict(self):
        return {"length": self.length, "n": self.n, "k_max": self.k_max}


@dataclass(frozen=True)
class Tridiagonal:
    """Symmetric tridiagonal matrix (diag d, off-diagonal e) plus grid data."""

    d: np.ndarray
    e: np.ndarray
    x: np.ndarray
    h: float
    bc: BoundaryCondition


def _cell_average(q, x, h, lo=None):
    out = np.empty(len(x))
    for i, xi in enumerate(x):
        a = max(0.0, xi - 0.5 * h) if lo is None else max(lo, xi - 0.5 * h)
        b = xi + 0.5 * h
        out[i] = q.integral(a, b) / (b - a)
    return out


def assemble(q, bc, fd):
    bc = BoundaryCondition.parse(bc)
    h = fd.h
    inv = 1.0 / (h * h)
    if bc is BoundaryCondition.DIRICHLET:
        x = h * np.arange(1, fd.n + 1)
        d = 2.0 * inv + x + _cell_average(q, x, h)
        e = np.full(fd.n - 1, -inv)
    else:
        x = h * np.arange(0, fd.n + 1)
        d = 2.0 * inv + x + _cell_average(q, x, h)
        e = np.full(fd.n, -inv)
        e[0] = -math.sqrt(2.0) * inv
    return Tridiagonal(d, e, x, h, bc)


@njit(cache=True)
def _sturm_count(d, e, sigma):
    """Number of eigenvalues of the tridiagonal matrix below sigma."""
    count = 0
    piv = d[0] - sigma
    if piv < 0:
        count += 1
    for i in range(1, len(d)):
        if piv == 0.0:
            piv = 1e-300
        piv = d[i] - sigma - e[i - 1] * e[i - 1] / piv
        if piv < 0:
            count += 1
    return count


@njit(cache=True)
def _bisect(d, e, k, lo, hi, rtol):
    """k-th eigenvalue (1-based) by bisection on the Sturm count."""
    while hi - lo > rtol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if _sturm_count(d, e, mid) >= k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def sturm_count(mat, sigma):
    return int(_sturm_count(mat.d, mat.e, float(sigma)))


def _gershgorin(mat):
    off = np.zeros_like(mat.d)
    off[:-1] += np.abs(mat.e)
    off[1:] += np.abs(mat.e)
    return float(np.min(mat.d - off)), float(np.max(mat.d + off))


def _check_buffer(fd, lam_max):
    if fd.length - lam_max < BUFFER:
        raise TruncationError(
            f"FD length {fd.length} leaves {fd.length - lam_max:.2f} < {BUFFER} beyond lambda_{fd.k_max} = {lam_max:.4f}"
        )


def fd_spectrum(q, bc, fd, mat=None):
    """The k_max smallest eigenvalues of the discretized operator."""
    mat = mat or assemble(q, bc, fd)
    lo, hi = _gershgorin(mat)
    out = [float(_bisect(mat.d, mat.e, k, lo, hi, BISECT_RTOL)) for k in range(1, fd.k_max + 1)]
    _check_buffer(fd, out[-1])
    return out


@njit(cache=True)
def _thomas_nb(d, e, sigma, rhs):
    """Solve (T - sigma) y = rhs by the Thomas algorithm."""
    n = len(d)
    c = np.empty(n - 1)
    y = np.empty(n)
    b = d[0] - sigma
    y[0] = rhs[0] / b
    for i in range(1, n):
        c[i - 1] = e[i - 1] / b
        b = d[i] - sigma - e[i - 1] * c[i - 1]
        if b == 0.0:
            b = 1e-300
        y[i] = (rhs[i] - e[i - 1] * y[i - 1]) / b
    for i in range(n - 2, -1, -1):
        y[i] -= c[i] * y[i + 1]
    return y


def eigenvector(mat, lam, max_iter=20, tol=1e-12):
    """Inverse iteration at a converged eigenvalue; returned with unit 2-norm."""
    n = len(mat.d)
    v = np.ones(n) / math.sqrt(n)
    sigma = lam * (1 + 1e-13) + 1e-13
    for _ in range(max_iter):
        w = _thomas_nb(mat.d, mat.e, sigma, v)
        w /= np.linalg.norm(w)
        if w[np.argmax(np.abs(w))] < 0:
            w = -w
        if np.linalg.norm(w - v) < tol:
            return w
        v = w
    # a residual check catches stagnation that the step test cannot
    r = mat.d * v - lam * v
    r[:-1] += mat.e * v[1:]
    r[1:] += mat.e * v[:-1]
    if np.linalg.norm(r) > 1e-6 * max(1.0, abs(lam)):
        raise ConvergenceError("inverse iteration stagnated", residual=float(np.linalg.norm(r)))
    return v


def fd_norming(q, bc, fd, eigen_index, mat=None, lam=None):
    """Discrete norming ratio ||u||^2 / u'(0)^2 (Dirichlet) or ||u||^2 / u(0)^2 (Neumann)."""
    bc = BoundaryCondition.parse(bc)
    if not 1 <= eigen_index <= fd.k_max:
        raise DomainError("eigen_index must lie in 1..k_max")
    mat = mat or assemble(q, bc, fd)
    if lam is None:
        lo, hi = _gershgorin(mat)
        lam = float(_bisect(mat.d, mat.e, eigen_index, lo, hi, BISECT_RTOL))
    v = eigenvector(mat, lam)
    h = mat.h
    if bc is BoundaryCondition.DIRICHLET:
        u = np.concatenate(([0.0], v, [0.0]))
        # trapezoid with zero end values
        norm = h * float(np.sum(v * v))
        # fourth-order one-sided difference at x = 0
        du = (-25 * u[0] + 48 * u[1] - 36 * u[2] + 16 * u[3] - 3 * u[4]) / (12 * h)
        return norm / du**2
    u = v.copy()
    u[0] *= math.sqrt(2.0)  # undo the symmetrizing scale on the boundary node
    norm = h * float(np.sum(u * u) - 0.5 * u[0] ** 2)
    return norm / u[0] ** 2
