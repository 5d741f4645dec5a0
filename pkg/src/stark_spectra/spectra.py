"""Eigenvalues and norming constants of the Dirichlet and Neumann problems.

The boundary function is psi(z, 0) (Dirichlet) or psi'(z, 0) (Neumann) for
the decaying solution psi built in :mod:`volterra`; its real zeros are the
eigenvalues.  Each eigenvalue is bracketed around the matching Airy zero,
refined with Brent's method, and paired with two independent evaluations of
the norming constant:

    Dirichlet  1/nu = ||psi||^2 / psi'(0)^2 = -psi_z(0) / psi'(0)
    Neumann    1/nu = ||psi||^2 / psi(0)^2  =  psi_zx(0) / psi(0)

Localization is checked independently by counting zeros of the boundary
function inside closed contours (argument principle).
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .airy import AiryZeroKind, airy_zero
from .errors import (
    BracketError,
    ConvergenceError,
    ContourError,
    NormalizationError,
    OrderingError,
    SpectrumError,
    StarkError,
)
from .volterra import SolverConfig, l2_norm_sq, solve

ROOT_XTOL = 1e-12
RESIDUAL_TOL = 1e-9
DENOM_MIN = 1e-8
SCAN_STEPS = 4
CONTOUR_CONFIG = SolverConfig(n_grid=1200, term_tol=1e-9)
MAX_DOUBLINGS = 4


class BoundaryCondition(enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())

    @property
    def zero_kind(self):
        return AiryZeroKind.AI_ZERO if self is BoundaryCondition.DIRICHLET else AiryZeroKind.AI_PRIME_ZERO

    @property
    def phase_offset(self):
        """Offset o in zeta(lambda_k) ~ (k - o) pi."""
        return 0.25 if self is BoundaryCondition.DIRICHLET else 0.75


@dataclass(frozen=True)
class EigenRecord:
    k: int
    bc: BoundaryCondition
    lam: float
    bracket: tuple
    nu_inv_deriv: float
    nu_inv_norm: float
    consistency_gap: float
    predicted_lambda: float
    predicted_nu_inv: float
    boundary_residual: float
    label: str = ""

    def __post_init__(self):
        if not self.label:
            object.__setattr__(self, "label", str(self.k))

    def as_dict(self):
        return {
            "k": self.k,
            "bc": self.bc.value,
            "lambda": self.lam,
            "bracket_lo": self.bracket[0],
            "bracket_hi": self.bracket[1],
            "nu_inv_deriv": self.nu_inv_deriv,
            "nu_inv_norm": self.nu_inv_norm,
            "consistency_gap": self.consistency_gap,
            "predicted_lambda": self.predicted_lambda,
            "predicted_nu_inv": self.predicted_nu_inv,
            "boundary_residual": self.boundary_residual,
        }


# ---------------------------------------------------------------------------
# boundary function


def _datum(sol, bc, weighted):
    vals = sol.weighted_at_zero() if weighted else sol.at_zero()
    return vals[0] if bc is BoundaryCondition.DIRICHLET else vals[1]


def boundary_function(q, bc, z, cfg=None, weighted=False):
    """psi(z, 0) for Dirichlet, psi'(z, 0) for Neumann.

    With ``weighted=True`` the value is divided by g_A(-z), which keeps it
    representable for complex z of large modulus; the factor is positive, so
    zeros and arguments are unchanged.
    """
    bc = BoundaryCondition.parse(bc)
    return complex(_datum(solve(q, z, cfg), bc, weighted))


def _real_boundary(q, bc, cfg):
    def f(lam):
        return _datum(solve(q, lam, cfg), bc, False).real
    return f


# ---------------------------------------------------------------------------
# bracketing and refinement


def delta_k(k):
    return 4.0 * (1.5 * math.pi * k) ** (-1.0 / 3.0)


def _from_phase(zeta):
    return (1.5 * zeta) ** (2.0 / 3.0)


def bracket_eigenvalue(q, bc, k, cfg=None):
    """Interval around the k-th Airy zero on which the boundary function changes sign.

    The starting half-width is delta_k, clipped to the real trace of the
    zeta-disk of radius pi/2 around (k - o) pi so that exactly one
    unperturbed zero is inside.  The interval is scanned in sub-intervals and
    the sign change nearest the centre is returned; without one, both widths
    are doubled up to four times.
    """
    bc = BoundaryCondition.parse(bc)
    if k < 1:
        raise ValueError("k must be >= 1")
    f = _real_boundary(q, bc, cfg)
    mu = -airy_zero(k, bc.zero_kind)
    centre = (k - bc.phase_offset) * math.pi
    half, rad = delta_k(k), 0.5 * math.pi
    seen = {}

    def value(x):
        if x not in seen:
            seen[x] = f(x)
        return seen[x]

    for _ in range(MAX_DOUBLINGS + 1):
        lo = max(mu - half, _from_phase(max(centre - rad, 0.0)))
        hi = min(mu + half, _from_phase(centre + rad))
        xs = np.linspace(lo, hi, SCAN_STEPS + 1)
        vals = [value(float(x)) for x in xs]
        hits = [
            (abs(0.5 * (xs[i] + xs[i + 1]) - mu), float(xs[i]), float(xs[i + 1]))
            for i in range(SCAN_STEPS)
            if vals[i] == 0 or vals[i] * vals[i + 1] < 0
        ]
        if hits:
            _, a, b = min(hits)
            return a, b
        half *= 2
        rad *= 2
    raise BracketError(
        f"no sign change of the {bc.value} boundary function near lambda = {mu:.6g} (k = {k})",
        k=k, interval=(lo, hi), values=(vals[0], vals[-1]),
    )


def refine_eigenvalue(q, bc, bracket, cfg=None):
    """Brent's method inside a sign-change bracket."""
    bc = BoundaryCondition.parse(bc)
    f = _real_boundary(q, bc, cfg)
    a, b = bracket
    fa, fb = f(a), f(b)
    if fa == 0:
        return float(a)
    if fb == 0:
        return float(b)
    if fa * fb > 0:
        if b - a <= 2 * ROOT_XTOL and min(abs(fa), abs(fb)) <= RESIDUAL_TOL:
            return float(a if abs(fa) <= abs(fb) else b)
        raise BracketError("bracket has no sign change", bracket=bracket, values=(fa, fb))
    try:
        lam, info = optimize.brentq(f, a, b, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps,
                                    maxiter=200, full_output=True, disp=False)
    except RuntimeError as exc:
        raise ConvergenceError(str(exc), bracket=bracket) from None
    if not info.converged:
        raise ConvergenceError("root refinement hit its iteration cap", bracket=bracket, last=lam)
    return float(lam)


# ---------------------------------------------------------------------------
# norming constants


@dataclass(frozen=True)
class NormingValue:
    nu_inv_deriv: float
    nu_inv_norm: float
    boundary_residual: float

    @property
    def consistency_gap(self):
        return abs(self.nu_inv_deriv - self.nu_inv_norm)


def norming_constant(q, bc, lam, cfg=None):
    """Both evaluations of 1/nu at a refined eigenvalue."""
    bc = BoundaryCondition.parse(bc)
    sol = solve(q, float(lam), cfg, derivatives=True)
    p, px, pz, pzx = (complex(v).real for v in sol.at_zero())
    norm = l2_norm_sq(sol)
    norm = norm.real if isinstance(norm, complex) else norm
    if bc is BoundaryCondition.DIRICHLET:
        denom, residual = px, abs(p)
        deriv = -pz / px if abs(px) >= DENOM_MIN else None
    else:
        denom, residual = p, abs(px)
        deriv = pzx / p if abs(p) >= DENOM_MIN else None
    if deriv is None:
        raise NormalizationError(
            f"defective normalization at lambda = {lam!r}: boundary denominator {denom:.3e}"
            f" (not an eigenvalue of the {bc.value} problem?)"
        )
    return NormingValue(float(deriv), float(norm / denom**2), float(residual))


# ---------------------------------------------------------------------------
# contour counting


@dataclass(frozen=True)
class ContourSpec:
    """BigCircle(m): |z| = ((3/2)(m + 1/4 or - 1/4) pi)^{2/3}.

    SmallCircle(k): zeta circle of radius pi/2 about (k - 1/4 or 3/4) pi,
    mapped by z = ((3/2) zeta)^{2/3}.
    """

    kind: str
    index: int
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET
    n_samples: int = 64

    def __post_init__(self):
        if self.kind not in ("big", "small"):
            raise ValueError("kind must be 'big' or 'small'")
        if self.index < 1:
            raise ValueError("contour index must be >= 1")
        if self.n_samples < 64:
            raise ValueError("n_samples must be >= 64")
        object.__setattr__(self, "bc", BoundaryCondition.parse(self.bc))

    @classmethod
    def big(cls, m, bc=BoundaryCondition.DIRICHLET, n_samples=64):
        return cls("big", m, bc, n_samples)

    @classmethod
    def small(cls, k, bc=BoundaryCondition.DIRICHLET, n_samples=64):
        return cls("small", k, bc, n_samples)

    def point(self, t):
        """Contour point at parameter t in [0, 1) (counter-clockwise)."""
        t = np.asarray(t, dtype=float)
        turn = np.exp(2j * math.pi * t)
        off = self.bc.phase_offset
        if self.kind == "big":
            # midway between the m-th and (m+1)-th unperturbed zeros
            r = _from_phase((self.index + 0.5 - off) * math.pi)
            return r * turn
        centre = (self.index - off) * math.pi
        rad = min(0.5 * math.pi, 0.9 * centre)  # keep zeta = 0 outside
        zt = centre + rad * turn
        return (1.5 * zt) ** (2.0 / 3.0)


def _contour_scale(z, bc):
    r14 = abs(z) ** 0.25
    return 1.0 / (1.0 + r14) if bc is BoundaryCondition.DIRICHLET else max(r14, 1.0)


def count_zeros_on_contour(q, bc, contour, cfg=None, max_samples=4096, threads=1):
    """Winding number of the boundary function along the contour.

    Only the argument matters here, so the default solver grid is coarser
    than the one used for eigenvalues.
    """
    bc = BoundaryCondition.parse(bc)
    cfg = cfg or CONTOUR_CONFIG
    if contour.bc is not bc:
        contour = ContourSpec(contour.kind, contour.index, bc, contour.n_samples)

    def f(t):
        z = complex(contour.point(t))
        return boundary_function(q, bc, z, cfg, weighted=True), z

    def sample(ts):
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                return list(pool.map(f, ts))
        return [f(t) for t in ts]

    n = contour.n_samples
    vals = [v for v, _ in sample(np.arange(n) / n)]
    while True:
        arr = np.asarray(vals)
        steps = np.angle(np.roll(arr, -1) / arr)
        if np.all(np.abs(steps) < 0.5 * math.pi):
            break
        if 2 * n > max_samples:
            raise ContourError(
                f"argument increments did not resolve with {n} samples; perturb the contour radius"
            )
        mids = sample((np.arange(n) + 0.5) / n)
        merged = np.empty(2 * n, dtype=complex)
        merged[0::2] = arr
        merged[1::2] = [v for v, _ in mids]
        vals = list(merged)
        n *= 2
    ts = np.arange(n) / n
    scaled = np.abs(arr) / np.array([_contour_scale(complex(contour.point(t)), bc) for t in ts])
    if scaled.min() < 1e-6:
        raise ContourError(
            f"boundary function nearly vanishes on the contour (min scaled |f| = {scaled.min():.2e});"
            " perturb the contour radius"
        )
    winding = steps.sum() / (2 * math.pi)
    return int(round(winding))


# ---------------------------------------------------------------------------
# spectrum


def _record(q, bc, k, cfg, bracket=None, label=""):
    from .asymptotics import predict_eigenvalue, predict_norming

    if bracket is None:
        bracket = bracket_eigenvalue(q, bc, k, cfg)
    lam = refine_eigenvalue(q, bc, bracket, cfg)
    nv = norming_constant(q, bc, lam, cfg)
    if nv.boundary_residual > RESIDUAL_TOL:
        raise ConvergenceError(
            f"boundary residual {nv.boundary_residual:.3e} above {RESIDUAL_TOL:.0e}", k=k, lam=lam
        )
    return EigenRecord(
        k=k, bc=bc, lam=lam, bracket=(float(bracket[0]), float(bracket[1])),
        nu_inv_deriv=nv.nu_inv_deriv, nu_inv_norm=nv.nu_inv_norm,
        consistency_gap=nv.consistency_gap,
        predicted_lambda=predict_eigenvalue(bc, k), predicted_nu_inv=predict_norming(bc, k),
        boundary_residual=nv.boundary_residual, label=label,
    )


def _safe(job):
    try:
        return job(), None
    except StarkError as exc:
        return None, exc


def spectrum(q, bc, k_max, cfg=None, threads=1, k_min=1):
    """EigenRecords for k = k_min..k_max along the Airy ladder."""
    bc = BoundaryCondition.parse(bc)
    if k_max < 1 or k_min < 1 or k_min > k_max:
        raise ValueError("need 1 <= k_min <= k_max")
    cfg = cfg or SolverConfig()
    ks = range(k_min, k_max + 1)
    jobs = [lambda k=k: _record(q, bc, k, cfg) for k in ks]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(_safe, jobs))
    else:
        results = [_safe(j) for j in jobs]
    records = [r for r, _ in results if r is not None]
    failures = {k: exc for k, (_, exc) in zip(ks, results) if exc is not None}
    if failures:
        first = next(iter(failures.values()))
        raise SpectrumError(f"{len(failures)} of {len(ks)} eigenvalues failed: {first}", records, failures)
    for a, b in zip(records[:-1], records[1:]):
        if not b.lam > a.lam:
            raise SpectrumError(
                f"eigenvalues out of order at k = {a.k}, {b.k}", records,
                {b.k: OrderingError(f"lambda_{b.k} = {b.lam} <= lambda_{a.k} = {a.lam}")},
            )
    return records


def low_lying(q, bc, cfg=None, step=0.1):
    """Eigenvalues below the first ladder bracket, labelled 0.1, 0.2, ...

    A negative perturbation can pull eigenvalues below the Airy ladder; they
    are found by scanning the boundary function on [-||q|| - 5, lo_1].
    """
    bc = BoundaryCondition.parse(bc)
    cfg = cfg or SolverConfig()
    mu = -airy_zero(1, bc.zero_kind)
    top = max(mu - delta_k(1), _from_phase(max((1 - bc.phase_offset) * math.pi - 0.5 * math.pi, 0.0)))
    bottom = -q.l1_norm() - 5.0
    f = _real_boundary(q, bc, cfg)
    xs = np.arange(bottom, top, step)
    if len(xs) < 2:
        return []
    vals = [f(float(x)) for x in xs]
    out = []
    for i in range(len(xs) - 1):
        if vals[i] * vals[i + 1] < 0:
            br = (float(xs[i]), float(xs[i + 1]))
            rec = _record(q, bc, len(out) + 1, cfg, bracket=br, label=f"0.{len(out) + 1}")
            out.append(rec)
    return out
