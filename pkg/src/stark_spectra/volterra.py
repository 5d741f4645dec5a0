"""Decaying solution psi(z, x) of -psi'' + (x + q) psi = z psi by Picard iteration.

psi solves psi = psi0 - int_x^oo J0(z, x, y) q(y) psi(y) dy.  The kernel is
separable, J0 = psi0(y) theta(x) - psi0(x) theta(y) with either theta_pm
(theta_pm = theta0 -+ i psi0, so the psi0 parts cancel), and every Picard term
is assembled from two running integrals from the right:

    int_x^oo psi0(y) q(y) f(y) dy      and      int_x^oo theta(y) q(y) f(y) dy.

All stored quantities are weighted by 1/g_A(x - z) = e^{s(x)}, s = Re zeta(x - z),
which keeps them O(1) on both sides of the turning point.  The x-range
[0, x_max] is covered by panels of Chebyshev-Lobatto nodes; running integrals
use the exact polynomial integration matrix on each panel, so the quadrature
error is spectrally small for smooth q.  Discontinuities of q are panel
breakpoints.

z-derivatives follow from differentiating the Volterra equation, which gives
the eta_k recursion driven by the psi iterates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from numpy.polynomial import legendre

from .airy import C0, SQRT_PI, ai_shifted, g_a, zeta
from .errors import ConvergenceError, StarkError, TruncationError
from .potential import omega
from .reference import theta_sign


@dataclass(frozen=True)
class SolverConfig:
    x_max: float | None = None  # None: max(2 Re z + 20, 40)
    n_grid: int = 4000
    quad_tol: float = 1e-10
    term_tol: float = 1e-12
    max_iter: int = 30
    panel_order: int = 16
    check_envelopes: bool = False

    def __post_init__(self):
        if self.x_max is not None and not self.x_max > 0:
            raise ValueError("x_max must be positive")
        if self.n_grid < self.panel_order:
            raise ValueError("n_grid must be at least panel_order")
        if not (self.quad_tol > 0 and self.term_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1 or self.panel_order < 4:
            raise ValueError("max_iter >= 1 and panel_order >= 4 required")

    def resolved_x_max(self, z):
        if self.x_max is not None:
            return float(self.x_max)
        return max(2.0 * complex(z).real + 20.0, 40.0)

    def as_dict(self):
        return {
            "x_max": self.x_max,
            "n_grid": self.n_grid,
            "quad_tol": self.quad_tol,
            "term_tol": self.term_tol,
            "max_iter": self.max_iter,
            "panel_order": self.panel_order,
        }


@dataclass(frozen=True)
class SolutionSample:
    x: float
    psi: complex
    psi_x: complex
    psi_z: complex | None = None
    psi_zx: complex | None = None


# ---------------------------------------------------------------------------
# panel quadrature


class _Reference:
    """Lobatto nodes on [-1, 1] with right-running integration matrix."""

    _cache: dict = {}

    def __new__(cls, p):
        if p not in cls._cache:
            self = super().__new__(cls)
            t = -np.cos(np.pi * np.arange(p) / (p - 1))
            vander = legendre.legvander(t, p - 1)
            anti = np.empty((p, p))
            for j in range(p):
                c = legendre.legint(np.eye(p)[j])
                anti[:, j] = legendre.legval(1.0, c) - legendre.legval(t, c)
            self.t = t
            self.R = anti @ np.linalg.inv(vander)
            self.weights = self.R[0].copy()
            bary = np.ones(p)
            bary[0] = bary[-1] = 0.5
            bary *= (-1.0) ** np.arange(p)
            self.bary = bary
            cls._cache[p] = self
        return cls._cache[p]


class PanelGrid:
    """Panels covering [0, x_max] with breakpoints honoured."""

    def __init__(self, x_max, n_grid, p, breakpoints=()):
        self.ref = _Reference(p)
        n_target = max(1, math.ceil(n_grid / (p - 1)))
        h0 = x_max / n_target
        cuts = sorted({0.0, x_max, *(b for b in breakpoints if 0 < b < x_max)})
        edges = [0.0]
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            n = max(1, math.ceil((hi - lo) / h0 - 1e-9))
            edges.extend(np.linspace(lo, hi, n + 1)[1:])
        self.edges = np.asarray(edges)
        self.left = self.edges[:-1]
        self.half = 0.5 * np.diff(self.edges)
        mid = self.left + self.half
        self.x = mid[:, None] + self.half[:, None] * self.ref.t[None, :]
        self.x[:, 0] = self.left
        self.x[:, -1] = self.edges[1:]

    @property
    def n_panels(self):
        return len(self.half)

    def flat(self, arr):
        """Drop the duplicated left node of every panel but the first."""
        return np.concatenate([arr[0], arr[1:, 1:].ravel()])

    def integrate(self, f):
        return np.sum(self.half * (f @ self.ref.weights))

    def tail_flat(self, f):
        """F(x) = int_x^{x_max} f."""
        loc = self.half[:, None] * (f @ self.ref.R.T)
        tot = loc[:, 0]
        after = np.cumsum(tot[::-1])[::-1] - tot
        return loc + after[:, None]

    def tail_decay(self, f, s):
        """F(x) = int_x^{x_max} f(y) exp(2 (s(x) - s(y))) dy for nondecreasing s."""
        s_right = s[:, -1:]
        loc = self.half[:, None] * ((f * np.exp(2.0 * (s_right - s))) @ self.ref.R.T)
        damp = np.exp(2.0 * (s[:, 0] - s[:, -1]))
        carry = np.zeros(self.n_panels, dtype=loc.dtype)
        acc = 0.0
        for j in range(self.n_panels - 1, 0, -1):
            acc = damp[j] * (loc[j, 0] + acc)
            carry[j - 1] = acc
        return np.exp(2.0 * (s - s_right)) * (loc + carry[:, None])

    def sample(self, q):
        """q at the nodes, taking one-sided limits from inside each panel.

        Panel ends sit on jumps of q, so the end nodes are nudged inward
        before evaluation.
        """
        x = self.x.copy()
        nudge = 1e-12 * np.maximum(1.0, np.abs(x[:, 0]))
        x[:, 0] = x[:, 0] + nudge
        x[:, -1] = x[:, -1] - nudge
        return q(x)

    def panel_index(self, xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        return np.clip(np.searchsorted(self.edges, xs, side="right") - 1, 0, self.n_panels - 1)

    def interpolate(self, values, xs):
        """Barycentric interpolation of panel data at arbitrary points in [0, x_max]."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        j = self.panel_index(xs)
        t = (xs - self.left[j]) / self.half[j] - 1.0
        diff = t[:, None] - self.ref.t[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-15, rtol=0)
        diff[exact] = 1.0
        w = self.ref.bary[None, :] / diff
        vals = values[j]
        out = np.sum(w * vals, axis=1) / np.sum(w, axis=1)
        hit = exact.any(axis=1)
        if np.any(hit):
            out[hit] = vals[hit][exact[hit]]
        return out


# ---------------------------------------------------------------------------
# solution container


@dataclass
class Solution:
    """Weighted panel data for psi and (optionally) its z-derivatives."""

    z: complex
    grid: PanelGrid
    s: np.ndarray
    U: np.ndarray
    V: np.ndarray
    iterates: list
    term_norms: list
    basis: dict = field(repr=False)
    q: object = field(repr=False, default=None)
    cfg: SolverConfig = field(repr=False, default=None)
    E: np.ndarray | None = None
    Ex: np.ndarray | None = None
    eta_norms: list | None = None

    def _unweight(self, arr):
        return arr * np.exp(-self.s)

    @property
    def x(self):
        return self.grid.flat(self.grid.x)

    @property
    def psi(self):
        return self.grid.flat(self._unweight(self.U))

    @property
    def psi_x(self):
        return self.grid.flat(self._unweight(self.V))

    @property
    def psi_z(self):
        self._need_dot()
        return self.grid.flat(self._unweight(self.E))

    @property
    def psi_zx(self):
        self._need_dot()
        return self.grid.flat(self._unweight(self.Ex))

    def _need_dot(self):
        if self.E is None:
            raise StarkError("z-derivatives not computed; call solve_psi_dot first")

    def at_zero(self):
        """(psi, psi', psi_dot, psi_dot') at x = 0 (dots None if not computed)."""
        w = math.exp(-self.s[0, 0])
        dots = (None, None) if self.E is None else (self.E[0, 0] * w, self.Ex[0, 0] * w)
        return self.U[0, 0] * w, self.V[0, 0] * w, *dots

    def weighted_at_zero(self):
        """Same as :meth:`at_zero` but multiplied by 1/g_A(-z) (no underflow)."""
        dots = (None, None) if self.E is None else (self.E[0, 0], self.Ex[0, 0])
        return self.U[0, 0], self.V[0, 0], *dots

    def samples(self):
        xs = self.x
        cols = [self.psi, self.psi_x]
        if self.E is not None:
            cols += [self.psi_z, self.psi_zx]
        else:
            cols += [[None] * len(xs)] * 2
        return [SolutionSample(float(x), *map(_maybe_complex, row)) for x, *row in zip(xs, *cols)]

    def evaluate(self, xs, what="psi"):
        """Spectrally interpolated psi, psi_x, psi_z or psi_zx at points xs."""
        data = {"psi": self.U, "psi_x": self.V, "psi_z": self.E, "psi_zx": self.Ex}[what]
        if data is None:
            self._need_dot()
        xs = np.asarray(xs, dtype=float)
        # U = psi e^{s} has a kink at the turning point; psi e^{s_left} does not.
        s_left = self.s[:, :1]
        local = self.grid.interpolate(data * np.exp(s_left - self.s), xs)
        j = self.grid.panel_index(xs)
        return local * np.exp(-s_left[j, 0])

    def weighted_term_norms(self):
        return list(self.term_norms)


def _maybe_complex(v):
    return None if v is None else complex(v)


# ---------------------------------------------------------------------------
# solver


def _basis_real(z, grid, s):
    # real z: theta0 = sqrt(pi) Bi gives the same kernel in real arithmetic
    w = grid.x - z.real
    right = w > 0
    out = np.empty((4,) + w.shape)
    # w > 0: airye scales Ai by e^{zeta} and Bi by e^{-zeta}, with s = zeta;
    # w <= 0: s = 0 and the plain values are O(1)
    out[:, right] = special.airye(w[right])
    out[:, ~right] = special.airy(w[~right])
    ai, aip, bi, bip = SQRT_PI * out
    return {"a": ai, "ap": aip, "b": bi, "bp": bip, "w": w}


def _basis(z, grid, s, sign):
    if z.imag == 0:
        return _basis_real(z, grid, s)
    w = grid.x - z
    ai, aip = ai_shifted(w, s)
    rot = np.exp(-2j * math.pi / 3) if sign > 0 else np.exp(2j * math.pi / 3)
    pre = 2 * SQRT_PI * (np.exp(-1j * math.pi / 6) if sign > 0 else np.exp(1j * math.pi / 6))
    bi, bip = ai_shifted(w * rot, -s)
    return {
        "a": SQRT_PI * ai,
        "ap": SQRT_PI * aip,
        "b": pre * bi,
        "bp": pre * rot * bip,
        "w": w,
    }


def _weighted_sup(arr, w):
    return float(np.max(np.abs(arr) * (1.0 + np.abs(w) ** 0.25)))


def _check_truncation(q, z, x_max, cfg):
    tail = q.tail_l1(x_max)
    if tail == 0.0:
        return
    # contamination by the growing solution from cutting the integral at x_max
    bound = 4 * C0**2 * tail * g_a(x_max - z) ** 2
    if bound > cfg.term_tol:
        raise TruncationError(
            f"x_max = {x_max} too small: truncation bound {bound:.3e} > term_tol {cfg.term_tol:.1e}"
        )


def make_grid(q, z, cfg):
    x_max = cfg.resolved_x_max(z)
    return PanelGrid(x_max, cfg.n_grid, cfg.panel_order, q.breakpoints())


def solve_psi(q, z, cfg=None):
    """Solve the Volterra equation for psi and psi' on the panel grid."""
    cfg = cfg or SolverConfig()
    z = complex(z) + 0j
    grid = make_grid(q, z, cfg)
    _check_truncation(q, z, grid.edges[-1], cfg)
    s = zeta(grid.x - z).real
    basis = _basis(z, grid, s, theta_sign(z))
    a, ap, b, bp = basis["a"], basis["ap"], basis["b"], basis["bp"]
    qv = grid.sample(q)

    U, V = a.copy(), ap.copy()
    iterates = [a]
    norms = [_weighted_sup(a, basis["w"])]
    if not q.is_zero:
        cur = a
        for n in range(1, cfg.max_iter + 1):
            f = qv * cur
            i1 = grid.tail_decay(a * f, s)
            i2 = grid.tail_flat(b * f)
            cur = a * i2 - b * i1
            cur_x = ap * i2 - bp * i1
            U += cur
            V += cur_x
            iterates.append(cur)
            norms.append(_weighted_sup(cur, basis["w"]))
            if norms[-1] < cfg.term_tol:
                break
        else:
            raise ConvergenceError(
                f"Picard iteration did not converge in {cfg.max_iter} steps",
                last_term_norm=norms[-1],
                term_norms=norms,
            )
    sol = Solution(z, grid, s, U, V, iterates, norms, basis, q, cfg)
    if cfg.check_envelopes:
        violations = {k: v for k, v in check_estimates(sol).items() if v > 1.0}
        if violations:
            raise StarkError(f"envelope estimates violated: {violations}")
    return sol


def solve_psi_dot(q, z, cfg=None, solution=None):
    """psi_z and psi_zx by the eta_k recursion, reusing the psi iterates."""
    cfg = cfg or SolverConfig()
    if solution is None:
        solution = solve_psi(q, z, cfg)
    sol = solution
    grid, s, bs = sol.grid, sol.s, sol.basis
    a, ap, b, bp, w = bs["a"], bs["ap"], bs["b"], bs["bp"], bs["w"]
    qv = grid.sample(q)

    E = -ap
    Ex = -w * a
    eta, eta_x = E, Ex
    norms = [_weighted_sup(E, w)]
    if not q.is_zero:
        n_psi = len(sol.iterates)
        for k in range(1, cfg.max_iter + 1):
            fe = qv * eta
            ae = grid.tail_decay(a * fe, s)
            be = grid.tail_flat(b * fe)
            new = b * ae - a * be
            new_x = bp * ae - ap * be
            if k - 1 < n_psi:
                fq = qv * sol.iterates[k - 1]
                a1 = grid.tail_decay(ap * fq, s)
                a2 = grid.tail_decay(a * fq, s)
                b1 = grid.tail_flat(b * fq)
                b2 = grid.tail_flat(bp * fq)
                new = new - b * a1 - bp * a2 + ap * b1 + a * b2
                new_x = new_x - bp * a1 - w * b * a2 + w * a * b1 + ap * b2
            eta, eta_x = -new, -new_x
            E = E + eta
            Ex = Ex + eta_x
            norms.append(_weighted_sup(eta, w))
            if norms[-1] < cfg.term_tol and k >= n_psi:
                break
        else:
            raise ConvergenceError(
                f"eta recursion did not converge in {cfg.max_iter} steps",
                last_term_norm=norms[-1],
                term_norms=norms,
            )
    sol.E, sol.Ex, sol.eta_norms = E, Ex, norms
    return sol


def solve(q, z, cfg=None, derivatives=False):
    sol = solve_psi(q, z, cfg)
    if derivatives:
        solve_psi_dot(q, z, cfg, sol)
    return sol


def l2_norm_sq(solution, rel_tol=1e-7):
    """int_0^oo psi^2 dx (no conjugation; psi is real for real z).

    The part beyond x_max is estimated from the local decay rate
    s'(x_max) = Re sqrt(x_max - z) and must stay below ``rel_tol``.
    """
    sol = solution
    psi = sol._unweight(sol.U)
    body = sol.grid.integrate(psi * psi)
    x_max = sol.grid.edges[-1]
    rate = np.sqrt(complex(x_max - sol.z)).real
    end = psi[-1, -1]
    if rate <= 0:
        raise TruncationError("x_max lies before the turning point; L2 tail not controlled")
    tail = abs(end) ** 2 / (2.0 * rate)
    if tail > rel_tol * abs(body):
        raise TruncationError(f"L2 tail {tail:.3e} exceeds {rel_tol:.0e} of the norm")
    return float(body.real) if abs(body.imag) <= 1e-8 * abs(body) else body


# ---------------------------------------------------------------------------
# a-priori estimates as diagnostics


def estimate_bounds(sol, q_omega, q_norm, c0=C0):
    """Right-hand sides of the growth estimates, divided by g_A(x - z).

    The constants follow from summing the term-by-term bounds
    |psi_n| <= 4^n/n! C0^{2n+1} omega^n g_A/(1 + |x - z|^{1/4}).
    Returned arrays live on the panel grid in the same weighted scale as
    ``sol.U``, so no factor of g_A is ever formed explicitly.
    """
    r14 = np.abs(sol.basis["w"]) ** 0.25
    inv_env = 1.0 / (1 + r14)
    m = np.maximum(r14, 1.0)
    k = 4 * c0**2
    growth = math.expm1(k * q_omega)
    return {
        "psi": c0 * math.exp(k * q_omega) * inv_env,
        "diff_psi": c0 * growth * inv_env,
        "diff_psi_x": c0 * growth * m,
        "diff_psi_z": c0 * (growth * m + 2 * k * q_norm * math.exp(k * q_norm) * inv_env),
    }


def check_estimates(sol, c0=C0):
    """Max of |lhs| / bound over the grid for each estimate (<= 1 means it holds)."""
    q = sol.q
    bounds = estimate_bounds(sol, omega(q, sol.z, sol.cfg).value, q.l1_norm(), c0)
    a, ap = sol.basis["a"], sol.basis["ap"]
    lhs = {"psi": sol.U, "diff_psi": sol.U - a, "diff_psi_x": sol.V - ap}
    if sol.E is not None:
        lhs["diff_psi_z"] = sol.E + ap
    return {key: _ratio(val, bounds[key]) for key, val in lhs.items()}


def _ratio(lhs, bound):
    lhs = np.abs(lhs)
    bound = np.broadcast_to(bound, lhs.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(bound > 0, lhs / bound, np.where(lhs > 0, np.inf, 0.0))
    return float(np.max(r))
