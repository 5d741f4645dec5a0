"""The integrable perturbation q and the auxiliary decay function omega(z).

Potentials are immutable value objects.  Each one knows its pointwise values,
its exact integral over an interval (used for cell averages by the finite
difference oracle), its L^1 norm and L^1 tail, and the points where it is not
smooth (used as panel breakpoints by the Volterra solver).
"""

from __future__ import annotations

import csv
import enum
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from .errors import DomainError, NotIntegrableError, QuadratureError


class Tail(enum.Enum):
    ZERO_BEYOND = "zero"
    EXP_EXTRAPOLATE = "exp"


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("potential evaluated at x < 0")
    return x


class Potential:
    """Common interface; concrete presets below."""

    def __call__(self, x):
        x = _check_x(x)
        out = self._eval(x)
        return float(out) if np.ndim(out) == 0 else out

    def _eval(self, x):
        raise NotImplementedError

    def integral(self, a, b):
        """Exact integral of q over [a, b] (a <= b, both >= 0)."""
        raise NotImplementedError

    def l1_norm(self):
        return self.tail_l1(0.0)

    def tail_l1(self, x):
        """Integral of |q| over [x, oo)."""
        raise NotImplementedError

    def breakpoints(self):
        return ()

    def descriptor(self):
        raise NotImplementedError

    def scaled(self, eps):
        raise NotImplementedError

    @property
    def is_zero(self):
        return False


@dataclass(frozen=True)
class Zero(Potential):
    def _eval(self, x):
        return np.zeros_like(x)

    def integral(self, a, b):
        return 0.0

    def tail_l1(self, x):
        return 0.0

    def descriptor(self):
        return "zero"

    def scaled(self, eps):
        return self

    @property
    def is_zero(self):
        return True


@dataclass(frozen=True)
class ExpDecay(Potential):
    """q(x) = amplitude * exp(-rate * x)."""

    rate: float
    amplitude: float

    def __post_init__(self):
        if not self.rate > 0:
            raise NotIntegrableError("ExpDecay needs a positive rate")

    def _eval(self, x):
        return self.amplitude * np.exp(-self.rate * x)

    def integral(self, a, b):
        r = self.rate
        return self.amplitude * (math.exp(-r * a) - math.exp(-r * b)) / r

    def tail_l1(self, x):
        return abs(self.amplitude) * math.exp(-self.rate * x) / self.rate

    def descriptor(self):
        return f"exp:{self.rate!r},{self.amplitude!r}"

    def scaled(self, eps):
        return ExpDecay(self.rate, eps * self.amplitude)

    @property
    def is_zero(self):
        return self.amplitude == 0


@dataclass(frozen=True)
class Box(Potential):
    """q = height on [left, right), zero elsewhere."""

    height: float
    left: float
    right: float

    def __post_init__(self):
        if self.left < 0 or not self.right > self.left:
            raise DomainError("Box needs 0 <= left < right")

    def _eval(self, x):
        return np.where((x >= self.left) & (x < self.right), self.height, 0.0)

    def integral(self, a, b):
        return self.height * max(0.0, min(b, self.right) - max(a, self.left))

    def tail_l1(self, x):
        return abs(self.height) * max(0.0, self.right - max(x, self.left))

    def breakpoints(self):
        return tuple(p for p in (self.left, self.right) if p > 0)

    def descriptor(self):
        return f"box:{self.height!r},{self.left!r},{self.right!r}"

    def scaled(self, eps):
        return Box(eps * self.height, self.left, self.right)

    @property
    def is_zero(self):
        return self.height == 0


@dataclass(frozen=True)
class InverseSquare(Potential):
    """q(x) = amplitude / (x + shift)^2."""

    amplitude: float
    shift: float

    def __post_init__(self):
        if not self.shift > 0:
            raise DomainError("InverseSquare needs a positive shift")

    def _eval(self, x):
        return self.amplitude / (x + self.shift) ** 2

    def integral(self, a, b):
        s = self.shift
        return self.amplitude * (1.0 / (a + s) - 1.0 / (b + s))

    def tail_l1(self, x):
        return abs(self.amplitude) / (x + self.shift)

    def descriptor(self):
        return f"invsq:{self.amplitude!r},{self.shift!r}"

    def scaled(self, eps):
        return InverseSquare(eps * self.amplitude, self.shift)

    @property
    def is_zero(self):
        return self.amplitude == 0


def _abs_linear_integral(h, a, b):
    """Integral of |linear| over a segment of width h with end values a, b."""
    if a * b >= 0:
        return 0.5 * h * (abs(a) + abs(b))
    return 0.5 * h * (a * a + b * b) / (abs(a) + abs(b))


@dataclass(frozen=True)
class Tabulated(Potential):
    """Piecewise-linear interpolation of (x, q) nodes plus a tail rule."""

    x: tuple
    q: tuple
    tail: Tail = Tail.ZERO_BEYOND
    source: str = field(default="", compare=False)

    def __post_init__(self):
        xs = np.asarray(self.x, dtype=float)
        if len(xs) < 2 or len(xs) != len(self.q):
            raise DomainError("Tabulated needs at least two (x, q) nodes")
        if xs[0] != 0.0:
            raise DomainError("first tabulated node must be at x = 0")
        if np.any(np.diff(xs) <= 0):
            raise DomainError("tabulated x must be strictly increasing")
        if not np.all(np.isfinite(self.q)):
            raise DomainError("tabulated q must be finite")
        self._tail_rate()  # validates integrability

    def _tail_rate(self):
        if self.tail is Tail.ZERO_BEYOND or self.q[-1] == 0:
            return None
        q1, q2 = self.q[-2], self.q[-1]
        if q1 * q2 <= 0 or abs(q2) >= abs(q1):
            raise NotIntegrableError(
                "exponential tail needs the last two values of equal sign and decreasing magnitude"
            )
        return math.log(q1 / q2) / (self.x[-1] - self.x[-2])

    def _eval(self, x):
        xs = np.asarray(self.x)
        qs = np.asarray(self.q)
        inside = np.interp(x, xs, qs)
        rate = self._tail_rate()
        if rate is None:
            beyond = np.zeros_like(inside)
        else:
            beyond = qs[-1] * np.exp(-rate * (x - xs[-1]))
        return np.where(x <= xs[-1], inside, beyond)

    def integral(self, a, b):
        xs = np.asarray(self.x)
        qs = np.asarray(self.q)
        total = 0.0
        lo, hi = a, min(b, xs[-1])
        if hi > lo:
            pts = np.concatenate(([lo], xs[(xs > lo) & (xs < hi)], [hi]))
            vals = np.interp(pts, xs, qs)
            total += float(np.sum(0.5 * np.diff(pts) * (vals[1:] + vals[:-1])))
        rate = self._tail_rate()
        if rate is not None and b > xs[-1]:
            lo = max(a, xs[-1])
            total += qs[-1] * (math.exp(-rate * (lo - xs[-1])) - math.exp(-rate * (b - xs[-1]))) / rate
        return total

    def tail_l1(self, x):
        xs = np.asarray(self.x)
        qs = np.asarray(self.q)
        total = 0.0
        if x < xs[-1]:
            pts = np.concatenate(([x], xs[xs > x]))
            vals = np.interp(pts, xs, qs)
            total += sum(_abs_linear_integral(h, a, b) for h, a, b in zip(np.diff(pts), vals[:-1], vals[1:]))
        rate = self._tail_rate()
        if rate is not None:
            total += abs(qs[-1]) * math.exp(-rate * max(0.0, x - xs[-1])) / rate
        return float(total)

    def breakpoints(self):
        return tuple(float(v) for v in self.x[1:])

    def descriptor(self):
        return f"file:{self.source}" if self.source else f"tabulated:{len(self.x)} nodes"

    def scaled(self, eps):
        return Tabulated(self.x, tuple(eps * v for v in self.q), self.tail, self.source)

    @property
    def is_zero(self):
        return not any(self.q)


# ---------------------------------------------------------------------------
# module-level operations


def evaluate(q, x):
    return q(x)


def l1_norm(q):
    return q.l1_norm()


def load_csv(path, tail=Tail.ZERO_BEYOND):
    """Read a two-column ``x,q`` CSV (header optional) into a Tabulated potential."""
    path = Path(path)
    xs, qs = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise DomainError(f"{path}:{i + 1}: expected two columns, got {len(row)}")
            try:
                xv, qv = float(row[0]), float(row[1])
            except ValueError:
                if i == 0 and not xs:
                    continue  # header
                raise DomainError(f"{path}:{i + 1}: cannot parse {row!r}") from None
            xs.append(xv)
            qs.append(qv)
    return Tabulated(tuple(xs), tuple(qs), tail, source=str(path))


def parse_potential(text):
    """Parse the CLI grammar: zero | exp:r,a | box:h,l,r | invsq:a,s | file:path."""
    text = text.strip()
    if text == "zero":
        return Zero()
    kind, _, rest = text.partition(":")
    if kind == "file":
        if not rest:
            raise DomainError("file: needs a path")
        return load_csv(rest)
    try:
        args = [float(v) for v in rest.split(",")] if rest else []
    except ValueError:
        raise DomainError(f"bad potential arguments in {text!r}") from None
    presets = {"exp": (ExpDecay, 2), "box": (Box, 3), "invsq": (InverseSquare, 2)}
    if kind not in presets:
        raise DomainError(f"unknown potential kind {kind!r}")
    cls, nargs = presets[kind]
    if len(args) != nargs:
        raise DomainError(f"{kind} takes {nargs} arguments, got {len(args)}")
    return cls(*args)


# ---------------------------------------------------------------------------
# omega


@dataclass(frozen=True)
class OmegaValue:
    value: float
    quad_error_estimate: float


def omega(q, z, cfg=None):
    """omega(z) = int_0^oo |q(x)| / sqrt(1 + |x - z|) dx by adaptive quadrature."""
    tol = 1e-10 if cfg is None else cfg.quad_tol
    if q.is_zero:
        return OmegaValue(0.0, 0.0)
    z = complex(z)

    def integrand(x):
        return abs(q(x)) / math.sqrt(1.0 + abs(x - z))

    kink = [z.real] if z.real > 0 else []
    last = max([*q.breakpoints(), *kink, 1.0])
    geometric = [2.0**j for j in range(0, int(math.log2(last)) + 2)]
    edges = sorted({0.0, *q.breakpoints(), *kink, *geometric})
    negligible = 1e-3 * tol
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for a, b in zip(edges[:-1], edges[1:]):
                if q.tail_l1(a) < negligible:
                    break
                v, e = integrate.quad(integrand, a, b, epsabs=tol, epsrel=1e-12, limit=200)
                total += v
                err += e
            else:
                if q.tail_l1(edges[-1]) >= negligible:
                    # [E, oo) mapped to (0, 1/E] by t = 1/x
                    v, e = integrate.quad(
                        lambda t: integrand(1.0 / t) / (t * t) if t > 0 else 0.0,
                        0.0, 1.0 / edges[-1], epsabs=tol, epsrel=1e-12, limit=200,
                    )
                    total += v
                    err += e
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"omega quadrature failed: {exc}", estimate=total, error=err) from None
    return OmegaValue(total, err)
