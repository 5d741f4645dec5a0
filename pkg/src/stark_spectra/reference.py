"""Solutions of the unperturbed equation -phi'' + (x - z) phi = 0.

psi0(z, x) = sqrt(pi) Ai(x - z) decays as x -> oo; theta0 = sqrt(pi) Bi(x - z)
and theta_pm(z, x) = 2 sqrt(pi) e^{-+ i pi/6} Ai((x - z) e^{-+ 2 pi i/3}) = theta0 -+ i psi0
are the companion solutions with W(psi0, theta) = 1.  Every function accepts numpy
arrays and broadcasts over z and x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .airy import C0, SQRT_PI, airy, g_a
from .errors import DomainError

_ROT = np.exp(-2j * math.pi / 3)


def _arg(z, x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("x must be non-negative")
    return x - np.asarray(z, dtype=complex)


def psi0(z, x):
    return SQRT_PI * airy(_arg(z, x))[0]


def psi0_x(z, x):
    return SQRT_PI * airy(_arg(z, x))[1]


def psi0_z(z, x):
    # psi0 depends on x - z only
    return -psi0_x(z, x)


def theta0(z, x):
    return SQRT_PI * airy(_arg(z, x))[2]


def theta0_x(z, x):
    return SQRT_PI * airy(_arg(z, x))[3]


def theta_sign(z):
    """Sign of theta_pm whose rotated argument stays off the branch cut.

    For x >= 0 and Im z <= 0 the point x - z lies in the closed upper
    half-plane, where theta_+ obeys the growth bound; theta_- plays that role
    for Im z > 0.
    """
    return 1 if np.imag(z) <= 0 else -1


def _theta_factors(sign):
    rot = _ROT if sign > 0 else np.conj(_ROT)
    pre = 2 * SQRT_PI * (np.exp(-1j * math.pi / 6) if sign > 0 else np.exp(1j * math.pi / 6))
    return rot, pre


def theta_pm(z, x, sign=1):
    rot, pre = _theta_factors(sign)
    return pre * airy(_arg(z, x) * rot)[0]


def theta_pm_x(z, x, sign=1):
    rot, pre = _theta_factors(sign)
    return pre * rot * airy(_arg(z, x) * rot)[1]


def wronskian(f, fx, g, gx):
    return f * gx - fx * g


def j0_kernel(z, x, y, via="theta_pm", sign=None):
    """Volterra kernel psi0(y) theta0(x) - psi0(x) theta0(y).

    ``via="theta_pm"`` evaluates the equivalent form
    psi0(y) theta_pm(x) - psi0(x) theta_pm(y), which avoids the overflow of Bi
    far to the right of the turning point.  Since theta_pm = theta0 -+ i psi0,
    the psi0 contributions cancel and no phase factor is needed.
    """
    if via == "theta0":
        return psi0(z, y) * theta0(z, x) - psi0(z, x) * theta0(z, y)
    if sign is None:
        sign = theta_sign(z)
    return psi0(z, y) * theta_pm(z, x, sign) - psi0(z, x) * theta_pm(z, y, sign)


def j0_kernel_x(z, x, y, via="theta_pm", sign=None):
    """Derivative of the kernel with respect to its first argument x."""
    if via == "theta0":
        return psi0(z, y) * theta0_x(z, x) - psi0_x(z, x) * theta0(z, y)
    if sign is None:
        sign = theta_sign(z)
    return psi0(z, y) * theta_pm_x(z, x, sign) - psi0_x(z, x) * theta_pm(z, y, sign)


def j0_kernel_y(z, x, y, sign=None):
    """Derivative of the kernel with respect to y (equals -1 on the diagonal)."""
    if sign is None:
        sign = theta_sign(z)
    return psi0_x(z, y) * theta_pm(z, x, sign) - psi0(z, x) * theta_pm_x(z, y, sign)


@dataclass(frozen=True)
class ReferenceValues:
    psi0: complex
    psi0_x: complex
    psi0_z: complex
    theta: complex
    theta_x: complex

    @property
    def wronskian(self):
        return self.psi0 * self.theta_x - self.psi0_x * self.theta


def reference_values(z, x, sign=None):
    """Bundle psi0, its derivatives and theta_pm at a single point."""
    if sign is None:
        sign = theta_sign(z)
    p = complex(psi0(z, x))
    px = complex(psi0_x(z, x))
    return ReferenceValues(p, px, -px, complex(theta_pm(z, x, sign)), complex(theta_pm_x(z, x, sign)))


# ---------------------------------------------------------------------------
# envelope bounds


def envelope(z, x):
    """g_A(x - z) / (1 + |x - z|^{1/4}), the scale of psi0."""
    w = _arg(z, x)
    return g_a(w) / (1 + np.abs(w) ** 0.25)


def psi0_bound(z, x, c0=C0):
    return c0 * envelope(z, x)


def psi0_x_bound(z, x, c0=C0):
    w = _arg(z, x)
    return c0 * np.maximum(np.abs(w) ** 0.25, 1.0) * g_a(w)


def theta_bound(z, x, c0=C0):
    w = _arg(z, x)
    return 2 * c0 / (g_a(w) * (1 + np.abs(w) ** 0.25))


def theta_x_bound(z, x, c0=C0):
    w = _arg(z, x)
    return 2 * c0 * np.maximum(np.abs(w) ** 0.25, 1.0) / g_a(w)
