"""Airy functions of complex argument, the decay envelope g_A, and Airy zeros.

The production path wraps the AMOS routines shipped with scipy (``airy`` and
the exponentially scaled ``airye``).  A self-contained evaluator built from the
Maclaurin series and the large-argument expansions in the phase variable
``zeta = (2/3) z**(3/2)`` is kept alongside (:func:`airy_native`); it is used to
cross-check the production path and to seed tests with values that do not
depend on scipy.
"""

from __future__ import annotations

import enum
import math
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import AiryRangeError, ConvergenceError

SQRT_PI = math.sqrt(math.pi)

#: Concrete envelope constant: |sqrt(pi) Ai(z)| <= C0 g_A(z) / (1 + |z|^{1/4}) and
#: |sqrt(pi) Ai'(z)| <= C0 max(|z|^{1/4}, 1) g_A(z) for all complex z.
C0 = 2.0

AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
AIP0 = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)

# Native evaluator regime switch (|z| <= SERIES_RADIUS uses Maclaurin series).
SERIES_RADIUS = 6.0

_LOG_MAX = 709.0
_LOG_MIN = -745.0


class AiryZeroKind(enum.Enum):
    AI_ZERO = "ai"
    AI_PRIME_ZERO = "ai_prime"


def _as_complex(z):
    z = np.asarray(z, dtype=complex)
    # -0.0 imaginary parts would select the lower side of the cut.
    return z.real + 1j * (z.imag + 0.0)


def zeta(z):
    """Phase variable (2/3) z^{3/2}, principal branch, limit from above on R_-."""
    z = _as_complex(z)
    return (2.0 / 3.0) * z * np.sqrt(z)


def log_g_a(z):
    """Natural log of the envelope, -(2/3) Re z^{3/2}."""
    return -zeta(z).real


def g_a(z, return_saturated=False):
    """Envelope g_A(z) = exp(-(2/3) Re z^{3/2}).

    Values outside the double range are clamped to the nearest representable
    positive number; pass ``return_saturated=True`` to also get the mask of
    clamped entries.
    """
    expo = log_g_a(z)
    saturated = (expo > _LOG_MAX) | (expo < _LOG_MIN)
    val = np.exp(np.clip(expo, _LOG_MIN, _LOG_MAX))
    val = np.maximum(val, np.finfo(float).tiny)
    if np.ndim(val) == 0:
        val, saturated = float(val), bool(saturated)
    if return_saturated:
        return val, saturated
    return val


def _check_finite(name, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise AiryRangeError(f"{name}: result overflows the double range")


def _unwrap(x):
    return x.item() if np.ndim(x) == 0 else x


def airy(z):
    """Return (Ai, Ai', Bi, Bi') at complex z (array or scalar)."""
    z = _as_complex(z)
    ai, aip, bi, bip = special.airy(z)
    _check_finite("airy", ai, aip, bi, bip)
    return _unwrap(ai), _unwrap(aip), _unwrap(bi), _unwrap(bip)


def airy_ai(z):
    return airy(z)[0]


def airy_ai_prime(z):
    return airy(z)[1]


def airy_bi(z):
    return airy(z)[2]


def airy_bi_prime(z):
    return airy(z)[3]


def ai_shifted(z, shift):
    """Ai(z) e^{shift} and Ai'(z) e^{shift} without intermediate overflow.

    ``shift`` is a real array broadcastable against ``z``.  The exponentially
    scaled AMOS values carry the factor e^{zeta}, which is removed here in the
    combined exponent ``shift - zeta``.
    """
    z = _as_complex(z)
    eai, eaip, _, _ = special.airye(z)
    expo = np.asarray(shift, dtype=float) - zeta(z)
    if np.any(expo.real > _LOG_MAX):
        raise AiryRangeError("ai_shifted: scaled value overflows")
    fac = np.exp(expo)
    out_ai = eai * fac
    out_aip = eaip * fac
    _check_finite("ai_shifted", out_ai, out_aip)
    return out_ai, out_aip


# ---------------------------------------------------------------------------
# native evaluator


def _maclaurin(z):
    """Ai, Ai', Bi, Bi' from the two Maclaurin series f, g."""
    z3 = z * z * z
    f = t = 1.0 + 0j
    g = s = z
    fp = u = z * z / 2.0
    gp = v = 1.0 + 0j
    for k in range(1, 200):
        t = t * z3 / ((3 * k - 1) * (3 * k))
        s = s * z3 / ((3 * k) * (3 * k + 1))
        u = u * z3 / ((3 * k) * (3 * k + 2))
        v = v * z3 / ((3 * k - 2) * (3 * k))
        f += t
        g += s
        fp += u
        gp += v
        if max(abs(t), abs(s), abs(u), abs(v)) < 1e-18 * max(abs(f), abs(g), 1e-300):
            break
    c1, c2 = AI0, -AIP0
    s3 = math.sqrt(3.0)
    return (c1 * f - c2 * g, c1 * fp - c2 * gp, s3 * (c1 * f + c2 * g), s3 * (c1 * fp + c2 * gp))


def _asym_coeffs(n):
    u = [1.0]
    for k in range(1, n + 1):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k))
    v = [1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, n + 1)]
    return u, v


_U, _V = _asym_coeffs(40)


def _truncated(coeffs, x, alternate, start=0, step=1, min_terms=10):
    """Sum of coeffs[k]/x**k (optionally alternating), optimally truncated."""
    total = 0j
    prev = math.inf
    for j, k in enumerate(range(start, len(coeffs), step)):
        term = coeffs[k] / x**k
        if alternate and (j % 2 == 1):
            term = -term
        if j >= min_terms and abs(term) > prev:
            break
        total += term
        prev = abs(term)
        if abs(term) < 1e-17 * abs(total):
            break
    return total


def _ai_asym_right(z):
    """Large-|z| expansion valid for |arg z| <= 2 pi / 3."""
    zt = zeta(z).item()
    z14 = z ** 0.25
    e = np.exp(-zt)
    ai = e / (2 * SQRT_PI * z14) * _truncated(_U, -zt, False)
    aip = -z14 * e / (2 * SQRT_PI) * _truncated(_V, -zt, False)
    return ai, aip


def _ai_asym_left(z):
    """Expansion of Ai(z), Ai'(z) for z = -w with |arg w| < 2 pi / 3."""
    w = -z
    zt = zeta(w).item()
    w14 = w ** 0.25
    c = np.cos(zt - math.pi / 4)
    s = np.sin(zt - math.pi / 4)
    pu = _truncated(_U, zt, True, 0, 2)
    qu = _truncated(_U, zt, True, 1, 2)
    pv = _truncated(_V, zt, True, 0, 2)
    qv = _truncated(_V, zt, True, 1, 2)
    ai = (c * pu + s * qu) / (SQRT_PI * w14)
    aip = w14 * (s * pv - c * qv) / SQRT_PI
    return ai, aip


def _ai_native(z):
    if abs(z) <= SERIES_RADIUS:
        ai, aip, _, _ = _maclaurin(z)
        return ai, aip
    if abs(np.angle(z)) <= 2 * math.pi / 3:
        return _ai_asym_right(z)
    return _ai_asym_left(z)


def airy_native(z):
    """(Ai, Ai', Bi, Bi') by series for |z| <= 6 and asymptotics beyond.

    Bi is assembled from the connection formula
    Bi(z) = e^{i pi/6} Ai(z e^{2 pi i/3}) + e^{-i pi/6} Ai(z e^{-2 pi i/3}).
    Relative accuracy is about 1e-7 at the regime boundary and improves
    away from it; this is an oracle, not the production path.
    """
    z = complex(z) + 0j
    if abs(z) <= SERIES_RADIUS:
        return _maclaurin(z)
    ai, aip = _ai_native(z)
    wp = np.exp(2j * math.pi / 3)
    a1, a1p = _ai_native(z * wp)
    a2, a2p = _ai_native(z / wp)
    bi = np.exp(1j * math.pi / 6) * a1 + np.exp(-1j * math.pi / 6) * a2
    bip = np.exp(5j * math.pi / 6) * a1p + np.exp(-5j * math.pi / 6) * a2p
    return complex(ai), complex(aip), complex(bi), complex(bip)


def airy_series(z):
    """Maclaurin-series (Ai, Ai', Bi, Bi') at any z; exact in exact arithmetic."""
    return tuple(complex(v) for v in _maclaurin(complex(z) + 0j))


# ---------------------------------------------------------------------------
# zeros


def airy_zero_seed(k, kind=AiryZeroKind.AI_ZERO):
    """Leading term of the zero asymptotics, -((3/2) pi (k - 1/4 or 3/4))^{2/3}."""
    if k < 1:
        raise ValueError("k must be >= 1")
    off = 0.25 if kind is AiryZeroKind.AI_ZERO else 0.75
    return -((1.5 * math.pi * (k - off)) ** (2.0 / 3.0))


def _zero_function(kind):
    if kind is AiryZeroKind.AI_ZERO:
        def step(x):
            ai, aip, _, _ = special.airy(x)
            return ai, ai / aip
    else:
        def step(x):
            ai, aip, _, _ = special.airy(x)
            return aip, aip / (x * ai)
    return step


@lru_cache(maxsize=None)
def airy_zero(k, kind=AiryZeroKind.AI_ZERO, max_iter=50):
    """k-th zero a_k (or a_k') of Ai (or Ai'), refined by safeguarded Newton."""
    if isinstance(kind, str):
        kind = AiryZeroKind(kind)
    seed = airy_zero_seed(k, kind)
    spacing = math.pi / math.sqrt(abs(seed))
    lo, hi = seed - 0.5 * spacing, seed + 0.5 * spacing
    step = _zero_function(kind)
    x = seed
    for it in range(max_iter):
        f, dx = step(x)
        x_new = x - dx
        if not lo < x_new < hi:
            # Newton left the trust interval: fall back to bisection on it.
            from scipy.optimize import brentq

            fl, fh = step(lo)[0], step(hi)[0]
            if fl * fh > 0:
                raise ConvergenceError(
                    f"airy_zero({k}, {kind.value}): Newton left the trust interval",
                    iterations=it, last=x, interval=(lo, hi),
                )
            return brentq(lambda t: step(t)[0], lo, hi, xtol=1e-15, rtol=1e-15)
        if abs(x_new - x) <= 1e-15 * max(1.0, abs(x)):
            return float(x_new)
        x = x_new
    raise ConvergenceError(
        f"airy_zero({k}, {kind.value}) did not converge", iterations=max_iter, last=x
    )
