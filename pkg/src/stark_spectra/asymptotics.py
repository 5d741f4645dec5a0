"""Leading-order eigenvalue and norming-constant asymptotics and residual tables.

    lambda_k^D ~ ((3/2) pi (k - 1/4))^{2/3}     1/nu_k^D ~ 1
    lambda_k^N ~ ((3/2) pi (k - 3/4))^{2/3}     1/nu_k^N ~ lambda_k^N

The eigenvalue residual is O(1/k), so k |lambda/pred - 1| should stay
bounded; the norming residuals are only known to vanish, so the check is a
negative robust slope over the computed range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .spectra import BoundaryCondition

BOUNDEDNESS_FACTOR = 3.0
# residuals below this are solver round-off; their trend carries no information
NU_NOISE_FLOOR = 1e-9


def predict_eigenvalue(bc, k):
    bc = BoundaryCondition.parse(bc)
    if k < 1:
        raise ValueError("k must be >= 1")
    return (1.5 * math.pi * (k - bc.phase_offset)) ** (2.0 / 3.0)


def predict_norming(bc, k):
    bc = BoundaryCondition.parse(bc)
    if bc is BoundaryCondition.DIRICHLET:
        if k < 1:
            raise ValueError("k must be >= 1")
        return 1.0
    return predict_eigenvalue(bc, k)


@dataclass(frozen=True)
class ResidualRow:
    k: int
    lam: float
    predicted_lambda: float
    scaled_lambda_residual: float
    nu_inv: float
    predicted_nu_inv: float
    nu_residual: float

    def as_dict(self):
        return {
            "k": self.k,
            "lambda": self.lam,
            "predicted_lambda": self.predicted_lambda,
            "scaled_lambda_residual": self.scaled_lambda_residual,
            "nu_inv": self.nu_inv,
            "predicted_nu_inv": self.predicted_nu_inv,
            "nu_residual": self.nu_residual,
        }


@dataclass(frozen=True)
class AsymptoticReport:
    bc: BoundaryCondition
    rows: tuple
    bounded: bool
    boundedness_ratio: float
    nu_slope: float
    lambda_slope: float

    @property
    def nu_at_noise_floor(self):
        return max(r.nu_residual for r in self.rows) <= NU_NOISE_FLOOR

    @property
    def nu_trend_negative(self):
        return self.nu_slope < 0 or self.nu_at_noise_floor

    @property
    def passed(self):
        return self.bounded and self.nu_trend_negative

    def as_dict(self):
        return {
            "bc": self.bc.value,
            "bounded": self.bounded,
            "boundedness_ratio": self.boundedness_ratio,
            "nu_slope": self.nu_slope,
            "lambda_slope": self.lambda_slope,
            "nu_trend_negative": self.nu_trend_negative,
            "passed": self.passed,
            "rows": [r.as_dict() for r in self.rows],
        }


def boundedness_ratio(ks, values):
    """max / median of ``values`` over the upper half of the k range."""
    ks = np.asarray(ks)
    values = np.asarray(values, dtype=float)
    top = values[ks >= np.median(ks)]
    med = float(np.median(top))
    if med == 0:
        return 0.0 if float(np.max(top)) == 0 else math.inf
    return float(np.max(top) / med)


def theil_sen_slope(ks, values):
    if len(ks) < 2:
        return math.nan
    return float(stats.theilslopes(np.asarray(values, dtype=float), np.asarray(ks, dtype=float))[0])


def residual_report(records):
    """Tabulate scaled residuals and run the boundedness and trend checks."""
    if not records:
        raise ValueError("residual_report needs at least one record")
    bcs = {r.bc for r in records}
    if len(bcs) != 1:
        raise ValueError("residual_report needs records of a single boundary condition")
    bc = bcs.pop()
    rows = []
    for r in sorted(records, key=lambda r: r.k):
        pl, pn = predict_eigenvalue(bc, r.k), predict_norming(bc, r.k)
        nu = r.nu_inv_deriv
        rows.append(ResidualRow(r.k, r.lam, pl, r.k * abs(r.lam / pl - 1.0), nu, pn, abs(nu / pn - 1.0)))
    ks = [row.k for row in rows]
    scaled = [row.scaled_lambda_residual for row in rows]
    ratio = boundedness_ratio(ks, scaled)
    return AsymptoticReport(
        bc=bc,
        rows=tuple(rows),
        bounded=ratio <= BOUNDEDNESS_FACTOR,
        boundedness_ratio=ratio,
        nu_slope=theil_sen_slope(ks, [row.nu_residual for row in rows]),
        lambda_slope=theil_sen_slope(ks, scaled),
    )
