import math

import numpy as np
import pytest

from stark_spectra.airy import airy_zero
from stark_spectra.asymptotics import (
    boundedness_ratio,
    predict_eigenvalue,
    predict_norming,
    residual_report,
    theil_sen_slope,
)
from stark_spectra.potential import ExpDecay, Zero
from stark_spectra.spectra import BoundaryCondition, spectrum

D, N = BoundaryCondition.DIRICHLET, BoundaryCondition.NEUMANN


def test_prediction_examples():
    assert predict_eigenvalue(D, 1) == pytest.approx((9 * math.pi / 8) ** (2 / 3), rel=1e-15)
    assert predict_eigenvalue(D, 1) == pytest.approx(2.32025, abs=1e-5)
    assert predict_eigenvalue(N, 1) == pytest.approx(1.11546, abs=1e-5)
    assert predict_norming(N, 1) == pytest.approx(1.11546, abs=1e-5)
    assert predict_norming(D, 7) == 1.0


def test_prediction_far_out():
    assert abs(predict_eigenvalue(D, 1000) / -airy_zero(1000) - 1) <= 1e-6


@pytest.mark.parametrize("k", [1, 2, 10, 100])
def test_neumann_norming_equals_eigenvalue_prediction(k):
    assert predict_norming(N, k) / predict_eigenvalue(N, k) == 1.0


@pytest.mark.parametrize("bc", [D, N])
def test_predictions_increase(bc):
    vals = [predict_eigenvalue(bc, k) for k in range(1, 500)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_invalid_index():
    with pytest.raises(ValueError):
        predict_eigenvalue(D, 0)


def test_ladder_gap_rate():
    # relative error O(k^-2) of the leading term means an absolute gap ~ c k^{-4/3}
    ks = np.arange(5, 101)
    scaled = np.array([abs(predict_eigenvalue(D, k) + airy_zero(k)) * k ** (4 / 3) for k in ks])
    c = scaled[-1]
    assert np.all(scaled <= 1.5 * c) and np.all(scaled >= 0.5 * c)


def test_zero_potential_rate_exponent():
    report = residual_report(spectrum(Zero(), D, 40, k_min=5))
    ks = np.array([r.k for r in report.rows])
    scaled = np.array([r.scaled_lambda_residual for r in report.rows])
    slope = np.polyfit(np.log(ks), np.log(scaled), 1)[0]
    assert 0.8 <= -slope <= 1.2
    assert report.bounded
    assert report.nu_at_noise_floor and report.passed


def test_exp_decay_dirichlet_report():
    report = residual_report(spectrum(ExpDecay(1, 1), D, 40, k_min=5))
    assert report.bounded
    assert report.nu_slope < 0
    assert [r.k for r in report.rows] == list(range(5, 41))
    assert all(r.scaled_lambda_residual >= 0 and r.nu_residual >= 0 for r in report.rows)
    d = report.as_dict()
    assert d["passed"] is True and len(d["rows"]) == 36


def test_report_rejects_mixed_or_empty():
    recs = spectrum(Zero(), D, 2) + spectrum(Zero(), N, 2)
    with pytest.raises(ValueError):
        residual_report(recs)
    with pytest.raises(ValueError):
        residual_report([])


def test_boundedness_ratio_and_slope():
    ks = np.arange(1, 11)
    assert boundedness_ratio(ks, np.ones(10)) == 1.0
    assert boundedness_ratio(ks, np.zeros(10)) == 0.0
    assert boundedness_ratio(ks, np.where(ks == 10, 10.0, 1.0)) == 10.0
    assert theil_sen_slope(ks, 3.0 - 0.5 * ks) == pytest.approx(-0.5)
    assert math.isnan(theil_sen_slope([1], [1.0]))
