import functools
import math

import numpy as np
import pytest

from stark_spectra.airy import AiryZeroKind, airy_zero
from stark_spectra.errors import BracketError, ContourError, NormalizationError, SpectrumError
from stark_spectra.oracle import FdConfig, fd_spectrum
from stark_spectra.potential import Box, ExpDecay, InverseSquare, Zero
from stark_spectra import spectra
from stark_spectra.spectra import (
    BoundaryCondition,
    ContourSpec,
    bracket_eigenvalue,
    boundary_function,
    count_zeros_on_contour,
    delta_k,
    low_lying,
    norming_constant,
    refine_eigenvalue,
    spectrum,
)
from stark_spectra.volterra import SolverConfig

D, N = BoundaryCondition.DIRICHLET, BoundaryCondition.NEUMANN
PRESETS = {
    "zero": Zero(),
    "exp:1,0.5": ExpDecay(1, 0.5),
    "exp:1,1": ExpDecay(1, 1),
    "box:0.3,0,1": Box(0.3, 0, 1),
    "invsq:1,1": InverseSquare(1, 1),
}


@functools.lru_cache(maxsize=None)
def cached_spectrum(name, bc, k_max):
    return spectrum(PRESETS[name], bc, k_max)


def test_boundary_function_examples():
    assert abs(boundary_function(Zero(), D, -airy_zero(1))) < 1e-9
    assert abs(boundary_function(Zero(), N, -airy_zero(1, AiryZeroKind.AI_PRIME_ZERO))) < 1e-9
    assert boundary_function(Zero(), D, 0).real == pytest.approx(0.629271, abs=1e-6)


def test_boundary_function_weighted_same_argument():
    z = 12 + 5j
    a = boundary_function(ExpDecay(1, 1), D, z)
    b = boundary_function(ExpDecay(1, 1), D, z, weighted=True)
    assert abs(np.angle(a / b)) < 1e-10


def test_parse_bc():
    assert BoundaryCondition.parse("Dirichlet") is D
    assert BoundaryCondition.parse(N) is N
    assert len(BoundaryCondition) == 2
    with pytest.raises(ValueError):
        BoundaryCondition.parse("robin")


def test_delta_one():
    assert delta_k(1) == pytest.approx(4 * (1.5 * math.pi) ** (-1 / 3), rel=1e-15)
    assert delta_k(1) == pytest.approx(2.38587, abs=1e-5)


@pytest.mark.parametrize("bc", [D, N])
def test_bracket_zero_potential(bc):
    for k in range(1, 6):
        lo, hi = bracket_eigenvalue(Zero(), bc, k)
        mu = -airy_zero(k, bc.zero_kind)
        assert lo < mu < hi
        assert hi - lo <= 2 * delta_k(k)


def test_brackets_hold_one_fd_eigenvalue():
    q = ExpDecay(1, 0.5)
    fd_vals = np.array(fd_spectrum(q, D, FdConfig.default(12, q)))
    for k in range(1, 11):
        lo, hi = bracket_eigenvalue(q, D, k)
        inside = np.sum((fd_vals > lo) & (fd_vals < hi))
        assert inside == 1
        assert lo < fd_vals[k - 1] < hi


def test_bracket_error_without_doubling(monkeypatch):
    # the well pulls lambda_1 below zero; without widening no sign change remains near -a_1
    monkeypatch.setattr(spectra, "MAX_DOUBLINGS", 0)
    with pytest.raises(BracketError) as info:
        bracket_eigenvalue(Box(-3, 0, 2), D, 1)
    assert info.value.diagnostics["k"] == 1


@pytest.mark.parametrize("bc,expected", [(D, 2.338107410), (N, 1.018792972)])
def test_refine_examples(bc, expected):
    lam = refine_eigenvalue(Zero(), bc, bracket_eigenvalue(Zero(), bc, 1))
    assert lam == pytest.approx(expected, abs=1e-8)


def test_refine_idempotent():
    q = ExpDecay(1, 0.5)
    lam = refine_eigenvalue(q, D, bracket_eigenvalue(q, D, 2))
    assert refine_eigenvalue(q, D, (lam - 1e-10, lam + 1e-10)) == pytest.approx(lam, abs=1e-10)


def test_refine_rejects_bracket_without_sign_change():
    with pytest.raises(BracketError):
        refine_eigenvalue(Zero(), D, (2.5, 3.0))


@pytest.mark.parametrize("k", [1, 2, 5, 11, 20])
def test_norming_zero_dirichlet(k):
    nv = norming_constant(Zero(), D, -airy_zero(k))
    assert nv.nu_inv_deriv == pytest.approx(1, abs=1e-6)
    assert nv.nu_inv_norm == pytest.approx(1, abs=1e-6)


@pytest.mark.parametrize("k", [1, 2, 5, 11, 20])
def test_norming_zero_neumann(k):
    a = airy_zero(k, AiryZeroKind.AI_PRIME_ZERO)
    nv = norming_constant(Zero(), N, -a)
    assert nv.nu_inv_deriv == pytest.approx(-a, abs=1e-6)
    assert nv.nu_inv_norm == pytest.approx(-a, abs=1e-6)


def test_norming_gap_example():
    q = ExpDecay(1, 0.5)
    lam = refine_eigenvalue(q, D, bracket_eigenvalue(q, D, 3))
    nv = norming_constant(q, D, lam)
    assert nv.consistency_gap <= 1e-5
    assert nv.nu_inv_deriv > 0 and nv.nu_inv_norm > 0


def test_norming_defective():
    # a Dirichlet eigenvalue is not a Neumann one, but psi(lambda, 0) = 0 makes the Neumann denominator vanish
    with pytest.raises(NormalizationError):
        norming_constant(Zero(), N, -airy_zero(1))


@pytest.mark.parametrize("k", range(3, 11))
def test_small_circle_zero(k):
    assert count_zeros_on_contour(Zero(), D, ContourSpec.small(k)) == 1


@pytest.mark.parametrize("m", range(3, 7))
def test_big_circle_zero(m):
    assert count_zeros_on_contour(Zero(), D, ContourSpec.big(m)) == m


def test_small_circle_exp_example():
    assert count_zeros_on_contour(ExpDecay(1, 0.5), D, ContourSpec.small(5)) == 1


@pytest.mark.parametrize("name", ["exp:1,0.5", "box:0.3,0,1", "invsq:1,1"])
@pytest.mark.parametrize("bc", [D, N])
def test_contours_match_eigenvalue_count(name, bc):
    recs = cached_spectrum(name, bc, 15)
    lams = np.array([r.lam for r in recs])
    for m in (3, 5):
        contour = ContourSpec.big(m, bc)
        radius = abs(contour.point(0.0))
        assert count_zeros_on_contour(PRESETS[name], bc, contour) == np.sum(lams < radius)
    for k in (3, 4):
        assert count_zeros_on_contour(PRESETS[name], bc, ContourSpec.small(k, bc)) == 1


@pytest.mark.parametrize("bc", [D, N])
def test_coarse_contour_config_matches_default(bc):
    q = ExpDecay(1, 0.5)
    for contour in (ContourSpec.small(4, bc), ContourSpec.big(4, bc)):
        assert count_zeros_on_contour(q, bc, contour) == count_zeros_on_contour(q, bc, contour, SolverConfig())


def test_contour_through_zero_rejected():
    # radius of BigCircle placed exactly on -a_4
    class OnZero(ContourSpec):
        def point(self, t):
            return -airy_zero(4) * np.exp(2j * math.pi * t)

    with pytest.raises(ContourError):
        count_zeros_on_contour(Zero(), D, OnZero("big", 4, D, 64))


def test_contour_spec_validation():
    with pytest.raises(ValueError):
        ContourSpec("small", 3, D, 32)
    with pytest.raises(ValueError):
        ContourSpec("ring", 3, D, 64)


def test_spectrum_zero_examples():
    d = [r.lam for r in cached_spectrum("zero", D, 5)]
    np.testing.assert_allclose(d, [2.33811, 4.08795, 5.52056, 6.78671, 7.94413], atol=1e-5)
    n = [r.lam for r in cached_spectrum("zero", N, 5)][:3]
    np.testing.assert_allclose(n, [1.01879, 3.24820, 4.82010], atol=1e-5)


@pytest.mark.parametrize("name", list(PRESETS))
@pytest.mark.parametrize("bc", [D, N])
def test_record_invariants(name, bc):
    recs = cached_spectrum(name, bc, 15)
    assert [r.k for r in recs] == list(range(1, 16))
    for r in recs:
        assert r.bracket[0] <= r.lam <= r.bracket[1]
        assert r.boundary_residual <= 1e-9
        assert r.consistency_gap <= 1e-5 * max(1, abs(r.nu_inv_norm))
        assert r.nu_inv_deriv > 0
    assert all(b.lam > a.lam for a, b in zip(recs, recs[1:]))


@pytest.mark.parametrize("name", list(PRESETS))
def test_interlacing(name):
    d = [r.lam for r in cached_spectrum(name, D, 15)]
    n = [r.lam for r in cached_spectrum(name, N, 16)]
    for k in range(15):
        assert n[k] < d[k] < n[k + 1]


def test_record_dict_keys():
    rec = cached_spectrum("zero", D, 5)[0]
    assert list(rec.as_dict())[:11] == [
        "k", "bc", "lambda", "bracket_lo", "bracket_hi", "nu_inv_deriv", "nu_inv_norm",
        "consistency_gap", "predicted_lambda", "predicted_nu_inv", "boundary_residual",
    ]


def test_perturbation_continuity():
    lams = {}
    for eps in (0.0, 0.25, 0.5, 1.0):
        q = ExpDecay(1, eps) if eps else Zero()
        lams[eps] = np.array([r.lam for r in spectrum(q, D, 6)])
    np.testing.assert_allclose(lams[0.0], [-airy_zero(k) for k in range(1, 7)], atol=1e-8)
    # eigenvalues increase with a positive perturbation and stay within eps ||q||
    for lo, hi in ((0.0, 0.25), (0.25, 0.5), (0.5, 1.0)):
        gap = lams[hi] - lams[lo]
        assert np.all(gap > 0)
        assert np.all(gap <= (hi - lo) * 1.0)


def test_spectrum_usage_errors():
    with pytest.raises(ValueError):
        spectrum(Zero(), D, 0)


def test_spectrum_partial_results(monkeypatch):
    monkeypatch.setattr(spectra, "MAX_DOUBLINGS", 0)
    with pytest.raises(SpectrumError) as info:
        spectrum(Box(-3, 0, 2), D, 3)
    assert 1 in info.value.failures
    assert all(r.k != 1 for r in info.value.partial)


def test_threads_do_not_change_results():
    a = spectrum(ExpDecay(1, 1), N, 4)
    b = spectrum(ExpDecay(1, 1), N, 4, threads=3)
    assert [r.as_dict() for r in a] == [r.as_dict() for r in b]


def test_low_lying_negative_well():
    q = Box(-3, 0, 2)
    found = low_lying(q, D, SolverConfig(n_grid=2000))
    assert found and found[0].label == "0.1"
    fd = fd_spectrum(q, D, FdConfig(20, 20000, 3))
    assert found[0].lam == pytest.approx(fd[0], abs=1e-4)
    assert low_lying(Zero(), D) == []
