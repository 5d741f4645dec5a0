import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stark_spectra import reference as ref
from stark_spectra.airy import airy_zero, g_a
from stark_spectra.errors import DomainError

SQRT_PI = math.sqrt(math.pi)


def test_psi0_examples():
    assert ref.psi0(0, 0) == pytest.approx(SQRT_PI * 0.3550280538878172, rel=1e-14)
    assert ref.psi0(0, 0) == pytest.approx(0.629271, abs=1e-6)
    assert abs(ref.psi0(-airy_zero(1), 0)) < 1e-9


def test_psi0_z_is_minus_psi0_x():
    rng = np.random.default_rng(1)
    for _ in range(20):
        z = complex(rng.uniform(-10, 10), rng.uniform(-5, 5))
        x = rng.uniform(0, 10)
        assert ref.psi0_z(z, x) == -ref.psi0_x(z, x)
        h = 1e-6
        fd = (ref.psi0(z + h, x) - ref.psi0(z - h, x)) / (2 * h)
        assert abs(fd - ref.psi0_z(z, x)) < 1e-6 * max(1, abs(fd))


def test_negative_x_rejected():
    with pytest.raises(DomainError):
        ref.psi0(1.0, -0.1)


def test_wronskian_example():
    rv = ref.reference_values(1 + 1j, 0.5, sign=1)
    assert abs(rv.wronskian - 1) < 1e-9


def test_wronskian_grid_matched_sign():
    rng = np.random.default_rng(2)
    z = rng.uniform(-15, 15, 100) + 1j * rng.uniform(-8, 8, 100)
    x = rng.uniform(0, 15, 100)
    sign = np.array([ref.theta_sign(v) for v in z])
    w = np.array([ref.wronskian(ref.psi0(a, b), ref.psi0_x(a, b), ref.theta_pm(a, b, s), ref.theta_pm_x(a, b, s))
                  for a, b, s in zip(z, x, sign)])
    assert np.max(np.abs(w - 1)) < 1e-9


@pytest.mark.parametrize("sign", [1, -1])
def test_wronskian_grid_relative(sign):
    # the opposite sign grows exponentially, so only the relative cancellation is meaningful
    rng = np.random.default_rng(2)
    z = rng.uniform(-15, 15, 100) + 1j * rng.uniform(-8, 8, 100)
    x = rng.uniform(0, 15, 100)
    p, px = ref.psi0(z, x), ref.psi0_x(z, x)
    t, tx = ref.theta_pm(z, x, sign), ref.theta_pm_x(z, x, sign)
    scale = np.abs(p * tx) + np.abs(px * t)
    assert np.max(np.abs(ref.wronskian(p, px, t, tx) - 1) / np.maximum(scale, 1)) < 1e-12


def test_theta_connection_formula():
    # theta_pm = theta0 -+ i psi0
    z, x = 2.5 - 1.5j, np.linspace(0, 4, 9)
    np.testing.assert_allclose(ref.theta_pm(z, x, 1), ref.theta0(z, x) - 1j * ref.psi0(z, x), atol=1e-12)
    np.testing.assert_allclose(ref.theta_pm(z, x, -1), ref.theta0(z, x) + 1j * ref.psi0(z, x), atol=1e-12)


def test_theta_conjugate_for_real_arguments():
    x = np.linspace(0, 8, 17)
    np.testing.assert_allclose(ref.theta_pm(3.0, x, 1), np.conj(ref.theta_pm(3.0, x, -1)), rtol=1e-13)


def test_theta_bound_grid():
    g = np.linspace(-12, 12, 25)
    for z in (g[:, None] + 1j * g[None, :]).ravel():
        x = np.linspace(0, 12, 13)
        sign = ref.theta_sign(z)
        assert np.all(np.abs(ref.theta_pm(z, x, sign)) <= ref.theta_bound(z, x))
        assert np.all(np.abs(ref.theta_pm_x(z, x, sign)) <= ref.theta_x_bound(z, x))


def test_psi0_bound_grid():
    g = np.linspace(-20, 20, 40)
    for z in (g[:, None] + 1j * g[None, :]).ravel()[::7]:
        x = np.linspace(0, 20, 11)
        assert np.all(np.abs(ref.psi0(z, x)) <= ref.psi0_bound(z, x))
        assert np.all(np.abs(ref.psi0_x(z, x)) <= ref.psi0_x_bound(z, x))


def test_kernel_equivalence_example():
    a = ref.j0_kernel(2, 0.3, 1.7, via="theta0")
    b = ref.j0_kernel(2, 0.3, 1.7, via="theta_pm", sign=1)
    assert abs(a - b) < 1e-9


@pytest.mark.parametrize("sign", [1, -1])
def test_kernel_sign_irrelevant(sign):
    rng = np.random.default_rng(3)
    for _ in range(30):
        z = complex(rng.uniform(-8, 8), rng.uniform(-4, 4))
        x, y = sorted(rng.uniform(0, 6, 2))
        a = ref.j0_kernel(z, x, y, via="theta0")
        b = ref.j0_kernel(z, x, y, sign=sign)
        assert abs(a - b) < 1e-9 * max(1, abs(a))


def test_kernel_diagonal():
    for z in (1.0, 2 - 3j, -4 + 1j):
        assert ref.j0_kernel(z, 0.7, 0.7) == 0
        assert abs(ref.j0_kernel_y(z, 0.7, 0.7) + 1) < 1e-9
        assert abs(ref.j0_kernel_x(z, 0.7, 0.7) - 1) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(-10, 10), st.floats(-5, 5), st.floats(0, 8), st.floats(0, 8))
def test_kernel_antisymmetry(re, im, x, y):
    z = complex(re, im)
    assert abs(ref.j0_kernel(z, x, y) + ref.j0_kernel(z, y, x)) <= 1e-12 * max(1, abs(ref.j0_kernel(z, x, y)))


def test_g_a_monotone_in_x():
    rng = np.random.default_rng(4)
    x = np.linspace(0, 40, 401)
    for _ in range(50):
        z = complex(rng.uniform(-20, 20), rng.choice([-1, 1]) * rng.uniform(0.1, 10))
        vals = g_a(x - z)
        assert np.all(np.diff(vals) < 0) or np.all(vals[np.diff(vals, append=-1) >= 0] < 1e-300)
    z = 7.0
    vals = g_a(x - z)
    assert np.all(vals[x <= z] == 1.0)
    assert np.all(np.diff(vals[x >= z]) < 0)


@pytest.mark.parametrize("z", [3.0, -2.0 + 1j, 5 - 2j])
def test_psi0_solves_ode(z):
    x = np.linspace(0.5, 10, 40)
    h = 1e-3
    f = [ref.psi0(z, x + j * h) for j in (-2, -1, 0, 1, 2)]
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h**2)
    defect = -d2 + (x - z) * ref.psi0(z, x)
    assert np.max(np.abs(defect)) <= 1e-6
