import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from qubitgp.kernels import DeltaNoise, GaussianNoise, OneOverFNoise, kernel_gaussian, kernel_oneoverf

pos = st.floats(1e-3, 50.0)


def test_gaussian_peak_and_tail():
    assert kernel_gaussian(0.03, 0.03, 0.0) == 0.03
    assert kernel_gaussian(1.0, 1.0, 50.0) == 0.0


def test_gaussian_integral():
    val, _ = integrate.quad(lambda s: kernel_gaussian(1.0, 2.0, s), 0, np.inf, epsabs=1e-13)
    assert val == pytest.approx(math.sqrt(math.pi) / 4, abs=1e-12)


@given(pos, pos, st.floats(0, 20), st.floats(0, 20))
def test_gaussian_monotone_and_linear(gamma, alpha, s1, s2):
    lo, hi = sorted((s1, s2))
    assert kernel_gaussian(gamma, alpha, hi) <= kernel_gaussian(gamma, alpha, lo)
    assert kernel_gaussian(gamma, alpha, s1) == pytest.approx(gamma * kernel_gaussian(1.0, alpha, s1),
                                                              rel=1e-14, abs=1e-300)
    assert kernel_gaussian(gamma, alpha, -s1) == kernel_gaussian(gamma, alpha, s1)


def test_gaussian_rejects_zero_alpha():
    with pytest.raises(ValueError):
        kernel_gaussian(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        GaussianNoise(0.1, 0.1, 0.0, 1.0)


def test_zero_t_value_and_domain():
    n = OneOverFNoise(1.0, 1.0)
    assert kernel_oneoverf(n, 1.0) == pytest.approx(-0.337403923, abs=1e-9)
    assert -1e-3 < kernel_oneoverf(n, 1e4) < 1e-3
    with pytest.raises(ValueError):
        kernel_oneoverf(n, 0.0)
    assert n.singular_at_zero


def test_high_t_small_s_limit():
    n = OneOverFNoise(1.0, 1.0, regime="high_t", kBT=1.0)
    assert kernel_oneoverf(n, 0.0) == pytest.approx(1.0)
    assert kernel_oneoverf(n, 1e-9) == pytest.approx(1.0, abs=1e-8)
    assert not n.singular_at_zero


def test_one_over_f_same_kernel_on_both_channels():
    n = OneOverFNoise(0.3, 0.1)
    s = np.linspace(0.1, 10, 7)
    np.testing.assert_array_equal(n.kernel0(s), n.kernel1(s))


@pytest.mark.parametrize("kw", [dict(gamma0=-1, gamma1=0), dict(gamma0=0, gamma1=0, kBT=-1)])
def test_delta_validation(kw):
    with pytest.raises(ValueError):
        DeltaNoise(**kw)


def test_one_over_f_validation():
    with pytest.raises(ValueError):
        OneOverFNoise(1.0, 0.0)
    with pytest.raises(ValueError):
        OneOverFNoise(1.0, 1.0, regime="warm")


def test_noiseless_flags():
    assert GaussianNoise(0, 0, 1, 1).is_noiseless
    assert DeltaNoise(0, 0).is_noiseless
    assert OneOverFNoise(1.0, 1.0, regime="high_t", kBT=0.0).is_noiseless
    assert not OneOverFNoise(1.0, 1.0).is_noiseless
