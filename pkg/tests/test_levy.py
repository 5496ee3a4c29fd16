import math

import numpy as np
import pytest
from scipy import integrate

from cogarch import levy
from cogarch.errors import ValidationError
from cogarch.levy import JumpDist, LevyDriver


def test_jump_validation():
    with pytest.raises(ValidationError):
        JumpDist("cauchy", 1.0)
    with pytest.raises(ValidationError):
        JumpDist.normal(0.0)
    with pytest.raises(ValidationError):
        JumpDist.constant(0.0)
    with pytest.raises(ValidationError):
        LevyDriver(0.0, JumpDist.normal(1.0))
    with pytest.raises(ValidationError):
        LevyDriver(1.0, JumpDist.normal(1.0), brownian_var=-1.0)


def test_even_moments():
    j = JumpDist.normal(0.74)
    assert j.even_moment(1) == pytest.approx(0.74)
    assert j.even_moment(2) == pytest.approx(3 * 0.74 ** 2)
    assert j.even_moment(3) == pytest.approx(15 * 0.74 ** 3)
    assert JumpDist.two_point(0.5).even_moment(2) == pytest.approx(0.5 ** 4)


def test_ex7_driver_moments():
    d = LevyDriver(2.0, JumpDist.normal(0.74))
    mo = levy.moments(d)
    assert mo.mu == pytest.approx(1.48)
    assert mo.rho == pytest.approx(3.2856)
    assert mo.EL1_sq == pytest.approx(1.48)
    d2 = LevyDriver(2.0, JumpDist.normal(0.74), brownian_var=0.3)
    assert d2.second_moment == pytest.approx(1.78)


def test_constant_driver_compensated():
    d = LevyDriver(3.0, JumpDist.constant(0.2))
    assert d.drift == pytest.approx(-0.6)
    assert LevyDriver(1.0, JumpDist.normal(1.0)).drift == 0.0


def test_log_integral():
    d = LevyDriver(2.0, JumpDist.normal(0.74))
    assert levy.log_integral(d, 0.0) == 0.0
    k = 0.2149347
    s = math.sqrt(0.74)
    ref = 2.0 * integrate.quad(lambda x: math.log1p(k * x * x) * math.exp(-x * x / (2 * 0.74))
                               / (s * math.sqrt(2 * math.pi)), -np.inf, np.inf)[0]
    assert levy.log_integral(d, k) == pytest.approx(ref, rel=1e-9)
    dc = LevyDriver(1.5, JumpDist.two_point(0.3))
    assert levy.log_integral(dc, 2.0) == pytest.approx(1.5 * math.log1p(2 * 0.09))
    with pytest.raises(ValidationError):
        levy.log_integral(d, -1.0)


def test_log_integral_below_linear_bound():
    # log(1+x) <= x gives c E log(1 + k J^2) <= k mu
    d = LevyDriver(2.0, JumpDist.normal(0.74))
    for k in (0.01, 0.3, 2.0):
        assert levy.log_integral(d, k) <= k * d.mu


def test_power_integral():
    d = LevyDriver(2.0, JumpDist.normal(0.74))
    k = 0.3
    assert levy.power_integral(d, k, 1) == pytest.approx(k * d.mu)
    assert levy.power_integral(d, k, 2) == pytest.approx(2 * k * d.mu + k ** 2 * d.rho)
    with pytest.raises(ValidationError):
        levy.power_integral(d, k, 0)


def test_sample_jumps_rate_and_order():
    d = LevyDriver(2.0, JumpDist.normal(0.74))
    rng = np.random.default_rng(7)
    js = levy.sample_jumps(d, 5000.0, rng)
    assert np.all(np.diff(js.times) > 0)
    assert js.times[0] > 0 and js.times[-1] <= 5000.0
    n = len(js)
    assert abs(n - 10000) < 4 * math.sqrt(10000)
    assert js.sizes.var() == pytest.approx(0.74, rel=0.05)
    gaps = np.diff(js.times)
    assert gaps.mean() == pytest.approx(0.5, rel=0.05)
    assert np.allclose(js.squared, js.sizes ** 2)


def test_sample_jumps_deterministic():
    d = LevyDriver(1.0, JumpDist.two_point(1.0))
    a = levy.sample_jumps(d, 100.0, np.random.default_rng(1))
    b = levy.sample_jumps(d, 100.0, np.random.default_rng(1))
    assert np.array_equal(a.times, b.times) and np.array_equal(a.sizes, b.sizes)
    assert set(np.unique(a.sizes)) <= {-1.0, 1.0}
