"""
Compound-Poisson (plus optional Brownian) driving Lévy processes.

Only zero-mean drivers are representable.  ``Normal`` and ``TwoPoint``
jumps are symmetric; a ``Constant(v)`` driver is compensated by the drift
``-c v`` so that ``E L_1 = 0`` as well.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate
from scipy.special import comb

from .errors import ValidationError

JUMP_KINDS = ("normal", "two_point", "constant")


@dataclass(frozen=True)
class JumpDist:
    """Jump-size law.

    ``kind`` is one of ``"normal"`` (``param`` is the variance),
    ``"two_point"`` (jumps ``+-param`` with probability 1/2 each) or
    ``"constant"`` (every jump equals ``param``).
    """
    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in JUMP_KINDS:
            raise ValidationError(f"jump kind must be one of {JUMP_KINDS}, got {self.kind!r}")
        if not np.isfinite(self.param):
            raise ValidationError("jump parameter must be finite")
        if self.kind == "normal" and not self.param > 0:
            raise ValidationError("normal jump variance must be > 0")
        if self.kind != "normal" and self.param == 0:
            raise ValidationError(f"{self.kind} jump size must be nonzero")

    @classmethod
    def normal(cls, variance):
        return cls("normal", float(variance))

    @classmethod
    def two_point(cls, v):
        return cls("two_point", float(v))

    @classmethod
    def constant(cls, v):
        return cls("constant", float(v))

    @property
    def mean(self):
        return self.param if self.kind == "constant" else 0.0

    def even_moment(self, k):
        """``E J^(2k)``, exact."""
        if k == 0:
            return 1.0
        if self.kind == "normal":
            # (2k-1)!! sigma^(2k)
            return float(np.prod(np.arange(2 * k - 1, 0, -2))) * self.param ** k
        return self.param ** (2 * k)

    def sample(self, rng, size):
        if self.kind == "normal":
            return rng.normal(0.0, math.sqrt(self.param), size)
        if self.kind == "two_point":
            return self.param * (2.0 * rng.integers(0, 2, size) - 1.0)
        return np.full(size, self.param)


@dataclass(frozen=True)
class LevyDriver:
    """Driving Lévy process: jump rate ``rate``, jump law ``jump`` and
    Brownian variance per unit time ``brownian_var``."""
    rate: float
    jump: JumpDist
    brownian_var: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.rate) and self.rate > 0):
            raise ValidationError("jump rate must be finite and > 0")
        if not (np.isfinite(self.brownian_var) and self.brownian_var >= 0):
            raise ValidationError("brownian_var must be finite and >= 0")

    @property
    def mu(self):
        """Second moment of the Lévy measure, ``c E J^2``."""
        return self.rate * self.jump.even_moment(1)

    @property
    def rho(self):
        """Fourth moment of the Lévy measure, ``c E J^4``."""
        return self.rate * self.jump.even_moment(2)

    @property
    def drift(self):
        """Drift compensating the jump mean so that ``E L_1 = 0``."""
        return -self.rate * self.jump.mean

    @property
    def second_moment(self):
        """``E L_1^2`` (equal to ``var L_1`` since the mean is zero)."""
        return self.brownian_var + self.mu


@dataclass(frozen=True)
class DriverMoments:
    mu: float
    rho: float
    EL1_sq: float
    EL1_sq_finite: bool = True
    EL1_4_finite: bool = True


def moments(d):
    """Lévy-measure moments ``mu``, ``rho`` and ``E L_1^2``.

    All supported jump laws have moments of every order, so the finiteness
    flags are always true; they are kept for callers that gate on them.
    """
    return DriverMoments(mu=d.mu, rho=d.rho, EL1_sq=d.second_moment)


def log_integral(d, kappa):
    """``c E log(1 + kappa J^2)``, the left side of the log-moment
    stationarity condition."""
    if kappa < 0:
        raise ValidationError("kappa must be >= 0")
    if kappa == 0:
        return 0.0
    j = d.jump
    if j.kind != "normal":
        return d.rate * math.log1p(kappa * j.param ** 2)
    s = kappa * j.param

    def f(x):
        return math.log1p(s * x * x) * math.exp(-0.5 * x * x)

    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=1e-11, epsrel=1e-12, limit=200)
    return d.rate * 2.0 * val / math.sqrt(2.0 * math.pi)


def power_integral(d, kappa, k):
    """``c E[(1 + kappa J^2)^k - 1]`` by binomial expansion in even moments."""
    if int(k) != k or k < 1:
        raise ValidationError("k must be a positive integer")
    if kappa < 0:
        raise ValidationError("kappa must be >= 0")
    k = int(k)
    total = sum(comb(k, i, exact=True) * kappa ** i * d.jump.even_moment(i)
                for i in range(1, k + 1))
    return d.rate * total


@dataclass
class JumpSample:
    times: np.ndarray
    sizes: np.ndarray

    @property
    def squared(self):
        return self.sizes ** 2

    def __len__(self):
        return len(self.times)


def sample_jumps(d, horizon, rng):
    """Jump times and sizes on ``(0, horizon]``.

    Inter-arrival times are i.i.d. Exponential(rate); the returned times
    are strictly increasing.
    """
    if not horizon > 0:
        raise ValidationError("horizon must be > 0")
    mean = d.rate * horizon
    chunk = int(mean + 6.0 * math.sqrt(mean) + 16)
    gaps = rng.exponential(1.0 / d.rate, chunk)
    times = np.cumsum(gaps)
    while times[-1] <= horizon:
        more = np.cumsum(rng.exponential(1.0 / d.rate, chunk)) + times[-1]
        times = np.concatenate((times, more))
    times = times[times <= horizon]
    sizes = d.jump.sample(rng, len(times))
    return JumpSample(times=times, sizes=sizes)
