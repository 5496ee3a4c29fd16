"""
Empirical estimators used to hold simulations against theory.
"""
from dataclasses import dataclass

import numpy as np
from scipy import fft

from .errors import ValidationError

BAND_Z = 1.96


@dataclass
class AcfEstimate:
    """Sample autocorrelations at lags ``0..L`` with the white-noise band.

    The autocovariances use the biased ``1/n`` denominator, which keeps the
    estimated sequence positive semi-definite.
    """
    lags: np.ndarray
    acf: np.ndarray
    acvf: np.ndarray
    n: int
    denominator: str = "n"

    @property
    def band(self):
        return BAND_Z / np.sqrt(self.n)


def sample_acvf(x, L):
    """Biased sample autocovariances at lags ``0..L`` via FFT."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if L < 0:
        raise ValidationError("max lag must be >= 0")
    if n <= 10 * L or n < 2:
        raise ValidationError(f"series of length {n} is too short for {L} lags (need n > 10 L)")
    xc = x - x.mean()
    nfft = fft.next_fast_len(2 * n - 1)
    f = fft.rfft(xc, nfft)
    return fft.irfft(f * np.conj(f), nfft)[:L + 1] / n


def sample_acf(x, L):
    acvf = sample_acvf(x, L)
    if not acvf[0] > 1e-300 * max(1.0, np.abs(np.asarray(x)).max() ** 2):
        raise ValidationError("constant series: autocorrelation is undefined")
    acf = np.clip(acvf / acvf[0], -1.0, 1.0)
    acf[0] = 1.0
    return AcfEstimate(lags=np.arange(L + 1), acf=acf, acvf=acvf, n=len(x))


def naive_acvf(x, L):
    """Double-loop reference for ``sample_acvf``."""
    x = [float(v) for v in x]
    n = len(x)
    mean = sum(x) / n
    out = []
    for h in range(L + 1):
        s = 0.0
        for t in range(n - h):
            s += (x[t] - mean) * (x[t + h] - mean)
        out.append(s / n)
    return np.array(out)


@dataclass
class AcfComparison:
    lags: np.ndarray
    empirical: np.ndarray
    theoretical: np.ndarray
    z: np.ndarray
    band: float
    within: np.ndarray

    @property
    def fraction_within(self):
        return float(np.mean(self.within)) if self.within.size else 1.0

    def passed(self, threshold=0.9):
        return self.fraction_within >= threshold

    def to_dict(self):
        return {"lags": self.lags.tolist(), "empirical": self.empirical.tolist(),
                "theoretical": self.theoretical.tolist(), "z": self.z.tolist(),
                "band": self.band, "fraction_within": self.fraction_within}


def compare_acvf(est, theoretical, lags=None, scale=None):
    """Per-lag z-scores of an empirical ACF against theory.

    ``theoretical`` is a callable on lags or an array aligned with
    ``lags`` (default ``1..L``).  The scale of each z-score is the
    white-noise band half-width divided by 1.96 unless ``scale`` is given.
    """
    lags = est.lags[1:] if lags is None else np.asarray(lags)
    emp = est.acf[lags]
    th = np.asarray(theoretical(lags) if callable(theoretical) else theoretical, dtype=float)
    if th.shape != emp.shape:
        raise ValidationError("theoretical values do not match the lag grid")
    s = est.band / BAND_Z if scale is None else scale
    z = (emp - th) / s
    return AcfComparison(lags=lags, empirical=emp, theoretical=th, z=z, band=est.band,
                         within=np.abs(z) <= BAND_Z)


def batch_means_se(x, n_batches=100):
    """Standard error of the mean of a dependent series by batch means."""
    x = np.asarray(x, dtype=float)
    b = len(x) // n_batches
    if b < 2:
        raise ValidationError("series too short for batch means")
    means = x[:b * n_batches].reshape(n_batches, b).mean(1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def mean_with_se(x, n_batches=100):
    return float(np.mean(x)), batch_means_se(x, n_batches)


def variance_with_se(x, n_batches=100):
    """Sample variance with a batch-means standard error.

    The batch statistic is each batch's mean square deviation about the
    overall mean, so batch results average to the overall variance.
    """
    x = np.asarray(x, dtype=float)
    c = x - x.mean()
    return float(np.mean(c ** 2)), batch_means_se(c ** 2, n_batches)


def envelope_slope(acf, lags):
    """Least-squares slope of ``log acf`` against lag over the given lags.

    Lags with non-positive ACF are dropped.
    """
    lags = np.asarray(lags)
    vals = np.asarray(acf)[lags]
    keep = vals > 0
    if keep.sum() < 2:
        raise ValidationError("not enough positive autocorrelations for an envelope fit")
    slope, intercept = np.polyfit(lags[keep], np.log(vals[keep]), 1)
    return float(slope), float(intercept)
