"""Statistics of received RSSI blocks.

A sensor ``m`` records ``r_m(k) = a_m(theta) s(k) + n_m(k)`` with
``a_m**2 = g_m(theta)`` and white Gaussian noise of variance ``sigma2``.
The block power ``K * P_{r,m}`` is a scaled noncentral chi-square variable;
for large ``K`` the mean power is close to Gaussian.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DimensionMismatch, DomainError, InvalidK


@dataclass(frozen=True)
class SignalParams:
    theta_deg: float
    ps: float
    sigma2: float

    def __post_init__(self):
        if not 0.0 <= self.theta_deg < 360.0:
            raise DomainError(f"theta_deg {self.theta_deg} outside [0, 360)")
        if not self.ps >= 0.0:
            raise DomainError(f"ps must be >= 0, got {self.ps}")
        if not self.sigma2 > 0.0:
            raise DomainError(f"sigma2 must be > 0, got {self.sigma2}")

    @property
    def snr(self):
        return self.ps / self.sigma2

    @classmethod
    def from_snr_db(cls, theta_deg, snr_db, sigma2=1.0):
        return cls(float(theta_deg) % 360.0, sigma2 * 10.0 ** (snr_db / 10.0), sigma2)


@dataclass(frozen=True, eq=False)
class SampleBlock:
    """``samples[m, k]`` for ``M`` sensors and ``K`` samples."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[1] < 1:
            raise InvalidK(f"samples must be M x K with K >= 1, got shape {s.shape}")
        if s.shape[0] < 2:
            raise DimensionMismatch(f"need at least 2 sensors, got {s.shape[0]}")
        object.__setattr__(self, "samples", s)

    @property
    def num_sensors(self):
        return self.samples.shape[0]

    @property
    def k_per_block(self):
        return self.samples.shape[1]


@dataclass(frozen=True, eq=False)
class PowerVector:
    p_r: np.ndarray
    k_per_block: int

    def __post_init__(self):
        p = np.asarray(self.p_r, dtype=float)
        if p.ndim != 1 or np.any(p < 0):
            raise DomainError("p_r must be a 1-D vector of non-negative powers")
        if self.k_per_block < 1:
            raise InvalidK(f"k_per_block must be >= 1, got {self.k_per_block}")
        object.__setattr__(self, "p_r", p)


def noise_rng(seed, sensor):
    # keyed per sensor so adding sensors never changes another sensor's draws
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(sensor)]))


def simulate_block(pattern, params, k, seed, waveform=None):
    """Draw one block of ``k`` samples per sensor.

    ``waveform`` is an optional deterministic length-``k`` shape; it is
    rescaled so its mean square equals ``params.ps``. The default is the
    constant ``sqrt(ps)``.
    """
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    if waveform is None:
        s = np.full(k, np.sqrt(params.ps))
    else:
        w = np.asarray(waveform, dtype=float)
        if w.shape != (k,):
            raise DimensionMismatch(f"waveform length {w.size} != k={k}")
        ms = np.mean(w * w)
        if ms <= 0:
            raise DomainError("waveform must have non-zero mean square")
        s = w * np.sqrt(params.ps / ms)

    m_count = pattern.num_sensors
    amp = np.sqrt(pattern.gains_at(params.theta_deg))
    noise_sd = np.sqrt(params.sigma2)
    samples = np.empty((m_count, k))
    for m in range(m_count):
        samples[m] = amp[m] * s + noise_sd * noise_rng(seed, m).standard_normal(k)
    return SampleBlock(samples)


def average_power(block):
    s = block.samples
    return PowerVector(np.mean(s * s, axis=1), block.k_per_block)


def noncentrality(pattern, params, k, sensor):
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    return k * pattern.gain_at(sensor, params.theta_deg) * params.ps


def _debye_log_i(v, z):
    """Uniform large-order expansion of log I_v(z), accurate for v >~ 20."""
    t = z / v
    root = np.sqrt(1.0 + t * t)
    p = 1.0 / root
    eta = root + np.log(t / (1.0 + root))
    p2 = p * p
    u1 = p * (3.0 - 5.0 * p2) / 24.0
    u2 = p2 * (81.0 - 462.0 * p2 + 385.0 * p2 * p2) / 1152.0
    u3 = p * p2 * (30375.0 - 369603.0 * p2 + 765765.0 * p2 * p2
                   - 425425.0 * p2 * p2 * p2) / 414720.0
    series = 1.0 + u1 / v + u2 / v**2 + u3 / v**3
    return v * eta - 0.5 * np.log(2.0 * np.pi * v) - 0.5 * np.log(root) + np.log(series)


def _log_bessel_i(order, z):
    """log I_order(z) for z > 0, stable for large z and large order."""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.log(special.ive(order, z)) + z
    # ive underflows once the order dwarfs z
    bad = ~np.isfinite(out)
    if np.any(bad):
        zb = z[bad]
        if order >= 20:
            out[bad] = _debye_log_i(order, zb)
        else:
            q = zb * zb / 4.0
            lead = order * np.log(zb / 2.0) - special.gammaln(order + 1.0)
            corr = np.log1p(q / (order + 1.0) + q * q / (2.0 * (order + 1.0) * (order + 2.0)))
            out[bad] = lead + corr
    return out


def chi2_pdf(x, k, lam, sigma2):
    """Density of ``S = sum of k squared N(mu_i, sigma2)`` with ``lam = sum mu_i**2``.

    Uses Bessel order ``k/2 - 1`` and is evaluated in the log domain.
    Accepts scalar or array ``x``.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise DomainError("chi2_pdf requires x >= 0")
    if not sigma2 > 0:
        raise DomainError(f"sigma2 must be > 0, got {sigma2}")
    if not lam >= 0:
        raise DomainError(f"lambda must be >= 0, got {lam}")
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")

    half_k = k / 2.0
    two_s2 = 2.0 * sigma2
    xs = np.atleast_1d(x_arr)
    logp = np.full(xs.shape, -np.inf)

    # central density (also the x -> 0 limit up to exp(-lam / 2 sigma2))
    zero = xs == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        log_central = ((half_k - 1.0) * np.log(xs) - xs / two_s2
                       - half_k * np.log(two_s2) - special.gammaln(half_k))
    if lam == 0:
        logp = log_central
    else:
        pos = ~zero
        xp = xs[pos]
        z = np.sqrt(lam * xp) / sigma2
        logp[pos] = (-np.log(two_s2) + (half_k - 1.0) / 2.0 * np.log(xp / lam)
                     - (lam + xp) / two_s2 + _log_bessel_i(half_k - 1.0, z))
        logp[zero] = log_central[zero] - lam / two_s2
    if k == 2:
        # x^0 term: log(0)*0 is nan, the density at 0 is finite
        logp[zero] = -np.log(two_s2) - lam / two_s2
    out = np.exp(logp)
    return out[0] if x_arr.ndim == 0 else out.reshape(x_arr.shape)


def moments(gain, ps, sigma2, k):
    """Gaussian-approximation mean and variance of ``P_{r,m}`` (vectorized)."""
    gp = gain * ps
    mu = sigma2 + gp
    var = (2.0 / k) * (sigma2 * sigma2 + 2.0 * sigma2 * gp)
    return mu, var


def gaussian_moments(pattern, params, k, sensor):
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    g = pattern.gain_at(sensor, params.theta_deg)
    mu, var = moments(g, params.ps, params.sigma2, k)
    return float(mu), float(var)


def gaussian_pdf(p, mu, var):
    if not var > 0:
        raise DomainError(f"variance must be > 0, got {var}")
    return np.exp(-(p - mu) ** 2 / (2.0 * var)) / np.sqrt(2.0 * np.pi * var)
