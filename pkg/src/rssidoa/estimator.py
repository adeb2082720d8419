"""Maximum-likelihood azimuth estimation from per-sensor block powers.

At each candidate azimuth the signal power and noise variance are profiled
out of the Gaussian negative log-likelihood. The resulting objective curve
is interpolated with a periodic cubic spline and its lowest point is the
refined azimuth.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, DimensionMismatch, DomainError, TooFewPoints
from .signal_model import PowerVector, average_power, moments
from .spline import PeriodicCubicSpline

GRID_SIZE = 40
GRID_DECADES = 6.0
COORD_ITERATIONS = 60
GOLDEN_TOL = 1e-10
# search box for the normalized nuisance parameters, natural-log units
LOG_BOUND = 40.0 * np.log(10.0)
_W_FLOOR = 1e-8
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class ObjectiveCurve:
    angles_deg: np.ndarray
    values: np.ndarray
    nuisance: np.ndarray  # (P, 2): ps_hat, sigma2_hat per angle

    def __post_init__(self):
        if np.any(np.diff(self.angles_deg) <= 0):
            raise DomainError("curve angles must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("curve values must be finite")

    @property
    def argmin(self):
        # np.argmin returns the first hit, i.e. the smallest angle on ties
        return int(np.argmin(self.values))


@dataclass(frozen=True)
class DoaEstimate:
    theta_deg: float
    ps_hat: float
    sigma2_hat: float
    objective: float
    coarse_theta_deg: float
    coarse_objective: float
    degenerate: bool = False


def _nll(p, g, ps, s2, k):
    """Negative log-likelihood summed over the trailing sensor axis.

    ``p`` and ``g`` have shape ``(..., M)``; ``ps`` and ``s2`` broadcast
    against ``(...)``. Sensors are summed in a fixed order so batch shape
    never changes the result.
    """
    ps = np.asarray(ps)[..., None]
    s2 = np.asarray(s2)[..., None]
    mu, var = moments(g, ps, s2, k)
    r = p - mu
    terms = 0.5 * (_LOG_2PI + np.log(var)) + r * r / (2.0 * var)
    total = terms[..., 0]
    for m in range(1, terms.shape[-1]):
        total = total + terms[..., m]
    return total


def neg_log_likelihood(p_r, pattern, params, k):
    """Negated Gaussian log-likelihood of a power vector under ``params``."""
    p = np.asarray(p_r.p_r if isinstance(p_r, PowerVector) else p_r, dtype=float)
    if p.shape != (pattern.num_sensors,):
        raise DimensionMismatch(f"{p.size} powers for {pattern.num_sensors} sensors")
    if isinstance(p_r, PowerVector) and p_r.k_per_block != k:
        raise DimensionMismatch(f"k={k} but power vector built from K={p_r.k_per_block}")
    if not params.sigma2 > 0:
        raise DomainError("sigma2 must be > 0")
    g = pattern.gains_at(params.theta_deg)
    return float(_nll(p, g, params.ps, params.sigma2, k))


def _golden(f, lo, hi, steps):
    """Vectorized golden-section minimization of ``f`` on per-row brackets."""
    a, b = lo.copy(), hi.copy()
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(steps):
        left = fc < fd
        a = np.where(left, a, c)
        b = np.where(left, d, b)
        # the surviving interior point keeps its value; one new probe per row
        keep, fkeep = np.where(left, c, d), np.where(left, fc, fd)
        probe = np.where(left, b - _INVPHI * (b - a), a + _INVPHI * (b - a))
        fprobe = f(probe)
        c, fc = np.where(left, probe, keep), np.where(left, fprobe, fkeep)
        d, fd = np.where(left, keep, probe), np.where(left, fkeep, fprobe)
    first = fc <= fd
    return np.where(first, c, d), np.where(first, fc, fd)


def _golden_steps(width):
    # enough shrink steps for the widest bracket in the batch to reach GOLDEN_TOL
    return max(1, int(np.ceil(np.log(GOLDEN_TOL / (2.0 * width.max())) / np.log(_INVPHI))))


def profile_batch(p, g, k):
    """Profile ``(ps, sigma2)`` out of the objective for many rows at once.

    ``p`` and ``g`` have shape ``(B, M)``. Returns ``(value, ps_hat,
    sigma2_hat)`` arrays of length ``B``.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    g = np.atleast_2d(np.asarray(g, dtype=float))
    if np.any(p.max(axis=1) <= 0):
        raise DegenerateInput("power vector is all zeros")
    m_count = p.shape[1]

    scale = np.median(p, axis=1)
    scale = np.where(scale > 0, scale, p.max(axis=1))
    pn = p / scale[:, None]

    # stage 1: log grid over both nuisance parameters
    log_u = np.linspace(-GRID_DECADES, GRID_DECADES, GRID_SIZE) * np.log(10.0)
    u = np.exp(log_u)
    grid = _nll(pn[:, None, None, :], g[:, None, None, :],
                u[None, :, None], u[None, None, :], k)
    flat = grid.reshape(len(p), -1).argmin(axis=1)
    ix, iy = np.unravel_index(flat, (GRID_SIZE, GRID_SIZE))
    x, y = log_u[ix], log_u[iy]
    best = grid.reshape(len(p), -1)[np.arange(len(p)), flat]

    # method-of-moments start competes with the grid
    s2_0 = np.maximum(pn.min(axis=1), 1e-6)
    ps_0 = np.maximum(pn.max(axis=1) - s2_0, 1e-6)
    mom = _nll(pn, g, ps_0, s2_0, k)
    use = mom < best
    x = np.where(use, np.log(ps_0), x)
    y = np.where(use, np.log(s2_0), y)
    best = np.where(use, mom, best)

    # stage 2: coordinate-wise golden section in log space
    step = log_u[1] - log_u[0]
    wx = np.full(len(p), step)
    wy = np.full(len(p), step)
    for _ in range(COORD_ITERATIONS):
        act = np.nonzero((wx > _W_FLOOR) | (wy > _W_FLOOR))[0]
        if act.size == 0:
            break
        pa, ga, xa, ya = pn[act], g[act], x[act], y[act]
        nx, fx = _golden(lambda t: _nll(pa, ga, np.exp(t), np.exp(ya), k),
                         np.maximum(xa - wx[act], -LOG_BOUND),
                         np.minimum(xa + wx[act], LOG_BOUND), _golden_steps(wx[act]))
        better = fx < best[act]
        wx[act] = np.clip(4.0 * np.abs(np.where(better, nx - xa, 0.0)), _W_FLOOR, step)
        xa = np.where(better, nx, xa)
        x[act] = xa
        best[act] = np.where(better, fx, best[act])

        ny, fy = _golden(lambda t: _nll(pa, ga, np.exp(xa), np.exp(t), k),
                         np.maximum(ya - wy[act], -LOG_BOUND),
                         np.minimum(ya + wy[act], LOG_BOUND), _golden_steps(wy[act]))
        better = fy < best[act]
        wy[act] = np.clip(4.0 * np.abs(np.where(better, ny - ya, 0.0)), _W_FLOOR, step)
        y[act] = np.where(better, ny, ya)
        best[act] = np.where(better, fy, best[act])

    value = best + m_count * np.log(scale)
    return value, np.exp(x) * scale, np.exp(y) * scale


def profile_objective(p_r, pattern, k, theta_deg):
    """Minimized objective at a fixed azimuth: ``(value, ps_hat, sigma2_hat)``."""
    p = _powers(p_r, pattern)
    g = pattern.gains_at(theta_deg)
    v, ps, s2 = profile_batch(p[None, :], g[None, :], k)
    return float(v[0]), float(ps[0]), float(s2[0])


def _powers(p_r, pattern):
    p = np.asarray(p_r.p_r if isinstance(p_r, PowerVector) else p_r, dtype=float)
    if p.shape[-1] != pattern.num_sensors:
        raise DimensionMismatch(f"{p.shape[-1]} powers for {pattern.num_sensors} sensors")
    return p


def coarse_curves(powers, pattern, k, angles_deg=None, shared_nuisance=False):
    """Objective curves for a stack of power vectors, shape ``(N, M)``."""
    p = np.atleast_2d(_powers(powers, pattern))
    angles = pattern.knot_angles_deg if angles_deg is None else np.asarray(angles_deg, float)
    n, n_ang = len(p), len(angles)
    g = pattern.gains_at(angles)
    pb = np.repeat(p, n_ang, axis=0)
    gb = np.tile(g, (n, 1))
    value, ps, s2 = (v.reshape(n, n_ang) for v in profile_batch(pb, gb, k))
    if shared_nuisance:
        i = value.argmin(axis=1)
        ps = np.repeat(ps[np.arange(n), i][:, None], n_ang, axis=1)
        s2 = np.repeat(s2[np.arange(n), i][:, None], n_ang, axis=1)
        value = _nll(p[:, None, :], g[None, :, :], ps, s2, k)
    return [ObjectiveCurve(angles, value[i], np.stack([ps[i], s2[i]], axis=1))
            for i in range(n)]


def estimate_coarse(p_r, pattern, k, angles_deg=None, shared_nuisance=False):
    """Profiled objective at every candidate azimuth (default: the knots)."""
    return coarse_curves(p_r, pattern, k, angles_deg, shared_nuisance)[0]


def refine_by_spline(curve):
    """Lowest point of the periodic spline through the objective curve.

    The spline is scanned on a 1 degree grid (plus the curve's own angles)
    and the best point is polished by exact minimization of the cubic pieces
    covering the neighbouring 1 degree cells. A flat curve is flagged
    degenerate and resolves to the smallest curve angle.
    """
    angles, values = curve.angles_deg, curve.values
    if len(angles) < 4:
        raise TooFewPoints(f"refinement needs at least 4 curve points, got {len(angles)}")
    i0 = curve.argmin
    ps_hat, s2_hat = curve.nuisance[i0]
    coarse_theta, coarse_val = float(angles[i0]), float(values[i0])

    spread = values.max() - values.min()
    if spread <= 1e-12 * max(1.0, abs(coarse_val)):
        return DoaEstimate(coarse_theta, float(ps_hat), float(s2_hat), coarse_val,
                           coarse_theta, coarse_val, degenerate=True)

    spline = PeriodicCubicSpline(angles, values)
    cand = np.union1d(np.arange(360.0), angles)
    vals = spline(cand)
    j = int(np.argmin(vals))
    theta, best = float(cand[j]), float(vals[j])

    lo, hi = theta - 1.0, theta + 1.0
    x, h = spline.x, spline.h
    for shift in (-360.0, 0.0, 360.0):
        start = np.maximum(lo, x + shift)
        end = np.minimum(hi, x + h + shift)
        for piece in np.nonzero(start <= end)[0]:
            base = x[piece] + shift
            t, v = spline.piece_minimum(piece, start[piece] - base, end[piece] - base)
            if v < best:
                best, theta = float(v), float(base + t)
    theta = theta % 360.0
    if theta >= 360.0:
        theta = 0.0
    return DoaEstimate(theta, float(ps_hat), float(s2_hat), best, coarse_theta, coarse_val)


def estimate_powers(powers, pattern, k, shared_nuisance=False):
    """Refined estimates for a stack of power vectors, shape ``(N, M)``."""
    return [refine_by_spline(c)
            for c in coarse_curves(powers, pattern, k, shared_nuisance=shared_nuisance)]


def estimate(block, pattern, shared_nuisance=False):
    """Preliminary azimuth of one pulse: block power, coarse curve, spline refinement."""
    if block.num_sensors != pattern.num_sensors:
        raise DimensionMismatch(
            f"block has {block.num_sensors} sensors, pattern has {pattern.num_sensors}")
    pv = average_power(block)
    return estimate_powers(pv.p_r[None, :], pattern, pv.k_per_block, shared_nuisance)[0]
