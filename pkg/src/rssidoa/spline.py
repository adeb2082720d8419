"""Periodic cubic spline on a circle of fixed period.

Each interval ``j`` carries the local cubic

    s(x) = a_j t**3 + b_j t**2 + c_j t + d_j,   t = x - x_j,

and the last interval wraps from the final knot back to ``x_0 + period``.
Several curves sharing the same knots are fitted at once by passing ``y``
with shape ``(n, ...)``.
"""

import numpy as np

from .errors import TooFewPoints, DomainError


class PeriodicCubicSpline:
    """C2 periodic interpolant through ``(x, y)``.

    ``x`` must be strictly increasing and span less than one period.
    """

    def __init__(self, x, y, period=360.0):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        n = x.size
        if x.ndim != 1 or n < 4:
            raise TooFewPoints(f"periodic spline needs at least 4 knots, got {n}")
        if y.shape[0] != n:
            raise DomainError(f"y has {y.shape[0]} rows for {n} knots")
        if np.any(np.diff(x) <= 0) or x[-1] - x[0] >= period:
            raise DomainError("knots must be strictly increasing within one period")

        self.x = x
        self.period = float(period)
        h = np.diff(np.append(x, x[0] + period))
        self.h = h

        y_next = np.roll(y, -1, axis=0)
        slope = (y_next - y) / _col(h, y)
        rhs = 6.0 * (slope - np.roll(slope, 1, axis=0))

        A = np.zeros((n, n))
        for j in range(n):
            A[j, (j - 1) % n] += h[j - 1]
            A[j, j] += 2.0 * (h[j - 1] + h[j])
            A[j, (j + 1) % n] += h[j]
        m2 = np.linalg.solve(A, rhs.reshape(n, -1)).reshape(y.shape)
        m2_next = np.roll(m2, -1, axis=0)

        hc = _col(h, y)
        self.a = (m2_next - m2) / (6.0 * hc)
        self.b = m2 / 2.0
        self.c = slope - hc * (2.0 * m2 + m2_next) / 6.0
        self.d = y.copy()

    @property
    def coefficients(self):
        """Array of shape ``(n, 4, ...)`` holding ``(a, b, c, d)`` per interval."""
        return np.stack([self.a, self.b, self.c, self.d], axis=1)

    def locate(self, x):
        """Interval index and local offset for each (wrapped) ``x``."""
        x = np.asarray(x, dtype=float)
        u = self.x[0] + np.mod(x - self.x[0], self.period)
        # mod can round up to exactly one period
        u = np.where(u >= self.x[0] + self.period, self.x[0], u)
        j = np.clip(np.searchsorted(self.x, u, side="right") - 1, 0, self.x.size - 1)
        return j, u - self.x[j]

    def __call__(self, x, nu=0):
        j, t = self.locate(x)
        t = _col(t, self.a[0:1]) if self.a.ndim > 1 else t
        a, b, c, d = self.a[j], self.b[j], self.c[j], self.d[j]
        if nu == 0:
            return ((a * t + b) * t + c) * t + d
        if nu == 1:
            return (3.0 * a * t + 2.0 * b) * t + c
        if nu == 2:
            return 6.0 * a * t + 2.0 * b
        raise ValueError("nu must be 0, 1 or 2")

    def piece(self, j, t, nu=0):
        """Evaluate interval ``j``'s cubic at local offset ``t`` (no wrapping)."""
        a, b, c, d = self.a[j], self.b[j], self.c[j], self.d[j]
        if nu == 0:
            return ((a * t + b) * t + c) * t + d
        return (3.0 * a * t + 2.0 * b) * t + c

    def piece_minimum(self, j, lo, hi, column=None):
        """Exact minimum of interval ``j``'s cubic over local offsets ``[lo, hi]``.

        Returns ``(t_min, value)``.
        """
        a, b, c, d = (v[j] if column is None else v[j, column]
                      for v in (self.a, self.b, self.c, self.d))
        cand = [lo, hi]
        # roots of 3a t^2 + 2b t + c
        qa, qb, qc = 3.0 * a, 2.0 * b, c
        if abs(qa) > 1e-300:
            disc = qb * qb - 4.0 * qa * qc
            if disc >= 0.0:
                sq = np.sqrt(disc)
                # numerically stable quadratic roots
                q = -0.5 * (qb + np.copysign(sq, qb))
                roots = [q / qa]
                if q != 0.0:
                    roots.append(qc / q)
                cand.extend(roots)
        elif abs(qb) > 1e-300:
            cand.append(-qc / qb)
        cand = [t for t in cand if lo <= t <= hi]
        vals = [((a * t + b) * t + c) * t + d for t in cand]
        k = int(np.argmin(vals))
        return cand[k], vals[k]


def _col(v, like):
    """Reshape a length-n vector to broadcast against ``like``'s trailing axes."""
    like = np.asarray(like)
    return np.asarray(v).reshape(np.shape(v) + (1,) * (like.ndim - 1))
