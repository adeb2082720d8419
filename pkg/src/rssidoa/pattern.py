"""Calibrated array power pattern: averaging, normalization, spline queries."""

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import (AllZero, DomainError, EmptyCalibration, MissingCell,
                     SensorOutOfRange, TooFewPoints)
from .spline import PeriodicCubicSpline

PERIOD = 360.0


@dataclass(frozen=True)
class CalibrationRecord:
    angle_deg: float
    sensor_index: int
    trial_index: int
    rssi: float

    def __post_init__(self):
        if not 0.0 <= self.angle_deg < 360.0:
            raise DomainError(f"angle_deg {self.angle_deg} outside [0, 360)")
        if self.sensor_index < 0:
            raise DomainError(f"negative sensor_index {self.sensor_index}")
        if self.trial_index < 0:
            raise DomainError(f"negative trial_index {self.trial_index}")
        if not self.rssi >= 0.0:
            raise DomainError(f"rssi must be >= 0, got {self.rssi}")


@dataclass(frozen=True, eq=False)
class PowerPattern:
    """Normalized per-sensor gain ``g_m(theta)`` sampled at calibration knots.

    ``gains`` has shape ``(P, M)``: one row per knot angle, one column per
    sensor. A periodic cubic spline per sensor extends the table to every
    azimuth.
    """

    knot_angles_deg: np.ndarray
    gains: np.ndarray
    spline: PeriodicCubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        knots = np.array(self.knot_angles_deg, dtype=float)
        gains = np.array(self.gains, dtype=float)
        if gains.ndim != 2 or gains.shape[0] != knots.size:
            raise DomainError(f"gains shape {gains.shape} does not match {knots.size} knots")
        if knots.size < 4:
            raise TooFewPoints(f"need at least 4 calibration angles, got {knots.size}")
        if np.any(np.diff(knots) <= 0) or knots[0] < 0 or knots[-1] >= PERIOD:
            raise DomainError("knot angles must be strictly increasing in [0, 360)")
        if np.any(gains < 0) or np.any(gains > 1) or gains.max() != 1.0:
            raise DomainError("gains must lie in [0, 1] with maximum exactly 1")
        knots.setflags(write=False)
        gains.setflags(write=False)
        object.__setattr__(self, "knot_angles_deg", knots)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "spline", PeriodicCubicSpline(knots, gains, PERIOD))

    @property
    def num_sensors(self):
        return self.gains.shape[1]

    @property
    def spline_coefficients(self):
        """``(P, 4, M)`` array of per-interval ``(a, b, c, d)``."""
        return self.spline.coefficients

    def gain_at(self, sensor, angle_deg):
        return gain_at(self, sensor, angle_deg)

    def gain_derivative(self, sensor, angle_deg):
        return gain_derivative(self, sensor, angle_deg)

    def gains_at(self, angles_deg):
        """Clamped gains of every sensor, shape ``angles.shape + (M,)``."""
        return np.maximum(self.spline(angles_deg), 0.0)

    def derivatives_at(self, angles_deg):
        return self.spline(angles_deg, nu=1)

    def to_dict(self):
        return {
            "knot_angles_deg": [float(a) for a in self.knot_angles_deg],
            "num_sensors": int(self.num_sensors),
            "gains": [[float(g) for g in row] for row in self.gains],
        }

    @classmethod
    def from_dict(cls, doc):
        knots = np.asarray(doc["knot_angles_deg"], dtype=float)
        m = int(doc["num_sensors"])
        gains = np.asarray(doc["gains"], dtype=float).reshape(knots.size, m)
        return cls(knots, gains)


def _check_sensor(pattern, sensor):
    if not 0 <= sensor < pattern.num_sensors:
        raise SensorOutOfRange(f"sensor {sensor} not in [0, {pattern.num_sensors})")


def gain_at(pattern, sensor, angle_deg):
    """Spline gain of ``sensor`` at ``angle_deg`` (wrapped mod 360, clamped at 0)."""
    _check_sensor(pattern, sensor)
    j, t = pattern.spline.locate(angle_deg)
    return np.maximum(pattern.spline.piece(j, t)[..., sensor], 0.0)[()]


def gain_derivative(pattern, sensor, angle_deg):
    """d gain / d angle in 1/degree, from the unclamped spline."""
    _check_sensor(pattern, sensor)
    j, t = pattern.spline.locate(angle_deg)
    return pattern.spline.piece(j, t, nu=1)[..., sensor][()]


def build_pattern(records):
    """Average calibration trials per (angle, sensor) and normalize by the global max."""
    records = list(records)
    if not records:
        raise EmptyCalibration("no calibration records")

    cells = defaultdict(list)
    for rec in records:
        cells[(float(rec.angle_deg), int(rec.sensor_index))].append(float(rec.rssi))
    angles = sorted({a for a, _ in cells})
    num_sensors = max(s for _, s in cells) + 1
    if len(angles) < 4:
        raise TooFewPoints(f"need at least 4 distinct calibration angles, got {len(angles)}")

    means = np.empty((len(angles), num_sensors))
    for i, a in enumerate(angles):
        for s in range(num_sensors):
            trials = cells.get((a, s))
            if not trials:
                raise MissingCell(a, s)
            # fsum is exactly rounded, so trial order cannot change the mean
            means[i, s] = math.fsum(trials) / len(trials)

    peak = means.max()
    if peak <= 0.0:
        raise AllZero("all averaged calibration powers are zero")
    return PowerPattern(np.array(angles), means / peak)
