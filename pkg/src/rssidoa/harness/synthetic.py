"""Closed-form cardioid-family array patterns for desk-scale experiments."""

from dataclasses import dataclass

import numpy as np

from ..errors import BadSpec
from ..pattern import PowerPattern

DEFAULT_KNOTS = tuple(float(a) for a in range(10, 360, 20))


@dataclass(frozen=True)
class SyntheticPatternSpec:
    """Gain ``((1 + cos(theta - phi_m)) / 2) ** exponent`` for each boresight ``phi_m``."""

    num_sensors: int = 4
    sensor_boresights_deg: tuple = None
    exponent: float = 1.0

    def __post_init__(self):
        if self.num_sensors < 2:
            raise BadSpec(f"need at least 2 sensors, got {self.num_sensors}")
        if not self.exponent > 0:
            raise BadSpec(f"exponent must be > 0, got {self.exponent}")
        if self.sensor_boresights_deg is None:
            step = 360.0 / self.num_sensors
            object.__setattr__(self, "sensor_boresights_deg",
                               tuple(step * m for m in range(self.num_sensors)))
        else:
            bs = tuple(float(b) for b in self.sensor_boresights_deg)
            if len(bs) != self.num_sensors:
                raise BadSpec(f"{len(bs)} boresights for {self.num_sensors} sensors")
            object.__setattr__(self, "sensor_boresights_deg", bs)

    def closed_form(self, angles_deg):
        """Un-normalized gains, shape ``angles.shape + (M,)``."""
        th = np.radians(np.asarray(angles_deg, dtype=float))[..., None]
        phi = np.radians(np.asarray(self.sensor_boresights_deg))
        base = np.clip((1.0 + np.cos(th - phi)) / 2.0, 0.0, 1.0)
        return base ** self.exponent

    def to_dict(self):
        return {"num_sensors": self.num_sensors,
                "sensor_boresights_deg": list(self.sensor_boresights_deg),
                "exponent": self.exponent}

    @classmethod
    def from_dict(cls, doc):
        bs = doc.get("sensor_boresights_deg")
        return cls(int(doc.get("num_sensors", 4)),
                   tuple(bs) if bs is not None else None,
                   float(doc.get("exponent", 1.0)))


def synth_pattern(spec, knot_angles=DEFAULT_KNOTS):
    """Sample the closed form at the knots, normalize by the global max, fit splines."""
    knots = np.asarray(knot_angles, dtype=float)
    if knots.size < 4:
        raise BadSpec(f"need at least 4 knots, got {knots.size}")
    raw = spec.closed_form(knots)
    peak = raw.max()
    if peak <= 0:
        raise BadSpec("pattern is identically zero at the knots")
    return PowerPattern(knots, raw / peak)


def normalized_closed_form(spec, knot_angles, angles_deg):
    """Closed form scaled exactly as :func:`synth_pattern` scales the knots."""
    peak = spec.closed_form(np.asarray(knot_angles, dtype=float)).max()
    return spec.closed_form(angles_deg) / peak
