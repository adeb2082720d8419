"""Fisher information and Cramer-Rao bound for the azimuth (degrees)."""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, InvalidK, SingularInformation
from .signal_model import moments

SINGULAR_TOL = 1e-30


@dataclass(frozen=True, eq=False)
class CrlbReport:
    theta_deg: float
    fisher_11: float
    crlb: float  # deg^2; inf when singular
    per_sensor_terms: np.ndarray
    singular: bool = False


def fisher_terms(pattern, theta_deg, ps, sigma2, k):
    """Per-sensor Fisher contributions for theta, vectorized over ``theta_deg``.

    ``(1 / (2 var_m**2)) (d var_m/d theta)**2 + (1 / var_m) (d mu_m/d theta)**2``
    under the Gaussian power model.
    """
    g = pattern.gains_at(theta_deg)
    dg = pattern.derivatives_at(theta_deg)
    _, var = moments(g, ps, sigma2, k)
    dmu = ps * dg
    dvar = (4.0 * sigma2 * ps / k) * dg
    return dvar * dvar / (2.0 * var * var) + dmu * dmu / var


def fisher_theta(pattern, params, k):
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    if not params.sigma2 > 0:
        raise DomainError("sigma2 must be > 0")
    terms = fisher_terms(pattern, params.theta_deg, params.ps, params.sigma2, k)
    total = float(sum(terms))
    if total <= SINGULAR_TOL:
        raise SingularInformation(
            f"Fisher information {total:.3g} at {params.theta_deg} deg; bound undefined")
    return CrlbReport(float(params.theta_deg), total, 1.0 / total, terms)


def crlb_sweep(pattern, params_template, k, angles):
    """Bound at each angle; singular angles are reported with ``crlb = inf``."""
    angles = list(angles)
    if not angles:
        raise DomainError("angle list is empty")
    out = []
    for a in angles:
        params = replace(params_template, theta_deg=float(a) % 360.0)
        try:
            out.append(fisher_theta(pattern, params, k))
        except SingularInformation:
            terms = fisher_terms(pattern, params.theta_deg, params.ps, params.sigma2, k)
            out.append(CrlbReport(params.theta_deg, float(sum(terms)), np.inf, terms,
                                  singular=True))
    return out
