"""K-means aggregation of per-pulse azimuth estimates.

Two metrics are supported. ``"euclidean"`` treats angles as plain numbers,
exactly the squared-distance objective written on raw degrees. ``"circular"``
uses the wrapped arc distance ``min(|d|, 360 - |d|)`` and updates each
center to the intrinsic (Frechet) mean, the point minimizing the summed
squared arc distance, so every Lloyd step still lowers the objective.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, DuplicateCollapse, TooFewPoints

MAX_ITER = 100
METRICS = ("euclidean", "circular")


@dataclass(frozen=True, eq=False)
class ClusterResult:
    assignments: np.ndarray
    centers: np.ndarray
    sizes: np.ndarray
    within_ss: float
    metric: str = "euclidean"
    history: tuple = field(default=(), repr=False)
    collapsed: bool = False
    iterations: int = 0

    @property
    def k(self):
        return len(self.centers)


def _diff(x, c, metric):
    d = np.asarray(x)[:, None] - np.asarray(c)[None, :]
    if metric == "circular":
        d = (d + 180.0) % 360.0 - 180.0
    return d


def _sqdist(x, c, metric):
    d = _diff(x, c, metric)
    return d * d


def intrinsic_mean(angles):
    """Angle minimizing the summed squared arc distance to ``angles`` (degrees)."""
    a = np.sort(np.mod(np.asarray(angles, dtype=float), 360.0))
    n = a.size
    # the minimizer is the plain mean of some rotation-unwrapped copy of the data
    best_val, best = None, 0.0
    for cut in range(n):
        unwrapped = np.concatenate([a[cut:], a[:cut] + 360.0])
        m = unwrapped.mean() % 360.0
        d = (a - m + 180.0) % 360.0 - 180.0
        val = float(np.dot(d, d))
        if best_val is None or val < best_val - 1e-12 * max(1.0, best_val):
            best_val, best = val, m
    return best


def _update(x, labels, k, metric):
    centers = np.empty(k)
    for i in range(k):
        pts = x[labels == i]
        centers[i] = pts.mean() if metric == "euclidean" else intrinsic_mean(pts)
    return centers


def _init_centers(x, k, metric, rng):
    """Seeded greedy farthest-point choice among distinct values."""
    distinct = np.unique(x)
    chosen = [distinct[rng.integers(distinct.size)]]
    while len(chosen) < k:
        d = _sqdist(distinct, np.array(chosen), metric).min(axis=1)
        chosen.append(distinct[int(np.argmax(d))])  # first max: smallest value on ties
    return np.array(chosen)


def _objective(x, labels, centers, metric):
    d = _diff(x, centers, metric)[np.arange(x.size), labels]
    return float(np.dot(d, d))


def kmeans_doa(estimates, k=4, seed=0, metric="euclidean"):
    """Lloyd iteration on angle estimates in degrees.

    Stops when no assignment changes or after 100 iterations. ``history``
    holds the objective after every assignment and every center update; it
    never increases. If fewer than ``k`` distinct values exist, a
    :class:`DuplicateCollapse` warning is issued and fewer clusters are
    returned.
    """
    if metric not in METRICS:
        raise DomainError(f"unknown metric {metric!r}")
    x = np.asarray(estimates, dtype=float)
    if metric == "circular":
        x = np.mod(x, 360.0)
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if x.size < k:
        raise TooFewPoints(f"{x.size} estimates for k={k} clusters")

    collapsed = False
    n_distinct = np.unique(x).size
    if n_distinct < k:
        warnings.warn(f"only {n_distinct} distinct estimates; using {n_distinct} clusters",
                      DuplicateCollapse, stacklevel=2)
        k, collapsed = n_distinct, True

    rng = np.random.default_rng(seed)
    centers = _init_centers(x, k, metric, rng)
    labels = None
    history = []
    it = 0
    for it in range(1, MAX_ITER + 1):
        new = np.argmin(_sqdist(x, centers, metric), axis=1)
        # re-seed empty clusters at the point worst served by its center
        for _ in range(k):
            empty = np.setdiff1d(np.arange(k), new)
            if empty.size == 0:
                break
            d = _sqdist(x, centers, metric)[np.arange(x.size), new]
            centers[empty[0]] = x[int(np.argmax(d))]
            new = np.argmin(_sqdist(x, centers, metric), axis=1)
        history.append(_objective(x, new, centers, metric))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centers = _update(x, labels, k, metric)
        history.append(_objective(x, labels, centers, metric))

    sizes = np.bincount(labels, minlength=k)
    return ClusterResult(labels, centers, sizes, _objective(x, labels, centers, metric),
                         metric, tuple(history), collapsed, it)


def final_doa(result):
    """Center of the largest cluster; equal sizes go to the smallest center angle."""
    if result.k < 1:
        raise DomainError("cluster result has no clusters")
    sizes = np.asarray(result.sizes)
    top = np.nonzero(sizes == sizes.max())[0]
    return float(min(result.centers[top]))
