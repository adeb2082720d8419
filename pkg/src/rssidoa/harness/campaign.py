"""Seeded Monte Carlo campaigns: many pulses, per-pulse estimates, clustering."""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..clustering import kmeans_doa, final_doa
from ..crlb import fisher_theta
from ..errors import (BadSpec, DomainError, DuplicateCollapse, NoPulsesCaptured,
                      SingularInformation)
from ..estimator import estimate_powers
from ..pattern import PowerPattern
from ..signal_model import SignalParams, average_power, simulate_block
from .synthetic import DEFAULT_KNOTS, SyntheticPatternSpec, synth_pattern

# stream tags keep the thinning, outlier and noise draws independent
_THIN, _OUTLIER, _PULSE = 1, 2, 3


def circular_error(a, b):
    """Absolute wrapped difference in degrees, ``min(|d|, 360 - |d|)``."""
    d = np.abs(np.mod(np.asarray(a, dtype=float) - b, 360.0))
    return np.minimum(d, 360.0 - d)


@dataclass(frozen=True)
class CampaignConfig:
    true_theta_deg: float
    snr_db: float = 20.0
    k_per_block: int = 64
    num_pulses: int = 120
    detection_rate: float = 1.0
    kmeans_k: int = 4
    seed: int = 0
    sigma2: float = 1.0
    pattern_source: object = field(default_factory=SyntheticPatternSpec)
    knot_angles_deg: tuple = DEFAULT_KNOTS
    kmeans_metric: str = "circular"
    outlier_fraction: float = 0.0
    shared_nuisance: bool = False
    label: str = ""

    def __post_init__(self):
        if self.num_pulses < 1:
            raise BadSpec(f"num_pulses must be >= 1, got {self.num_pulses}")
        if not 0.0 < self.detection_rate <= 1.0:
            raise BadSpec(f"detection_rate must be in (0, 1], got {self.detection_rate}")
        if self.k_per_block < 1:
            raise BadSpec(f"k_per_block must be >= 1, got {self.k_per_block}")
        if not 0.0 <= self.outlier_fraction < 1.0:
            raise BadSpec(f"outlier_fraction must be in [0, 1), got {self.outlier_fraction}")
        if self.kmeans_k < 1:
            raise BadSpec(f"kmeans_k must be >= 1, got {self.kmeans_k}")

    @property
    def effective_pulses(self):
        # tolerance guards products like 120 * 0.9 = 108.00000000000001
        return max(0, math.ceil(self.num_pulses * self.detection_rate - 1e-9))

    @property
    def params(self):
        return SignalParams.from_snr_db(self.true_theta_deg, self.snr_db, self.sigma2)

    def load_pattern(self):
        src = self.pattern_source
        if isinstance(src, PowerPattern):
            return src
        if isinstance(src, SyntheticPatternSpec):
            return synth_pattern(src, self.knot_angles_deg)
        from .io import read_pattern
        return read_pattern(src)

    def to_dict(self):
        doc = {f: getattr(self, f) for f in self.__dataclass_fields__}
        src = self.pattern_source
        if isinstance(src, SyntheticPatternSpec):
            doc["pattern_source"] = {"synthetic": src.to_dict()}
        elif isinstance(src, PowerPattern):
            doc["pattern_source"] = {"pattern": src.to_dict()}
        else:
            doc["pattern_source"] = {"file": str(src)}
        doc["knot_angles_deg"] = list(self.knot_angles_deg)
        return doc

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise BadSpec(f"unknown campaign keys: {sorted(unknown)}")
        src = doc.pop("pattern_source", None)
        if src is None:
            src = SyntheticPatternSpec()
        elif isinstance(src, str):
            pass
        elif "synthetic" in src:
            src = SyntheticPatternSpec.from_dict(src["synthetic"])
        elif "file" in src:
            src = src["file"]
        elif "pattern" in src:
            src = PowerPattern.from_dict(src["pattern"])
        else:
            raise BadSpec(f"cannot interpret pattern_source {src!r}")
        if "knot_angles_deg" in doc:
            doc["knot_angles_deg"] = tuple(float(a) for a in doc["knot_angles_deg"])
        return cls(pattern_source=src, **doc)


@dataclass(frozen=True, eq=False)
class CampaignReport:
    config: CampaignConfig
    pulse_indices: np.ndarray
    pulse_angles_deg: np.ndarray
    per_pulse_estimates: np.ndarray
    per_pulse_coarse: np.ndarray
    final_doa_deg: float
    final_doa_coarse_deg: float
    unclustered_doa_deg: float
    circular_mean_doa_deg: float
    final_error_deg: float
    final_error_coarse_deg: float
    unclustered_error_deg: float
    mean_abs_error_deg: float
    mean_abs_error_coarse_deg: float
    estimator_variance_deg2: float
    crlb_deg2: float
    cluster_summary: dict

    @property
    def effective_pulses(self):
        return len(self.pulse_indices)

    def to_dict(self):
        r2 = lambda v: round(float(v), 2)
        return {
            "config": self.config.to_dict(),
            "effective_pulses": self.effective_pulses,
            "pulse_indices": [int(i) for i in self.pulse_indices],
            "pulse_angles_deg": [r2(a) for a in self.pulse_angles_deg],
            "per_pulse_estimates": [r2(a) for a in self.per_pulse_estimates],
            "per_pulse_coarse": [r2(a) for a in self.per_pulse_coarse],
            "final_doa_deg": r2(self.final_doa_deg),
            "final_doa_coarse_deg": r2(self.final_doa_coarse_deg),
            "unclustered_doa_deg": r2(self.unclustered_doa_deg),
            "circular_mean_doa_deg": r2(self.circular_mean_doa_deg),
            "final_error_deg": r2(self.final_error_deg),
            "final_error_coarse_deg": r2(self.final_error_coarse_deg),
            "unclustered_error_deg": r2(self.unclustered_error_deg),
            "mean_abs_error_deg": r2(self.mean_abs_error_deg),
            "mean_abs_error_coarse_deg": r2(self.mean_abs_error_coarse_deg),
            "estimator_variance_deg2": round(float(self.estimator_variance_deg2), 4),
            "crlb_deg2": None if not np.isfinite(self.crlb_deg2)
            else round(float(self.crlb_deg2), 4),
            "cluster_summary": self.cluster_summary,
        }


def pulse_seed(seed, index):
    return int(np.random.SeedSequence([int(seed), _PULSE, int(index)]).generate_state(1)[0])


def simulate_campaign_powers(config, pattern):
    """Captured pulse indices, their source azimuths and ``(n, M)`` block powers."""
    n_eff = config.effective_pulses
    if n_eff < 1:
        raise NoPulsesCaptured("detection thinning removed every pulse")
    thin = np.random.default_rng([int(config.seed), _THIN])
    captured = np.sort(thin.choice(config.num_pulses, size=n_eff, replace=False))

    angles = np.full(n_eff, float(config.true_theta_deg) % 360.0)
    n_out = int(round(config.outlier_fraction * n_eff))
    if n_out:
        orng = np.random.default_rng([int(config.seed), _OUTLIER])
        which = orng.choice(n_eff, size=n_out, replace=False)
        angles[which] = orng.uniform(0.0, 360.0, size=n_out)

    base = config.params
    powers = np.empty((n_eff, pattern.num_sensors))
    for row, (idx, ang) in enumerate(zip(captured, angles)):
        params = replace(base, theta_deg=float(ang))
        block = simulate_block(pattern, params, config.k_per_block, pulse_seed(config.seed, idx))
        powers[row] = average_power(block).p_r
    return captured, angles, powers


def run_campaign(config, pattern=None):
    """Simulate, estimate, cluster and score one campaign; deterministic given the seed."""
    pattern = config.load_pattern() if pattern is None else pattern
    captured, angles, powers = simulate_campaign_powers(config, pattern)
    estimates = estimate_powers(powers, pattern, config.k_per_block, config.shared_nuisance)
    refined = np.array([e.theta_deg for e in estimates])
    coarse = np.array([e.coarse_theta_deg for e in estimates])
    truth = float(config.true_theta_deg) % 360.0

    k = min(config.kmeans_k, len(refined))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DuplicateCollapse)
        clusters = kmeans_doa(refined, k, config.seed, config.kmeans_metric)
        clusters_coarse = kmeans_doa(coarse, k, config.seed, config.kmeans_metric)
        overall = kmeans_doa(refined, 1, config.seed, "circular")
    final = final_doa(clusters)
    final_coarse = final_doa(clusters_coarse)
    # the no-clustering baseline: plain average of every preliminary estimate
    unclustered = float(np.mean(refined))

    resid = circular_error(refined, truth)
    try:
        crlb = fisher_theta(pattern, config.params, config.k_per_block).crlb
    except SingularInformation:
        crlb = float("inf")

    order = np.lexsort((clusters.centers, -clusters.sizes))
    summary = {
        "k": int(clusters.k),
        "metric": clusters.metric,
        "centers_deg": [round(float(clusters.centers[i]), 2) for i in order],
        "sizes": [int(clusters.sizes[i]) for i in order],
        "within_ss": round(float(clusters.within_ss), 4),
        "collapsed": bool(clusters.collapsed),
    }
    return CampaignReport(
        config=config,
        pulse_indices=captured,
        pulse_angles_deg=angles,
        per_pulse_estimates=refined,
        per_pulse_coarse=coarse,
        final_doa_deg=final,
        final_doa_coarse_deg=final_coarse,
        unclustered_doa_deg=unclustered,
        circular_mean_doa_deg=float(overall.centers[0]),
        final_error_deg=float(circular_error(final, truth)),
        final_error_coarse_deg=float(circular_error(final_coarse, truth)),
        unclustered_error_deg=float(circular_error(unclustered, truth)),
        mean_abs_error_deg=float(resid.mean()),
        mean_abs_error_coarse_deg=float(circular_error(coarse, truth).mean()),
        estimator_variance_deg2=float(np.mean(resid * resid)),
        crlb_deg2=float(crlb),
        cluster_summary=summary,
    )


@dataclass(frozen=True, eq=False)
class TableResult:
    rows: list
    text: str
    reports: list

    def to_dict(self):
        return {"rows": self.rows, "runs": [r.to_dict() for r in self.reports]}


def _repeat_seed(seed, r):
    return int(seed) + int(r)


def run_table(configs, repeats=1, threads=1):
    """Run every config ``repeats`` times (seeds ``seed, seed+1, ...``) and tabulate.

    Work is spread over ``threads`` workers; results are gathered in config
    and repeat order, so the thread count never changes the output.
    """
    configs = list(configs)
    if not configs:
        raise DomainError("run_table needs at least one campaign config")
    if repeats < 1:
        raise DomainError(f"repeats must be >= 1, got {repeats}")
    jobs = [replace(c, seed=_repeat_seed(c.seed, r)) for c in configs for r in range(repeats)]
    patterns = {id(c): c.load_pattern() for c in configs}
    job_patterns = [patterns[id(c)] for c in configs for _ in range(repeats)]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(run_campaign, jobs, job_patterns))
    else:
        reports = [run_campaign(j, p) for j, p in zip(jobs, job_patterns)]

    rows = []
    for i, c in enumerate(configs):
        batch = reports[i * repeats:(i + 1) * repeats]
        rows.append(_summarize(i + 1, c, batch, patterns[id(c)].num_sensors))
    return TableResult(rows, format_table(rows), reports)


def _circular_mean(angles):
    a = np.radians(angles)
    return float(np.degrees(np.arctan2(np.sin(a).mean(), np.cos(a).mean())) % 360.0)


def _summarize(no, config, batch, num_sensors):
    r2 = lambda v: round(float(v), 2)
    crlb = batch[0].crlb_deg2
    return {
        "no": no,
        "label": config.label,
        "azimuth_deg": r2(config.true_theta_deg),
        "num_sensors": int(num_sensors),
        "snr_db": r2(config.snr_db),
        "repeats": len(batch),
        "effective_pulses": batch[0].effective_pulses,
        "doa_deg": r2(_circular_mean([b.final_doa_deg for b in batch])),
        "error_deg": r2(np.mean([b.final_error_deg for b in batch])),
        "doa_coarse_deg": r2(_circular_mean([b.final_doa_coarse_deg for b in batch])),
        "error_coarse_deg": r2(np.mean([b.final_error_coarse_deg for b in batch])),
        "pulse_mae_deg": r2(np.mean([b.mean_abs_error_deg for b in batch])),
        "pulse_mae_coarse_deg": r2(np.mean([b.mean_abs_error_coarse_deg for b in batch])),
        "crlb_deg2": None if not np.isfinite(crlb) else round(float(crlb), 4),
    }


_COLUMNS = [
    ("no", "No.", "{}"),
    ("label", "Label", "{}"),
    ("azimuth_deg", "Azimuth/deg", "{:.2f}"),
    ("num_sensors", "M", "{}"),
    ("snr_db", "SNR/dB", "{:.2f}"),
    ("doa_coarse_deg", "DOA w/o interp", "{:.2f}"),
    ("error_coarse_deg", "Err w/o interp", "{:.2f}"),
    ("doa_deg", "DOA w/ interp", "{:.2f}"),
    ("error_deg", "Err w/ interp", "{:.2f}"),
    ("crlb_deg2", "CRLB/deg^2", "{:.4f}"),
]


def format_table(rows):
    """Aligned plain-text table, one line per campaign row."""
    cells = [[h for _, h, _ in _COLUMNS]]
    for row in rows:
        cells.append(["-" if row[key] is None else fmt.format(row[key])
                      for key, _, fmt in _COLUMNS])
    widths = [max(len(r[i]) for r in cells) for i in range(len(_COLUMNS))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def table1_configs(seed=0, **overrides):
    """Four-sensor array at 40, 80, 150 and 340 degrees."""
    base = dict(snr_db=20.0, k_per_block=64, num_pulses=120, detection_rate=0.9,
                kmeans_k=4, seed=seed)
    base.update(overrides)
    return [CampaignConfig(true_theta_deg=a, label="4 sensors", **base)
            for a in (40.0, 80.0, 150.0, 340.0)]


def table2_configs(seed=0, **overrides):
    """Four versus twelve evenly spaced sensors at 10, 150, 270 and 340 degrees."""
    base = dict(snr_db=20.0, k_per_block=64, num_pulses=120, detection_rate=0.9,
                kmeans_k=4, seed=seed)
    base.update(overrides)
    out = []
    for m in (4, 12):
        for a in (10.0, 150.0, 270.0, 340.0):
            out.append(CampaignConfig(true_theta_deg=a, label=f"{m} sensors",
                                      pattern_source=SyntheticPatternSpec(num_sensors=m),
                                      **base))
    return out


def table3_configs(seed=0, snr_db=20.0, **overrides):
    """Near versus doubled distance, modelled as a 6 dB SNR drop."""
    base = dict(k_per_block=64, num_pulses=120, detection_rate=0.9, kmeans_k=4, seed=seed)
    base.update(overrides)
    out = []
    for label, snr in (("6 m", snr_db), ("12 m", snr_db - 6.0)):
        for a in (10.0, 150.0, 270.0, 340.0):
            out.append(CampaignConfig(true_theta_deg=a, snr_db=snr, label=label, **base))
    return out


PRESETS = {"table1": table1_configs, "table2": table2_configs, "table3": table3_configs}


def variance_vs_crlb(pattern, angles_deg, snr_db=20.0, k=64, trials=500, seed=0, sigma2=1.0):
    """Single-pulse estimator spread against the bound at each angle.

    Returns columns ``angle_deg, crlb_deg2, variance_deg2, mse_deg2, ratio``
    where ``variance`` is the circular spread about the estimates' own mean
    and ``mse`` is taken about the true angle.
    """
    cols = {"angle_deg": [], "crlb_deg2": [], "variance_deg2": [], "mse_deg2": [],
            "ratio": []}
    for a in angles_deg:
        cfg = CampaignConfig(true_theta_deg=float(a) % 360.0, snr_db=snr_db, k_per_block=k,
                             num_pulses=trials, seed=seed, sigma2=sigma2,
                             pattern_source=pattern)
        _, _, powers = simulate_campaign_powers(cfg, pattern)
        est = np.array([e.theta_deg for e in estimate_powers(powers, pattern, k)])
        mse = float(np.mean(circular_error(est, cfg.true_theta_deg) ** 2))
        dev = np.mod(est - _circular_mean(est) + 180.0, 360.0) - 180.0
        var = float(np.mean(dev * dev) - np.mean(dev) ** 2)
        try:
            bound = fisher_theta(pattern, cfg.params, k).crlb
        except SingularInformation:
            bound = float("inf")
        cols["angle_deg"].append(float(a))
        cols["crlb_deg2"].append(bound)
        cols["variance_deg2"].append(var)
        cols["mse_deg2"].append(mse)
        cols["ratio"].append(var / bound)
    return cols
