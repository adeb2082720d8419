"""Command-line entry point: ``rssidoa <subcommand>``."""

import argparse
import sys
from dataclasses import replace

from ..crlb import crlb_sweep
from ..errors import BadSpec, DoaError
from ..estimator import estimate
from ..pattern import build_pattern
from ..signal_model import SignalParams, simulate_block
from . import io
from .campaign import (PRESETS, CampaignConfig, run_campaign, run_table,
                       variance_vs_crlb)
from .synthetic import DEFAULT_KNOTS, SyntheticPatternSpec, synth_pattern


def _floats(text):
    return [float(t) for t in text.replace(",", " ").split()]


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_pattern(args):
    if args.pattern:
        return io.read_pattern(args.pattern)
    return synth_pattern(SyntheticPatternSpec(), DEFAULT_KNOTS)


def cmd_calibrate(args):
    pattern = build_pattern(io.read_calibration_csv(args.csv))
    _emit(io.dumps(pattern.to_dict()), args.output)


def cmd_synth_pattern(args):
    spec = SyntheticPatternSpec(args.sensors,
                                tuple(_floats(args.boresights)) if args.boresights else None,
                                args.exponent)
    knots = _floats(args.knots) if args.knots else DEFAULT_KNOTS
    _emit(io.dumps(synth_pattern(spec, knots).to_dict()), args.output)


def cmd_simulate(args):
    pattern = io.read_pattern(args.pattern)
    params = SignalParams.from_snr_db(args.theta, args.snr_db, args.sigma2)
    block = simulate_block(pattern, params, args.k, args.seed)
    io.write_samples_csv(args.output or sys.stdout, block)


def cmd_estimate(args):
    pattern = io.read_pattern(args.pattern)
    block = io.read_samples_csv(args.samples)
    est = estimate(block, pattern, shared_nuisance=args.shared_nuisance)
    doc = {
        "theta_deg": round(est.theta_deg, 2),
        "coarse_theta_deg": round(est.coarse_theta_deg, 2),
        "ps_hat": est.ps_hat,
        "sigma2_hat": est.sigma2_hat,
        "objective": est.objective,
        "degenerate": est.degenerate,
    }
    _emit(io.dumps(doc), args.output)


def _override_seed(config, seed):
    return config if seed is None else replace(config, seed=seed)


def cmd_campaign(args):
    config = CampaignConfig.from_dict(io.read_json(args.config))
    report = run_campaign(_override_seed(config, args.seed))
    _emit(io.dumps(report.to_dict()), args.output)


def _batch_from_file(path):
    doc = io.read_json(path)
    if isinstance(doc, list):
        doc = {"campaigns": doc}
    defaults = doc.get("defaults", {})
    campaigns = doc.get("campaigns")
    if not campaigns:
        raise BadSpec("batch config has no campaigns")
    configs = [CampaignConfig.from_dict({**defaults, **c}) for c in campaigns]
    return configs, int(doc.get("repeats", 1))


def cmd_table(args):
    if args.preset:
        configs, repeats = PRESETS[args.preset](), 1
    elif args.config:
        configs, repeats = _batch_from_file(args.config)
    else:
        raise BadSpec("give a batch config file or --preset")
    if args.repeats is not None:
        repeats = args.repeats
    configs = [_override_seed(c, args.seed) for c in configs]
    result = run_table(configs, repeats=repeats, threads=args.threads)
    sys.stdout.write(result.text)
    if args.results:
        io.write_json(args.results, result.to_dict())


def cmd_crlb(args):
    pattern = _load_pattern(args)
    angles = _floats(args.angles) if args.angles else list(pattern.knot_angles_deg)
    if args.mc_trials:
        cols = variance_vs_crlb(pattern, angles, args.snr_db, args.k, args.mc_trials,
                                args.seed or 0, args.sigma2)
    else:
        template = SignalParams.from_snr_db(0.0, args.snr_db, args.sigma2)
        reports = crlb_sweep(pattern, template, args.k, angles)
        cols = {"angle_deg": [r.theta_deg for r in reports],
                "fisher_11": [r.fisher_11 for r in reports],
                "crlb_deg2": [float(r.crlb) for r in reports]}
    if args.output:
        io.write_columns(args.output, cols)
    else:
        io.write_columns(sys.stdout, cols)


def build_parser():
    p = argparse.ArgumentParser(prog="rssidoa",
                                description="RSSI maximum-likelihood DOA estimation")
    p.add_argument("--seed", type=int, default=None,
                   help="single source of randomness; overrides config seeds")
    p.add_argument("--threads", type=int, default=1,
                   help="worker cap; never changes results")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("calibrate", help="calibration CSV -> pattern file")
    s.add_argument("csv")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("synth-pattern", help="closed-form cardioid pattern -> pattern file")
    s.add_argument("--sensors", type=int, default=4)
    s.add_argument("--exponent", type=float, default=1.0)
    s.add_argument("--boresights", help="comma-separated degrees (default: evenly spaced)")
    s.add_argument("--knots", help="comma-separated knot angles (default: 10,30,...,350)")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_synth_pattern)

    s = sub.add_parser("simulate", help="draw one sample block as CSV")
    s.add_argument("--pattern", required=True)
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--snr-db", type=float, default=20.0)
    s.add_argument("--sigma2", type=float, default=1.0)
    s.add_argument("--k", type=int, default=64)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("estimate", help="pattern + sample-block CSV -> single DOA")
    s.add_argument("--pattern", required=True)
    s.add_argument("samples")
    s.add_argument("--shared-nuisance", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("campaign", help="campaign config -> report")
    s.add_argument("config")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_campaign)

    s = sub.add_parser("table", help="batch config -> text table + structured results")
    s.add_argument("config", nargs="?")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--repeats", type=int)
    s.add_argument("--results", help="structured results JSON path")
    s.set_defaults(func=cmd_table)

    s = sub.add_parser("crlb", help="bound sweep (optionally with Monte Carlo variance)")
    s.add_argument("--pattern", help="pattern file (default: 4-sensor cardioid)")
    s.add_argument("--angles", help="comma-separated degrees (default: pattern knots)")
    s.add_argument("--snr-db", type=float, default=20.0)
    s.add_argument("--sigma2", type=float, default=1.0)
    s.add_argument("--k", type=int, default=64)
    s.add_argument("--mc-trials", type=int, default=0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_crlb)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "simulate" and args.seed is None:
        args.seed = 0
    try:
        args.func(args)
    except (DoaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
