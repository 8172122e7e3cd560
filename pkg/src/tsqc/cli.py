"""Command-line entry point: ``tsqc <subcommand>`` or ``python -m tsqc``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import experiments, ingest
from .estimators import TickSeries
from .simulate import ModelParams, simulate_day

CONFIG_KEYS = ("kappa", "alpha_cir", "gamma_vol", "xi", "beta0", "beta_exponent", "nu",
               "rho", "n", "noise_sd", "T", "sim_steps", "seed")
PRESETS = {"paper": ModelParams.paper, "desk": ModelParams.desk}


def load_config(path=None, preset="paper"):
    """Model parameters and seed from a JSON config layered over a preset."""
    params = PRESETS[preset]().to_dict()
    seed = 0
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
        unknown = set(cfg) - set(CONFIG_KEYS)
        if unknown:
            raise SystemExit(f"unknown config keys: {', '.join(sorted(unknown))}")
        seed = int(cfg.pop("seed", 0))
        params.update(cfg)
    return ModelParams.from_dict(params), seed


def _write_csv(df: pd.DataFrame, path):
    df.to_csv(path, index=False, lineterminator="\n")


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def cmd_simulate(args):
    params, seed = load_config(args.config, args.preset)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths, ticks = simulate_day(params, seed)
    s = slice(None, None, args.latent_stride)
    _write_csv(pd.DataFrame({"time": paths.times[s], "sigma2": paths.sigma2[s],
                             "lambda": paths.lambda_n[s], "X": paths.X[s]}), out / "latent.csv")
    # ticks.csv holds price levels so the log-price can be recovered after cleaning
    _write_csv(pd.DataFrame({"timestamp": ticks.times,
                             "price": args.price_level * np.exp(ticks.prices)}), out / "ticks.csv")
    print(f"wrote {len(ticks)} ticks to {out / 'ticks.csv'}")


def cmd_ingest(args):
    raw = ingest.parse_ticks(args.input)
    window = ingest.SessionWindow.parse(args.session)
    days = ingest.clean_days(raw, window, ingest.parse_offset(args.tz), label=Path(args.input).stem)
    ingest.write_cleaned(days, args.out)
    counts = ", ".join(f"{d}: {len(t)}" for d, t in sorted(days.items()))
    print(f"skipped {raw.skipped} malformed rows; ticks per day: {counts}")


def _load_days(files, log_prices):
    days = []
    for f in files:
        for date, ticks in ingest.read_cleaned(f).items():
            if log_prices:
                ticks = TickSeries(ticks.times, np.log(ticks.prices))
            days.append((date, ticks))
    return days


def _estimate_table(files, args):
    return experiments.run_empirical(
        _load_days(files, not args.no_log), B=args.blocks, k1=args.k1, gamma_ratio=args.gamma,
        m=args.preavg, tsrv_k=args.tsrv_k, tsrv_j=args.tsrv_j, count_scale=args.count_scale,
        theta_method=args.theta_method,
    )


def cmd_estimate(args):
    df = _estimate_table([args.ticks], args)
    _write_csv(df, args.out)
    print(df.to_string(index=False))


def cmd_empirical(args):
    df = _estimate_table(args.days, args)
    _write_csv(df, args.out)
    print(df.to_string(index=False))


def cmd_mc(args):
    params, seed = load_config(args.config, args.preset)
    cfg = experiments.McConfig(
        model=params, reps=args.reps, k1_list=_int_list(args.k1), gamma_ratio=args.gamma,
        B=args.blocks, m=args.preavg, seed=seed if args.seed is None else args.seed,
        workers=args.workers,
    )
    df = experiments.run_mc_deviance(cfg)
    _write_csv(df, args.out)
    summary = experiments.summarize_deviance(df)
    if args.summary:
        _write_csv(summary, args.summary)
    if args.gnuplot:
        with open(args.gnuplot, "w", encoding="utf-8") as fh:
            for target, g in summary.groupby("target", sort=True):
                fh.write(f"# target {target}: k1 mean_deviance se band_lo band_hi\n")
                for r in g.itertuples():
                    fh.write(f"{r.k1} {r.mean_deviance!r} {r.se!r} {r.band_lo!r} {r.band_hi!r}\n")
                fh.write("\n\n")
    print(summary.drop(columns="band_method").to_string(index=False))


def cmd_rate(args):
    params, seed = load_config(args.config, args.preset)
    lo, hi = (int(x) for x in args.ladder.split(":"))
    table, fit = experiments.run_rate_experiment(
        params, reps=args.reps, log2_kdelta=range(lo, hi + 1), K=args.K,
        seed=seed if args.seed is None else args.seed, workers=args.workers,
    )
    table["slope"] = fit["slope"]
    table["slope_stderr"] = fit["stderr"]
    table["slope_boot_se"] = fit["boot_se"]
    _write_csv(table, args.out)
    print(table.to_string(index=False))


def _estimator_flags(p):
    p.add_argument("--blocks", type=int, default=390)
    p.add_argument("--k1", type=int, default=5)
    p.add_argument("--gamma", type=int, default=2)
    p.add_argument("--preavg", type=int, default=None, help="pre-averaging window (default: auto)")
    p.add_argument("--tsrv-k", type=int, default=2)
    p.add_argument("--tsrv-j", type=int, default=1)
    p.add_argument("--count-scale", type=float, default=1e-6)
    p.add_argument("--theta-method", choices=("global", "block"), default="global")
    p.add_argument("--no-log", action="store_true", help="estimate on raw prices, not log-prices")


def _model_flags(p):
    p.add_argument("--config", help="JSON file with model parameters and seed")
    p.add_argument("--preset", choices=sorted(PRESETS), default="paper")


def build_parser():
    parser = argparse.ArgumentParser(prog="tsqc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one day of the volatility-intensity model")
    _model_flags(p)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--latent-stride", type=int, default=1, help="write every k-th fine-grid point")
    p.add_argument("--price-level", type=float, default=100.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", help="clean a raw tick file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--session", default="09:45-15:45")
    p.add_argument("--tz", default="+00:00", help="UTC offset of the exchange clock")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("estimate", help="daily TSQC estimates from a cleaned tick file")
    p.add_argument("--ticks", required=True)
    p.add_argument("--out", required=True)
    _estimator_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("empirical", help="daily TSQC table over several cleaned files")
    p.add_argument("--days", nargs="+", required=True)
    p.add_argument("--out", default="daily.csv")
    _estimator_flags(p)
    p.set_defaults(func=cmd_empirical)

    p = sub.add_parser("mc", help="Monte Carlo deviance study")
    _model_flags(p)
    p.set_defaults(preset="desk")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--k1", default=",".join(map(str, experiments.DEFAULT_K1)))
    p.add_argument("--gamma", type=int, default=2)
    p.add_argument("--blocks", type=int, default=experiments.McConfig.B)
    p.add_argument("--preavg", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="deviance.csv")
    p.add_argument("--summary", help="per-K1 summary CSV")
    p.add_argument("--gnuplot", help="gnuplot data file of the summary")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("rate", help="convergence-rate experiment on exact integrated paths")
    _model_flags(p)
    p.set_defaults(preset="desk")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--K", type=int, default=64)
    p.add_argument("--ladder", default="-9:-4", help="log2(K*delta) range, inclusive")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="slopes.csv")
    p.set_defaults(func=cmd_rate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"tsqc {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
