"""Command line entry points: simulate, identify, impulse, recover."""
import argparse
import concurrent.futures
import dataclasses
import json
import os
import pathlib
import re
import sys

import numpy as np

from .config import ExperimentConfig
from .errors import BintrackError, ConfigError
from .harness import run_closed_loop, run_identification, summarize, \
    write_records, write_summary
from .lti import impulse_response
from .recovery import recover

_SEED_RANGE = re.compile(r"^(\d+)\.\.(\d+)$")


def _parse_values(text):
    """Inline comma-separated floats, or a path to a whitespace/newline file."""
    path = pathlib.Path(text)
    if path.exists():
        return np.loadtxt(path, dtype=float, ndmin=1)
    try:
        return np.asarray([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise ConfigError(f"could not parse {text!r} as numbers or a file")


def _seed_list(args, cfg):
    if args.seeds is not None:
        m = _SEED_RANGE.match(args.seeds)
        if not m:
            raise ConfigError("--seeds wants an inclusive range like 0..9")
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise ConfigError("--seeds range is reversed")
        return list(range(lo, hi + 1))
    if args.seed is not None:
        return [args.seed]
    return [cfg.seed]


def _simulate_one(cfg, seed, out_dir):
    cfg = dataclasses.replace(cfg, seed=seed, output_path=None)
    records = run_closed_loop(
        cfg, output_path=str(out_dir / f"run_seed{seed}.csv"))
    summary = summarize(records)
    write_summary(summary, str(out_dir / f"summary_seed{seed}.json"))
    return seed, summary


def _identify_one(cfg, seed, policy, out_dir):
    cfg = dataclasses.replace(cfg, seed=seed)
    res = run_identification(cfg, input_policy=policy)
    report = {
        "seed": seed,
        "checkpoint_errors": res.checkpoint_errors,
        "consistency_ratios": res.consistency_ratios,
        "lambda_trajectory": [[t, v] for t, v in res.lambda_trajectory],
        "cum_regret": res.cum_regret,
    }
    if out_dir is not None:
        with open(out_dir / f"ident_seed{seed}.json", "w",
                  encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return seed, report


def _fan_out(fn, seeds):
    if len(seeds) == 1:
        return [fn(seeds[0])]
    workers = min(len(seeds), os.cpu_count() or 1)
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return sorted(pool.map(fn, seeds), key=lambda pair: pair[0])


def _cmd_simulate(args):
    cfg = ExperimentConfig.load(args.config)
    seeds = _seed_list(args, cfg)
    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    runner = _SimulateWorker(cfg, out_dir)
    for seed, summary in _fan_out(runner, seeds):
        print(f"seed {seed}: J_n={summary['J_n']:.6g} "
              f"sigma_switches={summary['sigma_switches']} "
              f"tau_switches={summary['tau_switches']}")
    return 0


def _cmd_identify(args):
    cfg = ExperimentConfig.load(args.config)
    seeds = _seed_list(args, cfg)
    out_dir = None
    if args.out is not None:
        out_dir = pathlib.Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
    runner = _IdentifyWorker(cfg, args.policy, out_dir)
    reports = _fan_out(runner, seeds)
    if out_dir is None:
        payload = [report for _, report in reports]
        json.dump(payload[0] if len(payload) == 1 else payload,
                  sys.stdout, indent=2, sort_keys=True)
        print()
    else:
        for seed, report in reports:
            final = max(int(k) for k in report["checkpoint_errors"])
            print(f"seed {seed}: error@{final}="
                  f"{report['checkpoint_errors'][final]:.6g}")
    return 0


class _SimulateWorker:
    """Picklable closure for the process pool."""

    def __init__(self, cfg, out_dir):
        self.cfg = cfg
        self.out_dir = out_dir

    def __call__(self, seed):
        return _simulate_one(self.cfg, seed, self.out_dir)


class _IdentifyWorker:
    def __init__(self, cfg, policy, out_dir):
        self.cfg = cfg
        self.policy = policy
        self.out_dir = out_dir

    def __call__(self, seed):
        return _identify_one(self.cfg, seed, self.policy, self.out_dir)


def _cmd_impulse(args):
    a = _parse_values(args.a)
    b = _parse_values(args.b)
    resp = impulse_response(a, b, m=args.m)
    for g in resp.coeffs:
        print(repr(float(g)))
    return 0


def _cmd_recover(args):
    g = _parse_values(args.g)
    params = recover(g, args.p, args.q)
    print(",".join(repr(float(v)) for v in params.a_coeffs))
    print(",".join(repr(float(v)) for v in params.b_coeffs))
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="bintrack",
        description="Adaptive tracking control of ARX plants observed "
                    "through a binary threshold sensor.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="closed-loop tracking run")
    sim.add_argument("--config", required=True)
    sim.add_argument("--seed", type=int, default=None,
                     help="override the config seed")
    sim.add_argument("--seeds", default=None,
                     help="inclusive range a..b, one run per seed")
    sim.add_argument("--out", default=".",
                     help="directory for per-step CSV and summary JSON")
    sim.set_defaults(fn=_cmd_simulate)

    ident = sub.add_parser("identify", help="open-loop estimation run")
    ident.add_argument("--config", required=True)
    ident.add_argument("--policy", choices=["dither"], default="dither")
    ident.add_argument("--seed", type=int, default=None)
    ident.add_argument("--seeds", default=None)
    ident.add_argument("--out", default=None,
                       help="directory for per-seed JSON reports "
                            "(default: print to stdout)")
    ident.set_defaults(fn=_cmd_identify)

    imp = sub.add_parser("impulse",
                         help="impulse response of an ARX parameter pair")
    imp.add_argument("--a", required=True,
                     help="output polynomial coefficients, inline or file")
    imp.add_argument("--b", required=True,
                     help="input polynomial coefficients, inline or file")
    imp.add_argument("--m", type=int, default=None,
                     help="number of coefficients (default: auto-truncate)")
    imp.set_defaults(fn=_cmd_impulse)

    rec = sub.add_parser("recover",
                         help="ARX parameters from impulse response values")
    rec.add_argument("--g", required=True,
                     help="impulse response values, inline or file")
    rec.add_argument("--p", type=int, required=True,
                     help="order of the output polynomial tail")
    rec.add_argument("--q", type=int, required=True,
                     help="number of input polynomial coefficients")
    rec.set_defaults(fn=_cmd_recover)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except BintrackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
