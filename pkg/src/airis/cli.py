"""Command-line entry point: ``airis {run,sweep,fit-beta,convergence}``.

Exit codes: 0 success, 2 configuration error, 3 when any run was flagged as a
solver failure.
"""
from __future__ import annotations

import argparse
import sys

from . import harness
from .config import ConfigError, default_config, load_config

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="airis", description="Active-IRS beamforming experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (
        ("run", "run every configured scheme on every seed and sweep point"),
        ("sweep", "mean and stderr of the rate along the sweep axis, plus a plot"),
        ("fit-beta", "true and regressed rate-vs-PA-factor curves for one channel"),
        ("convergence", "per-iteration rate traces"),
    ):
        sp = sub.add_parser(name, help=text, description=text)
        sp.add_argument("--config", help="JSON config or a manifest.json from an earlier run")
        sp.add_argument("--out", help="output directory (default: config output_dir)")
        sp.add_argument("--seeds", type=int, help="number of seeds")
        sp.add_argument("--base-seed", type=int, help="first seed (unsigned 64-bit)")
        sp.add_argument("--threads", type=int, help="worker processes (fallback: $AIRIS_THREADS, else 1)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else default_config()
        cfg = cfg.with_overrides(seed_count=args.seeds, base_seed=args.base_seed, output_dir=args.out)
        threads = harness.resolve_threads(args.threads)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"airis: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = cfg.output_dir
    if args.command == "run":
        rows = harness.cmd_run(cfg, out, threads)
    elif args.command == "sweep":
        try:
            harness.cmd_sweep(cfg, out, threads)
        except ValueError as exc:
            print(f"airis: config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        rows = [r for r in harness.read_results(out)]
    elif args.command == "fit-beta":
        harness.cmd_fit_beta(cfg, out, cfg.base_seed if args.base_seed is not None else None)
        rows = []
    else:
        rows = [r for r, _ in harness.cmd_convergence(cfg, out, threads)]
    failed = [r for r in rows if r.status.startswith("failed")]
    for r in failed:
        print(f"airis: {r.algorithm} seed {r.seed} N={r.n_elements}: {r.status}", file=sys.stderr)
    return EXIT_SOLVER if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
