"""Command-line entry point.

Subcommands: ``run`` (train one experiment config), ``ablate-frequency``
(frequency sweep with the heuristic beam rule), ``sandbox-sweep``
(fixed-beam grid on the sandbox shapes), and ``metrics`` (recompute a
summary from a run directory's CSVs).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .ablation import frequency_ablation, load_ablation_config, load_sweep_config, sandbox_sweep
from .config import ConfigError, load_experiment_config
from .experiment import recompute_summary, run_experiment


def _apply_overrides(cfg, args):
    changes = {}
    if args.seed is not None:
        changes["seeds"] = (args.seed,)
    if args.episodes is not None:
        changes["episodes"] = args.episodes
    if args.out is not None:
        changes["out_dir"] = args.out
    return dataclasses.replace(cfg, **changes) if changes else cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="beamtrack")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None, help="replace the seed list")
    p_run.add_argument("--episodes", type=int, default=None)
    p_run.add_argument("--out", default=None)

    p_abl = sub.add_parser("ablate-frequency", help="frequency ablation study")
    p_abl.add_argument("config")
    p_abl.add_argument("--out", default=None)

    p_sweep = sub.add_parser("sandbox-sweep", help="fixed-beam sandbox sweep")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--out", default=None)

    p_metrics = sub.add_parser("metrics", help="recompute summary from CSVs")
    p_metrics.add_argument("run_dir")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = _apply_overrides(load_experiment_config(args.config), args)
            summary = run_experiment(cfg)
            agg = summary["aggregate"]
            print(
                f"{cfg.variant}: final return {agg['final_return_mean']:.2f}"
                f" (err {agg['final_error_mean']:.4f}) -> {cfg.out_dir}"
            )
        elif args.command == "ablate-frequency":
            cfg = load_ablation_config(args.config)
            if args.out is not None:
                cfg = dataclasses.replace(cfg, out_dir=args.out)
            result = frequency_ablation(cfg)
            print(
                f"rho(B,f)={result['corr_width_frequency']:+.3f} "
                f"rho(D,f)={result['corr_depth_frequency']:+.3f} -> {cfg.out_dir}"
            )
        elif args.command == "sandbox-sweep":
            cfg = load_sweep_config(args.config)
            if args.out is not None:
                cfg = dataclasses.replace(cfg, out_dir=args.out)
            result = sandbox_sweep(cfg)
            for row in result["rows"]:
                print(
                    f"{row['curve']:>16} ({row['width']},{row['depth']}): "
                    f"tracking {row['tracking_pct']:.1f}% eff {row['search_efficiency']:.2f}%"
                )
        else:
            print(json.dumps(recompute_summary(args.run_dir), indent=2))
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
