"""Command-line entry point: ``kitaev-sta --preset fig2 --out results/``."""
import argparse
import json
import sys

from .experiments import (ConfigError, ExperimentConfig, NumericalFailure, list_presets,
                          preset_config, run_experiment)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="kitaev-sta",
                                description="Fidelity and work-statistics sweeps for driven Kitaev chains.")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", help="named experiment (see --list-presets)")
    src.add_argument("--config", help="path to a JSON experiment config")
    src.add_argument("--list-presets", action="store_true", help="print the preset catalog and exit")
    p.add_argument("--out", default="results", help="output directory (default: results)")
    p.add_argument("--format", choices=("csv", "json"), help="table format (default: csv)")
    p.add_argument("--threads", type=int,
                   help="worker threads; overrides the KITAEV_STA_THREADS environment variable")
    p.add_argument("--steps", type=int, help="fixed number of time steps per drive")
    p.add_argument("--ed-cap-override", type=int, metavar="N",
                   help="raise the exact-diagonalization size cap (memory grows as 4^N)")
    p.add_argument("--bin-width", type=float, help="histogram bin width for work atoms")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.list_presets:
        for name, desc in list_presets().items():
            print(f"{name:7s} {desc}")
        return EXIT_OK
    overrides = {}
    if args.format:
        overrides["format"] = args.format
    if args.steps is not None:
        overrides["n_steps"] = args.steps
    if args.bin_width is not None:
        overrides["bin_width"] = args.bin_width
    if args.ed_cap_override is not None:
        overrides["ed_cap"] = args.ed_cap_override
        overrides["dense_cap"] = args.ed_cap_override
    try:
        if args.preset:
            cfg = preset_config(args.preset, **overrides)
        elif args.config:
            with open(args.config) as fh:
                data = json.load(fh)
            if not isinstance(data, dict):
                raise ConfigError("config must be a JSON object")
            data.update(overrides)
            cfg = ExperimentConfig.from_dict(data)
        else:
            raise ConfigError("one of --preset, --config or --list-presets is required")
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
    except (ConfigError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run_experiment(cfg, args.out, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote {', '.join(manifest['files'])} and manifest.json to {args.out} "
          f"({len(manifest['points'])} points, {manifest['total_runtime_s']:.1f} s)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
