"""Command-line entry point: ``python -m src.cli.main <verb> ...``.

Exit codes: 0 on success, 1 on configuration errors, 2 on anything else.
Progress goes to standard error; results only to files.
"""
from pathlib import Path
from typing import List, Optional, Sequence

import argparse
import logging
import sys

from pydantic import ValidationError

from src.agent.loop import run_training
from src.config import settings
from src.exceptions import ConfigError
from src.experiments.analysis import analyze
from src.experiments.hooks import DemoProgressHook
from src.experiments.io import CONFIG_FILE, write_series
from src.experiments.recipes import recipe_registry
from src.experiments.runner import build_hooks, run_recipe
from src.experiments.schema import apply_overrides, dump_config, load_config, validate_config
from src.metrics.aggregate import STATISTICS
from src.telemetry import write_exposition
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

DEMO_OUTPUT = "runs/demo"


def _seed_list(raw: str) -> List[int]:

    try:
        return [int(s) for s in raw.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Seeds must be integers, got '{raw}'")


def build_parser() -> argparse.ArgumentParser:

    parser = argparse.ArgumentParser(
        prog="dormant-lab",
        description="Dormant neuron measurement and recycling experiments"
    )
    parser.add_argument("--log-level", default=None, help="Overrides DORMANT_LOG_LEVEL")
    verbs = parser.add_subparsers(dest="verb", required=True)

    def add_config_flags(sub: argparse.ArgumentParser, config_required: bool = True) -> None:

        sub.add_argument("--config", type=Path, required=config_required, help="Experiment YAML file")
        sub.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                         help="Dotted config override, repeatable")
        sub.add_argument("--seeds", type=_seed_list, default=None, help="Seed list, replaces config seeds")

    run = verbs.add_parser("run", help="Run every cell of one recipe sequentially")
    add_config_flags(run)
    run.add_argument("--out", type=Path, default=None, help="Output directory")

    sweep = verbs.add_parser("sweep", help="Run every cell of one recipe on worker processes")
    add_config_flags(sweep)
    sweep.add_argument("--out", type=Path, default=None, help="Output directory")
    sweep.add_argument("--jobs", type=int, default=None, help="Worker processes (default: DORMANT_JOBS)")

    validate = verbs.add_parser("validate", help="Check a config without running anything")
    add_config_flags(validate)

    analyze_cmd = verbs.add_parser("analyze", help="Aggregate finished runs")
    analyze_cmd.add_argument("paths", type=Path, nargs="+", help="Recipe output dirs or run dirs")
    analyze_cmd.add_argument("--out", type=Path, default=None, help="Where aggregate files go")
    analyze_cmd.add_argument("--group-by", default="group", help="'group' or a dotted config key")
    analyze_cmd.add_argument("--statistic", choices=sorted(STATISTICS), default="iqm")
    analyze_cmd.add_argument("--final-window", type=int, default=None)
    analyze_cmd.add_argument("--resamples", type=int, default=None)
    analyze_cmd.add_argument("--alpha", type=float, default=None)

    demo = verbs.add_parser("demo", help="Catch with ReDo, printing the live dormant fraction")
    add_config_flags(demo, config_required=False)
    demo.add_argument("--out", type=Path, default=Path(DEMO_OUTPUT), help="Output directory")
    demo.add_argument("--seconds", type=float, default=None, help="Wall-clock budget (default: DORMANT_DEMO_SECONDS)")
    return parser


def _load(args: argparse.Namespace):
    return load_config(args.config, args.overrides, args.seeds)


def _cmd_run(args: argparse.Namespace, jobs: int) -> int:

    config = _load(args)
    manifest = run_recipe(config, args.out, jobs=jobs)
    if settings.write_telemetry:
        write_exposition(str(manifest.parent))
    print(f"Manifest written to {manifest}", file=sys.stderr)
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:

    config = _load(args)
    cells = recipe_registry.expand(config)
    print(f"{args.config}: valid {config.recipe} config, {len(cells)} cells", file=sys.stderr)
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace) -> int:

    report = analyze(
        args.paths,
        output_dir=args.out,
        group_by=args.group_by,
        statistic=args.statistic,
        final_window=args.final_window,
        resamples=args.resamples,
        alpha=args.alpha
    )
    for group in report["groups"]:
        print(
            f"{group['group']}: {report['statistic']} {report['metric']} = {group['point']:.4f} "
            f"[{group['ci_lo']:.4f}, {group['ci_hi']:.4f}] over {group['n_seeds']} seeds",
            file=sys.stderr
        )
    return EXIT_OK


def demo_config(path: Optional[Path], overrides: Sequence[str], seeds: Optional[Sequence[int]]):
    """Catch defaults with threshold ReDo on; file and overrides apply on top."""
    base = {"recipe": "dormancy_growth", "recycle": {"enabled": True, "mode": "threshold"}, "seeds": [0]}
    if path is not None:
        loaded = load_config(path, seeds=seeds).model_dump(mode="json")
        loaded["recycle"]["enabled"] = True
        base = loaded
    data = apply_overrides(base, overrides)
    if seeds is not None:
        data["seeds"] = list(seeds)
    return validate_config(data)


def _cmd_demo(args: argparse.Namespace) -> int:

    config = demo_config(args.config, args.overrides, args.seeds)
    seconds = args.seconds if args.seconds is not None else settings.demo_seconds
    seed = config.seeds[0]
    hooks = build_hooks(config, "online")
    hooks.append(DemoProgressHook(config.measure_period, seconds))

    logger.info(f"Demo: Catch with ReDo for {seconds:.0f}s (seed {seed})")
    series = run_training(config.env, config.dqn, hooks, seed, config.report_tau)
    run_dir = args.out / f"seed_{seed}"
    write_series(series, run_dir)
    (run_dir / CONFIG_FILE).write_text(dump_config(config), encoding="utf-8")
    if settings.write_telemetry:
        write_exposition(str(args.out))
    print(
        f"Demo stopped at step_env={series.counters.get('env_steps', 0)}, "
        f"files in {run_dir}",
        file=sys.stderr
    )
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:

    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, (args.log_level or settings.log_level).upper()),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr
    )

    try:
        if args.verb == "run":
            return _cmd_run(args, jobs=1)
        if args.verb == "sweep":
            return _cmd_run(args, jobs=args.jobs or settings.jobs)
        if args.verb == "validate":
            return _cmd_validate(args)
        if args.verb == "analyze":
            return _cmd_analyze(args)
        return _cmd_demo(args)
    except (ConfigError, ValidationError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:
        logger.error(f"{args.verb} failed: {e}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
