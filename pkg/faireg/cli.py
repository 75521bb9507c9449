"""Command-line entry point ``faireg``.

Subcommands:
    synth    Generate a synthetic dataset (CSV + manifest + label plots).
    run      Run one experiment from a JSON configuration.
    grid     Run ``orig`` and every (method, protected selector) setup.
    mc-skew  Monte-Carlo study of SP after normalization under skewness.
    report   Re-render a stored ``report.json`` into tables and a scatter plot.

Exit codes: 0 success, 2 configuration error, 3 numeric failure, 1 any other
toolkit error.
"""
from __future__ import annotations

import argparse
import io
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

from . import get_version, serialization
from .data.dataset import canonical_manifest, csv_text
from .data.synth import SynthSpec, synthesize
from .env import RuntimeSettings, load_settings
from .exceptions import ConfigError, FairRegError, NumericError
from .log import configure_logging, get_logger
from .pipeline.config import ExperimentConfig
from .pipeline.experiment import run_experiment, run_grid
from .pipeline.render import distribution_svg, render_experiment
from .pipeline.skew import mc_skew
from .storage import ArtifactStore

__all__ = [
    'build_parser',
    'main',
]


def __dir__() -> List[str]:
    return sorted(__all__)


logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="JSON configuration file")
    common.add_argument("--seed", type=_u64, default=None, help="master seed (overrides config and FAIREG_SEED)")
    common.add_argument("--out", type=str, default=None, help="output directory (default FAIREG_OUTPUT_DIR)")
    common.add_argument("--threads", type=_positive, default=None, help="worker threads (default FAIREG_THREADS)")
    common.add_argument("--log-level", type=str, default=None, help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--env-file", type=str, default=".env", help="dotenv file with FAIREG_* settings")

    parser = argparse.ArgumentParser(prog="faireg", description="Fair regression experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {get_version()}")
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    commands.add_parser("run", parents=[common], help="run one experiment")
    commands.add_parser("grid", parents=[common], help="run every method/protected setup")

    skew = commands.add_parser("mc-skew", parents=[common], help="Monte-Carlo skewness study")
    skew.add_argument("--shapes", type=float, nargs="+", default=[1.0, 10.0, 100.0], help="gamma shape parameters")
    skew.add_argument("--n", type=_positive, default=10000, help="samples per trial")
    skew.add_argument("--trials", type=_positive, default=50, help="trials per shape")

    report = commands.add_parser("report", parents=[common], help="render a stored report.json")
    report.add_argument("--input", type=str, required=True, help="path to report.json")
    return parser


def _settings(args: argparse.Namespace) -> RuntimeSettings:
    settings = load_settings(args.env_file)
    return settings.with_overrides(log_level=args.log_level, threads=args.threads, output_dir=args.out,
                                   seed=args.seed)


def _experiment_config(args: argparse.Namespace, settings: RuntimeSettings) -> ExperimentConfig:
    config = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    if args.seed is not None or not args.config:
        config = config.with_overrides(seed=settings.seed)
    return config.validate()


def _synth_spec(args: argparse.Namespace, settings: RuntimeSettings) -> SynthSpec:
    if args.config:
        try:
            document = serialization.loads(Path(args.config).read_bytes())
        except (OSError, serialization.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read configuration {args.config}: {e}")
        spec = SynthSpec.from_dict(document.get("synth", document)) if isinstance(document, dict) else None
        if spec is None:
            raise ConfigError("Synth configuration must be a JSON object")
    else:
        spec = ExperimentConfig().synth
    if args.seed is not None:
        spec = SynthSpec.from_dict({**spec.to_dict(), "seed": settings.seed})
    return spec


def _cmd_synth(args: argparse.Namespace, settings: RuntimeSettings) -> None:
    spec = _synth_spec(args, settings)
    store = ArtifactStore(settings.output_dir)
    dataset = synthesize(spec)
    store.store_text("data.csv", csv_text(dataset))
    store.store_json("data.manifest.json", canonical_manifest(dataset).to_dict())
    for name in dataset.protected:
        store.store_bytes(f"plots/labels_{name}.svg", distribution_svg(dataset, name))
    logger.info(f"Wrote {dataset.n} rows to {store.path('data.csv')}")


def _output_dir(args: argparse.Namespace, settings: RuntimeSettings, config: ExperimentConfig) -> str:
    if args.out is None and config.output_dir:
        return config.output_dir
    return settings.output_dir


def _cmd_run(args: argparse.Namespace, settings: RuntimeSettings) -> None:
    config = _experiment_config(args, settings)
    store = ArtifactStore(_output_dir(args, settings, config))
    result = run_experiment(config, store, settings.threads)
    render_experiment(result.to_dict(), store)
    logger.info(f"Mean MAA {result.report.mean_maa():.4f} (constant baseline {result.baseline_maa:.4f}); "
                f"outputs in {store.base_dir}")


def _cmd_grid(args: argparse.Namespace, settings: RuntimeSettings) -> None:
    config = _experiment_config(args, settings)
    store = ArtifactStore(_output_dir(args, settings, config))
    results = run_grid(config, store, settings.threads)
    for (method, selector), result in results.items():
        sub_store = ArtifactStore(store.path(f"{method}_{selector.replace('*', 'x')}"))
        render_experiment(result.to_dict(), sub_store)
    logger.info(f"Ran {len(results)} setups; summary in {store.path('summary.csv')}")


def _cmd_mc_skew(args: argparse.Namespace, settings: RuntimeSettings) -> None:
    means = mc_skew(args.shapes, n=args.n, trials=args.trials, seed=settings.seed, threads=settings.threads)
    store = ArtifactStore(settings.output_dir)
    rows = [{"shape": shape, "skewness": 2.0 / shape ** 0.5, "mean_sp": sp} for shape, sp in means.items()]
    store.store_json("mc_skew.json", {"n": args.n, "trials": args.trials, "seed": settings.seed, "results": rows})
    frame = pd.DataFrame(rows)
    for column in frame.columns:
        frame[column] = [serialization.format_number(v) for v in frame[column]]
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    store.store_text("mc_skew.csv", buffer.getvalue())


def _cmd_report(args: argparse.Namespace, settings: RuntimeSettings) -> None:
    try:
        payload = serialization.loads(Path(args.input).read_bytes())
    except (OSError, serialization.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read report {args.input}: {e}")
    store = ArtifactStore(settings.output_dir if args.out else Path(args.input).parent)
    for key in render_experiment(payload, store):
        logger.info(f"Wrote {store.path(key)}")


_COMMANDS = {
    "synth": _cmd_synth,
    "run": _cmd_run,
    "grid": _cmd_grid,
    "mc-skew": _cmd_mc_skew,
    "report": _cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = _settings(args)
        configure_logging(settings.log_level)
        _COMMANDS[args.command](args, settings)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except NumericError as e:
        logger.error(f"Numeric failure: {e}")
        return EXIT_NUMERIC
    except FairRegError as e:
        logger.error(str(e))
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
