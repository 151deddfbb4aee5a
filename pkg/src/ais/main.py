#!/usr/bin/env python3
"""
Artificial Immune Systems - Batch Command Line

Runs the toolkit's algorithms over input files and writes CSV reports:

- recommend: stabilized antibody neighbourhood and predictions for one user
- detect:    negative-selection detectors censored on a self file, run over
             a traffic file
- evaluate:  holdout MAE of the recommender against global-mean and k-NN
             baselines, one row per seed and method
- simulate:  concentration trajectories for an explicit antibody setup

Every run is deterministic given its inputs, configuration and seed.

Exit codes:
  0  success
  2  usage error
  3  input file could not be parsed
  4  invalid configuration
  5  algorithm failure (e.g. no detector survives censoring)
  6  missing input file or unknown user
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from ais.affinity import PatternMismatchError
from ais.config import ConfigError, RunConfig, derive_seed, load_config
from ais.dynamics import TrajectoryRecorder, run_steps
from ais.encoding import AttributeString, BitString, ConnectionRecord, find_profile
from ais.negsel import (
    DetectorGenerationError,
    PatternKind,
    PromotionError,
    monitor,
    promote_activated,
    run_generation,
)
from ais.parsers import ParseError, parse_patterns, parse_ratings
from ais.recommender import (
    METHODS,
    ProfileError,
    build_neighbourhood,
    evaluate_methods,
    predict,
    recommend_top_n,
)
from ais.reports import (
    write_alerts,
    write_detectors,
    write_evaluation,
    write_predictions,
    write_summary,
    write_trajectory,
)
from ais.state import ImmuneNetwork, PoolFullError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CONFIG = 4
EXIT_ALGORITHM = 5
EXIT_MISSING = 6


class MissingInputError(Exception):
    """Raised when an input file or the requested user does not exist."""


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per workflow.

    Any further `--section.key=value` option overrides the config file.
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        type=Path,
        default=None,
        help="Config file of 'section.key = value' lines "
        "(default: $AIS_CONFIG if set)",
    )
    common.add_argument("--seed", type=int, default=None, help="Global seed")
    common.add_argument("--out", type=str, default=None, help="Output directory")
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="More log output"
    )
    common.add_argument(
        "-q", "--quiet", action="store_true", help="Only log errors"
    )

    parser = argparse.ArgumentParser(
        prog="ais",
        description="Artificial immune system toolkit: recommender, negative "
        "selection and network dynamics.\n\n"
        "Options of the form --section.key=value override config settings, "
        "e.g. --network.death_rate=0.2",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    recommend = commands.add_parser(
        "recommend", parents=[common], help="Predict and rank items for one user"
    )
    recommend.add_argument("ratings", type=Path, help="Tab-separated ratings file")
    recommend.add_argument("--user", type=int, required=True, help="Target user id")
    recommend.add_argument(
        "--idiotypic", choices=["on", "off"], default=None, help="Idiotypic effect"
    )
    recommend.add_argument(
        "--trajectory",
        action="store_true",
        help="Also write per-iteration concentrations",
    )

    detect = commands.add_parser(
        "detect", parents=[common], help="Generate detectors and monitor traffic"
    )
    detect.add_argument("self_path", type=Path, help="Self patterns file")
    detect.add_argument("traffic_path", type=Path, help="Traffic file")
    detect.add_argument(
        "--auto-confirm",
        action="store_true",
        help="Promote every activated detector to memory",
    )

    evaluate = commands.add_parser(
        "evaluate", parents=[common], help="Holdout MAE against baselines"
    )
    evaluate.add_argument("ratings", type=Path, help="Tab-separated ratings file")
    evaluate.add_argument(
        "--idiotypic", choices=["on", "off"], default=None, help="Idiotypic effect"
    )

    commands.add_parser(
        "simulate", parents=[common], help="Run the dynamics on an explicit setup"
    )
    return parser


def parse_overrides(tokens: Sequence[str]) -> dict[str, str]:
    """Collect `--key=value` and `--key value` pairs.

    Raises:
        ValueError: On a token that is not a dotted-key option
    """
    overrides: dict[str, str] = {}
    tokens = list(tokens)
    while tokens:
        token = tokens.pop(0)
        if not token.startswith("--") or len(token) <= 2:
            raise ValueError(f"unrecognized argument: {token}")
        key, sep, value = token[2:].partition("=")
        if not sep:
            if not tokens:
                raise ValueError(f"missing value for --{key}")
            value = tokens.pop(0)
        overrides[key] = value
    return overrides


def parse_arguments(
    argv: Optional[Sequence[str]] = None,
) -> tuple[argparse.Namespace, dict[str, str]]:
    """Parse the command line into known arguments and config overrides."""
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        overrides = parse_overrides(extra)
    except ValueError as e:
        parser.error(str(e))
    return args, overrides


def configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def resolve_config(args: argparse.Namespace, overrides: dict[str, str]) -> RunConfig:
    """Config file and overrides, then the dedicated flags on top."""
    if args.config is not None and not args.config.exists():
        raise MissingInputError(f"config file not found: {args.config}")
    config = load_config(args.config, overrides)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative")
        config = config.with_seed(args.seed)
    if args.out is not None:
        config = config.with_out(args.out)
    if getattr(args, "idiotypic", None) is not None:
        config = config.with_idiotypic(args.idiotypic == "on")
    return config


def read_input(path: Path) -> str:
    if not path.is_file():
        raise MissingInputError(f"input file not found: {path}")
    try:
        return path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"{path} is not valid UTF-8 ({e.reason})") from e


def cmd_recommend(args: argparse.Namespace, config: RunConfig) -> int:
    """Build the target's neighbourhood and write its predictions."""
    profiles = parse_ratings(read_input(args.ratings), config.ratings.vote_range)
    target = find_profile(profiles, args.user)
    if target is None:
        raise MissingInputError(f"user {args.user} not found in {args.ratings}")

    cfg = config.recommender_config()
    candidates = [p for p in profiles if p.user_id != target.user_id]
    recorder = TrajectoryRecorder() if args.trajectory else None
    net = build_neighbourhood(target, candidates, cfg, observer=recorder)
    predictions = predict(net, target, cfg)

    out = Path(config.out)
    write_predictions(out / "predictions.csv", predictions)
    write_predictions(
        out / "recommendations.csv", recommend_top_n(predictions, cfg.top_n)
    )
    write_summary(
        out / "summary.csv",
        {
            "user_id": target.user_id,
            "idiotypic": "on" if cfg.idiotypic_enabled else "off",
            "pool_size": net.size,
            "iterations": net.iteration_count,
            "exit_condition": net.exit_condition.value if net.exit_condition else "",
            "predictions": len(predictions),
        },
    )
    if recorder is not None:
        write_trajectory(out / "trajectory.csv", recorder.rows)

    print(
        f"User {target.user_id}: {net.size} neighbours, "
        f"{len(predictions)} predictions written to {out}"
    )
    return EXIT_OK


def _pattern_kind(patterns: Sequence[AttributeString]) -> Optional[PatternKind]:
    if not patterns:
        return None
    if all(isinstance(p, BitString) for p in patterns):
        return PatternKind.BITS
    if all(isinstance(p, ConnectionRecord) for p in patterns):
        return PatternKind.RECORD
    raise ParseError("bit strings and connection records cannot be mixed")


def cmd_detect(args: argparse.Namespace, config: RunConfig) -> int:
    """Censor detectors on the self file and monitor the traffic file."""
    self_set = parse_patterns(read_input(args.self_path))
    traffic = parse_patterns(read_input(args.traffic_path))

    self_kind = _pattern_kind(self_set)
    traffic_kind = _pattern_kind(traffic)
    if self_kind and traffic_kind and self_kind != traffic_kind:
        raise ParseError(
            f"{args.traffic_path} holds {traffic_kind.value} patterns but "
            f"{args.self_path} holds {self_kind.value} patterns"
        )

    cfg = config.negsel_config()
    kind = self_kind or traffic_kind or cfg.pattern_kind
    length = cfg.pattern_length
    if kind == PatternKind.BITS and (self_set or traffic):
        lengths = {len(p) for p in (*self_set, *traffic)}
        if len(lengths) > 1:
            raise ParseError(
                f"bit strings in {args.self_path} and {args.traffic_path} "
                "differ in length"
            )
        (length,) = lengths
    for index, item in enumerate(traffic):
        if isinstance(item, ConnectionRecord) and item.has_wildcards:
            raise ParseError(f"traffic item {index + 1} contains a wildcard")
    try:
        cfg = cfg.with_pattern(kind, length)
    except ValueError as e:
        raise ConfigError(f"negsel.{e}") from e

    report = run_generation(self_set, cfg)
    alerts, detectors = monitor(report.detectors, traffic, cfg)
    promoted = 0
    if args.auto_confirm:
        detectors, promoted = promote_activated(detectors, operator_confirmed=True)

    out = Path(config.out)
    write_alerts(out / "alerts.csv", alerts)
    write_detectors(out / "detectors.csv", detectors)
    write_summary(
        out / "stats.csv",
        {
            "detectors_generated": len(report.detectors),
            "draws": report.draws,
            "rescued": report.rescued,
            "traffic_items": len(traffic),
            "alerts": len(alerts),
            "promoted": promoted,
        },
    )
    print(
        f"{len(report.detectors)} detectors from {report.draws} draws, "
        f"{len(alerts)} alerts written to {out}"
    )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, config: RunConfig) -> int:
    """Score the recommender and the baselines over every configured seed.

    Each holdout split draws from `derive_seed(seed, "evaluate")`; the report
    keeps the configured seed.
    """
    profiles = parse_ratings(read_input(args.ratings), config.ratings.vote_range)
    cfg = config.recommender_config()
    rows = []
    for seed in config.evaluation_seeds():
        results = evaluate_methods(
            profiles,
            config.evaluate.holdout_fraction,
            cfg,
            derive_seed(seed, "evaluate"),
            config.evaluate.sample_users,
        )
        baseline = results["global_mean"].mae
        for method in METHODS:
            metrics = results[method]
            rows.append((seed, method, metrics.mae, metrics.coverage, baseline))

    out = Path(config.out)
    write_evaluation(out / "evaluation.csv", rows)
    print(f"{len(rows)} evaluation rows written to {out}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace, config: RunConfig) -> int:
    """Step the configured setup and write its concentration trajectories."""
    setup = config.simulate
    network = config.network
    if len(setup.concentrations) > network.pool_capacity:
        network = network.with_capacity(len(setup.concentrations))
    try:
        net = ImmuneNetwork.from_matrices(
            network,
            setup.concentrations,
            setup.matching,
            setup.antigen_matching,
            setup.antigen_concentrations,
        )
    except ValueError as e:
        raise ConfigError(f"simulate: {e}") from e

    recorder = TrajectoryRecorder()
    run_steps(net, setup.steps, setup.mode, network, observer=recorder)

    out = Path(config.out)
    write_trajectory(out / "trajectory.csv", recorder.rows)
    print(f"{setup.steps} {setup.mode.value} steps written to {out}")
    return EXIT_OK


COMMANDS = {
    "recommend": cmd_recommend,
    "detect": cmd_detect,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
}


def _fail(error: Exception, code: int) -> int:
    print(f"Error: {error}", file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    args, overrides = parse_arguments(argv)
    configure_logging(args.verbose, args.quiet)

    try:
        config = resolve_config(args, overrides)
        return COMMANDS[args.command](args, config)
    except ConfigError as e:
        return _fail(e, EXIT_CONFIG)
    except ParseError as e:
        return _fail(e, EXIT_PARSE)
    except (MissingInputError, FileNotFoundError) as e:
        return _fail(e, EXIT_MISSING)
    except (
        DetectorGenerationError,
        PromotionError,
        ProfileError,
        PatternMismatchError,
        PoolFullError,
        ValueError,
    ) as e:
        logger.debug("Algorithm failure", exc_info=True)
        return _fail(e, EXIT_ALGORITHM)


if __name__ == "__main__":
    sys.exit(main())
