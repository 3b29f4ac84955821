from __future__ import annotations

import argparse

from django.core.management.base import BaseCommand, CommandError
from django.db import DatabaseError

from raga.config import RunConfig, parse_features, resolve_run_config
from raga.exceptions import ConfigError, DataError, InsufficientTrainingError

RUN_FLAGS = (
    "r", "k", "metric", "features", "ref_freq", "conf_threshold",
    "max_seconds", "cache_dir", "jobs",
)
METRIC_CHOICES = ["db", "l1", "bhattacharyya", "manhattan"]


# argparse types: a bad value is a usage error, reported before anything runs

def positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return n


def positive_float(value: str) -> float:
    x = float(value)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return x


def non_negative_float(value: str) -> float:
    x = float(value)
    if not x >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return x


def job_count(value: str) -> int:
    n = int(value)
    if n == 0 or n < -1:
        raise argparse.ArgumentTypeError(f"must be >= 1 or -1 for all cores, got {value}")
    return n


def feature_list(value: str) -> tuple[str, ...]:
    try:
        return parse_features(value)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def add_config_argument(parser) -> None:
    parser.add_argument("--config", default=None, help="key = value file; flags override it")


def add_run_arguments(parser) -> None:
    add_config_argument(parser)
    parser.add_argument("--r", type=int, choices=range(5), default=None, help="Relaxation in bins (0-4, default 4)")
    parser.add_argument("--k", type=positive_int, default=None, help="Neighbours per KNN model (default 5)")
    parser.add_argument("--metric", choices=METRIC_CHOICES, default=None, help="db (Bhattacharyya) or l1")
    parser.add_argument("--features", type=feature_list, default=None, help="all, u, pd, or a comma list such as v1_4,v2_0")
    parser.add_argument("--ref-freq", type=positive_float, default=None, help="Hz of grid bin 0 (default C2)")
    parser.add_argument("--conf-threshold", type=non_negative_float, default=None)
    parser.add_argument("--max-seconds", type=positive_float, default=None, help="Crop every pitch track to this length")
    parser.add_argument("--cache-dir", default=None)
    parser.add_argument("--jobs", type=job_count, default=None)


class SpdCommand(BaseCommand):
    """Base for the pipeline commands: shared run flags and data-error exit codes."""

    run_options = True

    def add_arguments(self, parser):
        if self.run_options:
            add_run_arguments(parser)
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def resolve_config(self, options, flags=RUN_FLAGS) -> RunConfig:
        return resolve_run_config({key: options.get(key) for key in flags}, options.get("config"))

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        except (DataError, OSError, InsufficientTrainingError) as exc:
            raise CommandError(str(exc), returncode=2) from exc
        except DatabaseError as exc:
            raise CommandError(f"database error ({exc}); run `manage.py migrate` first", returncode=2) from exc

    def report_warnings(self, warnings) -> None:
        for w in warnings:
            self.stderr.write(self.style.WARNING(f"warning: {w}"))
