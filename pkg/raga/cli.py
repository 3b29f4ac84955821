"""
`python -m raga <subcommand> [flags]`: one entry point over the management
commands, returning 0 on success, 1 on usage errors and 2 on data errors.
"""
from __future__ import annotations

import sys

from django.core.management import call_command
from django.core.management.base import CommandError

SUBCOMMANDS = ("extract", "train", "predict", "evaluate", "sweep", "analyze", "synth")

USAGE = (
    "usage: python -m raga {" + ",".join(SUBCOMMANDS) + "} [options]\n"
    "       python -m raga <subcommand> --help for the options of one subcommand\n"
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


def run(argv, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    if not argv or argv[0] not in SUBCOMMANDS:
        if argv:
            stderr.write(f"unknown subcommand {argv[0]!r}\n")
        stderr.write(USAGE)
        return EXIT_USAGE

    name, rest = argv[0], list(argv[1:])
    try:
        call_command(name, *rest, stdout=stdout, stderr=stderr)
    except CommandError as exc:
        stderr.write(f"{name}: {exc}\n")
        return exc.returncode
    except SystemExit as exc:
        # argparse --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return EXIT_OK
