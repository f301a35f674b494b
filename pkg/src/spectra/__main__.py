"""``spectra <subcommand> [args]`` dispatcher."""

from typing import Callable, Dict
import argparse
import sys

from .tools import (
    build_set,
    entropy,
    oracle,
    pressure,
    schedule,
    skeleton,
    spectrum,
    verify,
)

SUBCOMMANDS: Dict[str, Callable[..., int]] = {
    "pressure": pressure.main,
    "spectrum": spectrum.main,
    "skeleton": skeleton.main,
    "schedule": schedule.main,
    "build-set": build_set.main,
    "verify": verify.main,
    "entropy": entropy.main,
    "oracle": oracle.main,
}


def get_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectra",
        description="Entropy spectra of center exponents on symbolic models. Run "
        "`spectra <subcommand> --help` for the options of a subcommand.",
    )
    parser.add_argument("subcommand", choices=list(SUBCOMMANDS))
    return parser


def main(*args) -> int:
    if not args or args[0] not in SUBCOMMANDS:
        get_parser().print_help(sys.stderr)
        return 2
    return SUBCOMMANDS[args[0]](*args[1:])


def main_argv():
    """Entrypoint for the executable, defined through ``pyproject.toml``."""
    exit(main(*sys.argv[1:]))


if __name__ == "__main__":
    exit_code = main(*sys.argv[1:])  # Skip script name
    exit(exit_code)
