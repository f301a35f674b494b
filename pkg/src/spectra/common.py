from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, Optional, Tuple, Type
from argparse import ArgumentParser, ArgumentDefaultsHelpFormatter
from pathlib import Path
import logging
import sys

from .config import RunConfig
from .pipeline import run_pipeline
from .workers import thread_count


PACKAGE_LOGGER = "spectra"


class Tool(ABC):
    """Tools base class.

    ``argparse`` is done in the constructor, CLI arguments should be passed there.
    """

    LOGGER_NAME: Optional[str] = None

    def __init__(self, *args):
        """Pass e.g. ``sys.args[1:]`` (skipping the script part of the arguments).

        :param args: See :meth:`set_arguments`
        """
        self.args = self.get_argument_parser().parse_args(args)
        self.logger = self.get_logger()

    @classmethod
    def get_argument_parser(cls) -> ArgumentParser:
        parser = ArgumentParser(formatter_class=ArgumentDefaultsHelpFormatter)
        cls.set_arguments(parser)
        return parser

    @classmethod
    def set_arguments(cls, parser):
        """Create application-specific arguments."""
        parser.add_argument(
            "--dry",
            help="Compute and log, but do not write any output",
            action="store_true",
            default=False,
        )
        parser.add_argument(
            "--log-level",
            "-l",
            choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
            help="Set log level to change verbosity",
            default="INFO",
        )
        return parser

    @abstractmethod
    def run(self) -> int:
        """Main tool execution."""

    def get_logger(self):
        """Get logger for this class.

        Logs go to stderr, stdout is reserved for the CSV or JSON output.
        """
        logging.basicConfig(stream=sys.stderr)
        logger = logging.getLogger(self.LOGGER_NAME or __name__)
        if "log_level" in self.args and self.args.log_level:
            level = logging.getLevelName(self.args.log_level)
            logger.setLevel(level)
            logging.getLogger(PACKAGE_LOGGER).setLevel(level)

        return logger


class SpectraTool(Tool, ABC):
    """Base class for tools that evaluate a model file.

    Subclasses name their pipeline command and translate their own arguments into
    :class:`RunConfig` parameters.
    """

    COMMAND: str = ""
    DEFAULT_FORMAT = "json"
    CONFIG_REQUIRED = True

    @classmethod
    def set_arguments(cls, parser):
        super().set_arguments(parser)

        parser.add_argument(
            "--config",
            "-c",
            help="Model file (TOML) with the `[system]` and `[cocycle]` sections",
            required=cls.CONFIG_REQUIRED,
            default=None,
        )
        parser.add_argument(
            "--output",
            "-o",
            help="File to write the result to (default: stdout)",
            default=None,
        )
        parser.add_argument(
            "--format",
            help="Output format",
            choices=["csv", "json"],
            default=cls.DEFAULT_FORMAT,
        )
        parser.add_argument(
            "--seed",
            help="Seed for every random choice, recorded in the report",
            type=int,
            default=0,
        )
        return parser

    @abstractmethod
    def parameters(self) -> Dict[str, Any]:
        """Command parameters from the parsed arguments."""

    def tolerances(self) -> Dict[str, Any]:
        return {}

    def budgets(self) -> Dict[str, int]:
        return {}

    def run_config(self) -> RunConfig:
        return RunConfig(
            command=self.COMMAND,
            config_path=Path(self.args.config) if self.args.config else None,
            seed=self.args.seed,
            threads=thread_count(),
            tolerances=self.tolerances(),
            budgets=self.budgets(),
            parameters=self.parameters(),
            output=Path(self.args.output) if self.args.output else None,
            output_format=self.args.format,
        )

    def run(self) -> int:
        try:
            cfg = self.run_config()
        except ValueError as err:
            self.logger.error(str(err))
            return 2

        result = run_pipeline(cfg)
        if result.error:
            self.logger.error(result.error)
            return result.exit_code

        for check in result.checks:
            if not check.passed:
                self.logger.warning(f"Check `{check.name}` failed: {check.detail}")

        if self.args.dry:
            self.logger.info("Dry run, no output written")
        elif cfg.output is None:
            sys.stdout.write(result.output)
        else:
            with open(cfg.output, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(result.output)
            self.logger.info(f"Wrote {cfg.output_format.upper()} to `{cfg.output}`")

        return result.exit_code


def entry_points(
    tool_class: Type[Tool],
) -> Tuple[Callable[..., int], Callable[[], None], Callable[[], ArgumentParser]]:
    """``main``, ``main_argv`` and ``get_parser`` for the module of one tool."""

    def main(*args) -> int:
        tool = tool_class(*args)
        return tool.run()

    def main_argv():
        """Entrypoint for the executable, defined through ``pyproject.toml``."""
        exit(main(*sys.argv[1:]))

    def get_parser() -> ArgumentParser:
        return tool_class.get_argument_parser()

    return main, main_argv, get_parser
