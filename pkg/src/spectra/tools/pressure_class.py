from typing import Any, Dict

from ..common import SpectraTool
from ..pipeline import parse_range


class PressureTool(SpectraTool):
    """Tool to tabulate the pressure function ``q -> P(q)``."""

    LOGGER_NAME = "spectra.pressure"
    COMMAND = "pressure"
    DEFAULT_FORMAT = "csv"

    @classmethod
    def set_arguments(cls, parser):
        super().set_arguments(parser)

        parser.prog = "spectra pressure"
        parser.description = (
            "Pressure of q times the cocycle on an evenly spaced q-grid, over all "
            "invariant measures or over those with exponents of one sign."
        )
        parser.epilog = "Example: ``spectra pressure --config be.toml --q-steps 401``"
        parser.add_argument("--q-min", type=float, default=-20.0, help="First q")
        parser.add_argument("--q-max", type=float, default=20.0, help="Last q")
        parser.add_argument(
            "--q-steps", type=int, default=401, help="Number of grid points"
        )
        parser.add_argument(
            "--restrict",
            choices=["none", "neg", "pos"],
            default="none",
            help="Only measures with negative or positive exponent",
        )
        parser.add_argument(
            "--exhaust",
            default=None,
            help="Block lengths of the approximating subshifts to report, e.g. `2:8:2`",
        )
        return parser

    def parameters(self) -> Dict[str, Any]:
        return {
            "q_min": self.args.q_min,
            "q_max": self.args.q_max,
            "q_steps": self.args.q_steps,
            "restrict": self.args.restrict,
            "exhaust": parse_range(self.args.exhaust) if self.args.exhaust else None,
        }