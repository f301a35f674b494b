from typing import Any, Dict

from ..common import SpectraTool
from ..pipeline import parse_floats


class OracleTool(SpectraTool):
    """Tool for the closed-form spectrum and pressure of Bernoulli models."""

    LOGGER_NAME = "spectra.oracle"
    COMMAND = "oracle"
    DEFAULT_FORMAT = "csv"

    @classmethod
    def set_arguments(cls, parser):
        super().set_arguments(parser)

        parser.prog = "spectra oracle"
        parser.description = (
            "Exact spectrum and pressure of a depth-one cocycle on a full shift. "
            "Other models are refused."
        )
        parser.epilog = "Example: ``spectra oracle --config be.toml --alpha 0``"
        parser.add_argument(
            "--alpha", default=None, help="Comma separated exponents (default: a grid)"
        )
        parser.add_argument(
            "--alpha-steps", type=int, default=101, help="Size of the default grid"
        )
        parser.add_argument(
            "--q", default="0", help="Comma separated q values for the pressure"
        )
        return parser

    def parameters(self) -> Dict[str, Any]:
        return {
            "alphas": parse_floats(self.args.alpha) if self.args.alpha else None,
            "alpha_steps": self.args.alpha_steps,
            "q": parse_floats(self.args.q),
        }
