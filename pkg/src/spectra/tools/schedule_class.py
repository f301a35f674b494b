from typing import Any, Dict

from ..common import SpectraTool
from ..pipeline import parse_floats


class ScheduleTool(SpectraTool):
    """Tool to choose block lengths and counts for every level of a tower."""

    LOGGER_NAME = "spectra.schedule"
    COMMAND = "schedule"

    @classmethod
    def set_arguments(cls, parser):
        super().set_arguments(parser)

        parser.prog = "spectra schedule"
        parser.description = (
            "Pick, level by level, the target exponent, block length and block count "
            "of the concatenation and check every inequality they must satisfy."
        )
        parser.epilog = (
            "Example: ``spectra schedule --config be.toml --levels 4 "
            "--eps 0.4,0.2,0.1,0.05``"
        )
        parser.add_argument("--levels", type=int, default=4, help="Number of levels K")
        parser.add_argument(
            "--eps",
            default="0.4,0.2,0.1,0.05",
            help="Strictly decreasing tolerances, one per level",
        )
        parser.add_argument(
            "--k0",
            type=float,
            default=None,
            help="Distortion constant (default: exp(depth * max|phi|))",
        )
        parser.add_argument(
            "--alpha-steps",
            type=int,
            default=201,
            help="Exponents on which the target exponents are chosen",
        )
        parser.add_argument(
            "--max-length",
            type=int,
            default=4096,
            help="Longest block considered",
        )
        return parser

    def parameters(self) -> Dict[str, Any]:
        return {
            "levels": self.args.levels,
            "eps": parse_floats(self.args.eps),
            "k0": self.args.k0,
            "alpha_steps": self.args.alpha_steps,
            "max_length": self.args.max_length,
        }

    def tolerances(self) -> Dict[str, Any]:
        return {"eps": parse_floats(self.args.eps)}

    def budgets(self) -> Dict[str, int]:
        return {"max_length": self.args.max_length}
