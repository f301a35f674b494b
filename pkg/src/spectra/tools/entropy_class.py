from typing import Any, Dict

from ..common import SpectraTool


class EntropyTool(SpectraTool):
    """Tool to estimate the entropy of a word list, a system or a tower support."""

    LOGGER_NAME = "spectra.entropy"
    COMMAND = "entropy"
    CONFIG_REQUIRED = False

    @classmethod
    def set_arguments(cls, parser):
        super().set_arguments(parser)

        parser.prog = "spectra entropy"
        parser.description = (
            "Growth rate of separated (or spanning) counts at resolution 2^-j. The "
            "words come from `--input`, or from `--tower`, or are all words of the "
            "`--config` system."
        )
        parser.epilog = "Example: ``spectra entropy --input words.txt --n 10:100``"
        parser.add_argument(
            "--input", "-i", default=None, help="Text file with one word per line"
        )
        parser.add_argument(
            "--tower", default=None, help="JSON report written by `build-set`"
        )
        parser.add_argument(
            "--n", default="10:100", help="Orders as `start:stop[:step]` or a list"
        )
        parser.add_argument("--res", type=int, default=0, help="Resolution depth j")
        parser.add_argument(
            "--method",
            choices=["separated", "spanning", "cover_cost"],
            default="separated",
            help="Counting method",
        )
        parser.add_argument(
            "--budget",
            type=float,
            default=1e6,
            help="Largest number of tower members to hold without sampling",
        )
        return parser

    def parameters(self) -> Dict[str, Any]:
        return {
            "input": self.args.input,
            "tower": self.args.tower,
            "n": self.args.n,
            "res": self.args.res,
            "method": self.args.method,
        }

    def budgets(self) -> Dict[str, int]:
        return {"tower": int(self.args.budget)}
