from typing import Any, Dict

from ..common import SpectraTool
from ..pipeline import parse_floats


class SpectrumTool(SpectraTool):
    """Tool to tabulate the entropy spectrum ``alpha -> H(alpha)``."""

    LOGGER_NAME = "spectra.spectrum"
    COMMAND = "spectrum"
    DEFAULT_FORMAT = "csv"

    @classmethod
    def set_arguments(cls, parser):
        super().set_arguments(parser)

        parser.prog = "spectra spectrum"
        parser.description = (
            "Entropy spectrum as the Legendre-Fenchel transform of the pressure, on "
            "evenly spaced exponents across its domain."
        )
        parser.epilog = "Example: ``spectra spectrum --config be.toml --oracle``"
        parser.add_argument(
            "--alpha-steps", type=int, default=101, help="Number of exponents"
        )
        parser.add_argument(
            "--oracle",
            action="store_true",
            default=False,
            help="Add the closed-form values and their difference (full shifts with "
            "a depth-one cocycle only)",
        )
        parser.add_argument(
            "--oracle-tolerance",
            type=float,
            default=1e-4,
            help="Largest accepted difference with the closed form",
        )
        parser.add_argument(
            "--brute-n",
            type=int,
            default=None,
            help="Also count words of this length exactly and compare",
        )
        parser.add_argument(
            "--brute-alphas",
            default="-0.8,-0.4,0,0.3,0.6",
            help="Exponents for the exact word counts",
        )
        parser.add_argument(
            "--brute-window",
            type=float,
            default=0.05,
            help="Window around each exponent",
        )
        parser.add_argument(
            "--brute-tolerance",
            type=float,
            default=0.02,
            help="Largest accepted difference of the exact counts",
        )
        return parser

    def parameters(self) -> Dict[str, Any]:
        return {
            "alpha_steps": self.args.alpha_steps,
            "oracle": self.args.oracle,
            "oracle_tolerance": self.args.oracle_tolerance,
            "brute_n": self.args.brute_n,
            "brute_alphas": parse_floats(self.args.brute_alphas),
            "brute_window": self.args.brute_window,
            "brute_tolerance": self.args.brute_tolerance,
        }

    def tolerances(self) -> Dict[str, Any]:
        return {
            "oracle": self.args.oracle_tolerance,
            "brute_window": self.args.brute_window,
            "brute": self.args.brute_tolerance,
        }
