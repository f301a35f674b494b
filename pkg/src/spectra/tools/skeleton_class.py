from typing import Any, Dict

from ..common import SpectraTool


class SkeletonTool(SpectraTool):
    """Tool to extract and certify the words of one exponent window."""

    LOGGER_NAME = "spectra.skeleton"
    COMMAND = "skeleton"

    @classmethod
    def set_arguments(cls, parser):
        super().set_arguments(parser)

        parser.prog = "spectra skeleton"
        parser.description = (
            "Count the words of length m whose every prefix keeps its Birkhoff sum "
            "within log K0 + l eps_E of l alpha, and certify their growth rate."
        )
        parser.epilog = (
            "Example: ``spectra skeleton --config be.toml --alpha 0 --eps-e 0.1 "
            "--m 200``"
        )
        parser.add_argument("--alpha", type=float, required=True, help="Exponent")
        parser.add_argument(
            "--eps-e", "--epsE", type=float, default=0.1, help="Window half-width"
        )
        parser.add_argument(
            "--eps-h",
            type=float,
            default=0.05,
            help="Accepted entropy loss against H(alpha)",
        )
        parser.add_argument("--m", type=int, default=200, help="Word length")
        parser.add_argument("--res", type=int, default=0, help="Resolution depth j")
        parser.add_argument(
            "--k0",
            type=float,
            default=None,
            help="Distortion constant (default: exp(depth * max|phi|))",
        )
        parser.add_argument(
            "--method",
            choices=["lattice", "enumerate"],
            default="lattice",
            help="Count on the prefix lattice or list every word",
        )
        parser.add_argument(
            "--words",
            action="store_true",
            default=False,
            help="Output the words themselves (use with `--format csv`)",
        )
        return parser

    def parameters(self) -> Dict[str, Any]:
        return {
            "alpha": self.args.alpha,
            "eps_e": self.args.eps_e,
            "eps_h": self.args.eps_h,
            "m": self.args.m,
            "res": self.args.res,
            "k0": self.args.k0,
            "method": self.args.method,
            "words": self.args.words,
        }

    def tolerances(self) -> Dict[str, Any]:
        return {"eps_h": self.args.eps_h}
