from typing import Any, Dict

from ..common import SpectraTool


class VerifyTool(SpectraTool):
    """Tool to audit cylinder masses of a tower and issue an entropy certificate."""

    LOGGER_NAME = "spectra.verify"
    COMMAND = "verify"

    @classmethod
    def set_arguments(cls, parser):
        super().set_arguments(parser)

        parser.prog = "spectra verify"
        parser.description = (
            "Rebuild a tower from a `build-set` report, bound the mass of every "
            "cylinder by exp(-n (h - theta)) and certify entropy >= h - theta."
        )
        parser.epilog = (
            "Example: ``spectra verify --config be.toml --tower tower.json "
            "--theta 0.05``"
        )
        parser.add_argument(
            "--tower", required=True, help="JSON report written by `build-set`"
        )
        slack = parser.add_mutually_exclusive_group()
        slack.add_argument("--theta", type=float, default=None, help="Entropy slack")
        slack.add_argument(
            "--eps-prime",
            type=float,
            default=0.01,
            help="Derive the slack from eps' when `--theta` is not given",
        )
        parser.add_argument(
            "--agreement",
            type=float,
            default=0.05,
            help="Largest gap allowed between the separated estimate and the bound",
        )
        parser.add_argument(
            "--n-range",
            default=None,
            help="Ball orders to audit as `start:stop[:step]` (default: 64 orders "
            "across the tower)",
        )
        parser.add_argument(
            "--budget",
            type=float,
            default=1e6,
            help="Largest number of members to hold without sampling",
        )
        return parser

    def parameters(self) -> Dict[str, Any]:
        return {
            "tower": self.args.tower,
            "theta": self.args.theta,
            "eps_prime": self.args.eps_prime,
            "n_range": self.args.n_range,
        }

    def tolerances(self) -> Dict[str, Any]:
        tolerances = {"agreement": self.args.agreement}
        if self.args.theta is not None:
            tolerances["theta"] = self.args.theta
        else:
            tolerances["eps_prime"] = self.args.eps_prime
        return tolerances

    def budgets(self) -> Dict[str, int]:
        return {"tower": int(self.args.budget)}
