from typing import Any, Dict

from .schedule_class import ScheduleTool


class BuildSetTool(ScheduleTool):
    """Tool to build the tower of concatenated skeleton words and check it.

    The JSON report holds the tower description read back by ``verify --tower``.
    """

    LOGGER_NAME = "spectra.build_set"
    COMMAND = "build-set"

    @classmethod
    def set_arguments(cls, parser):
        super().set_arguments(parser)

        parser.prog = "spectra build-set"
        parser.description = (
            "Build the nested word families of a schedule, check their cardinalities, "
            "nesting and separation, and bound the finite-time exponents of members."
        )
        parser.epilog = (
            "Example: ``spectra build-set --config be.toml --levels 4 "
            "--eps 0.4,0.2,0.1,0.05 --budget 1e6 -o tower.json``"
        )
        parser.add_argument(
            "--budget",
            type=float,
            default=1e6,
            help="Largest number of members to hold without sampling",
        )
        parser.add_argument(
            "--sample-size",
            type=int,
            default=128,
            help="Members drawn uniformly (with the seed) when the budget is exceeded",
        )
        parser.add_argument("--res", type=int, default=0, help="Resolution depth j")
        parser.add_argument(
            "--backward",
            action="store_true",
            default=False,
            help="Also extend the least member backwards in time",
        )
        return parser

    def parameters(self) -> Dict[str, Any]:
        parameters = super().parameters()
        parameters.update(
            sample_size=self.args.sample_size,
            res=self.args.res,
            backward=self.args.backward,
        )
        return parameters

    def budgets(self) -> Dict[str, int]:
        budgets = super().budgets()
        budgets["tower"] = int(self.args.budget)
        return budgets
