"""
Configuration for these tests.
"""

import math
from pathlib import Path
from typing import Iterable

import pytest

from spectra.concatenation import (
    Schedule,
    ScheduleLevel,
    build_tower,
    level_skeletons,
)
from spectra.config import load_config
from spectra.report import CheckResult
from spectra.skeleton import default_k0, extract_preskeleton
from spectra.symbolic import CenterCocycle, SymbolicSystem

REFERENCE_TOML = """\
# Full 2-shift with center log-derivative log(1/4) on symbol 0 and log(2) on 1
[system]
alphabet_size = 2

[cocycle]
depth = 1
values = { "0" = "log(1/4)", "1" = "log(2)" }
"""

GOLDEN_MEAN_TOML = """\
[system]
alphabet_size = 2
forbidden = ["11"]

[cocycle]
depth = 1
values = [-1.0, 0.5]
"""

SYMMETRIC_TOML = """\
[system]
alphabet_size = 2

[cocycle]
values = [-1, 1]
"""


@pytest.fixture
def full_shift():
    return SymbolicSystem.full_shift(2)


@pytest.fixture
def golden_mean():
    """Two symbols, ``11`` forbidden."""
    return SymbolicSystem.from_forbidden_words(2, ["11"])


@pytest.fixture
def reference_cocycle(full_shift):
    """``log 1/4`` on symbol 0 and ``log 2`` on symbol 1."""
    return CenterCocycle.from_symbol_values(full_shift, [math.log(0.25), math.log(2)])


@pytest.fixture
def symmetric_cocycle(full_shift):
    """``-1`` and ``+1``: both signs, zero in the middle of the range."""
    return CenterCocycle.from_symbol_values(full_shift, [-1.0, 1.0])


@pytest.fixture
def golden_cocycle(golden_mean):
    return CenterCocycle.from_symbol_values(golden_mean, [-1.0, 0.5])


def write_config(directory: Path, text: str, name: str = "model.toml") -> Path:
    """Write a model file into ``directory`` and return its path."""
    path = directory / name
    path.write_text(text)
    return path


@pytest.fixture
def reference_config(tmp_path):
    """Path of the reference model file in a temporary directory."""
    yield write_config(tmp_path, REFERENCE_TOML, "reference.toml")


@pytest.fixture
def golden_config(tmp_path):
    yield write_config(tmp_path, GOLDEN_MEAN_TOML, "golden.toml")


@pytest.fixture
def symmetric_config(tmp_path):
    yield write_config(tmp_path, SYMMETRIC_TOML, "symmetric.toml")


@pytest.fixture
def reference_model(reference_config):
    return load_config(reference_config)


def assert_checks_pass(checks: Iterable[CheckResult]):
    """Assert every check passed, naming the ones that did not."""
    failed = [check.name for check in checks if not check.passed]
    assert failed == [], f"Failed checks: {failed}"


def check_named(checks: Iterable[CheckResult], prefix: str) -> CheckResult:
    """The single check whose name starts with ``prefix``."""
    matches = [check for check in checks if check.name.startswith(prefix)]
    assert len(matches) == 1, f"Expected one `{prefix}` check, got {len(matches)}"
    return matches[0]


@pytest.fixture
def signed_golden_cocycle(golden_mean):
    """``+0.5`` on symbol 0 and ``-1`` on symbol 1, exponent 0 inside the range."""
    return CenterCocycle.from_symbol_values(golden_mean, [0.5, -1.0])


def manual_schedule(system, cocycle, shape, chi=0.0, eps_e=0.3) -> Schedule:
    """Schedule with the given ``(n, N)`` per level, no inequality enforced.

    Lets tower mechanics be tested on towers small enough to enumerate.
    """
    log_k = math.log(default_k0(cocycle))
    levels = []
    for k, (n, blocks) in enumerate(shape, start=1):
        skeleton = extract_preskeleton(system, cocycle, chi, eps_e, 0.5, 0.0, n)
        levels.append(
            ScheduleLevel(
                k=k,
                eps=0.5 / k,
                chi=chi,
                h=0.0,
                eps_e=eps_e,
                log_k=log_k,
                n=n,
                N=blocks,
                ell=system.bridge_length,
                m=system.bridge_length,
                ell_flat=0,
                b_sharp=1,
                t_sharp=1,
                skeleton_count=skeleton.count,
            )
        )
    return Schedule(tuple(levels), cocycle.c_max, system.bridge_length, h_zero=0.0)


@pytest.fixture
def small_schedule(golden_mean, signed_golden_cocycle):
    """Two levels on the golden mean shift: two 4-blocks, then two 3-blocks."""
    return manual_schedule(golden_mean, signed_golden_cocycle, [(4, 2), (3, 2)])


@pytest.fixture
def small_tower(golden_mean, signed_golden_cocycle, small_schedule):
    """Every member of the two-level tower."""
    skeletons = level_skeletons(golden_mean, signed_golden_cocycle, small_schedule)
    return build_tower(golden_mean, signed_golden_cocycle, small_schedule, skeletons)
