"""Entropy spectrum as the Legendre-Fenchel transform of the pressure.

``H(alpha) = inf_q (P(q) - q alpha)`` is taken over the q-grid first and then refined
between the neighbours of the grid minimizer by golden-section search on the exact
pressure.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import BudgetExceededError, DomainError
from .lattice import DEFAULT_STATE_BUDGET, WINDOW_TOLERANCE, count_accepted
from .oracle import BernoulliOracle
from .pressure import PressureCurve
from .report import CheckResult
from .symbolic import CenterCocycle, SymbolicSystem, DEFAULT_ENUMERATION_BUDGET

SLOPE_TOLERANCE = 1e-6
REFINEMENT_ROUNDS = 3
ZERO_OFFSET = 1e-6
CONCAVITY_TOLERANCE = 1e-9
ORACLE_TOLERANCE = 1e-4

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SpectrumCurve:
    """Entropy spectrum on the part of an exponent grid where it is defined."""

    alpha_grid: np.ndarray
    values: np.ndarray
    domain: Tuple[float, float]

    def at(self, alpha: float) -> float:
        """Linear interpolation between grid points."""
        low, high = self.domain
        if not low - SLOPE_TOLERANCE <= alpha <= high + SLOPE_TOLERANCE:
            raise DomainError(f"Exponent {alpha} is outside [{low}, {high}]")
        return float(np.interp(alpha, self.alpha_grid, self.values))

    def rows(self) -> List[Tuple[float, float]]:
        return [(float(a), float(h)) for a, h in zip(self.alpha_grid, self.values)]


@dataclass(frozen=True)
class ZeroExponentEntropies:
    """Spectrum next to and at the zero exponent."""

    negative: float
    positive: float
    zero: Optional[float]


def _refine(curve: PressureCurve, alpha: float, grid: np.ndarray, i: int, best: float):
    def objective(q: float) -> float:
        return curve.evaluate(q) - q * alpha

    low, middle, high = grid[i - 1], grid[i], grid[i + 1]
    for _ in range(REFINEMENT_ROUNDS):
        try:
            result = minimize_scalar(
                objective,
                bracket=(low, middle, high),
                method="golden",
                tol=1e-10,
            )
        except ValueError:  # not a bracket any more, the grid value stands
            break
        if not result.fun < best:
            break
        best = float(result.fun)
        width = (high - low) / 20.0
        middle = float(result.x)
        low, high = middle - width, middle + width
    return best


def lf_transform(
    curve: PressureCurve, alpha: float, refine: bool = True
) -> Optional[float]:
    """``inf_q (P(q) - q alpha)``, or ``None`` outside the range of end slopes."""
    alpha_min, alpha_max = curve.asymptotic_slopes
    if alpha < alpha_min - SLOPE_TOLERANCE or alpha > alpha_max + SLOPE_TOLERANCE:
        return None

    grid = curve.q_grid
    scores = curve.values - grid * alpha
    i = int(np.argmin(scores))
    best = float(scores[i])
    if refine and curve.evaluate is not None and 0 < i < len(grid) - 1:
        best = _refine(curve, alpha, grid, i, best)
    return best


def alpha_grid(curve: PressureCurve, steps: int) -> np.ndarray:
    """Evenly spaced exponents across the domain of the transform."""
    low, high = curve.asymptotic_slopes
    if steps < 1:
        raise ValueError(f"Number of exponents must be positive, got {steps}")
    if steps == 1 or high - low <= SLOPE_TOLERANCE:
        return np.array([0.5 * (low + high)])
    return np.linspace(low, high, steps)


def spectrum(
    curve: PressureCurve, grid: Union[int, Sequence[float]]
) -> SpectrumCurve:
    """Spectrum on ``grid``, or on that many evenly spaced exponents.

    Grid points outside the domain are dropped.
    """
    alphas = alpha_grid(curve, grid) if isinstance(grid, int) else np.asarray(grid)
    kept, values = [], []
    for alpha in alphas:
        value = lf_transform(curve, float(alpha))
        if value is not None:
            kept.append(float(alpha))
            values.append(value)
    if not kept:
        raise DomainError(
            f"No exponent of the grid lies in [{curve.alpha_min}, {curve.alpha_max}]"
        )
    if len(kept) < len(alphas):
        logger.debug(f"Dropped {len(alphas) - len(kept)} exponents outside the domain")
    return SpectrumCurve(np.array(kept), np.array(values), curve.asymptotic_slopes)


def zero_exponent_entropies(curve: PressureCurve) -> ZeroExponentEntropies:
    """One-sided limits of the spectrum at zero, and its value there if defined."""
    negative = lf_transform(curve, -ZERO_OFFSET)
    positive = lf_transform(curve, ZERO_OFFSET)
    if negative is None and positive is None:
        raise DomainError("Zero is not in the closure of the exponent domain")
    return ZeroExponentEntropies(
        negative=-math.inf if negative is None else negative,
        positive=-math.inf if positive is None else positive,
        zero=lf_transform(curve, 0.0),
    )


def spectrum_brute_force(
    system: SymbolicSystem,
    cocycle: CenterCocycle,
    alpha: float,
    window: float,
    n: int,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> float:
    """``(1/n) log #{w : |S_n(w)/n - alpha| <= window}`` over admissible ``n``-words.

    Counted exactly through the lattice of value counts, falling back to explicit
    enumeration when the lattice is too large. Returns ``-inf`` when no word fits.
    """
    if n < 1:
        raise ValueError(f"Word length must be positive, got {n}")
    if window < 0:
        raise ValueError(f"Window must be non-negative, got {window}")

    def accept(total: float) -> bool:
        return abs(total / n - alpha) <= window + WINDOW_TOLERANCE

    try:
        count = count_accepted(system, cocycle, n, accept, state_budget)
    except BudgetExceededError:
        logger.info(f"Lattice too large for n={n}, enumerating words")
        count = 0
        for word in system.enumerate_words(n, budget):
            terms = cocycle.prefix_sums(np.array(word))
            count += accept(float(terms[-1]))
    return math.log(count) / n if count else -math.inf


def check_spectrum_properties(
    result: SpectrumCurve,
    curve: PressureCurve,
    tolerance: float = 1e-8,
    concavity_tolerance: float = CONCAVITY_TOLERANCE,
    oracle: Optional[BernoulliOracle] = None,
    oracle_tolerance: float = ORACLE_TOLERANCE,
) -> List[CheckResult]:
    """Concavity, contiguous domain, bounds and the maximum at ``P(0)``.

    With an ``oracle`` the values are also compared with its closed form.
    """
    checks = []
    alphas, values = result.alpha_grid, result.values

    if len(alphas) > 2:
        steps = np.diff(alphas)
        slopes = np.diff(values) / steps
        second = (slopes[1:] - slopes[:-1]) * 0.5 * (steps[1:] + steps[:-1])
        worst = float(np.max(second, initial=0.0))
    else:
        worst = 0.0
    checks.append(
        CheckResult(
            "concavity",
            worst <= concavity_tolerance,
            f"second differences <= {concavity_tolerance}",
            {"worst": worst},
        )
    )

    low, high = result.domain
    inside = bool(
        np.all((alphas >= low - SLOPE_TOLERANCE) & (alphas <= high + SLOPE_TOLERANCE))
    )
    sampled = np.concatenate([np.linspace(low, high, max(len(alphas), 2)), alphas])
    sampled = sampled[(sampled >= low) & (sampled <= high)]
    holes = [
        float(alpha)
        for alpha in sampled
        if lf_transform(curve, float(alpha), refine=False) is None
    ]
    same_domain = np.allclose(result.domain, curve.asymptotic_slopes, atol=1e-12)
    contiguous = bool(inside and not holes and same_domain)
    checks.append(
        CheckResult(
            "contiguous-domain",
            contiguous and bool(np.all(np.isfinite(values))),
            "defined and finite on all of [alpha_min, alpha_max]",
            {"holes": holes[:10], "domain": list(result.domain)},
        )
    )

    top = curve.at(0.0)
    derivative = (curve.at(1e-5) - curve.at(-1e-5)) / 2e-5
    peak = lf_transform(curve, derivative)
    maximum = max(float(values.max()), -math.inf if peak is None else peak)
    checks.append(
        CheckResult(
            "maximum-is-entropy",
            abs(maximum - top) <= tolerance,
            "max H equals P(0)",
            {"max": maximum, "pressure_at_zero": top, "argmax": derivative},
        )
    )

    bounded = bool(np.all(values >= -tolerance) and np.all(values <= top + tolerance))
    checks.append(CheckResult("bounds", bounded, "0 <= H <= P(0)"))

    if oracle is not None:
        worst = 0.0
        for alpha, value in result.rows():
            expected = oracle.spectrum(alpha)
            worst = max(worst, math.inf if expected is None else abs(value - expected))
        checks.append(
            CheckResult(
                "oracle",
                worst <= oracle_tolerance,
                f"max |H - H_oracle| <= {oracle_tolerance}",
                {"max_diff": worst},
            )
        )
    return checks
