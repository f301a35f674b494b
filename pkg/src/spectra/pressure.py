"""Topological pressure of a cocycle, unrestricted and restricted by exponent sign.

The full pressure is the log of the leading eigenvalue of the transfer matrix on
admissible ``depth``-words, found by power iteration with Collatz-Wielandt brackets
carried out on log-weights.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .exceptions import ConvergenceError, EmptyClassError, NotPrimitiveError
from .report import CheckResult
from .symbolic import CenterCocycle, SymbolicSystem, Word
from .workers import parallel_map

POWER_TOLERANCE = 1e-12
MAX_ITERATIONS = 100_000
PLAIN_STEPS = 32
ALPHA_GAP = 1e-6
RESTRICTED_TOLERANCE = 1e-8
CONVEXITY_TOLERANCE = 1e-9

logger = logging.getLogger(__name__)


class Restriction(str, Enum):
    """Which ergodic measures the pressure may use."""

    NONE = "none"
    NEGATIVE = "negative"
    POSITIVE = "positive"

    @classmethod
    def parse(cls, value) -> "Restriction":
        if isinstance(value, Restriction):
            return value
        if value is None:
            return cls.NONE
        aliases = {"neg": cls.NEGATIVE, "pos": cls.POSITIVE}
        try:
            return aliases.get(value) or cls(value)
        except ValueError:
            raise ValueError(f"Unknown restriction `{value}`")


@dataclass(frozen=True, eq=False)
class PressureCurve:
    """Pressure sampled on an increasing grid of inverse temperatures.

    ``evaluate`` computes the same pressure at any ``q`` and is used to refine
    Legendre transforms between grid points.
    """

    q_grid: np.ndarray
    values: np.ndarray
    asymptotic_slopes: Tuple[float, float]
    restriction: Restriction = Restriction.NONE
    evaluate: Optional[Callable[[float], float]] = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self):
        if len(self.q_grid) != len(self.values):
            raise ValueError("Pressure grid and values differ in length")
        if len(self.q_grid) < 2:
            raise ValueError("Pressure curve needs at least two grid points")
        if np.any(np.diff(self.q_grid) <= 0):
            raise ValueError("Pressure grid must be strictly increasing")

    @property
    def alpha_min(self) -> float:
        return self.asymptotic_slopes[0]

    @property
    def alpha_max(self) -> float:
        return self.asymptotic_slopes[1]

    def at(self, q: float) -> float:
        """Pressure at ``q``, exact when an evaluator is attached."""
        if self.evaluate is not None:
            return self.evaluate(q)
        return float(np.interp(q, self.q_grid, self.values))

    def rows(self) -> List[Tuple[float, float]]:
        return [(float(q), float(p)) for q, p in zip(self.q_grid, self.values)]


def q_grid(q_min: float, q_max: float, steps: int) -> np.ndarray:
    if steps < 2:
        raise ValueError(f"A q-grid needs at least two points, got {steps}")
    if not q_min < q_max:
        raise ValueError(f"Empty q-range [{q_min}, {q_max}]")
    return np.linspace(q_min, q_max, steps)


def transfer_matrix(
    system: SymbolicSystem, cocycle: CenterCocycle, q: float
) -> np.ndarray:
    """Log-weights of the transfer matrix on admissible ``depth``-words.

    Forbidden transitions are ``-inf``, so weights far below the largest one never
    vanish.
    """
    words = cocycle.words
    index: Dict[Word, int] = {word: i for i, word in enumerate(words)}
    log_matrix = np.full((len(words), len(words)), -np.inf)
    for i, word in enumerate(words):
        weight = q * cocycle.table[word]
        for symbol in system.symbols:
            if not system.allowed(word[-1], symbol):
                continue
            if cocycle.depth == 1:
                target = (symbol,)
            else:
                target = word[1:] + (symbol,)
            log_matrix[i, index[target]] = weight
    return log_matrix


def log_spectral_radius(
    log_matrix: np.ndarray,
    tolerance: float = POWER_TOLERANCE,
    max_iterations: int = MAX_ITERATIONS,
) -> float:
    """Log of the leading eigenvalue of a primitive matrix given by its log-entries.

    The Collatz-Wielandt ratios ``min (Mx)_i / x_i`` and ``max (Mx)_i / x_i`` bracket
    the eigenvalue at every step, iteration stops once their logs agree. After
    ``PLAIN_STEPS`` steps each one applies ``M + cI`` instead, with ``c`` the current
    bracket midpoint. That keeps the Perron vector and damps eigenvalues close to
    ``-rho``.
    """
    if not np.all(np.isfinite(log_matrix).any(axis=1)):
        raise NotPrimitiveError("Transfer matrix has a zero row")
    log_vector = np.zeros(log_matrix.shape[0])
    for iteration in range(max_iterations):
        log_image = logsumexp(log_matrix + log_vector, axis=1)
        ratios = log_image - log_vector
        low, high = ratios.min(), ratios.max()
        middle = 0.5 * (low + high)
        if high - low <= tolerance:
            return float(middle)
        if iteration >= PLAIN_STEPS:
            log_image = np.logaddexp(log_image, middle + log_vector)
        log_vector = log_image - log_image.max()
    raise ConvergenceError(
        f"Power iteration did not reach relative tolerance {tolerance} "
        f"in {max_iterations} iterations"
    )


def spectral_radius(
    matrix: np.ndarray,
    tolerance: float = POWER_TOLERANCE,
    max_iterations: int = MAX_ITERATIONS,
) -> float:
    """Leading eigenvalue of a primitive non-negative matrix."""
    with np.errstate(divide="ignore"):
        log_matrix = np.log(np.asarray(matrix, dtype=float))
    return math.exp(log_spectral_radius(log_matrix, tolerance, max_iterations))


def pressure_full(system: SymbolicSystem, cocycle: CenterCocycle, q: float) -> float:
    """Pressure of ``q * phi`` over all invariant measures."""
    return log_spectral_radius(transfer_matrix(system, cocycle, q))


def _end_slopes(grid: np.ndarray, values: np.ndarray) -> Tuple[float, float]:
    low = (values[1] - values[0]) / (grid[1] - grid[0])
    high = (values[-1] - values[-2]) / (grid[-1] - grid[-2])
    return float(low), float(high)


def pressure_curve(
    system: SymbolicSystem,
    cocycle: CenterCocycle,
    grid: Sequence[float],
    restriction=Restriction.NONE,
    threads: Optional[int] = None,
) -> PressureCurve:
    """Pressure on every grid point, evaluated in parallel, in grid order."""
    restriction = Restriction.parse(restriction)
    grid = np.asarray(grid, dtype=float)

    if restriction is Restriction.NONE:

        def evaluate(q: float) -> float:
            return pressure_full(system, cocycle, q)

    else:
        restricted = RestrictedPressure(system, cocycle, restriction)
        evaluate = restricted

    values = np.array(parallel_map(evaluate, list(grid), threads))
    logger.info(
        f"Pressure ({restriction.value}) on {len(grid)} points "
        f"q in [{grid[0]}, {grid[-1]}]"
    )
    return PressureCurve(
        q_grid=grid,
        values=values,
        asymptotic_slopes=_end_slopes(grid, values),
        restriction=restriction,
        evaluate=evaluate,
    )


class RestrictedPressure:
    """Pressure over measures with exponent of one strict sign.

    Evaluated as ``sup (H(alpha) + q alpha)`` over the exponents of that sign, with
    ``H`` the Legendre transform of the full pressure. Spectrum values are cached,
    so evaluating many ``q`` reuses most of them.
    """

    coarse_points = 41

    def __init__(
        self,
        system: SymbolicSystem,
        cocycle: CenterCocycle,
        restriction: Restriction,
        full: Optional[PressureCurve] = None,
    ):
        from .legendre import lf_transform

        self.restriction = Restriction.parse(restriction)
        if self.restriction is Restriction.NONE:
            raise ValueError("Use the full pressure for unrestricted measures")
        self.full = full or pressure_curve(system, cocycle, q_grid(-50.0, 50.0, 1001))
        self._transform = lf_transform
        self._cache: Dict[float, float] = {}

        alpha_min, alpha_max = self.full.asymptotic_slopes
        if self.restriction is Restriction.NEGATIVE:
            if alpha_min >= 0:
                raise EmptyClassError("No invariant measure has a negative exponent")
            self.bounds = (alpha_min, min(alpha_max, -ALPHA_GAP))
        else:
            if alpha_max <= 0:
                raise EmptyClassError("No invariant measure has a positive exponent")
            self.bounds = (max(alpha_min, ALPHA_GAP), alpha_max)

    def spectrum(self, alpha: float) -> float:
        if alpha not in self._cache:
            value = self._transform(self.full, alpha)
            self._cache[alpha] = -math.inf if value is None else value
        return self._cache[alpha]

    def __call__(self, q: float) -> float:
        low, high = self.bounds
        alphas = np.linspace(low, high, self.coarse_points)
        scores = [self.spectrum(float(alpha)) + q * alpha for alpha in alphas]
        i = int(np.argmax(scores))
        best = float(scores[i])
        low = float(alphas[max(i - 1, 0)])
        high = float(alphas[min(i + 1, len(alphas) - 1)])
        if high > low:
            result = minimize_scalar(
                lambda alpha: -(self.spectrum(float(alpha)) + q * alpha),
                bounds=(low, high),
                method="bounded",
                options={"xatol": RESTRICTED_TOLERANCE},
            )
            best = max(best, float(-result.fun))
        return best


def pressure_restricted(
    system: SymbolicSystem, cocycle: CenterCocycle, q: float, sign
) -> float:
    """Pressure at ``q`` over measures with negative (or positive) exponent."""
    return RestrictedPressure(system, cocycle, Restriction.parse(sign))(q)


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Stationary Markov measure compatible with the transitions of ``system``."""

    system: SymbolicSystem
    matrix: np.ndarray
    stationary: np.ndarray

    def __post_init__(self):
        matrix = self.matrix
        k = self.system.alphabet_size
        if matrix.shape != (k, k):
            raise ValueError(f"Markov matrix must be {k}x{k}")
        if np.any(matrix < 0) or not np.allclose(matrix.sum(axis=1), 1.0, atol=1e-12):
            raise ValueError("Markov matrix must be row-stochastic")
        if np.any((matrix > 0) & ~self.system.transitions):
            raise ValueError("Markov matrix charges forbidden transitions")
        if np.abs(self.stationary @ matrix - self.stationary).max() > 1e-12:
            raise ValueError("Vector is not stationary for the Markov matrix")

    @classmethod
    def from_matrix(cls, system: SymbolicSystem, matrix) -> "MarkovMeasure":
        matrix = np.asarray(matrix, dtype=float)
        k = matrix.shape[0]
        equations = np.vstack([matrix.T - np.eye(k), np.ones((1, k))])
        rhs = np.zeros(k + 1)
        rhs[-1] = 1.0
        stationary, *_ = np.linalg.lstsq(equations, rhs, rcond=None)
        stationary = np.clip(stationary, 0.0, None)
        stationary /= stationary.sum()
        return cls(system, matrix, stationary)

    @classmethod
    def bernoulli(cls, system: SymbolicSystem, probabilities) -> "MarkovMeasure":
        probabilities = np.asarray(probabilities, dtype=float)
        matrix = np.tile(probabilities, (system.alphabet_size, 1))
        return cls(system, matrix, probabilities.copy())

    @classmethod
    def dirac(cls, system: SymbolicSystem, symbol: int) -> "MarkovMeasure":
        """Point mass on the fixed point ``symbol symbol ...``."""
        if not system.allowed(symbol, symbol):
            raise ValueError(f"Symbol {symbol} is not a fixed point")
        k = system.alphabet_size
        matrix = np.zeros((k, k))
        for a in range(k):
            if a == symbol:
                matrix[a, symbol] = 1.0
            else:
                allowed = system.transitions[a]
                matrix[a] = allowed / allowed.sum()
        stationary = np.zeros(k)
        stationary[symbol] = 1.0
        return cls(system, matrix, stationary)

    def entropy(self) -> float:
        """``-sum pi_i p_ij log p_ij`` with ``0 log 0 = 0``."""
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(self.matrix > 0, np.log(self.matrix), 0.0)
        return float(-np.sum(self.stationary[:, None] * self.matrix * logs))

    def word_probability(self, word: Sequence[int]) -> float:
        if not len(word):
            return 1.0
        probability = self.stationary[word[0]]
        for a, b in zip(word[:-1], word[1:]):
            probability *= self.matrix[a, b]
        return float(probability)

    def exponent(self, cocycle: CenterCocycle) -> float:
        """Integral of the cocycle."""
        return math.fsum(
            self.word_probability(word) * value for word, value in cocycle.table.items()
        )


def measure_entropy_and_exponent(
    measure: MarkovMeasure, cocycle: CenterCocycle
) -> Tuple[float, float]:
    return measure.entropy(), measure.exponent(cocycle)


def random_markov_measure(
    system: SymbolicSystem, rng: np.random.Generator
) -> MarkovMeasure:
    """Markov measure with random positive weights on the allowed transitions."""
    weights = rng.random((system.alphabet_size,) * 2) + 0.05
    weights = np.where(system.transitions, weights, 0.0)
    return MarkovMeasure.from_matrix(system, weights / weights.sum(axis=1)[:, None])


def check_pressure_properties(
    curve: PressureCurve,
    system: SymbolicSystem,
    cocycle: CenterCocycle,
    measures: Sequence[MarkovMeasure] = (),
    restricted: Sequence[PressureCurve] = (),
    tolerance: float = CONVEXITY_TOLERANCE,
) -> List[CheckResult]:
    """Variational and Lipschitz bounds, convexity, dominance of restricted curves."""
    checks = []
    q, values = curve.q_grid, curve.values

    slopes = np.diff(values) / np.diff(q)
    convex_gap = float(np.max(slopes[:-1] - slopes[1:], initial=0.0))
    checks.append(
        CheckResult(
            "convexity",
            convex_gap <= tolerance,
            "chord slopes are non-decreasing",
            {"worst": convex_gap},
        )
    )

    lipschitz = float(np.max(np.abs(slopes)))
    checks.append(
        CheckResult(
            "lipschitz",
            lipschitz <= cocycle.max_abs + tolerance,
            "|P(q) - P(q')| <= max|phi| |q - q'|",
            {"worst_slope": lipschitz, "bound": cocycle.max_abs},
        )
    )

    worst = -math.inf
    for measure in measures:
        h, chi = measure_entropy_and_exponent(measure, cocycle)
        if curve.restriction is Restriction.NEGATIVE and chi >= 0:
            continue
        if curve.restriction is Restriction.POSITIVE and chi <= 0:
            continue
        worst = max(worst, float(np.max(h + q * chi - values)))
    checks.append(
        CheckResult(
            "variational",
            worst <= 1e-9,
            "h(mu) + q chi(mu) <= P(q) for sampled measures",
            {"worst_excess": worst, "measures": len(measures)},
        )
    )

    for other in restricted:
        if not np.array_equal(other.q_grid, q):
            raise ValueError("Restricted curve lives on a different grid")
        excess = float(np.max(other.values - values))
        checks.append(
            CheckResult(
                f"dominance-{other.restriction.value}",
                excess <= 1e-7,
                "restricted pressure never exceeds the full pressure",
                {"worst_excess": excess},
            )
        )
    return checks


@dataclass(frozen=True, eq=False)
class ExhaustionLevel:
    """Subshift of orbits whose every block of ``block_length`` has one strict sign."""

    block_length: int
    states: int
    values: np.ndarray
    exponent_range: Tuple[float, float]
    gap: float

    @property
    def is_empty(self) -> bool:
        return not np.isfinite(self.values).any()


def _block_subshift_pressure(
    system: SymbolicSystem,
    cocycle: CenterCocycle,
    sign: Restriction,
    block_length: int,
    grid: np.ndarray,
) -> Tuple[int, np.ndarray]:
    blocks = []
    for word in system.enumerate_words(block_length, budget=4096):
        total = math.fsum(
            cocycle.table[word[i : i + cocycle.depth]]
            for i in range(block_length - cocycle.depth + 1)
        )
        if (sign is Restriction.NEGATIVE and total < 0) or (
            sign is Restriction.POSITIVE and total > 0
        ):
            blocks.append(word)
    if not blocks:
        return 0, np.full(len(grid), -math.inf)

    index = {word: i for i, word in enumerate(blocks)}
    potential = np.array([cocycle.table[word[: cocycle.depth]] for word in blocks])
    adjacency = np.zeros((len(blocks), len(blocks)))
    for i, word in enumerate(blocks):
        for symbol in system.symbols:
            target = word[1:] + (symbol,)
            if system.allowed(word[-1], symbol) and target in index:
                adjacency[i, index[target]] = 1.0

    values = np.empty(len(grid))
    for position, q in enumerate(grid):
        weights = adjacency * np.exp(q * potential - np.max(q * potential))[:, None]
        radius = float(np.max(np.abs(np.linalg.eigvals(weights))))
        values[position] = (
            math.log(radius) + float(np.max(q * potential)) if radius > 0 else -math.inf
        )
    return len(blocks), values


def exhausting_family(
    system: SymbolicSystem,
    cocycle: CenterCocycle,
    sign,
    block_lengths: Sequence[int],
    grid: Sequence[float],
) -> List[ExhaustionLevel]:
    """Pressures of the subshifts approximating the measures of one exponent sign.

    Each level is compared with the restricted pressure on the same grid, ``gap`` is
    the largest difference.
    """
    sign = Restriction.parse(sign)
    if sign is Restriction.NONE:
        raise ValueError("Exhausting families need a sign")
    grid = np.asarray(grid, dtype=float)
    restricted = RestrictedPressure(system, cocycle, sign)
    target = np.array([restricted(float(q)) for q in grid])

    levels = []
    for block_length in sorted(block_lengths):
        if block_length < cocycle.depth:
            raise ValueError(
                f"Block length {block_length} is shorter than the cocycle depth"
            )
        states, values = _block_subshift_pressure(
            system, cocycle, sign, block_length, grid
        )
        if np.isfinite(values).sum() >= 2:
            exponent_range = _end_slopes(grid, values)
        else:
            exponent_range = (math.nan, math.nan)
        gap = float(np.max(np.abs(target - values))) if states else math.inf
        logger.info(
            f"Exhausting subshift L={block_length}: {states} blocks, gap {gap:.3g}"
        )
        levels.append(
            ExhaustionLevel(block_length, states, values, exponent_range, gap)
        )
    return levels
