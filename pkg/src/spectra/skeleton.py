"""Pre-skeletons: separated word sets whose every prefix has a prescribed exponent.

A word ``w`` of length ``m`` belongs to the skeleton of ``(alpha, eps_E, K0)`` when
``|S_l(w) - l alpha| <= log K0 + l eps_E`` for every prefix length ``l``. Distinct
words of one length are separated at every resolution, so the skeleton is the full
set of such words and its size is counted exactly on the prefix lattice.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from .exceptions import SkeletonError
from .lattice import (
    DEFAULT_STATE_BUDGET,
    WINDOW_TOLERANCE,
    ExplicitFamily,
    PrefixLattice,
    Window,
    WordFamily,
    forward_counts,
)
from .report import CheckResult
from .symbolic import (
    CenterCocycle,
    Resolution,
    SymbolicSystem,
    Word,
    separated_count,
)

logger = logging.getLogger(__name__)


def default_k0(cocycle: CenterCocycle) -> float:
    """``exp(d max|phi|)``, never rejects a word during its first ``d`` steps."""
    return math.exp(cocycle.depth * cocycle.max_abs)


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Words of length ``m`` inside the exponent window, with their certified rate."""

    alpha: float
    eps_e: float
    eps_h: float
    k0: float
    m: int
    h_target: float
    words: WordFamily = field(repr=False)
    resolution: Resolution = Resolution()

    @property
    def log_k0(self) -> float:
        return math.log(self.k0)

    @property
    def window(self) -> Window:
        return Window(self.alpha, self.eps_e, self.log_k0)

    @property
    def count(self) -> int:
        return self.words.count

    @property
    def certified_rate(self) -> float:
        return math.log(self.count) / self.m

    @property
    def success(self) -> bool:
        return self.certified_rate >= self.h_target - self.eps_h

    def representative(self, system: SymbolicSystem, word: Word) -> Word:
        """``word`` padded by the least admissible continuation to ``m + j`` symbols."""
        return word + system.least_extension(word[-1], self.resolution.depth)

    def summary(self) -> Dict[str, object]:
        return {
            "alpha": self.alpha,
            "eps_E": self.eps_e,
            "eps_H": self.eps_h,
            "K0": self.k0,
            "m": self.m,
            "resolution": self.resolution.depth,
            "h_target": self.h_target,
            "count": self.count,
            "rate": self.certified_rate,
            "success": self.success,
        }


def _minimal_log_k0(
    system: SymbolicSystem, cocycle: CenterCocycle, alpha: float, eps_e: float, m: int
) -> float:
    """Smallest ``log K0`` letting some word through its first ``d`` steps."""
    length = min(m, cocycle.depth)
    best = math.inf
    for word in system.enumerate_words(length):
        sums = cocycle.prefix_sums(np.array(word))
        steps = np.arange(length + 1)
        deviation = float(np.max(np.abs(sums - steps * alpha) - steps * eps_e))
        best = min(best, max(deviation, 0.0))
    return best


def extract_preskeleton(
    system: SymbolicSystem,
    cocycle: CenterCocycle,
    alpha: float,
    eps_e: float,
    eps_h: float,
    h_target: float,
    m: int,
    resolution: Resolution = Resolution(),
    k0: Optional[float] = None,
    method: str = "lattice",
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> Skeleton:
    """All admissible ``m``-words whose prefixes stay in the window.

    :param method: ``lattice`` counts on the prefix lattice, ``enumerate`` lists every
        admissible word and filters (small ``m`` only)
    """
    if m < 1:
        raise SkeletonError(f"Skeleton length must be positive, got {m}")
    if eps_e < 0:
        raise ValueError(f"Window half-width must be non-negative, got {eps_e}")
    k0 = default_k0(cocycle) if k0 is None else k0
    if k0 < 1:
        raise ValueError(f"Distortion constant K0 must be at least 1, got {k0}")
    window = Window(alpha, eps_e, math.log(k0))

    if method == "lattice":
        words: WordFamily = PrefixLattice(
            system, cocycle, m, window=window, state_budget=state_budget
        )
    elif method == "enumerate":
        kept = []
        steps = np.arange(m + 1)
        bounds = window.log_k0 + steps * eps_e + WINDOW_TOLERANCE
        for word in system.enumerate_words(m):
            sums = cocycle.prefix_sums(np.array(word))
            if np.all(np.abs(sums - steps * alpha) <= bounds):
                kept.append(word)
        words = ExplicitFamily(kept, length=m)
    else:
        raise ValueError(f"Unknown extraction method `{method}`")

    if not words.count:
        minimal = _minimal_log_k0(system, cocycle, alpha, eps_e, m)
        raise SkeletonError(
            f"No word of length {m} stays within the window around {alpha}; "
            f"log K0 must be at least {minimal:.6g}",
            minimal_log_k0=minimal,
        )

    skeleton = Skeleton(
        alpha=alpha,
        eps_e=eps_e,
        eps_h=eps_h,
        k0=k0,
        m=m,
        h_target=h_target,
        words=words,
        resolution=resolution,
    )
    logger.debug(
        f"Skeleton alpha={alpha:.6g} m={m}: {skeleton.count} words, "
        f"rate {skeleton.certified_rate:.6g}"
    )
    return skeleton


def skeleton_rates(
    system: SymbolicSystem,
    cocycle: CenterCocycle,
    window: Window,
    max_length: int,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> List[Optional[float]]:
    """Certified rate for every length ``0 .. max_length`` from one lattice pass.

    Entry ``m`` is ``None`` when no word of that length fits (and for ``m = 0``).
    """
    counts = forward_counts(system, cocycle, max_length, window, state_budget)
    return [None] + [
        math.log(count) / m if count else None for m, count in enumerate(counts) if m
    ]


def skeleton_rate_curve(
    system: SymbolicSystem,
    cocycle: CenterCocycle,
    alpha: float,
    eps_e: float,
    k0: Optional[float],
    m_list: Sequence[int],
) -> List[Tuple[int, Optional[float]]]:
    """Certified rate at each requested length, ``None`` where the window is empty."""
    if not m_list:
        return []
    if min(m_list) < 1:
        raise SkeletonError("Skeleton lengths must be positive")
    k0 = default_k0(cocycle) if k0 is None else k0
    rates = skeleton_rates(
        system, cocycle, Window(alpha, eps_e, math.log(k0)), max(m_list)
    )
    return [(m, rates[m]) for m in m_list]


def verify_skeleton(
    system: SymbolicSystem,
    cocycle: CenterCocycle,
    skeleton: Skeleton,
    sample_size: int = 256,
    seed: int = 0,
) -> List[CheckResult]:
    """Recompute the window and separation properties word by word.

    The whole family is checked when it has at most ``sample_size`` words, a seeded
    uniform sample otherwise.
    """
    family = skeleton.words
    if family.count <= sample_size:
        rows = np.array(list(family), dtype=np.int64).reshape(-1, skeleton.m)
        scope = "all"
    else:
        rows = family.sample(np.random.default_rng(seed), sample_size).astype(np.int64)
        scope = f"sample of {sample_size}"

    steps = np.arange(skeleton.m + 1)
    bounds = skeleton.log_k0 + steps * skeleton.eps_e
    worst = -math.inf
    admissible = all(system.is_admissible(row.tolist()) for row in rows)
    for row in rows:
        sums = cocycle.prefix_sums(row)
        excess = np.abs(sums - steps * skeleton.alpha) - bounds
        worst = max(worst, float(excess.max()))

    words = [tuple(row.tolist()) for row in rows]
    padded = [skeleton.representative(system, word) for word in words]
    distinct = len(set(words))
    separated = separated_count(padded, skeleton.m, skeleton.resolution)

    return [
        CheckResult("admissible", admissible, f"{scope} words are admissible"),
        CheckResult(
            "window",
            worst <= WINDOW_TOLERANCE,
            f"{scope} words keep |S_l - l alpha| <= log K0 + l eps_E",
            {"worst_excess": worst},
        ),
        CheckResult(
            "separation",
            separated == distinct,
            f"distinct words are ({skeleton.m}, 2^-{skeleton.resolution.depth})"
            "-separated",
            {"distinct": distinct, "separated": separated},
        ),
        CheckResult(
            "count",
            family.distinct_prefixes(skeleton.m) == skeleton.count,
            "forward and backward lattice counts agree",
            {"rate": skeleton.certified_rate, "count": skeleton.count},
        ),
    ]
