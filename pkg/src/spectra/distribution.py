"""Uniform measures on word families and the mass audit behind entropy lower bounds.

If every Bowen ball of order ``n`` around the support of a probability measure has
mass at most ``exp(-n (h - theta))`` then the support has entropy at least
``h - theta`` at that resolution. For the symbolic metric a Bowen ball of order ``n``
at resolution ``2^-j`` is a cylinder of depth ``n + j``, so the audit reduces to the
largest cylinder mass at every depth, which is computed exactly.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
import logging
import math

from .concatenation import FamilyTower, Segment
from .entropy_estimation import EntropyEstimate, WordSource, estimate_entropy
from .exceptions import CertificateError, WordTooShortError
from .lattice import ExplicitFamily
from .pressure import MarkovMeasure
from .report import CheckResult
from .symbolic import Resolution, Word, as_word

LOG_SLACK = 1e-12  # outward rounding when comparing logarithms of exact masses

MassParts = Tuple[int, int]  # numerator, denominator

logger = logging.getLogger(__name__)


class CylinderMeasure(ABC):
    """Probability measure on words of ``length`` symbols, evaluated on cylinders."""

    length: int

    @abstractmethod
    def mass(self, prefix: Sequence[int]) -> Fraction:
        """Exact mass of the cylinder of words starting with ``prefix``."""

    @abstractmethod
    def max_mass(self, depth: int) -> Fraction:
        """Largest mass of a cylinder of depth ``depth``."""

    def mass_parts(self, prefix: Sequence[int]) -> MassParts:
        value = self.mass(prefix)
        return value.numerator, value.denominator

    def max_mass_parts(self, depth: int) -> MassParts:
        value = self.max_mass(depth)
        return value.numerator, value.denominator

    def _check_depth(self, depth: int):
        if depth > self.length:
            raise ValueError(
                f"Cylinder depth {depth} exceeds the stored length {self.length}"
            )


class UniformWordsMeasure(CylinderMeasure):
    """Equal weight on every word of an explicit list."""

    def __init__(self, words: Iterable[Sequence[int]]):
        words = list(words)
        if not words:
            raise ValueError("Uniform measure needs at least one word")
        self.family = ExplicitFamily(words)
        self.length = self.family.length

    def mass(self, prefix: Sequence[int]) -> Fraction:
        prefix = as_word(prefix)
        self._check_depth(len(prefix))
        return Fraction(self.family.completions(prefix), self.family.count)

    def max_mass(self, depth: int) -> Fraction:
        self._check_depth(depth)
        return Fraction(self.family.max_completions(depth), self.family.count)


class TowerMeasure(CylinderMeasure):
    """Uniform measure on the members of level ``level`` of a tower.

    Masses come from the product structure: each complete block contributes
    ``1 / card S``, a partial block the fraction of skeleton words extending it and a
    partial glue the fraction of next blocks whose first symbol produces it.
    Denominators grow with the tower, so masses are assembled as integer pairs and
    only normalized on request.
    """

    def __init__(self, tower: FamilyTower, level: Optional[int] = None):
        self.tower = tower
        self.level = tower.K if level is None else level
        if not 1 <= self.level <= tower.K:
            raise ValueError(f"Level {self.level} outside 1 .. {tower.K}")
        self.length = tower.schedule.prefix_length(self.level)
        self.slots = tower.block_slots(self.level)
        self._families = {
            k: tower.skeletons[k - 1].words for k in range(1, self.level + 1)
        }
        self._first: Dict[int, Dict[int, int]] = {}

    def _first_counts(self, level: int) -> Dict[int, int]:
        if level not in self._first:
            self._first[level] = self._families[level].first_symbol_counts()
        return self._first[level]

    def _denominator(self, complete: Dict[int, int]) -> int:
        denominator = 1
        for level, blocks in complete.items():
            denominator *= self._families[level].count ** blocks
        return denominator

    def _glue_total(self, slot: Segment, a: int, given: Word, level: int) -> int:
        return sum(
            count
            for b, count in self._first_counts(level).items()
            if tuple(self.tower.glue_after(slot, a, b)[: len(given)].tolist()) == given
        )

    def mass(self, prefix: Sequence[int]) -> Fraction:
        return Fraction(*self.mass_parts(prefix))

    def mass_parts(self, prefix: Sequence[int]) -> MassParts:
        prefix = as_word(prefix)
        depth = len(prefix)
        self._check_depth(depth)
        complete: Dict[int, int] = {}
        previous: Optional[Tuple[Segment, int]] = None
        for slot in self.slots:
            family = self._families[slot.level]
            if previous is not None:
                before, a = previous
                if depth <= slot.start:
                    given = prefix[before.stop : depth]
                    total = self._glue_total(before, a, given, slot.level)
                    return total, self._denominator(complete) * family.count
                glue = self.tower.glue_after(before, a, prefix[slot.start])
                if tuple(glue.tolist()) != prefix[before.stop : slot.start]:
                    return 0, 1
            take = min(depth, slot.stop) - slot.start
            completions = family.completions(prefix[slot.start : slot.start + take])
            if take < slot.stop - slot.start:
                return completions, self._denominator(complete) * family.count
            if not completions:
                return 0, 1
            complete[slot.level] = complete.get(slot.level, 0) + 1
            previous = (slot, prefix[slot.stop - 1])
        before, a = previous
        pad = self.tower.pad_after(before, a)[: depth - before.stop]
        if tuple(pad.tolist()) != prefix[before.stop : depth]:
            return 0, 1
        return 1, self._denominator(complete)

    def max_mass(self, depth: int) -> Fraction:
        return Fraction(*self.max_mass_parts(depth))

    def max_mass_parts(self, depth: int) -> MassParts:
        self._check_depth(depth)
        complete: Dict[int, int] = {}
        previous: Optional[Segment] = None
        for slot in self.slots:
            family = self._families[slot.level]
            if previous is not None and depth <= slot.start:
                best = self._max_glue_total(previous, depth - previous.stop, slot.level)
                return best, self._denominator(complete) * family.count
            take = min(depth, slot.stop) - slot.start
            if take < slot.stop - slot.start:
                best = family.max_completions(take)
                return best, self._denominator(complete) * family.count
            complete[slot.level] = complete.get(slot.level, 0) + 1
            previous = slot
        return 1, self._denominator(complete)

    def _max_glue_total(self, slot: Segment, size: int, level: int) -> int:
        best = 0
        for a in self._families[slot.level].last_symbol_counts():
            groups: Dict[bytes, int] = {}
            for b, count in self._first_counts(level).items():
                key = self.tower.glue_after(slot, a, b)[:size].tobytes()
                groups[key] = groups.get(key, 0) + count
            best = max(best, max(groups.values()))
        return best


class MarkovCylinderMeasure(CylinderMeasure):
    """Markov measure restricted to words of ``length`` symbols.

    The float parameters are taken as exact binary fractions.
    """

    def __init__(self, measure: MarkovMeasure, length: int):
        self.measure = measure
        self.length = length
        self._matrix = [[Fraction(float(p)) for p in row] for row in measure.matrix]
        self._stationary = [Fraction(float(p)) for p in measure.stationary]

    def mass(self, prefix: Sequence[int]) -> Fraction:
        prefix = as_word(prefix)
        self._check_depth(len(prefix))
        if not prefix:
            return Fraction(1)
        mass = self._stationary[prefix[0]]
        for a, b in zip(prefix[:-1], prefix[1:]):
            mass *= self._matrix[a][b]
        return mass

    def max_mass(self, depth: int) -> Fraction:
        self._check_depth(depth)
        if depth == 0:
            return Fraction(1)
        best = list(self._stationary)
        symbols = range(len(best))
        for _ in range(depth - 1):
            best = [max(best[a] * self._matrix[a][b] for a in symbols) for b in symbols]
        return max(best)


def ball_mass(
    measure: CylinderMeasure, word: Sequence[int], n: int, resolution: Resolution
) -> Fraction:
    """Mass of the Bowen ball of order ``n`` around ``word``.

    The ball is the cylinder of depth ``n + j`` at resolution ``j``.
    """
    depth = resolution.prefix_length(n)
    word = as_word(word)
    if len(word) < depth:
        raise WordTooShortError(
            f"Word of length {len(word)} cannot center a ball of depth {depth}", [0]
        )
    return measure.mass(word[:depth])


@dataclass(frozen=True)
class AuditRow:
    n: int
    log_mass: float
    bound: float

    @property
    def margin(self) -> float:
        return self.bound - self.log_mass


@dataclass(frozen=True)
class AuditReport:
    """Largest ball mass at every ``n`` against ``exp(-n (h - theta))``.

    ``n0`` is the least ``n`` of the range from which on every row holds.
    """

    h_target: float
    theta: float
    resolution: int
    rows: Tuple[AuditRow, ...]
    vacuous: bool = False

    @property
    def n0(self) -> Optional[int]:
        if self.vacuous:
            return self.rows[0].n if self.rows else None
        n0 = None
        for row in reversed(self.rows):
            if row.margin < 0:
                break
            n0 = row.n
        return n0

    @property
    def passed(self) -> bool:
        return self.n0 is not None

    @property
    def worst(self) -> Optional[AuditRow]:
        """Row with the smallest margin from ``n0`` on."""
        n0 = self.n0
        if n0 is None:
            return min(self.rows, key=lambda row: row.margin, default=None)
        tail = [row for row in self.rows if row.n >= n0]
        return min(tail, key=lambda row: row.margin)

    def as_dict(self) -> Dict[str, object]:
        worst = self.worst
        return {
            "h_target": self.h_target,
            "theta": self.theta,
            "resolution": self.resolution,
            "passed": self.passed,
            "vacuous": self.vacuous,
            "n0": self.n0,
            "worst_n": None if worst is None else worst.n,
            "worst_margin": None if worst is None else worst.margin,
            "failing_n": [row.n for row in self.rows if row.margin < 0],
        }


def local_entropy_audit(
    measure: CylinderMeasure,
    h_target: float,
    theta: float,
    n_range: Iterable[int],
    resolution: Resolution = Resolution(),
) -> AuditReport:
    """Check ``mu(ball) <= exp(-n (h_target - theta))`` for the heaviest ball.

    One row per ``n``.

    Masses are exact, their logarithms are rounded up before comparing.
    """
    if theta <= 0:
        raise ValueError(f"Slack theta must be positive, got {theta}")
    ns = sorted(set(int(n) for n in n_range))
    if not ns:
        raise ValueError("Empty range of ball orders")
    for n in ns:
        measure._check_depth(resolution.prefix_length(n))
    if theta >= h_target:
        rows = tuple(AuditRow(n, 0.0, -n * (h_target - theta)) for n in ns)
        return AuditReport(h_target, theta, resolution.depth, rows, vacuous=True)

    rows = []
    for n in ns:
        numerator, denominator = measure.max_mass_parts(resolution.prefix_length(n))
        log_mass = math.log(numerator) - math.log(denominator)
        log_mass += LOG_SLACK * (1.0 + abs(log_mass))
        rows.append(AuditRow(n, log_mass, -n * (h_target - theta)))
    report = AuditReport(h_target, theta, resolution.depth, tuple(rows))
    logger.debug(f"Mass audit over {len(rows)} orders: n0={report.n0}")
    return report


@dataclass(frozen=True)
class Certificate:
    """Certified lower bound together with its evidence."""

    bound: float
    audit: AuditReport
    estimate: EntropyEstimate
    consistency: CheckResult

    def as_dict(self) -> Dict[str, object]:
        return {
            "statement": (
                f"h_top(support, 2^-{self.audit.resolution}) >= {self.bound!r}"
            ),
            "bound": self.bound,
            "audit": self.audit.as_dict(),
            "estimate": self.estimate.as_dict(),
            "consistency": self.consistency.as_dict(),
        }


def edp_certificate(
    measure: CylinderMeasure,
    support: WordSource,
    h_target: float,
    theta: float,
    n_range: Iterable[int],
    resolution: Resolution = Resolution(),
    tolerance: float = 1e-9,
) -> Certificate:
    """Certify ``h_top(support) >= h_target - theta`` from a passing mass audit.

    The separated-count estimate of the support over the audited orders is reported
    next to the bound, and the bound may not exceed it by more than twice its residual.

    :raises CertificateError: Empty support or failed audit
    """
    if support.is_empty():
        raise CertificateError("Cannot certify the entropy of an empty support")
    audit = local_entropy_audit(measure, h_target, theta, n_range, resolution)
    if not audit.passed:
        raise CertificateError(
            f"Mass audit failed for every tail of the range, "
            f"worst margin {audit.worst.margin:.6g} at n={audit.worst.n}"
        )
    ns = [row.n for row in audit.rows if row.n >= audit.n0]
    estimate = estimate_entropy(support, ns, resolution, "separated")
    bound = h_target - theta
    consistency = CheckResult(
        "certificate-below-estimate",
        bound <= estimate.rate + 2 * estimate.residual + tolerance,
        "certified bound <= separated estimate + 2 residual",
        {"bound": bound, "estimate": estimate.rate, "residual": estimate.residual},
    )
    logger.info(
        f"Certified entropy >= {bound:.6g} from n0={audit.n0}, "
        f"estimate {estimate.rate:.6g}"
    )
    return Certificate(bound, audit, estimate, consistency)


def choose_theta(h: float, eps_prime: float) -> float:
    """Slack just above ``h - (h - eps')(1 - eps')(1 - 2 eps')``."""
    if not 0 < eps_prime < 0.5:
        raise ValueError(f"eps' must lie in (0, 1/2), got {eps_prime}")
    gap = h - (h - eps_prime) * (1 - eps_prime) * (1 - 2 * eps_prime)
    return gap + LOG_SLACK * (1.0 + abs(gap))


def _same(left: MassParts, right: MassParts) -> bool:
    return left[0] * right[1] == right[0] * left[1]


def level_consistency(
    tower: FamilyTower, k: int, sample: int = 32
) -> CheckResult:
    """Level-``k`` and level-``K`` measures agree on cylinders of level-``k`` prefixes.

    Every level-``k`` member carries mass ``1 / card E_k`` under both.
    """
    top = TowerMeasure(tower, tower.K)
    lower = TowerMeasure(tower, k)
    expected = (1, tower.level(k).card_e)
    start = tower.schedule.t(k - 1)
    depths = sorted({lower.length, start, (start + lower.length) // 2, 1})
    mismatches = 0
    for row in tower.members[:sample]:
        word = tuple(row[: lower.length].tolist())
        if not _same(lower.mass_parts(word), expected) or not _same(
            top.mass_parts(word), expected
        ):
            mismatches += 1
            continue
        for depth in depths:
            if not _same(lower.mass_parts(word[:depth]), top.mass_parts(word[:depth])):
                mismatches += 1
                break
    return CheckResult(
        f"level-consistency[k={k}]",
        mismatches == 0,
        f"mu_{k} and mu_{tower.K} agree on level-{k} cylinders",
        {"words": min(sample, len(tower.members)), "mismatches": mismatches},
    )


def consistency_checks(tower: FamilyTower) -> List[CheckResult]:
    return [level_consistency(tower, k) for k in range(1, tower.K + 1)]

