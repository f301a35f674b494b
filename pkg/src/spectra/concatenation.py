"""Schedules and towers of concatenated skeleton words.

A schedule fixes, level by level, the target exponent ``chi_k``, the block length
``n_k``, the number of blocks ``N_k`` and the gap lengths. Level ``k`` of a tower glues
``N_k`` skeleton words of length ``n_k`` with connectors of length ``ell_k``, ending
in a trailing pad, and levels are joined by bridges of length ``m_k``::

    | block conn block conn ... block pad | bridge | block conn ... block pad | ...
    0                                    T_1      t_1                     t_1 + T_2

so ``T_k = N_k (n_k + ell_k)`` and ``t_k = t_{k-1} + T_k + m_k``. Every member of level
``k + 1`` extends a member of level ``k``.
"""

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple
import itertools
import logging
import math

import numpy as np

from .exceptions import BudgetExceededError, DomainError, InfeasibleScheduleError
from .lattice import Window, forward_counts, DEFAULT_STATE_BUDGET
from .legendre import SpectrumCurve
from .report import CheckResult
from .skeleton import Skeleton, default_k0, extract_preskeleton
from .symbolic import CenterCocycle, Resolution, SymbolicSystem, Word, as_word

DEFAULT_MAX_LENGTH = 4096
DEFAULT_MAX_BLOCKS = 10**9
DEFAULT_TOWER_BUDGET = 10**6
MEMORY_BUDGET = 2**28  # symbols held in memory by a tower

INEQUALITIES = (
    "length-floor",
    "bridge-cost",
    "block-share",
    "next-distortion",
    "next-overhead",
    "next-block-share",
    "time-ratio",
    "level-distortion",
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScheduleLevel:
    """Parameters of one level of a schedule."""

    k: int
    eps: float
    chi: float
    h: float
    eps_e: float
    log_k: float
    n: int
    N: int
    ell: int
    m: int
    ell_flat: int
    b_sharp: int
    t_sharp: int
    skeleton_count: int = field(compare=False)

    @property
    def T(self) -> int:  # noqa: N802
        return self.N * (self.n + self.ell)

    @property
    def skeleton_rate(self) -> float:
        return math.log(self.skeleton_count) / self.n


@dataclass(frozen=True)
class Schedule:
    """Levels ``1 .. K`` plus the constants shared by all of them."""

    levels: Tuple[ScheduleLevel, ...]
    c_max: float
    bridge_length: int
    h_zero: float
    offset: int = 0

    @property
    def K(self) -> int:  # noqa: N802
        return len(self.levels)

    def level(self, k: int) -> ScheduleLevel:
        return self.levels[k - 1]

    def t(self, k: int) -> int:
        """End of level ``k`` including its outgoing bridge, ``t_0 = 0``."""
        return self.offset + sum(level.T + level.m for level in self.levels[:k])

    def prefix_length(self, k: int) -> int:
        """Length ``t_{k-1} + T_k`` of the words of level ``k``."""
        return self.t(k - 1) + self.level(k).T

    def as_dict(self) -> Dict[str, object]:
        return {
            "c_max": self.c_max,
            "bridge_length": self.bridge_length,
            "h_zero": self.h_zero,
            "offset": self.offset,
            "levels": [
                dict(asdict(level), T=level.T, t=self.t(level.k))
                for level in self.levels
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "Schedule":
        names = set(ScheduleLevel.__dataclass_fields__)
        levels = tuple(
            ScheduleLevel(**{key: value for key, value in row.items() if key in names})
            for row in data["levels"]
        )
        return cls(
            levels=levels,
            c_max=float(data["c_max"]),
            bridge_length=int(data["bridge_length"]),
            h_zero=float(data["h_zero"]),
            offset=int(data.get("offset", 0)),
        )


def _exact(value: float) -> Fraction:
    return Fraction(value)


def _check_level(schedule: Schedule, k: int) -> List[Tuple[str, bool, str]]:
    """Evaluate every inequality that binds at level ``k``, in exact arithmetic."""
    level = schedule.level(k)
    eps = _exact(level.eps)
    c_max = _exact(schedule.c_max)
    log_k = _exact(level.log_k)
    n, ell, m = level.n, level.ell, level.m
    bridge = schedule.bridge_length
    t_k = schedule.t(k)
    results = [
        (
            "length-floor",
            max(level.ell_flat, level.b_sharp, level.t_sharp) < n,
            f"max({level.ell_flat}, {level.b_sharp}, {level.t_sharp}) < {n}",
        ),
        ("bridge-cost", Fraction(m, n) * c_max < eps, f"{m}/{n} * C_max < eps"),
        (
            "block-share",
            Fraction(n, n + bridge + m) >= 1 - eps,
            f"{n}/({n}+{bridge}+{m}) >= 1 - eps",
        ),
        (
            "level-distortion",
            log_k / (level.N * (n + ell)) < eps,
            f"log K / ({level.N} * ({n}+{ell})) < eps",
        ),
        (
            "time-ratio",
            Fraction(schedule.t(k - 1), t_k) < eps / c_max,
            f"t_{k - 1} / t_{k} < eps / C_max",
        ),
    ]
    if k < schedule.K:
        following = schedule.level(k + 1)
        next_log_k = _exact(following.log_k)
        results += [
            ("next-distortion", next_log_k / n < eps, f"log K_{k + 1} / {n} < eps"),
            (
                "next-overhead",
                (next_log_k + (following.m + following.ell_flat) * c_max) / n < eps,
                f"(log K_{k + 1} + ({following.m}+{following.ell_flat}) C_max) / {n}"
                " < eps",
            ),
            (
                "next-block-share",
                Fraction(following.n + bridge, t_k) < eps,
                f"({following.n}+{bridge}) / t_{k} < eps",
            ),
        ]
    return results


def check_schedule(schedule: Schedule) -> List[CheckResult]:
    """One result per inequality and level."""
    checks = []
    for k in range(1, schedule.K + 1):
        for name, passed, detail in _check_level(schedule, k):
            checks.append(CheckResult(f"{name}[k={k}]", bool(passed), detail))
    return checks


def _chi_choice(
    spectrum: SpectrumCurve, h_zero: float, eps: float
) -> Tuple[float, float]:
    """Negative grid exponent closest to zero whose spectrum clears ``h_zero - eps``."""
    best = None
    for alpha, value in zip(spectrum.alpha_grid, spectrum.values):
        if alpha < 0 and value >= h_zero - eps and (best is None or alpha > best[0]):
            best = (float(alpha), float(value))
    return best


def _least(bound: Fraction) -> int:
    """Least integer strictly above ``bound``."""
    return math.floor(bound) + 1


def build_schedule(
    system: SymbolicSystem,
    cocycle: CenterCocycle,
    eps_seq: Sequence[float],
    K: int,  # noqa: N803
    spectrum: SpectrumCurve,
    k0: Optional[float] = None,
    h_zero: Optional[float] = None,
    max_length: int = DEFAULT_MAX_LENGTH,
    max_blocks: int = DEFAULT_MAX_BLOCKS,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> Schedule:
    """Greedy-minimal schedule of ``K`` levels for the tolerances ``eps_seq``.

    Block lengths are chosen first (each needs the next level's constants), then block
    counts level by level. The result is re-checked against every inequality.
    """
    eps_seq = [float(eps) for eps in eps_seq]
    if K < 1:
        raise ValueError(f"A schedule needs at least one level, got {K}")
    if len(eps_seq) < K:
        raise ValueError(f"Need {K} tolerances, got {len(eps_seq)}")
    eps_seq = eps_seq[:K]
    if any(eps <= 0 for eps in eps_seq):
        raise ValueError("Tolerances must be positive")
    if any(later >= earlier for earlier, later in zip(eps_seq, eps_seq[1:])):
        raise ValueError(f"Tolerances must be strictly decreasing: {eps_seq}")

    if h_zero is None:
        try:
            h_zero = spectrum.at(0.0)
        except DomainError:
            raise InfeasibleScheduleError(
                "Zero is outside the exponent domain", "exponent-choice", 1
            )
    log_k = math.log(default_k0(cocycle) if k0 is None else k0)
    c_max = cocycle.c_max
    bridge = system.bridge_length
    eps_exact = [_exact(eps) for eps in eps_seq]
    log_k_exact = _exact(log_k)
    c_exact = _exact(c_max)

    drafts = []
    for k, eps in enumerate(eps_seq, start=1):
        choice = _chi_choice(spectrum, h_zero, eps)
        if choice is None:
            raise InfeasibleScheduleError(
                f"No negative exponent on the grid reaches entropy {h_zero - eps:.6g}",
                "exponent-choice",
                k,
            )
        chi, h = choice
        window = Window(chi, eps / 2.0, log_k)
        counts = forward_counts(system, cocycle, max_length, window, state_budget)
        target = h - eps

        def clears(length: int, counts=counts, target=target) -> bool:
            return counts[length] > 0 and math.log(counts[length]) / length >= target

        b_sharp = next((m for m in range(1, max_length + 1) if clears(m)), None)
        if b_sharp is None:
            raise InfeasibleScheduleError(
                f"No skeleton up to length {max_length} reaches rate {target:.6g}",
                "length-floor",
                k,
            )
        drafts.append(
            dict(
                k=k,
                eps=eps,
                chi=chi,
                h=h,
                eps_e=eps / 2.0,
                log_k=log_k,
                ell=bridge,
                m=bridge,
                ell_flat=cocycle.distortion_time(eps),
                b_sharp=b_sharp,
                t_sharp=math.ceil(log_k / eps) + 1,
                clears=clears,
                counts=counts,
            )
        )
        logger.debug(f"Level {k}: chi={chi:.6g} h={h:.6g} b#={b_sharp}")

    for index, draft in enumerate(drafts):
        eps = eps_exact[index]
        m, ell = draft["m"], draft["ell"]
        lower = [
            max(draft["ell_flat"], draft["b_sharp"], draft["t_sharp"]) + 1,
            _least(m * c_exact / eps),
            math.ceil((1 - eps) * (bridge + m) / eps),
        ]
        if index + 1 < len(drafts):
            following = drafts[index + 1]
            lower.append(_least(log_k_exact / eps))
            lower.append(
                _least(
                    (log_k_exact + (following["m"] + following["ell_flat"]) * c_exact)
                    / eps
                )
            )
        n = max(lower)
        while n <= max_length and not draft["clears"](n):
            n += 1
        if n > max_length:
            raise InfeasibleScheduleError(
                f"Block length of level {draft['k']} exceeds {max_length}",
                "length-floor",
                draft["k"],
            )
        draft["n"] = n
        draft["skeleton_count"] = draft["counts"][n]
        del ell

    t_previous = 0
    for index, draft in enumerate(drafts):
        eps = eps_exact[index]
        n, ell, m = draft["n"], draft["ell"], draft["m"]
        unit = n + ell
        need = [
            _least(log_k_exact / (eps * unit)),
            _least((t_previous * c_exact / eps - t_previous - m) / unit),
        ]
        if index + 1 < len(drafts):
            following = drafts[index + 1]
            bound = Fraction(following["n"] + bridge) / eps - t_previous - m
            need.append(_least(bound / unit))
        N = max(1, *need)  # noqa: N806

        def satisfied(blocks: int) -> bool:
            t_k = t_previous + blocks * unit + m
            ok = log_k_exact / (blocks * unit) < eps
            ok &= Fraction(t_previous, t_k) < eps / c_exact
            if index + 1 < len(drafts):
                ok &= Fraction(drafts[index + 1]["n"] + bridge, t_k) < eps
            return ok

        while not satisfied(N):
            N += 1  # noqa: N806
        if N > max_blocks:
            raise InfeasibleScheduleError(
                f"Level {draft['k']} needs {N} blocks, more than {max_blocks}",
                "time-ratio",
                draft["k"],
            )
        draft["N"] = N
        t_previous += N * unit + m

    names = set(ScheduleLevel.__dataclass_fields__)
    schedule = Schedule(
        levels=tuple(
            ScheduleLevel(**{key: draft[key] for key in names if key in draft})
            for draft in drafts
        ),
        c_max=c_max,
        bridge_length=bridge,
        h_zero=h_zero,
    )
    for check in check_schedule(schedule):
        if not check.passed:
            name, _, level = check.name.partition("[k=")
            raise InfeasibleScheduleError(
                f"Schedule violates {check.name}: {check.detail}", name, int(level[:-1])
            )
    logger.info(
        f"Schedule of {schedule.K} levels, t_K = {schedule.t(schedule.K)} symbols"
    )
    return schedule


def level_skeletons(
    system: SymbolicSystem,
    cocycle: CenterCocycle,
    schedule: Schedule,
    resolution: Resolution = Resolution(),
) -> List[Skeleton]:
    """Skeleton of every level at the schedule's exponent, window and length."""
    skeletons = []
    for level in schedule.levels:
        skeleton = extract_preskeleton(
            system,
            cocycle,
            level.chi,
            level.eps_e,
            level.eps,
            level.h,
            level.n,
            resolution=resolution,
            k0=math.exp(level.log_k),
        )
        if skeleton.count != level.skeleton_count:
            raise RuntimeError(
                f"Skeleton of level {level.k} has {skeleton.count} words, "
                f"schedule recorded {level.skeleton_count}"
            )
        skeletons.append(skeleton)
    return skeletons


def concat_map_psi(
    system: SymbolicSystem, blocks: Sequence[Sequence[int]], ell: int
) -> Word:
    """Join ``blocks`` with connecting words of length ``ell``."""
    blocks = [as_word(block) for block in blocks]
    for block in blocks:
        system.check_word(block)
    word: List[int] = []
    for i, block in enumerate(blocks):
        if i:
            word.extend(_connector(system, word[-1], block[0], ell))
        word.extend(block)
    return tuple(word)


def _connector(system: SymbolicSystem, a: int, b: int, length: int) -> Word:
    if length == system.bridge_length:
        return system.bridge(a, b)
    return system.connect(a, b, length)


@dataclass(frozen=True)
class Segment:
    """A stretch of tower positions with one role."""

    kind: str  # block, connector, pad or bridge
    level: int
    index: int
    start: int
    stop: int

    def as_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass(frozen=True)
class TowerLevel:
    k: int
    start: int
    length: int
    card_s: int
    card_d: int
    card_e: int


class _Glue:
    """Connector, pad and bridge tables for vectorized assembly."""

    def __init__(self, system: SymbolicSystem, length: int):
        k = system.alphabet_size
        self.length = length
        self.connectors = np.zeros((k, k, length), dtype=np.uint8)
        self.pads = np.zeros((k, length), dtype=np.uint8)
        for a, b in itertools.product(range(k), repeat=2):
            self.connectors[a, b] = _connector(system, a, b, length)
        for a in range(k):
            self.pads[a] = system.least_extension(a, length)


class FamilyTower:
    """Members of the last level, all of them or a seeded uniform sample.

    Cardinalities are exact integers whatever the number of stored members.
    """

    def __init__(
        self,
        system: SymbolicSystem,
        cocycle: CenterCocycle,
        schedule: Schedule,
        skeletons: Sequence[Skeleton],
        members: np.ndarray,
        sampled: bool,
        seed: Optional[int] = None,
    ):
        self.system = system
        self.cocycle = cocycle
        self.schedule = schedule
        self.skeletons = list(skeletons)
        self.members = members
        self.sampled = sampled
        self.seed = seed

        levels = []
        card_e = 1
        for level, skeleton in zip(schedule.levels, skeletons):
            card_d = skeleton.count**level.N
            card_e *= card_d
            levels.append(
                TowerLevel(
                    k=level.k,
                    start=schedule.t(level.k - 1),
                    length=schedule.prefix_length(level.k),
                    card_s=skeleton.count,
                    card_d=card_d,
                    card_e=card_e,
                )
            )
        self.levels = levels
        self._glue = {
            length: _Glue(system, length)
            for length in {level.ell for level in schedule.levels}
            | {level.m for level in schedule.levels}
        }

    @property
    def K(self) -> int:  # noqa: N802
        return self.schedule.K

    @property
    def length(self) -> int:
        return self.schedule.prefix_length(self.K)

    @property
    def cardinality(self) -> int:
        return self.levels[-1].card_e

    def level(self, k: int) -> TowerLevel:
        return self.levels[k - 1]

    def segments(self, stop: Optional[int] = None) -> Iterator[Segment]:
        """Segments in position order, up to ``stop``."""
        stop = self.length if stop is None else stop
        for spec in self.schedule.levels:
            start = self.schedule.t(spec.k - 1)
            if spec.k > 1 and self.schedule.level(spec.k - 1).m:
                bridge = self.schedule.level(spec.k - 1).m
                yield Segment("bridge", spec.k - 1, 0, start - bridge, start)
            for i in range(spec.N):
                if start >= stop:
                    return
                unit = start + i * (spec.n + spec.ell)
                if unit >= stop:
                    return
                yield Segment("block", spec.k, i, unit, unit + spec.n)
                if spec.ell:
                    kind = "connector" if i < spec.N - 1 else "pad"
                    start = unit + spec.n
                    yield Segment(kind, spec.k, i, start, start + spec.ell)

    def segment_at(self, position: int) -> Segment:
        for segment in self.segments(position + 1):
            if segment.start <= position < segment.stop:
                return segment
        raise IndexError(f"Position {position} is outside the tower")

    def block_mask(self, k: int) -> np.ndarray:
        """Positions covered by blocks of levels ``1 .. k``."""
        mask = np.zeros(self.length, dtype=bool)
        for spec in self.schedule.levels[:k]:
            start = self.schedule.t(spec.k - 1)
            units = start + np.arange(spec.N) * (spec.n + spec.ell)
            positions = (units[:, None] + np.arange(spec.n)[None, :]).ravel()
            mask[positions] = True
        return mask

    def blocks(self, words: np.ndarray, k: int) -> np.ndarray:
        """Blocks of level ``k`` of every word, shape ``(len(words), N_k, n_k)``."""
        spec = self.schedule.level(k)
        start = self.schedule.t(k - 1)
        stop = start + spec.T
        units = words[:, start:stop].reshape(len(words), spec.N, spec.n + spec.ell)
        return units[:, :, : spec.n]

    def assemble(self, level_blocks: Sequence[np.ndarray]) -> np.ndarray:
        """Words from their blocks, one ``(size, N_k, n_k)`` array per level."""
        pieces = []
        previous_last = None
        for spec, blocks in zip(self.schedule.levels, level_blocks):
            size = len(blocks)
            if spec.k > 1:
                glue = self._glue[self.schedule.level(spec.k - 1).m]
                pieces.append(glue.connectors[previous_last, blocks[:, 0, 0]])
            units = np.zeros((size, spec.N, spec.n + spec.ell), dtype=np.uint8)
            units[:, :, : spec.n] = blocks
            if spec.ell:
                glue = self._glue[spec.ell]
                units[:, :-1, spec.n :] = glue.connectors[
                    blocks[:, :-1, -1], blocks[:, 1:, 0]
                ]
                units[:, -1, spec.n :] = glue.pads[blocks[:, -1, -1]]
            segment = units.reshape(size, spec.T)
            pieces.append(segment)
            previous_last = segment[:, -1]
        return np.concatenate(pieces, axis=1)

    def block_slots(self, level: Optional[int] = None) -> List[Segment]:
        """Block segments of levels ``1 .. level`` in position order."""
        level = self.K if level is None else level
        slots = []
        for spec in self.schedule.levels[:level]:
            start = self.schedule.t(spec.k - 1)
            for i in range(spec.N):
                unit = start + i * (spec.n + spec.ell)
                slots.append(Segment("block", spec.k, i, unit, unit + spec.n))
        return slots

    def glue_after(self, slot: Segment, a: int, b: int) -> np.ndarray:
        """Glue word after ``slot``.

        ``a`` is the last symbol of the block in ``slot``, ``b`` the first symbol of the
        next block.
        """
        spec = self.schedule.level(slot.level)
        if slot.index < spec.N - 1:
            return self._glue[spec.ell].connectors[a, b]
        pad = self._glue[spec.ell].pads[a]
        last = int(pad[-1]) if len(pad) else a
        return np.concatenate([pad, self._glue[spec.m].connectors[last, b]])

    def pad_after(self, slot: Segment, a: int) -> np.ndarray:
        """Trailing pad of the level of ``slot`` when ``slot`` ends it."""
        spec = self.schedule.level(slot.level)
        return self._glue[spec.ell].pads[a]

    def least_member(self) -> np.ndarray:
        """Member built from the least skeleton word in every block."""
        level_blocks = [
            np.tile(
                np.array(skeleton.words.least(), dtype=np.uint8), (1, spec.N, 1)
            )
            for spec, skeleton in zip(self.schedule.levels, self.skeletons)
        ]
        return self.assemble(level_blocks)[0]

    def description(self) -> Dict[str, object]:
        """Everything needed to rebuild this tower."""
        return {
            "schedule": self.schedule.as_dict(),
            "resolution": self.skeletons[0].resolution.depth if self.skeletons else 0,
            "sampled": self.sampled,
            "seed": self.seed,
            "members": len(self.members),
        }


def build_tower(
    system: SymbolicSystem,
    cocycle: CenterCocycle,
    schedule: Schedule,
    skeletons: Sequence[Skeleton],
    budget: int = DEFAULT_TOWER_BUDGET,
    sample_size: Optional[int] = None,
    seed: int = 0,
) -> FamilyTower:
    """All members of the last level, or ``sample_size`` distinct uniform ones.

    :raises BudgetExceededError: The tower has more than ``budget`` members and no
        sample size was given
    """
    if len(skeletons) != schedule.K:
        raise ValueError(f"Need {schedule.K} skeletons, got {len(skeletons)}")
    for spec, skeleton in zip(schedule.levels, skeletons):
        if skeleton.m != spec.n:
            raise ValueError(
                f"Skeleton of level {spec.k} has length {skeleton.m}, expected {spec.n}"
            )
        if abs(skeleton.alpha - spec.chi) > 1e-12:
            raise ValueError(
                f"Skeleton of level {spec.k} targets {skeleton.alpha}, "
                f"schedule has {spec.chi}"
            )
        if skeleton.count == 1:
            logger.warning(f"Level {spec.k} has a single skeleton word")

    tower = FamilyTower(system, cocycle, schedule, skeletons, np.zeros((0, 0)), False)
    cardinality = tower.cardinality
    length = tower.length

    if cardinality <= budget and cardinality * length <= MEMORY_BUDGET:
        level_blocks = []
        choices = [
            itertools.product(list(skeleton.words), repeat=spec.N)
            for spec, skeleton in zip(schedule.levels, skeletons)
        ]
        combos = list(itertools.product(*choices))
        for spec, position in zip(schedule.levels, range(schedule.K)):
            level_blocks.append(
                np.array(
                    [combo[position] for combo in combos], dtype=np.uint8
                ).reshape(len(combos), spec.N, spec.n)
            )
        tower.members = tower.assemble(level_blocks)
        logger.info(f"Tower holds all {cardinality} members of length {length}")
        return tower

    if sample_size is None:
        raise BudgetExceededError(
            f"Tower has {cardinality} members, more than the budget of {budget}",
            budget=budget,
        )
    if sample_size * length > MEMORY_BUDGET:
        raise BudgetExceededError(
            f"{sample_size} members of length {length} do not fit in memory",
            budget=MEMORY_BUDGET,
        )

    rng = np.random.default_rng(seed)
    wanted = min(sample_size, cardinality)
    members = np.zeros((0, length), dtype=np.uint8)
    seen = set()
    while len(members) < wanted:
        draw = wanted - len(members)
        level_blocks = [
            skeleton.words.sample(rng, draw * spec.N).reshape(draw, spec.N, spec.n)
            for spec, skeleton in zip(schedule.levels, skeletons)
        ]
        fresh = []
        for row in tower.assemble(level_blocks):
            key = row.tobytes()
            if key not in seen:
                seen.add(key)
                fresh.append(row)
        if fresh:
            members = np.vstack([members, np.array(fresh)])
    tower.members = members
    tower.sampled = True
    tower.seed = seed
    logger.warning(
        f"Tower has {cardinality.bit_length()}-bit cardinality, "
        f"keeping a sample of {wanted} members (seed {seed})"
    )
    return tower


def _parse_ok(tower: FamilyTower, words: np.ndarray, k: int) -> np.ndarray:
    """Rows whose first ``k`` levels are valid blocks joined by the expected glue."""
    words = np.asarray(words, dtype=np.uint8)
    ok = np.ones(len(words), dtype=bool)
    if not len(words):
        return ok
    expected = tower.assemble(
        [tower.blocks(words, level) for level in range(1, k + 1)]
    )
    length = tower.schedule.prefix_length(k)
    ok &= np.all(expected[:, :length] == words[:, :length], axis=1)
    for level in range(1, k + 1):
        spec = tower.schedule.level(level)
        blocks = tower.blocks(words, level).reshape(-1, spec.n)
        inside = tower.skeletons[level - 1].words.contains_many(blocks)
        ok &= inside.reshape(len(words), spec.N).all(axis=1)
    return ok


def check_tower(tower: FamilyTower) -> List[CheckResult]:
    """Cardinality identity, nesting, separation and prefix multiplicity."""
    checks = []
    members = tower.members
    card_e = 1
    identity = True
    rows = zip(tower.schedule.levels, tower.skeletons, tower.levels)
    for spec, skeleton, level in rows:
        card_e *= skeleton.count**spec.N
        identity &= level.card_e == card_e
        if level.k > 1:
            identity &= level.card_e == tower.level(level.k - 1).card_e * level.card_d
    if not tower.sampled:
        identity &= len({row.tobytes() for row in members}) == tower.cardinality
    checks.append(
        CheckResult(
            "cardinality",
            identity,
            "card E_(k+1) = card E_k * card D_(k+1)",
            {"log_card_E": [math.log(level.card_e) for level in tower.levels]},
        )
    )

    nested = all(
        bool(_parse_ok(tower, members, k).all()) for k in range(1, tower.K + 1)
    )
    checks.append(
        CheckResult(
            "nesting",
            nested,
            "every member extends a valid member of each lower level",
            {"members": len(members)},
        )
    )

    separated = True
    depth = tower.skeletons[0].resolution.depth if tower.skeletons else 0
    for k in range(1, tower.K + 1):
        prefix = min(tower.schedule.prefix_length(k) + depth, tower.length)
        words = {row[:prefix].tobytes() for row in members}
        choices = {row.tobytes() for row in members[:, tower.block_mask(k)]}
        separated &= len(words) == len(choices)
    checks.append(
        CheckResult(
            "separation",
            separated,
            "different block choices give separated members at every level",
        )
    )

    if tower.sampled:
        multiplicity = all(
            tower.level(k + 1).card_e // tower.level(k).card_e
            == tower.level(k + 1).card_d
            for k in range(1, tower.K)
        )
        detail = "prefix multiplicity from exact bookkeeping (sampled tower)"
    else:
        multiplicity = True
        for k in range(1, tower.K):
            length = tower.schedule.prefix_length(k)
            groups: Dict[bytes, int] = {}
            for row in members:
                key = row[:length].tobytes()
                groups[key] = groups.get(key, 0) + 1
            per_prefix = tower.cardinality // tower.level(k).card_e
            multiplicity &= set(groups.values()) == {per_prefix}
            multiplicity &= len(groups) == tower.level(k).card_e
        detail = "each level-k prefix is shared by card E_K / card E_k members"
    checks.append(CheckResult("multiplicity", multiplicity, detail))
    return checks


def limsup_points(tower: FamilyTower, count: int, length: int) -> List[Word]:
    """Lexicographically least stored members, truncated to ``length``.

    The member made of least skeleton words is always among the candidates.
    """
    if count < 1:
        raise ValueError(f"Point count must be positive, got {count}")
    if length > tower.length:
        raise ValueError(
            f"Points are at most {tower.length} symbols long, requested {length}"
        )
    pool = {tower.least_member().tobytes()}
    pool.update(row.tobytes() for row in tower.members)
    chosen = sorted(pool)[:count]
    if len(chosen) < count:
        logger.warning(f"Only {len(chosen)} points available, {count} requested")
    return [
        tuple(np.frombuffer(key, dtype=np.uint8)[:length].tolist()) for key in chosen
    ]


@dataclass(frozen=True)
class EnvelopeRow:
    """Worst average over ``n`` in ``(t_(k0+1), t_K]``.

    The bound is ``|chi_k0| + 6 eps_k0``.
    """

    k0: int
    bound: float
    ratio: float
    word: int
    n: int
    segment: Optional[Segment]
    dominant: Optional[Segment]

    def as_dict(self) -> Dict[str, object]:
        return {
            "k0": self.k0,
            "bound": self.bound,
            "ratio": self.ratio,
            "word": self.word,
            "n": self.n,
            "segment": None if self.segment is None else self.segment.as_dict(),
            "dominant": None if self.dominant is None else self.dominant.as_dict(),
        }


@dataclass(frozen=True)
class EnvelopeReport:
    rows: Tuple[EnvelopeRow, ...]
    level_ratios: Tuple[float, ...]
    words: int

    @property
    def max_ratio(self) -> float:
        return max((row.ratio for row in self.rows), default=0.0)

    @property
    def passed(self) -> bool:
        levels_ok = all(ratio <= 1.0 for ratio in self.level_ratios)
        return self.max_ratio <= 1.0 and levels_ok

    def as_dict(self) -> Dict[str, object]:
        return {
            "passed": self.passed,
            "max_ratio": self.max_ratio,
            "words": self.words,
            "rows": [row.as_dict() for row in self.rows],
            "level_ratios": list(self.level_ratios),
        }


def _dominant_segment(
    tower: FamilyTower, sums: np.ndarray, stop: int
) -> Optional[Segment]:
    """Segment before ``stop`` whose sum strays furthest from its level's exponent."""
    worst, found = -1.0, None
    for segment in tower.segments(stop):
        end = min(segment.stop, stop)
        level = segment.level + 1 if segment.kind == "bridge" else segment.level
        chi = tower.schedule.level(min(level, tower.K)).chi
        excess = abs(sums[end] - sums[segment.start] - (end - segment.start) * chi)
        if excess > worst:
            worst, found = excess, segment
    return found


def exponent_envelope_check(
    tower: FamilyTower,
    schedule: Schedule,
    sample: Optional[Sequence[Sequence[int]]] = None,
) -> EnvelopeReport:
    """Check ``|S_n / n| <= |chi_k0| + 6 eps_k0`` for ``n`` beyond ``t_(k0+1)``.

    Also checks that inside every level the sums follow ``chi_k`` within the window
    of its skeleton widened by the glue. Failures are reported, not raised.
    """
    words = tower.members if sample is None else [np.asarray(w) for w in sample]
    cocycle = tower.cocycle
    K = schedule.K  # noqa: N806
    c_half = schedule.c_max / 2.0

    best: Dict[int, Tuple[float, int, int]] = {}
    level_ratios = [0.0] * K
    prefix_sums = []
    for index, word in enumerate(words):
        sums = cocycle.prefix_sums(np.asarray(word, dtype=np.int64))
        prefix_sums.append(sums)
        size = len(word)
        for k0 in range(1, K):
            low = schedule.t(k0 + 1)
            high = min(schedule.t(K), size)
            if high <= low:
                continue
            steps = np.arange(low + 1, high + 1)
            averages = np.abs(sums[low + 1 : high + 1] / steps)
            bound = abs(schedule.level(k0).chi) + 6 * schedule.level(k0).eps
            i = int(np.argmax(averages))
            ratio = float(averages[i] / bound)
            if k0 not in best or ratio > best[k0][0]:
                best[k0] = (ratio, index, int(steps[i]))

        for spec in schedule.levels:
            start = schedule.t(spec.k - 1)
            stop = min(start + spec.T, size)
            if stop <= start:
                continue
            elapsed = np.arange(stop - start + 1)
            drift = sums[start : stop + 1] - sums[start]
            deviation = np.abs(drift - elapsed * spec.chi)
            glue = spec.ell * (c_half + abs(spec.chi))
            slope = spec.eps_e + (spec.log_k + glue) / (spec.n + spec.ell)
            bound = spec.log_k + glue + elapsed * slope
            level_ratios[spec.k - 1] = max(
                level_ratios[spec.k - 1], float(np.max(deviation / bound))
            )

    rows = []
    for k0 in range(1, K):
        bound = abs(schedule.level(k0).chi) + 6 * schedule.level(k0).eps
        if k0 not in best:
            rows.append(EnvelopeRow(k0, bound, 0.0, -1, 0, None, None))
            continue
        ratio, index, n = best[k0]
        segment = tower.segment_at(n - 1)
        dominant = None
        if ratio > 1.0:
            dominant = _dominant_segment(tower, prefix_sums[index], n)
            logger.warning(
                f"Envelope exceeded for k0={k0} at n={n}, dominated by "
                f"{dominant.kind} of level {dominant.level}"
            )
        rows.append(EnvelopeRow(k0, bound, ratio, index, n, segment, dominant))
    return EnvelopeReport(tuple(rows), tuple(level_ratios), len(words))


@dataclass(frozen=True, eq=False)
class TwoSidedWord:
    """``backward[i]`` is the symbol at time ``-1 - i``, ``forward[i]`` at ``i``."""

    backward: np.ndarray
    forward: np.ndarray
    report: EnvelopeReport

    def in_time_order(self) -> np.ndarray:
        return np.concatenate([self.backward[::-1], self.forward])

    @property
    def origin(self) -> int:
        return len(self.backward)


def mirrored_model(
    system: SymbolicSystem, cocycle: CenterCocycle
) -> Tuple[SymbolicSystem, CenterCocycle]:
    """System read backwards with the sign-flipped cocycle.

    Backward averages of the original are forward averages of the mirror with the sign
    flipped, so contracting windows of the mirror are expanding ones of the original.
    """
    mirrored = cocycle.reversed().negated()
    return mirrored.system, mirrored


def extend_backward(
    system: SymbolicSystem,
    cocycle: CenterCocycle,
    forward_word: Sequence[int],
    backward_schedule: Schedule,
    seed: int = 0,
    resolution: Resolution = Resolution(),
) -> TwoSidedWord:
    """Prepend a backward half built on the mirrored model.

    The backward half is the least member of the mirrored tower, joined to the forward
    word by a bridge when the forward word is not empty.
    """
    back_system, back_cocycle = mirrored_model(system, cocycle)
    skeletons = level_skeletons(
        back_system, back_cocycle, backward_schedule, resolution
    )
    tower = build_tower(
        back_system,
        back_cocycle,
        backward_schedule,
        skeletons,
        budget=1,
        sample_size=1,
        seed=seed,
    )
    half = tower.least_member()
    report = exponent_envelope_check(tower, backward_schedule, [half])

    forward = np.asarray(as_word(forward_word), dtype=np.uint8)
    if len(forward):
        system.check_word(forward.tolist())
        join = system.bridge(int(half[0]), int(forward[0]))
        backward = np.concatenate([np.array(join[::-1], dtype=np.uint8), half])
    else:
        backward = half
    two_sided = TwoSidedWord(backward=backward, forward=forward, report=report)
    system.check_word(two_sided.in_time_order().tolist())
    return two_sided
