"""Entropy of finite symbolic sets from separated and spanning counts.

The symbolic metric is ``d(x, y) = 2^-i`` with ``i`` the first index where ``x`` and
``y`` differ. Words are ``(n, 2^-j)``-separated when ``d_n >= 2^-j``, that is when they
differ in their first ``n + j`` symbols, so the largest separated subset has one word
per distinct prefix of length ``n + j``. Spanning balls are closed, ``d_n <= 2^-j``
holds for words that share their first ``n + j - 1`` symbols, so the smallest spanning
set has one word per distinct prefix of that length and equals the separated count
one resolution coarser. Rates are slopes of the log-counts in ``n``.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
import math

import numpy as np

from .concatenation import FamilyTower
from .exceptions import WordTooShortError
from .symbolic import Resolution, SymbolicSystem, Word, as_word

METHODS = ("separated", "spanning", "cover_cost")


class WordSource(ABC):
    """Anything that can count its distinct prefixes of a given length exactly."""

    @property
    @abstractmethod
    def max_length(self) -> Optional[int]:
        """Longest prefix that can be counted, ``None`` for no limit."""

    @abstractmethod
    def _count(self, depth: int) -> int:
        pass

    def prefix_count(self, depth: int) -> int:
        if depth < 0:
            raise ValueError(f"Prefix length must be non-negative, got {depth}")
        if self.max_length is not None and depth > self.max_length:
            raise WordTooShortError(
                f"Prefixes of length {depth} requested, words have {self.max_length}",
                [depth],
            )
        return self._count(depth)

    def is_empty(self) -> bool:
        return self._count(0) == 0


class ExplicitWords(WordSource):
    """A finite list of words, possibly of different lengths."""

    def __init__(self, words: Iterable[Sequence[int]]):
        self.words: List[Word] = [as_word(word) for word in words]

    @property
    def max_length(self) -> Optional[int]:
        return min((len(word) for word in self.words), default=0)

    def prefix_count(self, depth: int) -> int:
        offenders = [i for i, word in enumerate(self.words) if len(word) < depth]
        if offenders:
            raise WordTooShortError(
                f"{len(offenders)} words are shorter than {depth} symbols", offenders
            )
        return self._count(depth)

    def _count(self, depth: int) -> int:
        return len({word[:depth] for word in self.words})

    @classmethod
    def from_file(cls, path) -> "ExplicitWords":
        """One word per line, digits or comma separated symbols, ``#`` comments."""
        words = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "," in line:
                    words.append(as_word(int(part) for part in line.split(",")))
                else:
                    words.append(as_word(line))
        return cls(words)


class SystemWords(WordSource):
    """All admissible words of a system."""

    def __init__(self, system: SymbolicSystem):
        self.system = system

    @property
    def max_length(self) -> Optional[int]:
        return None

    def _count(self, depth: int) -> int:
        return self.system.count_words(depth)


class TowerSupport(WordSource):
    """Members of one level of a tower, counted through its product structure."""

    def __init__(self, tower: FamilyTower, level: Optional[int] = None):
        self.tower = tower
        self.level = tower.K if level is None else level
        self.slots = tower.block_slots(self.level)
        self._families = {
            k: tower.skeletons[k - 1].words for k in range(1, self.level + 1)
        }
        self._first: Dict[int, Dict[int, int]] = {}
        self._last: Dict[int, Dict[int, int]] = {}

    @property
    def max_length(self) -> Optional[int]:
        return self.tower.schedule.prefix_length(self.level)

    def first_counts(self, level: int) -> Dict[int, int]:
        if level not in self._first:
            self._first[level] = self._families[level].first_symbol_counts()
        return self._first[level]

    def last_counts(self, level: int) -> Dict[int, int]:
        if level not in self._last:
            self._last[level] = self._families[level].last_symbol_counts()
        return self._last[level]

    def _glue_prefixes(self, slot, a: int, size: int, next_level: int) -> int:
        return len(
            {
                self.tower.glue_after(slot, a, b)[:size].tobytes()
                for b in self.first_counts(next_level)
            }
        )

    def _product(self, complete: Dict[int, int]) -> int:
        product = 1
        for level, blocks in complete.items():
            product *= self._families[level].count ** blocks
        return product

    def _count(self, depth: int) -> int:
        before: Dict[int, int] = {}  # blocks preceding the last complete one, per level
        previous = None
        for slot in self.slots:
            family = self._families[slot.level]
            if previous is not None and depth <= slot.start:
                size = depth - previous.stop
                return self._product(before) * sum(
                    count * self._glue_prefixes(previous, a, size, slot.level)
                    for a, count in self.last_counts(previous.level).items()
                )
            take = min(depth, slot.stop) - slot.start
            if take < slot.stop - slot.start:
                completed = self._product(before) * (
                    self._families[previous.level].count if previous else 1
                )
                return completed * family.distinct_prefixes(take)
            if previous is not None:
                before[previous.level] = before.get(previous.level, 0) + 1
            previous = slot
        # the trailing pad is fixed by the last block
        return self._product(before) * self._families[previous.level].count


@dataclass(frozen=True)
class EntropyEstimate:
    """Rate fitted on ``n_range`` at resolution ``2^-resolution``."""

    rate: float
    n_range: Tuple[int, ...]
    resolution: int
    method: str
    residual: float
    counts: Tuple[int, ...]

    def as_dict(self) -> Dict[str, object]:
        return {
            "rate": self.rate,
            "n_range": list(self.n_range),
            "resolution": self.resolution,
            "method": self.method,
            "residual": self.residual,
            "log_counts": [math.log(count) for count in self.counts],
        }


def _depth(n: int, resolution: Resolution, method: str) -> int:
    """Prefix length deciding ``d_n >= eps``, or ``d_n <= eps`` when spanning."""
    if method == "spanning":
        return max(resolution.prefix_length(n) - 1, 0)
    return resolution.prefix_length(n)


def _fit(ns: Sequence[int], logs: Sequence[float]) -> Tuple[float, float]:
    """Least-squares slope and RMS residual, the plain ratio for a single point."""
    if len(ns) == 1:
        return logs[0] / ns[0], 0.0
    x = np.asarray(ns, dtype=float)
    y = np.asarray(logs, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), residual


def _normalize(n_range: Iterable[int]) -> Tuple[int, ...]:
    ns = tuple(sorted(set(int(n) for n in n_range)))
    if not ns:
        raise ValueError("Empty range of word lengths")
    if ns[0] < 1:
        raise ValueError(f"Word lengths must be positive, got {ns[0]}")
    return ns


def estimate_entropy(
    source: WordSource,
    n_range: Iterable[int],
    resolution: Resolution = Resolution(),
    method: str = "separated",
) -> EntropyEstimate:
    """Growth rate of separated or spanning counts over ``n_range``.

    :param method: ``separated`` and ``spanning`` fit a line to ``log count`` against
        ``n``, ``cover_cost`` takes the least ``log count / n``, the critical exponent
        of covers by cylinders of one length
    """
    if method not in METHODS:
        raise ValueError(f"Unknown estimation method `{method}`, use one of {METHODS}")
    ns = _normalize(n_range)
    depth_method = "separated" if method == "cover_cost" else method
    counts = tuple(
        source.prefix_count(_depth(n, resolution, depth_method)) for n in ns
    )
    if not counts[0]:
        raise ValueError("Cannot estimate the entropy of an empty set")
    logs = [math.log(count) for count in counts]
    if method == "cover_cost":
        rate, residual = min(log / n for log, n in zip(logs, ns)), 0.0
    else:
        rate, residual = _fit(ns, logs)
    return EntropyEstimate(rate, ns, resolution.depth, method, residual, counts)


def cover_cost(
    source: WordSource, n: int, resolution: Resolution, h: float
) -> float:
    """``s_n e^(-n h)``, cost of covering by ``(n + j)``-cylinders at exponent ``h``."""
    count = source.prefix_count(resolution.prefix_length(n))
    if not count:
        return 0.0
    exponent = math.log(count) - n * h
    return math.exp(exponent) if exponent < 700 else math.inf


def capacitive_entropies(
    source: WordSource,
    n_range: Iterable[int],
    resolution: Resolution = Resolution(),
    window: Optional[int] = None,
) -> Tuple[float, float]:
    """Least and largest separated-count slope over sliding windows of ``n_range``."""
    ns = _normalize(n_range)
    logs = [math.log(source.prefix_count(resolution.prefix_length(n))) for n in ns]
    if len(ns) == 1:
        return logs[0] / ns[0], logs[0] / ns[0]
    window = max(2, len(ns) // 4) if window is None else window
    if window < 2:
        raise ValueError(f"Sliding window needs at least two lengths, got {window}")
    window = min(window, len(ns))
    slopes = [
        _fit(ns[start : start + window], logs[start : start + window])[0]
        for start in range(len(ns) - window + 1)
    ]
    return min(slopes), max(slopes)
