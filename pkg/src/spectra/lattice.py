"""Exact counting of admissible words under Birkhoff-sum constraints.

The Birkhoff sum of a word is determined by how often each distinct cocycle value was
used, so words are grouped by their last symbols (enough to extend them) and the vector
of value counts. Counting through these states is exact, uses Python integers and never
lists the words themselves.
"""

from abc import ABC, abstractmethod
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from .exceptions import BudgetExceededError
from .symbolic import CenterCocycle, SymbolicSystem, Word, as_word

WINDOW_TOLERANCE = 1e-9
DEFAULT_STATE_BUDGET = 2_000_000

State = Tuple[Word, Tuple[int, ...]]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Window:
    """Prefix condition ``|S_l - l alpha| <= log K0 + l eps``."""

    alpha: float
    half_width: float
    log_k0: float = 0.0

    def bound(self, length: int) -> float:
        return self.log_k0 + length * self.half_width

    def admits(self, length: int, total: float) -> bool:
        return abs(total - length * self.alpha) <= self.bound(length) + WINDOW_TOLERANCE


class _Stepper:
    """Transition function of the count-vector states."""

    def __init__(self, system: SymbolicSystem, cocycle: CenterCocycle):
        self.system = system
        self.cocycle = cocycle
        self.values = cocycle.distinct_values
        # a full shift with depth one needs no memory of past symbols
        if system.is_full_shift and cocycle.depth == 1:
            self.keep = 0
        else:
            self.keep = max(cocycle.depth - 1, 1)
        self.transitions = system.transitions.tolist()
        self.root: State = ((), (0,) * len(self.values))

    def step(self, state: State, symbol: int) -> Optional[State]:
        tail, counts = state
        if tail and not self.transitions[tail[-1]][symbol]:
            return None
        extended = tail + (symbol,)
        d = self.cocycle.depth
        if len(extended) >= d:
            index = self.cocycle.value_index[extended[-d:]]
            counts = counts[:index] + (counts[index] + 1,) + counts[index + 1 :]
        return (extended[-self.keep :] if self.keep else ()), counts

    def total(self, state: State) -> float:
        return math.fsum(count * value for count, value in zip(state[1], self.values))


def forward_counts(
    system: SymbolicSystem,
    cocycle: CenterCocycle,
    max_length: int,
    window: Optional[Window] = None,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> List[int]:
    """Words of every length ``0 .. max_length`` whose prefixes all fit ``window``."""
    stepper = _Stepper(system, cocycle)
    layer: Dict[State, int] = {stepper.root: 1}
    counts = [1]
    for length in range(1, max_length + 1):
        next_layer: Dict[State, int] = {}
        for state, paths in layer.items():
            for symbol in system.symbols:
                target = stepper.step(state, symbol)
                if target is None:
                    continue
                if window is not None and not window.admits(
                    length, stepper.total(target)
                ):
                    continue
                next_layer[target] = next_layer.get(target, 0) + paths
        if len(next_layer) > state_budget:
            raise BudgetExceededError(
                f"Counting words of length {length} needs {len(next_layer)} states",
                budget=state_budget,
            )
        layer = next_layer
        counts.append(sum(layer.values()))
    return counts


def count_accepted(
    system: SymbolicSystem,
    cocycle: CenterCocycle,
    length: int,
    accept: Callable[[float], bool],
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> int:
    """Number of admissible words of ``length`` whose Birkhoff sum passes ``accept``."""
    stepper = _Stepper(system, cocycle)
    layer: Dict[State, int] = {stepper.root: 1}
    for step in range(length):
        next_layer: Dict[State, int] = {}
        for state, paths in layer.items():
            for symbol in system.symbols:
                target = stepper.step(state, symbol)
                if target is not None:
                    next_layer[target] = next_layer.get(target, 0) + paths
        if len(next_layer) > state_budget:
            raise BudgetExceededError(
                f"Counting words of length {step + 1} needs {len(next_layer)} states",
                budget=state_budget,
            )
        layer = next_layer
    return sum(paths for state, paths in layer.items() if accept(stepper.total(state)))


def random_below(rng: np.random.Generator, bound: int) -> int:
    """Uniform integer in ``[0, bound)``, also for bounds beyond 64 bits."""
    if bound <= 0:
        raise ValueError(f"Bound must be positive, got {bound}")
    if bound < 2**62:
        return int(rng.integers(bound))
    bits = bound.bit_length()
    size = (bits + 7) // 8
    excess = size * 8 - bits
    while True:
        value = int.from_bytes(rng.bytes(size), "big") >> excess
        if value < bound:
            return value


class WordFamily(ABC):
    """A set of words of one common length, stored in whatever way fits its size."""

    length: int

    @property
    @abstractmethod
    def count(self) -> int:
        """Exact number of words."""

    @abstractmethod
    def unrank(self, index: int) -> Word:
        """Word at position ``index`` in lexicographic order."""

    @abstractmethod
    def __iter__(self) -> Iterator[Word]:
        pass

    @abstractmethod
    def completions(self, prefix: Sequence[int]) -> int:
        """Number of words starting with ``prefix``."""

    @abstractmethod
    def max_completions(self, depth: int) -> int:
        """Largest number of words sharing one prefix of length ``depth``."""

    @abstractmethod
    def distinct_prefixes(self, depth: int) -> int:
        """Number of different prefixes of length ``depth``."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` words drawn uniformly with replacement, shape ``(size, length)``."""

    @abstractmethod
    def contains_many(self, words: np.ndarray) -> np.ndarray:
        """Membership of every row of ``words``."""

    def __contains__(self, word) -> bool:
        word = as_word(word)
        return len(word) == self.length and self.completions(word) == 1

    def first_symbol_counts(self) -> Dict[int, int]:
        counts: Dict[int, int] = {}
        for word in self:
            counts[word[0]] = counts.get(word[0], 0) + 1
        return counts

    def last_symbol_counts(self) -> Dict[int, int]:
        counts: Dict[int, int] = {}
        for word in self:
            counts[word[-1]] = counts.get(word[-1], 0) + 1
        return counts

    def least(self) -> Word:
        return self.unrank(0)


class ExplicitFamily(WordFamily):
    """Family backed by a sorted tuple of words."""

    def __init__(self, words: Sequence[Sequence[int]], length: Optional[int] = None):
        unique = sorted({as_word(word) for word in words})
        lengths = {len(word) for word in unique}
        if len(lengths) > 1:
            raise ValueError(f"Words of a family must share one length, got {lengths}")
        if length is None:
            if not unique:
                raise ValueError("Length of an empty family must be given")
            length = lengths.pop()
        elif lengths and lengths != {length}:
            raise ValueError(f"Words must have length {length}")
        self.length = length
        self.words: Tuple[Word, ...] = tuple(unique)
        self._index = {word: i for i, word in enumerate(self.words)}

    @property
    def count(self) -> int:
        return len(self.words)

    def unrank(self, index: int) -> Word:
        if not 0 <= index < self.count:
            raise IndexError(f"Index {index} outside family of {self.count} words")
        return self.words[index]

    def __iter__(self) -> Iterator[Word]:
        return iter(self.words)

    def completions(self, prefix: Sequence[int]) -> int:
        prefix = as_word(prefix)
        if len(prefix) > self.length:
            return 0
        low = bisect_left(self.words, prefix)
        high = bisect_left(self.words, prefix + (math.inf,))
        return high - low

    def max_completions(self, depth: int) -> int:
        if not self.words:
            return 0
        return max(Counter(word[:depth] for word in self.words).values())

    def distinct_prefixes(self, depth: int) -> int:
        return len({word[:depth] for word in self.words})

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        rows = np.array(self.words, dtype=np.uint8).reshape(-1, self.length)
        return rows[rng.integers(0, self.count, size=size)]

    def contains_many(self, words: np.ndarray) -> np.ndarray:
        known = {np.asarray(word, dtype=np.uint8).tobytes() for word in self.words}
        return np.array([row.astype(np.uint8).tobytes() in known for row in words])


class PrefixLattice(WordFamily):
    """Words of ``length`` whose every prefix satisfies ``window``.

    The family is held implicitly as a layered graph of count-vector states with the
    number of valid completions of every state, which is enough for counting, ranking,
    uniform sampling and prefix queries.

    :param accept: Optional extra condition on the Birkhoff sum of the full word
    """

    def __init__(
        self,
        system: SymbolicSystem,
        cocycle: CenterCocycle,
        length: int,
        window: Optional[Window] = None,
        accept: Optional[Callable[[float], bool]] = None,
        state_budget: int = DEFAULT_STATE_BUDGET,
    ):
        if length < 0:
            raise ValueError(f"Length must be non-negative: {length}")
        self.system = system
        self.cocycle = cocycle
        self.length = length
        self.window = window

        stepper = _Stepper(system, cocycle)
        states: List[List[State]] = [[stepper.root]]
        edges: List[List[List[Tuple[int, int]]]] = []
        total_states = 1
        for position in range(length):
            index: Dict[State, int] = {}
            layer_edges = []
            for state in states[position]:
                out = []
                for symbol in system.symbols:
                    target = stepper.step(state, symbol)
                    if target is None:
                        continue
                    total = stepper.total(target)
                    if window is not None and not window.admits(position + 1, total):
                        continue
                    last = position + 1 == length
                    if last and accept is not None and not accept(total):
                        continue
                    out.append((symbol, index.setdefault(target, len(index))))
                layer_edges.append(out)
            edges.append(layer_edges)
            states.append(list(index))
            total_states += len(index)
            if total_states > state_budget:
                raise BudgetExceededError(
                    f"Lattice for length {length} needs more than {state_budget} "
                    "states",
                    budget=state_budget,
                )
        self._states = states
        self._edges = edges

        completions = [[0] * len(layer) for layer in states]
        completions[length] = [1] * len(states[length])
        if length == 0 and accept is not None and not accept(0.0):
            completions[0] = [0]
        for position in range(length - 1, -1, -1):
            below = completions[position + 1]
            completions[position] = [
                sum(below[target] for _, target in out) for out in edges[position]
            ]
        self._completions = completions

        forward = [[0] * len(layer) for layer in states]
        forward[0][0] = 1 if completions[0][0] else 0
        for position in range(length):
            below = completions[position + 1]
            row = forward[position + 1]
            for source, out in enumerate(edges[position]):
                paths = forward[position][source]
                if not paths:
                    continue
                for _, target in out:
                    if below[target]:
                        row[target] += paths
        self._forward = forward
        self._tables: Optional[Tuple[List[np.ndarray], List[np.ndarray]]] = None

        logger.debug(
            f"Lattice of length {length} with {total_states} states, {self.count} words"
        )

    @property
    def count(self) -> int:
        return self._completions[0][0]

    @property
    def state_count(self) -> int:
        return sum(len(layer) for layer in self._states)

    def _walk(self, prefix: Sequence[int]) -> Optional[int]:
        node = 0
        for position, symbol in enumerate(prefix):
            for edge_symbol, target in self._edges[position][node]:
                if edge_symbol == symbol:
                    node = target
                    break
            else:
                return None
        return node

    def completions(self, prefix: Sequence[int]) -> int:
        if len(prefix) > self.length:
            return 0
        node = self._walk(prefix)
        if node is None:
            return 0
        return self._completions[len(prefix)][node]

    def max_completions(self, depth: int) -> int:
        alive = [
            done
            for done, paths in zip(self._completions[depth], self._forward[depth])
            if paths
        ]
        return max(alive, default=0)

    def distinct_prefixes(self, depth: int) -> int:
        return sum(self._forward[depth])

    def unrank(self, index: int) -> Word:
        if not 0 <= index < self.count:
            raise IndexError(f"Index {index} outside family of {self.count} words")
        node = 0
        word = []
        for position in range(self.length):
            for symbol, target in self._edges[position][node]:
                below = self._completions[position + 1][target]
                if index < below:
                    word.append(symbol)
                    node = target
                    break
                index -= below
        return tuple(word)

    def __iter__(self) -> Iterator[Word]:
        if not self.count:
            return
        stack: List[Tuple[int, int, Word]] = [(0, 0, ())]
        while stack:
            position, node, word = stack.pop()
            if position == self.length:
                yield word
                continue
            for symbol, target in reversed(self._edges[position][node]):
                if self._completions[position + 1][target]:
                    stack.append((position + 1, target, word + (symbol,)))

    def first_symbol_counts(self) -> Dict[int, int]:
        if self.length == 0:
            return {}
        return {
            symbol: self._completions[1][target]
            for symbol, target in self._edges[0][0]
            if self._completions[1][target]
        }

    def last_symbol_counts(self) -> Dict[int, int]:
        counts: Dict[int, int] = {}
        if self.length == 0:
            return counts
        position = self.length - 1
        for node, out in enumerate(self._edges[position]):
            paths = self._forward[position][node]
            if not paths:
                continue
            for symbol, target in out:
                if self._completions[self.length][target]:
                    counts[symbol] = counts.get(symbol, 0) + paths
        return counts

    def _sampling_tables(self) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        """Per layer: successor per symbol and cumulative transition probabilities."""
        if self._tables is None:
            k = self.system.alphabet_size
            successors, cumulative = [], []
            for position in range(self.length):
                layer = self._edges[position]
                below = self._completions[position + 1]
                above = self._completions[position]
                nxt = np.full((max(len(layer), 1), k), -1, dtype=np.int64)
                cdf = np.ones((max(len(layer), 1), k))
                for node, out in enumerate(layer):
                    probabilities = np.zeros(k)
                    for symbol, target in out:
                        if below[target]:
                            nxt[node, symbol] = target
                            probabilities[symbol] = below[target] / above[node]
                    valid = np.flatnonzero(nxt[node] >= 0)
                    if len(valid):
                        cdf[node] = np.cumsum(probabilities)
                        cdf[node, valid[-1] :] = 1.0
                successors.append(nxt)
                cumulative.append(cdf)
            self._tables = successors, cumulative
        return self._tables

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Uniform sampling by a random walk weighted with completion counts."""
        if not self.count:
            raise ValueError("Cannot sample from an empty family")
        successors, cumulative = self._sampling_tables()
        words = np.zeros((size, self.length), dtype=np.uint8)
        nodes = np.zeros(size, dtype=np.int64)
        for position in range(self.length):
            draws = rng.random(size)
            symbols = (cumulative[position][nodes] <= draws[:, None]).sum(axis=1)
            words[:, position] = symbols
            nodes = successors[position][nodes, symbols]
        return words

    def contains_many(self, words: np.ndarray) -> np.ndarray:
        words = np.asarray(words, dtype=np.int64)
        if words.ndim != 2 or words.shape[1] != self.length:
            return np.zeros(len(words), dtype=bool)
        successors, _ = self._sampling_tables()
        nodes = np.zeros(len(words), dtype=np.int64)
        valid = np.full(len(words), self.count > 0)
        for position in range(self.length):
            target = successors[position][nodes, words[:, position]]
            valid &= target >= 0
            nodes = np.where(target >= 0, target, 0)
        return valid
