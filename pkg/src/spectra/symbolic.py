"""Symbolic systems, locally constant cocycles and Birkhoff sums.

A system is a one-sided subshift of finite type given by a 0/1 transition matrix over
the alphabet ``0 .. k-1``. Points are handled through finite words, stored as tuples of
ints. The metric is ``d(x, y) = 2^-r`` with ``r`` the first index where ``x`` and ``y``
differ, so two words are ``(n, 2^-j)``-separated exactly when their ``n + j`` prefixes
differ.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple
import itertools
import logging
import math

import numpy as np

from .exceptions import (
    BudgetExceededError,
    InadmissibleWordError,
    NotPrimitiveError,
    WordTooShortError,
)

Word = Tuple[int, ...]

DEFAULT_ENUMERATION_BUDGET = 2**26

logger = logging.getLogger(__name__)


def as_word(symbols: Iterable) -> Word:
    """Turn a sequence of ints (or a string of digits) into a word tuple."""
    if isinstance(symbols, str):
        return tuple(int(char) for char in symbols.strip())
    return tuple(int(symbol) for symbol in symbols)


def word_to_string(word: Sequence[int]) -> str:
    """Compact text form, digits for alphabets up to 10 symbols."""
    if all(0 <= symbol < 10 for symbol in word):
        return "".join(str(symbol) for symbol in word)
    return ",".join(str(symbol) for symbol in word)


@dataclass(frozen=True)
class Resolution:
    """Scale ``epsilon = 2^-depth`` of the symbolic metric."""

    depth: int = 0

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError(f"Resolution depth must be non-negative, got {self.depth}")

    @property
    def epsilon(self) -> float:
        return 2.0**-self.depth

    def prefix_length(self, n: int) -> int:
        """Length of the prefix that decides ``(n, epsilon)``-separation."""
        return n + self.depth


def _boolean_power(matrix: np.ndarray, power: int) -> np.ndarray:
    result = np.eye(matrix.shape[0], dtype=bool)
    for _ in range(power):
        result = (result.astype(np.int64) @ matrix.astype(np.int64)) > 0
    return result


class SymbolicSystem:
    """Primitive subshift of finite type with a table of bridge words.

    The bridge table holds, for every ordered pair of symbols ``(a, b)``, a word ``w``
    of the common length ``bridge_length`` such that ``a w b`` is admissible. For the
    full shift all bridges are empty.

    :param alphabet_size: Number of symbols ``k``
    :param transitions: ``k x k`` 0/1 matrix, all ones when omitted
    :param bridge_length: Fixed bridge length, the smallest feasible one when omitted
    :param bridge_table: Explicit bridges keyed by ``(a, b)``, derived when omitted
    """

    def __init__(
        self,
        alphabet_size: int,
        transitions: Optional[Sequence[Sequence[int]]] = None,
        bridge_length: Optional[int] = None,
        bridge_table: Optional[Mapping[Tuple[int, int], Sequence[int]]] = None,
    ):
        if alphabet_size < 2:
            raise ValueError(
                f"Alphabet must have at least two symbols: {alphabet_size}"
            )
        self.alphabet_size = alphabet_size

        if transitions is None:
            matrix = np.ones((alphabet_size, alphabet_size), dtype=bool)
        else:
            matrix = np.asarray(transitions)
            if matrix.shape != (alphabet_size, alphabet_size):
                raise ValueError(
                    f"Transition matrix must be {alphabet_size}x{alphabet_size}, "
                    f"got shape {matrix.shape}"
                )
            if not np.isin(matrix, (0, 1)).all():
                raise ValueError("Transition matrix entries must be 0 or 1")
            matrix = matrix.astype(bool)
        matrix.setflags(write=False)
        self.transitions = matrix

        self._check_primitive()

        if bridge_length is None:
            bridge_length = self._least_bridge_length()
        if bridge_length < 0:
            raise ValueError(f"Bridge length must be non-negative: {bridge_length}")
        self.bridge_length = bridge_length

        # reach[r][x, b]: a path of exactly r steps leads from x to b
        self._reach = [np.eye(alphabet_size, dtype=bool)]
        for _ in range(bridge_length + 1):
            self._reach.append(
                (matrix.astype(np.int64) @ self._reach[-1].astype(np.int64)) > 0
            )

        self.bridges: Dict[Tuple[int, int], Word] = {}
        for a, b in itertools.product(range(alphabet_size), repeat=2):
            if bridge_table is not None and (a, b) in bridge_table:
                word = as_word(bridge_table[(a, b)])
                if len(word) != bridge_length:
                    raise ValueError(
                        f"Bridge {a}->{b} has length {len(word)}, "
                        f"expected {bridge_length}"
                    )
                self.check_word((a,) + word + (b,))
            else:
                word = self.connect(a, b, bridge_length)
            self.bridges[(a, b)] = word

    @classmethod
    def full_shift(cls, alphabet_size: int) -> "SymbolicSystem":
        return cls(alphabet_size)

    @classmethod
    def from_forbidden_words(
        cls, alphabet_size: int, forbidden: Iterable[Sequence[int]]
    ) -> "SymbolicSystem":
        """Build a one-step system from forbidden two-letter words."""
        matrix = np.ones((alphabet_size, alphabet_size), dtype=np.int64)
        for word in forbidden:
            word = as_word(word)
            if len(word) != 2:
                raise ValueError(
                    f"Only two-letter forbidden words are supported, got {word}"
                )
            matrix[word[0], word[1]] = 0
        return cls(alphabet_size, matrix)

    def _check_primitive(self):
        k = self.alphabet_size
        # Wielandt: a primitive k x k matrix has a positive power of order (k-1)^2 + 1
        bound = (k - 1) ** 2 + 1
        if not _boolean_power(self.transitions, bound).all():
            raise NotPrimitiveError(
                "Transition matrix is not primitive (irreducible and aperiodic)"
            )

    def _least_bridge_length(self) -> int:
        power = self.transitions.copy()
        length = 0
        while not power.all():
            power = (power.astype(np.int64) @ self.transitions.astype(np.int64)) > 0
            length += 1
        return length

    @property
    def symbols(self) -> range:
        return range(self.alphabet_size)

    @property
    def is_full_shift(self) -> bool:
        return bool(self.transitions.all())

    def allowed(self, a: int, b: int) -> bool:
        return bool(self.transitions[a, b])

    def connect(self, a: int, b: int, length: int) -> Word:
        """Lexicographically first ``w`` of ``length`` with ``a w b`` admissible."""
        reach = self._reach
        while len(reach) <= length + 1:
            reach.append(
                (self.transitions.astype(np.int64) @ reach[-1].astype(np.int64)) > 0
            )
        if not reach[length + 1][a, b]:
            raise InadmissibleWordError(
                f"No connecting word of length {length} from {a} to {b}", index=0
            )
        word = []
        current = a
        for position in range(length):
            steps_left = length - position
            for symbol in self.symbols:
                if self.transitions[current, symbol] and reach[steps_left][symbol, b]:
                    word.append(symbol)
                    current = symbol
                    break
        return tuple(word)

    def bridge(self, a: int, b: int) -> Word:
        return self.bridges[(a, b)]

    def least_extension(self, last: Optional[int], length: int) -> Word:
        """Lexicographically least admissible continuation after symbol ``last``."""
        word = []
        current = last
        for _ in range(length):
            for symbol in self.symbols:
                if current is None or self.transitions[current, symbol]:
                    word.append(symbol)
                    current = symbol
                    break
        return tuple(word)

    def check_word(self, word: Sequence[int]):
        """Raise :class:`InadmissibleWordError` at the first offending position."""
        previous = None
        for index, symbol in enumerate(word):
            if not 0 <= symbol < self.alphabet_size:
                raise InadmissibleWordError(
                    f"Symbol {symbol} at position {index} is not in the alphabet",
                    index=index,
                )
            if previous is not None and not self.transitions[previous, symbol]:
                raise InadmissibleWordError(
                    f"Transition {previous}->{symbol} at position {index} is forbidden",
                    index=index,
                )
            previous = symbol

    def is_admissible(self, word: Sequence[int]) -> bool:
        try:
            self.check_word(word)
        except InadmissibleWordError:
            return False
        return True

    def count_words(self, length: int) -> int:
        """Exact number of admissible words of ``length``."""
        if length < 0:
            raise ValueError(f"Length must be non-negative: {length}")
        if length == 0:
            return 1
        matrix = self.transitions.tolist()
        counts = [1] * self.alphabet_size
        for _ in range(length - 1):
            counts = [
                sum(counts[b] for b in self.symbols if matrix[a][b])
                for a in self.symbols
            ]
        return sum(counts)

    def enumerate_words(
        self, length: int, budget: int = DEFAULT_ENUMERATION_BUDGET
    ) -> Iterator[Word]:
        """All admissible words of ``length``, in lexicographic order."""
        if length < 0:
            raise ValueError(f"Length must be non-negative: {length}")
        if self.alphabet_size**length > budget:
            raise BudgetExceededError(
                f"Enumerating {self.alphabet_size}^{length} words exceeds the budget "
                f"of {budget}",
                budget=budget,
            )
        return self._enumerate(length)

    def _enumerate(self, length: int) -> Iterator[Word]:
        if length == 0:
            yield ()
            return
        stack: List[Word] = [(symbol,) for symbol in reversed(self.symbols)]
        while stack:
            word = stack.pop()
            if len(word) == length:
                yield word
                continue
            last = word[-1]
            for symbol in reversed(self.symbols):
                if self.transitions[last, symbol]:
                    stack.append(word + (symbol,))

    def topological_entropy(self) -> float:
        """Log of the spectral radius of the transition matrix."""
        eigenvalues = np.linalg.eigvals(self.transitions.astype(float))
        return float(math.log(max(abs(eigenvalues))))

    def reversed(self) -> "SymbolicSystem":
        """The system read backwards in time."""
        return SymbolicSystem(
            self.alphabet_size, self.transitions.T.astype(int), self.bridge_length
        )

    def relabelled(self, permutation: Sequence[int]) -> "SymbolicSystem":
        """The same system with symbol ``a`` renamed ``permutation[a]``."""
        if sorted(permutation) != list(self.symbols):
            raise ValueError(f"Not a permutation of the alphabet: {list(permutation)}")
        k = self.alphabet_size
        matrix = np.zeros((k, k), dtype=int)
        for a, b in itertools.product(range(k), repeat=2):
            matrix[permutation[a], permutation[b]] = self.transitions[a, b]
        return SymbolicSystem(k, matrix, self.bridge_length)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SymbolicSystem)
            and self.bridge_length == other.bridge_length
            and np.array_equal(self.transitions, other.transitions)
        )

    def __hash__(self) -> int:
        return hash((self.transitions.tobytes(), self.bridge_length))

    def __repr__(self) -> str:
        return (
            f"SymbolicSystem(alphabet_size={self.alphabet_size}, "
            f"full_shift={self.is_full_shift}, bridge_length={self.bridge_length})"
        )


class CenterCocycle:
    """Real function of the first ``depth`` symbols, the center log-derivative.

    Every admissible ``depth``-word must receive exactly one finite value.
    """

    def __init__(
        self,
        system: SymbolicSystem,
        depth: int,
        values: Mapping[Sequence[int], float],
    ):
        if depth < 1:
            raise ValueError(f"Cocycle depth must be at least 1, got {depth}")
        self.system = system
        self.depth = depth

        table: Dict[Word, float] = {}
        for word, value in values.items():
            word = as_word(word)
            if len(word) != depth:
                raise ValueError(f"Cocycle word {word} does not have length {depth}")
            system.check_word(word)
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"Cocycle value for {word} is not finite: {value}")
            table[word] = value

        words = list(system.enumerate_words(depth, budget=2**20))
        missing = [word for word in words if word not in table]
        if missing:
            raise ValueError(
                f"Cocycle has no value for {len(missing)} admissible words, "
                f"first: {word_to_string(missing[0])}"
            )
        self.words: Tuple[Word, ...] = tuple(words)
        self.table = table

        self.distinct_values: Tuple[float, ...] = tuple(sorted(set(table.values())))
        index = {value: i for i, value in enumerate(self.distinct_values)}
        self.value_index: Dict[Word, int] = {
            word: index[value] for word, value in table.items()
        }

        # Dense lookup by base-k code of the depth-word, NaN where inadmissible
        k = system.alphabet_size
        self._dense = np.full(k**depth, np.nan)
        for word, value in table.items():
            self._dense[self.code(word)] = value

    @classmethod
    def from_symbol_values(
        cls, system: SymbolicSystem, values: Sequence[float]
    ) -> "CenterCocycle":
        """Depth-one cocycle, one value per symbol."""
        if len(values) != system.alphabet_size:
            raise ValueError(
                f"Expected {system.alphabet_size} symbol values, got {len(values)}"
            )
        return cls(system, 1, {(symbol,): value for symbol, value in enumerate(values)})

    def code(self, word: Sequence[int]) -> int:
        code = 0
        for symbol in word:
            code = code * self.system.alphabet_size + symbol
        return code

    def value(self, word: Sequence[int]) -> float:
        try:
            return self.table[as_word(word)]
        except KeyError:
            raise InadmissibleWordError(
                f"Word {word_to_string(word)} has no cocycle value", index=0
            )

    @property
    def max_abs(self) -> float:
        return max(abs(value) for value in self.distinct_values)

    @property
    def min_value(self) -> float:
        return self.distinct_values[0]

    @property
    def max_value(self) -> float:
        return self.distinct_values[-1]

    @property
    def c_max(self) -> float:
        """Bound on the change of the Birkhoff sum over one inserted symbol pair."""
        return 2.0 * self.max_abs

    @property
    def variation(self) -> float:
        """Largest spread of values among words with the same first ``depth - 1``."""
        if self.depth == 1:
            return 0.0
        groups: Dict[Word, List[float]] = {}
        for word, value in self.table.items():
            groups.setdefault(word[:-1], []).append(value)
        return max(max(values) - min(values) for values in groups.values())

    def distortion_time(self, eps: float) -> int:
        """Least ``l`` with ``(depth - 1)(max phi - min phi) / l < eps``.

        The last ``depth - 1`` terms of a sum over a cylinder depend on symbols after
        it, each by at most the spread of the values.
        """
        if eps <= 0:
            raise ValueError(f"Distortion tolerance must be positive, got {eps}")
        spread = self.max_value - self.min_value
        if self.depth == 1 or spread == 0.0:
            return 0
        return math.floor((self.depth - 1) * spread / eps) + 1

    def term_values(self, word: np.ndarray) -> np.ndarray:
        """Values ``phi(w[i:i+depth])`` for every full window of ``word``."""
        word = np.asarray(word, dtype=np.int64)
        count = len(word) - self.depth + 1
        if count <= 0:
            return np.zeros(0)
        k = self.system.alphabet_size
        codes = np.zeros(count, dtype=np.int64)
        for offset in range(self.depth):
            codes = codes * k + word[offset : offset + count]
        terms = self._dense[codes]
        if np.isnan(terms).any():
            index = int(np.flatnonzero(np.isnan(terms))[0])
            raise InadmissibleWordError(
                f"Window at position {index} has no cocycle value", index=index
            )
        return terms

    def prefix_sums(self, word: np.ndarray) -> np.ndarray:
        """Truncated Birkhoff sums ``S_l`` for ``l = 0 .. len(word)``."""
        word = np.asarray(word)
        sums = np.zeros(len(word) + 1)
        terms = self.term_values(word)
        if len(terms):
            sums[self.depth :] = np.cumsum(terms)
        return sums

    def negated(self) -> "CenterCocycle":
        table = {word: -value for word, value in self.table.items()}
        return CenterCocycle(self.system, self.depth, table)

    def reversed(self) -> "CenterCocycle":
        """Cocycle for the reversed system, backward sums read forward."""
        system = self.system.reversed()
        return CenterCocycle(
            system,
            self.depth,
            {tuple(reversed(word)): value for word, value in self.table.items()},
        )

    def relabelled(self, permutation: Sequence[int]) -> "CenterCocycle":
        """Cocycle with symbols renamed by ``permutation`` (old -> new)."""
        system = self.system.relabelled(permutation)
        return CenterCocycle(
            system,
            self.depth,
            {
                tuple(permutation[symbol] for symbol in word): value
                for word, value in self.table.items()
            },
        )

    def __repr__(self) -> str:
        return (
            f"CenterCocycle(depth={self.depth}, "
            f"values={list(self.distinct_values)})"
        )


def check_admissible(system: SymbolicSystem, word: Sequence[int]):
    system.check_word(word)


def enumerate_words(
    system: SymbolicSystem, n: int, budget: int = DEFAULT_ENUMERATION_BUDGET
) -> Iterator[Word]:
    return system.enumerate_words(n, budget)


def birkhoff_sum(
    word: Sequence[int], cocycle: CenterCocycle, mode: str = "truncated"
) -> float:
    """Sum of the cocycle along ``word``.

    ``truncated`` sums over windows fully inside the word. ``periodic`` closes the word
    into a cycle, which must itself be admissible.
    """
    word = as_word(word)
    if not word:
        return 0.0
    system = cocycle.system
    system.check_word(word)
    d = cocycle.depth

    if mode == "truncated":
        windows = [word[i : i + d] for i in range(len(word) - d + 1)]
    elif mode == "periodic":
        if not system.allowed(word[-1], word[0]):
            raise InadmissibleWordError(
                f"Periodic closure {word[-1]}->{word[0]} is forbidden", index=len(word)
            )
        windows = [
            tuple(word[(i + offset) % len(word)] for offset in range(d))
            for i in range(len(word))
        ]
    else:
        raise ValueError(f"Unknown Birkhoff sum mode `{mode}`")

    return math.fsum(cocycle.table[window] for window in windows)


def finite_time_exponent(
    word: Sequence[int], cocycle: CenterCocycle, mode: str = "truncated"
) -> float:
    """Average of the cocycle along ``word``."""
    if len(word) == 0:
        raise ValueError("Finite-time exponent of an empty word is undefined")
    return birkhoff_sum(word, cocycle, mode) / len(word)


def _check_depth(words: Sequence[Word], n: int, resolution: Resolution):
    needed = resolution.prefix_length(n)
    offenders = [i for i, word in enumerate(words) if len(word) < needed]
    if offenders:
        raise WordTooShortError(
            f"{len(offenders)} words are shorter than {needed} symbols", offenders
        )
    return needed


def separated_count(
    words: Iterable[Sequence[int]], n: int, resolution: Resolution
) -> int:
    """Size of the largest ``(n, epsilon)``-separated subset of ``words``."""
    words = [as_word(word) for word in words]
    needed = _check_depth(words, n, resolution)
    return len({word[:needed] for word in words})


def thin_separated(
    words: Iterable[Sequence[int]], n: int, resolution: Resolution
) -> List[Word]:
    """One representative per ``(n, epsilon)``-class, the least of each class."""
    words = sorted(as_word(word) for word in words)
    needed = _check_depth(words, n, resolution)
    seen = set()
    kept = []
    for word in words:
        key = word[:needed]
        if key not in seen:
            seen.add(key)
            kept.append(word)
    return kept
