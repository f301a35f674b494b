"""Model files and run parameters.

A model file is TOML::

    [system]
    alphabet_size = 2
    forbidden = ["11"]          # or: transitions = [[1, 1], [1, 0]]
    bridge_length = 1           # optional, least feasible length by default

    [system.bridges]            # optional, "a-b" = bridge word
    "1-1" = "0"

    [cocycle]
    depth = 1
    values = { "0" = "log(1/4)", "1" = "log(2)" }

Cocycle values are numbers or ``log(x)`` with ``x`` a positive number or fraction.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union
import math
import re
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .exceptions import ConfigError
from .report import sha256_bytes
from .symbolic import CenterCocycle, SymbolicSystem, Word, as_word

LOG_VALUE = re.compile(r"^\s*log\(\s*([0-9.eE+\-]+)\s*(?:/\s*([0-9.eE+\-]+)\s*)?\)\s*$")
DECODE_POSITION = re.compile(r"\(at line (\d+), column (\d+)\)")


@dataclass(frozen=True)
class ModelConfig:
    """A loaded model file."""

    path: Path
    system: SymbolicSystem
    cocycle: CenterCocycle
    sha256: str


def parse_value(raw: Union[str, int, float], key: str) -> float:
    """Number or ``log(x)`` expression, in natural-log units."""
    if isinstance(raw, bool):
        raise ConfigError(f"`{key}` must be a number, got a boolean")
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        match = LOG_VALUE.match(raw)
        if match:
            try:
                argument = Fraction(match.group(1))
                if match.group(2):
                    argument /= Fraction(match.group(2))
            except (ValueError, ZeroDivisionError):
                raise ConfigError(f"`{key}` has an invalid logarithm `{raw}`")
            if argument <= 0:
                raise ConfigError(f"`{key}` takes the logarithm of {argument}")
            return math.log(argument.numerator) - math.log(argument.denominator)
        try:
            return float(raw)
        except ValueError:
            pass
    raise ConfigError(f"`{key}` must be a number or `log(x)`, got `{raw}`")


def _symbol_pair(key: str) -> Tuple[int, int]:
    parts = re.split(r"[-,\s]+", key.strip())
    if len(parts) != 2:
        raise ConfigError(f"Bridge key `{key}` must look like `a-b`")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"Bridge key `{key}` must name two symbols")


def _word(raw: Any, key: str) -> Word:
    try:
        if isinstance(raw, str) and "," in raw:
            return as_word(int(part) for part in raw.split(","))
        return as_word(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"`{key}` must be a word, got `{raw}`")


def build_system(section: Mapping[str, Any]) -> SymbolicSystem:
    if "alphabet_size" not in section:
        raise ConfigError("`system.alphabet_size` is required")
    size = section["alphabet_size"]
    if not isinstance(size, int) or isinstance(size, bool):
        raise ConfigError("`system.alphabet_size` must be an integer")
    if "forbidden" in section and "transitions" in section:
        raise ConfigError("Give `system.forbidden` or `system.transitions`, not both")

    transitions: Optional[Sequence[Sequence[int]]] = None
    if "transitions" in section:
        transitions = section["transitions"]
    elif "forbidden" in section:
        transitions = [[1] * size for _ in range(size)]
        for i, raw in enumerate(section["forbidden"]):
            word = _word(raw, f"system.forbidden[{i}]")
            if len(word) != 2:
                raise ConfigError(
                    f"`system.forbidden[{i}]` = `{raw}`: only two-letter forbidden "
                    f"words are supported, recode longer ones on a larger alphabet"
                )
            if max(word) >= size:
                raise ConfigError(f"`system.forbidden[{i}]` uses an unknown symbol")
            transitions[word[0]][word[1]] = 0

    bridges = None
    if "bridges" in section:
        bridges = {
            _symbol_pair(key): _word(raw, f"system.bridges.{key}")
            for key, raw in section["bridges"].items()
        }
    length = section.get("bridge_length")
    if bridges and length is None:
        length = len(next(iter(bridges.values())))

    try:
        return SymbolicSystem(size, transitions, length, bridges)
    except ValueError as err:
        raise ConfigError(f"Invalid `[system]`: {err}")


def build_cocycle(system: SymbolicSystem, section: Mapping[str, Any]) -> CenterCocycle:
    depth = section.get("depth", 1)
    if not isinstance(depth, int) or isinstance(depth, bool) or depth < 1:
        raise ConfigError("`cocycle.depth` must be a positive integer")
    raw_values = section.get("values")
    if raw_values is None:
        raise ConfigError("`cocycle.values` is required")

    if isinstance(raw_values, list):
        if depth != 1:
            raise ConfigError("A list of `cocycle.values` needs `depth = 1`")
        values = {
            (symbol,): parse_value(raw, f"cocycle.values[{symbol}]")
            for symbol, raw in enumerate(raw_values)
        }
    else:
        values = {
            _word(key, f"cocycle.values.{key}"): parse_value(
                raw, f"cocycle.values.{key}"
            )
            for key, raw in raw_values.items()
        }
    try:
        return CenterCocycle(system, depth, values)
    except ValueError as err:
        raise ConfigError(f"Invalid `[cocycle]`: {err}")


def parse_config(data: bytes, path: Union[str, Path] = "<string>") -> ModelConfig:
    try:
        document = tomllib.loads(data.decode("utf-8"))
    except UnicodeDecodeError as err:
        raise ConfigError(f"`{path}` is not UTF-8: {err}")
    except tomllib.TOMLDecodeError as err:
        line, column = getattr(err, "lineno", None), getattr(err, "colno", None)
        if line is None:
            position = DECODE_POSITION.search(str(err))
            if position:
                line, column = int(position.group(1)), int(position.group(2))
        message = DECODE_POSITION.sub("", str(err)).strip()
        raise ConfigError(f"Cannot parse `{path}`: {message}", line=line, column=column)
    for section in ("system", "cocycle"):
        if section not in document:
            raise ConfigError(f"`[{section}]` section is missing from `{path}`")
    system = build_system(document["system"])
    cocycle = build_cocycle(system, document["cocycle"])
    return ModelConfig(Path(path), system, cocycle, sha256_bytes(data))


def load_config(path: Union[str, Path]) -> ModelConfig:
    """Read a model file.

    :raises ConfigError: Unreadable file, TOML syntax or invalid model
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as err:
        raise ConfigError(f"Cannot read config `{path}`: {err.strerror}")
    return parse_config(data, path)


@dataclass
class RunConfig:
    """Everything a command needs besides the model, recorded in its report."""

    command: str
    config_path: Optional[Path] = None
    config_sha256: Optional[str] = None
    seed: int = 0
    threads: int = 1
    tolerances: Dict[str, float] = field(default_factory=dict)
    grids: Dict[str, Sequence[float]] = field(default_factory=dict)
    budgets: Dict[str, int] = field(default_factory=dict)
    parameters: Dict[str, Any] = field(default_factory=dict)
    output: Optional[Path] = None
    output_format: str = "json"

    def validate(self):
        """:raises ConfigError: Non-positive tolerance or budget, unordered grid"""
        for name, value in self.tolerances.items():
            if isinstance(value, (list, tuple)):
                bad = [item for item in value if not item > 0]
            else:
                bad = [] if value > 0 else [value]
            if bad:
                raise ConfigError(f"Tolerance `{name}` must be positive, got {bad[0]}")
        for name, grid in self.grids.items():
            grid = list(grid)
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError(f"Grid `{name}` must be strictly increasing")
        for name, value in self.budgets.items():
            if value < 1:
                raise ConfigError(f"Budget `{name}` must be positive, got {value}")
        if self.threads < 1:
            raise ConfigError(f"Thread count must be positive, got {self.threads}")
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"Unknown output format `{self.output_format}`")

    def header(self, version: str) -> Dict[str, Any]:
        """Fields every report embeds."""
        return {
            "command": self.command,
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "version": version,
        }
