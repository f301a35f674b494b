"""Check results and deterministic serialization of reports."""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List
import hashlib
import json
import math


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one verified property.

    Failures are data: checkers return these instead of raising.
    """

    name: str
    passed: bool
    detail: str = ""
    values: Dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "detail": self.detail,
            "values": {key: jsonable(value) for key, value in self.values.items()},
        }


def all_passed(checks: Iterable[CheckResult]) -> bool:
    return all(check.passed for check in checks)


def failures(checks: Iterable[CheckResult]) -> List[Dict[str, Any]]:
    """Machine-readable list of the failed checks."""
    return [check.as_dict() for check in checks if not check.passed]


def jsonable(value: Any) -> Any:
    """Convert numpy scalars, tuples and non-finite floats to plain JSON values."""
    if isinstance(value, dict):
        return {str(key): jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(item) for item in value]
    if hasattr(value, "tolist"):  # numpy arrays and scalars
        return jsonable(value.tolist())
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)  # "inf", "-inf" or "nan"
    if isinstance(value, bool):
        return value
    if isinstance(value, int) and value.bit_length() > 60:
        return {"log": math.log(value), "bits": value.bit_length()}
    return value


def canonical_json(obj: Any) -> str:
    """Serialize with sorted keys so equal reports are byte-identical."""
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()
