"""
Schema validation, structural repair and default fallback for messages
Repair walks the draft-07 schema generically and never raises
"""

import copy
import logging
import math
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from jsonschema import Draft7Validator
from pydantic import BaseModel

from config import Config, MessageKinds
from contracts.models import RepairFailure, ValidationOutcome
from errors import DomainError

logger = logging.getLogger(__name__)

INT64_MIN = -(2 ** 63)
INT64_MAX = 2 ** 63 - 1

_UNREPAIRABLE = object()


@lru_cache(maxsize=None)
def schema_for(kind: str) -> Dict[str, Any]:
    if kind not in MessageKinds.ALL:
        raise DomainError(f"Unknown message kind '{kind}'")
    return Config.load_schema(kind)


@lru_cache(maxsize=None)
def validator_for(kind: str) -> Draft7Validator:
    schema = schema_for(kind)
    Draft7Validator.check_schema(schema)
    return Draft7Validator(schema)


def _encodable(text: str) -> bool:
    try:
        text.encode("utf-8")
    except UnicodeEncodeError:
        return False
    return True


def _representable(value: Any) -> bool:
    """True when the value survives a canonical encode/decode unchanged"""
    if value is None or isinstance(value, bool):
        return True
    if isinstance(value, str):
        return _encodable(value)
    if isinstance(value, int):
        return INT64_MIN <= value <= INT64_MAX
    if isinstance(value, float):
        return math.isfinite(value)
    if isinstance(value, list):
        return all(_representable(v) for v in value)
    if isinstance(value, dict):
        return all(isinstance(k, str) and _encodable(k) and _representable(v) for k, v in value.items())
    return False


def check(message: Any, kind: str) -> List[str]:
    """Schema violations of a candidate, empty when it is well-formed"""
    validator = validator_for(kind)
    problems = [
        f"{'/'.join(str(p) for p in error.absolute_path) or '<root>'}: {error.message}"
        for error in sorted(validator.iter_errors(message), key=lambda e: list(map(str, e.absolute_path)))
    ]
    if not problems and not _representable(message):
        problems.append("<root>: contains values with no canonical encoding")
    return problems


def default_message(kind: str, layer: int = 1, timestamp: float = 0.0) -> Dict[str, Any]:
    """The always-valid fallback message of a kind"""
    if kind == MessageKinds.SUMMARY:
        ts = float(timestamp) if math.isfinite(timestamp) else 0.0
        return {"layer_id": min(max(int(layer), 1), 4), "timestamp": ts, "state_digest": "DEFAULT"}
    if kind == MessageKinds.PLAN:
        return {"goal_id": "noop", "subgoals": [], "priority": 0}
    if kind == MessageKinds.POLICY:
        return {"rules": []}
    raise DomainError(f"Unknown message kind '{kind}'")


# === STRUCTURAL REPAIR ===

def _types_of(schema: Dict[str, Any]) -> List[str]:
    declared = schema.get("type")
    if declared is None:
        return []
    return [declared] if isinstance(declared, str) else list(declared)


def _matches_type(value: Any, type_name: str) -> bool:
    if type_name == "null":
        return value is None
    if type_name == "boolean":
        return isinstance(value, bool)
    if type_name == "string":
        return isinstance(value, str)
    if isinstance(value, bool):
        return False
    if type_name == "integer":
        return isinstance(value, int) or (isinstance(value, float) and value.is_integer())
    if type_name == "number":
        return isinstance(value, int) or (isinstance(value, float) and math.isfinite(value))
    if type_name == "array":
        return isinstance(value, list)
    if type_name == "object":
        return isinstance(value, dict)
    return False


def _clamp(value: Union[int, float], schema: Dict[str, Any], type_name: str, path: str, notes: List[str]):
    clamped = value
    low, high = schema.get("minimum"), schema.get("maximum")
    if low is not None and clamped < low:
        clamped = low
    if high is not None and clamped > high:
        clamped = high
    if isinstance(clamped, int) and not INT64_MIN <= clamped <= INT64_MAX:
        clamped = min(max(clamped, INT64_MIN), INT64_MAX) if type_name == "integer" else float(clamped)
    if clamped is value:
        return value
    clamped = int(clamped) if type_name == "integer" else float(clamped)
    notes.append(f"{path}: clamped {value!r} to {clamped!r}")
    return clamped


def _coerce_enum(value: Any, options: List[Any], path: str, notes: List[str]):
    if value in options and not isinstance(value, bool):
        return value
    if isinstance(value, str):
        for option in options:
            if isinstance(option, str) and option.lower() == value.lower():
                notes.append(f"{path}: coerced {value!r} to {option!r}")
                return option
    return _UNREPAIRABLE


def _repair_object(value: Dict[str, Any], schema: Dict[str, Any], path: str, notes: List[str],
                   evictions: Dict[str, Callable[[List[Any]], List[Any]]]):
    properties = schema.get("properties", {})
    extra = schema.get("additionalProperties", True)
    repaired: Dict[str, Any] = {}

    # 1. drop unknown fields
    for key in value:
        if key in properties:
            continue
        if extra is False or not isinstance(key, str) or not _encodable(key):
            notes.append(f"{path}/{key}: dropped unknown field")
        elif isinstance(extra, dict):
            fixed = _repair_value(value[key], extra, f"{path}/{key}", notes, evictions)
            if fixed is _UNREPAIRABLE:
                notes.append(f"{path}/{key}: dropped invalid entry")
            else:
                repaired[key] = fixed
        elif _representable(value[key]):
            repaired[key] = value[key]
        else:
            notes.append(f"{path}/{key}: dropped value with no canonical encoding")

    # 2-5. repair known fields in schema order
    required = schema.get("required", [])
    for key, subschema in properties.items():
        if key not in value:
            continue
        fixed = _repair_value(value[key], subschema, f"{path}/{key}", notes, evictions)
        if fixed is _UNREPAIRABLE:
            if key in required:
                notes.append(f"{path}/{key}: required field cannot be repaired")
                return _UNREPAIRABLE
            notes.append(f"{path}/{key}: dropped invalid optional field")
            continue
        repaired[key] = fixed

    missing = [key for key in required if key not in repaired]
    if missing:
        notes.append(f"{path or '<root>'}: missing required {', '.join(missing)}")
        return _UNREPAIRABLE

    # keep the caller's key order for surviving fields
    return {key: repaired[key] for key in value if key in repaired}


def _repair_array(value: List[Any], schema: Dict[str, Any], path: str, notes: List[str],
                  evictions: Dict[str, Callable[[List[Any]], List[Any]]]):
    item_schema = schema.get("items", {})
    items = []
    for index, item in enumerate(value):
        fixed = _repair_value(item, item_schema, f"{path}/{index}", notes, evictions)
        if fixed is _UNREPAIRABLE:
            notes.append(f"{path}/{index}: dropped unrepairable item")
        else:
            items.append(fixed)

    limit = schema.get("maxItems")
    if limit is not None and len(items) > limit:
        evict = evictions.get(path)
        items = evict(items)[:limit] if evict else items[:limit]
        notes.append(f"{path}: truncated to {limit} items")
    return items


def _repair_value(value: Any, schema: Dict[str, Any], path: str, notes: List[str],
                  evictions: Dict[str, Callable[[List[Any]], List[Any]]]):
    types = _types_of(schema)
    if types:
        matched = next((t for t in types if _matches_type(value, t)), None)
        if matched is None:
            notes.append(f"{path}: expected {'/'.join(types)}, got {type(value).__name__}")
            return _UNREPAIRABLE
    else:
        matched = None

    if matched == "object":
        value = _repair_object(value, schema, path, notes, evictions)
    elif matched == "array":
        value = _repair_array(value, schema, path, notes, evictions)
    elif matched in ("integer", "number"):
        value = _clamp(value, schema, matched, path, notes)
    elif matched == "string":
        limit = schema.get("maxLength")
        if limit is not None and len(value) > limit:
            notes.append(f"{path}: truncated string to {limit} characters")
            value = value[:limit]
        if not _encodable(value):
            notes.append(f"{path}: replaced unpaired surrogates")
            value = value.encode("utf-8", "replace").decode("utf-8")
    elif matched is None and not _representable(value):
        notes.append(f"{path}: value has no canonical encoding")
        return _UNREPAIRABLE

    if value is not _UNREPAIRABLE and "enum" in schema:
        value = _coerce_enum(value, schema["enum"], path, notes)
        if value is _UNREPAIRABLE:
            notes.append(f"{path}: no enum member matches")
    return value


def _evict_rules(rules: List[Any]) -> List[Any]:
    """Highest priority first, ties by id"""
    return sorted(rules, key=lambda r: (-(r.get("priority") or 0), r.get("id", "")))


_EVICTIONS: Dict[str, Dict[str, Callable[[List[Any]], List[Any]]]] = {
    MessageKinds.SUMMARY: {},
    MessageKinds.PLAN: {},
    MessageKinds.POLICY: {"/rules": _evict_rules},
}


def repair(raw: Any, kind: str) -> Tuple[Union[Dict[str, Any], RepairFailure], List[str]]:
    """
    Deterministic field-level repair of a candidate message.

    Order per node: drop unknown fields, clamp numeric ranges, truncate
    strings, drop unrepairable list items then truncate lists, coerce enum
    values by case-insensitive exact match.

    Returns:
        (repaired message or RepairFailure, repair notes)
    """
    if kind not in MessageKinds.ALL:
        raise DomainError(f"Unknown message kind '{kind}'")
    notes: List[str] = []
    fixed = _repair_value(raw, schema_for(kind), "", notes, _EVICTIONS[kind])
    if fixed is _UNREPAIRABLE:
        return RepairFailure(reasons=notes), notes
    return fixed, notes


def validate(raw: Any, kind: str, *, layer: int = 1, timestamp: float = 0.0) -> ValidationOutcome:
    """
    Push a candidate through its contract.

    Schema-conformant input comes back unchanged as valid, repairable input
    as repaired, anything else as the kind's default message.

    Args:
        raw: Parsed candidate (dict or message model)
        kind: summary, plan or policy
        layer: Sender layer, used by the summary default
        timestamp: Used by the summary default

    Raises:
        DomainError: Unknown kind
    """
    if kind not in MessageKinds.ALL:
        raise DomainError(f"Unknown message kind '{kind}'")
    if isinstance(raw, BaseModel):
        raw = raw.to_wire() if hasattr(raw, "to_wire") else raw.model_dump(mode="json")

    problems = check(raw, kind)
    if not problems:
        return ValidationOutcome(kind=kind, status="valid", message=copy.deepcopy(raw))

    fixed, notes = repair(raw, kind)
    if not isinstance(fixed, RepairFailure):
        remaining = check(fixed, kind)
        if not remaining:
            logger.info(f"Repaired {kind} message ({len(notes)} changes)")
            return ValidationOutcome(kind=kind, status="repaired", message=fixed, diagnostics=problems + notes)
        notes = notes + remaining

    logger.warning(f"Falling back to default {kind} message: {problems[0]}")
    return ValidationOutcome(
        kind=kind,
        status="defaulted",
        message=default_message(kind, layer, timestamp),
        diagnostics=problems + notes,
    )
