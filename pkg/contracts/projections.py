"""
Manifold projections applied to messages in transit
Summary: sanitize, truncate to the token budget, validate. Plan: validate, then scope to the receiver.
"""

import copy
import logging
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Union

from pydantic import BaseModel, Field

from config import MessageKinds
from contracts.codec import token_count
from contracts.models import ValidationOutcome
from contracts.validation import default_message, schema_for, validate
from errors import DomainError

logger = logging.getLogger(__name__)

REDACTED = "[REDACTED]"

TauLookup = Union[Callable[[Dict[str, Any]], float], Mapping[str, float], None]


class ContractSettings(BaseModel):
    """Read-only contract configuration loaded at startup"""

    forbidden_patterns: List[str] = Field(default_factory=list)
    token_budgets: Dict[int, int] = Field(default_factory=dict)
    default_token_budget: int = Field(default=256, ge=1)
    summary_fields: Dict[int, List[str]] = Field(default_factory=dict)
    require_nonempty_subgoals: bool = False

    def budget_for(self, layer: int) -> int:
        return self.token_budgets.get(layer, self.default_token_budget)

    def fields_for(self, layer: int) -> Optional[List[str]]:
        return self.summary_fields.get(layer)


def _matches(text: str, pattern: str) -> bool:
    if pattern.startswith("^"):
        return text.startswith(pattern[1:])
    return pattern in text


def sanitize(raw: Any, patterns: Sequence[str] = ()) -> Any:
    """Redact every string that matches a forbidden pattern; structure is untouched"""
    if not patterns:
        return raw
    if isinstance(raw, str):
        return REDACTED if any(_matches(raw, p) for p in patterns) else raw
    if isinstance(raw, list):
        return [sanitize(v, patterns) for v in raw]
    if isinstance(raw, dict):
        return {k: sanitize(v, patterns) for k, v in raw.items()}
    return raw


def _whitelist(raw: Any, allowed: Optional[List[str]]) -> Any:
    if allowed is None or not isinstance(raw, dict):
        return raw
    keep = set(allowed) | set(schema_for(MessageKinds.SUMMARY).get("required", []))
    return {k: v for k, v in raw.items() if k in keep}


def _fits(msg: Any, k: int) -> bool:
    try:
        return token_count(msg) <= k
    except TypeError:
        # not encodable yet; validation will fix it first
        return True


def truncate_summary(raw: Any, k: int) -> Any:
    """
    Shrink a summary until its canonical form has at most k tokens.

    Drops observations last-first, then anomalies last-first, then the
    resource block, then trailing words of the state digest.
    """
    if not isinstance(raw, dict) or _fits(raw, k):
        return raw
    msg = dict(raw)
    for key in ("observations", "anomalies"):
        if isinstance(msg.get(key), list):
            items = list(msg[key])
            while items and not _fits({**msg, key: items}, k):
                items.pop()
            msg[key] = items
            if _fits(msg, k):
                return msg
    if "resources" in msg:
        msg.pop("resources")
        if _fits(msg, k):
            return msg
    digest = msg.get("state_digest")
    if isinstance(digest, str):
        words = [w for w in digest.split(" ") if w]
        while words and not _fits({**msg, "state_digest": " ".join(words)}, k):
            words.pop()
        msg["state_digest"] = " ".join(words)
    if not _fits(msg, k):
        msg = {key: value.replace(" ", "") if isinstance(value, str) else value for key, value in msg.items()}
    return msg


def _mark_changed(outcome: ValidationOutcome, notes: List[str]) -> ValidationOutcome:
    if not notes:
        return outcome
    status = "repaired" if outcome.status == "valid" else outcome.status
    return outcome.model_copy(update={"status": status, "diagnostics": outcome.diagnostics + notes})


def project_summary(raw: Any, k: int, layer: int, settings: Optional[ContractSettings] = None,
                    timestamp: float = 0.0) -> ValidationOutcome:
    """Sanitize, truncate to k tokens, then validate; the result always fits the budget"""
    if k < 1:
        raise DomainError(f"Token budget must be at least 1, got {k}")
    settings = settings or ContractSettings()
    notes: List[str] = []

    sanitized = sanitize(raw, settings.forbidden_patterns)
    if sanitized != raw:
        notes.append("sanitize: redacted forbidden content")
    scoped = _whitelist(sanitized, settings.fields_for(layer))
    if scoped != sanitized:
        notes.append(f"whitelist: dropped fields not permitted for layer {layer}")
    truncated = truncate_summary(scoped, k)
    if truncated != scoped:
        notes.append(f"truncate: reduced to {k} tokens")

    outcome = validate(truncated, MessageKinds.SUMMARY, layer=layer, timestamp=timestamp)
    if token_count(outcome.message) > k:
        shrunk = truncate_summary(outcome.message, k)
        notes.append(f"truncate: reduced validated message to {k} tokens")
        outcome = outcome.model_copy(update={"message": shrunk})
    return _mark_changed(outcome, notes)


def _tau_of(tau_min_of: TauLookup) -> Callable[[Dict[str, Any]], float]:
    if tau_min_of is None:
        return lambda subgoal: 0.0
    if callable(tau_min_of):
        return tau_min_of
    return lambda subgoal: float(tau_min_of.get(subgoal.get("id"), 0.0))


def project_plan(raw: Any, receiver_tau: float, tau_min_of: TauLookup = None,
                 settings: Optional[ContractSettings] = None) -> ValidationOutcome:
    """
    Validate a plan, then keep only subgoals the receiver's time scale can serve.

    Args:
        raw: Candidate plan
        receiver_tau: Characteristic time of the receiving layer (seconds)
        tau_min_of: Callable subgoal -> minimum time scale, or a mapping by subgoal id;
            subgoals with no entry need no minimum
        settings: Contract settings

    Returns:
        ValidationOutcome whose surviving subgoals all satisfy tau_min <= receiver_tau
    """
    if receiver_tau <= 0:
        raise DomainError(f"Receiver time scale must be positive, got {receiver_tau}")
    settings = settings or ContractSettings()
    tau_of = _tau_of(tau_min_of)

    outcome = validate(raw, MessageKinds.PLAN)
    message = copy.deepcopy(outcome.message)
    subgoals = message.get("subgoals", [])
    kept = [g for g in subgoals if tau_of(g) <= receiver_tau]
    notes = [f"scope: removed subgoal {g.get('id')}" for g in subgoals if g not in kept]

    survivors = {g["id"] for g in kept}
    for g in kept:
        deps = g.get("dependencies")
        if deps is None:
            continue
        live = [d for d in deps if d in survivors]
        if live != deps:
            notes.append(f"scope: dropped dangling dependencies of {g['id']}")
            g["dependencies"] = live
    message["subgoals"] = kept

    if settings.require_nonempty_subgoals and not kept:
        logger.warning("Plan has no subgoals within the receiver time scale, using default plan")
        return ValidationOutcome(
            kind=MessageKinds.PLAN,
            status="defaulted",
            message=default_message(MessageKinds.PLAN),
            diagnostics=outcome.diagnostics + notes + ["scope: no subgoal survived"],
        )
    return _mark_changed(outcome.model_copy(update={"message": message}), notes)


def project_policy(raw: Any) -> ValidationOutcome:
    """Schema validation and repair only; never scoped by lower layers"""
    return validate(raw, MessageKinds.POLICY)


def project_message(kind: str, raw: Any, *, sender: int, receiver_tau: Optional[float] = None,
                    settings: Optional[ContractSettings] = None, timestamp: float = 0.0,
                    tau_min_of: TauLookup = None) -> ValidationOutcome:
    """Dispatch to the projection of a message kind"""
    settings = settings or ContractSettings()
    if isinstance(raw, BaseModel) and hasattr(raw, "to_wire"):
        raw = raw.to_wire()
    if kind == MessageKinds.SUMMARY:
        return project_summary(raw, settings.budget_for(sender), sender, settings, timestamp)
    if kind == MessageKinds.PLAN:
        return project_plan(raw, receiver_tau if receiver_tau is not None else float("inf"), tau_min_of, settings)
    if kind == MessageKinds.POLICY:
        return project_policy(raw)
    raise DomainError(f"Unknown message kind '{kind}'")


__all__ = [
    "REDACTED",
    "ContractSettings",
    "project_message",
    "project_plan",
    "project_policy",
    "project_summary",
    "sanitize",
    "truncate_summary",
]
