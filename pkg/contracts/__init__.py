"""Typed message contracts: models, wire codec, validation and projections"""

from contracts.codec import parse, serialize, token_count
from contracts.models import (
    MESSAGE_MODELS,
    AnomalyFlag,
    PlanMessage,
    PolicyMessage,
    PolicyRule,
    RepairFailure,
    ResourceUsage,
    RollbackCondition,
    Subgoal,
    SummaryMessage,
    ValidationOutcome,
)
from contracts.projections import (
    REDACTED,
    ContractSettings,
    project_message,
    project_plan,
    project_policy,
    project_summary,
    sanitize,
    truncate_summary,
)
from contracts.validation import check, default_message, repair, validate

__all__ = [
    "MESSAGE_MODELS",
    "REDACTED",
    "AnomalyFlag",
    "ContractSettings",
    "PlanMessage",
    "PolicyMessage",
    "PolicyRule",
    "RepairFailure",
    "ResourceUsage",
    "RollbackCondition",
    "Subgoal",
    "SummaryMessage",
    "ValidationOutcome",
    "check",
    "default_message",
    "parse",
    "project_message",
    "project_plan",
    "project_policy",
    "project_summary",
    "repair",
    "sanitize",
    "serialize",
    "token_count",
    "truncate_summary",
    "validate",
]
