"""
Action proposals emitted by layers
Time bounds in seconds; tau_max may be unbounded (encoded as null on the wire)
"""

import math
from enum import Enum
from typing import Any, Dict, FrozenSet, Optional

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator


class Category(str, Enum):
    """Decision categories a layer may claim"""

    TOOL_INVOCATION = "tool_invocation"
    PARAMETER_SELECTION = "parameter_selection"
    ERROR_RETRY = "error_retry"
    IMMEDIATE_RESPONSE = "immediate_response"
    STEP_ORDERING = "step_ordering"
    LOCAL_OPTIMIZATION = "local_optimization"
    MEMORY_UPDATE = "memory_update"
    SUBTASK_SPLIT = "subtask_split"
    PLAN_REVISION = "plan_revision"
    GOAL_DECOMPOSITION = "goal_decomposition"
    RESOURCE_ALLOCATION = "resource_allocation"
    DEADLINE_SETTING = "deadline_setting"
    POLICY_UPDATE = "policy_update"
    THRESHOLD_TUNING = "threshold_tuning"
    CONSTRAINT_MODIFICATION = "constraint_modification"
    META_LEARNING = "meta_learning"
    NOOP = "noop"
    # produced by composition only; no authority table permits it
    COMPOSITE = "composite"


def negation(token: str) -> str:
    return token[1:] if token.startswith("!") else f"!{token}"


class ActionProposal(BaseModel):
    """A layer's candidate action"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str
    layer: int = Field(ge=1)
    category: Category
    resources: FrozenSet[str] = frozenset()
    effects: FrozenSet[str] = frozenset()
    tau_min: float = Field(default=0.0, ge=0.0)
    tau_max: float = math.inf
    confidence: float = Field(default=0.0, ge=0.0, le=1.0)
    urgency: float = Field(default=0.0, ge=0.0, le=1.0)
    payload: Any = None
    policy_enforcement: bool = False

    @field_validator("tau_max", mode="before")
    @classmethod
    def _unbounded(cls, value):
        return math.inf if value is None else value

    @model_validator(mode="after")
    def _check_bounds(self):
        if math.isnan(self.tau_min) or math.isnan(self.tau_max) or math.isinf(self.tau_min):
            raise ValueError("time-scale bounds must be real")
        if self.tau_min > self.tau_max:
            raise ValueError(f"tau_min {self.tau_min} exceeds tau_max {self.tau_max}")
        contradictions = sorted(e for e in self.effects if not e.startswith("!") and negation(e) in self.effects)
        if contradictions:
            raise ValueError(f"effects contradict themselves: {contradictions}")
        return self

    @field_serializer("resources", "effects")
    def _sorted(self, values: FrozenSet[str]):
        return sorted(values)

    @field_serializer("tau_max")
    def _finite_or_null(self, value: float) -> Optional[float]:
        return None if math.isinf(value) else value

    @property
    def is_noop(self) -> bool:
        return self.category is Category.NOOP

    def to_record(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def noop(id: str = "noop", layer: int = 1) -> ActionProposal:
    """The always-permitted empty action"""
    return ActionProposal(id=id, layer=layer, category=Category.NOOP)


__all__ = ["ActionProposal", "Category", "negation", "noop"]
