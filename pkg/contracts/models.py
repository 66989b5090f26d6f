"""
Typed message packets exchanged between layers
Wire form is a plain dict checked against schemas/*.json; these models are for authoring
"""

from typing import Any, ClassVar, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from config import MessageKinds


class AnomalyFlag(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    kind: Literal["error", "warning", "unexpected"] = Field(alias="type")
    description: str = Field(default="", max_length=128)


class ResourceUsage(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tokens_used: Optional[int] = None
    api_calls: Optional[int] = None
    elapsed_seconds: Optional[float] = None


class WireMessage(BaseModel):
    """Base for the three packets"""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)
    kind: ClassVar[str] = "message"

    def to_wire(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True, exclude_none=True)


class SummaryMessage(WireMessage):
    """Upward packet: what a layer observed and how it is doing"""

    kind: ClassVar[str] = MessageKinds.SUMMARY

    layer_id: int = Field(ge=1, le=4)
    timestamp: float
    state_digest: str = Field(max_length=64)
    observations: Optional[List[str]] = Field(default=None, max_length=5)
    anomalies: Optional[List[AnomalyFlag]] = Field(default=None, max_length=3)
    resources: Optional[ResourceUsage] = None


class Subgoal(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    description: str = Field(max_length=256)
    success_criteria: str = Field(max_length=128)
    dependencies: Optional[List[str]] = None


class RollbackCondition(BaseModel):
    model_config = ConfigDict(extra="forbid")

    condition: Optional[str] = None
    action: Optional[Literal["retry", "escalate", "abort"]] = None


class PlanMessage(WireMessage):
    """Downward packet: a goal split into subgoals for the next faster layer"""

    kind: ClassVar[str] = MessageKinds.PLAN

    goal_id: str = Field(max_length=32)
    subgoals: List[Subgoal] = Field(default_factory=list, max_length=10)
    constraints: Optional[List[str]] = Field(default=None, max_length=5)
    priority: float = Field(ge=0.0, le=1.0)
    deadline: Optional[int] = None
    rollback: Optional[RollbackCondition] = None


class PolicyRule(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    condition: str = Field(max_length=256)
    action: Literal["allow", "deny", "escalate", "log"]
    priority: Optional[int] = Field(default=None, ge=0, le=100)


class PolicyMessage(WireMessage):
    """Broadcast packet from the institutional layer"""

    kind: ClassVar[str] = MessageKinds.POLICY

    rules: List[PolicyRule] = Field(default_factory=list, max_length=20)
    thresholds: Optional[Dict[str, float]] = None
    forbidden: Optional[List[str]] = Field(default=None, max_length=10)
    valid_until: Optional[float] = None


MESSAGE_MODELS = {
    MessageKinds.SUMMARY: SummaryMessage,
    MessageKinds.PLAN: PlanMessage,
    MessageKinds.POLICY: PolicyMessage,
}


class ValidationOutcome(BaseModel):
    """Result of pushing a candidate message through its contract"""

    kind: str
    status: Literal["valid", "repaired", "defaulted"]
    message: Dict[str, Any]
    diagnostics: List[str] = Field(default_factory=list)


class RepairFailure(BaseModel):
    """Returned by repair when required content cannot be recovered"""

    reasons: List[str] = Field(default_factory=list)
