"""
State models for the coordination runtime
Step context, the graph state threaded through one step, and per-step traces
"""

from typing import TypedDict, List, Dict, Any, Optional, FrozenSet, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from authority.proposals import ActionProposal
from config import FaultKinds, TriggerNames


class Context(BaseModel):
    """What the layers and the arbiter know about the current step"""

    model_config = ConfigDict(frozen=True)

    step: int = Field(default=0, ge=0)
    emergency: bool = False
    triggers: FrozenSet[str] = frozenset()
    force_active: FrozenSet[int] = frozenset()

    def fired(self, trigger: str) -> bool:
        if trigger == TriggerNames.EMERGENCY:
            return self.emergency
        return trigger in self.triggers


class Fault(BaseModel):
    """A scheduled fault injected into one layer's output"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    step: int = Field(ge=1)
    layer: int = Field(ge=1)
    kind: Literal["perturb", "invalid_message", "authority_overreach", "conflict_pair"]
    epsilon: float = Field(default=0.1, ge=0.0)

    @model_validator(mode="after")
    def _conflict_needs_partner(self):
        if self.kind == FaultKinds.CONFLICT_PAIR and self.layer < 2:
            raise ValueError("conflict_pair pairs a slower layer with Reflex; layer must be at least 2")
        return self


class Event(BaseModel):
    """A scripted context event: a trigger firing or an emergency"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    step: int = Field(ge=1)
    trigger: str


class StepTrace(BaseModel):
    """Per-step record of activations, traffic, conflicts and gains"""

    step: int = Field(ge=0)
    mode: str
    active_layers: List[int]

    # === TRAFFIC ===
    messages_sent: int = Field(default=0, ge=0)
    messages_received: int = Field(default=0, ge=0)
    comparisons: int = Field(default=0, ge=0)
    cache_hits: int = Field(default=0, ge=0)

    # === CONSTRAINTS ===
    conflicts: int = Field(default=0, ge=0)
    violations_blocked: int = Field(default=0, ge=0)
    repairs: int = Field(default=0, ge=0)
    defaults: int = Field(default=0, ge=0)
    projections: Dict[str, str] = Field(default_factory=dict)   # channel -> validation status
    anomalies: List[str] = Field(default_factory=list)

    # === ACTIONS REACHING THE ENVIRONMENT ===
    final_action: Optional[ActionProposal] = None                # None when several actions are emitted
    emitted: List[ActionProposal] = Field(default_factory=list)
    conflicting_pairs_emitted: int = Field(default=0, ge=0)
    out_of_manifold_emitted: int = Field(default=0, ge=0)

    # === STABILITY ===
    gain_fwd: float = 1.0
    gain_bwd: float = 1.0
    perturbation: float = 0.0
    propagated_error: float = 0.0

    @model_validator(mode="after")
    def _reflex_always_active(self):
        if 1 not in self.active_layers:
            raise ValueError("Reflex must be active at every step")
        return self

    @property
    def n_active(self) -> int:
        return len(self.active_layers)

    def to_record(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


class StepState(TypedDict, total=False):
    """
    Graph state threaded through the phases of one step.
    Each phase node returns only the keys it changes.
    """

    # === IDENTIFICATION ===
    runtime: Any                        # CoordinationRuntime driving the step
    t: int                              # 1-based step number
    ctx: Context

    # === ACTIVATION & DELIVERY ===
    active: List[int]                   # active layers, ascending
    views: Dict[int, Any]               # layer -> LayerView snapshot
    groups: List[List[int]]             # layers invoked together, in order

    # === LAYER OUTPUTS ===
    outputs: Dict[int, Any]             # layer -> LayerOutput
    failures: Dict[int, str]            # layer -> policy failure description
    offsets: Dict[int, float]           # layer -> injected state perturbation
    fresh: List[int]                    # layers whose messages bypass the cache

    # === AUTHORITY & ARBITRATION ===
    proposals: List[ActionProposal]
    blocked: int
    resolution: Any                     # Resolution or None
    emitted: List[ActionProposal]

    # === BOOKKEEPING ===
    counters: Dict[str, float]          # traffic counters, then gains and errors
    projections: Dict[str, str]
    anomalies: List[str]
    trace: StepTrace


__all__ = ["Context", "Event", "Fault", "StepState", "StepTrace"]
