"""
Base class for scripted layer agents
A layer reads an immutable view and returns a proposal, outbound messages and its next state row
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import xxhash
from pydantic import BaseModel, ConfigDict, Field

from authority.proposals import ActionProposal, Category
from config import MessageKinds
from state.models import Context


@dataclass(frozen=True)
class LayerView:
    """Snapshot handed to a layer; nothing in it may be mutated"""

    layer: int
    name: str
    step: int
    ctx: Context
    row: np.ndarray
    tau: float
    temperature: float
    top: bool = False
    inbox: Dict[str, Any] = field(default_factory=dict)    # channel -> received message
    observation: Optional[np.ndarray] = None               # Reflex only


@dataclass(frozen=True)
class OutboundMessage:
    kind: str
    body: Any


@dataclass(frozen=True)
class LayerOutput:
    proposal: Optional[ActionProposal]
    messages: Tuple[OutboundMessage, ...] = ()
    state: Optional[np.ndarray] = None


class ScriptedMessage(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str
    body: Any


class ScriptLine(BaseModel):
    """
    One scripted step of a layer.

    proposal fields override the layer's default proposal; messages, when
    given, replace the default outbound messages; fail makes the layer raise.
    """

    model_config = ConfigDict(extra="forbid")

    step: int = Field(ge=1)
    proposal: Optional[Dict[str, Any]] = None
    messages: Optional[List[ScriptedMessage]] = None
    state: Optional[List[float]] = None
    fail: bool = False


class PolicyFailure(RuntimeError):
    """A layer policy could not produce an output"""


def state_digest(row: np.ndarray) -> str:
    return xxhash.xxh64(np.ascontiguousarray(row, dtype=np.float64).tobytes()).hexdigest()


class LayerAgent:
    """Deterministic stand-in for one layer's policy"""

    category: Category = Category.NOOP
    tau_range: Tuple[float, float] = (0.0, math.inf)
    confidence: float = 0.5
    urgency: float = 0.0

    def __init__(self, layer: int, name: str, resources: Sequence[str] = (),
                 script: Optional[Sequence[ScriptLine]] = None):
        self.layer = layer
        self.name = name
        self.resources = frozenset(resources)
        self.script = {line.step: line for line in script or []}

    def process(self, view: LayerView) -> LayerOutput:
        """
        Produce this layer's output for one step

        Args:
            view: Immutable snapshot of the layer's inputs

        Returns:
            LayerOutput with proposal, messages and next state row
        """
        line = self.script.get(view.step)
        if line is not None and line.fail:
            raise PolicyFailure(f"{self.name} scripted failure at step {view.step}")

        proposal = self.propose(view)
        if line is not None and line.proposal:
            proposal = ActionProposal.model_validate({**proposal.to_record(), **line.proposal})

        if line is not None and line.messages is not None:
            messages = tuple(OutboundMessage(m.kind, m.body) for m in line.messages)
        else:
            messages = tuple(self.messages(view))

        if line is not None and line.state is not None:
            state = np.asarray(line.state, dtype=float)
        else:
            state = self.next_state(view)
        return LayerOutput(proposal=proposal, messages=messages, state=state)

    def scripts_messages(self, step: int) -> bool:
        """Whether the script replaces this layer's messages at a step"""
        line = self.script.get(step)
        return line is not None and line.messages is not None

    # === DEFAULT BEHAVIOUR ===

    def propose(self, view: LayerView) -> ActionProposal:
        tau_min, tau_max = self.tau_range
        return ActionProposal(
            id=f"{self.name}-{view.step}",
            layer=self.layer,
            category=self.category,
            resources=self.resources,
            tau_min=tau_min,
            tau_max=tau_max,
            confidence=self.confidence,
            urgency=self.urgency,
            payload=self.payload(view),
        )

    def payload(self, view: LayerView) -> Any:
        return None

    def messages(self, view: LayerView) -> List[OutboundMessage]:
        """Every layer but the top one reports upward"""
        if view.top:
            return []
        summary = {
            "layer_id": view.layer,
            "timestamp": float(view.step),
            "state_digest": state_digest(view.row),
        }
        return [OutboundMessage(MessageKinds.SUMMARY, summary)]

    def next_state(self, view: LayerView) -> np.ndarray:
        return np.array(view.row, dtype=float)
