"""Scripted layer agents standing in for the layer policies"""

from typing import Dict, Optional, Sequence

from agents.base import (
    LayerAgent,
    LayerOutput,
    LayerView,
    OutboundMessage,
    PolicyFailure,
    ScriptLine,
    ScriptedMessage,
    state_digest,
)
from agents.institutional import InstitutionalAgent
from agents.reflex import ReflexAgent
from agents.strategic import StrategicAgent
from agents.tactical import TacticalAgent
from config import LayerNames

AGENT_TYPES = {
    LayerNames.REFLEX: ReflexAgent,
    LayerNames.TACTICAL: TacticalAgent,
    LayerNames.STRATEGIC: StrategicAgent,
    LayerNames.INSTITUTIONAL: InstitutionalAgent,
}


def create_agents(profiles: Sequence, scripts: Optional[Dict[int, Sequence[ScriptLine]]] = None) -> Dict[int, LayerAgent]:
    """One agent per layer profile; meta layers reuse the institutional agent"""
    scripts = scripts or {}
    agents = {}
    for profile in profiles:
        agent_type = AGENT_TYPES.get(profile.name, InstitutionalAgent)
        agents[profile.layer] = agent_type(profile.layer, profile.name, sorted(profile.resources),
                                           scripts.get(profile.layer))
    return agents


__all__ = [
    "AGENT_TYPES",
    "InstitutionalAgent",
    "LayerAgent",
    "LayerOutput",
    "LayerView",
    "OutboundMessage",
    "PolicyFailure",
    "ReflexAgent",
    "ScriptLine",
    "ScriptedMessage",
    "StrategicAgent",
    "TacticalAgent",
    "create_agents",
    "state_digest",
]
