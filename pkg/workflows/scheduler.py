"""
Multi-rate scheduling for the layer hierarchy
Layer profiles, selective activation, message routing, caching and traffic accounting
"""

import logging
import math
from typing import Any, Callable, Dict, FrozenSet, List, Literal, Mapping, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from authority.manifold import AuthorityManifold, AuthoritySettings, layer_names, meta_level
from config import LayerNames, MessageKinds, Modes, TriggerNames
from contracts.codec import serialize
from hierarchy.core import TEMPERATURE_LADDER
from state.models import Context, StepTrace

logger = logging.getLogger(__name__)

TriggerPredicate = Callable[[Context], bool]

# Named trigger predicates over the step context
TRIGGERS: Dict[str, TriggerPredicate] = {
    TriggerNames.GOAL_COMPLETION: lambda ctx: ctx.fired(TriggerNames.GOAL_COMPLETION),
    TriggerNames.ANOMALY: lambda ctx: ctx.fired(TriggerNames.ANOMALY),
    TriggerNames.SESSION_BOUNDARY: lambda ctx: ctx.fired(TriggerNames.SESSION_BOUNDARY),
    TriggerNames.EMERGENCY: lambda ctx: ctx.emergency,
}

LADDER_BY_NAME = dict(zip((LayerNames.REFLEX, LayerNames.TACTICAL, LayerNames.STRATEGIC, LayerNames.INSTITUTIONAL),
                          TEMPERATURE_LADDER))
META_TEMPERATURE_STEP = 0.15


class Mechanisms(BaseModel):
    """Constraint mechanisms applied in ctha mode"""

    message_contracts: bool = True
    authority_manifolds: bool = True
    arbiter_resolution: bool = True


def _default_periods() -> Dict[str, Optional[int]]:
    return {LayerNames.REFLEX: 1, LayerNames.TACTICAL: 3, LayerNames.STRATEGIC: None, LayerNames.INSTITUTIONAL: None}


def _default_triggers() -> Dict[str, List[str]]:
    return {
        LayerNames.STRATEGIC: [TriggerNames.GOAL_COMPLETION, TriggerNames.ANOMALY],
        LayerNames.INSTITUTIONAL: [TriggerNames.SESSION_BOUNDARY],
    }


def _default_resources() -> Dict[str, List[str]]:
    return {
        LayerNames.REFLEX: ["env"],
        LayerNames.TACTICAL: ["working_memory"],
        LayerNames.STRATEGIC: ["semantic_store"],
        LayerNames.INSTITUTIONAL: ["policy_db"],
    }


class RuntimeSettings(BaseModel):
    """Mode, activation, routing and runtime switches"""

    mode: Literal["ctha", "unconstrained", "single_scale"] = Modes.CTHA
    n_layers: int = Field(default=4, ge=1)
    state_dim: int = Field(default=4, ge=1)
    periods: Dict[str, Optional[int]] = Field(default_factory=_default_periods)
    triggers: Dict[str, List[str]] = Field(default_factory=_default_triggers)
    resources: Dict[str, List[str]] = Field(default_factory=_default_resources)
    tie_break: Optional[Literal["comment", "pseudocode"]] = None
    parallel: bool = True
    cache: bool = True
    mapping_seed: int = 7
    mechanisms: Mechanisms = Field(default_factory=Mechanisms)

    @model_validator(mode="after")
    def _check_periods(self):
        for name, period in self.periods.items():
            if period is not None and period < 1:
                raise ValueError(f"period of {name} must be at least 1, got {period}")
        for name, triggers in self.triggers.items():
            unknown = [t for t in triggers if t not in TRIGGERS]
            if unknown:
                raise ValueError(f"unknown triggers for {name}: {unknown}")
        return self


class LayerProfile(BaseModel):
    """Everything the runtime knows about one layer"""

    model_config = ConfigDict(frozen=True)

    layer: int = Field(ge=1)
    name: str
    tau: float = Field(gt=0)
    period: Optional[int] = Field(default=None, ge=1)
    triggers: FrozenSet[str] = frozenset()
    resources: FrozenSet[str] = frozenset()
    manifold: AuthorityManifold
    temperature: float


class ActivationConfig(BaseModel):
    """Per-layer periods and trigger names, index 0 is Reflex"""

    periods: List[Optional[int]]
    triggers: List[FrozenSet[str]]

    @model_validator(mode="after")
    def _reflex_every_step(self):
        if not self.periods or self.periods[0] != 1:
            raise ValueError("Reflex must run with period 1")
        if len(self.triggers) != len(self.periods):
            raise ValueError("periods and triggers must cover the same layers")
        return self

    @classmethod
    def from_profiles(cls, profiles: Sequence[LayerProfile]) -> "ActivationConfig":
        return cls(periods=[p.period for p in profiles], triggers=[p.triggers for p in profiles])


def _temperature(name: str) -> float:
    level = meta_level(name)
    if level:
        return LADDER_BY_NAME[LayerNames.INSTITUTIONAL] + META_TEMPERATURE_STEP * level
    return LADDER_BY_NAME[name]


def default_profiles(n: int = 4, settings: Optional[RuntimeSettings] = None,
                     authority: Optional[AuthoritySettings] = None) -> List[LayerProfile]:
    """
    Layer profiles for an n-layer hierarchy.

    Meta layers above Institutional inherit its period, triggers and
    authority; each gets its own policy store.
    """
    settings = settings or RuntimeSettings()
    authority = authority or AuthoritySettings()
    profiles = []
    for layer, name in enumerate(layer_names(n), start=1):
        base = LayerNames.INSTITUTIONAL if meta_level(name) else name
        manifold = authority.manifold_for(layer, name)
        resources = settings.resources.get(name) or [f"{r}:{name}" for r in settings.resources.get(base, [])]
        period = 1 if layer == 1 else settings.periods.get(name, settings.periods.get(base))
        profiles.append(LayerProfile(
            layer=layer,
            name=name,
            tau=manifold.tau,
            period=period,
            triggers=frozenset(settings.triggers.get(name, settings.triggers.get(base, []))),
            resources=frozenset(resources),
            manifold=manifold,
            temperature=_temperature(name),
        ))
    return profiles


def is_active(layer: int, t: int, ctx: Context, cfg: ActivationConfig) -> bool:
    """t mod k == 0, or any of the layer's triggers fired"""
    if layer == 1 or layer in ctx.force_active:
        return True
    period = cfg.periods[layer - 1]
    if period is not None and t % period == 0:
        return True
    return any(TRIGGERS[name](ctx) for name in cfg.triggers[layer - 1])


def active_layers(t: int, ctx: Context, cfg: ActivationConfig) -> List[int]:
    return [layer for layer in range(1, len(cfg.periods) + 1) if is_active(layer, t, ctx, cfg)]


class MessageRouting(BaseModel):
    """
    Fixed topology: Summary one hop up, Plan one hop down, Policy broadcast
    from an institutional-class top layer to every layer below it.
    """

    n: int = Field(ge=1)
    policy_source: Optional[int] = None

    @classmethod
    def for_profiles(cls, profiles: Sequence[LayerProfile]) -> "MessageRouting":
        top = profiles[-1]
        broadcasts = top.name == LayerNames.INSTITUTIONAL or meta_level(top.name) > 0
        return cls(n=len(profiles), policy_source=top.layer if broadcasts and top.layer > 1 else None)

    def channel(self, kind: str, sender: int) -> str:
        return f"{kind}:{sender}"

    def receivers(self, kind: str, sender: int) -> List[int]:
        if kind == MessageKinds.SUMMARY:
            return [sender + 1] if sender < self.n else []
        if kind == MessageKinds.PLAN:
            return [sender - 1] if sender > 1 else []
        if kind == MessageKinds.POLICY:
            return list(range(1, sender)) if sender == self.policy_source else []
        return []

    def inbound(self, layer: int) -> FrozenSet[str]:
        """Channels a layer listens on"""
        channels = set()
        if layer > 1:
            channels.add(self.channel(MessageKinds.SUMMARY, layer - 1))
        if layer < self.n:
            channels.add(self.channel(MessageKinds.PLAN, layer + 1))
        if self.policy_source is not None and layer < self.policy_source:
            channels.add(self.channel(MessageKinds.POLICY, self.policy_source))
        return frozenset(channels)


def can_parallel(i: int, j: int, routes: MessageRouting, resources: Mapping[int, FrozenSet[str]]) -> bool:
    """Disjoint inbound channels and disjoint declared resources"""
    if i == j:
        return False
    if routes.inbound(i) & routes.inbound(j):
        return False
    return not (frozenset(resources.get(i, ())) & frozenset(resources.get(j, ())))


class MessageCache:
    """Last message per (sender, kind); reused while the sender's state is unchanged"""

    def __init__(self):
        self._store: Dict[Tuple[int, str], bytes] = {}
        self.hits = 0

    def cached_message(self, layer: int, kind: str, t: int, state_changed: bool,
                       fresh: Union[bytes, Any, Callable[[], Any]]) -> Tuple[bytes, bool]:
        """
        fresh may be a callable; it is only evaluated on a miss.

        Returns:
            (canonical bytes to send, whether they came from the cache)
        """
        key = (layer, kind)
        if not state_changed and key in self._store:
            self.hits += 1
            logger.debug(f"Cache hit for {kind} from layer {layer} at step {t}")
            return self._store[key], True
        if callable(fresh):
            fresh = fresh()
        data = fresh if isinstance(fresh, bytes) else serialize(fresh)
        self._store[key] = data
        return data, False

    def clear(self) -> None:
        self._store.clear()
        self.hits = 0


def count_traffic(trace: StepTrace) -> Tuple[int, int]:
    """(messages, comparisons) of one step"""
    return trace.messages_sent + trace.messages_received, trace.comparisons


def expected_traffic(mode: str, n: int) -> Tuple[int, int]:
    """Closed-form per-step totals of an n-layer hierarchy with every layer active and default messaging"""
    if mode == Modes.SINGLE_SCALE:
        return 0, 0
    if mode == Modes.UNCONSTRAINED:
        return n * (n - 1), n ** 2 + math.comb(n, 2)
    return 2 * n - 1, n + 1


__all__ = [
    "TRIGGERS",
    "ActivationConfig",
    "LayerProfile",
    "Mechanisms",
    "MessageCache",
    "MessageRouting",
    "RuntimeSettings",
    "active_layers",
    "can_parallel",
    "count_traffic",
    "default_profiles",
    "expected_traffic",
    "is_active",
]
