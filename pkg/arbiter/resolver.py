"""
Arbiter: conflict detection, priority scoring and resolution
Always yields exactly one conflict-free action; noop when nothing survives
"""

import itertools
import logging
from typing import Any, Callable, FrozenSet, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, Field, model_validator

from authority.proposals import ActionProposal, Category, negation, noop
from errors import ContractViolation, DomainError
from state.models import Context

logger = logging.getLogger(__name__)

PriorityHook = Callable[[ActionProposal, Context], float]

# Tiers decide before priorities do
TIER_DEFAULT = 0
TIER_SAFETY = 1
TIER_POLICY = 2


class PriorityConfig(BaseModel):
    """Weights of the priority function and the tie rule"""

    alpha: List[float] = Field(default_factory=lambda: [0.1, 0.2, 0.3, 0.4], min_length=1)
    beta: float = 0.5
    gamma: float = 0.2
    epsilon: float = Field(default=0.05, gt=0)
    # tie inside the epsilon margin: "comment" keeps the faster layer, "pseudocode" the slower one
    tie_break: Literal["comment", "pseudocode"] = "comment"
    safety_categories: FrozenSet[Category] = frozenset({Category.ERROR_RETRY, Category.IMMEDIATE_RESPONSE})
    learned_hook: Optional[PriorityHook] = Field(default=None, exclude=True)

    @model_validator(mode="after")
    def _slower_layers_rank_higher(self):
        if any(b <= a for a, b in zip(self.alpha, self.alpha[1:])):
            logger.warning(f"Base priorities {self.alpha} are not increasing with layer index")
        return self

    def for_layers(self, n: int) -> "PriorityConfig":
        """Extend base priorities to n layers in steps of 0.1"""
        if n <= len(self.alpha):
            return self
        extra = [self.alpha[-1] + 0.1 * k for k in range(1, n - len(self.alpha) + 1)]
        return self.model_copy(update={"alpha": self.alpha + extra})


class Resolution(BaseModel):
    """Outcome of one arbitration"""

    final: ActionProposal
    mask: List[bool] = Field(default_factory=list)
    conflicts: List[Tuple[int, int]] = Field(default_factory=list)
    priorities: List[float] = Field(default_factory=list)

    @property
    def masked(self) -> List[int]:
        return [i for i, kept in enumerate(self.mask) if not kept]

    def to_record(self) -> dict:
        return self.model_dump(mode="json")


def detect_conflict(a: ActionProposal, b: ActionProposal) -> bool:
    """Shared resources or contradicting effects"""
    if a.resources & b.resources:
        return True
    return any(negation(e) in b.effects for e in a.effects)


def urgency(a: ActionProposal, ctx: Context) -> float:
    if ctx.emergency and a.layer == 1:
        return 1.0
    return a.urgency


def priority(a: ActionProposal, ctx: Context, cfg: PriorityConfig) -> float:
    """Base priority of the layer plus urgency, confidence and the learned term"""
    if not 1 <= a.layer <= len(cfg.alpha):
        raise DomainError(f"No base priority for layer {a.layer} (configured for {len(cfg.alpha)})")
    score = cfg.alpha[a.layer - 1] + cfg.beta * urgency(a, ctx) + cfg.gamma * a.confidence
    if cfg.learned_hook is not None:
        score += float(cfg.learned_hook(a, ctx))
    return score


def _tier(a: ActionProposal, ctx: Context, cfg: PriorityConfig, top_layer: int) -> int:
    if a.policy_enforcement and a.layer == top_layer:
        return TIER_POLICY
    if ctx.emergency and a.layer == 1 and a.category in cfg.safety_categories:
        return TIER_SAFETY
    return TIER_DEFAULT


def _loser(i: int, j: int, actions: Sequence[ActionProposal], priorities: Sequence[float],
           tiers: Sequence[int], cfg: PriorityConfig) -> int:
    if tiers[i] != tiers[j]:
        return i if tiers[i] < tiers[j] else j
    p_i, p_j = priorities[i], priorities[j]
    if p_i > p_j + cfg.epsilon:
        return j
    if p_j > p_i + cfg.epsilon:
        return i
    slower = max((i, j), key=lambda k: (actions[k].layer, k))
    faster = j if slower == i else i
    return slower if cfg.tie_break == "comment" else faster


def resolve(actions: Sequence[ActionProposal], ctx: Optional[Context] = None,
            cfg: Optional[PriorityConfig] = None, top_layer: Optional[int] = None) -> Resolution:
    """
    Arbitrate a set of layer proposals into one action.

    Builds the conflict set over i < j; with no conflicts every proposal is
    composed without scoring. Otherwise each conflicting pair, in
    lexicographic order, masks its lower-tier member, else its
    lower-priority member beyond the epsilon margin, else applies the tie
    rule. Protected proposals (top-layer policy enforcement, emergency
    Reflex safety actions) only lose to a higher tier.

    Args:
        actions: Authority-projected proposals, one per active layer
        ctx: Step context
        cfg: Priority configuration
        top_layer: Index of the slowest layer (defaults to the configured layer count)

    Returns:
        Resolution with the composed final action
    """
    ctx = ctx or Context()
    cfg = cfg or PriorityConfig()
    top_layer = top_layer if top_layer is not None else len(cfg.alpha)
    actions = list(actions)
    if not actions:
        return Resolution(final=noop())

    conflicts = [(i, j) for i, j in itertools.combinations(range(len(actions)), 2)
                 if detect_conflict(actions[i], actions[j])]
    if not conflicts:
        return Resolution(final=compose(actions), mask=[True] * len(actions))

    priorities = [priority(a, ctx, cfg) for a in actions]
    tiers = [_tier(a, ctx, cfg, top_layer) for a in actions]
    mask = [True] * len(actions)
    for i, j in conflicts:
        mask[_loser(i, j, actions, priorities, tiers, cfg)] = False

    survivors = [a for a, kept in zip(actions, mask) if kept]
    logger.debug(f"Resolved {len(conflicts)} conflicts, masked {[a.id for a, k in zip(actions, mask) if not k]}")
    return Resolution(final=compose(survivors), mask=mask, conflicts=conflicts, priorities=priorities)


def compose(survivors: Sequence[ActionProposal]) -> ActionProposal:
    """
    Merge conflict-free proposals into one action.

    Raises:
        ContractViolation: two survivors conflict
    """
    survivors = list(survivors)
    for a, b in itertools.combinations(survivors, 2):
        if detect_conflict(a, b):
            raise ContractViolation(f"Cannot compose conflicting proposals {a.id} and {b.id}")
    if not survivors:
        return noop()
    if len(survivors) == 1:
        return survivors[0]

    ordered = [a for _, a in sorted(enumerate(survivors), key=lambda item: (item[1].layer, item[0]))]
    payload: List[Any] = [a.to_record() for a in ordered]
    return ActionProposal(
        id="+".join(a.id for a in ordered),
        layer=ordered[0].layer,
        category=Category.COMPOSITE,
        resources=frozenset().union(*(a.resources for a in ordered)),
        effects=frozenset().union(*(a.effects for a in ordered)),
        tau_min=min(a.tau_min for a in ordered),
        tau_max=max(a.tau_max for a in ordered),
        confidence=min(a.confidence for a in ordered),
        urgency=max(a.urgency for a in ordered),
        payload=payload,
        policy_enforcement=any(a.policy_enforcement for a in ordered),
    )


__all__ = [
    "PriorityConfig",
    "PriorityHook",
    "Resolution",
    "compose",
    "detect_conflict",
    "priority",
    "resolve",
    "urgency",
]
