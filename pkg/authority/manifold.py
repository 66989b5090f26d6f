"""
Authority manifolds: which decisions each layer may take, at which time scale
Membership test, projection onto the manifold, and the verification hook
"""

import logging
import math
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from authority.proposals import ActionProposal, Category, noop
from config import LayerNames
from errors import ContractViolation, DomainError

logger = logging.getLogger(__name__)

VerifierHook = Callable[[ActionProposal, int], float]

STANDARD_LAYERS = (LayerNames.REFLEX, LayerNames.TACTICAL, LayerNames.STRATEGIC, LayerNames.INSTITUTIONAL)


class ManifoldTable(BaseModel):
    """One row of the authority table as stored in config"""

    model_config = ConfigDict(frozen=True)

    tau: float = Field(gt=0)
    permitted: FrozenSet[Category]
    forbidden: FrozenSet[Category] = frozenset()
    downgrades: Dict[Category, Category] = Field(default_factory=dict)


class AuthorityManifold(BaseModel):
    """Permitted decisions and characteristic time of a single layer"""

    model_config = ConfigDict(frozen=True)

    layer: int = Field(ge=1)
    name: str
    tau: float = Field(gt=0)
    permitted: FrozenSet[Category]
    forbidden: FrozenSet[Category] = frozenset()
    downgrades: Dict[Category, Category] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _consistent(self):
        overlap = self.permitted & self.forbidden
        if overlap:
            raise ValueError(f"{self.name}: categories both permitted and forbidden: {sorted(c.value for c in overlap)}")
        if Category.NOOP not in self.permitted:
            raise ValueError(f"{self.name}: noop must be permitted")
        if Category.COMPOSITE in self.permitted:
            raise ValueError(f"{self.name}: composite actions cannot be authorized")
        return self


def _table(tau, permitted, forbidden, downgrades=None) -> ManifoldTable:
    return ManifoldTable(
        tau=tau,
        permitted=frozenset(Category(c) for c in permitted),
        forbidden=frozenset(Category(c) for c in forbidden),
        downgrades={Category(k): Category(v) for k, v in (downgrades or {}).items()},
    )


DEFAULT_TABLES: Dict[str, ManifoldTable] = {
    LayerNames.REFLEX: _table(
        0.1,
        ["tool_invocation", "parameter_selection", "error_retry", "immediate_response", "noop"],
        ["goal_decomposition", "plan_revision", "resource_allocation", "policy_update"],
    ),
    LayerNames.TACTICAL: _table(
        10.0,
        ["step_ordering", "local_optimization", "memory_update", "subtask_split", "noop"],
        ["plan_revision", "goal_decomposition", "deadline_setting", "policy_update",
         "constraint_modification", "resource_allocation"],
        {"plan_revision": "subtask_split", "goal_decomposition": "subtask_split"},
    ),
    LayerNames.STRATEGIC: _table(
        600.0,
        ["plan_revision", "goal_decomposition", "resource_allocation", "deadline_setting", "noop"],
        ["tool_invocation", "policy_update", "threshold_tuning", "constraint_modification", "meta_learning"],
        {"tool_invocation": "resource_allocation"},
    ),
    LayerNames.INSTITUTIONAL: _table(
        86400.0,
        ["policy_update", "threshold_tuning", "constraint_modification", "meta_learning", "noop"],
        ["tool_invocation", "parameter_selection", "error_retry", "step_ordering", "local_optimization",
         "memory_update", "subtask_split", "immediate_response"],
    ),
}


def layer_names(n: int) -> List[str]:
    """
    Names of the layers of an n-layer hierarchy, fastest first.

    Fewer than four layers keep Reflex and the slowest planning layers;
    more than four append meta layers above Institutional.
    """
    if n < 1:
        raise DomainError(f"A hierarchy needs at least one layer, got {n}")
    if n == 1:
        return [LayerNames.REFLEX]
    if n == 2:
        return [LayerNames.REFLEX, LayerNames.STRATEGIC]
    if n == 3:
        return [LayerNames.REFLEX, LayerNames.TACTICAL, LayerNames.STRATEGIC]
    return list(STANDARD_LAYERS) + [f"{LayerNames.META}{k}" for k in range(1, n - 3)]


def meta_level(name: str) -> int:
    """0 for the standard layers, k for the k-th meta layer"""
    if name.startswith(LayerNames.META):
        return int(name[len(LayerNames.META):])
    return 0


class AuthoritySettings(BaseModel):
    """Manifold tables keyed by layer name"""

    tables: Dict[str, ManifoldTable] = Field(default_factory=lambda: dict(DEFAULT_TABLES))
    meta_tau_factor: float = Field(default=7.0, gt=1.0)

    @model_validator(mode="after")
    def _standard_tables_present(self):
        missing = [name for name in STANDARD_LAYERS if name not in self.tables]
        if missing:
            raise ValueError(f"authority tables missing for {missing}")
        return self

    def manifold_for(self, layer: int, name: str) -> AuthorityManifold:
        level = meta_level(name)
        table = self.tables[LayerNames.INSTITUTIONAL if level else name]
        return AuthorityManifold(
            layer=layer,
            name=name,
            tau=table.tau * self.meta_tau_factor ** level,
            permitted=table.permitted,
            forbidden=table.forbidden,
            downgrades=table.downgrades,
        )


def default_manifolds(n: int = 4, settings: Optional[AuthoritySettings] = None) -> List[AuthorityManifold]:
    settings = settings or AuthoritySettings()
    return [settings.manifold_for(i, name) for i, name in enumerate(layer_names(n), start=1)]


def _time_scale_fits(a: ActionProposal, man: AuthorityManifold) -> bool:
    return a.tau_min <= man.tau <= a.tau_max


def within_authority(a: ActionProposal, man: AuthorityManifold) -> bool:
    return _time_scale_fits(a, man) and a.category in man.permitted


def project_authority(a: ActionProposal, man: AuthorityManifold) -> ActionProposal:
    """
    Nearest permitted action to a proposal.

    In-manifold proposals pass through. A time-scale mismatch becomes a
    noop; a category with a configured downgrade into the permitted set is
    substituted with payload kept; anything else becomes a noop.
    """
    if within_authority(a, man):
        return a
    if not _time_scale_fits(a, man):
        logger.info(f"Blocked {a.id}: tau range [{a.tau_min}, {a.tau_max}] excludes {man.name} tau {man.tau}")
        return noop(a.id, a.layer)

    target = man.downgrades.get(a.category)
    if target is not None and target in man.permitted:
        logger.info(f"Downgraded {a.id} at {man.name}: {a.category.value} -> {target.value}")
        return a.model_copy(update={"category": target})

    logger.info(f"Blocked {a.id}: {a.category.value} outside {man.name} authority")
    return noop(a.id, a.layer)


class RuleVerifier:
    """Default verification hook: 1.0 inside the layer's manifold, else 0.0"""

    def __init__(self, manifolds: Sequence[AuthorityManifold]):
        self.manifolds = {m.layer: m for m in manifolds}

    def __call__(self, a: ActionProposal, layer: int) -> float:
        man = self.manifolds.get(layer)
        if man is None:
            raise DomainError(f"No authority manifold for layer {layer}")
        return 1.0 if within_authority(a, man) else 0.0


def verify(a: ActionProposal, layer: int, hook: Optional[VerifierHook] = None, *,
           manifolds: Optional[Sequence[AuthorityManifold]] = None) -> float:
    """
    Post-hoc authority score of a proposal in [0, 1].

    Raises:
        ContractViolation: the hook returned a score outside [0, 1]
    """
    if hook is None:
        hook = RuleVerifier(manifolds if manifolds is not None else default_manifolds(max(layer, 4)))
    score = hook(a, layer)
    try:
        value = float(score)
    except (TypeError, ValueError) as e:
        raise ContractViolation(f"Verifier returned non-numeric score {score!r}") from e
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise ContractViolation(f"Verifier score {value} outside [0, 1]")
    return value


__all__ = [
    "DEFAULT_TABLES",
    "AuthorityManifold",
    "AuthoritySettings",
    "ManifoldTable",
    "RuleVerifier",
    "VerifierHook",
    "default_manifolds",
    "layer_names",
    "meta_level",
    "project_authority",
    "verify",
    "within_authority",
]
