"""Action proposals and per-layer authority manifolds"""

from authority.manifold import (
    DEFAULT_TABLES,
    AuthorityManifold,
    AuthoritySettings,
    ManifoldTable,
    RuleVerifier,
    default_manifolds,
    layer_names,
    meta_level,
    project_authority,
    verify,
    within_authority,
)
from authority.proposals import ActionProposal, Category, negation, noop

__all__ = [
    "DEFAULT_TABLES",
    "ActionProposal",
    "AuthorityManifold",
    "AuthoritySettings",
    "Category",
    "ManifoldTable",
    "RuleVerifier",
    "default_manifolds",
    "layer_names",
    "meta_level",
    "negation",
    "noop",
    "project_authority",
    "verify",
    "within_authority",
]
