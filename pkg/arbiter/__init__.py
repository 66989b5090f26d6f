"""Conflict detection and arbitration of layer proposals"""

from arbiter.resolver import (
    PriorityConfig,
    PriorityHook,
    Resolution,
    compose,
    detect_conflict,
    priority,
    resolve,
    urgency,
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
