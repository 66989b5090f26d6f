"""State models for the coordination runtime"""

from .models import (
    Context,
    Event,
    Fault,
    StepState,
    StepTrace,
)

__all__ = [
    'Context',
    'Event',
    'Fault',
    'StepState',
    'StepTrace',
]
