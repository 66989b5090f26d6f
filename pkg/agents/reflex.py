"""
Reflex layer agent
Acts on every observation; steers the environment state back towards zero
"""

import numpy as np

from agents.base import LayerAgent, LayerView
from authority.proposals import Category

GAIN = 0.5


class ReflexAgent(LayerAgent):
    """Fast feedback controller: delta = -GAIN * observation"""

    category = Category.TOOL_INVOCATION
    tau_range = (0.01, 1.0)
    confidence = 0.9
    urgency = 0.5

    def _signal(self, view: LayerView) -> np.ndarray:
        return view.observation if view.observation is not None else view.row

    def payload(self, view: LayerView):
        return {"delta": (-GAIN * self._signal(view)).tolist()}

    def next_state(self, view: LayerView) -> np.ndarray:
        return np.array(self._signal(view), dtype=float)
