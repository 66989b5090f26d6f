"""
Institutional layer agent
Maintains policy; also drives meta layers above the standard four
"""

import math

from agents.base import LayerAgent, LayerView
from authority.proposals import Category


class InstitutionalAgent(LayerAgent):
    category = Category.POLICY_UPDATE
    tau_range = (3600.0, math.inf)
    confidence = 0.8
    urgency = 0.0

    def payload(self, view: LayerView):
        return {"session": view.step}
