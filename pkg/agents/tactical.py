"""
Tactical layer agent
Orders the next steps from whatever plans and summaries reached it
"""

from agents.base import LayerAgent, LayerView
from authority.proposals import Category


class TacticalAgent(LayerAgent):
    category = Category.STEP_ORDERING
    tau_range = (1.0, 60.0)
    confidence = 0.7
    urgency = 0.2

    def payload(self, view: LayerView):
        return {"inbox": sorted(view.inbox)}
