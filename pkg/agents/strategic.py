"""
Strategic layer agent
Revises the plan when activated by its period or a trigger
"""

from agents.base import LayerAgent, LayerView
from authority.proposals import Category


class StrategicAgent(LayerAgent):
    category = Category.PLAN_REVISION
    tau_range = (60.0, 3600.0)
    confidence = 0.6
    urgency = 0.1

    def payload(self, view: LayerView):
        return {"triggers": sorted(view.ctx.triggers), "inbox": sorted(view.inbox)}
