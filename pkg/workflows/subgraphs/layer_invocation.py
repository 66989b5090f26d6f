"""
Layer invocation subgraph
Groups the active layers that may run together and invokes each group concurrently
"""

import asyncio
import logging
from typing import Dict, FrozenSet, List, Mapping, Sequence

from langgraph.graph import StateGraph, END

from agents.base import LayerAgent, LayerOutput, LayerView
from authority.proposals import noop
from state.models import StepState
from workflows.scheduler import MessageRouting, can_parallel

logger = logging.getLogger(__name__)


def plan_groups(layers: Sequence[int], routes: MessageRouting,
                resources: Mapping[int, FrozenSet[str]], parallel: bool = True) -> List[List[int]]:
    """
    Greedy first-fit grouping; every pair inside a group satisfies can_parallel.

    Layers are visited in ascending order so the grouping is deterministic.
    """
    groups: List[List[int]] = []
    for layer in layers:
        if parallel:
            for group in groups:
                if all(can_parallel(layer, other, routes, resources) for other in group):
                    group.append(layer)
                    break
            else:
                groups.append([layer])
        else:
            groups.append([layer])
    return groups


async def _invoke_group(agents: Dict[int, LayerAgent], views: Dict[int, LayerView], group: List[int]):
    return await asyncio.gather(
        *(asyncio.to_thread(agents[layer].process, views[layer]) for layer in group),
        return_exceptions=True,
    )


def _invoke_one(agent: LayerAgent, view: LayerView):
    try:
        return agent.process(view)
    except Exception as e:
        return e


def _loop_running() -> bool:
    """Callers already inside an event loop get sequential groups"""
    try:
        asyncio.get_running_loop()
    except RuntimeError:
        return False
    return True


def plan_groups_node(state: StepState) -> Dict:
    runtime = state["runtime"]
    groups = plan_groups(state["active"], runtime.routing, runtime.resources, runtime.settings.parallel)
    logger.debug(f"Step {state['t']}: invocation groups {groups}")
    return {"groups": groups}


def run_groups_node(state: StepState) -> Dict:
    """Invoke every group; a failing policy contributes a noop and a failure note"""
    runtime = state["runtime"]
    views = state["views"]
    outputs: Dict[int, LayerOutput] = {}
    failures: Dict[int, str] = {}

    for group in state["groups"]:
        if len(group) == 1 or _loop_running():
            results = [_invoke_one(runtime.agents[layer], views[layer]) for layer in group]
        else:
            results = asyncio.run(_invoke_group(runtime.agents, views, group))

        for layer, result in zip(group, results):
            if isinstance(result, BaseException):
                failures[layer] = f"{type(result).__name__}: {result}"
                logger.warning(f"Step {state['t']}: layer {layer} policy failed, using noop ({failures[layer]})")
                outputs[layer] = LayerOutput(proposal=noop(f"failed-{layer}-{state['t']}", layer))
            else:
                outputs[layer] = result

    return {"outputs": outputs, "failures": failures}


def create_layer_invocation_subgraph():
    """
    Creates the invocation subgraph.

    Flow: plan_groups -> run_groups -> End

    Returns:
        Compiled subgraph sharing the step state
    """
    subgraph = StateGraph(StepState)

    subgraph.add_node("plan_groups", plan_groups_node)
    subgraph.add_node("run_groups", run_groups_node)

    subgraph.set_entry_point("plan_groups")
    subgraph.add_edge("plan_groups", "run_groups")
    subgraph.add_edge("run_groups", END)

    return subgraph.compile()


__all__ = ["create_layer_invocation_subgraph", "plan_groups"]
