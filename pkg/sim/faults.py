"""
Fault injection for scenario runs
Faults rewrite layer outputs after the policies ran and before the constraint mechanisms see them
"""

import dataclasses
import logging
from collections import defaultdict
from typing import Dict, FrozenSet, List, Sequence, Set, Tuple

from agents.base import LayerOutput, OutboundMessage
from authority.proposals import Category
from config import FaultKinds, MessageKinds
from state.models import Fault

logger = logging.getLogger(__name__)


def malformed_message(kind: str, layer: int, t: int) -> dict:
    """A message that breaks its schema in several repairable ways"""
    if kind == MessageKinds.SUMMARY:
        return {
            "layer_id": layer,
            "timestamp": float(t),
            "state_digest": "corrupted " * 10,
            "observations": [f"spurious observation {i}" for i in range(8)],
            "anomalies": [{"type": "ERROR", "description": "injected fault"}],
            "mood": "unknown",
        }
    return {
        "goal_id": f"injected-goal-{t}-" + "x" * 40,
        "subgoals": [{"id": "g1", "description": "recover", "success_criteria": "state restored",
                      "dependencies": ["missing"]}],
        "priority": 3.5,
        "owner": "nobody",
    }


class FaultInjector:
    """Applies a fault plan step by step"""

    def __init__(self, faults: Sequence[Fault] = ()):
        self.by_step: Dict[int, List[Fault]] = defaultdict(list)
        for fault in faults:
            self.by_step[fault.step].append(fault)

    def forced(self, t: int) -> FrozenSet[int]:
        """Layers that must run at step t so their faults can take effect"""
        return frozenset(f.layer for f in self.by_step.get(t, []) if f.kind != FaultKinds.PERTURB)

    def inject(self, t: int, outputs: Dict[int, LayerOutput], n_layers: int,
               manifolds: Dict[int, object]) -> Tuple[Dict[int, LayerOutput], Dict[int, float], Set[int]]:
        """
        Returns:
            (rewritten outputs, per-layer state perturbations, layers whose messages must bypass the cache)
        """
        outputs = dict(outputs)
        offsets: Dict[int, float] = defaultdict(float)
        fresh: Set[int] = set()

        for fault in self.by_step.get(t, []):
            out = outputs.get(fault.layer)
            if fault.kind == FaultKinds.PERTURB:
                offsets[fault.layer] += fault.epsilon
                logger.info(f"Step {t}: perturbing layer {fault.layer} by {fault.epsilon}")
                continue
            if out is None or out.proposal is None:
                logger.warning(f"Step {t}: layer {fault.layer} produced nothing, {fault.kind} fault skipped")
                continue

            if fault.kind == FaultKinds.INVALID_MESSAGE:
                kind = MessageKinds.SUMMARY if fault.layer < n_layers else MessageKinds.PLAN
                message = OutboundMessage(kind, malformed_message(kind, fault.layer, t))
                outputs[fault.layer] = dataclasses.replace(out, messages=(message,))
                fresh.add(fault.layer)

            elif fault.kind == FaultKinds.AUTHORITY_OVERREACH:
                man = manifolds[fault.layer]
                candidates = sorted((c for c in man.forbidden if c not in man.downgrades), key=lambda c: c.value)
                target = candidates[0] if candidates else Category.COMPOSITE
                proposal = out.proposal.model_copy(update={"category": target})
                outputs[fault.layer] = dataclasses.replace(out, proposal=proposal)

            elif fault.kind == FaultKinds.CONFLICT_PAIR:
                reflex = outputs.get(1)
                if reflex is None or reflex.proposal is None:
                    logger.warning(f"Step {t}: no Reflex proposal to pair with layer {fault.layer}")
                    continue
                shared = f"conflict:{t}"
                for layer, current in ((1, reflex), (fault.layer, out)):
                    proposal = current.proposal.model_copy(
                        update={"resources": current.proposal.resources | {shared}})
                    outputs[layer] = dataclasses.replace(current, proposal=proposal)

            logger.info(f"Step {t}: injected {fault.kind} at layer {fault.layer}")
        return outputs, dict(offsets), fresh


__all__ = ["FaultInjector", "malformed_message"]
