"""
Per-step coordination loop
Activation -> delivery -> invocation (subgraph) -> faults -> messages -> authority -> arbiter -> environment -> trace
"""

import itertools
import logging
import math
from collections import defaultdict
from functools import lru_cache
from typing import Any, Dict, Iterable, List, Optional, Sequence, Set

import numpy as np
from langgraph.graph import StateGraph, END

from agents import LayerAgent, LayerOutput, LayerView, ScriptLine, create_agents
from arbiter.resolver import PriorityConfig, detect_conflict, resolve
from authority.manifold import AuthoritySettings, project_authority, within_authority
from authority.proposals import ActionProposal, Category, noop
from config import Config, MessageKinds, Modes, TriggerNames
from contracts.codec import parse, serialize
from contracts.projections import ContractSettings, project_message
from hierarchy.core import LayeredState, MappingParams, amax_gain, composite_mapping, propagate_error, residual_chain
from sim.environment import EnvironmentHook, ScriptedEnvironment
from sim.faults import FaultInjector
from state.models import Context, Event, StepState, StepTrace
from workflows.scheduler import (
    ActivationConfig,
    MessageCache,
    MessageRouting,
    RuntimeSettings,
    active_layers,
    default_profiles,
)
from workflows.subgraphs.layer_invocation import create_layer_invocation_subgraph

logger = logging.getLogger(__name__)


def _subgoal_tau(subgoal: Dict[str, Any]) -> float:
    """Plans may annotate subgoals with the fastest time scale they need"""
    value = subgoal.get("tau_min", 0.0)
    return float(value) if isinstance(value, (int, float)) and not isinstance(value, bool) else 0.0


def members(action: ActionProposal) -> List[ActionProposal]:
    """The layer proposals inside a composite action"""
    if action.category is Category.COMPOSITE and isinstance(action.payload, list):
        return [ActionProposal.model_validate(record) for record in action.payload]
    return [action]


class CoordinationRuntime:
    """
    Owns everything that persists between steps: layer profiles, agents,
    the environment, the message cache and mailbox, and the layered state.
    """

    def __init__(self,
                 settings: Optional[RuntimeSettings] = None,
                 *,
                 env: Optional[EnvironmentHook] = None,
                 agents: Optional[Dict[int, LayerAgent]] = None,
                 scripts: Optional[Dict[int, Sequence[ScriptLine]]] = None,
                 priority: Optional[PriorityConfig] = None,
                 authority: Optional[AuthoritySettings] = None,
                 contracts: Optional[ContractSettings] = None,
                 injector: Optional[FaultInjector] = None,
                 events: Iterable[Event] = ()):
        self.settings = settings or RuntimeSettings()
        n, d = self.settings.n_layers, self.settings.state_dim

        self.profiles = default_profiles(n, self.settings, authority)
        self.manifolds = {p.layer: p.manifold for p in self.profiles}
        self.resources = {p.layer: p.resources for p in self.profiles}
        self.activation = ActivationConfig.from_profiles(self.profiles)
        self.routing = MessageRouting.for_profiles(self.profiles)

        priority = (priority or PriorityConfig()).for_layers(n)
        if self.settings.tie_break is not None:
            priority = priority.model_copy(update={"tie_break": self.settings.tie_break})
        self.priority = priority
        self.contracts = contracts or ContractSettings()

        self.env = env if env is not None else ScriptedEnvironment(seed=Config.DEFAULT_SEED, dim=d)
        self.agents = agents if agents is not None else create_agents(self.profiles, scripts)
        self.injector = injector or FaultInjector()
        self.events: Dict[int, List[Event]] = defaultdict(list)
        for event in events:
            self.events[event.step].append(event)

        self.cache = MessageCache()
        self.mailbox: Dict[str, Any] = {}
        self.state = LayeredState.zeros(n, d)
        rng = np.random.default_rng(self.settings.mapping_seed)
        self.mapping_params = [MappingParams.random(n, d, rng) for _ in range(max(n - 1, 1))]
        self.last_rows: Dict[int, bytes] = {}
        self.pending: Set[str] = set()
        self.traces: List[StepTrace] = []
        self.t = 0

    @property
    def n(self) -> int:
        return self.settings.n_layers

    @property
    def mode(self) -> str:
        return self.settings.mode

    def uses(self, mechanism: str) -> bool:
        """Whether a constraint mechanism applies this run"""
        return self.mode == Modes.CTHA and getattr(self.settings.mechanisms, mechanism)

    def context(self, t: int, force_active: Iterable[int] = ()) -> Context:
        """Step context from scripted events and triggers raised by the previous step"""
        triggers = set(self.pending)
        emergency = False
        for event in self.events.get(t, []):
            if event.trigger == TriggerNames.EMERGENCY:
                emergency = True
            else:
                triggers.add(event.trigger)
        self.pending = set()
        return Context(
            step=t,
            emergency=emergency,
            triggers=frozenset(triggers),
            force_active=frozenset(force_active) | self.injector.forced(t),
        )

    def step(self, force_active: Iterable[int] = ()) -> StepTrace:
        """Run one step of the hierarchy and return its trace"""
        self.t += 1
        ctx = self.context(self.t, force_active)
        result = create_step_graph().invoke({"runtime": self, "t": self.t, "ctx": ctx})
        trace = result["trace"]
        self.traces.append(trace)
        return trace

    def run(self, horizon: int) -> List[StepTrace]:
        return [self.step() for _ in range(horizon)]


# === PHASE NODES ===

def activate_node(state: StepState) -> Dict:
    runtime = state["runtime"]
    if runtime.mode == Modes.SINGLE_SCALE:
        active = [1]
    else:
        active = active_layers(state["t"], state["ctx"], runtime.activation)
    logger.debug(f"Step {state['t']}: active layers {active}")
    return {"active": active}


def deliver_node(state: StepState) -> Dict:
    """Snapshot each active layer's inputs; Reflex observes the environment once"""
    runtime = state["runtime"]
    t = state["t"]
    observation = np.asarray(runtime.env.observe(t), dtype=float)

    views = {}
    for layer in state["active"]:
        profile = runtime.profiles[layer - 1]
        if runtime.mode == Modes.SINGLE_SCALE:
            inbox = {}
        elif runtime.mode == Modes.UNCONSTRAINED:
            inbox = {ch: msg for ch, msg in runtime.mailbox.items() if not ch.endswith(f":{layer}")}
        else:
            inbox = {ch: runtime.mailbox[ch] for ch in sorted(runtime.routing.inbound(layer)) if ch in runtime.mailbox}
        views[layer] = LayerView(
            layer=layer,
            name=profile.name,
            step=t,
            ctx=state["ctx"],
            row=runtime.state.row(layer).copy(),
            tau=profile.tau,
            temperature=profile.temperature,
            top=layer == runtime.n,
            inbox=inbox,
            observation=observation if layer == 1 else None,
        )
    return {"views": views}


def inject_node(state: StepState) -> Dict:
    runtime = state["runtime"]
    outputs, offsets, fresh = runtime.injector.inject(state["t"], state["outputs"], runtime.n, runtime.manifolds)
    anomalies = [f"layer {layer}: {reason}" for layer, reason in sorted(state.get("failures", {}).items())]
    return {"outputs": outputs, "offsets": offsets, "fresh": sorted(fresh), "anomalies": anomalies}


def _has_anomalies(kind: str, message: Any) -> bool:
    return kind == MessageKinds.SUMMARY and isinstance(message, dict) and bool(message.get("anomalies"))


def emit_node(state: StepState) -> Dict:
    """
    Route outbound messages.

    Contracted runs project each message and send it through the cache;
    raw runs store the message as produced.
    """
    runtime = state["runtime"]
    t = state["t"]
    counters = {"sent": 0, "cache_hits": 0, "repairs": 0, "defaults": 0}
    projections: Dict[str, str] = {}
    anomalies = list(state.get("anomalies", []))
    if runtime.mode == Modes.SINGLE_SCALE:
        return {"counters": counters, "projections": projections, "anomalies": anomalies}

    contracted = runtime.uses("message_contracts")
    for layer in state["active"]:
        out: LayerOutput = state["outputs"][layer]
        row = state["views"][layer].row.tobytes()
        changed = (row != runtime.last_rows.get(layer)
                   or layer in state.get("fresh", [])
                   or runtime.agents[layer].scripts_messages(t))
        runtime.last_rows[layer] = row

        for message in out.messages:
            if message.kind not in MessageKinds.ALL:
                logger.warning(f"Step {t}: layer {layer} sent unknown message kind '{message.kind}', dropped")
                continue
            channel = runtime.routing.channel(message.kind, layer)
            receivers = runtime.routing.receivers(message.kind, layer)

            if not contracted:
                runtime.mailbox[channel] = message.body
                projections[channel] = "raw"
                if _has_anomalies(message.kind, message.body):
                    anomalies.append(f"{channel}: anomaly reported")
                counters["sent"] += len(receivers)
                continue
            if not receivers:
                logger.debug(f"Step {t}: no receiver for {channel}")
                continue

            outcomes = []

            def project(kind=message.kind, body=message.body, sender=layer):
                receiver_tau = runtime.profiles[sender - 2].tau if kind == MessageKinds.PLAN else None
                outcome = project_message(kind, body, sender=sender, receiver_tau=receiver_tau,
                                          settings=runtime.contracts, timestamp=float(t), tau_min_of=_subgoal_tau)
                outcomes.append(outcome)
                return outcome.message

            if runtime.settings.cache:
                data, hit = runtime.cache.cached_message(layer, message.kind, t, changed, project)
            else:
                data, hit = serialize(project()), False

            runtime.mailbox[channel] = parse(data, message.kind)
            counters["sent"] += len(receivers)
            if hit:
                counters["cache_hits"] += 1
                projections[channel] = "cached"
                continue
            outcome = outcomes[0]
            projections[channel] = outcome.status
            counters["repairs"] += outcome.status == "repaired"
            counters["defaults"] += outcome.status == "defaulted"
            if outcome.status != "valid":
                logger.info(f"Step {t}: {channel} {outcome.status} ({'; '.join(outcome.diagnostics[:3])})")
            if _has_anomalies(message.kind, outcome.message):
                anomalies.append(f"{channel}: anomaly reported")

    return {"counters": counters, "projections": projections, "anomalies": anomalies}


def authorize_node(state: StepState) -> Dict:
    """One proposal per active layer, authority-projected when manifolds apply"""
    runtime = state["runtime"]
    enforce = runtime.uses("authority_manifolds")
    proposals, blocked = [], 0
    for layer in state["active"]:
        a = state["outputs"][layer].proposal or noop(f"empty-{layer}-{state['t']}", layer)
        if enforce:
            man = runtime.manifolds[layer]
            if not within_authority(a, man):
                blocked += 1
                a = project_authority(a, man)
        proposals.append(a)
    return {"proposals": proposals, "blocked": blocked}


def arbitrate_node(state: StepState) -> Dict:
    runtime = state["runtime"]
    proposals = state["proposals"]
    resolution = None

    if runtime.mode == Modes.SINGLE_SCALE:
        emitted = [proposals[0]]
    elif runtime.uses("arbiter_resolution"):
        candidates = [a for a in proposals if not a.is_noop]
        resolution = resolve(candidates, state["ctx"], runtime.priority, top_layer=runtime.n)
        emitted = [resolution.final]
    else:
        emitted = [a for a in proposals if not a.is_noop]
    return {"resolution": resolution, "emitted": emitted}


def apply_node(state: StepState) -> Dict:
    """Act on the environment and advance the layered state"""
    runtime = state["runtime"]
    t = state["t"]
    runtime.env.apply(state["emitted"], t)

    snapshot = runtime.state
    rows = snapshot.rows.copy()
    anomalies = list(state.get("anomalies", []))
    for layer, out in sorted(state["outputs"].items()):
        if out.state is None:
            continue
        values = np.asarray(out.state, dtype=float)
        if values.shape != (snapshot.d,) or not np.all(np.isfinite(values)):
            logger.warning(f"Step {t}: layer {layer} returned state of shape {values.shape}, row kept")
            anomalies.append(f"layer {layer}: invalid state row")
            continue
        rows[layer - 1] = values
    offsets = state.get("offsets", {})
    for layer, eps in offsets.items():
        rows[layer - 1] += eps
    runtime.state = LayeredState(rows, t)

    perturbation = float(sum(offsets.values()))
    if runtime.mode == Modes.SINGLE_SCALE:
        gain_fwd, gain_bwd, propagated = 1.0, 1.0, perturbation
    else:
        chain = residual_chain(snapshot, runtime.mapping_params, constrained=runtime.mode == Modes.CTHA,
                               tol=Config.PROJECTION_TOL, max_iter=Config.PROJECTION_MAX_ITER)
        gain_fwd, gain_bwd = amax_gain(composite_mapping(chain, 0, len(chain)))
        propagated = 0.0
        if offsets:
            eps = np.zeros(len(chain))
            for layer, e in offsets.items():
                eps[min(layer, len(chain)) - 1] += e
            propagated = propagate_error(eps, chain)

    return {
        "anomalies": anomalies,
        "counters": {**state["counters"], "gain_fwd": gain_fwd, "gain_bwd": gain_bwd,
                     "perturbation": perturbation, "propagated_error": propagated},
    }


def _conflicting_pairs(actions: Sequence[ActionProposal]) -> int:
    return sum(detect_conflict(a, b) for a, b in itertools.combinations(actions, 2))


def record_node(state: StepState) -> Dict:
    """Traffic accounting and the step trace"""
    runtime = state["runtime"]
    active = state["active"]
    n_a = len(active)
    counters = state["counters"]

    if runtime.mode == Modes.CTHA:
        sent, received, comparisons = counters["sent"], n_a, n_a + 1
    elif runtime.mode == Modes.UNCONSTRAINED:
        sent, received, comparisons = n_a * (n_a - 1), 0, n_a ** 2 + math.comb(n_a, 2)
    else:
        sent, received, comparisons = 0, 0, 0

    emitted = state["emitted"]
    resolution = state.get("resolution")
    reaching = [m for a in emitted for m in members(a) if not m.is_noop]
    conflicts = len(resolution.conflicts) if resolution is not None else _conflicting_pairs(emitted)
    out_of_manifold = sum(
        not within_authority(m, runtime.manifolds[m.layer]) for m in reaching if m.layer in runtime.manifolds
    )

    anomalies = state.get("anomalies", [])
    if anomalies:
        runtime.pending.add(TriggerNames.ANOMALY)

    trace = StepTrace(
        step=state["t"],
        mode=runtime.mode,
        active_layers=active,
        messages_sent=sent,
        messages_received=received,
        comparisons=comparisons,
        cache_hits=counters["cache_hits"],
        conflicts=conflicts,
        violations_blocked=state.get("blocked", 0),
        repairs=counters["repairs"],
        defaults=counters["defaults"],
        projections=state.get("projections", {}),
        anomalies=anomalies,
        final_action=emitted[0] if len(emitted) == 1 else None,
        emitted=emitted,
        conflicting_pairs_emitted=_conflicting_pairs(reaching),
        out_of_manifold_emitted=out_of_manifold,
        gain_fwd=counters["gain_fwd"],
        gain_bwd=counters["gain_bwd"],
        perturbation=counters["perturbation"],
        propagated_error=counters["propagated_error"],
    )
    logger.debug(f"Step {state['t']}: {sent + received} messages, {comparisons} comparisons, {conflicts} conflicts")
    return {"trace": trace}


@lru_cache(maxsize=1)
def create_step_graph():
    """
    Creates the per-step workflow.

    Flow: activate -> deliver -> invoke (subgraph) -> inject -> emit ->
          authorize -> arbitrate -> apply -> record -> End

    Returns:
        Compiled LangGraph application
    """
    workflow = StateGraph(StepState)

    workflow.add_node("activate", activate_node)
    workflow.add_node("deliver", deliver_node)
    workflow.add_node("invoke", create_layer_invocation_subgraph())
    workflow.add_node("inject", inject_node)
    workflow.add_node("emit", emit_node)
    workflow.add_node("authorize", authorize_node)
    workflow.add_node("arbitrate", arbitrate_node)
    workflow.add_node("apply", apply_node)
    workflow.add_node("record", record_node)

    workflow.set_entry_point("activate")
    workflow.add_edge("activate", "deliver")
    workflow.add_edge("deliver", "invoke")
    workflow.add_edge("invoke", "inject")
    workflow.add_edge("inject", "emit")
    workflow.add_edge("emit", "authorize")
    workflow.add_edge("authorize", "arbitrate")
    workflow.add_edge("arbitrate", "apply")
    workflow.add_edge("apply", "record")
    workflow.add_edge("record", END)

    return workflow.compile()


__all__ = ["CoordinationRuntime", "create_step_graph", "members"]
