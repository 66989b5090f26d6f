"""
Test cases for the per-step coordination loop
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import orjson
import pytest

from agents import ScriptLine, ScriptedMessage
from authority.proposals import Category
from config import MessageKinds, Modes, TriggerNames
from state.models import Event
from workflows.scheduler import Mechanisms, RuntimeSettings, count_traffic
from workflows.step import CoordinationRuntime, members

ALL_FOUR = [1, 2, 3, 4]


def _runtime(mode=Modes.CTHA, n=4, **kwargs):
    settings_fields = {k: kwargs.pop(k) for k in ("cache", "parallel", "mechanisms") if k in kwargs}
    return CoordinationRuntime(RuntimeSettings(mode=mode, n_layers=n, **settings_fields), **kwargs)


def test_all_active_traffic_per_mode():
    """Per-step totals with every layer active"""
    assert count_traffic(_runtime(Modes.CTHA).step(ALL_FOUR)) == (7, 5)
    assert count_traffic(_runtime(Modes.UNCONSTRAINED).step(ALL_FOUR)) == (12, 22)

    single = _runtime(Modes.SINGLE_SCALE).step(ALL_FOUR)
    assert count_traffic(single) == (0, 0)
    assert single.active_layers == [1], "Single scale runs Reflex only"
    print("✓ Traffic accounting")


def test_reflex_only_step():
    trace = _runtime().step()
    assert trace.active_layers == [1]
    assert count_traffic(trace) == (2, 2)
    assert trace.projections == {"summary:1": "valid"}


def test_linear_against_quadratic_traffic():
    for n in range(2, 9):
        layers = range(1, n + 1)
        ctha = count_traffic(_runtime(Modes.CTHA, n).step(layers))
        unconstrained = count_traffic(_runtime(Modes.UNCONSTRAINED, n).step(layers))
        assert ctha[0] == 2 * n - 1, f"ctha messages for n={n}"
        assert unconstrained[0] == n * (n - 1), f"unconstrained messages for n={n}"


def test_one_action_per_step():
    runtime = _runtime()
    for trace in runtime.run(12):
        assert len(trace.emitted) == 1
        assert trace.final_action == trace.emitted[0]
        assert trace.conflicts == 0 and trace.violations_blocked == 0
    assert len(runtime.env.trajectory) == 13


def test_unchanged_rows_hit_the_cache():
    """Tactical keeps its row, so its summary is reused after the first activation"""
    runtime = _runtime()
    traces = runtime.run(12)
    assert traces[2].projections["summary:2"] == "valid"
    for step in (6, 9, 12):
        assert traces[step - 1].projections["summary:2"] == "cached"
    assert sum(t.cache_hits for t in traces) == 3
    assert runtime.cache.hits == 3

    uncached = _runtime(cache=False).run(12)
    assert sum(t.cache_hits for t in uncached) == 0


def test_policy_failure_becomes_noop_and_anomaly():
    runtime = _runtime(scripts={1: [ScriptLine(step=2, fail=True)]})
    first, second, third = runtime.run(3)
    assert second.emitted[0].category is Category.NOOP
    assert second.anomalies and second.anomalies[0].startswith("layer 1: PolicyFailure")
    assert 3 in third.active_layers, "An anomaly activates Strategic on the next step"
    assert 3 not in first.active_layers


def test_authority_violation_blocked():
    overreach = {1: [ScriptLine(step=1, proposal={"category": "policy_update"})]}

    blocked = _runtime(scripts=overreach).step()
    assert blocked.violations_blocked == 1
    assert blocked.emitted[0].category is Category.NOOP
    assert blocked.out_of_manifold_emitted == 0

    raw = _runtime(Modes.UNCONSTRAINED, scripts=overreach).step()
    assert raw.violations_blocked == 0
    assert raw.out_of_manifold_emitted == 1


def test_downgrade_keeps_payload():
    scripts = {2: [ScriptLine(step=3, proposal={"category": "plan_revision"})]}
    trace = _runtime(scripts=scripts).run(3)[-1]
    assert trace.violations_blocked == 1
    tactical = [m for m in members(trace.final_action) if m.layer == 2][0]
    assert tactical.category is Category.SUBTASK_SPLIT
    assert tactical.payload == {"inbox": ["summary:1"]}


def test_arbiter_ablation_emits_every_proposal():
    mechanisms = Mechanisms(arbiter_resolution=False)
    trace = _runtime(mechanisms=mechanisms).step(ALL_FOUR)
    assert len(trace.emitted) == 4
    assert trace.final_action is None
    assert count_traffic(trace) == (7, 5), "Accounting does not depend on the toggles"


def test_conflicting_scripts_resolved():
    shared = {"resources": ["db"]}
    scripts = {1: [ScriptLine(step=3, proposal=shared)], 2: [ScriptLine(step=3, proposal=shared)]}

    ctha = _runtime(scripts=scripts).run(3)[-1]
    assert ctha.conflicts == 1
    assert len(ctha.emitted) == 1 and ctha.conflicting_pairs_emitted == 0

    raw = _runtime(Modes.UNCONSTRAINED, scripts=scripts).run(3)[-1]
    assert len(raw.emitted) == 2
    assert raw.conflicting_pairs_emitted == 1


def test_malformed_summary_repaired_in_transit():
    body = {"layer_id": 1, "timestamp": 1.0, "state_digest": "x" * 100, "mood": "calm"}
    scripts = {1: [ScriptLine(step=1, messages=[ScriptedMessage(kind=MessageKinds.SUMMARY, body=body)])]}

    runtime = _runtime(scripts=scripts)
    trace = runtime.step()
    assert trace.projections["summary:1"] == "repaired"
    assert trace.repairs == 1
    delivered = runtime.mailbox["summary:1"]
    assert len(delivered["state_digest"]) <= 64 and "mood" not in delivered

    raw = _runtime(mechanisms=Mechanisms(message_contracts=False), scripts=scripts)
    assert raw.step().projections["summary:1"] == "raw"
    assert raw.mailbox["summary:1"] == body


def test_summary_anomaly_escalates():
    body = {"layer_id": 1, "timestamp": 1.0, "state_digest": "d",
            "anomalies": [{"type": "error", "description": "sensor dropout"}]}
    scripts = {1: [ScriptLine(step=1, messages=[ScriptedMessage(kind=MessageKinds.SUMMARY, body=body)])]}
    first, second = _runtime(scripts=scripts).run(2)
    assert first.anomalies == ["summary:1: anomaly reported"]
    assert second.active_layers == [1, 3]


def test_events_build_context():
    runtime = _runtime(events=[Event(step=1, trigger=TriggerNames.EMERGENCY),
                               Event(step=2, trigger=TriggerNames.SESSION_BOUNDARY)])
    ctx = runtime.context(1)
    assert ctx.emergency and not ctx.triggers
    assert runtime.context(2).triggers == {TriggerNames.SESSION_BOUNDARY}


def test_session_boundary_activates_institutional():
    runtime = _runtime(events=[Event(step=2, trigger=TriggerNames.SESSION_BOUNDARY)])
    assert runtime.run(2)[-1].active_layers == [1, 4]


def test_gain_per_mode():
    ctha = _runtime().step()
    assert ctha.gain_fwd == pytest.approx(1.0, abs=1e-6)
    assert ctha.gain_bwd == pytest.approx(1.0, abs=1e-6)
    assert _runtime(Modes.UNCONSTRAINED).step().gain_fwd > 1.5
    assert _runtime(Modes.SINGLE_SCALE).step().gain_fwd == 1.0


def test_parallel_and_sequential_agree():
    parallel = [t.to_record() for t in _runtime(parallel=True).run(12)]
    sequential = [t.to_record() for t in _runtime(parallel=False).run(12)]
    assert orjson.dumps(parallel) == orjson.dumps(sequential)


def test_runs_are_deterministic():
    first = [orjson.dumps(t.to_record()) for t in _runtime().run(10)]
    second = [orjson.dumps(t.to_record()) for t in _runtime().run(10)]
    assert first == second


def test_layer_count_variants():
    single_layer = _runtime(n=1).step()
    assert single_layer.active_layers == [1]
    assert count_traffic(single_layer) == (1, 2)

    six = _runtime(n=6).step(range(1, 7))
    assert count_traffic(six) == (11, 7)


if __name__ == "__main__":
    print("Testing step loop...")
    test_all_active_traffic_per_mode()
    test_reflex_only_step()
    test_one_action_per_step()
    print("\n✅ Step tests passed!")
