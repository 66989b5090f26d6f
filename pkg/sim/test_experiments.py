"""
Test cases for the experiment runners
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from config import Config, Modes
from errors import DomainError
from hierarchy.core import project_doubly_stochastic
from sim.experiments import (
    activation_experiment,
    amplification_experiment,
    gain_experiment,
    overhead_experiment,
)
from sim.scenario import parse_scenario


def test_gain_curve_shapes():
    curve = gain_experiment(depth=6, trials=300, seed=42)
    assert [p.depth for p in curve.points] == [1, 2, 3, 4, 5, 6]
    assert curve.converged

    medians = [p.unconstrained_median for p in curve.points]
    assert all(b > a for a, b in zip(medians, medians[1:])), "Unconstrained gain grows with depth"
    assert medians[-1] > 100

    for p in curve.points:
        assert p.unconstrained_q25 <= p.unconstrained_median <= p.unconstrained_q75
        assert p.constrained_max == pytest.approx(1.0, abs=1e-6)
        assert p.constrained_bwd_max == pytest.approx(1.0, abs=1e-6)
    print("✓ Gain curve")


def test_depth_one_median_against_direct_sampling():
    curve = gain_experiment(depth=1, trials=1000, seed=42)
    rng = np.random.default_rng(42)
    samples = rng.uniform(0.0, 1.5, size=(1000, 4, 4))
    oracle = float(np.median(samples.sum(axis=2).max(axis=1)))
    assert curve.points[0].unconstrained_median == pytest.approx(oracle)
    assert 3.0 <= oracle <= 4.5


def test_gain_is_seeded():
    first = gain_experiment(depth=3, trials=50, seed=7)
    second = gain_experiment(depth=3, trials=50, seed=7)
    other = gain_experiment(depth=3, trials=50, seed=8)
    assert first == second
    assert first.points != other.points


def test_gain_batches_match_single_pass():
    whole = gain_experiment(depth=3, trials=50, seed=3, chunk_entries=10 ** 6)
    batched = gain_experiment(depth=3, trials=50, seed=3, chunk_entries=7 * 3 * 16)
    assert batched.converged
    for a, b in zip(whole.points, batched.points):
        assert b.unconstrained_median == pytest.approx(a.unconstrained_median, rel=1e-12)
        assert b.unconstrained_q75 == pytest.approx(a.unconstrained_q75, rel=1e-12)
        assert b.constrained_max == pytest.approx(a.constrained_max, abs=1e-6)

    single = gain_experiment(depth=2, trials=5, seed=3, chunk_entries=1)
    assert len(single.points) == 2
    print("✓ Batched gain")


def test_gain_rejects_bad_arguments():
    with pytest.raises(DomainError):
        gain_experiment(depth=0, trials=10)
    with pytest.raises(DomainError):
        gain_experiment(depth=2, trials=10, low=1.0, high=1.0)


def test_amplification():
    double = [2.0 * np.eye(4)] * 4
    assert amplification_experiment(0.1, double) == pytest.approx(16.0)
    assert amplification_experiment(0.5, [np.eye(4)] * 3) == pytest.approx(1.0)

    rng = np.random.default_rng(Config.DEFAULT_SEED)
    projected = project_doubly_stochastic(rng.uniform(0.0, 1.5, size=(5, 4, 4))).matrix
    assert amplification_experiment(0.1, list(projected)) <= 1.0 + 1e-6

    with pytest.raises(DomainError):
        amplification_experiment(0.0, double)


def test_overhead_rows_match_closed_forms():
    rows = overhead_experiment(range(1, 6))
    assert len(rows) == 5 * len(Modes.ALL)
    assert all(r.matches for r in rows)

    four = {r.mode: (r.messages, r.comparisons) for r in rows if r.n == 4}
    assert four == {Modes.CTHA: (7, 5), Modes.UNCONSTRAINED: (12, 22), Modes.SINGLE_SCALE: (0, 0)}

    with pytest.raises(DomainError):
        overhead_experiment([0])


def test_activation_histograms():
    quiet = parse_scenario({"horizon": 12})
    assert activation_experiment(quiet) == {1: 8, 2: 4}
    assert activation_experiment(quiet, horizon=6) == {1: 4, 2: 2}

    goal = parse_scenario({"horizon": 12, "events": [{"step": 6, "trigger": "goal_completion"}]})
    assert activation_experiment(goal) == {1: 8, 2: 3, 3: 1}

    with pytest.raises(DomainError):
        activation_experiment(quiet, horizon=0)


if __name__ == "__main__":
    print("Testing experiments...")
    test_gain_curve_shapes()
    test_amplification()
    test_overhead_rows_match_closed_forms()
    print("\n✅ Experiment tests passed!")
