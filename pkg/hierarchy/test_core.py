"""
Test cases for the layered state, mappings and gain metrics
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from errors import DomainError, ShapeError
from hierarchy.core import (
    TEMPERATURE_LADDER,
    LayeredState,
    MappingParams,
    MappingSet,
    amax_gain,
    composite_mapping,
    compute_mappings,
    fixed_mappings,
    implied_tau_ratios,
    is_doubly_stochastic,
    layer_temperature,
    normalize_state,
    project_doubly_stochastic,
    propagate_error,
    propagate_hierarchy,
    propagate_layer,
)

positive_matrices = arrays(np.float64, (4, 4), elements=st.floats(min_value=0.1, max_value=2.0))


def test_normalize_constant_row_maps_to_zeros():
    """Zero-variance rows become all zeros"""
    out = normalize_state(LayeredState([[1.0, 1.0, 1.0, 1.0]]))
    assert np.array_equal(out.rows, np.zeros((1, 4))), f"Expected zeros, got {out.rows}"
    print("✓ Constant row normalized to zeros")


def test_normalize_two_point_row():
    """Row (0, 2) has mean 1 and population stdev 1"""
    out = normalize_state(LayeredState([[0.0, 2.0]]))
    assert np.allclose(out.rows, [[-1.0, 1.0]]), f"Expected (-1, 1), got {out.rows}"


def test_normalize_random_state_moments():
    """Every normalized row has zero mean and unit variance"""
    rng = np.random.default_rng(3)
    out = normalize_state(LayeredState(rng.normal(5.0, 3.0, (4, 8))))
    assert np.all(np.abs(out.rows.mean(axis=1)) < 1e-12)
    assert np.all(np.abs(out.rows.var(axis=1) - 1.0) < 1e-9)


def test_layered_state_rejects_non_finite():
    """NaN entries are outside the domain"""
    with pytest.raises(DomainError):
        LayeredState([[0.0, float("nan")]])
    with pytest.raises(ShapeError):
        LayeredState(np.zeros((0, 3)))


def test_compute_mappings_static_gate():
    """With gating off the mappings equal the static biases"""
    rng = np.random.default_rng(0)
    x = LayeredState(rng.normal(size=(4, 6)))
    m = compute_mappings(x, MappingParams.static(4, 6))
    assert np.array_equal(m.h_res, np.eye(4)), "Residual mapping should be identity"
    assert np.allclose(m.h_pre, 0.25), "Read-out should be uniform 1/n"


def test_compute_mappings_logistic_half():
    """alpha_res=1, theta_res=0, b_res=0 gives 0.5 everywhere"""
    n, d = 3, 5
    p = MappingParams(
        alpha_pre=0.0, alpha_post=0.0, alpha_res=1.0,
        theta_pre=np.zeros(d), theta_post=np.zeros(d), theta_res=np.zeros((n, d)),
        b_pre=np.zeros(n), b_post=np.zeros(n), b_res=np.zeros((n, n)),
    )
    m = compute_mappings(LayeredState(np.arange(15.0).reshape(n, d)), p)
    assert np.allclose(m.h_res, 0.5), f"Expected 0.5 entries, got {m.h_res}"


def test_compute_mappings_shape_mismatch():
    """Parameters sized for another hierarchy are rejected"""
    with pytest.raises(ShapeError):
        compute_mappings(LayeredState(np.zeros((4, 6))), MappingParams.static(3, 6))


def test_compute_mappings_constrained_is_doubly_stochastic():
    """Constrained mode projects the residual mixing"""
    rng = np.random.default_rng(11)
    params = [MappingParams.random(4, 4, rng) for _ in range(3)]
    x = LayeredState(rng.normal(size=(4, 4)))
    for depth in range(3):
        m = compute_mappings(x, params, depth, constrained=True)
        assert m.is_doubly_stochastic(1e-9), f"Depth {depth} residual not doubly stochastic"


def test_propagate_layer_pure_residual():
    """h_res = I and h_post = 0 leave the state unchanged"""
    rng = np.random.default_rng(1)
    x = LayeredState(rng.normal(size=(4, 3)))
    m = MappingSet(np.full(4, 0.25), np.zeros(4), np.eye(4))
    out = propagate_layer(x, m, lambda v: v * 100.0)
    assert np.array_equal(out.rows, x.rows)


def test_propagate_layer_single_stream():
    """Only the selected stream is read and written"""
    x = LayeredState([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    e1 = np.array([1.0, 0.0, 0.0])
    out = propagate_layer(x, MappingSet(e1, e1, np.zeros((3, 3))), lambda v: v)
    assert np.allclose(out.rows, [[1.0, 2.0], [0.0, 0.0], [0.0, 0.0]])


def test_propagate_layer_matches_term_by_term():
    """Both products evaluated separately agree with the propagation"""
    rng = np.random.default_rng(5)
    x = LayeredState(rng.normal(size=(4, 4)))
    m = MappingSet(rng.random(4), rng.random(4), rng.random((4, 4)))
    a = rng.normal(size=(4, 4))
    out = propagate_layer(x, m, lambda v: a @ v)
    residual = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            residual[i, j] = sum(m.h_res[i, k] * x.rows[k, j] for k in range(4))
    read = sum(m.h_pre[k] * x.rows[k] for k in range(4))
    expected = residual + np.outer(m.h_post, a @ read)
    assert np.allclose(out.rows, expected)


def test_propagate_layer_wrong_policy_output():
    """A policy returning the wrong length is a shape error"""
    with pytest.raises(ShapeError):
        propagate_layer(LayeredState(np.zeros((2, 3))), fixed_mappings(2), lambda v: np.zeros(2))


def test_single_layer_degenerates_to_plain_loop():
    """With n = 1 the constrained residual is 1 and propagation is x + pi(x)"""
    x = LayeredState([[0.5, -1.0, 2.0]])
    projected = project_doubly_stochastic([[3.7]]).matrix
    assert np.allclose(projected, [[1.0]])
    policy = lambda v: np.tanh(v)
    out = propagate_layer(x, MappingSet([1.0], [1.0], projected), policy)
    assert np.allclose(out.rows[0], x.rows[0] + policy(x.rows[0]))


def test_propagate_hierarchy_closed_form():
    """Recursive propagation equals composite residual plus residual-weighted policy terms"""
    rng = np.random.default_rng(9)
    x0 = LayeredState(rng.normal(size=(3, 2)))
    mappings = [MappingSet(rng.random(3), rng.random(3), rng.random((3, 3))) for _ in range(3)]
    a = rng.normal(size=(2, 2))
    policy = lambda v: a @ v

    out = propagate_hierarchy(x0, mappings, policy)

    res = [m.h_res for m in mappings]
    states = [x0.rows]
    for m in mappings:
        states.append(m.h_res @ states[-1] + np.outer(m.h_post, policy(m.h_pre @ states[-1])))
    expected = composite_mapping(res, 0, 3) @ x0.rows
    for i, m in enumerate(mappings):
        expected = expected + composite_mapping(res, i + 1, 3) @ np.outer(m.h_post, policy(m.h_pre @ states[i]))
    assert np.allclose(out.rows, expected)


def test_composite_mapping_identity_and_single():
    """Identity chains compose to identity; a single matrix is itself"""
    eye = np.eye(4)
    assert np.array_equal(composite_mapping([eye, eye, eye], 0, 3), eye)
    h = np.arange(16.0).reshape(4, 4)
    assert np.array_equal(composite_mapping([h], 0, 1), h)
    assert np.array_equal(composite_mapping([h], 1, 1), eye), "Empty range is identity"


def test_composite_mapping_ordering():
    """Deepest matrix is applied last"""
    rng = np.random.default_rng(2)
    a, b, c = (rng.normal(size=(4, 4)) for _ in range(3))
    assert np.allclose(composite_mapping([a, b, c], 0, 3), c @ b @ a)
    assert np.allclose(composite_mapping([a, b, c], 1, 3), c @ b)
    assert np.array_equal(composite_mapping([], 0, 0, n=3), np.eye(3)), "Empty chain is identity"


def test_composite_mapping_errors():
    with pytest.raises(ShapeError):
        composite_mapping([], 0, 0)
    with pytest.raises(ShapeError):
        composite_mapping([np.eye(2)], 0, 1, n=3)
    with pytest.raises(DomainError):
        composite_mapping([np.eye(2)], 1, 0)


def test_amax_gain_examples():
    assert amax_gain(np.eye(5)) == (1.0, 1.0)
    assert amax_gain([[2.0, 0.0], [0.0, 2.0]]) == (2.0, 2.0)
    assert amax_gain([[1.0, -3.0], [0.5, 0.0]]) == (4.0, 3.0)
    with pytest.raises(DomainError):
        amax_gain(np.zeros((0, 0)))


def test_projection_fixed_point():
    """A doubly stochastic input is returned after one sweep"""
    h = np.full((4, 4), 0.25)
    result = project_doubly_stochastic(h)
    assert result.converged and result.iterations == 1
    assert np.allclose(result.matrix, h, atol=1e-9)


def test_projection_diagonal_gives_identity():
    result = project_doubly_stochastic([[2.0, 0.0], [0.0, 2.0]])
    assert np.allclose(result.matrix, np.eye(2), atol=1e-9)


def test_projection_rejects_bad_input():
    with pytest.raises(DomainError):
        project_doubly_stochastic(np.zeros((0, 0)))
    with pytest.raises(DomainError):
        project_doubly_stochastic(np.ones((2, 3)))


def test_projection_stack():
    """Each matrix in a stack is projected independently"""
    rng = np.random.default_rng(4)
    stack = rng.uniform(0.0, 1.5, (10, 3, 4, 4))
    result = project_doubly_stochastic(stack)
    assert result.matrix.shape == stack.shape
    for h in result.matrix.reshape(-1, 4, 4):
        assert is_doubly_stochastic(h, 1e-9)


@settings(max_examples=200, deadline=None)
@given(positive_matrices)
def test_projection_is_non_expansive(h):
    """Projected matrices have unit Amax gain in both directions"""
    fwd, bwd = amax_gain(project_doubly_stochastic(h, tol=1e-9).matrix)
    assert 1 - 1e-8 <= fwd <= 1 + 1e-8
    assert 1 - 1e-8 <= bwd <= 1 + 1e-8


@settings(max_examples=50, deadline=None)
@given(st.lists(positive_matrices, min_size=1, max_size=16))
def test_composition_closure(mats):
    """Products of doubly stochastic matrices stay doubly stochastic"""
    projected = [project_doubly_stochastic(h).matrix for h in mats]
    k = len(projected)
    fwd, bwd = amax_gain(composite_mapping(projected, 0, k))
    assert abs(fwd - 1.0) <= k * 1e-9 + 1e-12
    assert abs(bwd - 1.0) <= k * 1e-9 + 1e-12


def test_propagate_error_identity_chain():
    """Identity mappings sum the per-layer errors"""
    eye = np.eye(4)
    assert propagate_error([0.1, 0.1, 0.1, 0.1], [eye] * 4) == pytest.approx(0.4)


def test_propagate_error_amplified():
    """The first error passes through both doubling mappings"""
    two = 2.0 * np.eye(3)
    assert propagate_error([1.0, 0.0], [two, two]) == pytest.approx(4.0)


def test_propagate_error_constrained_bound():
    rng = np.random.default_rng(8)
    chain = [project_doubly_stochastic(rng.uniform(0.0, 1.5, (4, 4))).matrix for _ in range(6)]
    assert propagate_error([0.1] * 6, chain) <= 0.1 * 6 * (1 + 1e-9)


def test_propagate_error_length_mismatch():
    with pytest.raises(DomainError):
        propagate_error([0.1, 0.2], [np.eye(2)])


def test_layer_temperature():
    tau = [0.1, 10.0, 600.0, 86400.0]
    assert layer_temperature(1, tau) == 0.1
    assert layer_temperature(2, [1.0, np.e ** 2]) == pytest.approx(0.4)
    with pytest.raises(DomainError):
        layer_temperature(1, [0.0, 1.0])
    with pytest.raises(DomainError):
        layer_temperature(2, [5.0, 1.0])


def test_implied_tau_ratios_from_ladder():
    """The literal ladder implies ratios e^(4/3), e^(8/3), e^4"""
    ratios = implied_tau_ratios(TEMPERATURE_LADDER)
    assert np.allclose(ratios, [1.0, np.exp(4 / 3), np.exp(8 / 3), np.exp(4)])
    taus = [1.0, *ratios[1:]]
    for layer in range(1, len(taus) + 1):
        assert layer_temperature(layer, taus) == pytest.approx(TEMPERATURE_LADDER[layer - 1])


if __name__ == "__main__":
    print("Testing hierarchy core...")
    test_normalize_constant_row_maps_to_zeros()
    test_normalize_two_point_row()
    test_composite_mapping_ordering()
    test_projection_diagonal_gives_identity()
    test_propagate_error_amplified()
    print("\n✅ Hierarchy core tests passed!")
