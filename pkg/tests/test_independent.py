import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from removal import oracles
from removal.chain import ProductSpace, quad_form, validate_chain
from removal.functions import PointFunction, random_function
from removal.independent import (
    CapExceeded,
    eps_far_from_independent,
    is_independent,
    is_matching_like,
    matching_like_decompose,
    max_weight_independent_set,
    support_graph,
)
from removal.kneser import cube_space

from conftest import k3_space


def test_is_independent_examples():
    space = k3_space(2)
    assert is_independent(space, [])
    assert not is_independent(space, [(0, 0), (1, 1)])
    assert is_independent(space, [(0, a) for a in range(3)])
    d3 = k3_space(3)
    assert is_independent(d3, [p for p in map(d3.point, range(27)) if p[0] == 0])


def test_loops_make_vertices_dependent():
    cube = cube_space(2, 0.25)
    assert not is_independent(cube, [(0, 0)])
    assert is_independent(cube, [(1, 0)])


def test_mwis_edgeless_and_single_edge():
    space = k3_space(2)
    graph = support_graph(space, [space.index((0, 0)), space.index((0, 1))])
    pts, total = max_weight_independent_set(graph, [1.0, 2.0])
    assert total == 3.0 and len(pts) == 2
    k1 = k3_space(1)
    graph = support_graph(k1, [0, 1])
    pts, total = max_weight_independent_set(graph, [3.0, 5.0])
    assert pts == [1] and total == 5.0


def test_mwis_full_k3_square_is_a_slice():
    space = k3_space(2)
    graph = support_graph(space)
    pts, total = max_weight_independent_set(graph, space.measure)
    assert total == pytest.approx(1 / 3, abs=1e-15)
    assert is_independent(space, pts)


def test_mwis_cap():
    space = k3_space(2)
    with pytest.raises(CapExceeded):
        max_weight_independent_set(support_graph(space), space.measure, cap=5)


@pytest.mark.parametrize("seed", range(12))
def test_mwis_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    space = k3_space(2) if seed % 2 else cube_space(4, 0.25)
    verts = sorted(rng.choice(space.size, size=min(space.size, 14), replace=False).tolist())
    weights = rng.random(len(verts))
    graph = support_graph(space, verts)
    pts, total = max_weight_independent_set(graph, weights)
    _, best = oracles.mwis_bruteforce(space, verts, weights)
    assert total == pytest.approx(best, abs=1e-12)
    assert is_independent(space, pts)


def test_far_examples():
    space = k3_space(2)
    slice_ = PointFunction.indicator(space, [(0, 0), (0, 1), (0, 2)])
    assert not eps_far_from_independent(slice_, 0.0).far
    zero = PointFunction.constant(space, 0.0)
    res = eps_far_from_independent(zero, 0.0)
    assert not res.far and res.captured == 0.0
    one = PointFunction.constant(space, 1.0)
    res = eps_far_from_independent(one, 0.5)
    assert res.captured == pytest.approx(1 / 3, abs=1e-15) and res.far


def test_all_loops_only_empty_set_is_independent():
    chain = validate_chain([[0.5, 0.5], [0.5, 0.5]])
    space = ProductSpace(chain, 2)
    g = PointFunction.constant(space, 0.5)
    res = eps_far_from_independent(g, 0.1)
    assert res.witness == [] and res.captured == 0.0 and res.far


def test_decompose_trivial_cases():
    space = k3_space(2)
    slice_ = PointFunction.indicator(space, [(1, 0), (1, 1), (1, 2)])
    assert np.all(matching_like_decompose(slice_).f.values == 0.0)
    zero = PointFunction.constant(space, 0.0)
    assert np.all(matching_like_decompose(zero).f.values == 0.0)


def test_matching_like_examples():
    space = k3_space(1)
    assert is_matching_like(PointFunction.constant(space, 0.0)).ok
    edge = PointFunction.indicator(space, [(0,), (1,)])
    check = is_matching_like(edge)
    assert check.ok and check.worst_mass == pytest.approx(edge.mean() / 2, abs=1e-15)
    assert not is_matching_like(PointFunction.indicator(space, [(2,)])).ok


def _check_decomposition(g):
    res = matching_like_decompose(g)
    space = g.space
    assert np.all(res.f.values <= g.values)
    assert is_independent(space, res.residual_set)
    assert is_matching_like(res.f).ok
    outside = np.ones(space.size, dtype=bool)
    outside[res.residual_set] = False
    lhs = float(np.dot(space.measure[outside], g.values[outside]))
    rhs = float(np.dot(space.measure[outside], res.f.values[outside]))
    assert lhs == pytest.approx(rhs, abs=1e-12)
    assert rhs <= res.f.mean() + 1e-12
    assert quad_form(space, g, g) >= quad_form(space, res.f, res.f) - 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["K3^2", "K3^3", "cube^5"]), st.floats(0.1, 1.0))
def test_decomposition_properties(seed, which, density):
    space = {"K3^2": k3_space(2), "K3^3": k3_space(3), "cube^5": cube_space(5, 0.25)}[which]
    rng = np.random.default_rng(seed)
    g = random_function(space, rng)
    g = PointFunction(space, g.values * (rng.random(space.size) < density))
    _check_decomposition(g)
