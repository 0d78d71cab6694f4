from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from removal.chain import (
    ChainError,
    ProductSpace,
    apply_markov,
    complete_graph_chain,
    edge_weight,
    eigendecompose,
    quad_form,
    stationary_distribution,
    validate_chain,
)
from removal.functions import PointFunction, random_function
from removal.kneser import disjointness_chain
from removal import oracles

from conftest import SMALL_SPACES, k3_space


def test_k3_stationary_uniform(k3):
    assert np.allclose(k3.stationary, [1 / 3] * 3, atol=1e-15)
    assert k3.w_min == pytest.approx(1 / 6, abs=1e-15)


def test_disjointness_stationary():
    chain = disjointness_chain(Fraction(1, 3))
    assert np.allclose(chain.transition, [[0.5, 0.5], [1, 0]])
    assert np.allclose(chain.stationary, [2 / 3, 1 / 3], atol=1e-15)


def test_fraction_rows_parse():
    chain = validate_chain([["1/2", "1/2"], ["1", "0"]])
    assert chain.transition[0, 1] == 0.5


@pytest.mark.parametrize(
    "matrix, prop",
    [
        ([[1, 0], [0, 1]], "reducible"),
        ([[0, 1], [1, 0]], "periodic"),
        ([[0.5, 0.6], [1, 0]], "not-row-stochastic"),
        ([[1.5, -0.5], [0.5, 0.5]], "negative-entry"),
        ([[0.5, 0.5, 0], [0, 0.5, 0.5], [0.5, 0, 0.5]], "not-reversible"),
        ([[1, 0, 0]], "shape"),
    ],
)
def test_validate_rejects(matrix, prop):
    with pytest.raises(ChainError) as err:
        validate_chain(matrix)
    assert err.value.prop == prop


def test_periodic_three_cycle_rejected():
    with pytest.raises(ChainError) as err:
        validate_chain([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    assert err.value.prop in ("periodic", "not-reversible")


def test_chain_arrays_are_read_only(k3):
    with pytest.raises(ValueError):
        k3.transition[0, 0] = 1.0


def test_k3_eigenvalues(k3):
    spec = eigendecompose(k3)
    assert np.allclose(sorted(spec.eigenvalues), [-0.5, -0.5, 1.0], atol=1e-12)
    assert spec.eigenvalues[0] == 1.0
    assert np.allclose(spec.basis[:, 0], 1.0)
    assert spec.lambda2 == pytest.approx(0.5, abs=1e-12)


def test_disjointness_eigenvalues():
    spec = eigendecompose(disjointness_chain(Fraction(1, 3)))
    assert np.allclose(spec.eigenvalues, [1.0, -0.5], atol=1e-12)


def test_eigenbasis_orthonormal_in_mu(k3):
    for chain in (k3, disjointness_chain(0.25)):
        spec = eigendecompose(chain)
        gram = spec.basis.T @ (chain.stationary[:, None] * spec.basis)
        assert np.allclose(gram, np.eye(chain.size), atol=1e-12)
        assert np.allclose(chain.transition @ spec.basis, spec.basis * spec.eigenvalues, atol=1e-12)


def test_edge_weight_examples():
    assert edge_weight(k3_space(2), (0, 0), (1, 1)) == pytest.approx(1 / 36, abs=1e-16)
    assert edge_weight(k3_space(2), (0, 1), (0, 1)) == 0.0
    cube = ProductSpace(disjointness_chain(Fraction(1, 3)), 1)
    assert edge_weight(cube, (0,), (1,)) == pytest.approx(1 / 3, abs=1e-15)


def test_mixed_radix_index_roundtrip():
    space = k3_space(3)
    assert space.index((1, 0, 2)) == 1 * 9 + 0 * 3 + 2
    for i in range(space.size):
        assert space.index(space.point(i)) == i


def test_point_cap():
    with pytest.raises(MemoryError):
        ProductSpace(complete_graph_chain(3), 10, cap=3 ** 9)


@pytest.mark.parametrize("name, make", SMALL_SPACES)
def test_edge_weights_form_distribution(name, make):
    W = oracles.product_edge_matrix(make())
    assert W.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("name, make", SMALL_SPACES)
def test_min_edge_weight_is_power(name, make):
    space = make()
    assert space.min_edge_weight == pytest.approx(oracles.min_edge_weight_bruteforce(space), rel=1e-12)


@pytest.mark.parametrize("name, make", SMALL_SPACES)
def test_quad_form_matches_double_sum(name, make, rng):
    space = make()
    for _ in range(10):
        f, g = random_function(space, rng), random_function(space, rng)
        assert abs(quad_form(space, f, g) - oracles.quad_form_bruteforce(space, f, g)) <= 1e-12
        assert abs(quad_form(space, f, g) - quad_form(space, g, f)) <= 1e-12


def test_quad_form_examples():
    space = k3_space(2)
    one = PointFunction.constant(space, 1.0)
    assert quad_form(space, one, one) == pytest.approx(1.0, abs=1e-15)
    U = PointFunction.indicator(space, [(0, 0), (1, 1)])
    assert abs(quad_form(space, U, U) - 1 / 18) <= 1e-15
    d = PointFunction.dictator(k3_space(4), 0, 0)
    assert quad_form(d.space, d, d) == 0.0


def test_apply_markov_constant_and_eigenfunction(k3):
    space = k3_space(2)
    one = PointFunction.constant(space, 1.0)
    assert np.allclose(apply_markov(space, one), 1.0, atol=1e-15)
    spec = eigendecompose(k3)
    f = np.kron(spec.basis[:, 1], spec.basis[:, 2])
    expected = spec.eigenvalues[1] * spec.eigenvalues[2] * f
    assert np.allclose(apply_markov(space, PointFunction(space, f, signed=True)), expected, atol=1e-12)


def test_apply_markov_matches_matrix(rng):
    space = k3_space(3)
    f = random_function(space, rng)
    assert np.allclose(apply_markov(space, f).reshape(-1), oracles.apply_markov_bruteforce(space, f), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=4, unique=True))
def test_symmetric_weights_give_reversible_chain(weights):
    m = len(weights)
    W = np.add.outer(np.array(weights), np.array(weights))
    A = W / W.sum(axis=1, keepdims=True)
    chain = validate_chain(A)
    pi = stationary_distribution(A)
    assert np.allclose(pi @ A, pi, atol=1e-12)
    assert np.allclose(chain.stationary, W.sum(axis=1) / W.sum(), atol=1e-12)
    assert chain.size == m
