import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from removal import oracles
from removal.chain import eigendecompose
from removal.functions import (
    PointFunction,
    cell_digits,
    cell_index,
    conditional_expectation,
    coordinate_set,
    fourier_expand,
    influence,
    influences,
    noise_operator,
    random_function,
    randomized_booleanize,
    restrict,
)
from removal.kneser import cube_space

from conftest import SMALL_SPACES, k3_space


def test_point_function_range_checked():
    space = k3_space(1)
    with pytest.raises(ValueError):
        PointFunction(space, [0.0, 1.5, 0.2])
    with pytest.raises(ValueError):
        PointFunction(space, [0.0, 0.5])
    PointFunction(space, [-1.0, 0.5, 1.0], signed=True)


def test_coordinate_set_validation():
    assert coordinate_set([2, 0], 3) == (0, 2)
    for bad in ([0, 0], [3], [-1]):
        with pytest.raises(ValueError):
            coordinate_set(bad, 3)


def test_cell_index_roundtrip():
    for i in range(27):
        assert cell_index(3, cell_digits(3, 3, i)) == i


def test_restrict_dictator_is_constant():
    f = PointFunction.dictator(k3_space(3), 0, 0)
    assert np.all(restrict(f, [0], (0,)).values == 1.0)
    assert np.all(restrict(f, [0], (2,)).values == 0.0)


def test_restrict_matches_code_walk(rng):
    f = random_function(k3_space(3), rng)
    for coords in ([1], [0, 2], [2]):
        for cell in range(3 ** len(coords)):
            digits = cell_digits(3, len(coords), cell)
            assert np.array_equal(restrict(f, coords, digits).values,
                                  oracles.restrict_bruteforce(f, coords, digits))


@pytest.mark.parametrize("name, make", SMALL_SPACES)
def test_conditional_expectation_matches_bincount(name, make, rng):
    space = make()
    f = random_function(space, rng)
    for mask in range(1 << space.n):
        coords = [c for c in range(space.n) if mask >> c & 1]
        fast = conditional_expectation(f, coords).reshape(-1)
        assert np.allclose(fast, oracles.conditional_expectation_bruteforce(f, coords), atol=1e-12)


def test_conditional_expectation_edge_cases(rng):
    f = random_function(k3_space(3), rng)
    assert conditional_expectation(f, []).reshape(-1)[0] == pytest.approx(f.mean(), abs=1e-15)
    assert np.allclose(conditional_expectation(f, [0, 1, 2]).reshape(-1), f.values, atol=1e-15)
    c = PointFunction.constant(k3_space(3), 0.3)
    assert np.allclose(conditional_expectation(c, [1]), 0.3, atol=1e-15)


def test_tower_property(rng):
    space = cube_space(5, 0.25)
    f = random_function(space, rng)
    fine = conditional_expectation(f, [0, 2, 3]).reshape(2, 2, 2)
    mu = space.base.stationary
    coarse = np.einsum("abc,b->ac", fine, mu)
    assert np.allclose(coarse.reshape(-1), conditional_expectation(f, [0, 3]).reshape(-1), atol=1e-12)


def test_fourier_constant_and_single_character(k3):
    space = k3_space(2)
    exp = fourier_expand(PointFunction.constant(space, 1.0))
    assert exp.coefficients[0] == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(exp.coefficients[1:], 0.0, atol=1e-12)
    basis = eigendecompose(k3).basis
    f = PointFunction(space, np.kron(basis[:, 1], basis[:, 0]), signed=True)
    coeffs = fourier_expand(f).coefficients
    expected = np.zeros(9)
    expected[3] = 1.0
    assert np.allclose(coeffs, expected, atol=1e-12)


@pytest.mark.parametrize("name, make", SMALL_SPACES)
def test_parseval_and_synthesis(name, make, rng):
    space = make()
    f = random_function(space, rng)
    exp = fourier_expand(f)
    assert np.sum(exp.coefficients ** 2) == pytest.approx(f.norm2(), abs=1e-10)
    assert np.allclose(exp.synthesize(), f.values, atol=1e-12)


def test_dictator_influence_is_two_ninths():
    f = PointFunction.dictator(k3_space(3), 0, 0)
    infs = influences(f)
    assert infs[0] == pytest.approx(2 / 9, abs=1e-12)
    assert np.allclose(infs[1:], 0.0, atol=1e-12)
    assert np.allclose(influences(PointFunction.constant(k3_space(3), 0.4)), 0.0, atol=1e-12)


@pytest.mark.parametrize("name, make", SMALL_SPACES)
def test_influence_variance_form(name, make, rng):
    space = make()
    f = random_function(space, rng)
    for i in range(space.n):
        assert influence(f, i) == pytest.approx(oracles.influence_variance(f, i), abs=1e-10)


def test_noise_extremes(rng):
    f = random_function(k3_space(3), rng)
    assert np.allclose(noise_operator(f, 1.0).values, f.values, atol=1e-12)
    assert np.allclose(noise_operator(f, 0.0).values, f.mean(), atol=1e-12)


@pytest.mark.parametrize("eta", [0.0, 0.3, 0.7, 0.95])
@pytest.mark.parametrize("name, make", SMALL_SPACES)
def test_noise_matches_kernel_matrix(name, make, eta, rng):
    space = make()
    f = random_function(space, rng, signed=True)
    assert np.allclose(noise_operator(f, eta).values, oracles.noise_matrix(space, eta) @ f.values, atol=1e-12)


def test_noise_preserves_mean(rng):
    f = random_function(cube_space(6, 0.25), rng)
    assert noise_operator(f, 0.6).mean() == pytest.approx(f.mean(), abs=1e-12)


def test_booleanize_degenerate_and_statistical():
    space = k3_space(2)
    f = PointFunction.dictator(space, 1, 2)
    b = randomized_booleanize(f, 2, seed=7)
    assert b.space.n == 4
    assert np.array_equal(b.values.reshape(9, 9), np.repeat(f.values[:, None], 9, axis=1))
    half = PointFunction.constant(k3_space(1), 0.5)
    b = randomized_booleanize(half, 4, seed=11)
    sigma = np.sqrt(0.25 / b.space.size)
    assert abs(b.values.mean() - 0.5) <= 3 * sigma
    assert set(np.unique(randomized_booleanize(half, 0, seed=3).values)) <= {0.0, 1.0}


def test_booleanize_is_seeded():
    half = PointFunction.constant(k3_space(2), 0.5)
    a = randomized_booleanize(half, 2, seed=5)
    b = randomized_booleanize(half, 2, seed=5)
    assert np.array_equal(a.values, b.values)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 1.0))
def test_noise_contracts_norm(seed, eta):
    f = random_function(k3_space(3), np.random.default_rng(seed), signed=True)
    assert noise_operator(f, eta).norm2() <= f.norm2() + 1e-12
