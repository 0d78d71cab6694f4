import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from removal import oracles
from removal.functions import PointFunction, random_function
from removal.kneser import cube_space
from removal.refine import (
    ASTRONOMICAL,
    TINY,
    EntropyGainError,
    ParameterSchedule,
    RefinementWitness,
    check_phi_inequality,
    entropy,
    find_refinement,
    phi,
    refinement_loop,
    schedule,
    search_refinement,
    step_bound,
    tower,
    verify_witness,
)

from conftest import k3_space


def test_phi_values():
    assert phi(0) == 0.0 and phi(1) == 0.0
    assert phi(math.exp(-1)) == pytest.approx(-math.exp(-1))
    anchor = 0.25 * phi(0.5) + 0.75 * phi(7 / 6)
    assert anchor == pytest.approx(0.04824, abs=5e-6)
    assert anchor > 1 / 32
    with pytest.raises(ValueError):
        phi(-0.1)


def test_phi_inequality_boundary_and_precondition():
    lam, w = 0.25, 1.0
    u = w / 2
    v = (w - lam * u) / (1 - lam)
    check = check_phi_inequality(lam, u, v)
    assert check.holds and check.margin > 0
    with pytest.raises(ValueError):
        check_phi_inequality(1.0, 0.5, 0.5)
    with pytest.raises(ValueError):
        check_phi_inequality(0.2, 0.1, 0.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.25, 0.999), st.floats(1e-3, 2.0), st.floats(1e-3, 0.5))
def test_phi_inequality_holds(lam, w, ratio):
    u = ratio * w
    v = (w - lam * u) / (1 - lam)
    assert check_phi_inequality(lam, u, v).margin >= -1e-12


def test_entropy_examples(rng):
    f = random_function(k3_space(3), rng)
    alpha = f.mean()
    assert entropy(f, []) == pytest.approx(alpha * math.log(alpha), abs=1e-15)
    d = PointFunction.dictator(k3_space(3), 1, 0)
    assert entropy(d, [1]) == pytest.approx(0.0, abs=1e-15)
    assert entropy(f, []) <= 0


def test_entropy_full_set_zero_iff_boolean(rng):
    space = k3_space(2)
    boolean = PointFunction(space, (rng.random(9) < 0.5).astype(float))
    assert entropy(boolean, [0, 1]) == pytest.approx(0.0, abs=1e-15)
    frac = PointFunction(space, np.full(9, 0.5))
    assert entropy(frac, [0, 1]) < -1e-3


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sets(st.integers(0, 3)), st.sets(st.integers(0, 3)))
def test_entropy_monotone(seed, extra, base):
    space = k3_space(4)
    f = random_function(space, np.random.default_rng(seed))
    I = sorted(base)
    J = sorted(base | extra)
    assert entropy(f, I) <= entropy(f, J) + 1e-12


def test_entropy_matches_bincount(rng):
    f = random_function(cube_space(5, 0.25), rng)
    coords = [0, 3]
    table = oracles.conditional_expectation_bruteforce(f, coords)
    mu = f.space.sub(2).measure
    assert entropy(f, coords) == pytest.approx(sum(m * phi(t) for m, t in zip(mu, table)), abs=1e-14)


def test_verify_planted_witness():
    f = PointFunction.dictator(k3_space(2), 1, 0)
    w = RefinementWitness((), {0: ((1,), (0,))})
    check = verify_witness(f, 1, w)
    assert check.ok
    cell = check.diagnostics["cells"][0]
    assert cell["prob_T"] == pytest.approx(1 / 3)
    assert cell["mean_outside_T"] == 0.0


def test_verify_rejects():
    space = k3_space(2)
    f = PointFunction.dictator(space, 1, 0)
    empty = verify_witness(f, 1, RefinementWitness((), {}))
    assert not empty.ok and empty.diagnostics["slack_1"] < 0
    const = PointFunction.constant(space, 0.4)
    check = verify_witness(const, 1, RefinementWitness((), {0: ((1,), (0,))}))
    assert not check.ok and check.diagnostics["cells"][0]["slack_2b"] < 0
    too_many = verify_witness(f, 1, RefinementWitness((), {0: ((0, 1), (0,))}))
    assert not too_many.ok and not too_many.diagnostics["shape_ok"]


def test_find_refinement_examples():
    f = PointFunction.dictator(k3_space(3), 1, 0)
    w = find_refinement(f, [], 2)
    assert w is not None and w.S == (0,) and w.cells[0] == ((1,), (0,))
    assert find_refinement(f, [1], 2) is None
    one = PointFunction.constant(k3_space(3), 1.0)
    search = search_refinement(one, [], 2)
    assert not search.accepted and search.failures


def test_refinement_loop_examples():
    trace = refinement_loop(PointFunction.dictator(k3_space(3), 2, 1), 2)
    assert trace.accepted_steps == 1 and trace.final_I == (2,)
    assert trace.final_H == pytest.approx(0.0, abs=1e-12)
    half = refinement_loop(PointFunction.constant(k3_space(3), 0.5), 2)
    assert half.accepted_steps == 0 and half.final_I == ()
    assert half.stop_reason == "no-witness"


@pytest.mark.parametrize("seed", range(6))
def test_refinement_loop_invariants(seed):
    rng = np.random.default_rng(seed)
    space = k3_space(3)
    base = PointFunction.dictator(space, seed % 3, 0).values
    f = PointFunction(space, np.abs(base - (rng.random(space.size) < 0.05)))
    trace = refinement_loop(f, 2)
    Hs = [s.H for s in trace.steps] + [trace.final_H]
    assert all(b >= a - 1e-12 for a, b in zip(Hs, Hs[1:]))
    assert all(s.gain >= trace.alpha / 128 - 1e-9 for s in trace.steps if s.accepted)
    assert trace.accepted_steps <= step_bound(trace.alpha)


def test_gain_error_is_assertion():
    assert issubclass(EntropyGainError, AssertionError)


def test_step_bound():
    assert step_bound(0.5) == math.ceil(128 * math.log(2))
    assert step_bound(1.0) == 0


def test_schedule_values(k3):
    sched = ParameterSchedule(1.0, 10, 3, 1 / 6)
    assert sched.delta2(0.5, 3) == pytest.approx((1 / 216) * (1 / 64))
    assert sched.gamma(0) == 10 and sched.gamma(1) == 31
    out = schedule(1.0, 0.1, 0.1, 10, k3)
    assert out["gamma_table"][:3] == [0, 10, 590500]
    assert out["k"] is ASTRONOMICAL and out["delta2"] is TINY
    assert out["compositions"] == step_bound(0.1)


def test_tower():
    assert [tower(t) for t in range(5)] == [1, 2, 4, 16, 65536]
    assert tower(5) is ASTRONOMICAL
