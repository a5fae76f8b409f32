import math

import numpy as np
import pytest

from storagegame import graphs
from storagegame.game import potential
from storagegame.markov import (StateIndex, build_generator, check_detailed_balance, check_L_connected,
                                empirical_occupation, log_weights, marginal_over_xi, reduced_closed_form,
                                solve_stationary, stationary_closed_form, total_variation)
from storagegame.model import AllocationState, make_instance

RATES = dict(nu_on=[1.0, 2.0, 0.5], nu_off=[0.5, 1.0, 1.5], nu_act=[1.0, 1.5, 2.0])


def toy(k_a=0.1, lam=(0.5, 0.8, 0.3), **rates):
    return make_instance(graphs.complete_graph(3), 1, 2, list(lam), k_a=k_a, **(rates or RATES))


def test_state_index_round_trip():
    inst = toy()
    index = StateIndex(inst)
    assert index.size == 8 * 8
    for i in range(index.size):
        mask, W = index.decode(i)
        assert index.index(mask, W) == i


@pytest.mark.filterwarnings("ignore:instance is not strictly feasible")
def test_two_unit_instance_has_only_churn():
    inst = make_instance([(0, 1), (1, 0)], 1, 1)
    gen = build_generator(inst, 1.0)
    assert len(gen.index.states) == 1
    Q = gen.rates.toarray()
    assert np.allclose(Q.sum(axis=1), 0)
    for i, j in zip(*np.nonzero(Q)):
        if i != j:
            assert bin(i ^ j).count("1") == 1  # one unit switched


def test_hand_computed_rates():
    inst = toy()
    gamma = 1.7
    gen = build_generator(inst, gamma)
    index = gen.index
    W = AllocationState.from_array([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    i = index.index(0b111, W)
    # unit 0 moves its atom 1 -> 2; Gibbs over {1, 2} at W - e_01
    u1 = 0.8 - 1 / 2 + 0.1
    u2 = 0.3 - 2 / 2 + 0.1
    p2 = math.exp(gamma * u2) / (math.exp(gamma * u1) + math.exp(gamma * u2))
    W2 = AllocationState.from_array([[0, 0, 1], [0, 0, 1], [1, 0, 0]])
    assert gen.rates[i, index.index(0b111, W2)] == pytest.approx(1.0 * p2, rel=1e-12)
    # unit 1 switching off
    assert gen.rates[i, index.index(0b101, W)] == 1.0
    # target off: no transition
    assert gen.rates[index.index(0b011, W), index.index(0b011, W2)] == 0
    # source off: no transition either
    assert gen.rates[index.index(0b101, W), index.index(0b101, W2)] == 0


def test_zero_gamma_gibbs_is_uniform():
    inst = toy()
    gen = build_generator(inst, 0.0)
    index = gen.index
    W = AllocationState.from_array([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    i = index.index(0b111, W)
    W2 = AllocationState.from_array([[0, 0, 1], [0, 0, 1], [1, 0, 0]])
    assert gen.rates[i, index.index(0b111, W2)] == pytest.approx(0.5)


def test_closed_form_at_zero_gamma_is_multinomial():
    inst = make_instance(graphs.complete_graph(3), [2, 1, 1], 3, 1.0)
    index = StateIndex(inst)
    p = reduced_closed_form(inst, 0.0, index)
    expected = np.array([math.factorial(2) * math.factorial(1) ** 2
                         / math.prod(math.factorial(v) for _, _, v in W.entries()) for W in index.states])
    assert np.allclose(p, expected / expected.sum())
    assert sorted(set(expected)) == [1.0, 2.0]


def test_closed_form_unit_demands():
    inst = toy()
    index = StateIndex(inst)
    gamma = 0.9
    p = stationary_closed_form(inst, gamma, index)
    for i in (0, 17, 40, 63):
        mask, W = index.decode(i)
        churn = math.prod(inst.nu_on[x] if mask >> x & 1 else inst.nu_off[x] for x in range(3))
        expected = churn * math.exp(gamma * float(potential(inst, W)))
        assert p[i] / p[63] == pytest.approx(expected / (
            math.prod(inst.nu_on) * math.exp(gamma * float(potential(inst, index.decode(63)[1])))), rel=1e-10)


def test_large_gamma_concentrates_on_argmax():
    inst = toy(k_a=0.0, lam=(1.0, 1.0, 1.0))
    index = StateIndex(inst)
    mu = reduced_closed_form(inst, 60.0, index)
    best = [i for i, W in enumerate(index.states) if W.col_tot == [1, 1, 1]]
    assert mu[best].sum() > 1 - 1e-9


def test_detailed_balance_and_churn_ratio():
    inst = toy()
    assert check_detailed_balance(inst, 0.0) <= 1e-12
    assert check_detailed_balance(inst, 1.7) <= 1e-9
    index = StateIndex(inst)
    logw = log_weights(inst, 1.7, index)
    W = index.states[3]
    for x in range(3):
        on = index.index(0b111, W)
        off = index.index(0b111 ^ (1 << x), W)
        assert math.exp(logw[off] - logw[on]) == pytest.approx(inst.nu_off[x] / inst.nu_on[x], rel=1e-12)


@pytest.mark.filterwarnings("ignore:instance is not strictly feasible")
def test_two_state_churn_chain():
    inst = make_instance([], [0], [0], n=1, nu_on=1.0, nu_off=1.0)
    sol = solve_stationary(build_generator(inst, 0.0))
    assert sol.unique
    assert sol.pi == pytest.approx([0.5, 0.5])


def test_null_space_matches_closed_form():
    inst = toy()
    for gamma in (0.0, 1.7, 5.0):
        gen = build_generator(inst, gamma)
        sol = solve_stationary(gen)
        assert sol.unique
        closed = stationary_closed_form(inst, gamma, gen.index)
        assert total_variation(closed, sol.pi) <= 1e-10
        assert np.allclose(marginal_over_xi(closed, gen.index), reduced_closed_form(inst, gamma, gen.index))


def test_saturated_complete_graph_is_not_ergodic():
    inst = make_instance(graphs.complete_graph(3), 1, 1, 1.0)
    with pytest.warns(RuntimeWarning):
        gen = build_generator(inst, 1.0)
    sol = solve_stationary(gen)
    assert not sol.unique and len(sol.classes) == 2
    assert not check_L_connected(inst)


def test_connectivity():
    assert check_L_connected(toy())
    assert check_L_connected(make_instance([(0, 1), (1, 0)], 1, 1))


def test_bound_exceeded():
    inst = make_instance(graphs.complete_graph(5), 3, 4)
    with pytest.raises(ValueError, match="state space"):
        StateIndex(inst, bound=1000)


def test_empirical_occupation_short_run():
    inst = toy()
    index = StateIndex(inst)
    occ = empirical_occupation(inst, 1.0, 200_000, seed=3, index=index)
    assert total_variation(occ, stationary_closed_form(inst, 1.0, index)) < 0.06
