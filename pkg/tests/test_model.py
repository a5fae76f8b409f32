import numpy as np
import pytest
from hypothesis import given, settings

from conftest import example25_state, instance_and_state
from storagegame.model import (AllocationState, InstanceError, Move, MoveError, MoveKind, apply_move,
                               col_sums, make_instance, row_sums)


def test_minimal_symmetric_instance_is_valid():
    inst = make_instance([(0, 1), (1, 0)], [1, 1], [1, 1])
    assert inst.n == 2
    assert inst.neighbors == ((1,), (0,))
    assert inst.in_neighbors == ((1,), (0,))


def test_self_loop_rejected():
    with pytest.raises(InstanceError, match="self-loop"):
        make_instance([(0, 0)], [1], [1])


def test_negative_weight_rejected():
    with pytest.raises(InstanceError, match="k_a"):
        make_instance([(0, 1), (1, 0)], 1, 1, k_a=-0.1)


@pytest.mark.parametrize("kw", [{"alpha": [1, -1]}, {"beta": [-2, 1]}, {"nu_off": -1.0}, {"p_on": 1.5}])
def test_invalid_fields(kw):
    args = {"edges": [(0, 1), (1, 0)], "alpha": [1, 1], "beta": [1, 1]}
    args.update(kw)
    with pytest.raises(InstanceError):
        make_instance(**args)


def test_length_mismatch():
    with pytest.raises(InstanceError):
        make_instance([(0, 1)], [1, 1], [1, 1], [1.0, 1.0, 1.0])


def test_allocation_move_single_increment():
    inst = make_instance([(0, 1), (1, 0)], [1, 1], [1, 1])
    W = apply_move(inst, AllocationState(2), Move(MoveKind.ALLOCATION, 0, 1))
    assert W[0, 1] == 1 and W.total == 1


def test_distribution_to_same_resource_is_identity():
    inst = make_instance([(0, 1), (1, 0)], [2, 1], [2, 2])
    W = AllocationState.from_array([[0, 2], [0, 0]])
    assert apply_move(inst, W, Move(MoveKind.DISTRIBUTION, 0, 1, source=1)) == W


def test_zero_source_rejected():
    inst = make_instance([(0, 1), (0, 2), (1, 0)], [1, 1, 0], [2, 2, 2])
    W = AllocationState.from_array([[0, 0, 1], [0, 0, 0], [0, 0, 0]])
    with pytest.raises(MoveError, match="zero-source"):
        apply_move(inst, W, Move(MoveKind.DISTRIBUTION, 0, 2, source=1))


def test_move_errors():
    inst = make_instance([(0, 1), (1, 0)], [1, 2], [1, 1])
    with pytest.raises(MoveError, match="non-edge"):
        apply_move(inst, AllocationState(2), Move(MoveKind.ALLOCATION, 0, 0))
    W = AllocationState.from_array([[0, 1], [0, 0]])
    with pytest.raises(MoveError, match="demand"):
        apply_move(inst, W, Move(MoveKind.ALLOCATION, 0, 1))
    with pytest.raises(MoveError, match="capacity"):
        apply_move(inst, AllocationState.from_array([[0, 0], [1, 0]]), Move(MoveKind.ALLOCATION, 1, 0))


def test_sums():
    assert list(row_sums(AllocationState(4))) == [0, 0, 0, 0]
    W = AllocationState(3)
    W.add(0, 1, 3)
    assert list(row_sums(W)) == [3, 0, 0]
    assert list(col_sums(W)) == [0, 3, 0]
    assert list(col_sums(example25_state(0, 35))) == [35, 14, 7]


def test_array_round_trip_and_hash():
    a = np.array([[0, 2, 1], [3, 0, 0], [0, 0, 0]])
    W = AllocationState.from_array(a)
    assert np.array_equal(W.to_array(), a)
    assert W == AllocationState.from_array(a.copy())
    assert hash(W) == hash(AllocationState.from_array(a.copy()))
    with pytest.raises(ValueError):
        AllocationState.from_array([[0, -1], [0, 0]])


@settings(max_examples=200, deadline=None)
@given(instance_and_state())
def test_move_then_inverse_restores_state(data):
    inst, W, rng = data
    for x, y, _ in list(W.entries()):
        for y2 in inst.neighbors[x]:
            if y2 != y and W.col_tot[y2] < inst.beta[y2]:
                move = Move(MoveKind.DISTRIBUTION, x, y2, source=y)
                assert apply_move(inst, apply_move(inst, W, move), move.inverse()) == W


@settings(max_examples=200, deadline=None)
@given(instance_and_state())
def test_random_valid_moves_keep_invariants(data):
    inst, W, rng = data
    for _ in range(50):
        x = int(rng.integers(inst.n))
        if not inst.neighbors[x]:
            continue
        target = int(rng.choice(inst.neighbors[x]))
        if W.row_tot[x] < inst.alpha[x] and rng.random() < 0.5:
            move = Move(MoveKind.ALLOCATION, x, target)
        elif W.rows[x]:
            move = Move(MoveKind.DISTRIBUTION, x, target, source=int(rng.choice(list(W.rows[x]))))
        else:
            continue
        try:
            W = apply_move(inst, W, move)
        except MoveError:
            continue
        W.check(inst)
        assert sum(W.row_sums()) == sum(W.col_sums()) == W.total
