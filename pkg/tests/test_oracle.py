"""Brute-force reference solvers and the core checker."""

import pytest

from maxcore.maxsat import HARD, SoftInstance, WeightedClause, evaluate_cost
from maxcore.oracle import (
    MAXSAT_VAR_GUARD,
    OracleGuardError,
    brute_force_maxsat,
    verify_core,
)


def test_sample5_optimum(sample5):
    res = brute_force_maxsat(sample5)
    assert res.optimum == 1
    assert evaluate_cost(sample5, res.witness) == 1


def test_sample7_optimum(sample7):
    res = brute_force_maxsat(sample7)
    assert res.optimum == 2
    assert evaluate_cost(sample7, res.witness) == 2


def test_weighted_optimum():
    inst = SoftInstance(2, [
        WeightedClause((1,), 5),
        WeightedClause((2,), 3),
        WeightedClause((-1, -2), HARD),
    ])
    res = brute_force_maxsat(inst)
    assert res.optimum == 3
    assert res.witness[1] is True and res.witness[2] is False


def test_hard_contradiction_gives_none():
    inst = SoftInstance(1, [
        WeightedClause((1,), HARD),
        WeightedClause((-1,), HARD),
    ])
    assert brute_force_maxsat(inst).optimum is None


def test_var_guard():
    n = MAXSAT_VAR_GUARD + 1
    inst = SoftInstance(n, [WeightedClause((n,), 1)])
    with pytest.raises(OracleGuardError):
        brute_force_maxsat(inst)


def test_verify_core_sample5(sample5):
    assert verify_core(sample5, [1, 2, 4]) is True
    assert verify_core(sample5, [1, 2]) is False
    assert verify_core(sample5, [1, 3, 5]) is True
    assert verify_core(sample5, [1, 2, 3, 4, 5]) is True
    assert verify_core(sample5, [4, 5]) is False


def test_verify_core_includes_hard():
    # Soft {x} alone is satisfiable, but together with hard {-x} it is not.
    inst = SoftInstance(1, [
        WeightedClause((1,), 1),
        WeightedClause((-1,), HARD),
    ])
    assert verify_core(inst, [1]) is True


def test_verify_core_rejects_bad_ids(sample5):
    with pytest.raises(ValueError):
        verify_core(sample5, [0])
    with pytest.raises(ValueError):
        verify_core(sample5, [6])


def test_witness_ties_break_deterministically(sample5):
    a = brute_force_maxsat(sample5)
    b = brute_force_maxsat(sample5)
    assert a.witness == b.witness
