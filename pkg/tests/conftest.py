"""Shared instance builders for the test suite."""

import pytest

from maxcore.maxsat import SoftInstance, WeightedClause


def build_sample5():
    """Five unit-weight soft clauses over x1..x3; optimum violates exactly one."""
    clauses = [
        WeightedClause((1,), 1),
        WeightedClause((2,), 1),
        WeightedClause((3,), 1),
        WeightedClause((-1, -2), 1),
        WeightedClause((-1, -3), 1),
    ]
    return SoftInstance(3, clauses)


def build_sample7():
    """Seven unit-weight soft clauses over x1..x4; optimum violates exactly two."""
    clauses = [
        WeightedClause((1,), 1),
        WeightedClause((2,), 1),
        WeightedClause((3,), 1),
        WeightedClause((-1, -2), 1),
        WeightedClause((-1, -3), 1),
        WeightedClause((4,), 1),
        WeightedClause((-3, -4), 1),
    ]
    return SoftInstance(4, clauses)


@pytest.fixture
def sample5():
    return build_sample5()


@pytest.fixture
def sample7():
    return build_sample7()
