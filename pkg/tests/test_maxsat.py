"""WCNF handling and the three optimization drivers."""

import random

import pytest

from maxcore.engine import Engine
from maxcore.maxsat import (
    ALGORITHMS,
    HARD,
    SoftInstance,
    WcnfParseError,
    WeightedClause,
    evaluate_cost,
    parse_wcnf,
    serialize_wcnf,
    solve,
    solve_bnb,
    solve_msu3,
    solve_wpm1,
    wrap_indicators,
)
from maxcore.oracle import brute_force_maxsat, verify_core

SAMPLE5_WCNF = """\
c five soft unit-weight clauses
p wcnf 3 5 6
1 1 0
1 2 0
1 3 0
1 -1 -2 0
1 -1 -3 0
"""


# --- WCNF parsing and serialization -------------------------------------


def test_parse_sample5():
    inst = parse_wcnf(SAMPLE5_WCNF)
    assert inst.var_count == 3
    assert len(inst.clauses) == 5
    assert all(not wc.is_hard() and wc.weight == 1 for wc in inst.clauses)
    assert inst.clauses[3].lits == (-1, -2)


def test_parse_hard_weight():
    inst = parse_wcnf("p wcnf 2 2 10\n10 1 2 0\n3 -1 0\n")
    assert inst.clauses[0].is_hard()
    assert inst.clauses[1].weight == 3


@pytest.mark.parametrize("text,line_no", [
    ("1 1 0\n", 1),                          # clause before header
    ("p wcnf 2 1 5\np wcnf 2 1 5\n1 1 0\n", 2),   # duplicate header
    ("p wcnf two 1 5\n1 1 0\n", 1),          # malformed header
    ("p wcnf 2 1 5\n1 x 0\n", 2),            # non-integer token
    ("p wcnf 2 1 5\n0 1 0\n", 2),            # weight below 1
    ("p wcnf 2 1 5\n6 1 0\n", 2),            # weight above top
    ("p wcnf 2 1 5\n1 1 0 2 0\n", 2),        # interior terminator
    ("p wcnf 2 1 5\n1 3 0\n", 2),            # literal out of range
    ("p wcnf 2 1 5\n1 1\n", 2),              # missing terminator
    ("c only a comment\n", 0),               # missing header
])
def test_parse_errors_carry_line_numbers(text, line_no):
    with pytest.raises(WcnfParseError) as exc:
        parse_wcnf(text)
    assert exc.value.line_no == line_no


def test_round_trip(sample7):
    text = serialize_wcnf(sample7)
    back = parse_wcnf(text)
    assert back.var_count == sample7.var_count
    assert [(wc.lits, wc.weight) for wc in back.clauses] == \
           [(wc.lits, wc.weight) for wc in sample7.clauses]


def test_round_trip_with_hard():
    inst = SoftInstance(3, [
        WeightedClause((1, -2), HARD),
        WeightedClause((3,), 4),
    ])
    back = parse_wcnf(serialize_wcnf(inst))
    assert back.clauses[0].is_hard()
    assert back.clauses[1].weight == 4


def test_evaluate_cost(sample5):
    assert evaluate_cost(sample5, {1: False, 2: True, 3: True}) == 1
    assert evaluate_cost(sample5, {1: True, 2: True, 3: True}) == 2
    assert evaluate_cost(sample5, {1: False, 2: False, 3: False}) == 3
    inst = SoftInstance(1, [WeightedClause((1,), HARD), WeightedClause((-1,), 2)])
    assert evaluate_cost(inst, {1: False}) is None
    assert evaluate_cost(inst, {1: True}) == 2


# --- golden traces --------------------------------------------------------


@pytest.mark.parametrize("algorithm", ALGORITHMS)
def test_sample5_optimum_all_drivers(sample5, algorithm):
    res = solve(sample5, algorithm=algorithm)
    assert res.status == "optimal"
    assert res.z_opt == 1
    assert evaluate_cost(sample5, res.model) == 1


def test_bnb_incumbents_descend(sample5):
    res = solve_bnb(sample5)
    assert res.incumbents == [3, 2, 1]
    assert all(a > b for a, b in zip(res.incumbents, res.incumbents[1:]))


def test_wpm1_core_trace_sample5(sample5):
    res = solve_wpm1(sample5)
    assert res.status == "optimal"
    assert res.z_opt == 1
    assert [set(c) for c in res.cores] == [{1, 3, 5}]
    assert res.meta["rounds"] == [{"core": (1, 3, 5), "w_min": 1}]


def test_wpm1_core_trace_sample7(sample7):
    res = solve_wpm1(sample7)
    assert res.status == "optimal"
    assert res.z_opt == 2
    assert [set(c) for c in res.cores] == [{1, 3, 5}, {1, 2, 3, 4, 6, 7}]
    assert evaluate_cost(sample7, res.model) == 2
    for core in res.cores:
        assert verify_core(sample7, core)


def test_wpm1_bound_converges_from_below(sample7):
    res = solve_wpm1(sample7)
    opt = brute_force_maxsat(sample7).optimum
    running = 0
    for rnd in res.meta["rounds"]:
        running += rnd["w_min"]
        assert running <= opt
    assert running == opt == res.z_opt


def test_msu3_trace_sample5(sample5):
    res = solve_msu3(sample5)
    assert res.status == "optimal"
    assert res.z_opt == 1
    events = res.meta["events"]
    first_core = next(e for e in events if e["kind"] == "core")
    assert set(first_core["temporaries"]) == {1, 2, 4}
    assert not first_core["bounded"]
    assert 1 in res.incumbents
    last_core = [e for e in events if e["kind"] == "core"][-1]
    assert last_core["temporaries"] == ()
    # reported cores are the sound, bound-free ones
    assert [set(c) for c in res.cores] == [{1, 2, 4}]
    for core in res.cores:
        assert verify_core(sample5, core)


def test_unsatisfiable_hard_part():
    inst = SoftInstance(1, [
        WeightedClause((1,), HARD),
        WeightedClause((-1,), HARD),
        WeightedClause((1,), 1),
    ])
    for algorithm in ALGORITHMS:
        assert solve(inst, algorithm=algorithm).status == "unsatisfiable"


def test_all_soft_satisfiable():
    inst = SoftInstance(2, [WeightedClause((1,), 2), WeightedClause((2,), 3)])
    for algorithm in ALGORITHMS:
        res = solve(inst, algorithm=algorithm)
        assert res.status == "optimal" and res.z_opt == 0


def test_unknown_algorithm_rejected(sample5):
    with pytest.raises(ValueError):
        solve(sample5, algorithm="magic")


# --- randomized agreement -------------------------------------------------


def random_instance(rng, max_vars=9, max_clauses=18, max_weight=5, hard_frac=0.2):
    n = rng.randint(2, max_vars)
    m = rng.randint(1, max_clauses)
    clauses = []
    for _ in range(m):
        k = rng.randint(1, min(3, n))
        vs = rng.sample(range(1, n + 1), k)
        lits = tuple(v if rng.random() < 0.5 else -v for v in vs)
        w = HARD if rng.random() < hard_frac else rng.randint(1, max_weight)
        clauses.append(WeightedClause(lits, w))
    return SoftInstance(n, clauses)


def test_drivers_agree_with_oracle():
    rng = random.Random(20210)
    for _ in range(60):
        inst = random_instance(rng)
        oracle = brute_force_maxsat(inst)
        for algorithm in ALGORITHMS:
            res = solve(inst, algorithm=algorithm)
            if oracle.optimum is None:
                assert res.status == "unsatisfiable"
                continue
            assert res.status == "optimal"
            assert res.z_opt == oracle.optimum
            assert evaluate_cost(inst, res.model) == res.z_opt
            for core in res.cores:
                assert verify_core(inst, core)


def test_incumbents_strictly_improve_random():
    rng = random.Random(31)
    for _ in range(25):
        inst = random_instance(rng)
        for fn in (solve_bnb, solve_msu3):
            res = fn(inst)
            seq = res.incumbents
            assert all(a > b for a, b in zip(seq, seq[1:]))
            if res.status == "optimal":
                assert not seq or seq[-1] == res.z_opt


def test_budget_exhaustion_reports_unknown():
    rng = random.Random(9)
    inst = random_instance(rng, max_vars=9, max_clauses=18)
    for algorithm in ALGORITHMS:
        res = solve(inst, algorithm=algorithm, conflict_budget=0)
        assert res.status in ("unknown", "optimal", "unsatisfiable")
    # a tight conflict budget on a contradiction must come back unknown
    hard = SoftInstance(2, [
        WeightedClause((1, 2), HARD), WeightedClause((1, -2), HARD),
        WeightedClause((-1, 2), HARD), WeightedClause((-1, -2), HARD),
        WeightedClause((1,), 1),
    ])
    res = solve(hard, algorithm="bnb", conflict_budget=0)
    assert res.status == "unknown"


# --- indicator-variable front end ----------------------------------------


def build_indicator_engine(hard_clauses, n):
    eng = Engine(kernel="auto")
    for _ in range(n):
        eng.new_bool_var()
    for c in hard_clauses:
        eng.add_clause(c)
    return eng


@pytest.mark.parametrize("algorithm", ALGORITHMS)
def test_indicators_all_satisfiable(algorithm):
    eng = build_indicator_engine([], 3)
    prob = wrap_indicators(eng, [(1, 2), (2, 3), (3, 1)])
    res = prob.solve(algorithm=algorithm)
    assert res.status == "optimal" and res.z_opt == 0
    assert all(res.model[v] for v in (1, 2, 3))


@pytest.mark.parametrize("algorithm", ALGORITHMS)
def test_indicators_conflict_picks_cheaper(algorithm):
    # i1 and i2 cannot both hold; giving up i1 costs 2, i2 costs 3.
    eng = build_indicator_engine([(-1, -2)], 2)
    prob = wrap_indicators(eng, [(1, 2), (2, 3)])
    res = prob.solve(algorithm=algorithm)
    assert res.status == "optimal" and res.z_opt == 2
    assert res.model[1] is False and res.model[2] is True


def test_indicator_core_ids_are_positions():
    eng = build_indicator_engine([(-1, -2)], 2)
    prob = wrap_indicators(eng, [(1, 1), (2, 1)])
    res = prob.solve(algorithm="wpm1")
    assert res.z_opt == 1
    assert [set(c) for c in res.cores] == [{1, 2}]


def test_duplicate_indicator_rejected():
    eng = build_indicator_engine([], 2)
    with pytest.raises(ValueError):
        wrap_indicators(eng, [(1, 2), (1, 3)])


def test_nonpositive_indicator_weight_rejected():
    eng = build_indicator_engine([], 1)
    with pytest.raises(ValueError):
        wrap_indicators(eng, [(1, 0)])


def test_instance_check_rejects_bad_clauses():
    with pytest.raises(ValueError):
        SoftInstance(2, [WeightedClause((3,), 1)]).check()
    with pytest.raises(ValueError):
        SoftInstance(2, [WeightedClause((1,), 0)]).check()
    with pytest.raises(ValueError):
        SoftInstance(2, [WeightedClause((0,), 1)]).check()
