"""Integer views, channeling, and the explanation-producing propagators."""

import itertools
import random

import pytest

from maxcore.cp import CpModel, post_pb_upper_bound
from maxcore.engine import available_kernels

KERNELS = available_kernels()


@pytest.fixture(params=KERNELS)
def kernel(request):
    return request.param


def entails(mdl, assumptions, lit):
    """True iff the model plus assumptions force lit."""
    return mdl.eng.solve(assumptions=list(assumptions) + [-lit]).status == "unsat"


# --- integer variables and domain literals ---------------------------------


def test_domain_size_and_bounds(kernel):
    mdl = CpModel(kernel=kernel)
    x = mdl.new_int_var(0, 10)
    assert x.ub0 - x.lb0 + 1 == 11
    with pytest.raises(ValueError):
        mdl.new_int_var(3, 2)


def test_fixed_var_geq_is_root_true(kernel):
    mdl = CpModel(kernel=kernel)
    x = mdl.new_int_var(5, 5)
    lit = mdl.lit_geq(x, 5)
    assert mdl.eng.root_value(lit) is True


def test_geq_clamps_to_constants(kernel):
    mdl = CpModel(kernel=kernel)
    x = mdl.new_int_var(0, 10)
    assert mdl.eng.root_value(mdl.lit_geq(x, 0)) is True
    assert mdl.eng.root_value(mdl.lit_geq(x, -3)) is True
    assert mdl.eng.root_value(mdl.lit_geq(x, 11)) is False


def test_channeling_propagates_downward(kernel):
    mdl = CpModel(kernel=kernel)
    x = mdl.new_int_var(0, 10)
    l4 = mdl.lit_geq(x, 4)
    l7 = mdl.lit_geq(x, 7)
    mdl.eng.add_clause((l7,))
    assert mdl.eng.root_value(l4) is True


def test_channeling_repair_between_existing(kernel):
    mdl = CpModel(kernel=kernel)
    x = mdl.new_int_var(0, 10)
    l4 = mdl.lit_geq(x, 4)
    l7 = mdl.lit_geq(x, 7)
    l5 = mdl.lit_geq(x, 5)   # created between two existing bound literals
    assert entails(mdl, [l7], l5)
    assert entails(mdl, [l5], l4)
    assert not entails(mdl, [l5], l7)


def test_eq_literal_matches_decode(kernel):
    mdl = CpModel(kernel=kernel)
    x = mdl.new_int_var(0, 3)
    eqs = {v: mdl.lit_eq(x, v) for v in range(4)}
    for v in range(4):
        out = mdl.eng.solve(assumptions=[eqs[v]])
        assert out.status == "sat"
        assert mdl.decode(x, out.model) == v
    out = mdl.eng.solve()
    val = mdl.decode(x, out.model)
    for v in range(4):
        assert out.model[eqs[v]] == (val == v)


def test_decode_stays_in_domain(kernel):
    rng = random.Random(3)
    for _ in range(20):
        mdl = CpModel(kernel=kernel)
        lb = rng.randint(-3, 3)
        ub = lb + rng.randint(0, 6)
        x = mdl.new_int_var(lb, ub)
        mdl.materialize(x)
        pick = [mdl.lit_geq(x, rng.randint(lb, ub + 1))
                for _ in range(rng.randint(0, 2))]
        assume = [l if rng.random() < 0.5 else -l for l in pick]
        out = mdl.eng.solve(assumptions=assume)
        if out.status != "sat":
            continue
        val = mdl.decode(x, out.model)
        assert lb <= val <= ub
        for v in x.geq_vals:
            lit = x.geq[v]
            assert out.model[abs(lit)] == ((lit > 0) == (val >= v))


# --- half-reified linear ----------------------------------------------------


def build_precedence(kernel, lo1, hi1, lo2, hi2, gap, force=True):
    """i -> (s2 - s1 >= gap) with both ladders fully materialized."""
    mdl = CpModel(kernel=kernel)
    s1 = mdl.new_int_var(lo1, hi1)
    s2 = mdl.new_int_var(lo2, hi2)
    mdl.materialize(s1)
    mdl.materialize(s2)
    i = mdl.new_bool_var()
    if force:
        mdl.eng.add_clause((i,))
    mdl.post_half_reified_linear(i, [(1, s2), (-1, s1)], gap)
    return mdl, s1, s2, i


def test_precedence_pushes_lower_bound(kernel):
    mdl, s1, s2, i = build_precedence(kernel, 4, 9, 0, 12, 3)
    out = mdl.eng.solve()
    assert out.status == "sat"
    assert mdl.decode(s2, out.model) >= mdl.decode(s1, out.model) + 3
    assert mdl.decode(s2, out.model) >= 7
    assert entails(mdl, [], mdl.lit_geq(s2, 7))


def test_precedence_inference_carries_explanation(kernel):
    mdl, s1, s2, i = build_precedence(kernel, 0, 9, 0, 12, 3)
    a = mdl.lit_geq(s1, 4)
    target = mdl.lit_geq(s2, 7)
    out = mdl.eng.solve(assumptions=[a])
    assert out.status == "sat"
    want = {target, -i, -a}
    assert any(set(e) == want for e in out.explanations)


def test_half_reification_is_inert_when_unfixed(kernel):
    # body violated by the domains themselves, indicator free
    mdl, s1, s2, i = build_precedence(kernel, 4, 4, 0, 2, 3, force=False)
    out = mdl.eng.solve()
    assert out.status == "sat"
    assert out.model[i] is False
    assert mdl.eng.solve(assumptions=[i]).status == "unsat"
    assert mdl.eng.solve(assumptions=[i]).core == (i,)


def test_precedence_conflict_exactly_when_too_tight(kernel):
    tight = build_precedence(kernel, 4, 9, 0, 6, 3)[0]  # max(s2)-min(s1) = 2 < 3
    assert tight.eng.solve().status == "unsat"
    loose, s1, s2, _ = build_precedence(kernel, 4, 9, 0, 7, 3)
    out = loose.eng.solve()
    assert out.status == "sat"
    assert mdl_val(loose, s1, out) == 4 and mdl_val(loose, s2, out) == 7


def mdl_val(mdl, x, out):
    return mdl.decode(x, out.model)


def test_propagator_matches_eager_decomposition(kernel):
    """Precedence propagation reaches exactly the clauses' unit-propagation
    consequences across every single-literal assumption."""
    gap = 2
    lb, ub = 0, 4
    prop = CpModel(kernel=kernel)
    p1, p2 = prop.new_int_var(lb, ub), prop.new_int_var(lb, ub)
    prop.materialize(p1)
    prop.materialize(p2)
    ip = prop.new_bool_var()
    prop.eng.add_clause((ip,))
    prop.post_half_reified_linear(ip, [(1, p2), (-1, p1)], gap)

    dec = CpModel(kernel=kernel)
    d1, d2 = dec.new_int_var(lb, ub), dec.new_int_var(lb, ub)
    dec.materialize(d1)
    dec.materialize(d2)
    for v in range(lb, ub + 1):
        lo = dec.lit_geq(d1, v)
        hi = dec.lit_geq(d2, v + gap)
        if dec.eng.root_value(hi) is False:
            dec.eng.add_clause((-lo,))
        elif dec.eng.root_value(lo) is None or dec.eng.root_value(hi) is None:
            dec.eng.add_clause((-lo, hi))

    def ladder(x):
        return [x.geq[v] for v in x.geq_vals]

    assumes = [[]]
    for lit in ladder(p1) + ladder(p2):
        assumes.append([lit])
        assumes.append([-lit])
    for assume in assumes:
        dec_assume = [_mirror_lit((p1, p2), (d1, d2), l) for l in assume]
        for t in ladder(p1) + ladder(p2):
            td = _mirror_lit((p1, p2), (d1, d2), t)
            for sign in (1, -1):
                a = entails(prop, assume, sign * t)
                b = entails(dec, dec_assume, sign * td)
                assert a == b, (assume, sign * t, a, b)


def _mirror_lit(src_vars, dst_vars, lit):
    v = abs(lit)
    for sx, dx in zip(src_vars, dst_vars):
        for val, l in sx.geq.items():
            if abs(l) == v:
                out = dx.geq[val]
                return out if (lit > 0) == (l > 0) else -out
    raise AssertionError("literal not found in ladder")


def test_precedence_arithmetic_strength(kernel):
    # assuming s1 >= v must entail s2 >= v + 2 and nothing stronger
    mdl, s1, s2, _ = build_precedence(kernel, 0, 4, 0, 6, 2)
    for v in range(1, 5):
        a = mdl.lit_geq(s1, v)
        assert entails(mdl, [a], mdl.lit_geq(s2, v + 2))
        assert not entails(mdl, [a], mdl.lit_geq(s2, v + 3))
    # and the upper bounds travel the other way
    for w in range(3, 7):
        na = -mdl.lit_geq(s2, w)            # s2 <= w - 1
        assert entails(mdl, [na], -mdl.lit_geq(s1, w - 2))


# --- at-most-one ------------------------------------------------------------


def test_at_most_one_posts_pairwise_clauses(kernel):
    mdl = CpModel(kernel=kernel)
    v1, v3, v5 = (mdl.new_bool_var() for _ in range(3))
    refs = mdl.post_at_most_one([v1, v3, v5])
    got = {mdl.eng.clause_by_ref(r).lits for r in refs}
    assert got == {(-v1, -v3), (-v1, -v5), (-v3, -v5)}


def test_at_most_one_two_true_conflicts(kernel):
    mdl = CpModel(kernel=kernel)
    a, b, c = (mdl.new_bool_var() for _ in range(3))
    mdl.post_at_most_one([a, b, c])
    mdl.eng.add_clause((a,))
    mdl.eng.add_clause((b,))
    assert mdl.eng.root_conflict


def test_at_most_one_singleton_is_noop(kernel):
    mdl = CpModel(kernel=kernel)
    a = mdl.new_bool_var()
    assert mdl.post_at_most_one([a]) == []


# --- pseudo-Boolean upper bound ---------------------------------------------


@pytest.mark.parametrize("decompose", [False, True])
def test_pb_unit_weights_bound_one(decompose, kernel):
    mdl = CpModel(kernel=kernel)
    vs = [mdl.new_bool_var() for _ in range(5)]
    mdl.post_pb_upper_bound([(1, v) for v in vs], 1, decompose=decompose)
    out = mdl.eng.solve()
    assert out.status == "sat"
    assert all(out.model[v] is False for v in vs)
    for v in vs:
        assert mdl.eng.solve(assumptions=[v]).status == "unsat"


@pytest.mark.parametrize("decompose", [False, True])
def test_pb_weighted_pair(decompose, kernel):
    mdl = CpModel(kernel=kernel)
    a, b = mdl.new_bool_var(), mdl.new_bool_var()
    mdl.post_pb_upper_bound([(3, a), (2, b)], 4, decompose=decompose)
    out = mdl.eng.solve(assumptions=[a])
    assert out.status == "sat"
    assert out.model[b] is False
    assert mdl.eng.solve(assumptions=[a, b]).status == "unsat"


@pytest.mark.parametrize("decompose", [False, True])
def test_pb_slack_leaves_literals_free(decompose, kernel):
    mdl = CpModel(kernel=kernel)
    vs = [mdl.new_bool_var() for _ in range(3)]
    mdl.post_pb_upper_bound([(2, v) for v in vs], 5, decompose=decompose)
    assert mdl.eng.solve(assumptions=vs[:2]).status == "sat"
    assert mdl.eng.solve(assumptions=vs).status == "unsat"


@pytest.mark.parametrize("decompose", [False, True])
def test_pb_bound_zero_forces_all_false(decompose, kernel):
    mdl = CpModel(kernel=kernel)
    vs = [mdl.new_bool_var() for _ in range(3)]
    mdl.post_pb_upper_bound([(1, v) for v in vs], 0, decompose=decompose)
    out = mdl.eng.solve()
    assert out.status == "sat"
    assert all(out.model[v] is False for v in vs)


def test_pb_bound_zero_with_root_true_literal_conflicts(kernel):
    mdl = CpModel(kernel=kernel)
    v = mdl.new_bool_var()
    mdl.eng.add_clause((v,))
    mdl.post_pb_upper_bound([(1, v)], 0, decompose=True)
    assert mdl.eng.root_conflict
    mdl2 = CpModel(kernel=kernel)
    w = mdl2.new_bool_var()
    mdl2.eng.add_clause((w,))
    mdl2.post_pb_upper_bound([(1, w)], 0, decompose=False)
    assert mdl2.eng.solve().status == "unsat"


def test_pb_rejects_bad_arguments(kernel):
    mdl = CpModel(kernel=kernel)
    v = mdl.new_bool_var()
    with pytest.raises(ValueError):
        mdl.post_pb_upper_bound([(1, v)], -1)
    with pytest.raises(ValueError):
        mdl.post_pb_upper_bound([(0, v)], 2)


@pytest.mark.parametrize("decompose", [False, True])
def test_pb_tighten(decompose, kernel):
    mdl = CpModel(kernel=kernel)
    vs = [mdl.new_bool_var() for _ in range(3)]
    pb = mdl.post_pb_upper_bound([(1, v) for v in vs], 3, decompose=decompose)
    assert mdl.eng.solve(assumptions=vs[:2]).status == "sat"
    pb.tighten(1)
    assert mdl.eng.solve(assumptions=vs[:1]).status == "unsat"
    assert mdl.eng.solve().status == "sat"


def test_pb_native_equals_decomposition(kernel):
    rng = random.Random(77)
    for _ in range(40):
        n = rng.randint(1, 4)
        weights = [rng.randint(1, 4) for _ in range(n)]
        bound = rng.randint(0, sum(weights) + 1)
        results = []
        for decompose in (False, True):
            mdl = CpModel(kernel=kernel)
            vs = [mdl.new_bool_var() for _ in range(n)]
            post_pb_upper_bound(mdl.eng, list(zip(weights, vs)), bound,
                                decompose=decompose)
            statuses = []
            for bits in itertools.product([False, True], repeat=n):
                assume = [v if b else -v for v, b in zip(vs, bits)]
                statuses.append(mdl.eng.solve(assumptions=assume).status)
            results.append(statuses)
        assert results[0] == results[1]
        # and both agree with plain arithmetic (bound 0 acts like bound 1)
        for bits, status in zip(itertools.product([False, True], repeat=n),
                                results[0]):
            total = sum(w for w, b in zip(weights, bits) if b)
            assert (status == "sat") == (total < max(bound, 1))


# --- cumulative --------------------------------------------------------------


def test_cumulative_two_tasks_capacity_one(kernel):
    # duration 3 each, starts in [0,2]: every placement pair overlaps
    mdl = CpModel(kernel=kernel)
    s1, s2 = mdl.new_int_var(0, 2), mdl.new_int_var(0, 2)
    mdl.materialize(s1)
    mdl.materialize(s2)
    mdl.post_cumulative([(s1, 3, 1), (s2, 3, 1)], 1)
    assert mdl.eng.solve().status == "unsat"
    for a in range(3):
        for b in range(3):
            assert not (a + 3 <= b or b + 3 <= a)   # the 9-case double check


def test_cumulative_two_tasks_capacity_two(kernel):
    mdl = CpModel(kernel=kernel)
    s1, s2 = mdl.new_int_var(0, 2), mdl.new_int_var(0, 2)
    mdl.materialize(s1)
    mdl.materialize(s2)
    mdl.post_cumulative([(s1, 3, 1), (s2, 3, 1)], 2)
    assert mdl.eng.solve().status == "sat"


def test_cumulative_demand_over_capacity_is_root_conflict(kernel):
    mdl = CpModel(kernel=kernel)
    s = mdl.new_int_var(0, 2)
    mdl.post_cumulative([(s, 1, 3)], 2)
    assert mdl.eng.root_conflict


def test_cumulative_zero_pieces_are_dropped(kernel):
    mdl = CpModel(kernel=kernel)
    s1, s2 = mdl.new_int_var(0, 2), mdl.new_int_var(0, 2)
    assert mdl.post_cumulative([(s1, 0, 5), (s2, 2, 0)], 1) is None


def test_cumulative_pushes_start_bounds(kernel):
    # fixed task occupies [0,3); the second must start at 3
    mdl = CpModel(kernel=kernel)
    s1, s2 = mdl.new_int_var(0, 0), mdl.new_int_var(0, 3)
    mdl.materialize(s1)
    mdl.materialize(s2)
    mdl.post_cumulative([(s1, 3, 1), (s2, 2, 1)], 1)
    out = mdl.eng.solve()
    assert out.status == "sat"
    assert mdl.decode(s2, out.model) == 3
    assert entails(mdl, [], mdl.lit_geq(s2, 3))


def test_cumulative_pushes_upper_bounds(kernel):
    # fixed task occupies [3,6); the second (duration 2) must finish by 3
    mdl = CpModel(kernel=kernel)
    s1, s2 = mdl.new_int_var(3, 3), mdl.new_int_var(0, 4)
    mdl.materialize(s1)
    mdl.materialize(s2)
    mdl.post_cumulative([(s1, 3, 1), (s2, 2, 1)], 1)
    assert mdl.eng.solve(assumptions=[mdl.lit_geq(s2, 2)]).status == "unsat"
    assert mdl.eng.solve(assumptions=[mdl.lit_geq(s2, 1)]).status == "sat"


def test_cumulative_random_models_respect_profile(kernel):
    rng = random.Random(15)
    for _ in range(25):
        nt = rng.randint(2, 4)
        cap = rng.randint(1, 3)
        horizon = rng.randint(4, 7)
        mdl = CpModel(kernel=kernel)
        tasks = []
        for _ in range(nt):
            dur = rng.randint(1, 3)
            dem = rng.randint(1, cap)
            s = mdl.new_int_var(0, horizon - dur)
            mdl.materialize(s)
            tasks.append((s, dur, dem))
        mdl.post_cumulative(tasks, cap)
        out = mdl.eng.solve()
        if out.status != "sat":
            continue
        usage = [0] * horizon
        for s, dur, dem in tasks:
            v = mdl.decode(s, out.model)
            for t in range(v, v + dur):
                usage[t] += dem
        assert max(usage) <= cap
