"""Lazy clause generation layer over the Boolean engine.

Integer variables expose their domains as order literals [x >= v] created on
demand; propagators read current bounds from those literals and explain every
inference as a clause over them.  Explanations cite only materialized bound
literals; original-domain bounds need no justification.
"""

import bisect
from itertools import combinations

from .engine import (
    Engine,
    Propagator,
    ORIGIN_USER,
    ORIGIN_OBJECTIVE,
)


class IntVar:
    """Integer variable with original bounds and lazily created order literals."""

    def __init__(self, vid, lb, ub):
        self.id = vid
        self.lb0 = lb
        self.ub0 = ub
        self.geq = {}        # value -> BoolLit for [x >= value], lb0 < value <= ub0
        self.eq = {}         # value -> BoolLit for [x = value]
        self.geq_vals = []   # sorted keys of geq

    def __repr__(self):
        return "IntVar(%d, [%d,%d])" % (self.id, self.lb0, self.ub0)


class CpModel:
    """Owns an engine plus the integer variables living on it."""

    def __init__(self, engine=None, kernel="auto", **config):
        self.eng = engine if engine is not None else Engine(kernel=kernel, **config)
        self.true_lit = self.eng.new_bool_var()
        self.eng.add_clause((self.true_lit,), ORIGIN_USER)
        self.ints = []

    def new_bool_var(self):
        return self.eng.new_bool_var()

    def new_int_var(self, lb, ub):
        if lb > ub:
            raise ValueError("empty domain [%d,%d]" % (lb, ub))
        x = IntVar(len(self.ints), lb, ub)
        self.ints.append(x)
        return x

    def lit_geq(self, x, v):
        """Literal for x >= v, clamped to the original domain."""
        if v <= x.lb0:
            return self.true_lit
        if v > x.ub0:
            return -self.true_lit
        lit = x.geq.get(v)
        if lit is not None:
            return lit
        lit = self.eng.new_bool_var()
        # channel against adjacent materialized bounds: [x>=v] -> [x>=prev],
        # [x>=next] -> [x>=v]; inserting between two repairs both sides
        i = bisect.bisect_left(x.geq_vals, v)
        if i > 0:
            self.eng.add_clause((-lit, x.geq[x.geq_vals[i - 1]]), ORIGIN_USER)
        if i < len(x.geq_vals):
            self.eng.add_clause((-x.geq[x.geq_vals[i]], lit), ORIGIN_USER)
        x.geq[v] = lit
        bisect.insort(x.geq_vals, v)
        return lit

    def lit_eq(self, x, v):
        """Literal for x = v: true iff [x>=v] and not [x>=v+1]."""
        if v < x.lb0 or v > x.ub0:
            return -self.true_lit
        if x.lb0 == x.ub0:
            return self.true_lit
        lit = x.eq.get(v)
        if lit is not None:
            return lit
        lit = self.eng.new_bool_var()
        lo = self.lit_geq(x, v)
        hi = self.lit_geq(x, v + 1)
        self.eng.add_clause((-lit, lo), ORIGIN_USER)
        self.eng.add_clause((-lit, -hi), ORIGIN_USER)
        self.eng.add_clause((lit, -lo, hi), ORIGIN_USER)
        x.eq[v] = lit
        return lit

    def materialize(self, x):
        """Eagerly create the full bound ladder of x."""
        for v in range(x.lb0 + 1, x.ub0 + 1):
            self.lit_geq(x, v)

    def post_half_reified_linear(self, i, terms, rhs):
        if not terms:
            raise ValueError("half-reified linear needs at least one term")
        if self.eng.root_value(i) is False:
            return None   # indicator already false at root, constraint is inert
        prop = HalfReifiedLinear(self, i, terms, rhs)
        self.eng.attach_propagator(prop)
        return prop

    def post_at_most_one(self, lits, origin=ORIGIN_USER):
        return post_at_most_one(self.eng, lits, origin)

    def post_pb_upper_bound(self, terms, strict_bound, decompose=False):
        return post_pb_upper_bound(self.eng, terms, strict_bound, decompose)

    def post_cumulative(self, tasks, capacity):
        """tasks: list of (IntVar start, duration, demand)."""
        if capacity < 1:
            raise ValueError("capacity must be positive")
        live = []
        for x, dur, dem in tasks:
            if dur < 0 or dem < 0:
                raise ValueError("negative duration or demand")
            if dur == 0 or dem == 0:
                continue
            if dem > capacity:
                self.eng.add_clause((), ORIGIN_USER)   # single task overloads
                continue
            live.append((x, dur, dem))
        if not live:
            return None
        prop = Cumulative(self, live, capacity)
        self.eng.attach_propagator(prop)
        return prop

    # bound readers shared by the propagators -------------------------------

    def cur_lb(self, x, view):
        """(bound, witness literal or None) from the highest true geq literal."""
        lb, wit = x.lb0, None
        for v in reversed(x.geq_vals):
            if v <= lb:
                break
            if view.lit_value(x.geq[v]) > 0:
                return v, x.geq[v]
        return lb, wit

    def cur_ub(self, x, view):
        """(bound, witness literal or None) from the lowest false geq literal."""
        for v in x.geq_vals:
            if view.lit_value(x.geq[v]) < 0:
                return v - 1, -x.geq[v]
        return x.ub0, None

    def strongest_geq(self, x, v):
        """Largest materialized bound value <= v, as (value, lit) or None."""
        i = bisect.bisect_right(x.geq_vals, v)
        if i == 0:
            return None
        val = x.geq_vals[i - 1]
        return val, x.geq[val]

    def strongest_leq(self, x, v):
        """Negated geq literal asserting x <= v, weakest materialized form."""
        i = bisect.bisect_right(x.geq_vals, v)
        if i == len(x.geq_vals):
            return None
        val = x.geq_vals[i]
        return val - 1, -x.geq[val]

    def decode(self, x, model):
        """Integer value of x under a Boolean model."""
        return decode_int(x, model)


def decode_int(x, model):
    """Integer value of an IntVar under a Boolean model: the highest
    materialized bound the model asserts, or the original lower bound."""
    for v in reversed(x.geq_vals):
        if model[abs(x.geq[v])] == (x.geq[v] > 0):
            return v
    return x.lb0


def post_at_most_one(eng, lits, origin=ORIGIN_USER):
    """Pairwise decomposition; a list of length <= 1 posts nothing."""
    refs = []
    for a, b in combinations(lits, 2):
        refs.append(eng.add_clause((-a, -b), origin))
    return refs


def post_pb_upper_bound(eng, terms, strict_bound, decompose=False,
                        origin=ORIGIN_OBJECTIVE):
    """Enforce sum(w * [lit true]) < strict_bound over arbitrary literals."""
    if strict_bound < 0:
        raise ValueError("strict bound must be nonnegative")
    for w, _ in terms:
        if w <= 0:
            raise ValueError("weights must be positive")
    if decompose:
        return PbDecomposition(eng, terms, strict_bound, origin)
    prop = PbUpperBound(terms, strict_bound)
    eng.attach_propagator(prop)
    return prop


class PbUpperBound(Propagator):
    """Native propagator for sum(w * lit) < bound; bound can tighten in place.

    A bound of 0 cannot hold once any term exists, so it propagates like
    bound 1: every literal is forced false and a true literal is a conflict.
    """

    def __init__(self, terms, strict_bound):
        self.terms = [(w, lit) for w, lit in terms]
        self.bound = strict_bound

    def tighten(self, new_bound):
        if new_bound > self.bound:
            raise ValueError("bound may only tighten")
        self.bound = new_bound

    def propagate(self, view):
        limit = max(self.bound, 1)
        total = 0
        true_lits = []
        for w, lit in self.terms:
            if view.lit_value(lit) > 0:
                total += w
                true_lits.append(lit)
                if total >= limit:
                    view.fail(true_lits)
                    return
        for w, lit in self.terms:
            if view.lit_value(lit) == 0 and total + w >= limit:
                if not view.enqueue(-lit, true_lits):
                    return


class PbDecomposition:
    """Sequential weighted counter clauses for sum(w * lit) < bound.

    Differential-testing alternative to the native propagator; tighten()
    forbids the higher counter outputs with unit clauses.
    """

    def __init__(self, eng, terms, strict_bound, origin=ORIGIN_OBJECTIVE):
        self.eng = eng
        self.terms = list(terms)
        self.bound = strict_bound
        self.origin = origin
        # bound 0 behaves like bound 1: every literal is forced false
        self.k = max(strict_bound, 1) - 1
        self.reg = {}
        n = len(self.terms)
        k = self.k
        if k == 0 or n == 0:
            for w, lit in self.terms:
                eng.add_clause((-lit,), origin)
            return
        s = [[eng.new_bool_var() for _ in range(k)] for _ in range(n)]
        self.reg = s
        w1, l1 = self.terms[0]
        for j in range(1, min(w1, k) + 1):
            eng.add_clause((-l1, s[0][j - 1]), origin)
        if w1 > k:
            eng.add_clause((-l1,), origin)
        for i in range(1, n):
            wi, li = self.terms[i]
            for j in range(1, k + 1):
                eng.add_clause((-s[i - 1][j - 1], s[i][j - 1]), origin)
            for j in range(1, min(wi, k) + 1):
                eng.add_clause((-li, s[i][j - 1]), origin)
            for j in range(1, k - wi + 1):
                eng.add_clause((-li, -s[i - 1][j - 1], s[i][j + wi - 1]), origin)
            if wi > k:
                eng.add_clause((-li,), origin)
            elif k + 1 - wi >= 1:
                eng.add_clause((-li, -s[i - 1][k - wi]), origin)

    def tighten(self, new_bound):
        if new_bound > self.bound:
            raise ValueError("bound may only tighten")
        old_k, self.bound = self.k, new_bound
        self.k = max(new_bound, 1) - 1
        if not self.reg:
            return
        last = self.reg[-1]
        for j in range(self.k + 1, old_k + 1):
            self.eng.add_clause((-last[j - 1],), self.origin)


class HalfReifiedLinear(Propagator):
    """indicator -> sum(coef * x) >= rhs with bounds propagation."""

    def __init__(self, model, indicator, terms, rhs):
        self.model = model
        self.i = indicator
        self.terms = [(c, x) for c, x in terms if c != 0]
        self.rhs = rhs

    def _sides(self, view):
        """Per-term (max contribution, witness) plus the running total."""
        out = []
        total = 0
        for c, x in self.terms:
            if c > 0:
                b, wit = self.model.cur_ub(x, view)
            else:
                b, wit = self.model.cur_lb(x, view)
            out.append((c * b, wit))
            total += c * b
        return out, total

    def propagate(self, view):
        if view.lit_value(self.i) <= 0:
            return
        sides, total = self._sides(view)
        if total < self.rhs:
            reason = [self.i] + [w for _, w in sides if w is not None]
            view.fail(reason)
            return
        for j, (c, x) in enumerate(self.terms):
            rest = total - sides[j][0]
            need = self.rhs - rest
            # c*x >= need
            if c > 0:
                target = -(-need // c)            # ceil
                lb, _ = self.model.cur_lb(x, view)
                if target <= lb:
                    continue
                got = self.model.strongest_geq(x, target)
                if got is None or got[0] <= lb:
                    continue
                lit = got[1]
            else:
                target = need // c                # floor of need/c, c negative
                ub, _ = self.model.cur_ub(x, view)
                if target >= ub:
                    continue
                got = self.model.strongest_leq(x, target)
                if got is None or got[0] >= ub:
                    continue
                lit = got[1]
            reason = [self.i]
            reason.extend(w for jj, (_, w) in enumerate(sides)
                          if jj != j and w is not None)
            if not view.enqueue(lit, reason):
                return


class Cumulative(Propagator):
    """Timetable propagation from compulsory parts, with naive explanations."""

    def __init__(self, model, tasks, capacity):
        self.model = model
        self.tasks = tasks            # (IntVar, duration, demand)
        self.cap = capacity

    def _bounds(self, view):
        out = []
        for x, dur, dem in self.tasks:
            lb, lwit = self.model.cur_lb(x, view)
            ub, uwit = self.model.cur_ub(x, view)
            out.append((lb, ub, lwit, uwit))
        return out

    def _witnesses(self, bounds, idx):
        wits = []
        for i in idx:
            _, _, lwit, uwit = bounds[i]
            if lwit is not None:
                wits.append(lwit)
            if uwit is not None:
                wits.append(uwit)
        return wits

    def propagate(self, view):
        bounds = self._bounds(view)
        profile = {}
        owners = {}
        for i, (x, dur, dem) in enumerate(self.tasks):
            lb, ub, _, _ = bounds[i]
            for t in range(ub, lb + dur):      # compulsory part [ub, lb+dur)
                profile[t] = profile.get(t, 0) + dem
                owners.setdefault(t, []).append(i)
        for t in sorted(profile):
            if profile[t] > self.cap:
                view.fail(self._witnesses(bounds, owners[t]))
                return
        for i, (x, dur, dem) in enumerate(self.tasks):
            lb, ub, _, _ = bounds[i]

            def load(t):
                h = profile.get(t, 0)
                if ub <= t < lb + dur:
                    h -= dem               # ignore the task's own part
                return h

            s = lb
            while True:
                clash = next((t for t in range(s, s + dur)
                              if load(t) + dem > self.cap), None)
                if clash is None:
                    break
                s = clash + 1
                if s > ub:
                    blockers = sorted({j for t in range(lb, ub + dur)
                                       for j in owners.get(t, ()) if j != i})
                    view.fail(self._witnesses(bounds, blockers + [i]))
                    return
            if s > lb:
                got = self.model.strongest_geq(x, s)
                if got is not None and got[0] > lb:
                    blockers = sorted({j for t in range(lb, s + dur)
                                       for j in owners.get(t, ()) if j != i})
                    reason = self._witnesses(bounds, blockers + [i])
                    if not view.enqueue(got[1], reason):
                        return
            e = ub
            while True:
                clash = next((t for t in range(e + dur - 1, e - 1, -1)
                              if load(t) + dem > self.cap), None)
                if clash is None:
                    break
                e = clash - dur
                if e < lb:
                    blockers = sorted({j for t in range(lb, ub + dur)
                                       for j in owners.get(t, ()) if j != i})
                    view.fail(self._witnesses(bounds, blockers + [i]))
                    return
            if e < ub:
                got = self.model.strongest_leq(x, e)
                if got is not None and got[0] < ub:
                    blockers = sorted({j for t in range(e, ub + dur)
                                       for j in owners.get(t, ()) if j != i})
                    reason = self._witnesses(bounds, blockers + [i])
                    if not view.enqueue(got[1], reason):
                        return
