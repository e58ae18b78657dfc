"""Weighted partial MaxSAT: data model, WCNF text format, three drivers.

The drivers share one engine contract: soft clauses are enforced through
assumption literals (WPM1) or temporary assumptions standing for singleton
clauses (MSU3), and unsatisfiable cores come back as subsets of those
assumptions.  Reported cores use 1-based positions into the input clause
list and are always sound against the original instance.
"""

import math
import time
from dataclasses import dataclass, field
from itertools import combinations

from .engine import Engine, ORIGIN_USER, ORIGIN_RELAXATION, ORIGIN_OBJECTIVE
from .cp import post_pb_upper_bound

HARD = math.inf

ALGORITHMS = ("bnb", "wpm1", "msu3")


@dataclass
class WeightedClause:
    """One clause with weight; HARD marks hard clauses.

    violators/assumption/ref/origin_id are driver bookkeeping filled in on
    working copies; input instances leave them at their defaults.
    """

    lits: tuple
    weight: object
    violators: list = field(default_factory=list)
    assumption: int = 0
    ref: int = -1
    origin_id: int = 0

    def is_hard(self):
        return self.weight == HARD

    def copy(self):
        return WeightedClause(tuple(self.lits), self.weight,
                              list(self.violators), self.assumption,
                              self.ref, self.origin_id)


@dataclass
class SoftInstance:
    var_count: int
    clauses: list
    top_weight: int = 0     # hard-weight sentinel from WCNF, 0 = unset

    def check(self):
        for j, wc in enumerate(self.clauses, 1):
            if not wc.is_hard():
                if not isinstance(wc.weight, int) or wc.weight < 1:
                    raise ValueError("clause %d: weight %r invalid" % (j, wc.weight))
            for l in wc.lits:
                if l == 0 or abs(l) > self.var_count:
                    raise ValueError("clause %d: literal %d out of range" % (j, l))
        return self

    def soft_total(self):
        return sum(wc.weight for wc in self.clauses if not wc.is_hard())


class WcnfParseError(ValueError):
    def __init__(self, line_no, msg):
        super().__init__("line %d: %s" % (line_no, msg))
        self.line_no = line_no


def parse_wcnf(text):
    """Parse DIMACS WCNF: `p wcnf <vars> <clauses> <top>`, weight == top is hard."""
    header = None
    clauses = []
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if header is not None:
                raise WcnfParseError(line_no, "duplicate header")
            parts = line.split()
            if len(parts) != 5 or parts[1] != "wcnf":
                raise WcnfParseError(line_no, "malformed header %r" % line)
            try:
                nvars, _, top = int(parts[2]), int(parts[3]), int(parts[4])
            except ValueError:
                raise WcnfParseError(line_no, "non-integer header field")
            if nvars < 0 or top < 1:
                raise WcnfParseError(line_no, "header values out of range")
            header = (nvars, top)
            continue
        if header is None:
            raise WcnfParseError(line_no, "clause before header")
        try:
            nums = [int(t) for t in line.split()]
        except ValueError:
            raise WcnfParseError(line_no, "non-integer token")
        if nums[-1] != 0:
            raise WcnfParseError(line_no, "missing terminating 0")
        weight, lits = nums[0], nums[1:-1]
        if weight <= 0:
            raise WcnfParseError(line_no, "weight %d must be positive" % weight)
        if weight > header[1]:
            raise WcnfParseError(line_no, "weight %d exceeds top" % weight)
        for l in lits:
            if l == 0:
                raise WcnfParseError(line_no, "unexpected 0 inside clause")
            if abs(l) > header[0]:
                raise WcnfParseError(line_no, "literal %d out of range" % l)
        clauses.append(WeightedClause(
            tuple(lits), HARD if weight == header[1] else weight))
    if header is None:
        raise WcnfParseError(0, "no 'p wcnf' header found")
    return SoftInstance(header[0], clauses, header[1])


def serialize_wcnf(inst):
    top = inst.top_weight
    if top < 1 or any(not wc.is_hard() and wc.weight >= top
                      for wc in inst.clauses):
        top = inst.soft_total() + 1
    out = ["p wcnf %d %d %d" % (inst.var_count, len(inst.clauses), top)]
    for wc in inst.clauses:
        w = top if wc.is_hard() else wc.weight
        out.append(" ".join([str(w)] + [str(l) for l in wc.lits] + ["0"]))
    return "\n".join(out) + "\n"


def evaluate_cost(inst, model):
    """Total weight of violated soft clauses; None if any hard one is violated."""
    cost = 0
    for wc in inst.clauses:
        if any(model[abs(l)] == (l > 0) for l in wc.lits):
            continue
        if wc.is_hard():
            return None
        cost += wc.weight
    return cost


@dataclass
class Wpm1State:
    z_min: int = 0
    rounds: list = field(default_factory=list)   # (core clause ids, w_min)


@dataclass
class OptimizeResult:
    status: str                     # 'optimal' | 'unsatisfiable' | 'unknown'
    z_opt: int = None
    model: dict = None
    z_lower: int = 0
    cores: list = field(default_factory=list)
    incumbents: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    wpm1: Wpm1State = None


class _Budget:
    def __init__(self, conflicts, seconds):
        self.conflicts_left = conflicts
        self.deadline = None if seconds is None else time.monotonic() + seconds

    def exhausted(self):
        if self.conflicts_left is not None and self.conflicts_left <= 0:
            return True
        return self.deadline is not None and time.monotonic() >= self.deadline

    def args(self):
        t = None
        if self.deadline is not None:
            t = max(self.deadline - time.monotonic(), 0.0)
        return self.conflicts_left, t

    def charge(self, conflicts):
        if self.conflicts_left is not None:
            self.conflicts_left -= conflicts


def _lit_true(model, lit):
    return model[abs(lit)] == (lit > 0)


def _restrict(model, n):
    if n is None:
        return model
    return {v: model[v] for v in range(1, n + 1)}


def _finish(status, eng, t0, *, z_opt=None, model=None, z_lower=0, cores=(),
            incumbents=(), meta=None, wpm1=None, core_events=0, audit_inst=None):
    meta = dict(meta or {})
    if audit_inst is not None and model is not None:
        meta["audit"] = evaluate_cost(audit_inst, model)
    stats = {"wall_ms": (time.perf_counter() - t0) * 1000.0}
    stats.update(eng.stats)
    stats["cores"] = core_events
    stats["incumbents"] = len(incumbents)
    return OptimizeResult(status=status, z_opt=z_opt, model=model,
                          z_lower=z_lower, cores=list(cores),
                          incumbents=list(incumbents), stats=stats,
                          meta=meta, wpm1=wpm1)


def _base_engine(inst, kernel, config):
    eng = Engine(kernel=kernel, **(config or {}))
    for _ in range(inst.var_count):
        eng.new_bool_var()
    return eng


# ---------------------------------------------------------------------------
# branch and bound

def _bnb_loop(eng, terms, budget, t0, decode_n, audit_inst, pb_decompose,
              on_incumbent=None):
    incumbents = []
    best = None
    bound = None
    while True:
        if budget.exhausted():
            return _finish("unknown", eng, t0, z_opt=incumbents[-1] if incumbents else None,
                           model=best, incumbents=incumbents, audit_inst=audit_inst)
        cb, tb = budget.args()
        out = eng.solve((), conflict_budget=cb, time_budget_s=tb)
        budget.charge(out.conflicts)
        if out.status == "unknown":
            return _finish("unknown", eng, t0, z_opt=incumbents[-1] if incumbents else None,
                           model=best, incumbents=incumbents, audit_inst=audit_inst)
        if out.status == "unsat":
            break
        z = sum(w for w, lit in terms if _lit_true(out.model, lit))
        incumbents.append(z)
        best = _restrict(out.model, decode_n)
        if on_incumbent:
            on_incumbent(z)
        # next model must satisfy sum(w*v) < z; z = 0 makes that the empty clause
        if z <= 0:
            eng.add_clause((), ORIGIN_OBJECTIVE)
        elif bound is None:
            bound = post_pb_upper_bound(eng, terms, z, decompose=pb_decompose)
        else:
            bound.tighten(z)
    if best is None:
        return _finish("unsatisfiable", eng, t0, audit_inst=audit_inst)
    return _finish("optimal", eng, t0, z_opt=incumbents[-1], model=best,
                   z_lower=incumbents[-1], incumbents=incumbents,
                   audit_inst=audit_inst)


def solve_bnb(inst, *, kernel="auto", config=None, conflict_budget=None,
              time_budget_s=None, pb_decompose=False, on_incumbent=None):
    """Algorithm: violators on every soft clause, then tighten an objective
    bound below each incumbent until unsatisfiable."""
    inst.check()
    t0 = time.perf_counter()
    budget = _Budget(conflict_budget, time_budget_s)
    eng = _base_engine(inst, kernel, config)
    terms = []
    for wc in inst.clauses:
        if wc.is_hard():
            eng.add_clause(wc.lits, ORIGIN_USER)
        else:
            v = eng.new_bool_var()
            eng.add_clause((v,) + tuple(wc.lits), ORIGIN_USER)
            terms.append((wc.weight, v))
    return _bnb_loop(eng, terms, budget, t0, inst.var_count, inst,
                     pb_decompose, on_incumbent)


# ---------------------------------------------------------------------------
# WPM1

def _wpm1_loop(eng, records, budget, t0, decode_n, audit_inst):
    state = Wpm1State()
    cores = []
    rounds = []
    amap = {rec.assumption: rec for rec in records}
    while True:
        if budget.exhausted():
            return _finish("unknown", eng, t0, z_lower=state.z_min, cores=cores,
                           meta={"rounds": rounds}, wpm1=state,
                           core_events=len(rounds))
        cb, tb = budget.args()
        assumptions = [rec.assumption for rec in records]
        out = eng.solve(assumptions, conflict_budget=cb, time_budget_s=tb)
        budget.charge(out.conflicts)
        if out.status == "unknown":
            return _finish("unknown", eng, t0, z_lower=state.z_min, cores=cores,
                           meta={"rounds": rounds}, wpm1=state,
                           core_events=len(rounds))
        if out.status == "sat":
            model = _restrict(out.model, decode_n)
            return _finish("optimal", eng, t0, z_opt=state.z_min, model=model,
                           z_lower=state.z_min, cores=cores,
                           meta={"rounds": rounds}, wpm1=state,
                           core_events=len(rounds), audit_inst=audit_inst)
        core_recs = [amap[l] for l in out.core]
        if not core_recs:
            # hard clauses alone are unsatisfiable (the w_min = infinity case)
            return _finish("unsatisfiable", eng, t0, cores=cores,
                           meta={"rounds": rounds}, wpm1=state,
                           core_events=len(rounds))
        w_min = min(rec.weight for rec in core_recs)
        state.z_min += w_min
        ids = tuple(sorted({rec.origin_id for rec in core_recs}))
        state.rounds.append((ids, w_min))
        rounds.append({"core": ids, "w_min": w_min})
        cores.append(ids)
        fresh = []
        for rec in core_recs:
            if rec.weight > w_min:
                a2 = eng.new_bool_var()
                dup = WeightedClause(rec.lits, rec.weight - w_min,
                                     list(rec.violators), a2,
                                     origin_id=rec.origin_id)
                dup.ref = eng.add_clause(
                    rec.lits + tuple(rec.violators) + (-a2,), ORIGIN_RELAXATION)
                records.append(dup)
                amap[a2] = dup
            v = eng.new_bool_var()
            eng.retract(refs=(rec.ref,))
            rec.violators.append(v)
            rec.weight = w_min
            rec.ref = eng.add_clause(
                rec.lits + tuple(rec.violators) + (-rec.assumption,),
                ORIGIN_RELAXATION)
            fresh.append(v)
        for va, vb in combinations(fresh, 2):
            eng.add_clause((-va, -vb), ORIGIN_RELAXATION)


def solve_wpm1(inst, *, kernel="auto", config=None, conflict_budget=None,
               time_budget_s=None):
    """Algorithm: solve with all softs enforced; each unsatisfiable core pays
    w_min into z_min and is relaxed with fresh violators under an atmost1."""
    inst.check()
    t0 = time.perf_counter()
    budget = _Budget(conflict_budget, time_budget_s)
    eng = _base_engine(inst, kernel, config)
    records = []
    for j, wc in enumerate(inst.clauses, 1):
        if wc.is_hard():
            eng.add_clause(wc.lits, ORIGIN_USER)
            continue
        work = wc.copy()
        work.origin_id = j
        work.assumption = eng.new_bool_var()
        work.ref = eng.add_clause(work.lits + (-work.assumption,), ORIGIN_USER)
        records.append(work)
    return _wpm1_loop(eng, records, budget, t0, inst.var_count, inst)


# ---------------------------------------------------------------------------
# MSU3

def _msu3_loop(eng, temps, terms, budget, t0, decode_n, audit_inst,
               pb_decompose, on_incumbent=None):
    incumbents = []
    best = None
    bound = None
    bounded = False
    cores = []
    events = []
    core_events = 0
    live = list(temps)          # (soft id, violator literal), id order
    while True:
        if budget.exhausted():
            return _finish("unknown", eng, t0, z_opt=incumbents[-1] if incumbents else None,
                           model=best, cores=cores, incumbents=incumbents,
                           meta={"events": events}, core_events=core_events,
                           audit_inst=audit_inst)
        cb, tb = budget.args()
        assumptions = [-v for _, v in live]
        out = eng.solve(assumptions, conflict_budget=cb, time_budget_s=tb)
        budget.charge(out.conflicts)
        if out.status == "unknown":
            return _finish("unknown", eng, t0, z_opt=incumbents[-1] if incumbents else None,
                           model=best, cores=cores, incumbents=incumbents,
                           meta={"events": events}, core_events=core_events,
                           audit_inst=audit_inst)
        if out.status == "sat":
            z = sum(w for w, lit in terms if _lit_true(out.model, lit))
            incumbents.append(z)
            best = _restrict(out.model, decode_n)
            events.append({"kind": "incumbent", "z": z})
            if on_incumbent:
                on_incumbent(z)
            if z <= 0:
                eng.add_clause((), ORIGIN_OBJECTIVE)
            elif bound is None:
                bound = post_pb_upper_bound(eng, terms, z, decompose=pb_decompose)
            else:
                bound.tighten(z)
            bounded = True
            continue
        core_set = set(out.core)
        in_core = [(sid, v) for sid, v in live if -v in core_set]
        ids = tuple(sid for sid, _ in in_core)
        events.append({"kind": "core", "temporaries": ids, "bounded": bounded})
        if not in_core:
            break
        core_events += 1
        if not bounded:
            # pre-incumbent cores are cores of the original instance
            cores.append(ids)
        dead = {sid for sid, _ in in_core}
        live = [(sid, v) for sid, v in live if sid not in dead]
    if best is None:
        return _finish("unsatisfiable", eng, t0, cores=cores,
                       meta={"events": events}, core_events=core_events,
                       audit_inst=audit_inst)
    return _finish("optimal", eng, t0, z_opt=incumbents[-1], model=best,
                   z_lower=incumbents[-1], cores=cores, incumbents=incumbents,
                   meta={"events": events}, core_events=core_events,
                   audit_inst=audit_inst)


def solve_msu3(inst, *, kernel="auto", config=None, conflict_budget=None,
               time_budget_s=None, pb_decompose=False, on_incumbent=None):
    """Algorithm: violators everywhere plus temporary singletons keeping them
    false; cores spend temporaries, models tighten the objective bound."""
    inst.check()
    t0 = time.perf_counter()
    budget = _Budget(conflict_budget, time_budget_s)
    eng = _base_engine(inst, kernel, config)
    terms = []
    temps = []
    for j, wc in enumerate(inst.clauses, 1):
        if wc.is_hard():
            eng.add_clause(wc.lits, ORIGIN_USER)
            continue
        v = eng.new_bool_var()
        eng.add_clause((v,) + tuple(wc.lits), ORIGIN_USER)
        terms.append((wc.weight, v))
        temps.append((j, v))
    return _msu3_loop(eng, temps, terms, budget, t0, inst.var_count, inst,
                      pb_decompose, on_incumbent)


def solve(inst, algorithm="wpm1", **kw):
    if algorithm == "bnb":
        return solve_bnb(inst, **kw)
    if algorithm == "wpm1":
        return solve_wpm1(inst, **kw)
    if algorithm == "msu3":
        return solve_msu3(inst, **kw)
    raise ValueError("unknown algorithm %r" % algorithm)


# ---------------------------------------------------------------------------
# indicator bridge for intensional soft constraints

def wrap_indicators(eng, indicators):
    """Present (indicator literal, weight) pairs as soft singleton clauses."""
    return IndicatorProblem(eng, indicators)

class IndicatorProblem:
    """Soft singleton view over an engine already holding the hard model.

    For bnb/msu3 each indicator is fused with its violator (v = not i), so no
    clause is added; for wpm1 the singleton clause is materialized and then
    relaxed round by round.  Solving consumes the engine; build a fresh model
    per run.
    """

    def __init__(self, eng, indicators):
        seen = set()
        for lit, w in indicators:
            if abs(lit) in seen:
                raise ValueError("duplicate indicator literal %d" % lit)
            seen.add(abs(lit))
            if not isinstance(w, int) or w < 1:
                raise ValueError("indicator weight %r invalid" % (w,))
        self.eng = eng
        self.indicators = list(indicators)

    def solve(self, algorithm="wpm1", *, conflict_budget=None,
              time_budget_s=None, pb_decompose=False, on_incumbent=None):
        t0 = time.perf_counter()
        budget = _Budget(conflict_budget, time_budget_s)
        eng = self.eng
        if algorithm == "bnb":
            terms = [(w, -lit) for lit, w in self.indicators]
            return _bnb_loop(eng, terms, budget, t0, None, None,
                             pb_decompose, on_incumbent)
        if algorithm == "msu3":
            terms = [(w, -lit) for lit, w in self.indicators]
            temps = [(j, -lit) for j, (lit, _) in enumerate(self.indicators, 1)]
            return _msu3_loop(eng, temps, terms, budget, t0, None, None,
                              pb_decompose, on_incumbent)
        if algorithm == "wpm1":
            records = []
            for j, (lit, w) in enumerate(self.indicators, 1):
                a = eng.new_bool_var()
                rec = WeightedClause((lit,), w, [], a, origin_id=j)
                rec.ref = eng.add_clause((lit, -a), ORIGIN_USER)
                records.append(rec)
            return _wpm1_loop(eng, records, budget, t0, None, None)
        raise ValueError("unknown algorithm %r" % algorithm)
