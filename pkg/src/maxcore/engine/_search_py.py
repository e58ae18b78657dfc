"""Pure-Python CDCL search kernel.

One SearchCore instance runs one solve() over a fixed clause set.  The engine
wrapper rebuilds a core per call, so the kernel keeps no cross-solve state.
The compiled kernel in _search.pyx is a literal translation of this module;
any behavioural change here must be mirrored there.
"""

import time

from .errors import EngineIntegrityError

KIND_PROBLEM = 0
KIND_LEARNT = 1
KIND_EXPL = 2

DEFAULT_CONFIG = {
    "decay": 0.95,
    "clause_decay": 0.999,
    "restart_base": 100,
    "restart_mult": 1.5,
    "restarts": True,
    "learnt_cap_min": 4000,
    "minimize": False,
    "validate": False,
}


def _windex(lit):
    # watch-list slot of a literal
    return 2 * lit if lit > 0 else -2 * lit + 1


class SearchCore:
    """Single-shot CDCL search over int literals (DIMACS signs)."""

    def __init__(self, nvars, clauses, propagators, config):
        self.nvars = nvars
        self.propagators = list(propagators)
        self.cfg = dict(DEFAULT_CONFIG)
        self.cfg.update(config or {})

        n1 = nvars + 1
        self.values = [0] * n1          # per var: 0 unset, 1 true, -1 false
        self.levels = [0] * n1
        self.reasons = [-1] * n1        # clause index, -1 for decisions/assumptions
        self.phase = [False] * n1
        self.activity = [0.0] * n1
        self.seen = [0] * n1
        self.trail = []
        self.trail_lim = []
        self.qhead = 0

        self.db = []                    # flat literal arena; slots off, off+1 are watched
        self.c_off = []
        self.c_len = []
        self.c_kind = []
        self.c_act = []
        self.c_dead = []
        self.watches = [[] for _ in range(2 * n1)]

        for lits in clauses:
            self._add_clause(lits, KIND_PROBLEM)
        self.n_problem = len(self.c_off)
        self.learnt_cap = max(self.cfg["learnt_cap_min"], 2 * self.n_problem)
        self.n_learnt = 0

        self.var_inc = 1.0
        self.cla_inc = 1.0
        self.heap = []
        self.heap_pos = [-1] * n1
        for v in range(1, n1):
            self._heap_insert(v)

        self.conflicts = 0
        self.decisions = 0
        self.propagations = 0
        self.restarts = 0

        self._prop_enqueued = False
        self._prop_conflict = -1
        self._in_search = False

    # ------------------------------------------------------------------
    # clause arena

    def _add_clause(self, lits, kind):
        ci = len(self.c_off)
        self.c_off.append(len(self.db))
        self.c_len.append(len(lits))
        self.c_kind.append(kind)
        self.c_act.append(0.0)
        self.c_dead.append(False)
        self.db.extend(lits)
        if kind != KIND_EXPL and len(lits) >= 2:
            self.watches[_windex(lits[0])].append(ci)
            self.watches[_windex(lits[1])].append(ci)
        return ci

    def clause_lits(self, ci):
        off = self.c_off[ci]
        return self.db[off:off + self.c_len[ci]]

    # ------------------------------------------------------------------
    # assignment primitives

    def lit_value(self, lit):
        v = self.values[lit] if lit > 0 else -self.values[-lit]
        return v

    def _assign(self, lit, reason):
        var = lit if lit > 0 else -lit
        self.values[var] = 1 if lit > 0 else -1
        self.levels[var] = len(self.trail_lim)
        self.reasons[var] = reason
        self.trail.append(lit)
        if reason >= 0:
            self.propagations += 1

    def _new_level(self):
        self.trail_lim.append(len(self.trail))

    def _backjump(self, level):
        if len(self.trail_lim) <= level:
            return
        bound = self.trail_lim[level]
        for k in range(len(self.trail) - 1, bound - 1, -1):
            lit = self.trail[k]
            var = lit if lit > 0 else -lit
            self.phase[var] = lit > 0
            self.values[var] = 0
            self.reasons[var] = -1
            if self.heap_pos[var] < 0:
                self._heap_insert(var)
        del self.trail[bound:]
        del self.trail_lim[level:]
        self.qhead = len(self.trail)

    # ------------------------------------------------------------------
    # activity heap (max activity first, lowest var id on ties)

    def _heap_before(self, u, v):
        au = self.activity[u]
        av = self.activity[v]
        if au != av:
            return au > av
        return u < v

    def _heap_insert(self, v):
        self.heap.append(v)
        self._heap_up(len(self.heap) - 1)

    def _heap_up(self, i):
        h = self.heap
        pos = self.heap_pos
        v = h[i]
        while i > 0:
            p = (i - 1) >> 1
            if self._heap_before(v, h[p]):
                h[i] = h[p]
                pos[h[p]] = i
                i = p
            else:
                break
        h[i] = v
        pos[v] = i

    def _heap_down(self, i):
        h = self.heap
        pos = self.heap_pos
        v = h[i]
        n = len(h)
        while True:
            left = 2 * i + 1
            if left >= n:
                break
            right = left + 1
            c = right if right < n and self._heap_before(h[right], h[left]) else left
            if self._heap_before(h[c], v):
                h[i] = h[c]
                pos[h[c]] = i
                i = c
            else:
                break
        h[i] = v
        pos[v] = i

    def _heap_pop(self):
        h = self.heap
        top = h[0]
        self.heap_pos[top] = -1
        last = h.pop()
        if h:
            h[0] = last
            self.heap_pos[last] = 0
            self._heap_down(0)
        return top

    def _bump_var(self, v):
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(1, self.nvars + 1):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100
        if self.heap_pos[v] >= 0:
            self._heap_up(self.heap_pos[v])

    def _bump_clause(self, ci):
        self.c_act[ci] += self.cla_inc
        if self.c_act[ci] > 1e20:
            for k in range(len(self.c_act)):
                self.c_act[k] *= 1e-20
            self.cla_inc *= 1e-20

    # ------------------------------------------------------------------
    # propagation

    def _bcp(self):
        db = self.db
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            false_lit = -lit
            wl = self.watches[_windex(false_lit)]
            i = len(wl) - 1
            while i >= 0:
                ci = wl[i]
                off = self.c_off[ci]
                if db[off] == false_lit:
                    db[off] = db[off + 1]
                    db[off + 1] = false_lit
                first = db[off]
                fv = self.lit_value(first)
                if fv == 1:
                    i -= 1
                    continue
                found = False
                end = off + self.c_len[ci]
                for k in range(off + 2, end):
                    if self.lit_value(db[k]) != -1:
                        db[off + 1] = db[k]
                        db[k] = false_lit
                        self.watches[_windex(db[off + 1])].append(ci)
                        wl[i] = wl[-1]
                        wl.pop()
                        found = True
                        break
                if found:
                    i -= 1
                    continue
                if fv == -1:
                    return ci
                self._assign(first, ci)
                i -= 1
        return -1

    def _propagate_all(self):
        while True:
            confl = self._bcp()
            if confl >= 0:
                return confl
            progress = False
            for p in self.propagators:
                self._prop_enqueued = False
                self._prop_conflict = -1
                p.propagate(self)
                if self._prop_conflict >= 0:
                    return self._prop_conflict
                if self._prop_enqueued:
                    progress = True
                    break
            if not progress:
                return -1

    # propagator-facing interface -------------------------------------

    def enqueue(self, lit, reason_lits):
        for r in reason_lits:
            if self.lit_value(r) != 1:
                raise EngineIntegrityError(
                    "explanation antecedent %d is not true" % r)
        v = self.lit_value(lit)
        if v == 1:
            return True
        expl = [lit]
        for r in reason_lits:
            expl.append(-r)
        ci = self._add_clause(expl, KIND_EXPL)
        if v == -1:
            self._prop_conflict = ci
            return False
        self._assign(lit, ci)
        self._prop_enqueued = True
        return True

    def fail(self, reason_lits):
        expl = []
        for r in reason_lits:
            if self.lit_value(r) != 1:
                raise EngineIntegrityError(
                    "nogood antecedent %d is not true" % r)
            expl.append(-r)
        self._prop_conflict = self._add_clause(expl, KIND_EXPL)
        return False

    # ------------------------------------------------------------------
    # conflict analysis

    def _analyze(self, confl):
        learnt = [0]
        clevel = len(self.trail_lim)
        counter = 0
        p = 0
        idx = len(self.trail) - 1
        to_clear = []
        while True:
            if self.c_kind[confl] == KIND_LEARNT:
                self._bump_clause(confl)
            off = self.c_off[confl]
            start = off + 1 if p != 0 else off
            for k in range(start, off + self.c_len[confl]):
                q = self.db[k]
                v = q if q > 0 else -q
                if not self.seen[v] and self.levels[v] > 0:
                    self.seen[v] = 1
                    to_clear.append(v)
                    self._bump_var(v)
                    if self.levels[v] >= clevel:
                        counter += 1
                    else:
                        learnt.append(q)
            while True:
                lit = self.trail[idx]
                var = lit if lit > 0 else -lit
                if self.seen[var]:
                    break
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            pv = p if p > 0 else -p
            confl = self.reasons[pv]
            self.seen[pv] = 0
            counter -= 1
            if counter == 0:
                break
        learnt[0] = -p
        if self.cfg["minimize"] and len(learnt) > 1:
            learnt = self._minimize(learnt)
        for v in to_clear:
            self.seen[v] = 0
        bj = 0
        if len(learnt) > 1:
            best = 1
            for k in range(2, len(learnt)):
                lv = learnt[k] if learnt[k] > 0 else -learnt[k]
                bv = learnt[best] if learnt[best] > 0 else -learnt[best]
                if self.levels[lv] > self.levels[bv]:
                    best = k
            learnt[1], learnt[best] = learnt[best], learnt[1]
            b = learnt[1] if learnt[1] > 0 else -learnt[1]
            bj = self.levels[b]
        return learnt, bj

    def _minimize(self, learnt):
        # self-subsumption: drop tail literals whose reasons are covered
        marked = set()
        for q in learnt[1:]:
            marked.add(q if q > 0 else -q)
        kept = [learnt[0]]
        for q in learnt[1:]:
            v = q if q > 0 else -q
            r = self.reasons[v]
            if r < 0:
                kept.append(q)
                continue
            off = self.c_off[r]
            redundant = True
            for k in range(off, off + self.c_len[r]):
                w = self.db[k]
                wv = w if w > 0 else -w
                if wv == v:
                    continue
                if self.levels[wv] > 0 and wv not in marked:
                    redundant = False
                    break
            if not redundant:
                kept.append(q)
        return kept

    def _analyze_final_clause(self, confl):
        # conflict whose literals all sit at the assumption level or below
        core = []
        seen = self.seen
        stack = []
        off = self.c_off[confl]
        for k in range(off, off + self.c_len[confl]):
            q = self.db[k]
            v = q if q > 0 else -q
            if self.levels[v] > 0 and not seen[v]:
                seen[v] = 1
                stack.append(v)
        touched = list(stack)
        while stack:
            v = stack.pop()
            r = self.reasons[v]
            if r < 0:
                core.append(self.values[v] * v)
                continue
            off = self.c_off[r]
            for k in range(off, off + self.c_len[r]):
                q = self.db[k]
                u = q if q > 0 else -q
                if u != v and self.levels[u] > 0 and not seen[u]:
                    seen[u] = 1
                    stack.append(u)
                    touched.append(u)
        for v in touched:
            seen[v] = 0
        core.sort(key=lambda l: (l if l > 0 else -l, l))
        return core

    def _analyze_final_lit(self, failed):
        # `failed` is an assumption found false at enqueue time
        core = [failed]
        v = -failed if failed < 0 else failed
        if self.levels[v] == 0:
            core.sort(key=lambda l: (l if l > 0 else -l, l))
            return core
        if self.reasons[v] < 0:
            core.append(self.values[v] * v)
            core.sort(key=lambda l: (l if l > 0 else -l, l))
            return core
        seen = self.seen
        stack = [v]
        seen[v] = 1
        touched = [v]
        first = True
        while stack:
            u = stack.pop()
            r = self.reasons[u]
            if r < 0 and not first:
                core.append(self.values[u] * u)
            elif r >= 0:
                off = self.c_off[r]
                for k in range(off, off + self.c_len[r]):
                    q = self.db[k]
                    w = q if q > 0 else -q
                    if w != u and self.levels[w] > 0 and not seen[w]:
                        seen[w] = 1
                        stack.append(w)
                        touched.append(w)
            first = False
        for u in touched:
            seen[u] = 0
        core.sort(key=lambda l: (l if l > 0 else -l, l))
        return core

    # ------------------------------------------------------------------
    # learnt database reduction

    def _reduce_learnts(self):
        locked = [False] * len(self.c_off)
        for lit in self.trail:
            v = lit if lit > 0 else -lit
            r = self.reasons[v]
            if r >= 0:
                locked[r] = True
        cands = []
        for ci in range(self.n_problem, len(self.c_off)):
            if self.c_kind[ci] == KIND_LEARNT and not self.c_dead[ci] and not locked[ci]:
                cands.append(ci)
        cands.sort(key=lambda ci: (self.c_act[ci], ci))
        for ci in cands[:len(cands) // 2]:
            self.c_dead[ci] = True
            self.n_learnt -= 1
        self._rebuild_watches()

    def _rebuild_watches(self):
        for wl in self.watches:
            del wl[:]
        for ci in range(len(self.c_off)):
            if self.c_dead[ci] or self.c_kind[ci] == KIND_EXPL:
                continue
            if self.c_len[ci] >= 2:
                off = self.c_off[ci]
                self.watches[_windex(self.db[off])].append(ci)
                self.watches[_windex(self.db[off + 1])].append(ci)

    # ------------------------------------------------------------------
    # top level

    def _establish_assumptions(self, assumptions):
        # all assumption literals enter one decision level before propagation
        self._new_level()
        for a in assumptions:
            v = self.lit_value(a)
            if v == 1:
                continue
            if v == -1:
                return self._analyze_final_lit(a)
            self._assign(a, -1)
        return None

    def solve(self, assumptions, conflict_budget=None, time_budget_s=None):
        result = {
            "status": "unknown", "model": None, "core": None,
            "conflicts": 0, "decisions": 0, "propagations": 0, "restarts": 0,
        }
        deadline = None
        if time_budget_s is not None:
            deadline = time.monotonic() + time_budget_s
        restart_limit = float(self.cfg["restart_base"])
        conflicts_since_restart = 0
        self._in_search = True

        for ci in range(self.n_problem):
            if self.c_len[ci] == 1:
                lit = self.db[self.c_off[ci]]
                v = self.lit_value(lit)
                if v == -1:
                    result["status"] = "unsat"
                    result["core"] = []
                    return self._finish(result)
                if v == 0:
                    self._assign(lit, ci)

        while True:
            if len(self.trail_lim) == 0:
                core = self._establish_assumptions(assumptions)
                if core is not None:
                    result["status"] = "unsat"
                    result["core"] = core
                    return self._finish(result)
            confl = self._propagate_all()
            if confl >= 0:
                self.conflicts += 1
                conflicts_since_restart += 1
                if len(self.trail_lim) == 0:
                    result["status"] = "unsat"
                    result["core"] = []
                    return self._finish(result)
                if len(self.trail_lim) == 1:
                    result["status"] = "unsat"
                    result["core"] = self._analyze_final_clause(confl)
                    return self._finish(result)
                learnt, bj = self._analyze(confl)
                self._backjump(bj)
                if len(learnt) == 1:
                    ci = self._add_clause(learnt, KIND_LEARNT)
                    self.n_learnt += 1
                    self._assign(learnt[0], ci)
                else:
                    ci = self._add_clause(learnt, KIND_LEARNT)
                    self.n_learnt += 1
                    self.c_act[ci] = self.cla_inc
                    self._assign(learnt[0], ci)
                if self.cfg["validate"]:
                    self._check_learnt(ci)
                self.var_inc /= self.cfg["decay"]
                self.cla_inc /= self.cfg["clause_decay"]
                if self.n_learnt >= self.learnt_cap:
                    self._reduce_learnts()
                if conflict_budget is not None and self.conflicts >= conflict_budget:
                    return self._finish(result)
                if deadline is not None and self.conflicts % 128 == 0:
                    if time.monotonic() > deadline:
                        return self._finish(result)
            else:
                if (self.cfg["restarts"]
                        and conflicts_since_restart >= restart_limit
                        and len(self.trail_lim) > 1):
                    conflicts_since_restart = 0
                    restart_limit *= self.cfg["restart_mult"]
                    self.restarts += 1
                    self._backjump(0)
                    continue
                if len(self.trail) == self.nvars:
                    result["status"] = "sat"
                    result["model"] = list(self.values)
                    return self._finish(result)
                var = 0
                while self.heap:
                    var = self._heap_pop()
                    if self.values[var] == 0:
                        break
                    var = 0
                self.decisions += 1
                self._new_level()
                self._assign(var if self.phase[var] else -var, -1)

    def _check_learnt(self, ci):
        off = self.c_off[ci]
        head = self.db[off]
        if self.lit_value(head) != 1:
            raise AssertionError("learnt clause head not asserted after backjump")
        for k in range(off + 1, off + self.c_len[ci]):
            if self.lit_value(self.db[k]) != -1:
                raise AssertionError("learnt clause tail not false after backjump")

    def _finish(self, result):
        result["conflicts"] = self.conflicts
        result["decisions"] = self.decisions
        result["propagations"] = self.propagations
        result["restarts"] = self.restarts
        result["learnts"] = [
            tuple(self.clause_lits(ci))
            for ci in range(self.n_problem, len(self.c_off))
            if self.c_kind[ci] == KIND_LEARNT and not self.c_dead[ci]
        ]
        result["explanations"] = [
            tuple(self.clause_lits(ci))
            for ci in range(self.n_problem, len(self.c_off))
            if self.c_kind[ci] == KIND_EXPL
        ]
        self._in_search = False
        return result
