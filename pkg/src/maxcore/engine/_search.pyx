# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled CDCL search kernel.

Literal translation of _search_py.py onto C++ vectors; any behavioural
change there must be mirrored here.  Both kernels must produce identical
models, cores, learnt clauses, and counter values on identical input.
"""

import time

from libcpp.vector cimport vector

from .errors import EngineIntegrityError

KIND_PROBLEM = 0
KIND_LEARNT = 1
KIND_EXPL = 2

cdef int C_KIND_PROBLEM = 0
cdef int C_KIND_LEARNT = 1
cdef int C_KIND_EXPL = 2

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


cdef inline int _windex(int lit) nogil:
    # watch-list slot of a literal
    return 2 * lit if lit > 0 else -2 * lit + 1


cdef class SearchCore:
    """Single-shot CDCL search over int literals (DIMACS signs)."""

    cdef int nvars
    cdef list propagators
    cdef public dict cfg

    cdef vector[int] values          # per var: 0 unset, 1 true, -1 false
    cdef vector[int] levels
    cdef vector[int] reasons         # clause index, -1 for decisions/assumptions
    cdef vector[char] phase
    cdef vector[double] activity
    cdef vector[char] seen
    cdef vector[int] trail
    cdef vector[int] trail_lim
    cdef int qhead

    cdef vector[int] db              # flat literal arena; slots off, off+1 are watched
    cdef vector[int] c_off
    cdef vector[int] c_len
    cdef vector[char] c_kind
    cdef vector[double] c_act
    cdef vector[char] c_dead
    cdef vector[vector[int]] watches

    cdef int n_problem
    cdef int learnt_cap
    cdef int n_learnt

    cdef double var_inc
    cdef double cla_inc
    cdef vector[int] heap
    cdef vector[int] heap_pos

    cdef public long conflicts
    cdef public long decisions
    cdef public long propagations
    cdef public long restarts

    cdef bint _prop_enqueued
    cdef int _prop_conflict
    cdef bint _in_search

    cdef double _decay
    cdef double _clause_decay
    cdef double _restart_base
    cdef double _restart_mult
    cdef bint _restarts_on
    cdef bint _minimize_on
    cdef bint _validate_on

    cdef vector[int] _learnt_buf     # scratch for _analyze
    cdef vector[int] _clear_buf
    cdef vector[char] _marked        # scratch for _minimize

    def __init__(self, nvars, clauses, propagators, config):
        cdef int n1 = nvars + 1
        cdef int v
        self.nvars = nvars
        self.propagators = list(propagators)
        self.cfg = dict(DEFAULT_CONFIG)
        self.cfg.update(config or {})
        self._decay = self.cfg["decay"]
        self._clause_decay = self.cfg["clause_decay"]
        self._restart_base = self.cfg["restart_base"]
        self._restart_mult = self.cfg["restart_mult"]
        self._restarts_on = self.cfg["restarts"]
        self._minimize_on = self.cfg["minimize"]
        self._validate_on = self.cfg["validate"]

        self.values.assign(n1, 0)
        self.levels.assign(n1, 0)
        self.reasons.assign(n1, -1)
        self.phase.assign(n1, 0)
        self.activity.assign(n1, 0.0)
        self.seen.assign(n1, 0)
        self.qhead = 0
        self.watches.resize(2 * n1)
        self._marked.assign(n1, 0)

        for lits in clauses:
            self._add_clause_py(lits, C_KIND_PROBLEM)
        self.n_problem = <int>self.c_off.size()
        self.learnt_cap = max(<int>self.cfg["learnt_cap_min"], 2 * self.n_problem)
        self.n_learnt = 0

        self.var_inc = 1.0
        self.cla_inc = 1.0
        self.heap_pos.assign(n1, -1)
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

    cdef int _add_clause_py(self, object lits, int kind) except -1:
        cdef int ci = <int>self.c_off.size()
        cdef int l
        self.c_off.push_back(<int>self.db.size())
        self.c_len.push_back(<int>len(lits))
        self.c_kind.push_back(<char>kind)
        self.c_act.push_back(0.0)
        self.c_dead.push_back(0)
        for l in lits:
            self.db.push_back(l)
        if kind != C_KIND_EXPL and len(lits) >= 2:
            self.watches[_windex(lits[0])].push_back(ci)
            self.watches[_windex(lits[1])].push_back(ci)
        return ci

    cdef int _add_clause_vec(self, vector[int]& lits, int kind) except -1:
        cdef int ci = <int>self.c_off.size()
        cdef size_t k
        self.c_off.push_back(<int>self.db.size())
        self.c_len.push_back(<int>lits.size())
        self.c_kind.push_back(<char>kind)
        self.c_act.push_back(0.0)
        self.c_dead.push_back(0)
        for k in range(lits.size()):
            self.db.push_back(lits[k])
        if kind != C_KIND_EXPL and lits.size() >= 2:
            self.watches[_windex(lits[0])].push_back(ci)
            self.watches[_windex(lits[1])].push_back(ci)
        return ci

    def clause_lits(self, ci):
        cdef int off = self.c_off[ci]
        cdef int k
        return [self.db[k] for k in range(off, off + self.c_len[ci])]

    # ------------------------------------------------------------------
    # assignment primitives

    cdef inline int _lit_value_c(self, int lit) nogil:
        return self.values[lit] if lit > 0 else -self.values[-lit]

    def lit_value(self, lit):
        return self._lit_value_c(lit)

    cdef void _assign(self, int lit, int reason):
        cdef int var = lit if lit > 0 else -lit
        # hoisted into a typed local: a conditional assigned straight into a
        # vector element binds a dangling reference in the generated C++
        cdef int val = 1 if lit > 0 else -1
        self.values[var] = val
        self.levels[var] = <int>self.trail_lim.size()
        self.reasons[var] = reason
        self.trail.push_back(lit)
        if reason >= 0:
            self.propagations += 1

    cdef inline void _new_level(self):
        self.trail_lim.push_back(<int>self.trail.size())

    cdef void _backjump(self, int level):
        cdef int bound, k, lit, var
        cdef char ph
        if <int>self.trail_lim.size() <= level:
            return
        bound = self.trail_lim[level]
        for k in range(<int>self.trail.size() - 1, bound - 1, -1):
            lit = self.trail[k]
            var = lit if lit > 0 else -lit
            ph = 1 if lit > 0 else 0
            self.phase[var] = ph
            self.values[var] = 0
            self.reasons[var] = -1
            if self.heap_pos[var] < 0:
                self._heap_insert(var)
        self.trail.resize(bound)
        self.trail_lim.resize(level)
        self.qhead = <int>self.trail.size()

    # ------------------------------------------------------------------
    # activity heap (max activity first, lowest var id on ties)

    cdef inline bint _heap_before(self, int u, int v) nogil:
        cdef double au = self.activity[u]
        cdef double av = self.activity[v]
        if au != av:
            return au > av
        return u < v

    cdef void _heap_insert(self, int v):
        self.heap.push_back(v)
        self._heap_up(<int>self.heap.size() - 1)

    cdef void _heap_up(self, int i):
        cdef int v = self.heap[i]
        cdef int p
        while i > 0:
            p = (i - 1) >> 1
            if self._heap_before(v, self.heap[p]):
                self.heap[i] = self.heap[p]
                self.heap_pos[self.heap[p]] = i
                i = p
            else:
                break
        self.heap[i] = v
        self.heap_pos[v] = i

    cdef void _heap_down(self, int i):
        cdef int v = self.heap[i]
        cdef int n = <int>self.heap.size()
        cdef int left, right, c
        while True:
            left = 2 * i + 1
            if left >= n:
                break
            right = left + 1
            c = right if right < n and self._heap_before(self.heap[right], self.heap[left]) else left
            if self._heap_before(self.heap[c], v):
                self.heap[i] = self.heap[c]
                self.heap_pos[self.heap[c]] = i
                i = c
            else:
                break
        self.heap[i] = v
        self.heap_pos[v] = i

    cdef int _heap_pop(self):
        cdef int top = self.heap[0]
        cdef int last
        self.heap_pos[top] = -1
        last = self.heap.back()
        self.heap.pop_back()
        if self.heap.size() > 0:
            self.heap[0] = last
            self.heap_pos[last] = 0
            self._heap_down(0)
        return top

    cdef void _bump_var(self, int v):
        cdef int u
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(1, self.nvars + 1):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100
        if self.heap_pos[v] >= 0:
            self._heap_up(self.heap_pos[v])

    cdef void _bump_clause(self, int ci):
        cdef size_t k
        self.c_act[ci] += self.cla_inc
        if self.c_act[ci] > 1e20:
            for k in range(self.c_act.size()):
                self.c_act[k] *= 1e-20
            self.cla_inc *= 1e-20

    # ------------------------------------------------------------------
    # propagation

    cdef int _bcp(self) except -2:
        cdef int lit, false_lit, ci, off, first, fv, k, end, widx
        cdef bint found
        cdef int i
        cdef vector[int]* wl
        while self.qhead < <int>self.trail.size():
            lit = self.trail[self.qhead]
            self.qhead += 1
            false_lit = -lit
            wl = &self.watches[_windex(false_lit)]
            i = <int>wl[0].size() - 1
            while i >= 0:
                ci = wl[0][i]
                off = self.c_off[ci]
                if self.db[off] == false_lit:
                    self.db[off] = self.db[off + 1]
                    self.db[off + 1] = false_lit
                first = self.db[off]
                fv = self._lit_value_c(first)
                if fv == 1:
                    i -= 1
                    continue
                found = False
                end = off + self.c_len[ci]
                for k in range(off + 2, end):
                    if self._lit_value_c(self.db[k]) != -1:
                        self.db[off + 1] = self.db[k]
                        self.db[k] = false_lit
                        self.watches[_windex(self.db[off + 1])].push_back(ci)
                        wl[0][i] = wl[0].back()
                        wl[0].pop_back()
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

    cdef int _propagate_all(self) except -2:
        cdef int confl
        cdef bint progress
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
        cdef int v, ci
        for r in reason_lits:
            if self._lit_value_c(r) != 1:
                raise EngineIntegrityError(
                    "explanation antecedent %d is not true" % r)
        v = self._lit_value_c(lit)
        if v == 1:
            return True
        expl = [lit]
        for r in reason_lits:
            expl.append(-r)
        ci = self._add_clause_py(expl, C_KIND_EXPL)
        if v == -1:
            self._prop_conflict = ci
            return False
        self._assign(lit, ci)
        self._prop_enqueued = True
        return True

    def fail(self, reason_lits):
        expl = []
        for r in reason_lits:
            if self._lit_value_c(r) != 1:
                raise EngineIntegrityError(
                    "nogood antecedent %d is not true" % r)
            expl.append(-r)
        self._prop_conflict = self._add_clause_py(expl, C_KIND_EXPL)
        return False

    # ------------------------------------------------------------------
    # conflict analysis

    cdef int _analyze(self, int confl) except -1:
        # fills _learnt_buf, returns the backjump level
        cdef int clevel = <int>self.trail_lim.size()
        cdef int counter = 0
        cdef int p = 0
        cdef int idx = <int>self.trail.size() - 1
        cdef int off, start, k, q, v, lit, var, pv
        cdef int best, lv, bv, b, tmp
        cdef size_t j
        self._learnt_buf.clear()
        self._learnt_buf.push_back(0)
        self._clear_buf.clear()
        while True:
            if self.c_kind[confl] == C_KIND_LEARNT:
                self._bump_clause(confl)
            off = self.c_off[confl]
            start = off + 1 if p != 0 else off
            for k in range(start, off + self.c_len[confl]):
                q = self.db[k]
                v = q if q > 0 else -q
                if not self.seen[v] and self.levels[v] > 0:
                    self.seen[v] = 1
                    self._clear_buf.push_back(v)
                    self._bump_var(v)
                    if self.levels[v] >= clevel:
                        counter += 1
                    else:
                        self._learnt_buf.push_back(q)
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
        self._learnt_buf[0] = -p
        if self._minimize_on and self._learnt_buf.size() > 1:
            self._minimize()
        for j in range(self._clear_buf.size()):
            self.seen[self._clear_buf[j]] = 0
        cdef int bj = 0
        if self._learnt_buf.size() > 1:
            best = 1
            for k in range(2, <int>self._learnt_buf.size()):
                lv = self._learnt_buf[k] if self._learnt_buf[k] > 0 else -self._learnt_buf[k]
                bv = self._learnt_buf[best] if self._learnt_buf[best] > 0 else -self._learnt_buf[best]
                if self.levels[lv] > self.levels[bv]:
                    best = k
            tmp = self._learnt_buf[1]
            self._learnt_buf[1] = self._learnt_buf[best]
            self._learnt_buf[best] = tmp
            b = self._learnt_buf[1] if self._learnt_buf[1] > 0 else -self._learnt_buf[1]
            bj = self.levels[b]
        return bj

    cdef void _minimize(self):
        # self-subsumption: drop tail literals whose reasons are covered
        cdef vector[int] kept
        cdef size_t j
        cdef int q, v, r, off, k, w, wv
        cdef bint redundant
        for j in range(1, self._learnt_buf.size()):
            q = self._learnt_buf[j]
            self._marked[q if q > 0 else -q] = 1
        kept.push_back(self._learnt_buf[0])
        for j in range(1, self._learnt_buf.size()):
            q = self._learnt_buf[j]
            v = q if q > 0 else -q
            r = self.reasons[v]
            if r < 0:
                kept.push_back(q)
                continue
            off = self.c_off[r]
            redundant = True
            for k in range(off, off + self.c_len[r]):
                w = self.db[k]
                wv = w if w > 0 else -w
                if wv == v:
                    continue
                if self.levels[wv] > 0 and not self._marked[wv]:
                    redundant = False
                    break
            if not redundant:
                kept.push_back(q)
        for j in range(1, self._learnt_buf.size()):
            q = self._learnt_buf[j]
            self._marked[q if q > 0 else -q] = 0
        self._learnt_buf.swap(kept)

    cdef list _analyze_final_clause(self, int confl):
        # conflict whose literals all sit at the assumption level or below
        cdef list core = []
        cdef vector[int] stack
        cdef vector[int] touched
        cdef int off, k, q, v, r, u
        cdef size_t j
        off = self.c_off[confl]
        for k in range(off, off + self.c_len[confl]):
            q = self.db[k]
            v = q if q > 0 else -q
            if self.levels[v] > 0 and not self.seen[v]:
                self.seen[v] = 1
                stack.push_back(v)
                touched.push_back(v)
        while stack.size() > 0:
            v = stack.back()
            stack.pop_back()
            r = self.reasons[v]
            if r < 0:
                core.append(self.values[v] * v)
                continue
            off = self.c_off[r]
            for k in range(off, off + self.c_len[r]):
                q = self.db[k]
                u = q if q > 0 else -q
                if u != v and self.levels[u] > 0 and not self.seen[u]:
                    self.seen[u] = 1
                    stack.push_back(u)
                    touched.push_back(u)
        for j in range(touched.size()):
            self.seen[touched[j]] = 0
        core.sort(key=lambda l: (l if l > 0 else -l, l))
        return core

    cdef list _analyze_final_lit(self, int failed):
        # `failed` is an assumption found false at enqueue time
        cdef list core = [failed]
        cdef vector[int] stack
        cdef vector[int] touched
        cdef int v, u, r, off, k, q, w
        cdef size_t j
        cdef bint first
        v = -failed if failed < 0 else failed
        if self.levels[v] == 0:
            core.sort(key=lambda l: (l if l > 0 else -l, l))
            return core
        if self.reasons[v] < 0:
            core.append(self.values[v] * v)
            core.sort(key=lambda l: (l if l > 0 else -l, l))
            return core
        stack.push_back(v)
        self.seen[v] = 1
        touched.push_back(v)
        first = True
        while stack.size() > 0:
            u = stack.back()
            stack.pop_back()
            r = self.reasons[u]
            if r < 0 and not first:
                core.append(self.values[u] * u)
            elif r >= 0:
                off = self.c_off[r]
                for k in range(off, off + self.c_len[r]):
                    q = self.db[k]
                    w = q if q > 0 else -q
                    if w != u and self.levels[w] > 0 and not self.seen[w]:
                        self.seen[w] = 1
                        stack.push_back(w)
                        touched.push_back(w)
            first = False
        for j in range(touched.size()):
            self.seen[touched[j]] = 0
        core.sort(key=lambda l: (l if l > 0 else -l, l))
        return core

    # ------------------------------------------------------------------
    # learnt database reduction

    cdef void _reduce_learnts(self) except *:
        cdef vector[char] locked
        cdef size_t j
        cdef int lit, v, r, ci, half, k
        locked.assign(self.c_off.size(), 0)
        for j in range(self.trail.size()):
            lit = self.trail[j]
            v = lit if lit > 0 else -lit
            r = self.reasons[v]
            if r >= 0:
                locked[r] = 1
        cands = []
        for ci in range(self.n_problem, <int>self.c_off.size()):
            if self.c_kind[ci] == C_KIND_LEARNT and not self.c_dead[ci] and not locked[ci]:
                cands.append(ci)
        cands.sort(key=lambda ix: (self.c_act[ix], ix))
        half = <int>len(cands) // 2
        for k in range(half):
            ci = cands[k]
            self.c_dead[ci] = 1
            self.n_learnt -= 1
        self._rebuild_watches()

    cdef void _rebuild_watches(self):
        cdef size_t j
        cdef int ci, off
        for j in range(self.watches.size()):
            self.watches[j].clear()
        for ci in range(<int>self.c_off.size()):
            if self.c_dead[ci] or self.c_kind[ci] == C_KIND_EXPL:
                continue
            if self.c_len[ci] >= 2:
                off = self.c_off[ci]
                self.watches[_windex(self.db[off])].push_back(ci)
                self.watches[_windex(self.db[off + 1])].push_back(ci)

    # ------------------------------------------------------------------
    # top level

    cdef object _establish_assumptions(self, list assumptions):
        # all assumption literals enter one decision level before propagation
        cdef int a, v
        self._new_level()
        for a in assumptions:
            v = self._lit_value_c(a)
            if v == 1:
                continue
            if v == -1:
                return self._analyze_final_lit(a)
            self._assign(a, -1)
        return None

    def solve(self, assumptions, conflict_budget=None, time_budget_s=None):
        cdef dict result = {
            "status": "unknown", "model": None, "core": None,
            "conflicts": 0, "decisions": 0, "propagations": 0, "restarts": 0,
        }
        cdef bint has_deadline = time_budget_s is not None
        cdef double deadline = 0.0
        cdef bint has_cb = conflict_budget is not None
        cdef long cb = 0
        cdef double restart_limit = self._restart_base
        cdef long conflicts_since_restart = 0
        cdef int ci, lit, v, confl, bj, var
        cdef list asms = list(assumptions)
        if has_deadline:
            deadline = time.monotonic() + time_budget_s
        if has_cb:
            cb = conflict_budget
        self._in_search = True

        for ci in range(self.n_problem):
            if self.c_len[ci] == 1:
                lit = self.db[self.c_off[ci]]
                v = self._lit_value_c(lit)
                if v == -1:
                    result["status"] = "unsat"
                    result["core"] = []
                    return self._finish(result)
                if v == 0:
                    self._assign(lit, ci)

        while True:
            if self.trail_lim.size() == 0:
                core = self._establish_assumptions(asms)
                if core is not None:
                    result["status"] = "unsat"
                    result["core"] = core
                    return self._finish(result)
            confl = self._propagate_all()
            if confl >= 0:
                self.conflicts += 1
                conflicts_since_restart += 1
                if self.trail_lim.size() == 0:
                    result["status"] = "unsat"
                    result["core"] = []
                    return self._finish(result)
                if self.trail_lim.size() == 1:
                    result["status"] = "unsat"
                    result["core"] = self._analyze_final_clause(confl)
                    return self._finish(result)
                bj = self._analyze(confl)
                self._backjump(bj)
                ci = self._add_clause_vec(self._learnt_buf, C_KIND_LEARNT)
                self.n_learnt += 1
                if self._learnt_buf.size() > 1:
                    self.c_act[ci] = self.cla_inc
                self._assign(self._learnt_buf[0], ci)
                if self._validate_on:
                    self._check_learnt(ci)
                self.var_inc /= self._decay
                self.cla_inc /= self._clause_decay
                if self.n_learnt >= self.learnt_cap:
                    self._reduce_learnts()
                if has_cb and self.conflicts >= cb:
                    return self._finish(result)
                if has_deadline and self.conflicts % 128 == 0:
                    if time.monotonic() > deadline:
                        return self._finish(result)
            else:
                if (self._restarts_on
                        and conflicts_since_restart >= restart_limit
                        and self.trail_lim.size() > 1):
                    conflicts_since_restart = 0
                    restart_limit *= self._restart_mult
                    self.restarts += 1
                    self._backjump(0)
                    continue
                if <int>self.trail.size() == self.nvars:
                    result["status"] = "sat"
                    result["model"] = [self.values[v] for v in range(self.nvars + 1)]
                    return self._finish(result)
                var = 0
                while self.heap.size() > 0:
                    var = self._heap_pop()
                    if self.values[var] == 0:
                        break
                    var = 0
                self.decisions += 1
                self._new_level()
                self._assign(var if self.phase[var] else -var, -1)

    cdef void _check_learnt(self, int ci) except *:
        cdef int off = self.c_off[ci]
        cdef int head = self.db[off]
        cdef int k
        if self._lit_value_c(head) != 1:
            raise AssertionError("learnt clause head not asserted after backjump")
        for k in range(off + 1, off + self.c_len[ci]):
            if self._lit_value_c(self.db[k]) != -1:
                raise AssertionError("learnt clause tail not false after backjump")

    cdef dict _finish(self, dict result):
        cdef int ci
        result["conflicts"] = self.conflicts
        result["decisions"] = self.decisions
        result["propagations"] = self.propagations
        result["restarts"] = self.restarts
        result["learnts"] = [
            tuple(self.clause_lits(ci))
            for ci in range(self.n_problem, <int>self.c_off.size())
            if self.c_kind[ci] == C_KIND_LEARNT and not self.c_dead[ci]
        ]
        result["explanations"] = [
            tuple(self.clause_lits(ci))
            for ci in range(self.n_problem, <int>self.c_off.size())
            if self.c_kind[ci] == C_KIND_EXPL
        ]
        self._in_search = False
        return result
