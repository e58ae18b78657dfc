"""Boolean engine: persistent clause store plus per-solve CDCL search.

Literals are DIMACS-style signed ints; variable ids start at 1.  Each solve()
call rebuilds a search kernel from the current clause list, so clause
retraction is plain list surgery and learnt clauses never outlive the solve
that produced them.
"""

import os
from dataclasses import dataclass, field

from .errors import EngineError, EngineIntegrityError, MidSearchMutationError
from . import _search_py

try:
    from . import _search as _search_c
except ImportError:
    _search_c = None

# conventional origin tags; any non-empty string works as a retract group
ORIGIN_USER = "user"
ORIGIN_EXPLANATION = "explanation"
ORIGIN_RELAXATION = "relaxation-encoding"
ORIGIN_OBJECTIVE = "objective-encoding"


def available_kernels():
    names = ["python"]
    if _search_c is not None:
        names.append("compiled")
    return names


def default_kernel():
    if os.environ.get("MAXCORE_PURE"):
        return "python"
    return "compiled" if _search_c is not None else "python"


def _kernel_module(name):
    if name == "python":
        return _search_py
    if name == "compiled":
        if _search_c is None:
            raise EngineError("compiled kernel is not available")
        return _search_c
    if name == "auto":
        return _kernel_module(default_kernel())
    raise ValueError("unknown kernel %r" % name)


class Propagator:
    """Base class for stateless constraint propagators.

    propagate(view) is called at every Boolean fixpoint.  The view offers
    lit_value(lit) -> -1/0/1, enqueue(lit, reason_true_lits) and
    fail(reason_true_lits); inferences must be explained by true literals.
    """

    def on_attach(self, engine):
        pass

    def propagate(self, view):
        raise NotImplementedError


@dataclass
class ClauseRec:
    ref: int
    lits: tuple
    origin: str


@dataclass
class SolveOutcome:
    status: str                      # 'sat' | 'unsat' | 'unknown'
    model: dict | None = None        # var -> bool, total over current vars
    core: tuple = ()                 # subset of the assumption literals
    conflicts: int = 0
    decisions: int = 0
    propagations: int = 0
    restarts: int = 0
    learnts: list = field(default_factory=list)
    explanations: list = field(default_factory=list)


class Engine:
    def __init__(self, kernel="auto", **config):
        self._kernel_name = kernel
        self._config = config
        self.nvars = 0
        self.clauses = []
        self._next_ref = 0
        self._root = {}              # var -> bool, fixed by unit chains
        self._root_conflict = False
        self.propagators = []
        self._in_search = False
        self.retract_misses = 0
        self.stats = {"solves": 0, "conflicts": 0, "decisions": 0,
                      "propagations": 0, "restarts": 0}

    # ------------------------------------------------------------------

    def kernel_name(self):
        if self._kernel_name == "auto":
            return default_kernel()
        return self._kernel_name

    def new_bool_var(self):
        if self._in_search:
            raise MidSearchMutationError("variable created during search")
        self.nvars += 1
        return self.nvars

    def attach_propagator(self, prop):
        if self._in_search:
            raise MidSearchMutationError("propagator attached during search")
        self.propagators.append(prop)
        prop.on_attach(self)
        return prop

    # ------------------------------------------------------------------
    # clause store

    @property
    def root_conflict(self):
        """True once the clause set is known unsatisfiable at root level."""
        return self._root_conflict

    def add_clause(self, lits, origin=ORIGIN_USER):
        """Store a clause and return its ref; None when nothing was stored
        (tautology, or the empty clause which just flags a root conflict)."""
        if self._in_search:
            raise MidSearchMutationError("clause added during search")
        if not origin or not isinstance(origin, str):
            raise ValueError("clause origin must be a non-empty string")
        seen = set()
        norm = []
        for l in lits:
            if l == 0 or abs(l) > self.nvars:
                raise ValueError("literal %d out of range" % l)
            if -l in seen:
                return None                      # tautology imposes nothing
            if l not in seen:
                seen.add(l)
                norm.append(l)
        if not norm:
            self._root_conflict = True
            return None
        rec = ClauseRec(self._next_ref, tuple(norm), origin)
        self._next_ref += 1
        self.clauses.append(rec)
        self._absorb(rec)
        return rec.ref

    def root_value(self, lit):
        """Root-level value of a literal: True, False, or None if unfixed."""
        return self._root_val(lit)

    def clause_by_ref(self, ref):
        """The stored ClauseRec for ref, or None if it was never stored."""
        for rec in self.clauses:
            if rec.ref == ref:
                return rec
        return None

    def _root_val(self, lit):
        v = self._root.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def _absorb(self, rec):
        unfixed = []
        for l in rec.lits:
            v = self._root_val(l)
            if v is True:
                return
            if v is None:
                unfixed.append(l)
        if not unfixed:
            self._root_conflict = True
        elif len(unfixed) == 1:
            self._root_fix(unfixed[0])

    def _root_fix(self, lit):
        queue = [lit]
        while queue:
            l = queue.pop(0)
            v = self._root_val(l)
            if v is True:
                continue
            if v is False:
                self._root_conflict = True
                return
            self._root[abs(l)] = l > 0
            for rec in self.clauses:
                unfixed = []
                sat = False
                for q in rec.lits:
                    rv = self._root_val(q)
                    if rv is True:
                        sat = True
                        break
                    if rv is None:
                        unfixed.append(q)
                if sat:
                    continue
                if not unfixed:
                    self._root_conflict = True
                    return
                if len(unfixed) == 1 and unfixed[0] not in queue:
                    queue.append(unfixed[0])

    def _recompute_root(self):
        self._root = {}
        self._root_conflict = False
        for rec in self.clauses:
            self._absorb(rec)
            if self._root_conflict:
                return

    def retract(self, refs=None, origins=None):
        """Drop clauses by ref or origin tag; learnt state never survives anyway."""
        if self._in_search:
            raise MidSearchMutationError("clause retracted during search")
        refs = set(refs or ())
        keep = []
        removed = 0
        for rec in self.clauses:
            if rec.ref in refs or (origins and rec.origin in origins):
                removed += 1
                refs.discard(rec.ref)
            else:
                keep.append(rec)
        self.retract_misses += len(refs)
        self.clauses = keep
        self._recompute_root()
        return removed

    # ------------------------------------------------------------------

    def solve(self, assumptions=(), conflict_budget=None, time_budget_s=None):
        self.stats["solves"] += 1
        for a in assumptions:
            if a == 0 or abs(a) > self.nvars:
                raise ValueError("assumption literal %d out of range" % a)
        if self._root_conflict:
            return SolveOutcome(status="unsat", core=())
        mod = _kernel_module(self._kernel_name)
        core = mod.SearchCore(
            self.nvars,
            [rec.lits for rec in self.clauses],
            self.propagators,
            self._config,
        )
        self.last_kernel = core   # kept for inspection (tests, debugging)
        self._in_search = True
        try:
            res = core.solve(list(assumptions), conflict_budget, time_budget_s)
        finally:
            self._in_search = False
        for k in ("conflicts", "decisions", "propagations", "restarts"):
            self.stats[k] += res[k]
        out = SolveOutcome(
            status=res["status"],
            conflicts=res["conflicts"],
            decisions=res["decisions"],
            propagations=res["propagations"],
            restarts=res["restarts"],
            learnts=res["learnts"],
            explanations=res["explanations"],
        )
        if res["status"] == "sat":
            values = res["model"]
            out.model = {v: values[v] > 0 for v in range(1, self.nvars + 1)}
        elif res["status"] == "unsat":
            out.core = tuple(res["core"])
        return out
