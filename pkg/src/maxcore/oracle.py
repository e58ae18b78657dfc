"""Brute-force reference implementations used to validate solvers at desk scale.

Deliberately independent of the engine: plain enumeration with hard guards.
Guard violations raise OracleGuardError instead of silently truncating.
"""

from dataclasses import dataclass

MAXSAT_VAR_GUARD = 22
SCHEDULE_GRID_GUARD = 10_000_000


class OracleGuardError(Exception):
    """Instance exceeds the enumeration guard; refusing to brute-force."""


@dataclass
class OracleResult:
    optimum: int | None       # None means hard-infeasible
    witness: object | None    # var->bool dict (maxsat) or start-time tuple (schedule)


def _clause_masks(lits):
    pos = neg = 0
    for l in lits:
        if l > 0:
            pos |= 1 << (l - 1)
        else:
            neg |= 1 << (-l - 1)
    return pos, neg


def _mask_model(mask, nvars):
    return {v: bool(mask >> (v - 1) & 1) for v in range(1, nvars + 1)}


def brute_force_maxsat(inst):
    """Exact weighted-partial-MaxSAT optimum by enumerating all valuations."""
    n = inst.var_count
    if n > MAXSAT_VAR_GUARD:
        raise OracleGuardError(
            "%d variables exceeds the %d-variable guard" % (n, MAXSAT_VAR_GUARD))
    hard = []
    soft = []
    for wc in inst.clauses:
        pos, neg = _clause_masks(wc.lits)
        if wc.is_hard():
            hard.append((pos, neg))
        else:
            soft.append((wc.weight, pos, neg))
    best = None
    best_mask = None
    for m in range(1 << n):
        if any(not (m & pos or neg & ~m) for pos, neg in hard):
            continue
        cost = sum(w for w, pos, neg in soft if not (m & pos or neg & ~m))
        if best is None or cost < best:
            best, best_mask = cost, m
            if best == 0:
                break
    if best is None:
        return OracleResult(None, None)
    return OracleResult(best, _mask_model(best_mask, n))


def verify_core(inst, core_ids):
    """True iff hard clauses plus the clauses named by core_ids cannot all hold.

    Ids are 1-based positions in inst.clauses.
    """
    n = inst.var_count
    if n > MAXSAT_VAR_GUARD:
        raise OracleGuardError(
            "%d variables exceeds the %d-variable guard" % (n, MAXSAT_VAR_GUARD))
    must = []
    for cid in core_ids:
        if not 1 <= cid <= len(inst.clauses):
            raise ValueError("clause id %r out of range" % (cid,))
        must.append(_clause_masks(inst.clauses[cid - 1].lits))
    must.extend(_clause_masks(wc.lits) for wc in inst.clauses if wc.is_hard())
    for m in range(1 << n):
        if all(m & pos or neg & ~m for pos, neg in must):
            return False
    return True


def brute_force_schedule(p):
    """Exact soft-precedence optimum by enumerating start-time grids.

    Checks per-resource cumulative feasibility and sums the weights of
    precedences (from, to, lag) with start[to] - start[from] < lag.
    """
    base = p.base
    n = len(base.tasks)
    horizon = p.horizon
    domains = []
    grid = 1
    for dur, _ in base.tasks:
        if dur > horizon:
            return OracleResult(None, None)
        domains.append(horizon - dur + 1)
        grid *= domains[-1]
    if grid > SCHEDULE_GRID_GUARD:
        raise OracleGuardError(
            "start grid %d exceeds the %d guard" % (grid, SCHEDULE_GRID_GUARD))
    caps = base.resources
    usage = [[0] * horizon for _ in caps]
    # precedences whose endpoints are both assigned once task i is placed
    checks_at = [[] for _ in range(n)]
    for k, (a, b, lag) in enumerate(base.precedences):
        checks_at[max(a, b)].append((a, b, lag, p.weights[k]))
    starts = [0] * n
    best = [None, None]

    def place(i, s, sign):
        dur, demands = base.tasks[i]
        for r, dem in enumerate(demands):
            if dem == 0:
                continue
            row = usage[r]
            for t in range(s, s + dur):
                row[t] += sign * dem

    def fits(i, s):
        dur, demands = base.tasks[i]
        for r, dem in enumerate(demands):
            if dem == 0:
                continue
            row = usage[r]
            cap = caps[r]
            for t in range(s, s + dur):
                if row[t] + dem > cap:
                    return False
        return True

    def walk(i, cost):
        if best[0] is not None and cost >= best[0]:
            return
        if i == n:
            best[0] = cost
            best[1] = tuple(starts)
            return
        for s in range(domains[i]):
            if not fits(i, s):
                continue
            starts[i] = s
            extra = sum(w for a, b, lag, w in checks_at[i]
                        if starts[b] - starts[a] < lag)
            place(i, s, 1)
            walk(i + 1, cost + extra)
            place(i, s, -1)

    walk(0, 0)
    if best[0] is None:
        return OracleResult(None, None)
    return OracleResult(best[0], best[1])
