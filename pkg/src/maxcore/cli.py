"""Command line interface: solve, benchmark, and verify instances."""

import argparse
import os
import sys

from . import maxsat, rcpsp
from .maxsat import ALGORITHMS, WcnfParseError, parse_wcnf
from .oracle import (
    OracleGuardError,
    brute_force_maxsat,
    brute_force_schedule,
    verify_core,
)
from .rcpsp import MODES, RcpspParseError, parse_instance

EXIT_OK = 0          # optimum found, unsatisfiability proven, or claims verified
EXIT_INCOMPLETE = 1  # search gave up (budget) or a claim failed
EXIT_USAGE = 2       # bad arguments, unreadable or malformed input
EXIT_GUARD = 3       # oracle refused: instance too large to enumerate


def _fail(msg):
    print("error: %s" % msg, file=sys.stderr)
    return EXIT_USAGE


def _read(path):
    with open(path) as fh:
        return fh.read()


class _OLines:
    """Deduplicating printer for 'o <value>' objective lines."""

    def __init__(self):
        self.last = None

    def emit(self, z):
        if z != self.last:
            print("o %d" % z)
            self.last = z


def _replay_wpm1_rounds(res, o):
    running = 0
    for r in res.meta.get("rounds", ()):
        running += r["w_min"]
        o.emit(running)


# ---------------------------------------------------------------------------
# solve-wcnf

def cmd_solve_wcnf(args):
    try:
        text = _read(args.instance)
    except OSError as e:
        return _fail("cannot read %s: %s" % (args.instance, e.strerror))
    try:
        inst = parse_wcnf(text)
    except WcnfParseError as e:
        return _fail("%s: %s" % (args.instance, e))
    print("c maxcore %s on %s" % (args.algorithm, args.instance))
    print("c %d vars, %d clauses (%d hard)"
          % (inst.var_count, len(inst.clauses),
             sum(1 for wc in inst.clauses if wc.is_hard())))
    o = _OLines()
    kw = {"time_budget_s": args.timeout_s}
    if args.algorithm in ("bnb", "msu3"):
        kw["on_incumbent"] = o.emit
    res = maxsat.solve(inst, args.algorithm, **kw)
    if args.algorithm == "wpm1":
        _replay_wpm1_rounds(res, o)
    if res.status == "optimal":
        o.emit(res.z_opt)
        print("s OPTIMUM FOUND")
        print("v " + " ".join(
            str(v if res.model[v] else -v)
            for v in range(1, inst.var_count + 1)))
        return EXIT_OK
    if res.status == "unsatisfiable":
        print("s UNSATISFIABLE")
        return EXIT_OK
    print("s UNKNOWN")
    return EXIT_INCOMPLETE


# ---------------------------------------------------------------------------
# solve-rcpsp

def cmd_solve_rcpsp(args):
    try:
        text = _read(args.instance)
    except OSError as e:
        return _fail("cannot read %s: %s" % (args.instance, e.strerror))
    try:
        inst = parse_instance(text)
    except RcpspParseError as e:
        return _fail("%s: %s" % (args.instance, e))
    print("c maxcore %s on %s" % (args.algorithm, args.instance))
    print("c %d tasks, %d resources, %d precedences"
          % (len(inst.tasks), len(inst.resources), len(inst.precedences)))
    try:
        p = rcpsp.soften(inst, args.alpha, mode=args.mode, seed=args.seed)
    except ValueError as e:
        # no finite schedule can exist (positive-lag cycle, or the cut-down
        # horizon cannot even hold the longest task)
        print("c %s" % e)
        print("s UNSATISFIABLE")
        return EXIT_OK
    print("c alpha %s mode %s lower-bound %d horizon %d"
          % (args.alpha, p.mode, p.lower_bound, p.horizon))
    o = _OLines()
    r = rcpsp.solve_schedule(p, algorithm=args.algorithm,
                             time_budget_s=args.timeout_s,
                             on_incumbent=o.emit)
    if r.opt is not None and args.algorithm == "wpm1":
        _replay_wpm1_rounds(r.opt, o)
    if r.status == "optimal":
        o.emit(r.cost)
        print("s OPTIMUM FOUND")
        print("v " + " ".join(str(s) for s in r.starts))
        return EXIT_OK
    if r.status == "infeasible":
        print("s UNSATISFIABLE")
        return EXIT_OK
    print("s UNKNOWN")
    return EXIT_INCOMPLETE


# ---------------------------------------------------------------------------
# bench

def cmd_bench(args):
    try:
        alphas = [float(a) for a in args.alpha.split(",") if a]
    except ValueError:
        return _fail("bad --alpha list %r" % args.alpha)
    if not alphas:
        return _fail("empty --alpha list")
    algorithms = [a for a in args.algorithms.split(",") if a]
    for a in algorithms:
        if a not in ALGORITHMS:
            return _fail("unknown algorithm %r" % a)
    modes = list(MODES) if args.mode == "both" else [args.mode]
    if args.generate:
        os.makedirs(args.directory, exist_ok=True)
        for name, inst in rcpsp.generate_micro_set(args.generate, args.seed):
            path = os.path.join(args.directory, name + ".rcpsp")
            with open(path, "w") as fh:
                fh.write(rcpsp.serialize_instance(inst))
    try:
        files = sorted(f for f in os.listdir(args.directory)
                       if f.endswith(".rcpsp"))
    except OSError as e:
        return _fail("cannot list %s: %s" % (args.directory, e.strerror))
    if not files:
        return _fail("no .rcpsp instances in %s (try --generate N)"
                     % args.directory)
    set_name = os.path.basename(os.path.normpath(args.directory))
    instances = []
    for fname in files:
        path = os.path.join(args.directory, fname)
        try:
            inst = parse_instance(_read(path))
        except OSError as e:
            return _fail("cannot read %s: %s" % (path, e.strerror))
        except RcpspParseError as e:
            return _fail("%s: %s" % (path, e))
        instances.append((set_name, fname[:-len(".rcpsp")], inst))
    rows, csv_text, table = rcpsp.run_benchmark(
        instances, alphas, modes, algorithms, budget_s=args.timeout_s,
        seed=args.seed, jobs=args.jobs, stable_timing=args.stable_timing)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(csv_text)
        print("c wrote %d rows to %s" % (len(rows), args.csv))
    print(table, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify

def _sniff_format(text):
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("c"):
            continue
        return "wcnf" if line.startswith("p wcnf") else "rcpsp"
    return "wcnf"


def _parse_claims(text):
    claims = []
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kind, rest = parts[0], parts[1:]
        if kind == "core":
            try:
                ids = [int(t) for t in rest]
            except ValueError:
                raise ValueError("line %d: non-integer clause id" % line_no)
            if not ids:
                raise ValueError("line %d: empty core claim" % line_no)
            claims.append(("core", ids))
        elif kind == "optimum":
            if len(rest) != 1:
                raise ValueError("line %d: optimum takes one value" % line_no)
            try:
                claims.append(("optimum", int(rest[0])))
            except ValueError:
                raise ValueError("line %d: non-integer optimum" % line_no)
        elif kind == "infeasible":
            if rest:
                raise ValueError("line %d: infeasible takes no value" % line_no)
            claims.append(("infeasible", None))
        else:
            raise ValueError("line %d: unknown claim %r" % (line_no, kind))
    if not claims:
        raise ValueError("no claims found")
    return claims


def cmd_verify(args):
    try:
        inst_text = _read(args.instance)
        claim_text = _read(args.claims)
    except OSError as e:
        return _fail("cannot read input: %s" % e.strerror)
    try:
        claims = _parse_claims(claim_text)
    except ValueError as e:
        return _fail("%s: %s" % (args.claims, e))
    fmt = _sniff_format(inst_text)
    try:
        if fmt == "wcnf":
            inst = parse_wcnf(inst_text)
            optimum = None
            need_oracle = any(k != "core" for k, _ in claims)
            if need_oracle:
                optimum = brute_force_maxsat(inst).optimum
        else:
            base = parse_instance(inst_text)
            try:
                p = rcpsp.soften(base, args.alpha, mode=args.mode,
                                 seed=args.seed)
                optimum = brute_force_schedule(p).optimum
            except ValueError:
                optimum = None    # no finite schedule at this alpha
    except (WcnfParseError, RcpspParseError) as e:
        return _fail("%s: %s" % (args.instance, e))
    except OracleGuardError as e:
        print("error: oracle refused: %s" % e, file=sys.stderr)
        return EXIT_GUARD

    failures = 0
    for kind, value in claims:
        if kind == "core":
            if fmt != "wcnf":
                return _fail("core claims need a wcnf instance")
            try:
                ok = verify_core(inst, value)
            except OracleGuardError as e:
                print("error: oracle refused: %s" % e, file=sys.stderr)
                return EXIT_GUARD
            except ValueError as e:
                return _fail("bad core claim: %s" % e)
            label = "core %s" % " ".join(str(i) for i in value)
            extra = "" if ok else ": clauses are jointly satisfiable"
        elif kind == "optimum":
            ok = optimum == value
            label = "optimum %d" % value
            extra = "" if ok else ": oracle optimum is %s" % optimum
        else:
            ok = optimum is None
            label = "infeasible"
            extra = "" if ok else ": oracle optimum is %s" % optimum
        print("%s %s%s" % ("PASS" if ok else "FAIL", label, extra))
        failures += 0 if ok else 1
    print("verify: %d claims, %d failed" % (len(claims), failures))
    return EXIT_OK if failures == 0 else EXIT_INCOMPLETE


# ---------------------------------------------------------------------------

def _add_common_solver_args(sp):
    sp.add_argument("--algorithm", choices=ALGORITHMS, default="wpm1",
                    help="optimization driver (default: wpm1)")
    sp.add_argument("--timeout-s", type=float, default=600.0,
                    help="wall-clock budget in seconds (default: 600)")


def _add_soften_args(sp):
    sp.add_argument("--alpha", type=float, default=0.8,
                    help="horizon factor in (0, 1] (default: 0.8)")
    sp.add_argument("--mode", choices=MODES, default="cardinality",
                    help="precedence weights (default: cardinality)")
    sp.add_argument("--seed", type=int, default=0,
                    help="weight stream seed (default: 0)")


def build_parser():
    p = argparse.ArgumentParser(
        prog="maxcore",
        description="Core-guided soft-constraint optimization toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve-wcnf", help="optimize a weighted partial CNF file")
    sp.add_argument("instance", help="WCNF file")
    _add_common_solver_args(sp)
    sp.set_defaults(func=cmd_solve_wcnf)

    sp = sub.add_parser("solve-rcpsp",
                        help="optimize soft precedences of a scheduling instance")
    sp.add_argument("instance", help="scheduling instance file")
    _add_common_solver_args(sp)
    _add_soften_args(sp)
    sp.set_defaults(func=cmd_solve_rcpsp)

    sp = sub.add_parser("bench", help="run the benchmark grid over a directory")
    sp.add_argument("directory", help="directory of .rcpsp instance files")
    sp.add_argument("--generate", type=int, metavar="N", default=0,
                    help="first write N seeded micro-instances into the directory")
    sp.add_argument("--alpha", default="0.7,0.8,0.9",
                    help="comma-separated horizon factors (default: 0.7,0.8,0.9)")
    sp.add_argument("--mode", choices=MODES + ("both",), default="cardinality",
                    help="weight mode, or 'both' (default: cardinality)")
    sp.add_argument("--algorithms", default=",".join(ALGORITHMS),
                    help="comma-separated drivers (default: all three)")
    sp.add_argument("--timeout-s", type=float, default=600.0,
                    help="per-cell budget in seconds (default: 600)")
    sp.add_argument("--seed", type=int, default=0,
                    help="weight stream seed (default: 0)")
    sp.add_argument("--csv", metavar="PATH", help="also write rows as CSV")
    sp.add_argument("--jobs", type=int, default=1,
                    help="parallel worker processes (default: 1)")
    sp.add_argument("--stable-timing", action="store_true",
                    help="write wall_ms as 0.000 so reruns are byte-identical")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("verify",
                        help="check core/optimum claims against the oracle")
    sp.add_argument("instance", help="WCNF or scheduling instance file")
    sp.add_argument("claims", help="claim file: 'core <ids>', 'optimum <z>', "
                                   "'infeasible' lines")
    _add_soften_args(sp)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
