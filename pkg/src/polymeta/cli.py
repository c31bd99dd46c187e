"""Command-line entry point.

Exit codes: 0 positive / witness found, 1 proven negative, 2 budget
exhausted, 64 usage error, 65 malformed input.
"""

import argparse
import json
import os
import sys

from . import engine
from .conditions import OperationTable, named_condition, parse_condition, serialize_table
from .conservative import cc_decide, cc_decide_triples, serialize_digraph, triple_digraph
from .errors import BudgetExhausted, FormatError
from .gadgets import (
    betweenness_structure,
    cycle_structure,
    nl_gadget,
    parse_digraph,
    parse_graph,
    parse_triples,
    three_col_gadget,
)
from .metaquestion import (
    SearchFlags,
    decide_bounded_width,
    decide_condition,
    decide_semilattice,
    decide_set_polymorphism,
)
from .minimality import kl_minimality, parse_instance, serialize_instance, solve_by_fixing
from .structures import (
    SetFunction,
    compute_core,
    find_homomorphism,
    parse_structure,
    power_structure,
    product,
    serialize_set_function,
    serialize_structure,
)

OK, NEGATIVE, EXHAUSTED, USAGE, FORMAT = 0, 1, 2, 64, 65

EPILOG = {
    "structure": """structure file example:
  structure k2
  domain 2
  relation E 2
  0 1
  1 0
  end
  endstructure""",
    "condition": """condition file example (used when --condition names a file):
  condition maltsev
  symbol f 3
  identity f(x,x,y) = y
  identity f(y,x,x) = y
  endcondition""",
    "instance": """instance file example:
  instance demo
  variables 2
  domain 2
  constraint 2
  scope 0 1
  0 1
  1 0
  end
  endinstance""",
    "graph": "graph file example:\n  graph 3\n  edge 0 1\n  edge 1 2",
    "digraph": "digraph file example:\n  digraph 2\n  arc 0 1\n  arc 1 0\n  mark 0 1",
    "triples": "triples file example (one triple per line):\n  0 1 2\n  1 2 3",
}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _read(path):
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _structure(path):
    return parse_structure(_read(path))


def _table_json(t):
    if isinstance(t, OperationTable):
        return {"arity": t.arity, "domain": t.size, "values": list(t.values)}
    if isinstance(t, SetFunction):
        return {"domain": t.size, "values": list(t.values)}
    return t


class Output:
    """Collects text or a JSON envelope and returns the exit code."""

    def __init__(self, args):
        self.json = getattr(args, "json", False)
        self.lines = []
        self.witnesses = {}
        self.stats = {}

    def text(self, s):
        self.lines.append(s if s.endswith("\n") else s + "\n")

    def finish(self, verdict, code):
        if self.json:
            env = {
                "verdict": verdict,
                "witnesses": {k: _table_json(v) for k, v in self.witnesses.items()},
                "stats": self.stats,
            }
            sys.stdout.write(json.dumps(env, sort_keys=True) + "\n")
        else:
            sys.stdout.write("".join(self.lines))
        return code


def _tables_out(out, tables):
    for name, t in tables.items():
        out.witnesses[name] = t
        out.text(serialize_table(name, t))


# --- subcommands -----------------------------------------------------------


def cmd_validate(args, out):
    s = _structure(args.file)
    out.stats = {"domain": s.size, "relations": len(s.relations)}
    out.text(f"ok {s.name} domain {s.size} relations {len(s.relations)}")
    return out.finish("valid", OK)


def cmd_core(args, out):
    c = compute_core(_structure(args.file), args.budget)
    out.text(serialize_structure(c.structure))
    out.text("retraction " + " ".join(map(str, c.retraction)))
    out.text("elements " + " ".join(map(str, c.elements)))
    out.witnesses["retraction"] = list(c.retraction)
    out.witnesses["core"] = serialize_structure(c.structure)
    out.stats = {"core_size": c.structure.size, "proper": c.proper}
    return out.finish("proper" if c.proper else "core", OK)


def cmd_product(args, out):
    p = product(_structure(args.a), _structure(args.b))
    out.text(serialize_structure(p))
    out.witnesses["structure"] = serialize_structure(p)
    return out.finish("ok", OK)


def cmd_power(args, out):
    p = power_structure(_structure(args.file))
    out.text(serialize_structure(p))
    out.witnesses["structure"] = serialize_structure(p)
    return out.finish("ok", OK)


def _pins(specs):
    pins = {}
    for item in specs or ():
        a, sep, b = item.partition("=")
        try:
            pins[int(a)] = int(b)
        except ValueError:
            raise UsageError(f"bad pin {item!r}, expected a=b") from None
        if not sep:
            raise UsageError(f"bad pin {item!r}, expected a=b")
    return pins


def cmd_hom(args, out):
    g, h = _structure(args.source), _structure(args.target)
    try:
        f = find_homomorphism(g, h, _pins(args.pin), args.budget)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if f is None:
        out.text("none")
        return out.finish("none", NEGATIVE)
    out.text("map " + " ".join(map(str, f)))
    out.witnesses["map"] = list(f)
    return out.finish("found", OK)


def cmd_minimality(args, out):
    name, inst = parse_instance(_read(args.file))
    if args.solve:
        sol = solve_by_fixing(inst, args.k, args.l)
        if sol is None:
            out.text("EMPTY")
            return out.finish("empty", NEGATIVE)
        out.text("solution " + " ".join(map(str, sol)))
        out.witnesses["solution"] = list(sol)
        return out.finish("solution", OK)
    res = kl_minimality(inst, args.k, args.l)
    if res is None:
        out.text("EMPTY")
        return out.finish("empty", NEGATIVE)
    out.text(serialize_instance(res, name))
    out.witnesses["instance"] = serialize_instance(res, name)
    return out.finish("minimal", OK)


def _condition(args):
    name = args.condition
    if os.path.exists(name):
        return parse_condition(_read(name))
    try:
        return named_condition(name, args.arity)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_decide(args, out):
    h = _structure(args.file)
    m = _condition(args)
    flags = SearchFlags(args.idempotent, args.conservative, args.budget)
    tables = decide_condition(h, m, flags, args.strategy)
    out.stats = {"condition": m.name, "strategy": args.strategy}
    if tables is None:
        out.text("none")
        return out.finish("none", NEGATIVE)
    _tables_out(out, tables)
    return out.finish("found", OK)


def cmd_bounded_width(args, out):
    r = decide_bounded_width(_structure(args.file), args.budget)
    out.text(r.verdict)
    out.stats = {"core_size": r.core.structure.size}
    if r.set_function is not None:
        out.witnesses["set"] = r.set_function
        out.text(serialize_set_function(r.set_function))
    if r.tables is not None:
        _tables_out(out, r.tables)
    return out.finish(r.verdict, OK)


def cmd_set_polymorphism(args, out):
    f = decide_set_polymorphism(_structure(args.file), args.budget)
    if f is None:
        out.text("none")
        return out.finish("none", NEGATIVE)
    out.witnesses["set"] = f
    out.text(serialize_set_function(f))
    return out.finish("found", OK)


def cmd_semilattice(args, out):
    t = decide_semilattice(_structure(args.file), args.conservative, args.budget)
    if t is None:
        out.text("none")
        return out.finish("none", NEGATIVE)
    _tables_out(out, {"f": t})
    return out.finish("found", OK)


def cmd_cc_decide(args, out):
    t = cc_decide(_structure(args.file))
    if t is None:
        out.text("none")
        return out.finish("none", NEGATIVE)
    _tables_out(out, {"f": t})
    return out.finish("found", OK)


def _triples(path):
    return parse_triples(_read(path))


def cmd_triples_decide(args, out):
    ok = cc_decide_triples(_triples(args.file).triples)
    out.text("true" if ok else "false")
    return out.finish("true" if ok else "false", OK if ok else NEGATIVE)


def cmd_triples_digraph(args, out):
    d = triple_digraph(_triples(args.file).triples)
    out.text(serialize_digraph(d))
    out.witnesses["digraph"] = serialize_digraph(d)
    return out.finish("ok", OK)


def cmd_gadget(args, out):
    kind = args.kind
    if kind == "three-col":
        try:
            s = three_col_gadget(parse_graph(_read(args.input)))
        except FormatError:
            raise
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    elif kind == "betweenness":
        s = betweenness_structure(_triples(args.input))
    elif kind == "nl":
        k, src, dst = parse_digraph(_read(args.input))
        if src is None:
            raise FormatError("nl gadget needs a 'mark s t' line")
        try:
            s = nl_gadget(k, src, dst)[1]
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    else:
        try:
            p = int(args.input)
        except ValueError:
            raise UsageError("cycle gadget takes an integer length") from None
        try:
            s = cycle_structure(p)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    out.text(serialize_structure(s))
    out.witnesses["structure"] = serialize_structure(s)
    return out.finish("ok", OK)


def build_parser():
    p = Parser(prog="polymeta", description="Polymorphism metaquestions for finite relational structures.")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized routines (default 0)")
    sub = p.add_subparsers(dest="command", parser_class=Parser)

    def add(name, fn, help, epilog=(), budget=False, json_flag=True):
        q = sub.add_parser(
            name,
            help=help,
            description=help,
            epilog="\n\n".join(EPILOG[e] for e in epilog) or None,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        q.set_defaults(fn=fn)
        if budget:
            q.add_argument("--budget", type=int, default=engine.DEFAULT_BUDGET, help="search step limit")
        if json_flag:
            q.add_argument("--json", action="store_true", help="emit a JSON envelope")
        return q

    add("validate", cmd_validate, "parse and check a structure file", ["structure"]).add_argument("file")
    add("core", cmd_core, "compute the core and a retraction", ["structure"], True).add_argument("file")
    q = add("product", cmd_product, "product of two similar structures", ["structure"])
    q.add_argument("a")
    q.add_argument("b")
    add("power", cmd_power, "power structure on nonempty subsets", ["structure"]).add_argument("file")
    q = add("hom", cmd_hom, "find a homomorphism source -> target", ["structure"], True)
    q.add_argument("--pin", action="append", metavar="A=B", help="force source element A to B")
    q.add_argument("source")
    q.add_argument("target")
    q = add("minimality", cmd_minimality, "(k,l)-minimality of a CSP instance", ["instance"])
    q.add_argument("--k", type=int, default=2)
    q.add_argument("--l", type=int, default=3)
    q.add_argument("--solve", action="store_true", help="run value fixing and print a solution")
    q.add_argument("file")
    q = add("decide", cmd_decide, "decide a Maltsev condition and print witnesses", ["structure", "condition"], True)
    q.add_argument("--condition", required=True, help="catalog name or condition file")
    q.add_argument("--arity", type=int)
    q.add_argument("--idempotent", action="store_true")
    q.add_argument("--conservative", action="store_true")
    q.add_argument("--strategy", choices=["auto", "creation", "brute"], default="auto")
    q.add_argument("file")
    add("bounded-width", cmd_bounded_width, "classify as width1, bounded23 or unbounded", ["structure"], True).add_argument("file")
    add("set-polymorphism", cmd_set_polymorphism, "find a set polymorphism", ["structure"], True).add_argument("file")
    q = add("semilattice", cmd_semilattice, "find a semilattice polymorphism", ["structure"], True)
    q.add_argument("--conservative", action="store_true")
    q.add_argument("file")
    add("cc-decide", cmd_cc_decide, "find a conservative commutative binary polymorphism", ["structure"]).add_argument("file")
    add("triples-decide", cmd_triples_decide, "strong-component criterion on a triples file", ["triples"]).add_argument("file")
    add("triples-digraph", cmd_triples_digraph, "print the digraph of a triples file", ["triples"]).add_argument("file")
    q = add("gadget", cmd_gadget, "generate a reduction structure", ["graph", "triples", "digraph"])
    q.add_argument("kind", choices=["three-col", "betweenness", "nl", "cycle"])
    q.add_argument("input", help="input file, or the cycle length for 'cycle'")
    return p


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        return args.fn(args, Output(args))
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return USAGE
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return FORMAT
    except BudgetExhausted as exc:
        print(f"exhausted: {exc}", file=sys.stderr)
        return EXHAUSTED


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
