"""Expression language and command line driver.

Grammar (LL(1), whitespace-insensitive):

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | postfix
    postfix := atom ('^' exponent)?
    exponent:= rational | '(' rational ')'
    atom    := number | 'x' | name '(' expr (',' expr)* ')' | '(' expr ')' | name

Exponents must be rational literals; `x ^ y` is a syntax error.  Known
functions: exp, log, D, compose, inverse, cmp, taylor, addendum,
sum_geom.  `addendum(kind, ...)` takes the ratio set as a finite series
whose support is read off.

Exit codes: 0 ok, 2 precondition violation, 3 budget exhaustion,
4 syntax error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from . import calculus, compose as compmod, config, series as srs, witness as witmod
from .errors import (
    BudgetExhausted,
    ParseError,
    PreconditionViolation,
    TransserialError,
)
from .grid import RatioSet
from .monomial import X, mono_sign
from .series import Transseries, dump_text, series_text, ts_const, ts_laurent

ADDENDUM_KINDS = ("derivative", "taylor", "smallness", "composition", "mvt")


# ---------------------------------------------------------------------------
# tokens and parser

_PUNCT = "+-*/^(),="


def _tokenize(text: str):
    toks = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(("num", text[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(("name", text[i:j], i))
            i = j
            continue
        if c in _PUNCT:
            toks.append((c, c, i))
            i += 1
            continue
        raise ParseError(i, "a token", c)
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def take(self, kind=None):
        tok = self.toks[self.pos]
        if kind is not None and tok[0] != kind:
            raise ParseError(tok[2], kind, tok[1])
        self.pos += 1
        return tok

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(tok[2], "end of input", tok[1])
        return e

    def parse_statement(self):
        """Either ('bind', name, expr) or ('expr', expr)."""
        if (self.peek()[0] == "name" and self.toks[self.pos + 1][0] == "="
                and self.peek()[1] not in ("x",)):
            name = self.take("name")[1]
            self.take("=")
            e = self.expr()
            tok = self.peek()
            if tok[0] != "end":
                raise ParseError(tok[2], "end of input", tok[1])
            return ("bind", name, e)
        return ("expr", self.parse())

    def expr(self):
        e = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            rhs = self.term()
            e = ("add" if op == "+" else "sub", e, rhs)
        return e

    def term(self):
        e = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            rhs = self.factor()
            e = ("mul" if op == "*" else "div", e, rhs)
        return e

    def factor(self):
        if self.peek()[0] == "-":
            self.take()
            return ("neg", self.factor())
        return self.postfix()

    def postfix(self):
        e = self.atom()
        while self.peek()[0] == "^":
            self.take()
            e = ("pow", e, self.exponent())
        return e

    def exponent(self) -> Fraction:
        tok = self.peek()
        if tok[0] == "(":
            self.take()
            q = self.rational()
            self.take(")")
            return q
        return self.rational()

    def rational(self) -> Fraction:
        neg = False
        if self.peek()[0] == "-":
            self.take()
            neg = True
        tok = self.peek()
        if tok[0] != "num":
            raise ParseError(tok[2], "a rational literal", tok[1])
        self.take()
        num = int(tok[1])
        den = 1
        if self.peek()[0] == "/":
            save = self.pos
            self.take()
            if self.peek()[0] == "num":
                den = int(self.take()[1])
            else:
                self.pos = save
        q = Fraction(num, den)
        return -q if neg else q

    def atom(self):
        tok = self.peek()
        if tok[0] == "num":
            self.take()
            return ("num", Fraction(int(tok[1])))
        if tok[0] == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if tok[0] == "name":
            self.take()
            name = tok[1]
            if name == "x":
                return ("x",)
            if self.peek()[0] == "(":
                self.take()
                args = [self.expr()]
                while self.peek()[0] == ",":
                    self.take()
                    args.append(self.expr())
                self.take(")")
                return ("call", name, args, tok[2])
            return ("ident", name, tok[2])
        raise ParseError(tok[2], "an expression", tok[1])


def parse(text: str):
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# evaluation

@dataclass
class Session:
    bindings: dict = field(default_factory=dict)
    budget: int = 0
    terms: int = 0

    def __post_init__(self):
        if not self.budget:
            self.budget = config.default_budget()
        if not self.terms:
            self.terms = min(12, self.budget)


@dataclass
class Report:
    text: str


def evaluate(ast, session: Session):
    out = _eval(ast, session)
    return out


def _eval(ast, session: Session):
    kind = ast[0]
    if kind == "num":
        return ts_const(ast[1])
    if kind == "x":
        return srs.ts_x()
    if kind == "ident":
        name = ast[1]
        if name in session.bindings:
            return session.bindings[name]
        raise PreconditionViolation(f"unbound name {name!r} (column {ast[2] + 1})")
    if kind == "neg":
        return srs.ts_neg(_series_arg(_eval(ast[1], session)))
    if kind == "add":
        return srs.ts_add(_series_arg(_eval(ast[1], session)),
                          _series_arg(_eval(ast[2], session)))
    if kind == "sub":
        return srs.ts_add(_series_arg(_eval(ast[1], session)),
                          srs.ts_neg(_series_arg(_eval(ast[2], session))))
    if kind == "mul":
        return srs.ts_mul(_series_arg(_eval(ast[1], session)),
                          _series_arg(_eval(ast[2], session)))
    if kind == "div":
        return srs.ts_mul(
            _series_arg(_eval(ast[1], session)),
            srs.ts_power(_series_arg(_eval(ast[2], session)), Fraction(-1)))
    if kind == "pow":
        return srs.ts_power(_series_arg(_eval(ast[1], session)), ast[2])
    if kind == "call":
        return _call(ast[1], ast[2], ast[3], session)
    raise TransserialError(f"unknown node {kind}")


def _series_arg(v) -> Transseries:
    if isinstance(v, Transseries):
        return v
    raise PreconditionViolation("expected a series, found a report")


def _ratio_set_from(expr_value: Transseries) -> RatioSet:
    terms = srs.probe_finite(expr_value, config.FINITE_PROBE)
    if terms is None:
        raise PreconditionViolation("ratio set argument must be a finite series")
    return RatioSet.from_monomials([m for m, _ in terms])


def _call(name: str, args, at: int, session: Session):
    if name == "addendum":
        vals = [None] + [_eval(a, session) for a in args[1:]]
        return _addendum_call(args, vals, at, session)
    vals = [_eval(a, session) for a in args]

    def arity(n):
        if len(vals) != n:
            raise ParseError(at, f"{name} with {n} argument(s)", str(len(vals)))

    if name == "exp":
        arity(1)
        return srs.ts_exp(_series_arg(vals[0]))
    if name == "log":
        arity(1)
        return srs.ts_log(_series_arg(vals[0]))
    if name == "D":
        arity(1)
        return calculus.derive(_series_arg(vals[0]))
    if name == "compose":
        arity(2)
        return compmod.compose(_series_arg(vals[0]), _series_arg(vals[1]))
    if name == "inverse":
        arity(1)
        return compmod.comp_inverse(_series_arg(vals[0]))
    if name == "cmp":
        arity(2)
        rep = srs.ts_compare(_series_arg(vals[0]), _series_arg(vals[1]))
        return Report(rep.text())
    if name == "taylor":
        arity(4)
        rep = compmod.taylor1(*[_series_arg(v) for v in vals],
                              witnessed=True)
        return Report(rep.text())
    if name == "sum_geom":
        arity(2)
        first, ratio = _series_arg(vals[0]), _series_arg(vals[1])
        body = ts_laurent(lambda p: Fraction(1), (0,), [ratio])
        return srs.ts_mul(first, body)
    raise ParseError(at, "a known function", name)


def _addendum_call(args, vals, at: int, session: Session):
    if not args or args[0][0] != "ident":
        raise ParseError(at, "addendum kind " + "|".join(ADDENDUM_KINDS),
                         args[0][0] if args else "nothing")
    kind = args[0][1]
    rest = vals[1:]
    if kind == "derivative":
        add = witmod.derivative_addendum(_ratio_set_from(_series_arg(rest[0])))
    elif kind == "taylor":
        add = witmod.taylor_addendum(_ratio_set_from(_series_arg(rest[0])))
    elif kind == "smallness":
        add = witmod.smallness_addendum(_series_arg(rest[0]),
                                        _ratio_set_from(_series_arg(rest[1])))
    elif kind == "composition":
        _, add = witmod.composition_addendum(
            _ratio_set_from(_series_arg(rest[0])), _series_arg(rest[1]))
    elif kind == "mvt":
        add = witmod.mvt_addendum(_ratio_set_from(_series_arg(rest[0])),
                                  _series_arg(rest[1]), _series_arg(rest[2]))
    else:
        raise ParseError(at, "addendum kind " + "|".join(ADDENDUM_KINDS), kind)
    return Report(add.text())


# ---------------------------------------------------------------------------
# output

def render(value, session: Session, pretty: bool, certificates: bool) -> str:
    if isinstance(value, Report):
        return value.text + "\n"
    ts = value
    if pretty:
        out = series_text(ts, session.terms)
        if certificates:
            srs.ensure_gen(ts)
            out += f"\n  gen={ts.gen.text()}"
            out += f"\n  wit={ts.wit.text() if ts.wit else 'none'}"
        return out + "\n"
    return dump_text(ts, session.terms)


# ---------------------------------------------------------------------------
# entry points

def _run(expr_text: str, session: Session, pretty: bool, certs: bool) -> str:
    ast = parse(expr_text)
    with config.term_budget(session.budget):
        value = evaluate(ast, session)
        return render(value, session, pretty, certs)


def repl(session: Session):  # pragma: no cover - interactive
    print("transserial repl; `name = expr` binds, ctrl-d exits")
    while True:
        try:
            line = input("> ").strip()
        except EOFError:
            print()
            return 0
        if not line:
            continue
        if line in ("quit", "exit"):
            return 0
        try:
            stmt = _Parser(line).parse_statement()
            if stmt[0] == "bind":
                value = evaluate(stmt[2], session)
                if isinstance(value, Report):
                    print(value.text)
                else:
                    session.bindings[stmt[1]] = value
                    print(f"{stmt[1]} = {series_text(value, session.terms)}")
            else:
                value = evaluate(stmt[1], session)
                print(render(value, session, True, False), end="")
        except TransserialError as exc:
            print(f"error: {exc}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="transserial")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--terms", type=int, default=None,
                       help="terms to print (default 12)")
        p.add_argument("--budget", type=int, default=None,
                       help="forcing budget (default 64 or TRANSSERIAL_BUDGET)")
        p.add_argument("--pretty", action="store_true")
        p.add_argument("--certificates", action="store_true")

    pe = sub.add_parser("eval", help="evaluate one expression")
    pe.add_argument("expr")
    add_common(pe)

    pr = sub.add_parser("repl", help="interactive loop")
    add_common(pr)

    for name, template in (
        ("derive", "D({0})"),
        ("sum", "sum_geom({0}, {1})"),
        ("compose", "compose({0}, {1})"),
        ("inverse", "inverse({0})"),
        ("taylor", "taylor({0}, {1}, {2}, {3})"),
    ):
        p = sub.add_parser(name)
        nargs = template.count("{")
        for i in range(nargs):
            p.add_argument(f"expr{i}")
        add_common(p)
        p.set_defaults(template=template, nargs_count=nargs)

    pa = sub.add_parser("addendum", help="addendum(kind, ...) shortcut")
    pa.add_argument("kind", choices=ADDENDUM_KINDS)
    pa.add_argument("exprs", nargs="+")
    add_common(pa)

    ns = parser.parse_args(argv)
    session = Session(budget=ns.budget or 0, terms=ns.terms or 0)
    try:
        if ns.command == "repl":
            return repl(session)
        if ns.command == "eval":
            text = ns.expr
        elif ns.command == "addendum":
            text = f"addendum({ns.kind}, {', '.join(ns.exprs)})"
        else:
            pieces = [getattr(ns, f"expr{i}") for i in range(ns.nargs_count)]
            text = ns.template.format(*pieces)
        sys.stdout.write(_run(text, session, ns.pretty, ns.certificates))
        return 0
    except ParseError as exc:
        print(f"syntax error: {exc}", file=sys.stderr)
        return 4
    except BudgetExhausted as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return 3
    except PreconditionViolation as exc:
        print(f"precondition violation: {exc}", file=sys.stderr)
        return 2
    except TransserialError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
