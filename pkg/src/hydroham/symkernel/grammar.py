"""Text grammar for expressions, with a recursive-descent parser and a printer.

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' unary)?
    atom   := INT | '(' expr ')' | 'sqrt' '(' expr ')'
            | NAME                      field, jet (u1_x, v_tt, u_{5x}) or constant
            | NAME '(' NAME, ... ')'    arbitrary function of field variables
            | NAME '[' INT, ... ']' '(' NAME, ... ')'   derivative multi-index
            | NAME "'"+ '(' NAME ')'    derivatives of a unary function

Rational literals are written ``p/q``.  Fractional exponents are only accepted
on field variables, and ``sqrt`` only on a field variable or a declared surd.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import sympy as sp
from sympy.core.function import AppliedUndef
from sympy.printing.precedence import PRECEDENCE
from sympy.printing.str import StrPrinter

from .jets import DEFAULT_FIELDS, decode, jet


class ParseError(ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        super().__init__(f"{message} at position {position}" + (f" in {text!r}" if text else ""))
        self.position = position
        self.reason = message


_TOKEN = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z][A-Za-z0-9]*(?:_(?:[xt]+|\{\d+[xt]\}))?)|(?P<op>[-+*/^()\[\],']))"
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(text, i)
        if not m or m.end() == i:
            raise ParseError(f"unexpected character {text[i]!r}", i, text)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), start))
        i = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


@dataclass
class Grammar:
    """Symbol tables for one parse; ``functions`` is filled in as names are met."""

    fields: tuple[str, ...] = DEFAULT_FIELDS
    constants: tuple[str, ...] = ()
    functions: dict[str, int] = field(default_factory=dict)
    surds: tuple = (2,)

    def parse(self, text: str) -> sp.Expr:
        return _Parser(text, self).run()


class _Parser:
    def __init__(self, text: str, g: Grammar):
        self.text = text
        self.g = g
        self.toks = _tokenize(text)
        self.i = 0
        self.surds = {sp.expand(sp.sympify(s)) for s in g.surds}

    def peek(self, k=0) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if t.text != text:
            self.fail(f"expected {text!r}", t)
        return self.take()

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, tok.pos, self.text)

    def run(self) -> sp.Expr:
        if self.peek().kind == "end":
            self.fail("empty expression")
        e = self.expr()
        if self.peek().kind != "end":
            self.fail(f"unexpected {self.peek().text!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take()
            rhs = self.unary()
            if op.text == "*":
                e = e * rhs
            else:
                if rhs == 0:
                    self.fail("division by zero", op)
                e = e / rhs
        return e

    def unary(self):
        if self.peek().text == "-":
            self.take()
            return -self.unary()
        if self.peek().text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().text != "^":
            return base
        op = self.take()
        ex = self.unary()
        if not ex.is_Rational:
            self.fail("exponent must be a rational constant", op)
        if not ex.is_Integer and not self._is_field(base):
            self.fail("fractional powers are only allowed on field variables", op)
        if base == 0 and ex < 0:
            self.fail("division by zero", op)
        return sp.Pow(base, ex)

    def _is_field(self, e) -> bool:
        return isinstance(e, sp.Symbol) and e.name in self.g.fields

    def atom(self):
        t = self.peek()
        if t.kind == "int":
            self.take()
            return sp.Integer(int(t.text))
        if t.text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind != "name":
            self.fail(f"unexpected {t.text or 'end of input'!r}", t)
        self.take()
        name = t.text
        nxt = self.peek().text
        if name == "sqrt" and nxt == "(":
            return self._sqrt(t)
        if nxt == "(":
            return self._apply(name, (), t)
        if nxt == "[":
            self.take()
            alpha = [self._int()]
            while self.peek().text == ",":
                self.take()
                alpha.append(self._int())
            self.expect("]")
            if self.peek().text != "(":
                self.fail("expected '(' after derivative multi-index")
            return self._apply(name, tuple(alpha), t)
        if nxt == "'":
            k = 0
            while self.peek().text == "'":
                self.take()
                k += 1
            if self.peek().text != "(":
                self.fail("expected '(' after primes")
            return self._apply(name, (k,), t)
        return self._symbol(name, t)

    def _int(self) -> int:
        t = self.peek()
        if t.kind != "int":
            self.fail("expected a non-negative integer")
        self.take()
        return int(t.text)

    def _symbol(self, name, tok):
        base, order, direction = decode(name)
        if order:
            if base not in self.g.fields:
                self.fail(f"unknown field {base!r} in jet {name!r}", tok)
            return jet(base, order, direction)
        if name in self.g.fields or name in self.g.constants:
            return sp.Symbol(name)
        self.fail(f"unknown symbol {name!r}", tok)

    def _sqrt(self, tok):
        self.expect("(")
        inner = self.expr()
        self.expect(")")
        if self._is_field(inner):
            return sp.Pow(inner, sp.Rational(1, 2))
        if sp.expand(inner) in self.surds:
            return sp.sqrt(inner)
        self.fail(f"sqrt of {inner} is not a declared surd", tok)

    def _apply(self, name, alpha, tok):
        if name in self.g.fields or name in self.g.constants:
            self.fail(f"{name!r} is not a function", tok)
        self.expect("(")
        args = []
        if self.peek().text != ")":
            args.append(self._arg())
            while self.peek().text == ",":
                self.take()
                args.append(self._arg())
        self.expect(")")
        arity = len(args)
        if arity == 0:
            self.fail(f"function {name!r} needs arguments", tok)
        known = self.g.functions.get(name)
        if known is not None and known != arity:
            self.fail(f"function {name!r} takes {known} argument(s), got {arity}", tok)
        if alpha and len(alpha) != arity:
            self.fail(f"multi-index of length {len(alpha)} for {name!r} of arity {arity}", tok)
        if len(set(args)) != arity:
            self.fail(f"repeated argument in {name!r}", tok)
        self.g.functions[name] = arity
        f = sp.Function(name)(*args)
        spec = [(a, k) for a, k in zip(args, alpha) if k]
        return sp.Derivative(f, *spec) if spec else f

    def _arg(self):
        t = self.peek()
        if t.kind != "name" or t.text not in self.g.fields:
            self.fail("function arguments must be field variables", t)
        self.take()
        return sp.Symbol(t.text)


def parse(text: str, fields=DEFAULT_FIELDS, constants=(), functions=None, surds=(2,)) -> sp.Expr:
    """Parse one expression.  ``functions`` (name -> arity) is updated in place."""
    g = Grammar(tuple(fields), tuple(constants), functions if functions is not None else {}, tuple(surds))
    return g.parse(text)


class _Printer(StrPrinter):
    def _print_Pow(self, expr, rational=False):
        b, e = expr.base, expr.exp
        if e.is_Rational and not e.is_Integer and not isinstance(b, sp.Symbol):
            root = f"sqrt({self._print(b)})" if e.q == 2 else f"({self._print(b)})^(1/{e.q})"
            return root if e.p == 1 else f"{root}^{self._exp(sp.Integer(e.p))}"
        if e == -1 and not rational:
            return f"1/{self.parenthesize(b, PRECEDENCE['Pow'], strict=True)}"
        if e.is_Rational and e.p < 0 and not rational:
            return f"1/{self.parenthesize(b, PRECEDENCE['Pow'], strict=True)}^{self._exp(-e)}"
        return f"{self.parenthesize(b, PRECEDENCE['Pow'], strict=True)}^{self._exp(e)}"

    def _exp(self, e):
        if e.is_Integer and e >= 0:
            return str(e)
        return f"({self._print(e)})"

    def _print_Derivative(self, expr):
        f = expr.expr
        if isinstance(f, AppliedUndef):
            counts = dict(expr.variable_count)
            alpha = ",".join(str(counts.get(a, 0)) for a in f.args)
            return f"{f.func.__name__}[{alpha}]({', '.join(map(self._print, f.args))})"
        return super()._print_Derivative(expr)

    def _print_Rational(self, expr):
        return f"{expr.p}/{expr.q}"


_PRINTER = _Printer({"order": "lex"})


def to_text(e) -> str:
    """Deterministic rendering in the grammar accepted by :func:`parse`."""
    return _PRINTER.doprint(sp.sympify(e))
