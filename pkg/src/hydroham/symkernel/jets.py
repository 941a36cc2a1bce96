"""Jet variables, function symbols and the naming scheme that ties them to sympy symbols.

A jet variable u^i_sigma is a plain :class:`sympy.Symbol` whose name encodes the
field and the number of derivatives, e.g. ``u1`` (order 0), ``u1_x``, ``v_tt``
or ``u_{5x}``.  Keeping them as ordinary symbols means every sympy routine
(diff, subs, Poly) works on them directly; this module only knows how to build
and decode the names.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

import sympy as sp
from sympy.core.function import AppliedUndef

DIRECTIONS = ("x", "t")

#: Field names recognised when nothing else is declared.
DEFAULT_FIELDS: tuple[str, ...] = ("u", "v", "w") + tuple(f"u{i}" for i in range(1, 10))

_JET_RE = re.compile(r"^(?P<base>[A-Za-z][A-Za-z0-9]*)_(?:(?P<rep>x+|t+)|\{(?P<k>\d+)(?P<d>[xt])\})$")


@dataclass(frozen=True, order=True)
class JetVariable:
    """The symbol u^{field}_{order}; ``direction`` names the derivative variable."""

    field: str
    order: int = 0
    direction: str = "x"

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("jet order must be non-negative")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {self.direction!r}")

    @property
    def name(self) -> str:
        if self.order == 0:
            return self.field
        if self.order <= 4:
            return f"{self.field}_{self.direction * self.order}"
        return f"{self.field}_{{{self.order}{self.direction}}}"

    @property
    def symbol(self) -> sp.Symbol:
        return sp.Symbol(self.name)

    def shifted(self, by: int = 1) -> "JetVariable":
        return JetVariable(self.field, self.order + by, self.direction)


def jet(field: str, order: int = 0, direction: str = "x") -> sp.Symbol:
    return JetVariable(field, order, direction).symbol


@lru_cache(maxsize=None)
def decode(name: str) -> tuple[str, int, str | None]:
    """Split a symbol name into (base, order, direction); order 0 has direction None."""
    m = _JET_RE.match(name)
    if not m:
        return name, 0, None
    if m.group("rep"):
        rep = m.group("rep")
        return m.group("base"), len(rep), rep[0]
    return m.group("base"), int(m.group("k")), m.group("d")


def jet_of(sym: sp.Symbol, fields) -> JetVariable | None:
    """The JetVariable behind ``sym`` if its base is one of ``fields``."""
    base, order, direction = decode(sym.name)
    if base not in fields:
        return None
    return JetVariable(base, order, direction or "x")


def field_symbols(fields) -> tuple[sp.Symbol, ...]:
    return tuple(sp.Symbol(f) for f in fields)


def default_fields(n: int) -> tuple[str, ...]:
    if n <= 3:
        return ("u", "v", "w")[:n]
    return tuple(f"u{i}" for i in range(1, n + 1))


def jets_in(expr: sp.Expr, fields) -> dict[sp.Symbol, JetVariable]:
    out = {}
    for s in expr.free_symbols:
        j = jet_of(s, fields)
        if j is not None:
            out[s] = j
    return out


def max_order(expr: sp.Expr, fields, direction: str | None = None) -> int:
    orders = [
        j.order
        for j in jets_in(expr, fields).values()
        if direction is None or j.order == 0 or j.direction == direction
    ]
    return max(orders, default=0)


# -- function symbols ---------------------------------------------------------


@dataclass(frozen=True)
class FunctionSymbol:
    """f_alpha(args): an arbitrary function with a derivative multi-index."""

    name: str
    args: tuple[sp.Symbol, ...]
    alpha: tuple[int, ...]

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def order(self) -> int:
        return sum(self.alpha)

    def bump(self, slot: int) -> "FunctionSymbol":
        a = list(self.alpha)
        a[slot] += 1
        return FunctionSymbol(self.name, self.args, tuple(a))

    def as_expr(self) -> sp.Expr:
        base = sp.Function(self.name)(*self.args)
        spec = [(x, k) for x, k in zip(self.args, self.alpha) if k]
        return sp.Derivative(base, *spec) if spec else base


def function_atom(e: sp.Expr) -> FunctionSymbol | None:
    """Decode an applied function or a derivative of one; None for anything else."""
    if isinstance(e, AppliedUndef):
        return FunctionSymbol(e.func.__name__, tuple(e.args), (0,) * len(e.args))
    if isinstance(e, sp.Derivative) and isinstance(e.expr, AppliedUndef):
        f = e.expr
        counts = dict(e.variable_count)
        if not all(isinstance(a, sp.Symbol) for a in f.args) or len(set(f.args)) != len(f.args):
            return None
        if any(x not in f.args for x in counts):
            return None
        return FunctionSymbol(f.func.__name__, tuple(f.args), tuple(int(counts.get(a, 0)) for a in f.args))
    return None


def function_atoms(expr: sp.Expr) -> set[FunctionSymbol]:
    found = set()
    for node in sp.preorder_traversal(expr):
        fa = function_atom(node)
        if fa is not None:
            found.add(fa)
    return found


def has_functions(expr: sp.Expr) -> bool:
    return bool(expr.atoms(AppliedUndef))
