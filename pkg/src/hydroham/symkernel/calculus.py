"""Partial and total derivatives on jet space, and simultaneous substitution."""

from __future__ import annotations

from collections.abc import Mapping

import sympy as sp
from sympy.core.function import AppliedUndef, UndefinedFunction

from .jets import DEFAULT_FIELDS, JetVariable, jet, jets_in
from .rational import KernelError

SLOTS = tuple(sp.Symbol(f"arg{i}") for i in range(1, 10))


def partial(e: sp.Expr, var) -> sp.Expr:
    """d e / d var, where var is a symbol or a JetVariable."""
    if isinstance(var, JetVariable):
        var = var.symbol
    return sp.diff(sp.sympify(e), var)


def total_derivative(e: sp.Expr, direction: str = "x", fields=DEFAULT_FIELDS) -> sp.Expr:
    """D e = sum over jets u^i_s of (d e / d u^i_s) * u^i_{s+1}."""
    e = sp.sympify(e)
    out = sp.S.Zero
    for sym, j in sorted(jets_in(e, fields).items(), key=lambda kv: kv[1]):
        if j.order and j.direction != direction:
            raise ValueError(f"{sym} is a jet in the other direction; D_{direction} is undefined on it")
        out += sp.diff(e, sym) * jet(j.field, j.order + 1, direction)
    return out


def _function_name(key) -> str | None:
    if isinstance(key, UndefinedFunction):
        return key.__name__
    if isinstance(key, str):
        return key
    return None


def substitute(e: sp.Expr, bindings: Mapping) -> sp.Expr:
    """Simultaneous substitution of symbols and arbitrary functions.

    A function binds to a body written in the slot symbols ``arg1, arg2, ...``
    (or to a :class:`sympy.Lambda`); derivatives of the function become the
    corresponding derivatives of the body.  String keys name a function when
    one of that name occurs in ``e`` and a symbol otherwise.
    """
    e = sp.sympify(e)
    present = {f.func.__name__: len(f.args) for f in e.atoms(AppliedUndef)}
    fbind, sbind = {}, {}
    for key, val in bindings.items():
        name = _function_name(key)
        if name is not None and (name in present or isinstance(key, UndefinedFunction)):
            fbind[name] = val
        elif isinstance(key, (sp.Symbol, str)):
            sbind[sp.Symbol(key) if isinstance(key, str) else key] = sp.sympify(val)
        else:
            raise TypeError(f"cannot bind {key!r}")

    for name, val in fbind.items():
        if name not in present:
            continue
        arity = present[name]
        if isinstance(val, sp.Lambda):
            if len(val.variables) != arity:
                raise KernelError(f"{name} has arity {arity}, binding takes {len(val.variables)}")
            lam = val
        else:
            body = sp.sympify(val)
            used = [s for s in body.free_symbols if s in SLOTS]
            if any(SLOTS.index(s) >= arity for s in used):
                raise KernelError(f"binding for {name} uses a slot beyond its arity {arity}")
            lam = sp.Lambda(SLOTS[:arity], body)
        e = e.replace(lambda x, n=name: isinstance(x, AppliedUndef) and x.func.__name__ == n,
                      lambda x, lam=lam: lam(*x.args))
        if e.has(sp.Derivative):
            e = e.doit()

    if sbind:
        moved = {s for s, v in sbind.items() if not isinstance(v, sp.Symbol)}
        for f in e.atoms(AppliedUndef):
            if moved & set(f.args):
                raise KernelError(f"unbound function {f} would be composed with a substitution")
        e = e.xreplace(sbind)
    return e
