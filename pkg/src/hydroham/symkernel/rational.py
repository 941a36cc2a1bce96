"""Exact rational-function arithmetic with radical atoms and function jets.

Every atom of a batch of expressions (symbols, applied arbitrary functions and
their derivatives, radicals ``b**(p/q)``) becomes a generator of one sparse
polynomial ring over QQ.  Values are :class:`Frac` objects: a polynomial
numerator over a product of irreducible denominator factors.  Denominators are
kept factored and never gcd-reduced during arithmetic, which keeps sums cheap;
the zero test only inspects the numerator after reducing every radical atom
``r`` by its relation ``r**q = base``.

Radical atoms are treated as algebraically independent over the rational
functions in the remaining generators (true for ``sqrt(2)``, ``sqrt(w)``,
``sqrt(1 + w**2)`` and any collection of distinct field variables).
"""

from __future__ import annotations

from dataclasses import dataclass

import sympy as sp
from sympy import QQ
from sympy.polys.polyerrors import ExactQuotientFailed
from sympy.polys.rings import PolyRing

from .jets import FunctionSymbol, function_atom


class KernelError(ValueError):
    """An expression falls outside what the kernel can represent."""


class Inconclusive(RuntimeError):
    """Normalization exceeded its resource bound; nothing was decided."""


@dataclass(frozen=True)
class Frac:
    num: object  # PolyElement
    den: tuple  # ((factor_id, exponent), ...) sorted by factor_id

    @property
    def is_poly(self) -> bool:
        return not self.den


@dataclass(frozen=True)
class _Radical:
    base: sp.Expr
    q: int


def _radical_key(base: sp.Expr, q: int) -> _Radical:
    return _Radical(sp.expand(base), int(q))


def _needs_denest(e: sp.Expr) -> bool:
    for p in e.atoms(sp.Pow):
        if p.exp.is_Rational and not p.exp.is_Integer and not (p.base.is_Symbol or p.base.is_Number):
            if isinstance(p.base, (sp.Pow, sp.Mul)):
                return True
    return False


def prepare(e: sp.Expr) -> sp.Expr:
    """Rewrite radicals of products and powers into radicals of single bases.

    Valid on the positive chart the catalog works on (every base with a
    fractional exponent is taken positive).
    """
    e = sp.sympify(e)
    if _needs_denest(e):
        e = sp.expand_power_base(sp.powdenest(e, force=True), force=True)
    return e


class Chart:
    """A polynomial ring big enough for a batch of expressions and their derivatives.

    ``extra_order`` bounds how many further derivatives of each arbitrary
    function may be requested through :meth:`diff`.
    """

    def __init__(self, exprs=(), *, extra_order: int = 3, max_terms: int = 200_000):
        self.max_terms = max_terms
        exprs = [prepare(e) for e in exprs]
        symbols: set[sp.Symbol] = set()
        functions: set[FunctionSymbol] = set()
        radicals: dict[_Radical, None] = {}
        for e in exprs:
            self._scan(e, symbols, functions, radicals)

        closed = set()
        for fa in functions:
            for extra in _multi_indices(len(fa.args), fa.order + extra_order):
                closed.add(FunctionSymbol(fa.name, fa.args, extra))
        self.functions = sorted(closed, key=lambda f: (f.name, tuple(map(str, f.args)), f.alpha))
        self.radicals = sorted(radicals, key=lambda r: (sp.default_sort_key(r.base), r.q))
        self.symbols = sorted(symbols, key=lambda s: s.name)

        gens = list(self.symbols)
        gens += [sp.Symbol(f"@{_fname(f)}") for f in self.functions]
        gens += [sp.Symbol(f"@({r.base})^(1/{r.q})") for r in self.radicals]
        self.ring = PolyRing(gens, QQ) if gens else PolyRing([sp.Symbol("@one")], QQ)
        self.gens = self.ring.gens
        self._gen_index = {}
        for i, s in enumerate(self.symbols):
            self._gen_index[s] = i
        off = len(self.symbols)
        self._func_index = {f: off + i for i, f in enumerate(self.functions)}
        off += len(self.functions)
        self._rad_index = {r: off + i for i, r in enumerate(self.radicals)}
        self._back = {}
        for f, i in self._func_index.items():
            self._back[self.ring.symbols[i]] = f.as_expr()
        for r, i in self._rad_index.items():
            self._back[self.ring.symbols[i]] = sp.Pow(r.base, sp.Rational(1, r.q))

        self._factors: list = []
        self._factor_ids: dict = {}
        self._factor_cache: dict = {}
        self._conv_cache: dict = {}
        self._dgen_cache: dict = {}
        self._rad_base: dict = {}
        self.one = Frac(self.ring.one, ())
        self.zero = Frac(self.ring.zero, ())
        for r, i in self._rad_index.items():
            base = self.convert(r.base)
            if base.den:
                raise KernelError(f"radicand {r.base} must be polynomial")
            self._rad_base[i] = (r.q, base.num)

    # -- scanning -------------------------------------------------------------

    def _scan(self, e, symbols, functions, radicals):
        stack = [e]
        while stack:
            node = stack.pop()
            fa = function_atom(node)
            if fa is not None:
                functions.add(fa)
                symbols.update(fa.args)
                continue
            if isinstance(node, sp.Symbol):
                symbols.add(node)
                continue
            if isinstance(node, sp.Pow) and node.exp.is_Rational and not node.exp.is_Integer:
                radicals.setdefault(_radical_key(node.base, node.exp.q), None)
            if isinstance(node, sp.Float):
                raise KernelError("floating-point numbers are not supported")
            stack.extend(node.args)

    # -- construction ---------------------------------------------------------

    def _factor_id(self, p) -> int:
        key = frozenset(p.items())
        fid = self._factor_ids.get(key)
        if fid is None:
            fid = len(self._factors)
            self._factors.append(p)
            self._factor_ids[key] = fid
        return fid

    def _split(self, p):
        """Irreducible monic factors of polynomial p: (rational content, {fid: k})."""
        key = frozenset(p.items())
        hit = self._factor_cache.get(key)
        if hit is not None:
            return hit
        if p.is_ground:
            res = (p.LC, {})
        else:
            c, facs = p.factor_list()
            den = {}
            for f, k in facs:
                lc = f.LC
                f = f.quo_ground(lc)
                c *= lc**k
                fid = self._factor_id(f)
                den[fid] = den.get(fid, 0) + k
            res = (c, den)
        self._factor_cache[key] = res
        return res

    def make(self, num, den: dict | None = None) -> Frac:
        if not num:
            return self.zero
        if not den:
            return Frac(num, ())
        return Frac(num, tuple(sorted((k, v) for k, v in den.items() if v)))

    def const(self, c) -> Frac:
        c = sp.Rational(c)
        return self.make(self.ring(QQ(int(c.p), int(c.q))))

    def gen(self, sym) -> Frac:
        return Frac(self.gens[self._gen_index[sym]], ())

    # -- arithmetic -----------------------------------------------------------

    def add(self, a: Frac, b: Frac) -> Frac:
        if not a.num:
            return b
        if not b.num:
            return a
        if a.den == b.den:
            return self.make(a.num + b.num, dict(a.den))
        da, db = dict(a.den), dict(b.den)
        common = {k: max(da.get(k, 0), db.get(k, 0)) for k in set(da) | set(db)}
        na = a.num * self._prod({k: common[k] - da.get(k, 0) for k in common})
        nb = b.num * self._prod({k: common[k] - db.get(k, 0) for k in common})
        return self._bounded(self.make(na + nb, common))

    def neg(self, a: Frac) -> Frac:
        return Frac(-a.num, a.den)

    def sub(self, a: Frac, b: Frac) -> Frac:
        return self.add(a, self.neg(b))

    def mul(self, a: Frac, b: Frac) -> Frac:
        if not a.num or not b.num:
            return self.zero
        den = dict(a.den)
        for k, v in b.den:
            den[k] = den.get(k, 0) + v
        return self._bounded(self.make(a.num * b.num, den))

    def scale(self, a: Frac, c) -> Frac:
        if not a.num or c == 0:
            return self.zero
        return Frac(a.num * QQ.convert(c), a.den)

    def inv(self, a: Frac) -> Frac:
        if not a.num:
            raise ZeroDivisionError("division by the zero expression")
        c, den = self._split(a.num)
        num = self._prod(dict(a.den)).quo_ground(c)
        return self.make(num, den)

    def div(self, a: Frac, b: Frac) -> Frac:
        return self.mul(a, self.inv(b))

    def pow(self, a: Frac, k: int) -> Frac:
        if k < 0:
            return self.pow(self.inv(a), -k)
        if k == 0:
            return self.one
        return self.make(a.num**k, {f: e * k for f, e in a.den})

    def total(self, items) -> Frac:
        acc = self.zero
        for it in items:
            acc = self.add(acc, it)
        return acc

    def _prod(self, den: dict):
        p = self.ring.one
        for fid, k in den.items():
            if k:
                p = p * self._factors[fid] ** k
        return p

    def _bounded(self, a: Frac) -> Frac:
        if len(a.num) > self.max_terms:
            raise Inconclusive(f"intermediate numerator exceeded {self.max_terms} terms")
        return a

    # -- conversion -----------------------------------------------------------

    def convert(self, e) -> Frac:
        e = prepare(e)
        return self._conv(e)

    def _conv(self, e) -> Frac:
        hit = self._conv_cache.get(e)
        if hit is not None:
            return hit
        res = self._conv_uncached(e)
        self._conv_cache[e] = res
        return res

    def _conv_uncached(self, e) -> Frac:
        if e.is_Number:
            if isinstance(e, sp.Float):
                raise KernelError("floating-point numbers are not supported")
            if not e.is_Rational:
                raise KernelError(f"unsupported number {e}")
            return self.make(self.ring(QQ(int(e.p), int(e.q))))
        fa = function_atom(e)
        if fa is not None:
            idx = self._func_index.get(fa)
            if idx is None:
                raise KernelError(f"function jet {e} is outside this chart")
            return Frac(self.gens[idx], ())
        if isinstance(e, sp.Symbol):
            idx = self._gen_index.get(e)
            if idx is None:
                raise KernelError(f"symbol {e} is outside this chart")
            return Frac(self.gens[idx], ())
        if isinstance(e, sp.Add):
            return self.total(self._conv(a) for a in e.args)
        if isinstance(e, sp.Mul):
            acc = self.one
            for a in e.args:
                acc = self.mul(acc, self._conv(a))
            return acc
        if isinstance(e, sp.Pow):
            ex = e.exp
            if ex.is_Integer:
                return self.pow(self._conv(e.base), int(ex))
            if ex.is_Rational:
                rad = _radical_key(e.base, ex.q)
                idx = self._rad_index.get(rad)
                if idx is None:
                    raise KernelError(f"radical {e} is outside this chart")
                whole, rest = divmod(int(ex.p), int(ex.q))
                val = Frac(self.gens[idx] ** rest, ())
                if whole:
                    val = self.mul(val, self.pow(self._conv(e.base), whole))
                return val
        raise KernelError(f"cannot represent {e!r} exactly")

    # -- differentiation ------------------------------------------------------

    def _dgen(self, i: int, var) -> Frac:
        key = (i, var)
        hit = self._dgen_cache.get(key)
        if hit is not None:
            return hit
        res = self.zero
        nsym = len(self.symbols)
        nfun = len(self.functions)
        if i < nsym:
            if self.symbols[i] == var:
                res = self.one
        elif i < nsym + nfun:
            fa = self.functions[i - nsym]
            terms = []
            for slot, arg in enumerate(fa.args):
                if arg == var:
                    bumped = fa.bump(slot)
                    j = self._func_index.get(bumped)
                    if j is None:
                        raise KernelError(
                            f"derivative {_fname(bumped)} needs a larger extra_order for this chart"
                        )
                    terms.append(Frac(self.gens[j], ()))
            res = self.total(terms)
        else:
            q, base = self._rad_base[i]
            dbase = self.diff(Frac(base, ()), var)
            if dbase.num:
                # d(b^(1/q)) = r * db / (q b)
                r = Frac(self.gens[i], ())
                res = self.div(self.mul(r, dbase), self.scale(Frac(base, ()), q))
        self._dgen_cache[key] = res
        return res

    def _dpoly(self, p, var) -> Frac:
        acc = self.zero
        degs = p.degrees()
        for i, d in enumerate(degs):
            if d <= 0:
                continue
            dg = self._dgen(i, var)
            if not dg.num:
                continue
            acc = self.add(acc, self.mul(Frac(p.diff(self.gens[i]), ()), dg))
        return acc

    def diff(self, a: Frac, var) -> Frac:
        """Partial derivative with respect to a symbol (chain rule through every atom)."""
        if not a.num:
            return self.zero
        if var not in self._gen_index:
            return self.zero
        dn = self._dpoly(a.num, var)
        if not a.den:
            return dn
        den = dict(a.den)
        out = self.make(dn.num, _merge(dict(dn.den), den)) if dn.num else self.zero
        for fid, k in a.den:
            dfac = self._dpoly(self._factors[fid], var)
            if not dfac.num:
                continue
            # -k N f' / (f * D)
            term = self.mul(Frac(a.num * (-k), a.den), dfac)
            term = self.mul(term, Frac(self.ring.one, ((fid, 1),)))
            out = self.add(out, term)
        return out

    # -- decisions ------------------------------------------------------------

    def reduce(self, p):
        """Reduce a numerator modulo every radical relation r**q = base."""
        for i, (q, base) in self._rad_base.items():
            keep = {}
            extra = self.ring.zero
            for monom, c in p.items():
                e = monom[i]
                if e < q:
                    keep[monom] = keep.get(monom, 0) + c
                else:
                    m, s = divmod(e, q)
                    mon = monom[:i] + (s,) + monom[i + 1:]
                    extra += self.ring({mon: c}) * base**m
            p = self.ring(keep) + extra
            if len(p) > self.max_terms:
                raise Inconclusive(f"reduced numerator exceeded {self.max_terms} terms")
        return p

    def is_zero(self, a: Frac) -> bool:
        if not a.num:
            return True
        if not self._rad_base:
            return False
        return not self.reduce(a.num)

    def to_expr(self, a: Frac) -> sp.Expr:
        """Canonical sympy form: reduced numerator over the surviving denominator factors."""
        num = self.reduce(a.num) if a.num else a.num
        if not num:
            return sp.S.Zero
        den = dict(a.den)
        for fid in sorted(den):
            f = self._factors[fid]
            while den[fid]:
                try:
                    num = num.exquo(f)
                except ExactQuotientFailed:
                    break
                den[fid] -= 1
        expr = num.as_expr()
        for fid in sorted(den):
            if den[fid]:
                expr = expr / self._factors[fid].as_expr() ** den[fid]
        return expr.xreplace(self._back) if self._back else expr


def _merge(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + v
    return out


def _fname(f: FunctionSymbol) -> str:
    args = ",".join(str(a) for a in f.args)
    if not any(f.alpha):
        return f"{f.name}({args})"
    return f"{f.name}[{','.join(map(str, f.alpha))}]({args})"


def _multi_indices(arity: int, max_total: int):
    if arity == 0:
        yield ()
        return
    for first in range(max_total + 1):
        for rest in _multi_indices(arity - 1, max_total - first):
            yield (first,) + rest
