"""Degenerate 1+0 operators in two and three components as parameterized constructors.

Each entry stores its matrices as grammar text (leading part, the velocity
matrix b^{ij}_k u^k_x and the tail), the arbitrary functions with their
arguments, chart conditions, side constraints and a few single-entry
mutations that must break Hamiltonianity.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import sympy as sp

from .operators import CheckReport, ConditionRecord, NonHomOperator, check_full, generic_rank
from .symkernel import SLOTS, is_zero, normalize, parse, substitute, to_text
from .symkernel.zero import DEFAULT_TRIALS, NONZERO_COEFFS, random_polynomial, specialization_seed

u, v, w = sp.symbols("u v w")
S1 = sp.sqrt(1 + w**2)


@dataclass(frozen=True)
class Mutation:
    label: str
    section: str  # "omega" or "velocity"
    i: int  # 1-based; the (j, i) entry gets the skew partner
    j: int
    text: str
    breaks: str  # condition id expected to fail
    skew: bool = True  # also overwrite the (j, i) entry with the negated value


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    n: int
    rank: int
    g: tuple
    velocity: tuple
    omega: tuple
    functions: dict  # name -> argument names
    constants: tuple = ()
    charts: tuple = ()
    constraint: str | None = None  # "f-integral" or "41"
    surds: tuple = (2,)
    mutations: tuple = ()
    note: str = ""

    @property
    def fields(self):
        return ("u", "v") if self.n == 2 else ("u", "v", "w")

    def _parse(self, text):
        return parse(text, self.fields, self.constants, {k: len(a) for k, a in self.functions.items()}, self.surds)

    def matrices(self):
        g = [[self._parse(x) for x in row] for row in self.g]
        vel = [[self._parse(x) for x in row] for row in self.velocity]
        om = [[self._parse(x) for x in row] for row in self.omega]
        return g, vel, om

    def template(self) -> NonHomOperator:
        """The operator with free function symbols and constants."""
        g, vel, om = self.matrices()
        return NonHomOperator.build(g, om, velocity=vel, fields=self.fields)


def _skew(upper: dict, n: int) -> tuple:
    """Full skew matrix (as text) from {(i, j): text} on the upper triangle, 1-based."""
    m = [["0"] * n for _ in range(n)]
    for (i, j), t in upper.items():
        m[i - 1][j - 1] = t
        m[j - 1][i - 1] = f"-({t})"
    return tuple(tuple(r) for r in m)


def _diag(*d) -> tuple:
    n = len(d)
    return tuple(tuple(d[i] if i == j else "0" for j in range(n)) for i in range(n))


G_11_2 = _diag("1", "0")
G_11 = _diag("1", "0", "0")
G_1122 = _diag("1", "1", "0")
G_1221 = (("0", "1", "0"), ("1", "0", "0"), ("0", "0", "0"))
D = "(u*w-v)"

ENTRIES: dict[str, CatalogEntry] = {}


def _add(e: CatalogEntry):
    ENTRIES[e.id] = e


_add(CatalogEntry(
    "C_{2,1}", 2, 1, G_11_2, _skew({}, 2), _skew({(1, 2): "f(v)"}, 2), {"f": ("v",)},
    mutations=(Mutation("tail depends on u", "omega", 1, 2, "f(u)", "compatibility.phi_cyclic"),),
))
_add(CatalogEntry(
    "C_{2,2}", 2, 1, G_11_2, _skew({(1, 2): "-v_x/u"}, 2), _skew({(1, 2): "f(v)/u"}, 2), {"f": ("v",)},
    charts=("u != 0",),
    mutations=(Mutation("dropped denominator u in the tail", "omega", 1, 2, "f(v)", "compatibility.phi_cyclic"),),
))
_add(CatalogEntry(
    "C_{3,1}", 3, 0, _diag("0", "0", "0"), _skew({(1, 2): "w_x"}, 3), _skew({(1, 2): "f(u,v,w)"}, 3),
    {"f": ("u", "v", "w")},
    mutations=(Mutation("extra tail entry (2,3)", "omega", 2, 3, "u", "compatibility.phi_cyclic"),),
))
_add(CatalogEntry(
    "C_{3,2}", 3, 1, G_11, _skew({}, 3), _skew({(1, 2): "f(v,w)", (1, 3): "g(v,w)", (2, 3): "h(v,w)"}, 3),
    {"f": ("v", "w"), "g": ("v", "w"), "h": ("v", "w"), "l": ("w",)},
    constraint="f-integral",
    mutations=(Mutation("tail entry (2,3) depends on u", "omega", 2, 3, "u*h(v,w)", "compatibility.phi_cyclic"),),
))
_add(CatalogEntry(
    "C_{3,3}", 3, 1, G_11, _skew({(1, 2): "w_x"}, 3), _skew({(1, 2): "f(v,w)"}, 3), {"f": ("v", "w")},
    mutations=(Mutation("nonzero tail entry (2,3)", "omega", 2, 3, "1", "compatibility.phi_cyclic"),),
))
_add(CatalogEntry(
    "C_{3,4}", 3, 1, G_11, _skew({(1, 3): "-w_x/u"}, 3), _skew({(1, 3): "f(v,w)/u"}, 3), {"f": ("v", "w")},
    charts=("u != 0",),
    mutations=(Mutation("dropped denominator u in the tail", "omega", 1, 3, "f(v,w)", "compatibility.phi_cyclic"),),
))
_add(CatalogEntry(
    "C_{3,5}", 3, 1, G_11, _skew({(1, 2): "-v_x/u", (1, 3): "-w_x/u"}, 3),
    _skew({(1, 2): "f(v,w)/u", (1, 3): "g(v,w)/u", (2, 3): "h(v,w)/u"}, 3),
    {"f": ("v", "w"), "g": ("v", "w"), "h": ("v", "w"), "l": ("w",)},
    charts=("u != 0",), constraint="f-integral",
    mutations=(Mutation("dropped denominator u in entry (2,3)", "omega", 2, 3, "h(v,w)",
                        "compatibility.phi_cyclic"),),
))
_add(CatalogEntry(
    "C_{3,6}", 3, 2, G_1122, _skew({}, 3), _skew({(1, 2): "f(w)", (1, 3): "g(w)", (2, 3): "c*g(w)"}, 3),
    {"f": ("w",), "g": ("w",)}, constants=("c",),
    mutations=(Mutation("c-coupling broken at (2,3)", "omega", 2, 3, "c*(g(w)+w)",
                        "ultralocal.jacobi"),),
))
_add(CatalogEntry(
    "C_{3,7}", 3, 2, G_1122, _skew({(2, 3): "-w_x/v"}, 3),
    _skew({(1, 3): "c*f(w)", (2, 3): "(1-c*u)*f(w)/v"}, 3), {"f": ("w",)}, constants=("c",),
    charts=("v != 0",),
    mutations=(Mutation("c-coupling broken at (2,3)", "omega", 2, 3, "(1+c*u)*f(w)/v", "compatibility.phi_cyclic"),),
))
_add(CatalogEntry(
    "C_{3,8}", 3, 2, G_1122, _skew({(1, 3): f"-w*w_x/{D}", (2, 3): f"w_x/{D}"}, 3),
    _skew({(1, 2): "f(w)",
           (1, 3): f"(1+w^2)*f(w)*(w-c*v*sqrt(1+w^2))/{D}",
           (2, 3): f"-(1+w^2)*f(w)*(1-c*u*sqrt(1+w^2))/{D}"}, 3),
    {"f": ("w",)}, constants=("c",), charts=("u*w - v != 0",), surds=(2, "1+w^2"),
    mutations=(Mutation("sign of the surd flipped at (1,3)", "omega", 1, 3,
                        f"(1+w^2)*f(w)*(w+c*v*sqrt(1+w^2))/{D}", "compatibility.phi_cyclic"),),
))
_add(CatalogEntry(
    "C_{3,9}", 3, 2, G_1221, _skew({}, 3), _skew({(1, 2): "f(w)", (1, 3): "c*g(w)", (2, 3): "g(w)"}, 3),
    {"f": ("w",), "g": ("w",)}, constants=("c",),
    mutations=(Mutation("c-coupling broken at (1,3)", "omega", 1, 3, "c*(g(w)+w)",
                        "ultralocal.jacobi"),),
))
_add(CatalogEntry(
    "C_{3,10}", 3, 2, G_1221, _skew({(1, 3): "-w_x/v"}, 3),
    _skew({(1, 2): "f(w)", (1, 3): "(h(w)-u*g(w))/v", (2, 3): "g(w)"}, 3),
    {"f": ("w",), "g": ("w",), "h": ("w",)}, charts=("v != 0",), constraint="41",
    mutations=(Mutation("sign flip of u*g(w) at (1,3)", "omega", 1, 3, "(h(w)+u*g(w))/v", "compatibility.phi_cyclic"),),
))
_add(CatalogEntry(
    "C_{3,11}", 3, 2, G_1221, _skew({(1, 3): f"w_x/{D}", (2, 3): f"-w*w_x/{D}"}, 3),
    _skew({(1, 2): "c*f(w)/w^(1/2)",
           (1, 3): f"f(w)*(u*w-2*c*w^(1/2))/{D}",
           (2, 3): f"-f(w)*w*(v-2*c*w^(1/2))/{D}"}, 3),
    {"f": ("w",)}, constants=("c",), charts=("u*w - v != 0", "w > 0"),
    note="entry (3,2) is the skew partner of (2,3): f(w)*w*(v-2*c*w^(1/2))/(u*w-v)",
    mutations=(Mutation("(3,2) entry with a duplicated factor w", "omega", 3, 2,
                        f"f(w)*w^2*(v-2*c*w^(1/2))/{D}", "ultralocal.skew", skew=False),
               Mutation("duplicated factor w in the (2,3)/(3,2) pair", "omega", 2, 3,
                        f"-f(w)*w^2*(v-2*c*w^(1/2))/{D}", "ultralocal.jacobi")),
))


def get(entry_id: str) -> CatalogEntry:
    key = entry_id.replace(" ", "")
    if not key.startswith("C_{"):
        # accept short forms like C32 or 3,2
        digits = key.strip("C_{}").replace(",", "")
        key = f"C_{{{digits[0]},{digits[1:]}}}" if len(digits) >= 2 else key
    try:
        return ENTRIES[key]
    except KeyError:
        raise KeyError(f"unknown catalog entry {entry_id!r}") from None


def enumerate(n: int, rank: int | None = None) -> list[CatalogEntry]:  # noqa: A001
    if n not in (2, 3):
        raise ValueError(f"the catalog covers n = 2 and n = 3, not n = {n}")
    return [e for e in ENTRIES.values() if e.n == n and (rank is None or e.rank == rank)]


# -- side constraints -----------------------------------------------------------


@dataclass
class FConstraint:
    f: sp.Expr | None
    relation: sp.Expr  # residual, zero iff the closure relation holds


def closure_relation(f, g, h) -> sp.Expr:
    """h d_v f - f d_v h - g d_w h + h d_w g (vanishes iff the tail closes)."""
    return h * sp.diff(f, v) - f * sp.diff(h, v) - g * sp.diff(h, w) + h * sp.diff(g, w)


def constraint_f(g, h, l) -> FConstraint:
    """f = h (l + antiderivative in v of (g d_w h - h d_w g)/h^2).

    The antiderivative is taken in closed form when the integrand is a
    polynomial in v; the integration constant is absorbed into l.  Otherwise
    only the relation is returned, with f left as the symbol f(v,w).
    """
    g, h, l = map(sp.sympify, (g, h, l))
    if is_zero(h):
        raise ValueError("h must not vanish identically")
    integrand = sp.cancel((g * sp.diff(h, w) - h * sp.diff(g, w)) / h**2)
    num, den = sp.fraction(integrand)
    if den.has(v) or not num.is_polynomial(v):
        fsym = sp.Function("f")(v, w)
        return FConstraint(None, closure_relation(fsym, g, h))
    prim = sp.Poly(num, v).integrate().as_expr() / den
    f = normalize(h * (l + prim))
    return FConstraint(f, normalize(closure_relation(f, g, h)))


def constraint_41(f, g, h) -> sp.Expr:
    """h g' - g (f + h') for functions of w."""
    f, g, h = map(sp.sympify, (f, g, h))
    return normalize(h * sp.diff(g, w) - g * (f + sp.diff(h, w)))


class ConstraintError(ValueError):
    def __init__(self, message, residual):
        super().__init__(f"{message}: residual {to_text(residual)}")
        self.residual = residual


# -- instantiation --------------------------------------------------------------


def _body(expr, args) -> sp.Expr:
    """Rewrite a binding given in the function's own arguments into slot symbols."""
    syms = [sp.Symbol(a) for a in args]
    e = sp.sympify(expr)
    extra = {s for s in e.free_symbols if s.name in ("u", "v", "w")} - set(syms)
    if extra:
        raise ValueError(f"binding depends on {sorted(map(str, extra))}, outside the arguments {args}")
    return e.xreplace(dict(zip(syms, SLOTS)))


def instantiate(entry_id: str, bindings: dict | None = None, **kw) -> NonHomOperator:
    """Concrete operator from an entry and bindings {function name or constant: Expr}.

    Functions are bound by expressions in their own arguments, e.g.
    ``{"f": v**2}`` for f(v).  For the entries with the integral constraint f
    may be omitted and is then built from g, h and l.
    """
    e = get(entry_id)
    b = {k: sp.sympify(x) for k, x in {**(bindings or {}), **kw}.items()}
    unknown = set(b) - set(e.functions) - set(e.constants)
    if unknown:
        raise ValueError(f"{e.id} has no parameter(s) {sorted(unknown)}")

    if e.constraint == "f-integral":
        for name in ("g", "h"):
            if name not in b:
                raise ValueError(f"{e.id} needs a binding for {name}")
        if "f" not in b:
            if "l" not in b:
                raise ValueError(f"{e.id} needs f, or l to build f from g and h")
            fc = constraint_f(b["g"], b["h"], b["l"])
            if fc.f is None:
                raise ValueError("the integral is not elementary here; bind f directly")
            b["f"] = fc.f
        res = normalize(closure_relation(b["f"], b["g"], b["h"]))
        if not is_zero(res):
            raise ConstraintError(f"{e.id} bindings violate the closure relation", res)
    elif e.constraint == "41":
        for name in ("f", "g", "h"):
            if name not in b:
                raise ValueError(f"{e.id} needs a binding for {name}")
        res = constraint_41(b["f"], b["g"], b["h"])
        if not is_zero(res):
            raise ConstraintError(f"{e.id} bindings violate h g' - g (f + h') = 0", res)

    fb = {name: _body(b[name], args) for name, args in e.functions.items() if name in b}
    cb = {sp.Symbol(c): b[c] for c in e.constants if c in b}
    T = e.template()
    sub = lambda x: normalize(substitute(x, {**fb, **cb})) if x != 0 else x  # noqa: E731
    n = T.n
    g = [[sub(T.g[i][j]) for j in range(n)] for i in range(n)]
    bb = [[[sub(T.b[i][j][k]) for k in range(n)] for j in range(n)] for i in range(n)]
    om = [[sub(T.omega[i][j]) for j in range(n)] for i in range(n)]
    return T.with_entries(g, bb, om)


def mutate(entry_id: str, mutation: Mutation, bindings: dict) -> NonHomOperator:
    """Instantiate, then overwrite one skew pair of the tail or velocity matrix."""
    e = get(entry_id)
    C = instantiate(entry_id, bindings)
    val = e._parse(mutation.text)
    binds = {k: _body(x, e.functions[k]) for k, x in bindings.items() if k in e.functions}
    binds.update({sp.Symbol(c): bindings[c] for c in e.constants if c in bindings})
    val = normalize(substitute(val, binds))
    i, j = mutation.i - 1, mutation.j - 1
    if mutation.section == "omega":
        om = [list(r) for r in C.omega]
        om[i][j] = val
        if mutation.skew:
            om[j][i] = -val
        return C.with_entries(omega=om)
    vel = [list(r) for r in C.velocity()]
    vel[i][j] = val
    if mutation.skew:
        vel[j][i] = -val
    other = NonHomOperator.build(C.g, C.omega, velocity=vel, fields=C.fields)
    return C.with_entries(b=other.b)


# -- randomized verification -------------------------------------------------------


def _poly(vars_, degree, rng):
    return random_polynomial([sp.Symbol(a) for a in vars_], degree, rng)


def _const(rng) -> sp.Rational:
    return sp.Rational(rng.choice(NONZERO_COEFFS), rng.randint(1, 5))


def random_bindings(entry_id: str, rng: random.Random, degree: int = 2) -> dict:
    """Random bindings that respect the entry's side constraints by construction."""
    e = get(entry_id)
    b = {c: _const(rng) for c in e.constants}
    if e.constraint == "f-integral":
        # g = h d_v M and f = h (l - d_w M) solve the closure relation for any h, M, l
        h = _poly(("v", "w"), degree, rng)
        M = _poly(("v", "w"), degree + 1, rng)
        l = _poly(("w",), degree, rng)
        b.update(h=h, g=sp.expand(h * sp.diff(M, v)), f=sp.expand(h * (l - sp.diff(M, w))))
        return b
    if e.constraint == "41":
        g = _poly(("w",), degree, rng)
        h = _poly(("w",), degree, rng)
        b.update(g=g, h=h, f=sp.cancel((h * sp.diff(g, w) - g * sp.diff(h, w)) / g))
        return b
    for name, args in e.functions.items():
        b[name] = _poly(args, degree, rng)
    return b


def verify_entry(entry_id: str, trials: int = DEFAULT_TRIALS, seed: int = 0, degree: int = 2,
                 check_trials: int = DEFAULT_TRIALS) -> CheckReport:
    """check_full on ``trials`` random constraint-respecting instantiations."""
    e = get(entry_id)
    out = CheckReport(subject=f"verify {e.id}", seed=seed, trials=trials)
    agg: dict[str, ConditionRecord] = {}
    for t in range(trials):
        rng = random.Random(specialization_seed(seed, t))
        b = random_bindings(e.id, rng, degree)
        C = instantiate(e.id, b)
        rep = check_full(C, seed=seed, trials=check_trials, subject=e.id)
        for r in rep.records:
            a = agg.setdefault(r.condition, ConditionRecord(r.condition))
            a.checked += r.checked
            a.failures.extend(r.failures)
            a.inconclusive.extend(r.inconclusive)
            if r.status == "fail" or (r.status == "inconclusive" and a.status == "pass"):
                a.status = r.status
        if not rep.passed:
            out.notes.append(f"trial {t} failed with bindings "
                             + ", ".join(f"{k} = {to_text(x)}" for k, x in sorted(b.items())))
    out.records = sorted(agg.values(), key=lambda r: r.condition)
    rank = generic_rank(e.template().g)
    if rank != e.rank:
        out.records.append(ConditionRecord("catalog.rank", "fail", 1, [((), sp.Integer(rank - e.rank))]))
    return out
