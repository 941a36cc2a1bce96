"""Euler operator, Hamiltonian flows, density search and the momentum check."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import sympy as sp

from .operators import CheckReport, ConditionRecord, NonHomOperator
from .symkernel import (
    Chart,
    default_fields,
    field_symbols,
    is_zero,
    jet,
    jets_in,
    normalize,
    total_derivative,
)
from .symkernel.zero import DEFAULT_TRIALS

CONVENTIONS = ("standard", "transposed")
SPECIAL_POWERS = (-2, -1, sp.Rational(-1, 2), sp.Rational(1, 2), sp.Rational(-3, 2), sp.Rational(-5, 2))


def other_direction(d: str) -> str:
    return "t" if d == "x" else "x"


@dataclass(frozen=True)
class Density:
    expr: sp.Expr
    direction: str = "x"
    fields: tuple[str, ...] = ("u",)

    def __post_init__(self):
        object.__setattr__(self, "expr", sp.sympify(self.expr))
        for sym, j in jets_in(self.expr, self.fields).items():
            if j.order and j.direction != self.direction:
                raise ValueError(f"density depends on {sym}, a jet outside direction {self.direction}")

    @property
    def order(self) -> int:
        return max((j.order for j in jets_in(self.expr, self.fields).values()), default=0)


@dataclass(frozen=True)
class EvolutionSystem:
    """u^i_{direction} = rhs[i]; rhs may contain jets in the other direction only."""

    rhs: tuple
    direction: str = "t"
    fields: tuple[str, ...] = ()
    constants: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rhs", tuple(sp.sympify(e) for e in self.rhs))
        if not self.fields:
            object.__setattr__(self, "fields", default_fields(len(self.rhs)))
        if len(self.fields) != len(self.rhs):
            raise ValueError("one right-hand side per field")
        for e in self.rhs:
            for sym, j in jets_in(e, self.fields).items():
                if j.order and j.direction == self.direction:
                    raise ValueError(f"right-hand side contains {sym}, a derivative in the evolution direction")

    @property
    def n(self) -> int:
        return len(self.rhs)

    def lhs(self) -> tuple:
        return tuple(jet(f, 1, self.direction) for f in self.fields)

    def normalized(self) -> "EvolutionSystem":
        return EvolutionSystem(tuple(normalize(e) for e in self.rhs), self.direction, self.fields, self.constants)

    def equations(self) -> list[str]:
        from .symkernel import to_text

        return [f"{to_text(l)} = {to_text(r)}" for l, r in zip(self.lhs(), self.rhs)]


@dataclass(frozen=True)
class MatrixOperator:
    """A matrix differential operator: entry (i, j) is sum_k coeffs[i][j][k] D^k."""

    coeffs: tuple
    direction: str = "x"
    fields: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(tuple(tuple(sp.sympify(c) for c in e) for e in row)
                                                 for row in self.coeffs))
        if not self.fields:
            object.__setattr__(self, "fields", default_fields(len(self.coeffs)))

    @property
    def n(self) -> int:
        return len(self.coeffs)

    @classmethod
    def scalar(cls, *coeffs, field="u", direction="x") -> "MatrixOperator":
        """c0 + c1 D + c2 D^2 + ... acting on one field."""
        return cls((((tuple(coeffs)),),), direction, (field,))

    def transposed(self) -> "MatrixOperator":
        n = self.n
        return MatrixOperator(tuple(tuple(self.coeffs[j][i] for j in range(n)) for i in range(n)),
                              self.direction, self.fields)

    def apply(self, vector) -> tuple:
        out = []
        for i in range(self.n):
            acc = sp.S.Zero
            for j, col in enumerate(self.coeffs[i]):
                term = sp.sympify(vector[j])
                for k, c in enumerate(col):
                    if c != 0:
                        acc += c * term
                    if k + 1 < len(col):
                        term = total_derivative(term, self.direction, self.fields)
            out.append(acc)
        return tuple(out)


def as_matrix_operator(C) -> MatrixOperator:
    if isinstance(C, MatrixOperator):
        return C
    if not isinstance(C, NonHomOperator):
        raise TypeError(f"cannot use {type(C).__name__} as an operator")
    vel = C.velocity()
    n = C.n
    return MatrixOperator(tuple(tuple((vel[i][j] + C.omega[i][j], C.g[i][j]) for j in range(n)) for i in range(n)),
                          C.direction, C.fields)


# -- Euler operator and flows ------------------------------------------------------


def euler(h, i, fields=None, direction: str | None = None) -> sp.Expr:
    """delta h / delta u^i = sum_s (-D)^s dh/du^i_s.  ``i`` is a field name or 0-based index."""
    if isinstance(h, Density):
        fields = fields or h.fields
        direction = direction or h.direction
        h = h.expr
    direction = direction or "x"
    fields = tuple(fields)
    name = fields[i] if isinstance(i, int) else i
    h = sp.sympify(h)
    top = max((j.order for j in jets_in(h, fields).values() if j.field == name), default=0)
    out = sp.S.Zero
    for s in range(top, -1, -1):
        # Horner scheme: out = dh/du_s - D(out)
        out = sp.diff(h, jet(name, s, direction)) - total_derivative(out, direction, fields)
    return normalize(out)


def gradient(h: Density) -> tuple:
    return tuple(euler(h, f) for f in h.fields)


def flow(C, h, convention: str = "standard") -> EvolutionSystem:
    """The Hamiltonian system u^i = C^{ij} delta H / delta u^j.

    ``convention="transposed"`` contracts the first index instead,
    u^i = C^{ji} delta H / delta u^j.  The evolution variable is the one the
    operator does not differentiate in.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    A = as_matrix_operator(C)
    if not isinstance(h, Density):
        h = Density(h, A.direction, A.fields)
    if tuple(h.fields) != tuple(A.fields):
        h = Density(h.expr, A.direction, A.fields)
    if h.direction != A.direction:
        raise ValueError("density and operator use different directions")
    E = [euler(h, f) for f in A.fields]
    if convention == "transposed":
        A = A.transposed()
    rhs = tuple(normalize(e) for e in A.apply(E))
    return EvolutionSystem(rhs, other_direction(A.direction), A.fields)


def flows_equal(s1: EvolutionSystem, s2: EvolutionSystem, trials: int = DEFAULT_TRIALS, seed: int = 0) -> bool:
    if s1.n != s2.n or s1.direction != s2.direction:
        raise ValueError("systems differ in size or direction")
    return all(is_zero(a - b, trials=trials, seed=seed) for a, b in zip(s1.rhs, s2.rhs))


# -- linear matching ---------------------------------------------------------------


def _linear_equations(columns, targets, params=()) -> list:
    """Equations sum_k c_k * columns[k][i] = targets[i] (all i) as sympy expressions in c.

    Each component is brought to a common denominator in one chart and its
    numerator split by monomials in everything except ``params``.
    """
    params = set(params)
    unknowns = [sp.Symbol(f"_c{k}") for k in range(len(columns))]
    exprs = [e for col in columns for e in col] + list(targets)
    chart = Chart([e for e in exprs if e != 0], extra_order=0)
    pidx = [i for i, s in enumerate(chart.symbols) if s in params]
    eqs = []
    for i, t in enumerate(targets):
        fr = [chart.convert(col[i]) for col in columns] + [chart.convert(-sp.sympify(t))]
        common: dict = {}
        for f in fr:
            for fid, e in f.den:
                common[fid] = max(common.get(fid, 0), e)
        buckets: dict = {}
        for k, f in enumerate(fr):
            if not f.num:
                continue
            rest = {fid: e - dict(f.den).get(fid, 0) for fid, e in common.items()}
            num = chart.reduce(f.num * chart._prod(rest))
            c = unknowns[k] if k < len(unknowns) else sp.S.One
            for mon, coeff in num.terms():
                key = tuple(0 if j in pidx else e for j, e in enumerate(mon))
                pval = sp.Mul(*[chart.ring.symbols[j] ** mon[j] for j in pidx])
                buckets[key] = buckets.get(key, sp.S.Zero) + c * sp.Rational(int(coeff.numerator),
                                                                                 int(coeff.denominator)) * pval
        eqs.extend(sp.expand(v) for v in buckets.values())
    return unknowns, [e for e in eqs if e != 0]


@dataclass
class LinearSolution:
    """Affine solution set  particular + span(kernel)  of a linear matching problem."""

    basis: list  # ansatz elements (Expr)
    coefficients: dict | None  # unknown name -> value (may contain free parameters t0, t1, ...)
    free: list = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return self.coefficients is None

    def __bool__(self) -> bool:
        return not self.empty

    def combination(self) -> sp.Expr | None:
        if self.empty:
            return None
        return sp.Add(*[self.coefficients[k] * b for k, b in enumerate(self.basis)])

    def particular(self) -> sp.Expr | None:
        if self.empty:
            return None
        return normalize(self.combination().xreplace({t: 0 for t in self.free}))

    def kernel(self) -> list:
        """Ansatz combinations spanning the free directions."""
        if self.empty:
            return []
        comb = self.combination()
        out = [normalize(sp.diff(comb, t)) for t in self.free]
        return [k for k in out if k != 0]


def linear_solve(columns, targets, basis, params=()) -> LinearSolution:
    unknowns, eqs = _linear_equations(columns, targets, params)
    if not eqs:
        sol = {k: sp.Symbol(f"t{k}") for k in range(len(unknowns))}
        return LinearSolution(list(basis), sol, [sol[k] for k in range(len(unknowns))])
    if not unknowns:
        if any(sp.sympify(e) != 0 for e in eqs):
            return LinearSolution(list(basis), None)
        return LinearSolution(list(basis), {}, [])
    res = sp.linsolve(eqs, unknowns)
    if not res:
        return LinearSolution(list(basis), None)
    (vals,) = tuple(res)
    free_syms = sorted(set().union(*[sp.sympify(x).free_symbols for x in vals]) & set(unknowns),
                       key=unknowns.index)
    ren = {u: sp.Symbol(f"t{unknowns.index(u)}") for u in free_syms}
    coeffs = {k: sp.sympify(x).xreplace(ren) for k, x in enumerate(vals)}
    return LinearSolution(list(basis), coeffs, [ren[u] for u in free_syms])


# -- density search ------------------------------------------------------------------


def monomials(variables, degree: int, min_degree: int = 0) -> list:
    out = []
    for d in range(min_degree, degree + 1):
        for combo in itertools.combinations_with_replacement(variables, d):
            out.append(sp.Mul(*combo))
    return out


def default_ansatz(fields, degree: int = 4, target: EvolutionSystem | None = None, special=()) -> list:
    """Monomials of total degree <= degree in the field variables, extended by
    u^(-2), u^(-1), u^(+-1/2), u^(-3/2), u^(-5/2) (times monomials of degree <= 2)
    for each field that appears with a negative or fractional exponent in the
    target, and for each field named in ``special``.

    With a target, the degree is raised to one more than the largest total
    degree of a target term in the field variables, so that a power-law
    nonlinearity u^n u_x has room for its u^(n+2) density.
    """
    syms = list(field_symbols(fields))
    marked = {s for s in syms if s.name in set(special)}
    if target is not None:
        degree = max(degree, _field_degree(target, syms) + 1)
        for e in target.rhs:
            for p in sp.sympify(e).atoms(sp.Pow):
                if p.base in syms and p.exp.is_Rational and (p.exp < 0 or not p.exp.is_Integer):
                    marked.add(p.base)
    basis = monomials(syms, degree)
    low = monomials(syms, 2)
    for s in sorted(marked, key=lambda s: s.name):
        for ex in SPECIAL_POWERS:
            basis.extend(normalize(s**ex * m) for m in low)
    return _dedupe(basis)


def _field_degree(target: EvolutionSystem, syms) -> int:
    top = 0
    for e in target.rhs:
        for t in sp.Add.make_args(sp.expand(e)):
            d = 0
            for b, ex in t.as_powers_dict().items():
                if b in syms and ex.is_Integer and ex > 0:
                    d += int(ex)
            top = max(top, d)
    return top


def find_density(C, target: EvolutionSystem, ansatz=None, *, convention: str = "standard", params=(),
                 degree: int = 4) -> LinearSolution:
    """All h = sum c_k m_k (m_k from the ansatz) with flow(C, h) = target.

    The problem is linear in the c_k and solved exactly; ``params`` are
    symbols (e.g. a constant ``a`` in the operator) kept in the coefficient field.
    """
    A = as_matrix_operator(C)
    if ansatz is None:
        ansatz = default_ansatz(A.fields, degree, target)
    columns = [flow(A, Density(m, A.direction, A.fields), convention).rhs for m in ansatz]
    return linear_solve(columns, target.rhs, ansatz, params)


def momentum_check(C, p, convention: str = "standard", trials: int = DEFAULT_TRIALS, seed: int = 0) -> CheckReport:
    """flow(C, p) must be the translation u^i -> u^i_d along the operator's own direction."""
    A = as_matrix_operator(C)
    if not isinstance(p, Density):
        p = Density(p, A.direction, A.fields)
    sys = flow(A, p, convention)
    rep = CheckReport(subject="momentum", seed=seed, trials=trials)
    rec = ConditionRecord("momentum.translation")
    for i, f in enumerate(A.fields):
        rec.checked += 1
        res = normalize(sys.rhs[i] - jet(f, 1, A.direction))
        if not is_zero(res, trials=trials, seed=seed):
            rec.failures.append(((i + 1,), res))
            rec.status = "fail"
    rep.records.append(rec)
    return rep


def bilinear_residual(C, a: Density, b: Density) -> sp.Expr:
    """sum_i da_i (C db)^i + db_i (C da)^i; a total derivative when C is skew-adjoint."""
    A = as_matrix_operator(C)
    Ea = [euler(a, f) for f in A.fields]
    Eb = [euler(b, f) for f in A.fields]
    Ca, Cb = A.apply(Ea), A.apply(Eb)
    return sp.expand(sum(x * y for x, y in zip(Ea, Cb)) + sum(x * y for x, y in zip(Eb, Ca)))


# -- sign resolution -------------------------------------------------------------------


@dataclass
class Resolution:
    """Outcome of checking a printed (operator, density, system) triple."""

    claim: str
    printed_verbatim: dict  # convention -> bool (printed density, flow vs target)
    sign_variants: dict  # (convention, label) -> bool
    searched: dict  # convention -> LinearSolution
    resolved: str | None = None  # human-readable resolution
    status: str = "fail"

    def to_dict(self) -> dict:
        from .symkernel import to_text

        return {
            "claim": self.claim,
            "status": self.status,
            "printed_verbatim": self.printed_verbatim,
            "sign_variants": {f"{c}/{lbl}": ok for (c, lbl), ok in self.sign_variants.items()},
            "density_search": {c: (to_text(s.particular()) if s else None) for c, s in self.searched.items()},
            "resolved": self.resolved,
        }


def sign_variants(h: sp.Expr) -> dict:
    """The printed density, its negative, and every single-term sign flip."""
    h = sp.expand(sp.sympify(h))
    terms = sp.Add.make_args(h)
    out = {"printed": h, "negated": -h}
    if len(terms) > 1:
        for k, t in enumerate(terms):
            out[f"flip {t}"] = h - 2 * t
    return out


def resolve(claim: str, C, printed_density, target: EvolutionSystem, ansatz=None, params=(),
            trials: int = DEFAULT_TRIALS, seed: int = 0) -> Resolution:
    """Sign-resolution protocol: test the printed triple under both contraction
    conventions, then every sign variant of the density, then search the ansatz."""
    A = as_matrix_operator(C)
    verbatim, variants, searched = {}, {}, {}
    for conv in CONVENTIONS:
        verbatim[conv] = flows_equal(flow(A, printed_density, conv), target, trials, seed)
        for label, hv in sign_variants(printed_density).items():
            variants[conv, label] = flows_equal(flow(A, hv, conv), target, trials, seed)
        base = ansatz
        if base is None:
            base = default_ansatz(A.fields, 4, target)
            extra = [m for m in sp.Add.make_args(sp.expand(printed_density))]
            base = base + [normalize(t / t.as_coeff_Mul()[0]) for t in extra]
        searched[conv] = find_density(A, target, _dedupe(base), convention=conv, params=params)
    res = Resolution(claim, verbatim, variants, searched)
    if verbatim["standard"]:
        res.status, res.resolved = "verified", "printed density, standard contraction C^{ij} dH/du^j"
    elif any(verbatim.values()) or any(variants.values()) or any(searched.values()):
        res.status = "verified-with-convention"
        parts = []
        for conv in CONVENTIONS:
            if verbatim[conv]:
                parts.append(f"printed density verifies with the {conv} contraction")
            for (c, lbl), ok in variants.items():
                if c == conv and ok and lbl != "printed":
                    parts.append(f"density variant '{lbl}' verifies with the {conv} contraction")
            if searched[conv]:
                from .symkernel import to_text

                parts.append(f"{conv}: ansatz search gives h = {to_text(searched[conv].particular())}")
        res.resolved = "; ".join(parts)
    return res


def _dedupe(items):
    seen, out = set(), []
    for x in items:
        x = sp.sympify(x)
        if x not in seen and x != 0:
            seen.add(x)
            out.append(x)
    return out
