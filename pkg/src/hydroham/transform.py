"""Inversion of scalar evolution equations and point changes of variables."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import sympy as sp
from sympy.core.function import AppliedUndef

from . import catalog
from .operators import NonHomOperator, check_full
from .symkernel import (
    SLOTS,
    KernelError,
    decode,
    field_symbols,
    is_zero,
    jet,
    jets_in,
    normalize,
    parse,
    substitute,
)
from .variational import EvolutionSystem


class NotInvertible(ValueError):
    pass


@dataclass(frozen=True)
class ScalarEvolutionEquation:
    """u_t = F1 + F2 * u_{kx}, with F1, F2 depending on u, u_x, ..., u_{(k-1)x}."""

    F1: sp.Expr
    F2: sp.Expr
    order: int
    field: str = "u"

    def rhs(self) -> sp.Expr:
        return self.F1 + self.F2 * jet(self.field, self.order)

    @classmethod
    def from_text(cls, text: str, field: str = "u", constants=()) -> "ScalarEvolutionEquation":
        """Read ``u_t = ...`` or any equation ``A = B`` linear in u_t."""
        if "=" in text:
            lhs, rhs = text.split("=", 1)
        else:
            lhs, rhs = text, "0"
        e = parse(lhs, (field,), constants) - parse(rhs, (field,), constants)
        ut = jet(field, 1, "t")
        for s in e.free_symbols:
            base, order, d = decode(s.name)
            if base == field and d == "t" and order > 1:
                raise NotInvertible(f"{s} appears; only first-order evolution equations are supported")
        c = normalize(sp.diff(e, ut))
        if is_zero(c) or c.has(ut):
            raise NotInvertible("equation is not linear in u_t")
        if any(j.direction == "t" for j in jets_in(c, (field,)).values() if j.order):
            raise NotInvertible("coefficient of u_t depends on t-derivatives")
        F = normalize(-(e - c * ut) / c)
        if F.has(ut):
            raise NotInvertible("equation is not linear in u_t")
        return cls.from_rhs(F, field)

    @classmethod
    def from_rhs(cls, F, field: str = "u") -> "ScalarEvolutionEquation":
        F = sp.sympify(F)
        orders = [j.order for j in jets_in(F, (field,)).values() if j.order]
        k = max(orders, default=0)
        if k == 0:
            raise NotInvertible("not invertible: equation not linear in top derivative (no x-derivative present)")
        top = jet(field, k)
        F2 = normalize(sp.diff(F, top))
        if is_zero(F2):
            raise NotInvertible("not invertible: equation not linear in top derivative")
        if F2.has(top):
            raise NotInvertible("not invertible: equation not linear in top derivative")
        F1 = normalize(F - F2 * top)
        if F1.has(top):
            raise NotInvertible("not invertible: equation not linear in top derivative")
        return cls(F1, F2, k, field)


def invert_equation(eq: ScalarEvolutionEquation, names=None) -> EvolutionSystem:
    """x-evolution system in u^1 = u, u^2 = u_x, ..., u^k = u_{(k-1)x}:

        u^i_x = u^{i+1}  (i < k),    u^k_x = (u^1_t - F1) / F2.
    """
    k = eq.order
    names = tuple(names) if names else tuple(f"u{i}" for i in range(1, k + 1))
    if len(names) != k:
        raise ValueError(f"need {k} names")
    coords = {jet(eq.field, s): sp.Symbol(names[s]) for s in range(k)}
    F1 = eq.F1.xreplace(coords)
    F2 = eq.F2.xreplace(coords)
    rhs = [sp.Symbol(names[i + 1]) for i in range(k - 1)]
    rhs.append(normalize((jet(names[0], 1, "t") - F1) / F2))
    return EvolutionSystem(tuple(rhs), "x", names)


# -- point maps -----------------------------------------------------------------


@dataclass(frozen=True)
class PointMap:
    """new^i = forward[i](old) and old^i = inverse[i](new)."""

    forward: tuple
    inverse: tuple
    source: tuple[str, ...]
    target: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "forward", tuple(sp.sympify(e) for e in self.forward))
        object.__setattr__(self, "inverse", tuple(sp.sympify(e) for e in self.inverse))
        if not (len(self.forward) == len(self.inverse) == len(self.source) == len(self.target)):
            raise ValueError("map components and variable lists must have the same length")

    @property
    def n(self) -> int:
        return len(self.forward)

    def jacobian(self) -> sp.Matrix:
        return sp.Matrix([[sp.diff(f, s) for s in field_symbols(self.source)] for f in self.forward])

    def to_new(self) -> dict:
        return dict(zip(field_symbols(self.source), self.inverse))

    def check(self) -> list:
        """Residuals of forward(inverse(x)) - x; all zero for a valid map."""
        back = {s: e for s, e in zip(field_symbols(self.source), self.inverse)}
        return [normalize(f.xreplace(back) - t) for f, t in zip(self.forward, field_symbols(self.target))]

    def inverted(self) -> "PointMap":
        return PointMap(self.inverse, self.forward, self.target, self.source)

    @classmethod
    def permutation(cls, perm, signs=None, fields=("u", "v", "w")) -> "PointMap":
        """new^i = sign_i * old^{perm[i]} (0-based perm)."""
        n = len(perm)
        fields = tuple(fields[:n])
        signs = signs or (1,) * n
        syms = field_symbols(fields)
        fwd = [signs[i] * syms[perm[i]] for i in range(n)]
        inv = [None] * n
        for i in range(n):
            inv[perm[i]] = signs[i] * syms[i]
        return cls(tuple(fwd), tuple(inv), fields, fields)


class SingularMap(ValueError):
    pass


def push_forward(C: NonHomOperator, m: PointMap) -> NonHomOperator:
    """The operator in the new variables.

        g' = J g J^T,   omega' = J omega J^T,
        b'^{ij}_k = [ (J b J^T)^{ij}_r + J^i_p g^{pq} d^2 new^j / du^q du^r ] (J^-1)^r_k,
    every entry then rewritten in the new variables.
    """
    if tuple(m.source) != tuple(C.fields):
        raise ValueError(f"map acts on {m.source}, operator lives on {C.fields}")
    n = C.n
    old = field_symbols(C.fields)
    J = m.jacobian()
    det = normalize(J.det(method="berkowitz"))
    if is_zero(det):
        raise SingularMap("the Jacobian of the map is identically singular")
    Jinv = J.adjugate() / det
    g = sp.Matrix(C.g)
    om = sp.Matrix(C.omega)
    gbar = J * g * J.T
    ombar = J * om * J.T
    hess = [[[sp.diff(m.forward[j], old[q], old[r]) for r in range(n)] for q in range(n)] for j in range(n)]
    bJ = [[[sp.S.Zero] * n for _ in range(n)] for _ in range(n)]  # [i][j][r] before J^-1
    for i, j, r in itertools.product(range(n), repeat=3):
        acc = sp.S.Zero
        for p, q in itertools.product(range(n), repeat=2):
            if C.b[p][q][r] != 0:
                acc += J[i, p] * J[j, q] * C.b[p][q][r]
            if g[p, q] != 0 and hess[j][q][r] != 0:
                acc += J[i, p] * g[p, q] * hess[j][q][r]
        bJ[i][j][r] = acc
    to_new = m.to_new()

    def fin(e):
        e = sp.sympify(e)
        if e == 0:
            return e
        return normalize(e.xreplace(to_new))

    bbar = [[[fin(sum(bJ[i][j][r] * Jinv[r, k] for r in range(n))) for k in range(n)] for j in range(n)]
            for i in range(n)]
    G = [[fin(gbar[i, j]) for j in range(n)] for i in range(n)]
    W = [[fin(ombar[i, j]) for j in range(n)] for i in range(n)]
    return NonHomOperator.build(G, W, b=bbar, fields=m.target, direction=C.direction)


def push_forward_system(sys: EvolutionSystem, m: PointMap) -> EvolutionSystem:
    """new^i_d = J^i_p(old) F^p, written in the new variables (jets of ``m.source`` in the
    other direction are rewritten through the inverse map)."""
    if tuple(m.source) != tuple(sys.fields):
        raise ValueError("map and system use different variables")
    J = m.jacobian()
    to_new = m.to_new()
    other = "t" if sys.direction == "x" else "x"
    # first jets in the transverse direction transform with the Jacobian of the inverse
    Jinv_new = sp.Matrix([[sp.diff(e, s) for s in field_symbols(m.target)] for e in m.inverse])
    jet_rep = {}
    for p, f in enumerate(sys.fields):
        jet_rep[jet(f, 1, other)] = sum(Jinv_new[p, k] * jet(t, 1, other) for k, t in enumerate(m.target))
    rhs = []
    for i in range(sys.n):
        e = sum(J[i, p] * sys.rhs[p] for p in range(sys.n))
        e = sp.sympify(e).xreplace(jet_rep).xreplace(to_new)
        rhs.append(normalize(e))
    return EvolutionSystem(tuple(rhs), sys.direction, m.target)


# -- catalog matching ------------------------------------------------------------


@dataclass
class Match:
    entry: str
    bindings: dict
    via: str

    def describe(self) -> str:
        from .symkernel import to_text

        b = ", ".join(f"{k} -> {to_text(v)}" for k, v in sorted(self.bindings.items()))
        return f"{self.entry} via {self.via}: {b}"


def _unify(entry: catalog.CatalogEntry, C: NonHomOperator) -> dict | None:
    T = entry.template()
    n = T.n
    for i, j in itertools.product(range(n), repeat=2):
        if not is_zero(C.g[i][j] - T.g[i][j]):
            return None
        for k in range(n):
            if not is_zero(C.b[i][j][k] - T.b[i][j][k]):
                return None
    # the tail is linear in the function values; solve for them as plain unknowns
    fsyms = {}
    for f in sorted(set().union(*[x.atoms(AppliedUndef) for row in T.omega for x in row]), key=str):
        fsyms[f] = sp.Symbol(f"_{f.func.__name__}")
    consts = [sp.Symbol(c) for c in entry.constants]
    eqs = []
    for i in range(n):
        for j in range(i + 1, n):
            eqs.append(sp.together(T.omega[i][j].xreplace(fsyms) - C.omega[i][j]).as_numer_denom()[0])
    eqs = [sp.expand(e) for e in eqs if e != 0]
    unknowns = list(fsyms.values()) + consts
    if not eqs:
        return None
    try:
        sols = sp.solve(eqs, unknowns, dict=True)
    except NotImplementedError:
        return None
    for sol in sols:
        bindings = {}
        ok = True
        for f, s in fsyms.items():
            val = normalize(sol.get(s, s))
            if val.free_symbols & set(fsyms.values()):
                val = val.xreplace({x: 0 for x in fsyms.values()})
            allowed = set(f.args) | {c for c in consts if c in sol}
            if not val.free_symbols <= allowed | set(consts):
                ok = False
                break
            bindings[f.func.__name__] = val
        if not ok:
            continue
        for c in consts:
            val = sol.get(c, c)
            if val == c:
                val = sp.Integer(0)
            if not sp.sympify(val).is_number:
                ok = False
            bindings[str(c)] = val
        if not ok:
            continue
        bindings = {k: sp.sympify(v).xreplace({c: bindings[str(c)] for c in consts}) for k, v in bindings.items()}
        try:
            inst = catalog.instantiate(entry.id, bindings)
        except ValueError:
            continue
        if all(is_zero(inst.omega[i][j] - C.omega[i][j]) for i in range(n) for j in range(n)):
            if entry.constraint == "f-integral":
                try:
                    fc = catalog.constraint_f(bindings["g"], bindings["h"], 0)
                    if fc.f is not None:
                        bindings["l"] = normalize(bindings["f"] / bindings["h"] - fc.f / bindings["h"])
                except ValueError:
                    pass
            return bindings
    return None


def _tail_functions(entry: catalog.CatalogEntry) -> set:
    """Names of the functions that occur in the template tail (derived ones like l excluded)."""
    return {f.func.__name__ for row in entry.template().omega for x in row for f in x.atoms(AppliedUndef)}


def match_catalog(C: NonHomOperator, extra_maps=()) -> Match | None:
    """Restricted search: permutations x sign flips (x the given maps) then template unification.

    Within the first starting operator that matches at all, the match with the
    fewest nonzero tail functions wins (ties: alphabetically smallest set of
    bound names, then enumeration order), so the simplest normal form is reported.
    """
    n = C.n
    if n not in (2, 3):
        return None
    fields = ("u", "v") if n == 2 else ("u", "v", "w")
    base = C.relabel(fields) if tuple(C.fields) != fields else C
    starts = [("identity", base)]
    for label, m in extra_maps:
        starts.append((label, push_forward(C, m).relabel(fields)))
    entries = catalog.enumerate(n)
    for label, D0 in starts:
        found = []
        for perm in itertools.permutations(range(n)):
            for signs in itertools.product((1, -1), repeat=n):
                m = PointMap.permutation(perm, signs, fields)
                D = push_forward(D0, m) if (perm != tuple(range(n)) or any(s < 0 for s in signs)) else D0
                via = label
                if perm != tuple(range(n)):
                    via += f", new = old[{','.join(fields[p] for p in perm)}]"
                if any(s < 0 for s in signs):
                    via += f", signs {signs}"
                for e in entries:
                    b = _unify(e, D)
                    if b is not None:
                        found.append(Match(e.id, b, via))
        if found:
            def rank(k):
                mt = found[k]
                slots = _tail_functions(catalog.get(mt.entry))
                nonzero = sorted(name for name, val in mt.bindings.items() if name in slots and sp.sympify(val) != 0)
                return (len(nonzero), nonzero, k)

            return found[min(range(len(found)), key=rank)]
    return None


def slot_bindings(bindings: dict, entry_id: str) -> dict:
    """Bindings re-expressed in slot symbols (for substitute)."""
    e = catalog.get(entry_id)
    out = {}
    for k, v in bindings.items():
        if k in e.functions:
            out[k] = sp.sympify(v).xreplace(dict(zip([sp.Symbol(a) for a in e.functions[k]], SLOTS)))
        else:
            out[sp.Symbol(k)] = v
    return out


# -- local structure search -------------------------------------------------------


@dataclass
class StructureCandidate:
    entry: str
    via: str
    convention: str
    operator: NonHomOperator  # a member of the solution family (free parameters set to 0)
    report: object  # CheckReport of check_full on that member

    def describe(self) -> str:
        return f"{self.entry} via {self.via} ({self.convention}): {self.report.status}"


@dataclass
class StructureSearch:
    """Outcome of a restricted search for a local 1+0 operator C with C dH = F."""

    target: EvolutionSystem
    density: sp.Expr
    tried: int = 0  # (entry, map, convention) triples whose leading part was tested
    leading_matches: int = 0  # triples whose first-order part reproduces the jet terms
    candidates: list = None

    def __post_init__(self):
        if self.candidates is None:
            self.candidates = []

    @property
    def hamiltonian(self) -> list:
        return [c for c in self.candidates if c.report.passed]

    @property
    def empty(self) -> bool:
        return not self.hamiltonian


def _t_dependent(e, fields, direction) -> bool:
    return any(j.order and j.direction == direction for j in jets_in(sp.sympify(e), fields).values())


def find_structure(target: EvolutionSystem, density, *, degree: int = 4, entries=None,
                   trials: int = 25, seed: int = 0, limit: int | None = None) -> StructureSearch:
    """Search for a local 1+0 Hamiltonian operator C with  target = C dH.

    The search space is every catalog template moved by a permutation and sign
    flip of the variables, in either contraction convention, with each arbitrary
    function expanded over the default ansatz in its own arguments.  The
    leading part of a template has no free functions, so it must reproduce the
    jet terms of the target on its own; the tail is then a linear problem for
    the ansatz coefficients.  Members of a non-empty family are run through
    check_full.  An empty result means "none in the restricted space".
    ``limit`` stops the search after that many Hamiltonian candidates.
    """
    from .variational import CONVENTIONS, Density, as_matrix_operator, euler

    n = target.n
    fields = ("u", "v") if n == 2 else ("u", "v", "w")
    op_dir = "t" if target.direction == "x" else "x"
    h = Density(density, op_dir, target.fields)
    E = [euler(h, f) for f in target.fields]
    out = StructureSearch(target, sp.sympify(density))
    entries = [catalog.get(e) if isinstance(e, str) else e for e in entries] if entries else catalog.enumerate(n)
    seen_first = {}
    for entry in entries:
        T = entry.template()
        # function values ride through the map as plain symbols; a sign flip of an
        # argument only reparametrizes an arbitrary function, so it is dropped
        holders = {f: sp.Symbol(f"_F{f.func.__name__}") for row in T.omega for x in row
                   for f in x.atoms(AppliedUndef)}
        om = [[x.xreplace(holders) for x in row] for row in T.omega]
        T = NonHomOperator.build(T.g, om, b=T.b, fields=fields, direction=op_dir)
        consts = [sp.Symbol(c) for c in entry.constants]
        for perm in itertools.permutations(range(n)):
            where = {field_symbols(fields)[p]: field_symbols(target.fields)[i] for i, p in enumerate(perm)}
            back = {s: f.func(*[where[a] for a in f.args]) for f, s in holders.items()}
            for signs in itertools.product((1, -1), repeat=n):
                m = PointMap.permutation(perm, signs, fields)
                try:
                    D = push_forward(T, m).relabel(target.fields)
                except KernelError:  # e.g. w^(1/2) under w -> -w leaves the real chart
                    continue
                D = D.with_entries(omega=[[x.xreplace(back) for x in row] for row in D.omega])
                via = f"new = old[{','.join(fields[p] for p in perm)}]"
                if any(s < 0 for s in signs):
                    via += f", signs {signs}"
                for conv in CONVENTIONS:
                    out.tried += 1
                    key = (entry.g, entry.velocity, perm, signs, conv)
                    if key not in seen_first:
                        first = D.with_entries(omega=[[0] * n for _ in range(n)])
                        A = as_matrix_operator(first)
                        if conv == "transposed":
                            A = A.transposed()
                        r = [normalize(a - b) for a, b in zip(target.rhs, A.apply(E))]
                        ok = all(not _t_dependent(x, target.fields, op_dir) for x in r)
                        seen_first[key] = r if ok else None
                    rest = seen_first[key]
                    if rest is None:
                        continue
                    out.leading_matches += 1
                    cand = _solve_tail(entry, D, E, rest, conv, consts, degree)
                    if cand is None:
                        continue
                    rep = check_full(cand, seed=seed, trials=trials, subject=entry.id)
                    out.candidates.append(StructureCandidate(entry.id, via, conv, cand, rep))
                    if limit is not None and len(out.hamiltonian) >= limit:
                        return out
    return out


def _solve_tail(entry, D, E, rest, conv, consts, degree):
    """Expand every function of the pushed template over the ansatz and solve
    omega E = rest (linear); returns the member with free parameters set to 0."""
    from .variational import default_ansatz, linear_solve

    n = D.n
    fns = sorted(set().union(*[x.atoms(AppliedUndef) for row in D.omega for x in row]), key=str)
    names = sorted({f.func.__name__ for f in fns})
    basis, columns = [], []
    sign = -1 if conv == "transposed" else 1
    base_om = [[substitute(D.omega[i][j], {k: 0 for k in names}) for j in range(n)] for i in range(n)]
    for name in names:
        args = entry.functions[name]
        ans = default_ansatz(args, degree, special=args)
        slot_ans = [sp.sympify(a).xreplace(dict(zip([sp.Symbol(x) for x in args], SLOTS))) for a in ans]
        for a, body in zip(ans, slot_ans):
            bind = {k: (body if k == name else 0) for k in names}
            om = [[substitute(D.omega[i][j], bind) - base_om[i][j] for j in range(n)] for i in range(n)]
            columns.append([sign * sum(om[i][j] * E[j] for j in range(n)) for i in range(n)])
            basis.append((name, a))
    targets = [normalize(rest[i] - sign * sum(base_om[i][j] * E[j] for j in range(n))) for i in range(n)]
    if not columns:
        if all(is_zero(t) for t in targets):
            return D
        return None
    sol = linear_solve(columns, targets, basis, params=consts)
    if sol.empty:
        return None
    binding = {}
    for k, (name, a) in enumerate(basis):
        coeff = sp.sympify(sol.coefficients[k]).xreplace({t: 0 for t in sol.free})
        binding.setdefault(name, sp.S.Zero)
        binding[name] += coeff * sp.sympify(a).xreplace(dict(zip([sp.Symbol(x) for x in entry.functions[name]],
                                                                    SLOTS)))
    om = [[normalize(substitute(D.omega[i][j], binding)) for j in range(n)] for i in range(n)]
    return D.with_entries(omega=om)
