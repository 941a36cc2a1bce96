"""Operators C = g d + b^{ij}_k u^k_d + omega and their Hamiltonian condition battery.

Every condition is evaluated for every index tuple; a failure keeps its
(1-based) index witness and the canonical residual.  Nothing assumes the
leading coefficient g is non-degenerate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import sympy as sp

from .symkernel import (
    Chart,
    Inconclusive,
    default_fields,
    field_symbols,
    has_functions,
    is_zero,
    jet,
    jets_in,
    normalize,
)
from .symkernel.zero import DEFAULT_TRIALS, specialized_zero

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


def _mat(rows) -> tuple:
    if isinstance(rows, sp.MatrixBase):
        rows = rows.tolist()
    return tuple(tuple(sp.sympify(x) for x in row) for row in rows)


def zeros(n: int) -> tuple:
    return tuple(tuple(sp.S.Zero for _ in range(n)) for _ in range(n))


def zeros3(n: int) -> tuple:
    return tuple(zeros(n) for _ in range(n))


def _check_field_only(entries, fields, what):
    for e in entries:
        for sym, j in jets_in(e, fields).items():
            if j.order:
                raise ValueError(f"{what} entries must depend on field variables only, found {sym}")


@dataclass(frozen=True)
class UltralocalOperator:
    omega: tuple
    fields: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "omega", _mat(self.omega))
        if not self.fields:
            object.__setattr__(self, "fields", default_fields(len(self.omega)))
        if any(len(row) != self.n for row in self.omega):
            raise ValueError("omega must be square")
        _check_field_only(itertools.chain.from_iterable(self.omega), self.fields, "omega")

    @property
    def n(self) -> int:
        return len(self.omega)


@dataclass(frozen=True)
class FirstOrderOperator:
    """g^{ij} d + b^{ij}_k u^k_d with b stored as b[i][j][k]."""

    g: tuple
    b: tuple = ()
    fields: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "g", _mat(self.g))
        n = len(self.g)
        if not self.b:
            object.__setattr__(self, "b", zeros3(n))
        else:
            object.__setattr__(self, "b", tuple(_mat(plane) for plane in self.b))
        if not self.fields:
            object.__setattr__(self, "fields", default_fields(n))
        if len(self.b) != n or any(len(p) != n or any(len(r) != n for r in p) for p in self.b):
            raise ValueError("b must be n x n x n")
        entries = itertools.chain(itertools.chain.from_iterable(self.g),
                                  (x for p in self.b for r in p for x in r))
        _check_field_only(entries, self.fields, "g and b")

    @property
    def n(self) -> int:
        return len(self.g)


@dataclass(frozen=True)
class NonHomOperator:
    first: FirstOrderOperator
    tail: UltralocalOperator
    direction: str = "x"

    def __post_init__(self):
        if self.first.n != self.tail.n:
            raise ValueError("first-order part and tail have different sizes")
        if self.first.fields != self.tail.fields:
            raise ValueError("first-order part and tail use different field names")

    @property
    def n(self) -> int:
        return self.first.n

    @property
    def fields(self) -> tuple[str, ...]:
        return self.first.fields

    @property
    def g(self):
        return self.first.g

    @property
    def b(self):
        return self.first.b

    @property
    def omega(self):
        return self.tail.omega

    @classmethod
    def build(cls, g, omega=None, *, b=None, velocity=None, fields=None, direction="x"):
        """Assemble an operator.

        ``velocity`` is the matrix of b^{ij}_k u^k_d written out in jets of the
        operator's direction (the middle matrix in the usual display); it is
        split into b by reading off jet coefficients.
        """
        g = _mat(g)
        n = len(g)
        fields = tuple(fields) if fields else default_fields(n)
        if velocity is not None:
            if b is not None:
                raise ValueError("give either b or velocity, not both")
            b = split_velocity(velocity, fields, direction)
        omega = omega if omega is not None else zeros(n)
        return cls(FirstOrderOperator(g, b or (), fields), UltralocalOperator(omega, fields), direction)

    def velocity(self) -> tuple:
        jets = [jet(f, 1, self.direction) for f in self.fields]
        return tuple(
            tuple(sp.Add(*[self.b[i][j][k] * jets[k] for k in range(self.n)]) for j in range(self.n))
            for i in range(self.n)
        )

    def with_entries(self, g=None, b=None, omega=None) -> "NonHomOperator":
        return NonHomOperator(
            FirstOrderOperator(self.g if g is None else g, self.b if b is None else b, self.fields),
            UltralocalOperator(self.omega if omega is None else omega, self.fields),
            self.direction,
        )

    def relabel(self, fields) -> "NonHomOperator":
        """Rename the field variables (positionally)."""
        old = field_symbols(self.fields)
        new = field_symbols(fields)
        rep = dict(zip(old, new))
        sub = lambda e: e.xreplace(rep)  # noqa: E731
        return NonHomOperator(
            FirstOrderOperator(_apply(self.g, sub), tuple(_apply(p, sub) for p in self.b), tuple(fields)),
            UltralocalOperator(_apply(self.omega, sub), tuple(fields)),
            self.direction,
        )

    def permute(self, perm) -> "NonHomOperator":
        """Conjugate by the relabelling u^{perm[i]} -> position i (0-based perm)."""
        n = self.n
        syms = field_symbols(self.fields)
        rep = {syms[perm[i]]: syms[i] for i in range(n)}
        sub = lambda e: e.xreplace(rep)  # noqa: E731
        g = [[sub(self.g[perm[i]][perm[j]]) for j in range(n)] for i in range(n)]
        om = [[sub(self.omega[perm[i]][perm[j]]) for j in range(n)] for i in range(n)]
        b = [[[sub(self.b[perm[i]][perm[j]][perm[k]]) for k in range(n)] for j in range(n)] for i in range(n)]
        return self.with_entries(g, b, om)

    def entries(self):
        yield from itertools.chain.from_iterable(self.g)
        yield from (x for p in self.b for r in p for x in r)
        yield from itertools.chain.from_iterable(self.omega)


def _apply(m, fn):
    return tuple(tuple(fn(x) for x in row) for row in m)


def split_velocity(velocity, fields, direction="x") -> tuple:
    """b[i][j][k] = coefficient of u^k_d in entry (i, j); the entry must be linear in those jets."""
    velocity = _mat(velocity)
    n = len(velocity)
    jets = [jet(f, 1, direction) for f in fields]
    b = []
    for i in range(n):
        plane = []
        for j in range(n):
            e = sp.expand(velocity[i][j])
            coeffs = [sp.diff(e, s) for s in jets]
            rest = normalize(e - sp.Add(*[c * s for c, s in zip(coeffs, jets)]))
            if rest != 0 or any(c.has(*jets) for c in coeffs):
                raise ValueError(f"velocity entry ({i + 1},{j + 1}) is not linear homogeneous in first jets")
            plane.append(tuple(normalize(c) for c in coeffs))
        b.append(tuple(plane))
    # b[i][j][k] layout
    return tuple(tuple(tuple(b[i][j][k] for k in range(n)) for j in range(n)) for i in range(n))


# -- reports -------------------------------------------------------------------


@dataclass
class ConditionRecord:
    condition: str
    status: str = PASS
    checked: int = 0
    failures: list = field(default_factory=list)  # [(indices, residual)]
    inconclusive: list = field(default_factory=list)

    def to_dict(self) -> dict:
        from .symkernel import to_text

        return {
            "condition": self.condition,
            "status": self.status,
            "checked": self.checked,
            "failures": [{"indices": list(ix), "residual": to_text(r)} for ix, r in self.failures],
            "inconclusive": [list(ix) for ix in self.inconclusive],
        }


@dataclass
class CheckReport:
    subject: str = ""
    records: list[ConditionRecord] = field(default_factory=list)
    seed: int = 0
    trials: int = DEFAULT_TRIALS
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.status == PASS for r in self.records)

    @property
    def status(self) -> str:
        if any(r.status == FAIL for r in self.records):
            return FAIL
        if any(r.status == INCONCLUSIVE for r in self.records):
            return INCONCLUSIVE
        return PASS

    def __bool__(self) -> bool:
        return self.passed

    def record(self, name: str) -> ConditionRecord:
        for r in self.records:
            if r.condition == name:
                return r
        raise KeyError(name)

    def failing(self) -> list[ConditionRecord]:
        return [r for r in self.records if r.status != PASS]

    def generators(self, name: str) -> list:
        """Distinct failure residuals of one condition, up to a rational factor."""
        out = []
        for _, res in self.record(name).failures:
            res = sp.expand(res)
            if res == 0:
                continue
            # scale so the term that sorts first has coefficient 1
            coeff, _ = min((t.as_coeff_Mul() for t in sp.Add.make_args(res)), key=lambda cm: str(cm[1]))
            prim = sp.expand(res / coeff)
            if not any(sp.expand(prim - g) == 0 for g in out):
                out.append(prim)
        return out

    def merge(self, *others: "CheckReport", subject: str | None = None) -> "CheckReport":
        out = CheckReport(subject or self.subject, list(self.records), self.seed, self.trials, list(self.notes))
        for o in others:
            out.records.extend(o.records)
            out.notes.extend(o.notes)
        out.records.sort(key=lambda r: r.condition)
        return out

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "status": self.status,
            "seed": self.seed,
            "trials": self.trials,
            "conditions": [r.to_dict() for r in self.records],
            "notes": list(self.notes),
        }

    def summary(self) -> str:
        from .symkernel import to_text

        lines = [f"{self.subject or 'check'}: {self.status.upper()} (seed={self.seed}, trials={self.trials})"]
        for r in self.records:
            lines.append(f"  {r.status:<12} {r.condition} [{r.checked} index tuples]")
            for ix, res in r.failures[:10]:
                lines.append(f"      at {ix}: residual {to_text(res)}")
            if len(r.failures) > 10:
                lines.append(f"      ... {len(r.failures) - 10} more")
        lines.extend(f"  note: {n}" for n in self.notes)
        return "\n".join(lines)


# -- evaluation engine -----------------------------------------------------------


class _Battery:
    """Converts operator entries into one chart and caches their derivatives."""

    def __init__(self, op_entries, fields, trials, seed):
        self.fields = tuple(fields)
        self.vars = field_symbols(fields)
        exprs = [e for e in op_entries if e != 0]
        self.chart = Chart(exprs, extra_order=3)
        self.trials = trials
        self.seed = seed
        self._conv = {}
        self._d = {}

    def conv(self, e):
        hit = self._conv.get(e)
        if hit is None:
            hit = self.chart.convert(e) if e != 0 else self.chart.zero
            self._conv[e] = hit
        return hit

    def d(self, key, value, s):
        """Derivative of a cached value; ``key`` identifies ``value``."""
        k = (key, s)
        hit = self._d.get(k)
        if hit is None:
            hit = self.chart.diff(value, self.vars[s])
            self._d[k] = hit
        return hit

    def decide(self, rec: ConditionRecord, indices, value):
        rec.checked += 1
        ch = self.chart
        try:
            if ch.is_zero(value):
                return
            residual = ch.to_expr(value)
            if has_functions(residual) and specialized_zero(residual, self.trials, self.seed):
                return
        except Inconclusive:
            rec.inconclusive.append(tuple(i + 1 for i in indices))
            if rec.status == PASS:
                rec.status = INCONCLUSIVE
            return
        rec.failures.append((tuple(i + 1 for i in indices), residual))
        rec.status = FAIL


def _new_report(subject, seed, trials) -> CheckReport:
    return CheckReport(subject=subject, seed=seed, trials=trials)


def _ultralocal_records(bat: _Battery, om, n) -> list[ConditionRecord]:
    ch = bat.chart
    R = range(n)
    skew = ConditionRecord("ultralocal.skew")
    for i, j in itertools.product(R, R):
        bat.decide(skew, (i, j), ch.add(om[i][j], om[j][i]))
    dom = lambda a, b, s: bat.d(("om", a, b), om[a][b], s)  # noqa: E731
    jac = ConditionRecord("ultralocal.jacobi")
    for i, j, k in itertools.product(R, R, R):
        terms = []
        for s in R:
            terms.append(ch.mul(om[i][s], dom(j, k, s)))
            terms.append(ch.mul(om[j][s], dom(k, i, s)))
            terms.append(ch.mul(om[k][s], dom(i, j, s)))
        bat.decide(jac, (i, j, k), ch.total(terms))
    return [skew, jac]


def check_ultralocal(tail: UltralocalOperator, seed: int = 0, trials: int = DEFAULT_TRIALS) -> CheckReport:
    """Skew-symmetry and the cyclic Jacobi condition for omega^{ij}(u)."""
    bat = _Battery(itertools.chain.from_iterable(tail.omega), tail.fields, trials, seed)
    om = [[bat.conv(x) for x in row] for row in tail.omega]
    rep = _new_report("ultralocal", seed, trials)
    rep.records.extend(_ultralocal_records(bat, om, tail.n))
    return rep


def _first_order_records(bat: _Battery, g, b, n, closure_cycle="ijr") -> list[ConditionRecord]:
    ch = bat.chart
    R = range(n)
    add, mul, sub, tot = ch.add, ch.mul, ch.sub, ch.total
    dg = lambda i, j, s: bat.d(("g", i, j), g[i][j], s)  # noqa: E731
    db = lambda i, j, k, s: bat.d(("b", i, j, k), b[i][j][k], s)  # noqa: E731

    def ddb(i, j, k, s, q):
        return bat.d(("db", i, j, k, s), db(i, j, k, s), q)

    recs = {name: ConditionRecord(f"first_order.{name}") for name in
            ("symmetry", "metric_derivative", "commutation", "curvature", "exchange", "closure")}

    for i, j in itertools.product(R, R):
        bat.decide(recs["symmetry"], (i, j), sub(g[i][j], g[j][i]))
    for i, j, k in itertools.product(R, R, R):
        bat.decide(recs["metric_derivative"], (i, j, k), sub(dg(i, j, k), add(b[i][j][k], b[j][i][k])))
        val = tot(sub(mul(g[i][s], b[j][k][s]), mul(g[j][s], b[i][k][s])) for s in R)
        bat.decide(recs["commutation"], (i, j, k), val)

    curv = {}

    def T(i, j, r, k):
        key = (i, j, r, k)
        if key not in curv:
            parts = []
            for s in R:
                parts.append(mul(g[i][s], sub(db(j, r, s, k), db(j, r, k, s))))
                parts.append(mul(b[i][j][s], b[s][r][k]))
                parts.append(ch.neg(mul(b[i][r][s], b[s][j][k])))
            curv[key] = tot(parts)
        return curv[key]

    for i, j, r, k in itertools.product(R, R, R, R):
        bat.decide(recs["curvature"], (i, j, r, k), T(i, j, r, k))

    for i, j, r, q in itertools.product(R, R, R, R):
        lhs = tot(sub(sub(mul(g[i][s], db(j, r, q, s)), mul(b[i][j][s], b[s][r][q])), mul(b[i][r][s], b[j][s][q]))
                  for s in R)
        rhs = tot(sub(sub(mul(g[j][s], db(i, r, q, s)), mul(b[j][i][s], b[s][r][q])), mul(b[i][s][q], b[j][r][s]))
                  for s in R)
        bat.decide(recs["exchange"], (i, j, r, q), sub(lhs, rhs))

    dT = {}

    def dT_(i, j, r, k, q):
        key = (i, j, r, k, q)
        if key not in dT:
            dT[key] = ch.diff(T(i, j, r, k), bat.vars[q])
        return dT[key]

    def cyc_term(a, bb, c, r, q, k):
        # b^{s a}_q (d_s b^{bb r}_c - d_c b^{bb r}_s), the summand under the inner cyclic sum
        return tot(mul(b[s][a][q], sub(db(bb, r, c, s), db(bb, r, s, c))) for s in R)

    for i, j, r, q, k in itertools.product(R, R, R, R, R):
        parts = []
        for qq, kk in ((q, k), (k, q)):
            parts.append(dT_(i, j, r, kk, qq))
            if closure_cycle == "ijk":
                for a, bb, c in ((i, j, kk), (j, kk, i), (kk, i, j)):
                    parts.append(cyc_term(a, bb, c, r, qq, kk))
            else:
                # cyclic over the three upper indices (i, j, r)
                for a, bb, c in ((i, j, r), (j, r, i), (r, i, j)):
                    parts.append(tot(mul(b[s][a][qq], sub(db(bb, c, kk, s), db(bb, c, s, kk))) for s in R))
        bat.decide(recs["closure"], (i, j, r, q, k), tot(parts))
    return list(recs.values())


def check_first_order(first: FirstOrderOperator, seed: int = 0, trials: int = DEFAULT_TRIALS,
                      closure_cycle: str = "ijr") -> CheckReport:
    """All conditions for g d + b u_d to be Hamiltonian, degenerate g allowed.

    ``closure_cycle`` selects the index triple cycled in the last condition:
    ``"ijr"`` (the upper indices; default) or ``"ijk"`` (the literal
    transcription, kept for comparison - it rejects flat operators written in
    curvilinear coordinates).
    """
    return _check_first_order_cached(first.g, first.b, first.fields, seed, trials, closure_cycle)


@lru_cache(maxsize=256)
def _check_first_order_cached(g, b, fields, seed, trials, closure_cycle):
    n = len(g)
    entries = list(itertools.chain.from_iterable(g)) + [x for p in b for r in p for x in r]
    bat = _Battery(entries, fields, trials, seed)
    G = [[bat.conv(x) for x in row] for row in g]
    B = [[[bat.conv(x) for x in r] for r in p] for p in b]
    rep = _new_report("first_order", seed, trials)
    rep.records.extend(_first_order_records(bat, G, B, n, closure_cycle))
    return rep


def _copy_report(rep: CheckReport) -> CheckReport:
    return CheckReport(rep.subject, [ConditionRecord(r.condition, r.status, r.checked, list(r.failures),
                                                     list(r.inconclusive)) for r in rep.records],
                       rep.seed, rep.trials, list(rep.notes))


def _phi_values(bat: _Battery, G, B, OM, n):
    ch = bat.chart
    R = range(n)
    phi = {}
    for i, j, k in itertools.product(R, R, R):
        parts = []
        for s in R:
            parts.append(ch.mul(G[i][s], bat.d(("om", j, k), OM[j][k], s)))
            parts.append(ch.neg(ch.mul(B[i][j][s], OM[s][k])))
            parts.append(ch.neg(ch.mul(B[i][k][s], OM[j][s])))
        phi[i, j, k] = ch.total(parts)
    return phi


def compute_phi(C: NonHomOperator) -> tuple:
    """Phi^{ijk} = g^{is} d_s omega^{jk} - b^{ij}_s omega^{sk} - b^{ik}_s omega^{js}, normalized."""
    bat = _Battery(list(C.entries()), C.fields, DEFAULT_TRIALS, 0)
    G, B, OM = _converted(bat, C)
    phi = _phi_values(bat, G, B, OM, C.n)
    R = range(C.n)
    return tuple(tuple(tuple(bat.chart.to_expr(phi[i, j, k]) for k in R) for j in R) for i in R)


def _converted(bat, C):
    G = [[bat.conv(x) for x in row] for row in C.g]
    B = [[[bat.conv(x) for x in r] for r in p] for p in C.b]
    OM = [[bat.conv(x) for x in row] for row in C.omega]
    return G, B, OM


def _compat_records(bat, G, B, OM, n, phi_reading="cyclic") -> list[ConditionRecord]:
    ch = bat.chart
    R = range(n)
    add, mul, sub, tot = ch.add, ch.mul, ch.sub, ch.total
    phi = _phi_values(bat, G, B, OM, n)
    sym = ConditionRecord("compatibility.phi_cyclic")
    for i, j, k in itertools.product(R, R, R):
        bat.decide(sym, (i, j, k), sub(phi[i, j, k], phi[k, i, j]))

    dom = lambda a, c, s: bat.d(("om", a, c), OM[a][c], s)  # noqa: E731
    db = lambda a, c, r, s: bat.d(("b", a, c, r), B[a][c][r], s)  # noqa: E731

    def piece(i, j, k, r, with_torsion=True):
        parts = [mul(B[s][i][r], dom(j, k, s)) for s in R]
        if with_torsion:
            parts += [mul(sub(db(i, j, r, s), db(i, j, s, r)), OM[s][k]) for s in R]
        return tot(parts)

    der = ConditionRecord("compatibility.phi_derivative")
    for i, j, k, r in itertools.product(R, R, R, R):
        lhs = ch.diff(phi[i, j, k], bat.vars[r])
        if phi_reading == "cyclic":
            rhs = tot(piece(a, bb, c, r) for a, bb, c in ((i, j, k), (j, k, i), (k, i, j)))
        else:
            rhs = tot(piece(a, bb, c, r, False) for a, bb, c in ((i, j, k), (j, k, i), (k, i, j)))
            rhs = add(rhs, tot(mul(sub(db(i, j, r, s), db(i, j, s, r)), OM[s][k]) for s in R))
        bat.decide(der, (i, j, k, r), sub(lhs, rhs))
    return [sym, der]


def check_compatibility(C: NonHomOperator, seed: int = 0, trials: int = DEFAULT_TRIALS,
                        phi_reading: str = "cyclic") -> CheckReport:
    """Phi^{ijk} = Phi^{kij} and the derivative identity for Phi.

    ``phi_reading="cyclic"`` puts both terms on the right of the derivative
    identity under the cyclic sum; ``"split"`` cycles only the first term.
    """
    bat = _Battery(list(C.entries()), C.fields, trials, seed)
    G, B, OM = _converted(bat, C)
    rep = _new_report("compatibility", seed, trials)
    rep.records.extend(_compat_records(bat, G, B, OM, C.n, phi_reading))
    return rep


def check_full(C: NonHomOperator, seed: int = 0, trials: int = DEFAULT_TRIALS, subject: str = "operator",
               **options) -> CheckReport:
    """Hamiltonian iff the first-order part, the tail and their compatibility all pass."""
    first = _copy_report(check_first_order(C.first, seed, trials, options.get("closure_cycle", "ijr")))
    bat = _Battery(list(C.entries()), C.fields, trials, seed)
    G, B, OM = _converted(bat, C)
    tail = _new_report("ultralocal", seed, trials)
    tail.records.extend(_ultralocal_records(bat, OM, C.n))
    compat = _new_report("compatibility", seed, trials)
    compat.records.extend(_compat_records(bat, G, B, OM, C.n, options.get("phi_reading", "cyclic")))
    return first.merge(tail, compat, subject=subject)


def generic_rank(g, trials: int = DEFAULT_TRIALS, seed: int = 0) -> int:
    """Size of the largest minor of g that is not identically zero."""
    M = sp.Matrix(_mat(g))
    n = M.rows
    for k in range(n, 0, -1):
        for rows in itertools.combinations(range(n), k):
            for cols in itertools.combinations(range(n), k):
                minor = M.extract(list(rows), list(cols)).det(method="berkowitz")
                if not is_zero(minor, trials=trials, seed=seed):
                    return k
    return 0
