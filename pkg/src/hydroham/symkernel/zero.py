"""Canonical normalization and the zero oracle."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import sympy as sp
from sympy.core.function import AppliedUndef

from .calculus import SLOTS, substitute
from .jets import function_atoms, has_functions
from .rational import Chart

NONZERO_COEFFS = tuple(c for c in range(-9, 10) if c)
DEFAULT_TRIALS = 25


def normalize(e) -> sp.Expr:
    """Canonical form: reduced numerator over irreducible denominator factors."""
    e = sp.sympify(e)
    if e.is_Rational:
        return e
    chart = Chart([e], extra_order=0)
    return chart.to_expr(chart.convert(e))


def canonical_zero(e, max_terms: int = 200_000) -> bool:
    e = sp.sympify(e)
    if e == 0:
        return True
    chart = Chart([e], extra_order=0, max_terms=max_terms)
    return chart.is_zero(chart.convert(e))


def random_polynomial(variables, degree: int, rng: random.Random) -> sp.Expr:
    """Dense polynomial of total degree <= degree, every coefficient in {-9..9} minus 0."""
    terms = []
    for exps in itertools.product(range(degree + 1), repeat=len(variables)):
        if sum(exps) <= degree:
            mono = sp.Mul(*[v**k for v, k in zip(variables, exps)])
            terms.append(rng.choice(NONZERO_COEFFS) * mono)
    return sp.Add(*terms)


def random_function_bindings(expr: sp.Expr, rng: random.Random, degree: int = 3) -> dict:
    """Random polynomial bodies (in slot symbols) for every arbitrary function in expr."""
    arities = {}
    for f in sorted(expr.atoms(AppliedUndef), key=sp.default_sort_key):
        arities.setdefault(f.func.__name__, len(f.args))
    return {name: random_polynomial(SLOTS[:k], degree, rng) for name, k in sorted(arities.items())}


def random_point(symbols, rng: random.Random, expr: sp.Expr | None = None) -> dict:
    """Random nonzero rationals; symbols under fractional powers get perfect powers."""
    point = {}
    for s in sorted(symbols, key=lambda s: s.name):
        num = rng.randint(1, 12) * rng.choice((1, -1))
        den = rng.randint(1, 7)
        root = 1
        if expr is not None:
            for p in expr.atoms(sp.Pow):
                if p.base == s and p.exp.is_Rational and not p.exp.is_Integer:
                    root = root * int(p.exp.q) // sp.gcd(root, int(p.exp.q))
        val = Fraction(num, den)
        if root > 1:
            val = abs(val) ** root
        point[s] = sp.Rational(val.numerator, val.denominator)
    return point


def specialization_seed(seed: int, trial: int) -> int:
    return seed * 1_000_003 + trial


def specialized_zero(e, trials: int = DEFAULT_TRIALS, seed: int = 0, degree: int = 3) -> bool:
    """True iff e vanishes for every randomized exact specialization tried.

    Arbitrary functions become random polynomials, then every remaining symbol
    is set to a random rational; the value is decided exactly.  The degree is
    raised above the highest derivative order present so that no derivative
    is annihilated by the choice of polynomial class.
    """
    e = sp.sympify(e)
    top = max((fa.order for fa in function_atoms(e)), default=0)
    degree = max(degree, top + 1)
    for t in range(trials):
        rng = random.Random(specialization_seed(seed, t))
        for _attempt in range(20):
            bound = substitute(e, random_function_bindings(e, rng, degree))
            point = random_point(bound.free_symbols, rng, bound)
            val = bound.xreplace(point)
            if val.has(sp.zoo, sp.nan, sp.oo):
                continue
            break
        else:
            raise ZeroDivisionError("every sample point hit a singular locus")
        if not canonical_zero(val):
            return False
    return True


def is_zero(e, trials: int = DEFAULT_TRIALS, seed: int = 0) -> bool:
    """Zero oracle: canonical zero, or (with arbitrary functions) zero on every specialization.

    Raises :class:`~hydroham.symkernel.rational.Inconclusive` when
    normalization exceeds its resource bound.
    """
    e = sp.sympify(e)
    if canonical_zero(e):
        return True
    if not has_functions(e):
        return False
    return specialized_zero(e, trials=trials, seed=seed)
