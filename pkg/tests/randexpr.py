"""Seeded generators of random expressions, densities and maps for property tests."""

import sympy as sp

from hydroham.symkernel import jet

u, v, w = sp.symbols("u v w")
F = sp.Function("f")
FIELDS = ("u", "v", "w")


def rational(rng, lo=-9, hi=9):
    num = rng.choice([k for k in range(lo, hi + 1) if k])
    return sp.Rational(num, rng.randint(1, 4))


def atom(rng, jets=True, functions=True):
    choices = [u, v, w]
    if jets:
        choices += [jet(f, k) for f in FIELDS for k in (1, 2)]
    if functions:
        choices += [F(v, w), sp.Derivative(F(v, w), v)]
    return rng.choice(choices)


def expression(rng, depth=3, jets=True, functions=True, powers=True):
    """A random expression tree; rational powers only on bare field variables."""
    if depth == 0 or rng.random() < 0.25:
        return rational(rng) if rng.random() < 0.3 else atom(rng, jets, functions)
    op = rng.choice("++**/^" if powers else "++**")
    if op == "^":
        base = rng.choice([u, v, w])
        exp = rng.choice([2, 3, -1, -2, sp.Rational(1, 2), sp.Rational(-3, 2)])
        return base**exp
    a = expression(rng, depth - 1, jets, functions, powers)
    b = expression(rng, depth - 1, jets, functions, powers)
    if op == "+":
        return a + b
    if op == "*":
        return a * b
    if b == 0:
        return a
    return a / (b + rational(rng)) if b.free_symbols else a / b


def field_polynomial(rng, variables=(u, v, w), degree=3, terms=4):
    out = sp.S.Zero
    for _ in range(terms):
        mono = sp.S.One
        for _ in range(rng.randint(0, degree)):
            mono *= rng.choice(variables)
        out += rational(rng) * mono
    return sp.expand(out)


def density(rng, order=3, fields=("u",)):
    """Random polynomial density in the jets u, u_x, ..., of order <= ``order``."""
    syms = [jet(f, k) for f in fields for k in range(order + 1)]
    return field_polynomial(rng, syms, degree=3, terms=rng.randint(1, 5))


def nonzero_polynomial(rng, variables=(u, v, w), degree=4):
    """A polynomial built with a term that cannot cancel, hence provably nonzero."""
    p = field_polynomial(rng, variables, degree, terms=rng.randint(1, 6))
    lead = rng.choice(variables) ** (degree + 1)
    return sp.expand(p + rational(rng) * lead)


def affine_map(rng, n=3):
    """A random invertible affine map new = A old + c over the rationals."""
    syms = sp.symbols("u v w")[:n]
    while True:
        A = sp.Matrix(n, n, lambda i, j: rng.randint(-3, 3))
        if A.det() != 0:
            break
    c = sp.Matrix([rng.randint(-2, 2) for _ in range(n)])
    x = sp.Matrix(syms)
    fwd = A * x + c
    inv = A.inv() * (x - c)
    return [sp.expand(e) for e in fwd], [sp.expand(e) for e in inv]
