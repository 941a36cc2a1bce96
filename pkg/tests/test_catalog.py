import random

import pytest
import sympy as sp

from hydroham import catalog
from hydroham.catalog import ConstraintError, constraint_41, constraint_f, instantiate
from hydroham.operators import NonHomOperator, check_full, generic_rank
from hydroham.symkernel import is_zero, normalize
from hydroham.transform import PointMap, push_forward

u, v, w = sp.symbols("u v w")
S2 = sp.sqrt(2)


def ids(entries):
    return [e.id for e in entries]


def test_enumerate():
    assert ids(catalog.enumerate(2, 1)) == ["C_{2,1}", "C_{2,2}"]
    assert ids(catalog.enumerate(3, 0)) == ["C_{3,1}"]
    assert ids(catalog.enumerate(3, 2)) == [f"C_{{3,{k}}}" for k in range(6, 12)]
    assert len(catalog.enumerate(3)) == 11 and len(catalog.enumerate(2)) == 2
    with pytest.raises(ValueError):
        catalog.enumerate(4)


def test_short_ids():
    assert catalog.get("C32").id == "C_{3,2}"
    assert catalog.get("C311").id == "C_{3,11}"
    with pytest.raises(KeyError):
        catalog.get("C_{3,12}")


@pytest.mark.parametrize("entry_id", list(catalog.ENTRIES))
def test_rank_labels(entry_id):
    e = catalog.get(entry_id)
    assert generic_rank(e.template().g) == e.rank


# -- side constraints -----------------------------------------------------------------------


def test_constraint_f_kdv1():
    fc = constraint_f(0, -1, 6 * w)
    assert fc.f == -6 * w and fc.relation == 0


def test_constraint_f_kdv2():
    fc = constraint_f(0, S2 * w, -1)
    assert normalize(fc.f + S2 * w) == 0


def test_constraint_f_equal_g_h():
    h = v**2 * w + 3
    fc = constraint_f(h, h, 0)
    assert fc.f == 0 and fc.relation == 0


def test_constraint_f_relation_only():
    fc = constraint_f(w, v, 0)
    assert fc.f is None
    assert fc.relation.has(sp.Function("f"))


def test_constraint_41():
    assert constraint_41(sp.Function("f")(w), 0, sp.Function("h")(w)) == 0
    assert constraint_41(0, w, w) == 0
    assert constraint_41(0, w, 1) != 0


# -- instantiation -------------------------------------------------------------------------------


def test_sinh_gordon_operator_from_c21():
    C = instantiate("C_{2,1}", {"f": v / 2})
    swapped = push_forward(C, PointMap.permutation((1, 0), fields=("u", "v")))
    assert swapped.g == ((0, 0), (0, 1))
    assert swapped.omega == ((0, -u / 2), (u / 2, 0))


def test_kdv1_operator_from_c32():
    C = instantiate("C_{3,2}", {"g": 0, "h": -1, "l": 6 * w})
    assert C.omega == ((0, -6 * w, 0), (6 * w, 0, -1), (0, 1, 0))
    assert check_full(C).passed


def test_c31_with_constant():
    C = instantiate("C_{3,1}", {"f": 1})
    assert check_full(C).passed


def test_c310_constraint_rejected():
    with pytest.raises(ConstraintError) as info:
        instantiate("C_{3,10}", {"f": 0, "g": w, "h": 1})
    assert info.value.residual != 0


def test_c32_closure_rejected():
    with pytest.raises(ConstraintError):
        instantiate("C_{3,2}", {"f": v, "g": w, "h": 1})


def test_unknown_parameter():
    with pytest.raises(ValueError):
        instantiate("C_{2,1}", {"q": 1})


def test_binding_outside_arguments():
    with pytest.raises(ValueError):
        instantiate("C_{2,1}", {"f": u})


def test_c36_broken_coupling():
    c = sp.Rational(3, 2)
    C = instantiate("C_{3,6}", {"f": w, "g": w**2 + 1, "c": c})
    assert check_full(C).passed
    om = [list(r) for r in C.omega]
    om[1][2], om[2][1] = c * (w**3 - 2), -c * (w**3 - 2)  # an independent function at (2,3)
    assert not check_full(C.with_entries(omega=om)).passed


def test_c38_surd_relation():
    s = sp.sqrt(1 + w**2)
    assert is_zero(s**2 - 1 - w**2)
    assert is_zero(sp.diff(s, w) - w / s)
    C = instantiate("C_{3,8}", {"f": w + 1, "c": 2})
    assert check_full(C).passed


def test_c311_resolved_entry_is_skew():
    C = instantiate("C_{3,11}", {"f": w, "c": 1})
    assert normalize(C.omega[1][2] + C.omega[2][1]) == 0
    assert check_full(C).passed


# -- verification and mutations -------------------------------------------------------------------


def test_verify_c22():
    assert catalog.verify_entry("C_{2,2}", trials=25, seed=0).passed


@pytest.mark.parametrize("entry_id", list(catalog.ENTRIES))
def test_verify_entry_quick(entry_id):
    rep = catalog.verify_entry(entry_id, trials=3, seed=1, check_trials=5)
    assert rep.passed, rep.summary()


@pytest.mark.parametrize("entry_id", list(catalog.ENTRIES))
def test_documented_mutations_fail(entry_id):
    e = catalog.get(entry_id)
    assert e.mutations
    rng = random.Random(3)
    for mut in e.mutations:
        C = catalog.mutate(entry_id, mut, catalog.random_bindings(entry_id, rng))
        rep = check_full(C, trials=10)
        assert not rep.passed
        assert rep.record(mut.breaks).status == "fail", (mut.label, [r.condition for r in rep.failing()])


def test_random_bindings_respect_constraints():
    rng = random.Random(0)
    for eid in ("C_{3,2}", "C_{3,5}", "C_{3,10}"):
        for _ in range(5):
            instantiate(eid, catalog.random_bindings(eid, rng))


def test_template_roundtrip_through_operator_build():
    for e in catalog.ENTRIES.values():
        T = e.template()
        again = NonHomOperator.build(T.g, T.omega, velocity=T.velocity(), fields=T.fields)
        assert again == T
