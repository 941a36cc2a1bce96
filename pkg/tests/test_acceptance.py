"""Acceptance criteria, one printed PASS/FAIL line each.

Two criteria cannot be met as stated.  For those the test prints FAIL,
asserts the analysis that explains why, and is marked xfail.
"""

import itertools
import subprocess
import sys

import pytest
import sympy as sp

from hydroham import catalog
from hydroham.operators import NonHomOperator, check_compatibility, check_full, compute_phi
from hydroham.reproduce import CONVENTION, FAIL, PASS, reproduce
from hydroham.symkernel import normalize, parse
from hydroham.variational import CONVENTIONS, EvolutionSystem, flow, flows_equal
from hydroham.symkernel import jet

u, v, w, a = sp.symbols("u v w a")


@pytest.fixture
def report(capsys):
    def emit(n, title, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {title}: {'PASS' if ok else 'FAIL'} ({detail})")
    return emit


def test_criterion_1_classification(report):
    failures = []
    for eid in catalog.ENTRIES:
        for seed in (0, 1, 2):
            rep = catalog.verify_entry(eid, trials=25, seed=seed)
            if not rep.passed:
                failures.append((eid, seed))
    ok = not failures
    report(1, "classification suite", ok,
           f"{len(catalog.ENTRIES)} entries x 25 instantiations x 3 seeds, failures: {failures or 'none'}")
    assert ok


def test_criterion_2_mutations(report):
    rows = []
    for eid, e in catalog.ENTRIES.items():
        rng = __import__("random").Random(17)
        hits = []
        for mut in e.mutations:
            rep = check_full(catalog.mutate(eid, mut, catalog.random_bindings(eid, rng)))
            if not rep.passed and rep.record(mut.breaks).status == "fail":
                hits.append(mut.breaks)
        rows.append((eid, hits))
    ok = all(hits for _, hits in rows)
    report(2, "mutation suite", ok, "; ".join(f"{eid}: {h[0] if h else 'NOT DETECTED'}" for eid, h in rows))
    assert ok


def _rank_one(velocity):
    a_, b_, c_ = (sp.Function(n)(u, v, w) for n in "abc")
    om = [[0, a_, b_], [-a_, 0, c_], [-b_, -c_, 0]]
    C = NonHomOperator.build([[1, 0, 0], [0, 0, 0], [0, 0, 0]], om, velocity=velocity)
    return C, (a_, b_, c_)


def test_criterion_3_phi_derivation(report):
    d = lambda e: sp.diff(e, u)  # noqa: E731
    # C_{3,2} setup: b = 0
    C, (A, B, Cc) = _rank_one(None)
    phi = compute_phi(C)
    want_1jk = [[0, d(A), d(B)], [-d(A), 0, d(Cc)], [-d(B), -d(Cc), 0]]
    want_k1j = [[0, 0, 0], [d(A), 0, 0], [d(B), 0, 0]]  # row j, column k
    ok32 = (all(normalize(phi[0][j][k] - want_1jk[j][k]) == 0 for j, k in itertools.product(range(3), repeat=2))
            and all(normalize(phi[k][0][j] - want_k1j[j][k]) == 0 for j, k in itertools.product(range(3), repeat=2)))
    gens32 = set(check_compatibility(C).generators("compatibility.phi_cyclic"))
    ok32 = ok32 and gens32 == {d(A), d(B), d(Cc)}

    # C_{3,3} setup: b^{12}_3 = 1
    wx = parse("w_x")
    C, (A, B, Cc) = _rank_one([[0, wx, 0], [-wx, 0, 0], [0, 0, 0]])
    phi = compute_phi(C)
    want_1jk = [[0, -B + d(A), d(B)], [B - d(A), 0, d(Cc)], [-d(B), -d(Cc), 0]]
    # the reference table has +omega^{23} in slot (2,2); expanding -b^{21}_3 omega^{32} by hand gives -omega^{23}
    want_k1j = [[0, 0, 0], [-B + d(A), -Cc, 0], [d(B), 0, 0]]
    ok33 = (all(normalize(phi[0][j][k] - want_1jk[j][k]) == 0 for j, k in itertools.product(range(3), repeat=2))
            and all(normalize(phi[k][0][j] - want_k1j[j][k]) == 0 for j, k in itertools.product(range(3), repeat=2)))
    gens33 = {sp.expand(g) for g in check_compatibility(C).generators("compatibility.phi_cyclic")}
    ok33 = ok33 and gens33 == {d(A) - B, d(B), d(Cc), Cc}
    ok = ok32 and ok33
    report(3, "Phi tensor derivation", ok,
           "rank-one b = 0: generators d_u omega^{12}, d_u omega^{13}, d_u omega^{23}; "
           "b^{12}_3 = 1: generators d_u omega^{12} - omega^{13}, d_u omega^{13}, d_u omega^{23}, omega^{23}; "
           "slot Phi^{212} is -omega^{23} by hand expansion, the reference table has +omega^{23}")
    assert ok


def _mokhov():
    C = NonHomOperator.build([[0, 0], [0, 1]], [[0, -u], [u, 0]], fields=("u", "v"))
    system = EvolutionSystem((a * u * v, a * jet("v", 1) + u**2), "t", ("u", "v"))
    return C, system, (a * v**2 - u**2) / 2


def _sinh_gordon():
    C = NonHomOperator.build([[0, 0], [0, 1]], [[0, u / 2], [-u / 2, 0]], fields=("u", "v"))
    system = EvolutionSystem((u * v / 2, jet("v", 1) + (u**2 - u**-2) / 2), "t", ("u", "v"))
    return C, system, (v**2 - u**2 + u**-2) / 2


def test_criterion_4_exact_examples(report):
    Cm, sm, hm = _mokhov()
    Cs, ss, hs = _sinh_gordon()
    verbatim = {"two-wave": flows_equal(flow(Cm, hm), sm), "sinh-gordon": flows_equal(flow(Cs, hs), ss)}
    ok = all(verbatim.values())
    report(4, "examples exact with no convention", ok,
           f"verbatim standard contraction: two-wave {verbatim['two-wave']}, sinh-gordon {verbatim['sinh-gordon']}; "
           "two-wave closes only with the transposed contraction, sinh-gordon only with the u^-2 term sign flipped")
    if ok:
        return
    # the analysis behind the failure
    assert flows_equal(flow(Cm, hm, "transposed"), sm)
    assert not any(flows_equal(flow(Cs, hs, c), ss) for c in CONVENTIONS)
    assert flows_equal(flow(Cs, (v**2 - u**2 - u**-2) / 2), ss)
    assert check_full(Cm).passed and check_full(Cs).passed
    pytest.xfail("the stated triples need a convention or a sign correction; see the decisions ledger")


def test_criterion_5_convention_resolution(report):
    examples = ["kdv-1", "gkdv:1", "gkdv:2", "gkdv:3", "kdv-2"]
    outcome = {}
    for ex in examples:
        rep = reproduce(ex)
        details = " ".join(rep.claim("system-hamiltonian").details)
        printed = "standard" in details or "transposed" in details
        outcome[ex] = (rep.status in (PASS, CONVENTION) and printed, rep.status)
    kdv2 = reproduce("kdv-2").claim("catalog-type")
    h_ok = kdv2.status == PASS
    ok = all(v[0] for v in outcome.values()) and h_ok
    report(5, "examples under the sign-resolution protocol", ok,
           ", ".join(f"{ex} {st}" for ex, (_, st) in outcome.items()) + f"; kdv-2 C_{{3,2}} match {kdv2.status}")
    assert ok


def test_criterion_6_negative_results(report):
    lin = reproduce("linear-kdv")
    hd = reproduce("harry-dym")
    parts = {
        "linear-kdv local momentum empty": lin.claim("nonlocal-momentum").status == PASS,
        "linear-kdv local 1+0 search empty": lin.claim("no-local-structure").status == PASS,
        "harry-dym search with H' empty": hd.claim("no-local-structure").status == PASS,
        "harry-dym H1 structure exact": hd.claim("first-structure").status == PASS,
    }
    ok = all(parts.values())
    report(6, "negative results", ok, "; ".join(f"{k}: {v}" for k, v in parts.items())
           + ("" if ok else "; linear-kdv admits h = u1*u3 - u2^2/2 with g = e3 e3, omega^{12} = 1 (transposed)"))
    if ok:
        return
    # only the linear KdV structure claim is expected to fail, and the counterexample must be genuine
    assert [k for k, v in parts.items() if not v] == ["linear-kdv local 1+0 search empty"]
    assert lin.claim("no-local-structure").status == FAIL
    assert set(lin.claim("no-local-structure").data) == {"transposed"}
    pytest.xfail("the linearised KdV inverted system has a local 1+0 structure; see the decisions ledger")


def test_criterion_7_property_suites(report):
    proc = subprocess.run([sys.executable, "-m", "pytest", "-m", "property", "-q", "-p", "no:cacheprovider"],
                          capture_output=True, text=True)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()[-200:]
    ok = proc.returncode == 0
    report(7, "property suites standalone", ok, f"pytest -m property: {tail}")
    assert ok, proc.stdout[-3000:]
