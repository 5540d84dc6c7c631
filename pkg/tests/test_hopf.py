import pytest

from chromatic_comod.hopf import (HeightMismatch, base_change, build_bp_algebroid, catalog_morphism,
                                  check_axioms, connecting_iso, is_weak_equivalence, trivial_algebroid,
                                  weq_chain)
from chromatic_comod.landweber import catalog
from chromatic_comod.palgebra import TruncationContext

P, N = 2, 3


@pytest.fixture(scope="module")
def H():
    return build_bp_algebroid(TruncationContext(P, N))


def test_canonical_algebroid_passes(H):
    r = check_axioms(H)
    assert r["pass"] and r["failures"] == []
    assert r["truncation"]["soundness_bound"] == 30


def test_trivial_algebroid_passes():
    assert check_axioms(trivial_algebroid(P, N))["pass"]


@pytest.mark.parametrize("which,n,value,law", [
    ("deltaT", 1, "t1 + 3*t1'", "counit (left)"),
    ("antipodeT", 1, "t1", None),
    ("etaR", 1, "v1 + 2*t1", None),
])
def test_perturbation_is_caught(H, which, n, value, law):
    r = check_axioms(H.perturbed(which, n, value))
    assert not r["pass"]
    if law:
        assert r["first_failure"]["law"] == law
        assert r["first_failure"]["generator"] == "t1"


@pytest.mark.parametrize("name", ["E(1)", "E(2)", "v1^-1BP", "rational", "v1^-1E(2)"])
def test_base_change_axioms(H, name):
    HB, phi = base_change(H, catalog(name, P, N))
    r = check_axioms(HB, (0, 14))
    assert r["pass"], r["first_failure"]
    assert r["coordinates"] == "rational"
    assert phi.check()["commutes"]


def test_base_change_display_table(H):
    from chromatic_comod.palgebra import format_poly
    HB, _ = base_change(H, catalog("E(1)", P, N))
    assert format_poly(HB.etaR["v1"]) == "v1 - 2*t1"


def test_base_changed_perturbation_caught(H):
    HB, _ = base_change(H, catalog("E(1)", P, N))
    assert not check_axioms(HB.perturbed("deltaT", 1, "t1 + 2*t1'"), (0, 6))["pass"]


def test_connecting_iso(H):
    assert connecting_iso(H, "counit")["iso"]
    r = connecting_iso(H, "inclusion", catalog("v1^-1BP", P, N), catalog("E(1)", P, N))
    assert r["iso"]


def test_weq_chain():
    w = weq_chain(catalog("v1^-1BP", P, N), catalog("E(1)", P, N))
    assert w.valid
    assert w.describe()["heights"]["C_f"] == 1
    with pytest.raises(HeightMismatch):
        weq_chain(catalog("E(1)", P, N), catalog("E(2)", P, N))


def test_weak_equivalence_verdicts(H):
    phi = catalog_morphism(H, catalog("v1^-1BP", P, N), catalog("E(1)", P, N))
    assert is_weak_equivalence(phi)["weak_equivalence"]
    _, to_e1 = base_change(H, catalog("E(1)", P, N))
    assert not is_weak_equivalence(to_e1)["weak_equivalence"]


def test_p3_algebroid():
    assert check_axioms(build_bp_algebroid(TruncationContext(3, 2)), (0, 48))["pass"]
