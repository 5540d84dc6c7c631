import pytest
from hypothesis import given, settings, strategies as st

from chromatic_comod.comod import Comodule, CyclicSum, Summand, primitives
from chromatic_comod.hopf import HeightMismatch
from chromatic_comod.landweber import ScopeError, catalog
from chromatic_comod.localize import (change_of_rings_check, classify_torsion_theory, cobar_ext, is_local,
                                      koszul_ext, localize, pushforward_primitive)

P, N = 2, 3


def Q(*ideal, shift=0):
    return Comodule.quotient(P, N, list(ideal), shift)


# -- cobar ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def bp_cobar():
    return cobar_ext(Comodule.free(P, N), 2, (0, 8))


def test_cobar_frozen_values(bp_cobar):
    # [DERIVED] brute-force cobar complex, frozen.  Ext^{1,2t}: Z/2 for t odd, Z/4 at t = 2,
    # Z/2^{v_2(t)+2} for larger even t
    got = {k: v.describe() for k, v in bp_cobar.entries.items() if not v.is_zero()}
    assert got == {(0, 0): "Z_(2)", (1, 2): "Z/2", (1, 4): "Z/4", (1, 6): "Z/2", (1, 8): "Z/16",
                   (2, 4): "Z/2", (2, 8): "(Z/2)^2"}


def test_cobar_zero_column_is_primitives():
    M = Q("p", "v1^2")
    tab = cobar_ext(M, 0, (0, 10))
    for d in range(0, 11):
        a, b = tab[(0, d)], primitives(M, d).structure
        assert (a.rank, a.torsion) == (b.rank, b.torsion)


# -- Koszul -----------------------------------------------------------------------

def test_koszul_frozen():
    BP = Comodule.free(P, N)
    e1 = koszul_ext(BP, 1, 1, (0, 8))
    for d in range(0, 9):
        assert e1[(1, d)].describe() == Q("p").structure(d).describe()
    assert koszul_ext(BP, 1, 0, (0, 8)).is_zero()
    assert koszul_ext(BP, 2, 1, (-4, 8)).is_zero()
    e2 = koszul_ext(BP, 2, 2, (-4, 8))
    assert e2[(2, -2)].describe() == "Z/2"


@st.composite
def small_quotients(draw):
    kind = draw(st.sampled_from(["free", "p^a", "p,v1^b"]))
    shift = draw(st.sampled_from([0, 2, -4]))
    if kind == "free":
        return Comodule.free(P, N, shift)
    if kind == "p^a":
        return Q(f"p^{draw(st.integers(1, 3))}", shift=shift)
    return Q("p", f"v1^{draw(st.integers(1, 3))}", shift=shift)


@settings(max_examples=12, deadline=None)
@given(small_quotients())
def test_koszul_on_p_is_kernel_and_cokernel(M):
    # Ext^0(A/p, M) = ker p, Ext^1(A/p, M) = M/p, degreewise
    w = (-4, 10)
    e0, e1 = koszul_ext(M, 1, 0, w), koszul_ext(M, 1, 1, w)
    for d in range(w[0], w[1] + 1):
        s = M.structure(d)
        assert e0[(0, d)].fp_dimension() == len(s.torsion) and not e0[(0, d)].rank
        assert e1[(1, d)].fp_dimension() == s.rank + len(s.torsion)


# -- localization -----------------------------------------------------------------

def test_localize_quotients():
    r = localize(Q("p"), 1, (-12, 12))
    assert r.verified and r.module.describe() == "v1^-1BP/(p)"
    assert all(r.isomorphic_to(CyclicSum(catalog("BP", P, N), [Summand(0, 1, periodic=True)])).values())
    assert localize(Q("p", "v1"), 1, (-8, 8)).module.is_zero()
    with pytest.raises(ScopeError):
        localize(Q("p"), 3, (0, 4))


def test_is_local():
    assert is_local(Comodule.free(P, N), 1, (-8, 8))["local"]
    assert not is_local(Q("p", "v1"), 1, (-8, 8))["local"]
    periodic = CyclicSum(catalog("BP", P, N), [Summand(0, 1, periodic=True)])
    assert is_local(periodic, 1, (-8, 8))["local"]


@settings(max_examples=8, deadline=None)
@given(st.sampled_from([["p"], ["p", "v1"], ["p", "v1^2"], ["p", "v1", "v2"], ["p^2"], ["p", "v1", "v2", "v3"]]),
       st.sampled_from([0, 2, 6, -4]))
def test_classify_shift_invariant(ideal, t):
    assert classify_torsion_theory(Q(*ideal))["n"] == classify_torsion_theory(Q(*ideal, shift=t))["n"]


def test_classify_values():
    assert classify_torsion_theory(Comodule.free(P, N))["n"] == -1
    assert classify_torsion_theory(Q("p", "v1", "v2", "v3"))["n"] == 3
    assert classify_torsion_theory(Q("p", "v1", "v2"))["n"] == 2
    assert classify_torsion_theory(Q("p", "v1", "v2", "v3").sub_block([]))["n"] is None


# -- change of rings and pushforward --------------------------------------------------

def test_change_of_rings():
    B, B2 = catalog("v1^-1BP", P, N), catalog("E(1)", P, N)
    r = change_of_rings_check(B, B2, CyclicSum(B, [Summand(0, 1)]), (-10, 10))
    assert r["match"]
    with pytest.raises(HeightMismatch):
        change_of_rings_check(B, catalog("E(2)", P, N), CyclicSum(B, [Summand(0, 1)]), (0, 2))


def test_pushforward_primitive():
    E2 = catalog("E(2)", P, N)
    assert pushforward_primitive(Q("p", "v1^2"), E2, (0, 10))["found"]
    # (p, v1, v2^2) dies once v2 is a unit
    assert not pushforward_primitive(Q("p", "v1", "v2^2"), E2, (0, 10))["found"]
    assert pushforward_primitive(Q("p^2"), catalog("E(1)", P, N), (0, 4))["witness"] == "g0"
    with pytest.raises(ScopeError):
        pushforward_primitive(Q("p", "v1^3 + v2"), E2, (0, 4))
