from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from chromatic_comod.comod import (Comodule, CyclicSum, FiltrationError, Summand, comodule_from_json,
                                   counit_check, landweber_filtration, phi_lower, phi_upper, primitives,
                                   torsion_submodule, validate_comodule)
from chromatic_comod.fgl import bp_ring, structure_maps
from chromatic_comod.landweber import catalog
from chromatic_comod.palgebra import TruncationContext

P, N = 2, 3


def Q(*ideal, shift=0):
    return Comodule.quotient(P, N, list(ideal), shift)


def _brute_force_primitive_dim(b, d):
    """F_2-dimension of primitives of BP/(2, v1^b) in degree d, by exhausting all elements."""
    T = structure_maps(P, N)
    A = bp_ring(P, N)
    mons = [m for m in A.monomials(d) if m[0] < b]
    eta = T.eta_R_map()

    def reduce(f):
        return {m: c % 2 for m, c in f.terms.items() if c % 2 and m[0] < b}

    images = [reduce(eta(A.const(1) * _mono(A, m))) for m in mons]
    count = 0
    for bits in product((0, 1), repeat=len(mons)):
        acc = {}
        for bit, img, m in zip(bits, images, mons):
            if bit:
                for k, c in img.items():
                    acc[k] = (acc.get(k, 0) + c) % 2
        acc = {k: c for k, c in acc.items() if c}
        target = {}
        for bit, m in zip(bits, mons):
            if bit:
                key = tuple(m) + (0,) * N
                target[key] = 1
        if acc == target:
            count += 1
    return count.bit_length() - 1


def _mono(A, m):
    f = A.const(1)
    for name, e in zip(A.names, m):
        if e:
            f = f * A.gen(name) ** e
    return f


@pytest.mark.parametrize("b", [1, 2, 3])
def test_primitives_match_brute_force(b):
    ideal = ["p"] + ([f"v1^{b}"] if b > 1 else ["v1"])
    M = Q(*ideal)
    for d in range(0, 17, 2):
        got = primitives(M, d).structure
        assert got.rank == 0
        assert len(got.torsion) == _brute_force_primitive_dim(b, d), d


def test_frozen_primitives():
    # [DERIVED] brute force above
    M = Q("p", "v1^2")
    assert primitives(M, 0).basis == ["g0"]
    assert primitives(M, 2).basis == ["v1*g0"]
    assert primitives(M, 8).basis == ["v1*v2*g0"]
    assert primitives(M, 4).is_zero
    BP = Comodule.free(P, N)
    assert primitives(BP, 0).structure.describe() == "Z_(2)"
    assert all(primitives(BP, d).is_zero for d in range(1, 20))
    assert primitives(Q("p", "v1", "v2", "v3"), 0).structure.describe() == "Z/2"


def test_validation():
    assert validate_comodule(Q("p"))["valid"]
    assert validate_comodule(Q("p", "v1^2"))["valid"]
    assert validate_comodule(Q("p^2"))["valid"]
    bad = validate_comodule(Q("v1"))
    assert not bad["valid"] and bad["first_failure"]


@st.composite
def invariant_quotients(draw):
    kind = draw(st.sampled_from(["p^a", "p,v1^b", "p,v1,v2^c", "I_k"]))
    shift = draw(st.sampled_from([0, 2, 4, -6]))
    if kind == "p^a":
        ideal = [f"p^{draw(st.integers(1, 3))}"]
    elif kind == "p,v1^b":
        ideal = ["p", f"v1^{draw(st.integers(1, 4))}"]
    elif kind == "p,v1,v2^c":
        ideal = ["p", "v1", f"v2^{draw(st.integers(1, 2))}"]
    else:
        ideal = ["p", "v1", "v2", "v3"][:draw(st.integers(1, 4))]
    return Q(*ideal, shift=shift)


@settings(max_examples=15, deadline=None)
@given(invariant_quotients(), st.sampled_from([0, 2, 6]))
def test_shift_moves_primitives(M, t):
    for d in range(-6, 14, 2):
        a = primitives(M, d).structure
        b = primitives(M.shifted(t), d + t).structure
        assert (a.rank, a.torsion) == (b.rank, b.torsion)


@settings(max_examples=10, deadline=None)
@given(invariant_quotients(), invariant_quotients())
def test_primitives_additive(M1, M2):
    S = M1.direct_sum(M2)
    for d in range(-6, 12, 2):
        a, b, c = (primitives(X, d).structure for X in (M1, M2, S))
        assert c.rank == a.rank + b.rank
        assert sorted(c.torsion) == sorted(a.torsion + b.torsion)


@settings(max_examples=15, deadline=None)
@given(invariant_quotients())
def test_filtration_reassembles(M):
    rec = landweber_filtration(M, TruncationContext(P, N, -10, 20))
    assert rec.reassembles
    # the first witness sits in a degree with primitives (p^2: witness 2*g0, a multiple of the basis g0)
    t, _ = rec.stages[0]
    assert not primitives(M, t).is_zero


@settings(max_examples=10, deadline=None)
@given(invariant_quotients())
def test_nonzero_has_primitive(M):
    assert any(not primitives(M, d).is_zero for d in range(-6, 28))


def test_three_stage_filtration():
    rec = landweber_filtration(Q("p", "v1^3"))
    assert rec.stages == [(4, 2), (2, 2), (0, 2)]
    assert rec.witnesses == ["v1^2*g0", "v1*g0", "g0"]


def test_filtration_stage_bound():
    with pytest.raises(FiltrationError) as e:
        landweber_filtration(Q("p", "v1^3"), stage_bound=1)
    assert e.value.partial


def test_torsion_submodule():
    T = torsion_submodule(Q("p").direct_sum(Comodule.free(P, N)), 0)
    assert T.is_vn_torsion is not None
    assert T.agrees_with_ideal_torsion
    assert T.blocks == [0]
    T1 = torsion_submodule(Q("p", "v1", "v2"), 1)
    assert T1.agrees_with_ideal_torsion and T1.blocks == [0]
    assert torsion_submodule(Q("p"), 1).is_zero()


# -- cyclic sums over catalog algebras -------------------------------------------

def test_cyclic_primitives():
    E1, E2 = catalog("E(1)", P, N), catalog("E(2)", P, N)
    assert [CyclicSum(E1, [Summand(0, 1)]).primitives(d).structure.describe() for d in (-4, -1, 0, 6)] == \
        ["Z/2", "0", "Z/2", "Z/2"]
    assert CyclicSum(E1, [Summand(0, 2)]).is_zero()
    assert [CyclicSum(E2, [Summand(0, 0)]).primitives(d).structure.describe() for d in (0, 2)] == ["Z_(2)", "0"]
    assert [CyclicSum(E2, [Summand(0, 1)]).primitives(d).structure.describe() for d in (-2, 0, 4)] == \
        ["0", "Z/2", "Z/2"]


def test_phi_upper_of_E1_quotient():
    E1 = catalog("E(1)", P, N)
    up = phi_upper(CyclicSum(E1, [Summand(0, 1)]), (-12, 12))
    assert up.verified
    assert up.module.describe() == "v1^-1BP/(p)"
    assert phi_upper(CyclicSum(E1, [Summand(0, 0)]), (-12, 12)).module.describe() == "BP"


def test_counit_check_shifted():
    E1 = catalog("E(1)", P, N)
    r = counit_check(CyclicSum(E1, [Summand(4, 1), Summand(0, 0)]), (-10, 10))
    assert r["iso"] and r["summands_match"]


def test_phi_lower_of_quotient():
    E1 = catalog("E(1)", P, N)
    C = phi_lower(Q("p", "v1"), E1)
    assert C.is_zero()
    assert phi_lower(Q("p"), E1).describe() == "E(1)/(p)"


def test_transport_and_json():
    E1 = catalog("E(1)", P, N)
    C = CyclicSum(E1, [Summand(2, 1), Summand(0, 0)])
    back = comodule_from_json(C.to_json(), P, N)
    assert back.summands == C.summands and back.base == C.base
    M = Q("p", "v1^2", shift=2)
    M2 = comodule_from_json(M.to_json(), P, N)
    assert [M2.structure(d).describe() for d in range(0, 12)] == [M.structure(d).describe() for d in range(0, 12)]
