from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from chromatic_comod.palgebra import (AlgebraError, GradedPoly, ModuleStructure, PolyRing, PresentedModule,
                                      Substitution, TruncationContext, TruncationError, format_poly,
                                      gen_degree, homology, parse_poly, smith_decompose, valuation)

R = PolyRing(["v1", "v2", "v3"], [2, 6, 14])
L = PolyRing(["v1", "v2"], [2, 6], invertible=["v1"])


@st.composite
def polys(draw, ring=R, max_terms=4, max_exp=3, negative=False):
    n = len(ring.names)
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        lo = -max_exp if negative else 0
        mono = tuple(draw(st.integers(lo if (negative and i in ring.invertible) else 0, max_exp))
                     for i in range(n))
        c = Fraction(draw(st.integers(-30, 30)), draw(st.sampled_from([1, 1, 3, 5])))
        terms[mono] = terms.get(mono, 0) + c
    return GradedPoly(ring, terms)


def test_degrees_and_bound():
    assert [gen_degree(2, i) for i in range(1, 5)] == [2, 6, 14, 30]
    assert [gen_degree(3, i) for i in range(1, 4)] == [4, 16, 52]
    ctx = TruncationContext(2, 3)
    assert ctx.soundness_bound == 30
    with pytest.raises(TruncationError):
        ctx.check_degree(30)
    with pytest.raises(TruncationError):
        TruncationContext(2, 3, 0, 30)


def test_valuation():
    assert valuation(Fraction(24), 2) == 3
    assert valuation(Fraction(3, 8), 2) == -3
    assert valuation(Fraction(7), 3) == 0


def test_parse_and_format():
    f = parse_poly("v1^2*v2 - 3*v3 + 1/3", R)
    assert format_poly(f) == "1/3 + v1^2*v2 - 3*v3"
    assert parse_poly("(v1 + v2)^2", R) == R.gen("v1") ** 2 + R.const(2) * R.gen("v1") * R.gen("v2") + R.gen("v2") ** 2
    g = parse_poly("v1^-2*v2", L)
    assert g * L.gen("v1") ** 2 == L.gen("v2")
    with pytest.raises(AlgebraError):
        parse_poly("v1^-1", R)
    with pytest.raises(AlgebraError):
        parse_poly("v1 +", R)


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_ring_laws(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == R.zero()


@settings(max_examples=60, deadline=None)
@given(polys(ring=L, negative=True))
def test_format_parse_round_trip(f):
    assert parse_poly(format_poly(f), L) == f


@settings(max_examples=40, deadline=None)
@given(polys(max_terms=3, max_exp=2), polys(max_terms=3, max_exp=2))
def test_substitution_is_multiplicative(a, b):
    v1, v2, v3 = (R.gen(x) for x in ("v1", "v2", "v3"))
    S = Substitution(R, R, {"v1": R.const(3) * v1, "v2": v2 + v1 ** 3,
                            "v3": v3 - R.const(2) * v1 * v2 ** 2})
    assert S(a * b) == S(a) * S(b)
    assert S(a + b) == S(a) + S(b)


def _det(m):
    m = [list(map(Fraction, r)) for r in m]
    n, det = len(m), Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c]), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return det


def _determinantal_exponents(mat, p):
    """e_1 <= e_2 <= ... from the minimal valuation of k x k minors."""
    m, n = len(mat), len(mat[0])
    partial = [0]
    for k in range(1, min(m, n) + 1):
        vals = [valuation(_det([[mat[i][j] for j in cols] for i in rows]), p)
                for rows in combinations(range(m), k) for cols in combinations(range(n), k)
                if _det([[mat[i][j] for j in cols] for i in rows])]
        if not vals:
            break
        partial.append(min(vals))
    return [partial[i] - partial[i - 1] for i in range(1, len(partial))]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.sampled_from([2, 3]), st.data())
def test_smith_against_minors(m, n, p, data):
    mat = [[data.draw(st.integers(-12, 12)) for _ in range(n)] for _ in range(m)]
    sd = smith_decompose(mat, p)
    assert sd.exponents == _determinantal_exponents(mat, p)
    assert sd.reassemble() == [[Fraction(x) for x in r] for r in mat]
    assert sd.exponents == sorted(sd.exponents)


def test_presented_module():
    M = PresentedModule(3, [[4, 0, 0], [0, 2, 2], [0, 0, 0]], 2)
    s = M.structure()
    assert (s.rank, sorted(s.torsion)) == (1, [1, 2])
    assert s.describe() == "Z_(2) + Z/2 + Z/4"
    assert M.is_zero_element([Fraction(8), 0, 0])
    assert M.order_exponent([Fraction(1), 0, 0]) == 2
    assert M.order_exponent([0, 0, Fraction(1)]) is None


def test_homology_of_multiplication_by_p():
    # Z --p--> Z --p--> Z mod nothing: H = 0 in the middle; with target Z/p, kernel is all of Z
    tgt = PresentedModule(1, [], 2)
    mid = PresentedModule(1, [], 2)
    h = homology([[Fraction(2)]], tgt, [[Fraction(2)]], mid, 2)
    assert h.is_zero()
    tgt2 = PresentedModule(1, [[Fraction(2)]], 2)
    h2 = homology([[Fraction(2)]], tgt2, [[Fraction(2)]], mid, 2)
    assert (h2.rank, h2.torsion) == (0, [1])


def test_module_structure_json():
    s = ModuleStructure(1, [1, 3], 2)
    assert s.to_json() == {"rank": 1, "torsion": [2, 8], "text": "Z_(2) + Z/2 + Z/8"}
    assert s.fp_dimension() == 3 and s.length == 4
