import pytest
import sympy as sp

from chromatic_comod.fgl import (bp_ring, gamma_ring, left_unit_in_right_coordinates, log_coefficients,
                                 structure_maps)
from chromatic_comod.palgebra import TruncationContext, format_poly, parse_poly


def _sympy_right_units(p, n_max):
    """eta_R(v_n) from the logarithm recursion, solved with sympy (independent of the library)."""
    v = sp.symbols(f"v1:{n_max + 1}")
    t = sp.symbols(f"t1:{n_max + 1}")
    w = sp.symbols(f"w1:{n_max + 1}")

    def logs(vs):
        out = [sp.Integer(1)]
        for n in range(1, n_max + 1):
            rest = sum(out[i] * vs[n - i - 1] ** (p ** i) for i in range(n))
            out.append(sp.expand(rest / (p - p ** (p ** n))))
        return out

    lv, lw = logs(v), logs(w)
    sol = {}
    for n in range(1, n_max + 1):
        rhs = sum(lv[i] * (t[n - i - 1] ** (p ** i) if n > i else 1) for i in range(n + 1))
        sol[w[n - 1]] = sp.expand(sp.solve(sp.expand(lw[n].subs(sol) - rhs), w[n - 1])[0])
    return [sol[x] for x in w]


def _to_sympy(f):
    return sp.expand(sp.sympify(format_poly(f).replace("^", "**")))


@pytest.mark.parametrize("p,N,n", [(2, 3, 2), (3, 2, 2), (5, 2, 1)])
def test_right_unit_matches_sympy(p, N, n):
    T = structure_maps(p, N)
    oracle = _sympy_right_units(p, n)
    for i in range(n):
        assert sp.expand(_to_sympy(T.etaR[i + 1]) - oracle[i]) == 0


def test_frozen_right_units_p2():
    # [DERIVED] from the sympy route above, frozen
    T = structure_maps(2, 3)
    assert format_poly(T.etaR[1]) == "v1 - 2*t1"
    assert format_poly(T.etaR[2]) == "v2 - 3*v1^2*t1 + 13*v1*t1^2 - 4*t1^3 - 14*t2"


def test_frozen_right_units_p3():
    T = structure_maps(3, 2)
    assert format_poly(T.etaR[1]) == "v1 - 24*t1"
    assert format_poly(T.etaR[2]) == "v2 - 4*v1^3*t1 + 144*v1^2*t1^2 - 1484*v1*t1^3 + 13824*t1^4 - 19680*t2"


@pytest.mark.parametrize("p,N", [(2, 3), (3, 2), (5, 2)])
def test_integral_and_homogeneous(p, N):
    T = structure_maps(p, N)
    G = T.G
    for n in range(1, N + 1):
        for f in (T.etaR[n], T.deltaT[n], T.antipodeT[n]):
            assert f.is_integral(p)
            assert f.is_homogeneous()
        assert T.etaR[n].degree() == G.degrees[G.index[f"v{n}"]]


def test_low_degree_structure_maps():
    T = structure_maps(2, 3)
    assert format_poly(T.deltaT[1]) == "t1 + t1'"
    assert format_poly(T.antipodeT[1]) == "-t1"
    # Delta(t2) = t2 + t1 t1'^2 + t2' + (v1 term)
    G2 = T.G2
    d2 = T.deltaT[2]
    assert d2.coefficient(parse_poly("t2", G2).sorted_terms()[0][0]) == 1
    assert d2.coefficient(parse_poly("t1*t1'^2", G2).sorted_terms()[0][0]) == 1


def test_araki_relation():
    logs = log_coefficients(TruncationContext(2, 3))
    for n in range(1, 4):
        assert logs.araki_residual(n).is_zero()


def test_counit_kills_t():
    T = structure_maps(2, 3)
    A = bp_ring(2, 3)
    for n in range(1, 4):
        assert T.counit(T.etaR[n]) == A.gen(f"v{n}")
        assert T.counit(T.antipodeT[n]).is_zero()


def test_left_unit_in_right_coordinates_inverts_right_unit():
    # eta_L(v1) written with right-unit scalars: v1 = eta_R(v1) + 2 t1 at p = 2
    L = left_unit_in_right_coordinates(2, 3)
    assert format_poly(L[1]) == "v1 + 2*t1"


def test_gamma_ring_names():
    G = gamma_ring(2, 2, 2)
    assert list(G.names) == ["v1", "v2", "t1", "t2", "t1'", "t2'"]
