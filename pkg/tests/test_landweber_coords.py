import json

import pytest

from chromatic_comod import coords
from chromatic_comod.fgl import structure_maps
from chromatic_comod.landweber import (INF, LandweberPresentation, QuotientPresentation, ScopeError,
                                       TensorPresentation, algebra_from_json, catalog, catalog_map_exists,
                                       catalog_names, height, height_certificate, is_invariant_ideal,
                                       is_landweber_exact, one_in_ideal)
from chromatic_comod.palgebra import AlgebraError

P, N = 2, 3


@pytest.mark.parametrize("name,h", [("BP", INF), ("rational", 0), ("E(0)", 0), ("E(1)", 1), ("E(2)", 2),
                                    ("v1^-1BP", 1), ("v2^-1BP", 2), ("v3^-1BP", 3), ("v1^-1E(2)", 1)])
def test_heights(name, h):
    assert height(catalog(name, P, N)) == h


def test_height_certificate_agrees_with_syntax():
    for name in catalog_names(N):
        B = catalog(name, P, N)
        cert = height_certificate(B)
        h = height(B)
        if h != INF:
            assert one_in_ideal(B, h + 1)
            assert not one_in_ideal(B, h)
        assert cert is not None


def test_catalog_json_round_trip():
    for name in catalog_names(N):
        B = catalog(name, P, N)
        doc = json.loads(json.dumps(B.to_json()))
        B2 = algebra_from_json(doc, P, N)
        assert (B2.invert, B2.omit) == (B.invert, B.omit)


def test_bad_algebra_documents():
    with pytest.raises(AlgebraError):
        algebra_from_json({"invert": ["x"]}, P, N)
    with pytest.raises(AlgebraError):
        catalog("K(7)", P, N)
    with pytest.raises(AlgebraError):
        algebra_from_json([1, 2], P, N)


def test_exactness_verdicts():
    for name in catalog_names(N):
        assert is_landweber_exact(catalog(name, P, N))["exact"], name
    assert not is_landweber_exact(QuotientPresentation(P, N, ["2"]))["exact"]
    assert not is_landweber_exact(QuotientPresentation(P, N, ["v1"]))["exact"]
    assert is_landweber_exact(TensorPresentation(catalog("v1^-1BP", P, N), catalog("E(1)", P, N)))["exact"]


def test_invariant_ideals():
    BP = catalog("BP", P, N)
    for k in range(0, N + 1):
        assert is_invariant_ideal(BP, k)
    assert not is_invariant_ideal(BP, ["v1"])
    assert not is_invariant_ideal(BP, ["v2"])
    assert is_invariant_ideal(BP, ["2", "v1^2"])


def test_catalog_maps():
    assert catalog_map_exists(catalog("v1^-1BP", P, N), catalog("E(1)", P, N))
    assert not catalog_map_exists(catalog("E(1)", P, N), catalog("BP", P, N))


# -- charts ----------------------------------------------------------------------

def _convert(chart, f, images):
    return chart.normal_form(chart.convert(f, images))


def _same(a, b):
    keys = set(a) | set(b)
    return all(a.get(k, 0) == b.get(k, 0) for k in keys)


def test_rational_chart_coproduct_composes():
    R = catalog("rational", P, N)
    ch = coords.Chart([R, R, R], 0)
    T = structure_maps(P, N)
    t01, t12, t02 = ch.tau_between(0, 1), ch.tau_between(1, 2), ch.tau_between(0, 2)
    images = {f"v{a}": ch.v_image(0, a) for a in range(1, N + 1)}
    images.update({f"t{j}": t01[j] for j in range(1, N + 1)})
    images.update({f"t{j}'": t12[j] for j in range(1, N + 1)})
    for n in range(1, N + 1):
        assert _same(_convert(ch, T.deltaT[n], images), t02[n])


def test_rational_chart_antipode_reverses():
    R = catalog("rational", P, N)
    ch = coords.Chart([R, R], 0)
    T = structure_maps(P, N)
    t01, t10 = ch.tau_between(0, 1), ch.tau_between(1, 0)
    images = {f"v{a}": ch.v_image(0, a) for a in range(1, N + 1)}
    images.update({f"t{j}": t01[j] for j in range(1, N + 1)})
    for n in range(1, N + 1):
        assert _same(_convert(ch, T.antipodeT[n], images), t10[n])


def test_level_chart_needs_nonzero_quotient():
    with pytest.raises(AlgebraError):
        coords.Chart([catalog("E(1)", P, N)], 2)
    ch = coords.Chart([catalog("E(1)", P, N)], 1)
    assert ch.mod == P


def test_level_one_chart_primitives_of_E1_mod_p():
    # equalizer of the two units on E(1)/p is F_2[v1^{+-1}]: one class in every even degree
    E1 = catalog("E(1)", P, N)
    S = coords.Chart([E1], 1)
    T = coords.Chart([E1, E1], 1)
    f = coords.ChartMap(S, T, coords.identity_images(S, T, {0: 0}, {}))
    g = coords.ChartMap(S, T, coords.identity_images(S, T, {0: 1}, {}))
    for d in (-6, -2, 0, 4):
        assert coords.equalizer(S, f, g, d)["dimension"] == 1
    assert coords.equalizer(S, f, g, 3)["dimension"] == 0
