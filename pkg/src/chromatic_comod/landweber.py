"""Landweber exact BP_*-algebras presented by inverting and killing generators.

A presentation ``invert={n}, omit={n+1..N}`` is E(n)_*; ``invert={0}`` puts p
in the denominator.  Heights, exactness certificates and invariant ideals are
computed here.  Custom quotients BP_*/J are admitted only as test inputs for
the exactness checker.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Union

from .fgl import bp_ring, gamma_ring, structure_maps
from .palgebra import (AlgebraError, GradedPoly, PolyRing, PresentedModule,
                       TruncationContext, gen_degree, in_lattice, kernel_mod,
                       lattice_basis, parse_poly, smith_decompose)

INF = math.inf


class ScopeError(AlgebraError):
    """The request is outside what this package can decide."""


@dataclass(frozen=True)
class LandweberPresentation:
    """Z_(p)[v_1..v_N] with the ``invert`` generators inverted and ``omit`` set to zero."""

    p: int
    N: int
    invert: FrozenSet[int] = frozenset()
    omit: FrozenSet[int] = frozenset()
    name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "invert", frozenset(self.invert))
        object.__setattr__(self, "omit", frozenset(self.omit))
        bad = [i for i in self.invert if not 0 <= i <= self.N]
        if bad:
            raise AlgebraError(f"inverted indices {bad} outside 0..{self.N}")
        bad = [i for i in self.omit if not 1 <= i <= self.N]
        if bad:
            raise AlgebraError(f"omitted indices {bad} outside 1..{self.N}")
        if self.invert & self.omit:
            raise AlgebraError("an index cannot be both inverted and omitted")
        if self.invert and self.omit and min(self.omit) <= max(self.invert):
            raise AlgebraError("every omitted index must exceed every inverted index")

    # -- basic data --------------------------------------------------------
    @property
    def label(self) -> str:
        return self.name or f"B(invert={sorted(self.invert)}, omit={sorted(self.omit)})"

    @property
    def rational(self) -> bool:
        return 0 in self.invert

    @property
    def height(self):
        return height(self)

    def is_connective(self) -> bool:
        return not self.invert and not self.omit

    def present(self) -> List[int]:
        """Indices of the v's that survive."""
        return [i for i in range(1, self.N + 1) if i not in self.omit]

    def ring(self) -> PolyRing:
        idx = self.present()
        return PolyRing([f"v{i}" for i in idx], [gen_degree(self.p, i) for i in idx],
                        invertible=[f"v{i}" for i in idx if i in self.invert])

    def quotient_ring(self, k: int) -> PolyRing:
        """Variables of B/I_k (k >= 1): v_k, v_{k+1}, ... minus omitted ones."""
        idx = [i for i in self.present() if i >= k]
        return PolyRing([f"v{i}" for i in idx], [gen_degree(self.p, i) for i in idx],
                        invertible=[f"v{i}" for i in idx if i in self.invert])

    def quotient_is_zero(self, k: int) -> bool:
        """B/I_kB = 0 exactly when some generator of I_k is a unit."""
        return any(i < k for i in self.invert)

    def to_json(self) -> dict:
        d = {"invert": sorted(self.invert), "omit": sorted(self.omit)}
        if self.name:
            d["name"] = self.name
        return d

    def __str__(self):
        return self.label


# -- catalog --------------------------------------------------------------------

def catalog(name: str, p: int, N: int) -> LandweberPresentation:
    """Look up a named algebra: BP, E(n), v{n}^-1BP, v1^-1E(2), rational."""
    key = name.replace(" ", "").replace("_*", "").replace("_", "")
    if key in ("BP", "A"):
        return LandweberPresentation(p, N, name="BP")
    if key in ("rational", "Q", "p^-1BP"):
        return LandweberPresentation(p, N, invert={0}, name="rational")
    m = re.fullmatch(r"E\((\d+)\)", key)
    if m:
        n = int(m.group(1))
        if n > N:
            raise ScopeError(f"E({n}) needs at least {n} generators, have N={N}")
        return LandweberPresentation(p, N, invert={n}, omit=set(range(n + 1, N + 1)), name=f"E({n})")
    m = re.fullmatch(r"v(\d+)\^-1BP", key)
    if m:
        n = int(m.group(1))
        if not 1 <= n <= N:
            raise ScopeError(f"v{n} is not among v1..v{N}")
        return LandweberPresentation(p, N, invert={n}, name=f"v{n}^-1BP")
    m = re.fullmatch(r"v(\d+)\^-1E\((\d+)\)", key)
    if m:
        a, n = int(m.group(1)), int(m.group(2))
        if not 1 <= a <= n <= N:
            raise ScopeError(f"cannot form v{a}^-1E({n}) with N={N}")
        return LandweberPresentation(p, N, invert={a, n}, omit=set(range(n + 1, N + 1)),
                                     name=f"v{a}^-1E({n})")
    raise ScopeError(f"unknown algebra {name!r}")


def catalog_names(N: int) -> List[str]:
    names = ["BP", "rational"]
    names += [f"E({n})" for n in range(0, N)]
    names += [f"v{n}^-1BP" for n in range(1, N + 1)]
    if N >= 3:
        names.append("v1^-1E(2)")
    return names


def algebra_from_json(doc: Union[dict, str], p: int, N: int) -> LandweberPresentation:
    if isinstance(doc, str):
        return catalog(doc, p, N)
    if not isinstance(doc, dict):
        raise AlgebraError("algebra document must be an object or a catalog name")
    if "invert" not in doc and "omit" not in doc:
        if "name" not in doc:
            raise AlgebraError("algebra document needs 'invert'/'omit' or a catalog 'name'")
        return catalog(doc["name"], p, N)
    inv = doc.get("invert", [])
    om = doc.get("omit", [])
    for x in list(inv) + list(om):
        if not isinstance(x, int):
            raise AlgebraError(f"generator indices must be integers, got {x!r}")
    # omitted indices beyond N are simply absent in the truncated model
    om = [i for i in om if i <= N]
    return LandweberPresentation(p, N, frozenset(inv), frozenset(om), doc.get("name"))


def catalog_map_exists(B: LandweberPresentation, B2: LandweberPresentation) -> bool:
    """Is there a map B -> B' under BP_* (units to units, zeros to zeros)?"""
    return B.invert <= B2.invert | ({0} if 0 in B2.invert else set()) and B.omit <= B2.omit


# -- height -----------------------------------------------------------------------

def height(B) -> Union[int, float]:
    """Largest n with B/I_n nonzero; syntactically the least inverted index."""
    if isinstance(B, QuotientPresentation):
        return B.height()
    if isinstance(B, TensorPresentation):
        return min(height(B.left), height(B.right))
    return min(B.invert) if B.invert else INF


def one_in_ideal(B: LandweberPresentation, k: int, weight_cap: Optional[int] = None) -> bool:
    """Is 1 in I_k B?  Decided by lattice membership in degree 0 of B.

    Degree 0 of a periodic B has infinite rank, so only monomials of weight at
    most ``weight_cap`` are used; a True answer is always correct.
    """
    if k == 0:
        return False
    if B.rational:
        return True
    p = B.p
    R = B.ring()
    cap = weight_cap if weight_cap is not None else gen_degree(p, B.N + 1) - 1
    field = B.rational
    basis = R.monomials(0, weight_cap=cap)
    pos = {m: i for i, m in enumerate(basis)}
    gens = []
    if not field:
        gens.append([Fraction(p) if m == R.one() else Fraction(0) for m in basis])
    for i in range(1, k):
        if f"v{i}" not in R.index:
            continue
        j = R.index[f"v{i}"]
        for m in R.monomials(-R.degrees[j], weight_cap=cap):
            mm = list(m)
            mm[j] += 1
            mm = tuple(mm)
            vec = [Fraction(0)] * len(basis)
            if mm in pos:
                vec[pos[mm]] = Fraction(1)
                gens.append(vec)
    one = [Fraction(int(m == R.one())) for m in basis]
    if field:
        if any(g[pos[R.one()]] for g in gens):
            return True
        return False
    lb = lattice_basis(gens, len(basis), p) if gens else []
    return in_lattice(lb, one, p)


def height_certificate(B: LandweberPresentation, kmax: Optional[int] = None) -> dict:
    """Syntactic height plus the ideal-membership cross-check for k <= kmax."""
    h = height(B)
    kmax = min(B.N + 1, kmax if kmax is not None else B.N + 1)
    rows = []
    for k in range(0, kmax + 1):
        zero = one_in_ideal(B, k)
        expect = k > h
        rows.append({"k": k, "quotient_zero": zero, "agrees": zero == expect})
    return {"height": "inf" if h == INF else h, "checks": rows,
            "consistent": all(r["agrees"] for r in rows),
            "stamp": f"infinite height certified only up to N={B.N}" if h == INF else None}


# -- custom presentations --------------------------------------------------------

@dataclass
class QuotientPresentation:
    """BP_*/J for an explicit list of homogeneous relations (test input only)."""

    p: int
    N: int
    relations: List[str]
    name: Optional[str] = None

    def polys(self) -> List[GradedPoly]:
        A = bp_ring(self.p, self.N)
        out = []
        for r in self.relations:
            f = parse_poly(r, A) if isinstance(r, str) else r
            if f and not f.is_homogeneous():
                raise AlgebraError(f"relation {r} is not homogeneous")
            out.append(f)
        return out

    def graded_piece(self, d: int, k: int) -> PresentedModule:
        """(A/(J + I_k))_d as a presented Z_(p)-module on the monomial basis."""
        A = bp_ring(self.p, self.N)
        basis = A.monomials(d) if d >= 0 else []
        pos = {m: i for i, m in enumerate(basis)}
        rels = []
        gens = list(self.polys())
        if k >= 1:
            gens.append(A.const(self.p))
        gens += [A.gen(f"v{i}") for i in range(1, min(k, self.N + 1))]
        for g in gens:
            if not g:
                continue
            e = d - g.degree()
            if e < 0:
                continue
            for m in A.monomials(e):
                vec = [Fraction(0)] * len(basis)
                for mm, c in (g * GradedPoly(A, {m: 1})).terms.items():
                    vec[pos[mm]] += c
                rels.append(vec)
        return PresentedModule(len(basis), rels, self.p, labels=basis)

    def height(self):
        # largest n with A/(J + I_n) nonzero in degree 0
        for k in range(0, self.N + 2):
            if self.graded_piece(0, k).structure().is_zero():
                return k - 1
        return INF


@dataclass
class TensorPresentation:
    """C = B (x)_A Gamma (x)_A B' for two catalog algebras."""

    left: LandweberPresentation
    right: LandweberPresentation

    @property
    def label(self):
        return f"{self.left.label} (x) Gamma (x) {self.right.label}"


# -- exactness -----------------------------------------------------------------------

def _mult_injective(M_src: PresentedModule, M_tgt: PresentedModule, images: List[List[Fraction]],
                    p: int) -> bool:
    K = kernel_mod(images, M_tgt, p, M_src.n)
    return all(M_src.is_zero_element(v) for v in K)


def is_landweber_exact(B, ctx: Optional[TruncationContext] = None, weight_cap: Optional[int] = None) -> dict:
    """Regular-sequence test: v_k acts injectively on B/I_kB for every k <= N.

    Returns a certificate dict with ``exact`` and one row per k.
    """
    if isinstance(B, TensorPresentation):
        l = is_landweber_exact(B.left, ctx)
        r = is_landweber_exact(B.right, ctx)
        return {"algebra": B.label, "exact": l["exact"] and r["exact"],
                "method": "structural: B (x) Gamma (x) B' is flat over B' when B is Landweber exact",
                "rows": [{"factor": "left", "exact": l["exact"]}, {"factor": "right", "exact": r["exact"]}]}
    p, N = B.p, B.N
    ctx = ctx or TruncationContext(p, N)
    rows = []
    if isinstance(B, QuotientPresentation):
        for k in range(0, N + 1):
            dk = gen_degree(p, k) if k else 0
            bad = None
            for d in range(0, ctx.dmax + 1):
                if d + dk >= ctx.soundness_bound:
                    break
                src = B.graded_piece(d, k)
                tgt = B.graded_piece(d + dk, k)
                A = bp_ring(p, N)
                src_basis = src.labels
                tpos = {m: i for i, m in enumerate(tgt.labels)}
                imgs = []
                for m in src_basis:
                    vec = [Fraction(0)] * tgt.n
                    if k == 0:
                        vec[tpos[m]] = Fraction(p)
                    else:
                        mm = list(m)
                        mm[A.index[f"v{k}"]] += 1
                        vec[tpos[tuple(mm)]] = Fraction(1)
                    imgs.append(vec)
                if not _mult_injective(src, tgt, imgs, p):
                    bad = d
                    break
            rows.append({"k": k, "injective": bad is None, "first_failure_degree": bad})
        return {"algebra": B.name or f"BP/{tuple(B.relations)}",
                "exact": all(r["injective"] for r in rows), "rows": rows,
                "window": [0, ctx.dmax]}
    cap = weight_cap if weight_cap is not None else ctx.soundness_bound - 1
    for k in range(0, N + 1):
        if B.quotient_is_zero(k):
            rows.append({"k": k, "injective": True, "reason": "B/I_k = 0"})
            continue
        if k >= 1 and k in B.omit:
            # v_k = 0 on a nonzero quotient
            rows.append({"k": k, "injective": False, "reason": f"v{k} is zero on B/I_{k} != 0"})
            continue
        R = B.ring() if k == 0 else B.quotient_ring(k)
        free = [] if k == 0 else [f"v{k}"]
        ok = True
        checked = 0
        for d in ctx.window():
            src = R.monomials(d, weight_cap=cap, free=free) if free else R.monomials(d, weight_cap=cap)
            if not src:
                continue
            # image of each basis monomial under multiplication by v_k
            if k == 0:
                mat = [[Fraction(p) if i == j else Fraction(0) for j in range(len(src))]
                       for i in range(len(src))]
            else:
                j = R.index[f"v{k}"]
                tgt = []
                for m in src:
                    mm = list(m)
                    mm[j] += 1
                    tgt.append(tuple(mm))
                tpos = {m: i for i, m in enumerate(sorted(set(tgt)))}
                mat = [[Fraction(0)] * len(src) for _ in tpos]
                for c, m in enumerate(tgt):
                    mat[tpos[m]][c] = Fraction(1)
            sd = smith_decompose(mat, p, field=B.rational)
            checked += 1
            if sd.rank < len(src):
                ok = False
                break
        rows.append({"k": k, "injective": ok, "degrees_checked": checked})
    return {"algebra": B.label, "exact": all(r["injective"] for r in rows), "rows": rows,
            "window": [ctx.dmin, ctx.dmax], "weight_cap": cap}


# -- invariant ideals -------------------------------------------------------------------

@dataclass
class InvariantIdeal:
    """I_k B, or an explicit list of generators."""

    k: Optional[int] = None
    generators: List[str] = field(default_factory=list)
    invariant: Optional[bool] = None
    note: Optional[str] = None

    def describe(self) -> str:
        if self.k is not None:
            if self.k == 0:
                return "(0)"
            gens = ["p"] + [f"v{i}" for i in range(1, self.k)]
            return "(" + ", ".join(gens) + ")"
        return "(" + ", ".join(self.generators) + ")"

    def to_json(self):
        return {"k": self.k, "ideal": self.describe(), "invariant": self.invariant, "note": self.note}


def ideal_generators(k: int, p: int, N: int) -> List[GradedPoly]:
    A = bp_ring(p, N)
    if k == 0:
        return []
    return [A.const(p)] + [A.gen(f"v{i}") for i in range(1, min(k, N + 1))]


def _in_ideal_connective(f: GradedPoly, gens: Sequence[GradedPoly], p: int) -> bool:
    """Is f in the ideal of the polynomial ring generated by homogeneous gens?"""
    if not f:
        return True
    d = f.degree()
    R = f.ring
    basis = R.monomials(d)
    pos = {m: i for i, m in enumerate(basis)}
    vecs = []
    for g in gens:
        if not g:
            continue
        e = d - g.degree()
        if e < 0:
            continue
        for m in R.monomials(e):
            prod = g * GradedPoly(R, {m: 1})
            vec = [Fraction(0)] * len(basis)
            for mm, c in prod.terms.items():
                vec[pos[mm]] += c
            vecs.append(vec)
    target = [Fraction(0)] * len(basis)
    for mm, c in f.terms.items():
        target[pos[mm]] += c
    if not vecs:
        return False
    return in_lattice(lattice_basis(vecs, len(basis), p), target, p)


def is_invariant_ideal(B: LandweberPresentation, I: Union[int, Sequence[str], InvariantIdeal]) -> bool:
    """Does the coaction of B map I into Gamma_B . I ?

    Over BP_* any finite list of homogeneous generators is decided exactly.
    Over a periodic B only ideals I_k B are handled, via the sufficient
    condition eta_R(v_j) in I_k Gamma for j < k.
    """
    if isinstance(I, InvariantIdeal):
        I = I.k if I.k is not None else I.generators
    p, N = B.p, B.N
    T = structure_maps(p, N)
    G = gamma_ring(p, N)
    A = bp_ring(p, N)
    if isinstance(I, int):
        k = I
        if k == 0:
            return True
        gens_G = [GradedPoly(G, {}) + G.const(p)] + [G.gen(f"v{i}") for i in range(1, min(k, N + 1))]
        for j in range(1, min(k, N + 1)):
            if not _in_ideal_connective(T.etaR[j], gens_G, p):
                return False
        return True
    if not B.is_connective():
        raise ScopeError("over a periodic algebra only the ideals I_k B can be tested")
    gens = [parse_poly(g, A) if isinstance(g, str) else g for g in I]
    eta = T.eta_R_map()
    from .fgl import embed
    gens_G = [embed(g, G) for g in gens]
    for g in gens:
        if not g.is_homogeneous():
            raise AlgebraError(f"generator {g} is not homogeneous")
        if not _in_ideal_connective(eta(g), gens_G, p):
            return False
    return True


def radical_invariant_ideals(B: LandweberPresentation) -> dict:
    """The list {I_k B : 0 <= k <= height B}, each checked invariant and proper."""
    h = height(B)
    top = B.N if h == INF else int(h)
    entries = []
    for k in range(0, top + 1):
        proper = not one_in_ideal(B, k)
        inv = is_invariant_ideal(B, k)
        entries.append(InvariantIdeal(k=k, invariant=inv and proper,
                                      note=None if proper else "I_k B is the unit ideal"))
    return {"algebra": B.label, "height": "inf" if h == INF else h,
            "ideals": entries,
            "stamp": f"infinite height: list truncated at N={B.N}" if h == INF else None}


def base_change_functor(B: LandweberPresentation, B2: LandweberPresentation, M):
    """B' (x)_B M for a cyclic-sum comodule M over B."""
    from .comod import CyclicSum
    if not catalog_map_exists(B, B2):
        raise ScopeError(f"no catalog map {B.label} -> {B2.label}")
    if not isinstance(M, CyclicSum):
        raise ScopeError("base change is implemented for cyclic sums over periodic algebras")
    if M.base != B:
        raise AlgebraError("comodule does not live over the source algebra")
    out = M.transport(B2)
    hB, hB2 = height(B), height(B2)
    out.certificate = {
        "equivalence": hB == hB2,
        "reason": "equal heights: base change is an equivalence of comodule categories"
        if hB == hB2 else f"heights differ ({hB} vs {hB2})",
    }
    return out
