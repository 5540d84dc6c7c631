"""L_n, Koszul and cobar Ext in low degrees, locality tests and classification."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Tuple

from . import coords
from .comod import (Comodule, CyclicSum, PrimitiveResult, Summand, as_cyclic, landweber_filtration,
                    phi_lower, phi_upper, primitives, right_unit_iterated, summand_primitives,
                    torsion_submodule)
from .fgl import embed, gamma_ring, structure_maps
from .hopf import HeightMismatch
from .landweber import INF, LandweberPresentation, ScopeError, catalog, height
from .palgebra import (GradedPoly, ModuleStructure, PresentedModule, Substitution, TruncationContext,
                       gen_degree, homology, lattice_structure, valuation)


@dataclass
class ExtTable:
    """(s, d) -> isomorphism type of an Ext group."""

    entries: Dict[Tuple[int, int], ModuleStructure] = field(default_factory=dict)
    window: Tuple[int, int] = (0, 0)
    stamp: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.entries[key]

    def column(self, s):
        return {d: v for (ss, d), v in sorted(self.entries.items()) if ss == s}

    def is_zero(self, s=None):
        return all(v.is_zero() for (ss, _), v in self.entries.items() if s is None or ss == s)

    def to_json(self):
        return {"window": list(self.window), "stamp": self.stamp,
                "entries": [{"s": s, "d": d, "group": v.describe(), "structure": v.to_json()}
                            for (s, d), v in sorted(self.entries.items())]}


# -- localization ---------------------------------------------------------------------

@dataclass
class LocalizationResult:
    n: int
    source: object
    module: CyclicSum
    certificate: object
    kernel: Dict[int, int]
    cokernel: Dict[int, int]
    kernel_summands: List[str]
    cokernel_killed_by: str
    window: Tuple[int, int]

    @property
    def verified(self) -> bool:
        return self.certificate.verified

    def structure(self, d):
        return self.module.structure(d)

    def isomorphic_to(self, other, window=None) -> Dict[int, bool]:
        lo, hi = window or self.window
        return {d: _same_structure(self.module.structure(d), _structure(other, d))
                for d in range(lo, hi + 1)}

    def to_json(self):
        return {"n": self.n, "L_nM": self.module.describe(), "verified": self.verified,
                "window": list(self.window),
                "degrees": {str(d): self.module.structure(d).describe()
                            for d in range(self.window[0], self.window[1] + 1)},
                "iota": {"kernel_summands": self.kernel_summands,
                         "kernel_lengths": {str(d): v for d, v in self.kernel.items() if v},
                         "cokernel_lengths": {str(d): v for d, v in self.cokernel.items() if v},
                         "cokernel_killed_by": self.cokernel_killed_by},
                "certificate": self.certificate.to_json()}


def _structure(M, d):
    if isinstance(M, CyclicSum):
        return M.structure(d)
    if isinstance(M, LocalizationResult):
        return M.module.structure(d)
    return M.structure(d)


def _same_structure(a: ModuleStructure, b: ModuleStructure) -> bool:
    return a.rank == b.rank and sorted(a.torsion) == sorted(b.torsion)


def localize(M, n: int, window: Tuple[int, int], weight_cap: Optional[int] = None) -> LocalizationResult:
    """L_n M as Phi^* Phi_* M with B = E(n)."""
    C = as_cyclic(M)
    if n < 0 or n > C.N - 1:
        raise ScopeError(f"n must lie in 0..{C.N - 1} so that E(n) fits the truncation")
    En = catalog(f"E({n})", C.p, C.N)
    if not C.base.is_connective():
        # re-anchor a periodic cyclic sum over BP_* (as produced by a previous localization)
        if C.base.omit:
            raise ScopeError("localize starts from a comodule over BP_*")
    N_ = C.transport(En)
    N_.weight_cap = weight_cap
    up = phi_upper(N_, window, weight_cap)
    L = up.module
    L.weight_cap = weight_cap
    dropped = [s for s in C.nonzero_summands() if s not in [t for t in N_.summands]]
    lo, hi = window
    kernel, coker = {}, {}
    for d in range(lo, hi + 1):
        kernel[d] = sum(len(C.summand_monomials(s, d)) for s in dropped)
        c = 0
        for s in L.summands:
            if s.periodic and s.k >= 1:
                ch = coords.Chart([L.ring_of(s)], s.k, weight_cap)
                c += sum(1 for m in ch.genuine_monomials(d - s.shift) if m[ch.level_index] < 0)
            elif s.periodic and s.k == 0:
                c += len(coords.Chart([L.ring_of(s)], 0, weight_cap).genuine_monomials(d - s.shift))
        coker[d] = c
    return LocalizationResult(n, M, L, up, kernel, coker,
                              [s.describe("BP") for s in dropped],
                              f"v{n}^a on v{n}^-a x" if n else "p^a on p^-a x", window)


# -- Koszul Ext ------------------------------------------------------------------------

def _koszul_sign(S, i):
    return -1 if sum(1 for x in S if x < i) % 2 else 1


def koszul_ext(M, k: int, s: int, window: Tuple[int, int], weight_cap: Optional[int] = None) -> ExtTable:
    """Ext^s_A(A/I_k, M) from the Koszul complex on p, v_1, ..., v_{k-1}."""
    if isinstance(M, CyclicSum):
        return _koszul_cyclic(M, k, s, window, weight_cap)
    p, N = M.p, M.N
    if k > N:
        raise ScopeError(f"k must be at most N = {N}")
    degs = [0] + [gen_degree(p, i) for i in range(1, k)]
    gens = [M.A.const(p)] + [M.A.gen(f"v{i}") for i in range(1, k)]
    bound = M.ctx.soundness_bound
    lo, hi = window
    table = ExtTable(window=window, stamp={**M.ctx.stamp(), "k": k, "s": s})

    def cochains(t, d):
        out = []
        for S in combinations(range(k), t):
            e = d + sum(degs[i] for i in S)
            if e >= bound:
                return None
            out.append((S, e, M.piece(e)))
        return out

    for d in range(lo, hi + 1):
        mid = cochains(s, d)
        nxt = cochains(s + 1, d) if s + 1 <= k else []
        prv = cochains(s - 1, d) if s >= 1 else []
        if mid is None or nxt is None or prv is None:
            continue
        offs, tot = {}, 0
        for S, e, pc in mid:
            offs[S] = tot
            tot += pc.n
        rels = []
        for S, e, pc in mid:
            for r in pc.module.relations:
                v = [Fraction(0)] * tot
                v[offs[S]:offs[S] + pc.n] = r
                rels.append(v)
        middle = PresentedModule(tot, rels, p)
        noffs, ntot = {}, 0
        for T, e, pc in nxt:
            noffs[T] = ntot
            ntot += pc.n
        nrels = []
        for T, e, pc in nxt:
            for r in pc.module.relations:
                v = [Fraction(0)] * ntot
                v[noffs[T]:noffs[T] + pc.n] = r
                nrels.append(v)
        target = PresentedModule(ntot, nrels, p)
        # d: C^s -> C^{s+1}, (S, x) -> sum_i sign * v_i x at S + {i}
        fcols = []
        for S, e, pc in mid:
            for b in range(pc.n):
                col = [Fraction(0)] * ntot
                unit = [Fraction(int(b == c)) for c in range(pc.n)]
                for i in range(k):
                    if i in S:
                        continue
                    T = tuple(sorted(S + (i,)))
                    img = M.multiply(e, unit, gens[i])
                    sg = _koszul_sign(S, i)
                    for c, x in enumerate(img):
                        col[noffs[T] + c] += sg * x
                fcols.append(col)
        gcols = []
        for R, e, pc in prv:
            for b in range(pc.n):
                col = [Fraction(0)] * tot
                unit = [Fraction(int(b == c)) for c in range(pc.n)]
                for i in range(k):
                    if i in R:
                        continue
                    S = tuple(sorted(R + (i,)))
                    img = M.multiply(e, unit, gens[i])
                    sg = _koszul_sign(R, i)
                    for c, x in enumerate(img):
                        col[offs[S] + c] += sg * x
                gcols.append(col)
        table.entries[(s, d)] = homology(fcols, target, gcols, middle, p)
    return table


def _koszul_cyclic(M: CyclicSum, k: int, s: int, window, weight_cap) -> ExtTable:
    """Koszul cohomology of cyclic summands, split by the monomial class kappa.

    On R/I_j every cochain (S, mu) has class kappa = mu / prod_{i in S} v_i and
    the differential preserves it; each class is a complex of length <= k over
    the finite set of subsets S, so its cohomology is exact even though
    the kappa are enumerated inside a weight cap.
    """
    p = M.p
    lo, hi = window
    table = ExtTable(window=window, stamp={"k": k, "s": s, "weight_cap": weight_cap,
                                           "enumeration": "kappa classes from weight-capped monomials"})
    degs = [0] + [gen_degree(p, i) for i in range(1, k)]
    for d in range(lo, hi + 1):
        rank, tors = 0, []
        for sm in M.nonzero_summands():
            R = M.ring_of(sm)
            if sm.e is not None:
                raise ScopeError("Koszul Ext on truncated summands is not supported")
            j = sm.k
            ch = coords.Chart([R], j, weight_cap)
            rational = R.rational
            names = ch.ring.names

            def var_index(i):
                if j >= 1 and i == j:
                    return ch.level_index
                return ch.u_index[0].get(i)

            classes = set()
            for t in range(max(0, s - 1), min(k, s + 1) + 1):
                for S in combinations(range(k), t):
                    e = d - sm.shift + sum(degs[i] for i in S)
                    for mu in ch.genuine_monomials(e):
                        kap = list(mu)
                        ok = True
                        for i in S:
                            if i == 0:
                                continue
                            vi = var_index(i)
                            if vi is None:
                                ok = False
                                break
                            kap[vi] -= 1
                        if ok:
                            classes.add(tuple(kap))
            for kap in classes:
                st = _class_cohomology(ch, kap, j, k, s, var_index, p, rational)
                rank += st.rank
                tors += st.torsion
        table.entries[(s, d)] = ModuleStructure(rank, sorted(tors), p, rational=M.base.rational)
    return table


def _class_cohomology(ch, kap, j, k, s, var_index, p, rational):
    inv = ch.ring.invertible

    def member(S):
        mu = list(kap)
        for i in S:
            if i == 0:
                continue
            vi = var_index(i)
            if vi is None:
                return None
            mu[vi] += 1
        for x, e in enumerate(mu):
            if e < 0 and x not in inv:
                return None
        return tuple(mu)

    def basis(t):
        return [S for S in combinations(range(k), t) if member(S) is not None]

    def action(i):
        # how v_i acts on R/I_j: 0 below j; p is a scalar; others shift the monomial
        if i < j:
            return Fraction(0)
        if i == 0:
            return Fraction(p)
        return Fraction(1)

    coeff_rel = j >= 1  # F_p coefficients

    def module(bs):
        rels = [[Fraction(p) if a == b else Fraction(0) for a in range(len(bs))] for b in range(len(bs))] \
            if coeff_rel else []
        return PresentedModule(len(bs), rels, p)

    def cols(src, tgt):
        pos = {S: a for a, S in enumerate(tgt)}
        out = []
        for S in src:
            col = [Fraction(0)] * len(tgt)
            for i in range(k):
                if i in S:
                    continue
                T = tuple(sorted(S + (i,)))
                if T in pos:
                    col[pos[T]] += _koszul_sign(S, i) * action(i)
            out.append(col)
        return out

    mid = basis(s)
    if not mid:
        return ModuleStructure(0, [], p)
    nxt = basis(s + 1) if s + 1 <= k else []
    prv = basis(s - 1) if s >= 1 else []
    return homology(cols(mid, nxt), module(nxt), cols(prv, mid), module(mid), p, rational)


# -- locality and classification --------------------------------------------------------

def is_local(M, n: int, window: Tuple[int, int], weight_cap: Optional[int] = None) -> dict:
    """No v_n-torsion and Ext^1_A(A/I_{n+1}, M) = 0 in the window."""
    T = torsion_submodule(M, n)
    no_torsion = T.is_zero() and not T.blocks if isinstance(M, CyclicSum) else T.is_zero()
    kz = koszul_ext(M, n + 1, 1, window, weight_cap)
    bad = [d for (s, d), v in sorted(kz.entries.items()) if not v.is_zero()]
    return {"local": no_torsion and not bad, "torsion_free": no_torsion,
            "koszul_ext1_zero": not bad, "koszul_nonzero_degrees": bad, "window": list(window)}


def classify_torsion_theory(M, stage_bound: int = 32) -> dict:
    """n with T_n the hereditary torsion theory generated by M."""
    if (isinstance(M, CyclicSum) and M.is_zero()) or (isinstance(M, Comodule) and M.is_zero()):
        return {"n": None, "verdict": "zero comodule generates no torsion theory"}
    rec = landweber_filtration(M, stage_bound=stage_bound)
    jmin = min(j for _, j in rec.stages)
    return {"n": jmin - 1, "stages": rec.stages, "filtration": rec.to_json()}


# -- Hom and change of rings -----------------------------------------------------------------

def hom_comodule(B: LandweberPresentation, M, window: Tuple[int, int],
                 weight_cap: Optional[int] = None) -> Dict[int, PrimitiveResult]:
    """Hom(B, M) over Gamma_B, degree by degree."""
    if isinstance(M, Comodule):
        if B.is_connective():
            return {d: primitives(M, d) for d in range(window[0], window[1] + 1)}
        M = phi_lower(M, B)
    if M.base != B:
        M = M.transport(B)
    M.weight_cap = weight_cap if weight_cap is not None else M.weight_cap
    return {d: M.primitives(d) for d in range(window[0], window[1] + 1)}


def _monomial_relations(M: Comodule):
    """(generator, coefficient, exponents) for each relation row; rows must be single monomials."""
    out = []
    for row in M.relations:
        nz = [(j, c) for j, c in enumerate(row) if c]
        if len(nz) != 1 or len(nz[0][1].terms) != 1:
            raise ScopeError("pushforward test needs relations that are single monomials")
        j, c = nz[0]
        (mono, coeff), = c.terms.items()
        out.append((j, coeff, mono))
    return out


def _term_survives(B: LandweberPresentation, rels, j, coeff, mono) -> bool:
    """Is coeff*mono*g_j nonzero in B (x) M, M a quotient by monomial relations?"""
    killed = [i for i in B.omit if i >= 1]
    if any(mono[i - 1] for i in killed):
        return False
    p_unit = 0 in B.invert or B.rational
    for j2, c2, m in rels:
        if j2 != j or any(m[i - 1] for i in killed):
            continue
        divides = all(m[i] <= mono[i] or (i + 1) in B.invert for i in range(len(mono)))
        if divides and (p_unit or valuation(coeff, B.p) >= valuation(c2, B.p)):
            return False
    return True


def pushforward_primitive(M: Comodule, B: LandweberPresentation, window: Tuple[int, int]) -> dict:
    """A primitive x of M over BP_* whose image 1 (x) x in B (x) M is nonzero.

    The image of a primitive is primitive over Gamma_B, so a hit certifies
    Hom(B, B (x) M) != 0.  With monomial relations B (x) M splits over
    monomials, which makes the nonvanishing test exact.
    """
    rels = _monomial_relations(M)
    for d in range(window[0], window[1] + 1):
        pr = primitives(M, d)
        for vec in pr.vectors:
            elem = M.element(d, vec)
            for j, c in enumerate(elem):
                for mono, coeff in c.terms.items():
                    if _term_survives(B, rels, j, coeff, mono):
                        return {"found": True, "degree": d, "witness": M.format_element(elem),
                                "algebra": B.label}
    return {"found": False, "degree": None, "witness": None, "algebra": B.label}


def change_of_rings_check(B: LandweberPresentation, B2: LandweberPresentation, M: CyclicSum,
                          window: Tuple[int, int], weight_cap: Optional[int] = None) -> dict:
    hB, hB2 = height(B), height(B2)
    if hB != hB2:
        raise HeightMismatch(f"heights differ: {hB} != {hB2}")
    left = hom_comodule(B, M, window, weight_cap)
    M2 = M.transport(B2)
    right = hom_comodule(B2, M2, window, weight_cap)
    rows, bad = {}, []
    for d in range(window[0], window[1] + 1):
        a, b = left[d].structure, right[d].structure
        ok = _same_structure(a, b)
        rows[d] = {"B": a.describe(), "B'": b.describe(), "match": ok}
        if not ok:
            bad.append(d)
    return {"B": B.label, "B'": B2.label, "M": M.describe(), "match": not bad,
            "mismatched_degrees": bad, "degrees": rows, "window": list(window)}


# -- cobar complex ------------------------------------------------------------------------

class _Cobar:
    """Normalized cobar complex Gamma-bar^{(x)s} (x) M in left coordinates."""

    def __init__(self, M: Comodule):
        if not isinstance(M, Comodule):
            raise ScopeError("cobar_ext needs a comodule over the connective algebroid")
        self.M = M
        self.p, self.N = M.p, M.N
        self.T = structure_maps(M.p, M.N)
        self._pieces = {}
        self._maps = {}

    def ring(self, s):
        return gamma_ring(self.p, self.N, s)

    def _nondegenerate(self, s, mono):
        N = self.N
        return all(any(mono[N + leg * N: N + (leg + 1) * N]) for leg in range(s))

    def piece(self, s, d):
        key = (s, d)
        if key in self._pieces:
            return self._pieces[key]
        M = self.M
        Gs = self.ring(s)
        basis = []
        for j, dj in enumerate(M.degrees):
            if d - dj >= 0:
                basis += [(j, m) for m in Gs.monomials(d - dj) if self._nondegenerate(s, m)]
        pos = {b: i for i, b in enumerate(basis)}
        X = right_unit_iterated(self.p, self.N, s) if s else None
        if s:
            eta = Substitution(M.A, Gs, {f"v{a}": X[a] for a in X})
        else:
            eta = Substitution(M.A, Gs, {f"v{a}": Gs.gen(f"v{a}") for a in range(1, self.N + 1)})
        rels = []
        for r, dr in zip(M.relations, M.relation_degrees):
            if dr is None or d - dr < 0:
                continue
            er = [eta(c) for c in r]
            for x in Gs.monomials(d - dr):
                if not self._nondegenerate(s, x):
                    continue
                vec = [Fraction(0)] * len(basis)
                for j, c in enumerate(er):
                    for mm, cc in c.terms.items():
                        vec[pos[(j, tuple(a + b for a, b in zip(x, mm)))]] += cc
                rels.append(vec)
        out = (basis, pos, PresentedModule(len(basis), rels, self.p))
        self._pieces[key] = out
        return out

    def _face_maps(self, s):
        if s in self._maps:
            return self._maps[s]
        N, T = self.N, self.T
        Gs, Gt = self.ring(s), self.ring(s + 1)

        def leg_name(j, leg):
            return f"t{j}" + "'" * (leg - 1)

        def lift(poly, R):
            return Substitution(poly.ring, R, {n: R.gen(n) for n in poly.ring.names})(poly)

        faces = []
        # 0: a new leg in front
        X1 = right_unit_iterated(self.p, N, 1)
        imgs = {f"v{a}": lift(X1[a], Gt) for a in range(1, N + 1)}
        for leg in range(1, s + 1):
            for j in range(1, N + 1):
                imgs[leg_name(j, leg)] = Gt.gen(leg_name(j, leg + 1))
        faces.append(Substitution(Gs, Gt, imgs))
        # i: coproduct on leg i
        for i in range(1, s + 1):
            Xi = right_unit_iterated(self.p, N, i - 1) if i > 1 else None
            imgs = {f"v{a}": Gt.gen(f"v{a}") for a in range(1, N + 1)}
            for leg in range(1, s + 1):
                for j in range(1, N + 1):
                    if leg < i:
                        imgs[leg_name(j, leg)] = Gt.gen(leg_name(j, leg))
                    elif leg > i:
                        imgs[leg_name(j, leg)] = Gt.gen(leg_name(j, leg + 1))
            dimgs = {f"v{a}": (lift(Xi[a], Gt) if Xi else Gt.gen(f"v{a}")) for a in range(1, N + 1)}
            dimgs.update({f"t{j}": Gt.gen(leg_name(j, i)) for j in range(1, N + 1)})
            dimgs.update({f"t{j}'": Gt.gen(leg_name(j, i + 1)) for j in range(1, N + 1)})
            dsub = Substitution(T.G2, Gt, dimgs)
            for j in range(1, N + 1):
                imgs[leg_name(j, i)] = dsub(T.deltaT[j])
            faces.append(Substitution(Gs, Gt, imgs))
        # last: the coaction, scalars to the right of leg s
        Xs = right_unit_iterated(self.p, N, s) if s else None
        gimgs = {f"v{a}": (lift(Xs[a], Gt) if Xs else Gt.gen(f"v{a}")) for a in range(1, N + 1)}
        gimgs.update({f"t{j}": Gt.gen(leg_name(j, s + 1)) for j in range(1, N + 1)})
        gsub = Substitution(self.ring(1), Gt, gimgs)
        emb = Substitution(Gs, Gt, {n: Gt.gen(n) for n in Gs.names})
        coact = [[gsub(c) if c else None for c in row] for row in self.M.coaction]
        self._maps[s] = (faces, emb, coact)
        return self._maps[s]

    def differential(self, s, d):
        """Columns of d^s: Omega^s_d -> Omega^{s+1}_d."""
        basis, _, _ = self.piece(s, d)
        tbasis, tpos, _ = self.piece(s + 1, d)
        faces, emb, coact = self._face_maps(s)
        Gs = self.ring(s)
        cols = []
        for (j, mono) in basis:
            x = GradedPoly(Gs, {mono: Fraction(1)})
            col = [Fraction(0)] * len(tbasis)

            def put(poly, k, sign):
                for mm, c in poly.terms.items():
                    if not self._nondegenerate(s + 1, mm):
                        continue
                    col[tpos[(k, mm)]] += sign * c

            for i, f in enumerate(faces):
                put(f(x), j, -1 if i % 2 else 1)
            ex = emb(x)
            sign = -1 if (s + 1) % 2 else 1
            for k, g in enumerate(coact[j]):
                if g is not None:
                    put(ex * g, k, sign)
            cols.append(col)
        return cols


def cobar_ext(M, s_max: int = 2, window: Tuple[int, int] = (0, 12)) -> ExtTable:
    """Cohomology of the normalized cobar complex for s <= s_max <= 2."""
    if isinstance(M, CyclicSum):
        if not M.base.is_connective() or any(x.periodic for x in M.summands):
            raise ScopeError("cobar Ext is only offered over the connective algebroid")
        M = M.as_comodule()
    if s_max > 2:
        raise ScopeError("cobar Ext is computed for s <= 2")
    cb = _Cobar(M)
    lo, hi = window
    table = ExtTable(window=window, stamp={**M.ctx.stamp(), "complex": "normalized cobar, left coordinates"})
    for d in range(max(lo, 0), hi + 1):
        M.ctx.check_degree(d)
        for s in range(0, s_max + 1):
            basis, _, mid = cb.piece(s, d)
            _, _, tgt = cb.piece(s + 1, d)
            f = cb.differential(s, d)
            g = cb.differential(s - 1, d) if s >= 1 else []
            table.entries[(s, d)] = homology(f, tgt, g, mid, M.p)
    return table
