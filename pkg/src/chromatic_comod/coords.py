"""Finite-type coordinate charts for chains B_0 (x) Gamma (x) B_1 (x) ... (x) B_m.

Over a periodic base the graded pieces of Gamma_B have infinite rank, so
equalizers are computed in charts where everything is an honest finite
linear-algebra problem.

Level k >= 1 (mod I_k, over F_p).  Coordinates are v_k (shared by all legs,
inverted), u^(i)_j for j > k (the v_j of the i-th ring) and t^(i)_j on the
i-th leg.  The right unit of leg i gives the relation

    u^(i)_{k+j} = eta_R(v_{k+j})(u^(i-1), t^(i))   mod I_k,

whose t-leading term is (unit) * v_k * t_j^(p^k).  Solving for t_j^(p^k) is a
Groebner basis with pairwise coprime leading terms, so reduced monomials form
a basis over F_p[v_k^{+-1}, u].  Inverting v_k is harmless because v_k is
regular on the chain ring mod I_k.

Level 0 (tensored with Q).  Gamma (x) Q = Q[u0] (x) Q[u1] with t_n a
polynomial tau_n(u0, u1) determined by the logarithm; every chain ring is a
Laurent polynomial ring in the u's.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .fgl import _log_coefficients, structure_maps
from .palgebra import (AlgebraError, GradedPoly, PolyRing, SparseEchelon,
                       TruncationError, gen_degree, nullspace)

Mono = Tuple[int, ...]
Elem = Dict[Mono, object]


def _modp(c, p):
    c = Fraction(c)
    if c.denominator % p == 0:
        raise AlgebraError(f"coefficient {c} is not {p}-local")
    return (c.numerator * pow(c.denominator, -1, p)) % p


class Chart:
    """Coordinates and normal forms for a chain of rings at a fixed level."""

    def __init__(self, rings: Sequence, k: int, weight_cap: Optional[int] = None):
        if not rings:
            raise AlgebraError("a chart needs at least one ring")
        self.rings = list(rings)
        self.p = p = rings[0].p
        self.N = N = rings[0].N
        self.k = k
        self.m = len(rings) - 1
        self.mod = p if k >= 1 else None
        for R in rings:
            if R.p != p or R.N != N:
                raise AlgebraError("rings in a chain must share p and N")
            if k >= 1 and R.quotient_is_zero(k):
                raise AlgebraError(f"{R.label}/I_{k} is zero; no chart")
            if k >= 1 and k in R.omit:
                raise AlgebraError(f"v{k} is killed in {R.label}; level-{k} chart does not apply")
        names, degs, inv = [], [], []
        self.level_index = None
        if k >= 1:
            self.level_index = 0
            names.append(f"v{k}")
            degs.append(gen_degree(p, k))
            if any(k in R.invert for R in rings):
                inv.append(f"v{k}")
        self.u_index: List[Dict[int, int]] = []
        self.t_index: List[Dict[int, int]] = [dict()]  # legs are 1-based
        lo = k + 1 if k >= 1 else 1
        for i, R in enumerate(rings):
            if i >= 1:
                legmap = {}
                for j in range(1, N + 1):
                    legmap[j] = len(names)
                    names.append(f"t{i}_{j}")
                    degs.append(gen_degree(p, j))
                self.t_index.append(legmap)
            umap = {}
            for j in range(lo, N + 1):
                if j in R.omit:
                    continue
                umap[j] = len(names)
                nm = f"u{i}_{j}"
                names.append(nm)
                degs.append(gen_degree(p, j))
                if j in R.invert:
                    inv.append(nm)
            self.u_index.append(umap)
        self.ring = PolyRing(names, degs, invertible=inv)
        self.n = len(names)
        self.t_positions = {ix for leg in self.t_index for ix in leg.values()}
        self.weight_cap = self._default_cap() if weight_cap is None else weight_cap
        self._pow_cache: Dict[Tuple[str, int, int], Elem] = {}
        self._nf_cache: Dict[Tuple[int, Mono], Elem] = {}
        self._building = True
        if k >= 1:
            self._build_rules()
        else:
            self._build_tau()
        self._building = False
        self._pow_cache.clear()

    # -- generic arithmetic --------------------------------------------------
    def _add(self, acc: Elem, f: Elem, scale=1):
        mod = self.mod
        for mono, c in f.items():
            v = acc.get(mono, 0) + c * scale
            if mod is not None:
                v %= mod
            if v:
                acc[mono] = v
            else:
                acc.pop(mono, None)
        return acc

    def _mul(self, a: Elem, b: Elem) -> Elem:
        out: Elem = {}
        mod = self.mod
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                mm = tuple(x + y for x, y in zip(m1, m2))
                v = out.get(mm, 0) + c1 * c2
                if mod is not None:
                    v %= mod
                if v:
                    out[mm] = v
                else:
                    out.pop(mm, None)
        return out

    def _scalar(self, c):
        return _modp(c, self.p) if self.mod is not None else Fraction(c)

    def one(self) -> Elem:
        return {(0,) * self.n: 1 if self.mod else Fraction(1)}

    def var(self, index: int, e: int = 1) -> Elem:
        m = [0] * self.n
        m[index] = e
        return {tuple(m): 1 if self.mod else Fraction(1)}

    def zero(self) -> Elem:
        return {}

    def degree(self, mono: Mono) -> int:
        return self.ring.mono_degree(mono)

    def _default_cap(self) -> int:
        bound = gen_degree(self.p, self.N + 1)
        cap = bound - 1
        if self.k >= 1:
            # keep free t_j (no relation in the model) below t_j^(p^k)
            for j in range(self.N - self.k + 1, self.N + 1):
                cap = min(cap, self.p ** self.k * gen_degree(self.p, j) - 1)
        return cap

    # -- left scalars and structure maps -------------------------------------
    def v_image(self, ring_pos: int, a: int) -> Elem:
        """The generator v_a of ring ``ring_pos`` as a chart element."""
        if a == 0:
            return {} if self.k >= 1 else {(0,) * self.n: Fraction(self.p)}
        if self.k >= 1 and a < self.k:
            return {}
        if self.k >= 1 and a == self.k:
            return self.var(self.level_index)
        ix = self.u_index[ring_pos].get(a)
        return {} if ix is None else self.var(ix)

    def convert(self, f: GradedPoly, images: Dict[str, Elem]) -> Elem:
        """Evaluate a polynomial in named variables at chart elements."""
        out: Elem = {}
        names = f.ring.names
        for mono, c in f.terms.items():
            acc = {(0,) * self.n: self._scalar(c)}
            if not acc[(0,) * self.n]:
                continue
            for i, e in enumerate(mono):
                if not e:
                    continue
                img = images[names[i]]
                acc = self._mul(acc, self._power(("img", id(img), names[i]), img, e))
                if not acc:
                    break
            self._add(out, acc)
        return out

    def _power(self, key, base: Elem, e: int) -> Elem:
        if e == 1:
            return base
        ck = (key, e)
        hit = self._pow_cache.get(ck)
        if hit is not None and hit[0] is base:
            return hit[1]
        if e < 0:
            if len(base) != 1:
                raise AlgebraError("only monomials can be inverted")
            (mono, c), = base.items()
            inv = pow(c, -1, self.mod) if self.mod else 1 / c
            val = {tuple(-x for x in mono): inv}
            val = self._power(key + ("inv",), val, -e)
        elif e % 2 == 0:
            h = self._power(key, base, e // 2)
            val = self._mul(h, h)
            if self.mod:
                val = self.normal_form(val)
        else:
            val = self._mul(self._power(key, base, e - 1), base)
            if self.mod:
                val = self.normal_form(val)
        self._pow_cache[ck] = (base, val)
        return val

    def gamma_images(self, ring_pos: int, legs: Sequence[int]) -> Dict[str, Elem]:
        """Images for a polynomial in v, t, t', ... with scalars on ring ``ring_pos``."""
        imgs = {}
        for a in range(1, self.N + 1):
            imgs[f"v{a}"] = self.v_image(ring_pos, a)
        for s, leg in enumerate(legs):
            prime = "'" * s
            for j in range(1, self.N + 1):
                imgs[f"t{j}{prime}"] = self.t_element(leg, j)
        return imgs

    def t_element(self, leg: int, j: int) -> Elem:
        if self.k >= 1:
            return self.var(self.t_index[leg][j])
        return self.tau[leg][j]

    # -- level k >= 1: reduction rules -----------------------------------------
    def _build_rules(self):
        T = structure_maps(self.p, self.N)
        p, k = self.p, self.k
        q = p ** k
        self.rules: Dict[Tuple[int, int], Elem] = {}
        for leg in range(1, self.m + 1):
            imgs = self.gamma_images(leg - 1, [leg])
            for j in range(1, self.N - k + 1):
                E = self.convert(T.etaR[k + j], imgs)
                tj = self.t_index[leg][j]
                later = [self.t_index[leg][a] for a in range(j + 1, self.N + 1)]
                lead = None
                rest: Elem = {}
                for mono, c in E.items():
                    if any(mono[a] for a in later):
                        raise AlgebraError(f"right unit of v{k + j} involves t beyond t{j}")
                    if mono[tj] > q:
                        raise AlgebraError(f"right unit of v{k + j} has t{j}-exponent above p^k")
                    if mono[tj] == q:
                        if lead is not None:
                            raise AlgebraError(f"right unit of v{k + j}: several leading terms")
                        lead = (mono, c)
                    else:
                        rest[mono] = c
                if lead is None:
                    raise AlgebraError(f"right unit of v{k + j} lacks the v{k} t{j}^{q} term")
                mono, c = lead
                expect = [0] * self.n
                expect[self.level_index] = 1
                expect[tj] = q
                if mono != tuple(expect):
                    raise AlgebraError(f"leading term of right unit of v{k + j} is not v{k} t{j}^{q}")
                # t_j^q = (u - rest) / (c v_k)
                u = self.v_image(leg, k + j)
                num = self._add(dict(u), rest, -1)
                inv = pow(c, -1, p)
                scale = self.var(self.level_index, -1)
                (sm, _), = scale.items()
                rule = {}
                for mm, cc in num.items():
                    m2 = tuple(x + y for x, y in zip(mm, sm))
                    rule[m2] = (cc * inv) % p
                self.rules[(leg, j)] = rule

    def _nf_leg(self, leg: int, texp: Mono) -> Elem:
        key = (leg, texp)
        hit = self._nf_cache.get(key)
        if hit is not None:
            return hit
        q = self.p ** self.k
        idx = self.t_index[leg]
        red = None
        for j in range(self.N, 0, -1):
            if texp[j - 1] >= q:
                if (leg, j) in self.rules:
                    red = j
                    break
                raise TruncationError(
                    f"t{j}^{texp[j - 1]} on leg {leg} needs v{self.k + j}, beyond N={self.N}")
        if red is None:
            m = [0] * self.n
            for j in range(1, self.N + 1):
                m[idx[j]] = texp[j - 1]
            val = {tuple(m): 1}
        else:
            lowered = list(texp)
            lowered[red - 1] -= q
            val = {}
            for mono, c in self.rules[(leg, red)].items():
                te = list(lowered)
                base = list(mono)
                for j in range(1, self.N + 1):
                    te[j - 1] += base[idx[j]]
                    base[idx[j]] = 0
                sub = self._nf_leg(leg, tuple(te))
                bt = tuple(base)
                for m2, c2 in sub.items():
                    mm = tuple(x + y for x, y in zip(bt, m2))
                    v = (val.get(mm, 0) + c * c2) % self.p
                    if v:
                        val[mm] = v
                    else:
                        val.pop(mm, None)
        self._nf_cache[key] = val
        return val

    def normal_form(self, f: Elem) -> Elem:
        if self.k == 0 or self._building:
            return f
        q = self.p ** self.k
        out: Elem = {}
        for mono, c in f.items():
            if all(mono[ix] < q for ix in self.t_positions):
                v = (out.get(mono, 0) + c) % self.p
                if v:
                    out[mono] = v
                else:
                    out.pop(mono, None)
                continue
            base = list(mono)
            acc = {}
            first = True
            for leg in range(1, self.m + 1):
                idx = self.t_index[leg]
                te = tuple(mono[idx[j]] for j in range(1, self.N + 1))
                for j in range(1, self.N + 1):
                    base[idx[j]] = 0
                piece = self._nf_leg(leg, te)
                acc = piece if first else self._mul(acc, piece)
                first = False
            bt = tuple(base)
            for m2, c2 in acc.items():
                mm = tuple(x + y for x, y in zip(bt, m2))
                v = (out.get(mm, 0) + c * c2) % self.p
                if v:
                    out[mm] = v
                else:
                    out.pop(mm, None)
        return out

    # -- level 0: tau ---------------------------------------------------------
    def _build_tau(self):
        logs = _log_coefficients(self.p, self.N)
        self.logs_at = []
        for i in range(self.m + 1):
            imgs = {f"v{a}": self.v_image(i, a) for a in range(1, self.N + 1)}
            self.logs_at.append([self.convert(l, imgs) for l in logs.coefficients])
        self.tau: List[Dict[int, Elem]] = [dict()]
        for leg in range(1, self.m + 1):
            self.tau.append(self.tau_between(leg - 1, leg))

    def tau_between(self, i: int, j: int) -> Dict[int, Elem]:
        """The t-coordinates of the strict isomorphism from the group law at ring i to ring j."""
        prev, cur = self.logs_at[i], self.logs_at[j]
        tau = {0: self.one()}
        for n in range(1, self.N + 1):
            acc = dict(cur[n])
            for a in range(1, n + 1):
                term = self._mul(prev[a], _plain_power(self, tau[n - a], self.p ** a))
                self._add(acc, term, -1)
            tau[n] = acc
        del tau[0]
        return tau

    # -- genuine monomials ------------------------------------------------------
    def genuine_monomials(self, degree: int, positions: Optional[Sequence[int]] = None) -> List[Mono]:
        names = None if positions is None else [self.ring.names[i] for i in positions]
        free = [self.ring.names[self.level_index]] if self.k >= 1 else []
        if names is not None and free and free[0] not in names:
            free = []
        return self.ring.monomials(degree, weight_cap=self.weight_cap, allowed=names, free=free)

    def image(self, mono: Mono) -> Elem:
        """Chart element of a genuine monomial."""
        if self.k >= 1:
            return self.normal_form({mono: 1})
        base = list(mono)
        acc = None
        for leg in range(1, self.m + 1):
            for j, ix in self.t_index[leg].items():
                e = mono[ix]
                if e:
                    base[ix] = 0
                    piece = self._power(("tau", leg, j), self.tau[leg][j], e)
                    acc = piece if acc is None else self._mul(acc, piece)
        bt = tuple(base)
        if acc is None:
            return {bt: Fraction(1)}
        return {tuple(x + y for x, y in zip(bt, m2)): c for m2, c in acc.items()}

    def weight(self, mono: Mono) -> int:
        return sum(abs(e) * d for i, (e, d) in enumerate(zip(mono, self.ring.degrees))
                   if i != self.level_index)


def _plain_power(chart: Chart, f: Elem, e: int) -> Elem:
    out = chart.one()
    for _ in range(e):
        out = chart._mul(out, f)
    return out


class ChartMap:
    """Ring map between chain charts, given on genuine generators."""

    def __init__(self, source: Chart, target: Chart, images: Dict[int, Elem]):
        self.source = source
        self.target = target
        self.images = images
        self._cache: Dict[Tuple[int, int], Elem] = {}
        missing = [source.ring.names[i] for i in range(source.n) if i not in images]
        if missing:
            raise AlgebraError(f"chart map lacks images for {missing}")

    def _pow(self, i: int, e: int) -> Elem:
        key = (i, e)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        T = self.target
        base = self.images[i]
        if e < 0:
            if len(base) != 1:
                raise AlgebraError("image of an inverted generator is not a monomial")
            (mono, c), = base.items()
            inv = pow(c, -1, T.mod) if T.mod else 1 / c
            val = {tuple(-x for x in mono): inv}
            if e != -1:
                val = _plain_power(T, val, -e)
        elif e == 1:
            val = base
        elif e % 2 == 0:
            h = self._pow(i, e // 2)
            val = T.normal_form(T._mul(h, h))
        else:
            val = T.normal_form(T._mul(self._pow(i, e - 1), base))
        self._cache[key] = val
        return val

    def __call__(self, mono: Mono) -> Elem:
        T = self.target
        acc = T.one()
        for i, e in enumerate(mono):
            if e:
                acc = T.normal_form(T._mul(acc, self._pow(i, e)))
                if not acc:
                    break
        return acc

    def apply(self, vec: Dict[Mono, object]) -> Elem:
        out: Elem = {}
        for mono, c in vec.items():
            self.target._add(out, self(mono), c)
        return out


# -- standard charts and maps -----------------------------------------------------

def identity_images(source: Chart, target: Chart, ring_map: Dict[int, int],
                    leg_map: Dict[int, int]) -> Dict[int, Elem]:
    """Send ring i of the source to ring ring_map[i] of the target, legs likewise."""
    imgs: Dict[int, Elem] = {}
    if source.k >= 1:
        imgs[source.level_index] = target.var(target.level_index)
    for i, umap in enumerate(source.u_index):
        for j, ix in umap.items():
            imgs[ix] = target.v_image(ring_map[i], j)
    for leg in range(1, source.m + 1):
        for j, ix in source.t_index[leg].items():
            imgs[ix] = target.t_element(leg_map[leg], j) if leg in leg_map else {}
    return imgs


def coproduct_images(source: Chart, target: Chart) -> Dict[int, Elem]:
    """Chain [R0, R1] -> [R0, R1, R1]: t -> Delta(t) on legs 1, 2; R1 -> third ring."""
    if source.m != 1 or target.m != 2:
        raise AlgebraError("coproduct chart map needs chains of length 1 and 2")
    T = structure_maps(source.p, source.N)
    imgs = identity_images(source, target, {0: 0, 1: 2}, {})
    gimgs = target.gamma_images(0, [1, 2])
    for j, ix in source.t_index[1].items():
        imgs[ix] = target.normal_form(target.convert(T.deltaT[j], gimgs))
    return imgs


def counit_images(source: Chart, target: Chart) -> Dict[int, Elem]:
    """Chain [R0, R1] -> [R1]: u0 -> u, t -> 0, u1 -> u (the counit, epsilon)."""
    if source.m != 1 or target.m != 0:
        raise AlgebraError("counit chart map needs chains of length 1 and 0")
    return identity_images(source, target, {0: 0, 1: 0}, {})


def vector_rank(vectors: Sequence[Elem], mod: Optional[int]) -> int:
    ech = SparseEchelon(mod)
    return sum(1 for v in vectors if ech.add(v))


def equalizer(source: Chart, f: ChartMap, g: ChartMap, degree: int,
              positions: Optional[Sequence[int]] = None) -> dict:
    """Elements y of the span of genuine monomials of ``degree`` with f(y) = g(y).

    Returns spanning monomials, their chart images, a basis of the kernel
    (as coefficient dicts on monomials, modulo chart relations) and ranks.
    """
    mons = source.genuine_monomials(degree, positions)
    imgs = [source.image(m) for m in mons]
    diffs = []
    T = f.target
    for m in mons:
        d = dict(f(m))
        T._add(d, g(m), -1)
        diffs.append(d)
    span_rank = vector_rank(imgs, source.mod)
    diff_rank = vector_rank(diffs, T.mod)
    ker = nullspace(diffs, source.mod)
    # drop combinations that already vanish in the chart
    basis = []
    ech = SparseEchelon(source.mod)
    for combo in ker:
        el: Elem = {}
        for j, c in combo.items():
            source._add(el, imgs[j], c)
        if ech.add(el):
            basis.append({mons[j]: c for j, c in combo.items()})
    if len(basis) != span_rank - diff_rank:
        raise AlgebraError("equalizer rank bookkeeping is inconsistent")
    return {"monomials": mons, "span_rank": span_rank, "diff_rank": diff_rank,
            "dimension": span_rank - diff_rank, "basis": basis}


def chart_rank(chart: Chart, vectors: Sequence[Dict[Mono, object]]) -> int:
    """Rank of combinations of genuine monomials after passing to the chart."""
    els = []
    for vec in vectors:
        el: Elem = {}
        for mono, c in vec.items():
            chart._add(el, chart.image(mono), c)
        els.append(el)
    return vector_rank(els, chart.mod)
