"""p-typical formal group law data and the structure maps of BP_*BP.

Everything is computed rationally from the logarithm and then checked to be
p-integral.  Generators v_i are the Araki ones:

    p * l_n = sum_{0 <= i <= n} l_i * v_{n-i}^(p^i),   v_0 = p.

Coordinates: Gamma = A[t1..tN]; Gamma (x) Gamma = A[t, t'] with all scalars
on the left leg; the triple tensor adds t''.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List

from .palgebra import (AlgebraError, GradedPoly, PolyRing, Substitution,
                       TruncationContext, gen_degree)


class IntegralityError(AlgebraError):
    """A structure-map image has a coefficient outside Z_(p)."""


def v_names(N):
    return [f"v{i}" for i in range(1, N + 1)]


def t_names(N, prime=""):
    return [f"t{i}{prime}" for i in range(1, N + 1)]


@lru_cache(maxsize=None)
def bp_ring(p: int, N: int) -> PolyRing:
    degs = [gen_degree(p, i) for i in range(1, N + 1)]
    return PolyRing(v_names(N), degs)


@lru_cache(maxsize=None)
def gamma_ring(p: int, N: int, legs: int = 1) -> PolyRing:
    """v's followed by ``legs`` copies of t (t, t', t'', ...)."""
    degs = [gen_degree(p, i) for i in range(1, N + 1)]
    names = v_names(N)
    allnames = list(names)
    alldegs = list(degs)
    for leg in range(legs):
        allnames += t_names(N, "'" * leg)
        alldegs += degs
    return PolyRing(allnames, alldegs)


def embed(f: GradedPoly, target: PolyRing) -> GradedPoly:
    """Send same-named variables across; missing ones must not occur."""
    src = f.ring
    idx = []
    for n in src.names:
        idx.append(target.index.get(n))
    out = {}
    for m, c in f.terms.items():
        mm = [0] * target.nvars
        for i, e in enumerate(m):
            if e:
                if idx[i] is None:
                    raise AlgebraError(f"variable {src.names[i]} missing in target ring")
                mm[idx[i]] = e
        out[tuple(mm)] = c
    return GradedPoly(target, out)


@dataclass
class LogSeries:
    """Logarithm coefficients l_0..l_N as rational polynomials in the v's."""

    p: int
    N: int
    coefficients: List[GradedPoly]

    def __getitem__(self, n):
        return self.coefficients[n]

    def araki_residual(self, n: int) -> GradedPoly:
        """p l_n - sum_i l_i v_{n-i}^{p^i}; zero when the recursion is right."""
        A = self.coefficients[0].ring
        p = self.p
        total = self.coefficients[n] * p
        for i in range(n + 1):
            vi = A.const(p) if n - i == 0 else A.gen(f"v{n - i}")
            total = total - self.coefficients[i] * vi ** (p ** i)
        return total


def log_coefficients(ctx: TruncationContext) -> LogSeries:
    return _log_coefficients(ctx.p, ctx.N)


@lru_cache(maxsize=None)
def _log_coefficients(p: int, N: int) -> LogSeries:
    A = bp_ring(p, N)
    ls = [A.const(1)]
    for n in range(1, N + 1):
        acc = A.zero()
        for i in range(n):
            acc = acc + ls[i] * A.gen(f"v{n - i}") ** (p ** i)
        ls.append(acc * Fraction(1, p - p ** (p ** n)))
    return LogSeries(p, N, ls)


def _assert_integral(f: GradedPoly, p: int, what: str):
    for m, c in f.terms.items():
        if c.denominator % p == 0:
            raise IntegralityError(f"{what}: coefficient {c} is not {p}-local")


@dataclass
class StructureMapTable:
    """eta_R, Delta and c on generators, plus the rings they live in."""

    p: int
    N: int
    etaR: Dict[int, GradedPoly] = field(default_factory=dict)
    deltaT: Dict[int, GradedPoly] = field(default_factory=dict)
    antipodeT: Dict[int, GradedPoly] = field(default_factory=dict)

    @property
    def A(self):
        return bp_ring(self.p, self.N)

    @property
    def G(self):
        return gamma_ring(self.p, self.N, 1)

    @property
    def G2(self):
        return gamma_ring(self.p, self.N, 2)

    @property
    def G3(self):
        return gamma_ring(self.p, self.N, 3)

    def counit(self, f: GradedPoly) -> GradedPoly:
        """epsilon: t -> 0."""
        A = self.A
        return embed(GradedPoly(f.ring, {m: c for m, c in f.terms.items()
                                         if not any(m[self.N:])}), A)

    # ring maps used all over the place
    def eta_R_map(self) -> Substitution:
        """A -> Gamma, v_n -> eta_R(v_n)."""
        return Substitution(self.A, self.G, {f"v{n}": self.etaR[n] for n in self.etaR})

    def antipode_map(self) -> Substitution:
        """Gamma -> Gamma, v -> eta_R(v), t -> c(t)."""
        imgs = {f"v{n}": self.etaR[n] for n in self.etaR}
        imgs.update({f"t{n}": self.antipodeT[n] for n in self.antipodeT})
        return Substitution(self.G, self.G, imgs)


def eta_R_image(n: int, ctx: TruncationContext) -> GradedPoly:
    return structure_maps(ctx.p, ctx.N).etaR[n]


def coproduct_t(n: int, ctx: TruncationContext) -> GradedPoly:
    return structure_maps(ctx.p, ctx.N).deltaT[n]


def antipode_t(n: int, ctx: TruncationContext) -> GradedPoly:
    return structure_maps(ctx.p, ctx.N).antipodeT[n]


@lru_cache(maxsize=None)
def structure_maps(p: int, N: int) -> StructureMapTable:
    """Build (and integrality-check) the table once per (p, N)."""
    logs = _log_coefficients(p, N)
    table = StructureMapTable(p, N)
    G = table.G
    G2 = table.G2
    l_G = [embed(l, G) for l in logs.coefficients]
    l_G2 = [embed(l, G2) for l in logs.coefficients]

    def t(j, ring=G, prime=""):
        return ring.const(1) if j == 0 else ring.gen(f"t{j}{prime}")

    # eta_R(l_n) = sum_i l_i t_{n-i}^{p^i}
    etaR_l = [G.const(1)]
    for n in range(1, N + 1):
        acc = G.zero()
        for i in range(n + 1):
            acc = acc + l_G[i] * t(n - i) ** (p ** i)
        etaR_l.append(acc)
    etaR_v = {0: G.const(p)}
    for n in range(1, N + 1):
        acc = etaR_l[n] * p
        for i in range(1, n + 1):
            acc = acc - etaR_l[i] * etaR_v[n - i] ** (p ** i)
        _assert_integral(acc, p, f"eta_R(v{n})")
        etaR_v[n] = acc
    table.etaR = {n: etaR_v[n] for n in range(1, N + 1)}

    # sum_{i+j=n} l_i Delta(t_j)^{p^i} = sum_{i+j+k=n} l_i t_j^{p^i} t'_k^{p^{i+j}}
    delta = {0: G2.const(1)}
    for n in range(1, N + 1):
        acc = G2.zero()
        for i in range(n + 1):
            for j in range(n - i + 1):
                k = n - i - j
                acc = acc + l_G2[i] * t(j, G2) ** (p ** i) * t(k, G2, "'") ** (p ** (i + j))
        for i in range(1, n + 1):
            acc = acc - l_G2[i] * delta[n - i] ** (p ** i)
        _assert_integral(acc, p, f"Delta(t{n})")
        delta[n] = acc
    table.deltaT = {n: delta[n] for n in range(1, N + 1)}

    # c(t_n) from  mu(1 (x) c) Delta(t_n) = 0:  t' -> c(t)
    anti: Dict[int, GradedPoly] = {}
    for n in range(1, N + 1):
        d = delta[n]
        tn_prime = G2.gen(f"t{n}'")
        lead = d.coefficient(tn_prime.sorted_terms()[0][0])
        if lead != 1:
            raise AlgebraError(f"antipode solve for t{n} is not unique (coefficient {lead})")
        rest = d - tn_prime
        imgs = {name: G.gen(name) for name in v_names(N) + t_names(N)}
        for j in range(1, N + 1):
            imgs[f"t{j}'"] = anti[j] if j < n else G.zero()
        rest_used = rest.variables()
        if f"t{n}'" in rest_used:
            raise AlgebraError(f"antipode solve for t{n}: t{n}' occurs nonlinearly")
        c_n = -Substitution(G2, G, imgs, check_homogeneous=False)(rest)
        _assert_integral(c_n, p, f"c(t{n})")
        anti[n] = c_n
    table.antipodeT = anti
    return table


# -- formal sum, for property tests -------------------------------------------

def formal_sum_coefficients(ctx: TruncationContext, total_degree: int) -> Dict[tuple, GradedPoly]:
    """Coefficients a_ij of F(x, y) = exp(log x + log y) up to x^i y^j, i + j <= total.

    Coefficients are polynomials in the v's; only p-power exponents appear in
    the log, so the computation is in Q[v][[x, y]] truncated by total degree.
    """
    p = ctx.p
    logs = _log_coefficients(p, ctx.N)
    A = bp_ring(p, ctx.N)
    D = total_degree
    # log(x) = sum l_i x^{p^i}
    log = {1: A.const(1)}
    for i in range(1, ctx.N + 1):
        if p ** i <= D:
            log[p ** i] = logs[i]
    # invert the log series: exp(z) = z + ...
    expo = {1: A.const(1)}
    for n in range(2, D + 1):
        # coefficient of z^n in log(exp(z)) must vanish
        s = A.zero()
        for k, lk in log.items():
            if k == 1 or k > n:
                continue
            s = s + lk * _series_power_coeff(expo, k, n, A)
        expo[n] = -s
    # F(x,y) = exp(log x + log y): bivariate coefficients
    z = {}
    for k, lk in log.items():
        z[(k, 0)] = z.get((k, 0), A.zero()) + lk
        z[(0, k)] = z.get((0, k), A.zero()) + lk
    result: Dict[tuple, GradedPoly] = {}
    power = {(0, 0): A.const(1)}
    for n in range(1, D + 1):
        power = _biv_mul(power, z, D, A)
        en = expo.get(n)
        if en is None or not en:
            continue
        for key, c in power.items():
            result[key] = result.get(key, A.zero()) + en * c
    return {k: v for k, v in result.items() if v}


def _series_power_coeff(series, k, n, A):
    # coefficient of z^n in (sum series[m] z^m)^k
    cur = {0: A.const(1)}
    for _ in range(k):
        nxt = {}
        for a, ca in cur.items():
            for b, cb in series.items():
                if a + b <= n:
                    nxt[a + b] = nxt.get(a + b, A.zero()) + ca * cb
        cur = nxt
    return cur.get(n, A.zero())


def _biv_mul(f, g, D, A):
    out = {}
    for (a, b), c in f.items():
        for (a2, b2), c2 in g.items():
            if a + a2 + b + b2 <= D:
                key = (a + a2, b + b2)
                out[key] = out.get(key, A.zero()) + c * c2
    return out


# -- right coordinates ----------------------------------------------------------

@lru_cache(maxsize=None)
def left_unit_in_right_coordinates(p: int, N: int) -> Dict[int, GradedPoly]:
    """eta_L(v_n) as a polynomial in w = eta_R(v) and t.

    Gamma is also polynomial over eta_R(A) on the t's; in those coordinates
    l_n(v) = l_n(w) - sum_{i<n} l_i(v) t_{n-i}^{p^i}.  Variables named v_i in
    the returned polynomials stand for w_i.
    """
    logs = _log_coefficients(p, N)
    G = gamma_ring(p, N, 1)
    lw = [embed(l, G) for l in logs.coefficients]
    L = [G.const(1)]
    for n in range(1, N + 1):
        acc = lw[n]
        for i in range(n):
            acc = acc - L[i] * G.gen(f"t{n - i}") ** (p ** i)
        L.append(acc)
    V = {0: G.const(p)}
    for n in range(1, N + 1):
        acc = L[n] * p
        for i in range(1, n + 1):
            acc = acc - L[i] * V[n - i] ** (p ** i)
        _assert_integral(acc, p, f"eta_L(v{n}) in right coordinates")
        V[n] = acc
    return {n: V[n] for n in range(1, N + 1)}
