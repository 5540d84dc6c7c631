"""Exact p-local arithmetic, graded sparse polynomials and Z_(p) linear algebra.

Polynomials are dictionaries from exponent tuples to ``Fraction`` coefficients.
A :class:`PolyRing` names the variables and their internal degrees; some
variables may be declared invertible, and only those may carry negative
exponents.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

Monomial = Tuple[int, ...]


class AlgebraError(ValueError):
    """Raised for malformed polynomials, rings or matrices."""


class TruncationError(AlgebraError):
    """A computation needed data beyond the soundness bound of its context."""


def valuation(x, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    x = Fraction(x)
    if x == 0:
        raise AlgebraError("valuation of zero")
    v = 0
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def is_plocal(x, p: int) -> bool:
    return Fraction(x).denominator % p != 0


class PLocalScalar:
    """An element of Z_(p): a fraction in lowest terms with p-coprime denominator."""

    __slots__ = ("value", "p")

    def __init__(self, numerator, denominator=1, p: int = 2):
        value = Fraction(numerator) / Fraction(denominator)
        if value.denominator % p == 0:
            raise AlgebraError(f"{value} is not in Z_({p})")
        self.value = value
        self.p = p

    @property
    def numerator(self) -> int:
        return self.value.numerator

    @property
    def denominator(self) -> int:
        return self.value.denominator

    def _coerce(self, other):
        if isinstance(other, PLocalScalar):
            if other.p != self.p:
                raise AlgebraError("mixing scalars for different primes")
            return other.value
        return Fraction(other)

    def __add__(self, other):
        return PLocalScalar(self.value + self._coerce(other), p=self.p)

    __radd__ = __add__

    def __sub__(self, other):
        return PLocalScalar(self.value - self._coerce(other), p=self.p)

    def __rsub__(self, other):
        return PLocalScalar(self._coerce(other) - self.value, p=self.p)

    def __mul__(self, other):
        return PLocalScalar(self.value * self._coerce(other), p=self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return PLocalScalar(-self.value, p=self.p)

    def is_unit(self) -> bool:
        return self.value != 0 and self.value.numerator % self.p != 0

    def inverse(self) -> "PLocalScalar":
        if not self.is_unit():
            raise AlgebraError(f"{self.value} is not a unit in Z_({self.p})")
        return PLocalScalar(1 / self.value, p=self.p)

    def valuation(self) -> int:
        return valuation(self.value, self.p)

    def __eq__(self, other):
        try:
            return self.value == self._coerce(other)
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash((self.value, self.p))

    def __repr__(self):
        return f"PLocalScalar({self.value}, p={self.p})"


def gen_degree(p: int, i: int) -> int:
    """Internal degree 2(p^i - 1) of v_i and t_i."""
    return 2 * (p ** i - 1)


@dataclass(frozen=True)
class TruncationContext:
    """Prime, generator cutoff N and the degree window of a computation."""

    p: int
    N: int
    dmin: int = 0
    dmax: Optional[int] = None

    def __post_init__(self):
        if self.p < 2 or any(self.p % q == 0 for q in range(2, int(self.p ** 0.5) + 1)):
            raise AlgebraError(f"{self.p} is not prime")
        if self.N < 1:
            raise AlgebraError("need at least one generator")
        if self.dmax is None:
            object.__setattr__(self, "dmax", self.soundness_bound - 1)
        if self.dmin > self.dmax:
            raise AlgebraError("empty degree window")
        if self.dmax >= self.soundness_bound:
            raise TruncationError(
                f"window top {self.dmax} reaches the soundness bound {self.soundness_bound}")

    @property
    def soundness_bound(self) -> int:
        return gen_degree(self.p, self.N + 1)

    def deg(self, i: int) -> int:
        return gen_degree(self.p, i)

    def window(self) -> range:
        return range(self.dmin, self.dmax + 1)

    def check_degree(self, d: int) -> None:
        if d >= self.soundness_bound:
            raise TruncationError(
                f"degree {d} is not below the soundness bound {self.soundness_bound}")

    def with_window(self, dmin: int, dmax: int) -> "TruncationContext":
        return TruncationContext(self.p, self.N, dmin, dmax)

    def stamp(self) -> dict:
        return {"p": self.p, "N": self.N, "window": [self.dmin, self.dmax],
                "soundness_bound": self.soundness_bound}


class PolyRing:
    """Names, degrees and invertibility flags of polynomial variables."""

    def __init__(self, names: Sequence[str], degrees: Sequence[int],
                 invertible: Iterable[str] = ()):
        if len(names) != len(degrees):
            raise AlgebraError("names and degrees differ in length")
        if len(set(names)) != len(names):
            raise AlgebraError("duplicate variable names")
        self.names = tuple(names)
        self.degrees = tuple(degrees)
        self.index = {n: i for i, n in enumerate(self.names)}
        inv = set(invertible)
        unknown = inv - set(self.names)
        if unknown:
            raise AlgebraError(f"unknown invertible variables {sorted(unknown)}")
        self.invertible = frozenset(self.index[n] for n in inv)
        self.nvars = len(self.names)

    def __eq__(self, other):
        return (isinstance(other, PolyRing) and self.names == other.names
                and self.degrees == other.degrees and self.invertible == other.invertible)

    def __hash__(self):
        return hash((self.names, self.degrees, self.invertible))

    def __repr__(self):
        return f"PolyRing({list(self.names)})"

    def mono_degree(self, m: Monomial) -> int:
        return sum(e * d for e, d in zip(m, self.degrees))

    def one(self) -> Monomial:
        return (0,) * self.nvars

    def gen(self, name: str) -> "GradedPoly":
        m = [0] * self.nvars
        m[self.index[name]] = 1
        return GradedPoly(self, {tuple(m): Fraction(1)})

    def const(self, c) -> "GradedPoly":
        c = Fraction(c)
        return GradedPoly(self, {self.one(): c} if c else {})

    def zero(self) -> "GradedPoly":
        return GradedPoly(self, {})

    def check_monomial(self, m: Monomial) -> None:
        for i, e in enumerate(m):
            if e < 0 and i not in self.invertible:
                raise AlgebraError(f"negative exponent on non-invertible {self.names[i]}")

    def sort_key(self, m: Monomial):
        # graded lex, later variables more significant
        return (self.mono_degree(m), tuple(reversed(m)))

    def monomials(self, degree: int, weight_cap: Optional[int] = None,
                  allowed: Optional[Iterable[str]] = None,
                  free: Iterable[str] = ()) -> List[Monomial]:
        """All monomials of the given degree.

        Non-invertible variables get nonnegative exponents.  Invertible
        variables may go negative; the ``weight`` sum of |exponent|*degree
        over variables not listed in ``free`` is bounded by ``weight_cap``.
        Variables of degree zero are not supported.
        """
        idx = list(range(self.nvars)) if allowed is None else [self.index[n] for n in allowed]
        free_idx = {self.index[n] for n in free}
        if any(self.degrees[i] <= 0 for i in idx):
            raise AlgebraError("monomial enumeration needs positive degrees")
        if weight_cap is None:
            if any(i in self.invertible for i in idx):
                raise AlgebraError("enumerating Laurent monomials needs a weight cap")
            weight_cap = max(degree, 0)
        # free variables are the ones whose exponent is solved from the degree
        free_list = [i for i in idx if i in free_idx]
        if len(free_list) > 1:
            raise AlgebraError("at most one weight-free variable")
        bounded = [i for i in idx if i not in free_idx]
        out: List[Monomial] = []
        base = [0] * self.nvars

        def rec(k: int, deg_left: int, w_left: int):
            if k == len(bounded):
                if free_list:
                    f = free_list[0]
                    dd = self.degrees[f]
                    if deg_left % dd:
                        return
                    e = deg_left // dd
                    if e < 0 and f not in self.invertible:
                        return
                    m = list(base)
                    m[f] = e
                    out.append(tuple(m))
                elif deg_left == 0:
                    out.append(tuple(base))
                return
            i = bounded[k]
            dd = self.degrees[i]
            emax = w_left // dd
            emin = -emax if i in self.invertible else 0
            for e in range(emin, emax + 1):
                base[i] = e
                rec(k + 1, deg_left - e * dd, w_left - abs(e) * dd)
            base[i] = 0

        rec(0, degree, weight_cap)
        out.sort(key=self.sort_key)
        return out


class GradedPoly:
    """Sparse polynomial with exact rational coefficients over a PolyRing."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: PolyRing, terms: Optional[Mapping[Monomial, Fraction]] = None):
        self.ring = ring
        self.terms: Dict[Monomial, Fraction] = {}
        if terms:
            for m, c in terms.items():
                c = Fraction(c)
                if c:
                    if len(m) != ring.nvars:
                        raise AlgebraError("monomial length does not match ring")
                    ring.check_monomial(m)
                    self.terms[m] = c

    @classmethod
    def _raw(cls, ring, terms):
        obj = cls.__new__(cls)
        obj.ring = ring
        obj.terms = terms
        return obj

    # arithmetic ---------------------------------------------------------
    def _other(self, other) -> "GradedPoly":
        if isinstance(other, GradedPoly):
            if other.ring is not self.ring and other.ring != self.ring:
                raise AlgebraError("polynomials live in different rings")
            return other
        return self.ring.const(other)

    def __add__(self, other):
        other = self._other(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return GradedPoly._raw(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return GradedPoly._raw(self.ring, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._other(other))

    def __rsub__(self, other):
        return self._other(other) - self

    def __mul__(self, other):
        if not isinstance(other, GradedPoly):
            c = Fraction(other)
            if not c:
                return GradedPoly._raw(self.ring, {})
            return GradedPoly._raw(self.ring, {m: a * c for m, a in self.terms.items()})
        other = self._other(other)
        out: Dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    del out[m]
        return GradedPoly._raw(self.ring, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            if len(self.terms) != 1:
                raise AlgebraError("only monomials can be inverted")
            (m, c), = self.terms.items()
            return GradedPoly(self.ring, {tuple(-e for e in m): 1 / c}) ** (-n)
        result = self.ring.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, GradedPoly):
            return self.ring == other.ring and self.terms == other.terms
        try:
            return self.terms == self.ring.const(other).terms
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # grading -------------------------------------------------------------
    def degrees(self) -> set:
        return {self.ring.mono_degree(m) for m in self.terms}

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def degree(self) -> Optional[int]:
        ds = self.degrees()
        if len(ds) > 1:
            raise AlgebraError("polynomial is not homogeneous")
        return next(iter(ds)) if ds else None

    def homogeneous_part(self, d: int) -> "GradedPoly":
        rd = self.ring.mono_degree
        return GradedPoly._raw(self.ring, {m: c for m, c in self.terms.items() if rd(m) == d})

    def truncate(self, ctx: "TruncationContext") -> "GradedPoly":
        rd = self.ring.mono_degree
        return GradedPoly._raw(self.ring, {m: c for m, c in self.terms.items()
                                           if ctx.dmin <= rd(m) <= ctx.dmax})

    def map_coeffs(self, fn) -> "GradedPoly":
        out = {}
        for m, c in self.terms.items():
            c2 = fn(c)
            if c2:
                out[m] = Fraction(c2)
        return GradedPoly._raw(self.ring, out)

    def is_integral(self, p: int) -> bool:
        return all(c.denominator % p != 0 for c in self.terms.values())

    def variables(self) -> set:
        used = set()
        for m in self.terms:
            for i, e in enumerate(m):
                if e:
                    used.add(self.ring.names[i])
        return used

    def coefficient(self, m: Monomial) -> Fraction:
        return self.terms.get(tuple(m), Fraction(0))

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: self.ring.sort_key(kv[0]))

    def __repr__(self):
        return format_poly(self)

    __str__ = __repr__


# -- canonical text --------------------------------------------------------

def _format_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_poly(f: GradedPoly) -> str:
    if not f.terms:
        return "0"
    pieces = []
    for m, c in f.sorted_terms():
        factors = []
        for i, e in enumerate(m):
            if e == 1:
                factors.append(f.ring.names[i])
            elif e:
                factors.append(f"{f.ring.names[i]}^{e}" if e > 0 else f"{f.ring.names[i]}^({e})")
        mag = abs(c)
        if not factors:
            body = _format_coeff(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = _format_coeff(mag) + "*" + "*".join(factors)
        pieces.append(("-" if c < 0 else "+", body))
    sign, body = pieces[0]
    text = ("-" if sign == "-" else "") + body
    for sign, body in pieces[1:]:
        text += f" {sign} {body}"
    return text


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9_']*)|(\*\*|[-+*/^()]))")


def parse_poly(text: str, ring: PolyRing) -> GradedPoly:
    """Parse canonical text such as ``"v1^2 - 4*t1^2"`` into ``ring``."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if not mt or mt.end() == pos:
            raise AlgebraError(f"cannot parse {text!r} at position {pos}")
        num, name, op = mt.groups()
        if num is not None:
            tokens.append(("num", int(num), pos))
        elif name is not None:
            tokens.append(("name", name, pos))
        else:
            tokens.append(("op", "^" if op == "**" else op, pos))
        pos = mt.end()
    tokens.append(("end", None, len(text)))
    k = [0]

    def peek():
        return tokens[k[0]]

    def take(kind=None, val=None):
        tok = tokens[k[0]]
        if (kind and tok[0] != kind) or (val is not None and tok[1] != val):
            raise AlgebraError(f"unexpected token {tok[1]!r} at position {tok[2]} in {text!r}")
        k[0] += 1
        return tok

    def expr():
        sign = 1
        if peek()[0] == "op" and peek()[1] in "+-":
            sign = -1 if take()[1] == "-" else 1
        acc = term() * sign
        while peek()[0] == "op" and peek()[1] in "+-":
            op = take()[1]
            rhs = term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term():
        acc = power()
        while peek()[0] == "op" and peek()[1] in "*/":
            op = take()[1]
            rhs = power()
            if op == "*":
                acc = acc * rhs
            else:
                if len(rhs.terms) != 1 or rhs.ring.one() not in rhs.terms:
                    raise AlgebraError("division only by nonzero constants")
                acc = acc * (1 / rhs.terms[rhs.ring.one()])
        return acc

    def exponent():
        if peek()[0] == "op" and peek()[1] == "(":
            take()
            neg = False
            if peek()[0] == "op" and peek()[1] == "-":
                take()
                neg = True
            e = take("num")[1]
            take("op", ")")
            return -e if neg else e
        if peek()[0] == "op" and peek()[1] == "-":
            take()
            return -take("num")[1]
        return take("num")[1]

    def power():
        base = atom()
        if peek()[0] == "op" and peek()[1] == "^":
            take()
            base = base ** exponent()
        return base

    def atom():
        tok = peek()
        if tok[0] == "num":
            take()
            return ring.const(tok[1])
        if tok[0] == "name":
            take()
            if tok[1] == "p":
                raise AlgebraError("use a number instead of 'p' inside polynomials")
            if tok[1] not in ring.index:
                raise AlgebraError(f"unknown variable {tok[1]!r} at position {tok[2]}")
            return ring.gen(tok[1])
        if tok[0] == "op" and tok[1] == "(":
            take()
            e = expr()
            take("op", ")")
            return e
        raise AlgebraError(f"unexpected token {tok[1]!r} at position {tok[2]} in {text!r}")

    result = expr()
    take("end")
    return result


# -- ring maps --------------------------------------------------------------

def poly_mul(a: GradedPoly, b: GradedPoly, ctx: TruncationContext) -> GradedPoly:
    """Product of ``a`` and ``b`` with terms outside the window of ``ctx`` dropped."""
    return (a * b).truncate(ctx)


class Substitution:
    """A ring map given by images of variables, with cached powers."""

    def __init__(self, source: PolyRing, target: PolyRing,
                 images: Mapping[str, GradedPoly], check_homogeneous: bool = True):
        self.source = source
        self.target = target
        self.images: Dict[int, GradedPoly] = {}
        for name, img in images.items():
            if name not in source.index:
                raise AlgebraError(f"image given for unknown variable {name!r}")
            if not isinstance(img, GradedPoly):
                img = target.const(img)
            if img.ring != target:
                raise AlgebraError(f"image of {name} lives in the wrong ring")
            i = source.index[name]
            if check_homogeneous and img.terms:
                ds = img.degrees()
                if ds != {source.degrees[i]}:
                    raise AlgebraError(
                        f"image of {name} is not homogeneous of degree {source.degrees[i]}")
            self.images[i] = img
        self._pow: Dict[Tuple[int, int], GradedPoly] = {}

    def power(self, i: int, e: int) -> GradedPoly:
        key = (i, e)
        hit = self._pow.get(key)
        if hit is not None:
            return hit
        img = self.images.get(i)
        if img is None:
            raise AlgebraError(f"missing image for {self.source.names[i]}")
        if e < 0:
            val = _invert_monomial_image(img, -e, self.source.names[i])
        elif e == 1:
            val = img
        elif e % 2 == 0:
            h = self.power(i, e // 2)
            val = h * h
        else:
            val = self.power(i, e - 1) * img
        self._pow[key] = val
        return val

    def __call__(self, f: GradedPoly, cap: Optional[int] = None) -> GradedPoly:
        out: Dict[Monomial, Fraction] = {}
        one = self.target.one()
        for m, c in f.terms.items():
            acc = {one: c}
            for i, e in enumerate(m):
                if not e:
                    continue
                fac = self.power(i, e).terms
                nxt: Dict[Monomial, Fraction] = {}
                for m1, c1 in acc.items():
                    for m2, c2 in fac.items():
                        mm = tuple(x + y for x, y in zip(m1, m2))
                        s = nxt.get(mm, 0) + c1 * c2
                        if s:
                            nxt[mm] = s
                        else:
                            del nxt[mm]
                acc = nxt
            for mm, cc in acc.items():
                s = out.get(mm, 0) + cc
                if s:
                    out[mm] = s
                else:
                    del out[mm]
        return GradedPoly._raw(self.target, out)


def _invert_monomial_image(img: GradedPoly, e: int, name: str) -> GradedPoly:
    if len(img.terms) != 1:
        raise AlgebraError(f"image of invertible {name} is not a monomial; cannot invert")
    return img ** (-e)


def substitute(f: GradedPoly, images: Mapping[str, GradedPoly],
               ctx: Optional[TruncationContext] = None,
               target: Optional[PolyRing] = None) -> GradedPoly:
    """Evaluate ``f`` at the given images (a ring homomorphism).

    Every variable occurring in ``f`` needs an image; images must be
    homogeneous of the degree of their variable.  The result is truncated
    to the window of ``ctx`` when one is given.
    """
    if target is None:
        rings = {img.ring for img in images.values() if isinstance(img, GradedPoly)}
        if len(rings) != 1:
            raise AlgebraError("cannot infer target ring of substitution")
        target = rings.pop()
    used = f.variables()
    missing = used - set(images)
    if missing:
        raise AlgebraError(f"missing images for {sorted(missing)}")
    out = Substitution(f.ring, target, {k: v for k, v in images.items() if k in used})(f)
    return out.truncate(ctx) if ctx is not None else out


def identity_images(source: PolyRing, target: PolyRing) -> Dict[str, GradedPoly]:
    """Send each variable of ``source`` to the same-named variable of ``target``."""
    return {n: target.gen(n) for n in source.names}


# -- linear algebra over Z_(p) -----------------------------------------------

Matrix = List[List[Fraction]]


@dataclass
class SmithDecomposition:
    """U * M * V = D with U, V invertible over Z_(p) and D diagonal p-powers.

    ``exponents`` lists the valuations of the nonzero diagonal entries in
    increasing order; ``rank`` is their number.
    """

    p: int
    shape: Tuple[int, int]
    exponents: List[int]
    U: Matrix
    V: Matrix
    U_inv: Matrix
    V_inv: Matrix
    field: bool = False

    @property
    def rank(self) -> int:
        return len(self.exponents)

    @property
    def divisors(self) -> List[int]:
        return [self.p ** e for e in self.exponents]

    def diagonal(self) -> Matrix:
        m, n = self.shape
        D = [[Fraction(0)] * n for _ in range(m)]
        for i, e in enumerate(self.exponents):
            D[i][i] = Fraction(1 if self.field else self.p ** e)
        return D

    def kernel_basis(self) -> List[List[Fraction]]:
        """Z_(p)-basis of the kernel of M (as column vectors)."""
        n = self.shape[1]
        return [[self.V[i][j] for i in range(n)] for j in range(self.rank, n)]

    def cokernel(self) -> Tuple[int, List[int]]:
        """(free rank, torsion exponents) of Z_(p)^m / image."""
        torsion = [e for e in self.exponents if e > 0 and not self.field]
        return self.shape[0] - self.rank, torsion

    def cokernel_order(self) -> int:
        return self.p ** sum(self.cokernel()[1])

    def reassemble(self) -> Matrix:
        return mat_mul(mat_mul(self.U_inv, self.diagonal()), self.V_inv)


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    if not a:
        return []
    n = len(b[0]) if b else 0
    out = []
    for row in a:
        acc = [Fraction(0)] * n
        for k, x in enumerate(row):
            if x:
                bk = b[k]
                for j in range(n):
                    if bk[j]:
                        acc[j] += x * bk[j]
        out.append(acc)
    return out


def identity_matrix(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def smith_decompose(matrix: Sequence[Sequence], p: int, field: bool = False) -> SmithDecomposition:
    """Smith normal form over Z_(p) (or over Q when ``field`` is true).

    Every p-coprime integer is a unit of Z_(p), so the diagonal consists of
    powers of p.  Entries must be p-local unless ``field`` is set.
    """
    M = [[Fraction(x) for x in row] for row in matrix]
    m = len(M)
    n = len(M[0]) if m else 0
    if not field:
        for row in M:
            for x in row:
                if x and x.denominator % p == 0:
                    raise AlgebraError(f"matrix entry {x} is not in Z_({p})")
    U = identity_matrix(m)
    Ui = identity_matrix(m)
    V = identity_matrix(n)
    Vi = identity_matrix(n)

    def val(x):
        return 0 if field else valuation(x, p)

    exps = []
    r = 0
    while r < min(m, n):
        best = None
        for i in range(r, m):
            row = M[i]
            for j in range(r, n):
                x = row[j]
                if x:
                    v = val(x)
                    if best is None or v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        v, i, j = best
        if i != r:
            M[r], M[i] = M[i], M[r]
            U[r], U[i] = U[i], U[r]
            for row in Ui:
                row[r], row[i] = row[i], row[r]
        if j != r:
            for row in M:
                row[r], row[j] = row[j], row[r]
            for row in V:
                row[r], row[j] = row[j], row[r]
            Vi[r], Vi[j] = Vi[j], Vi[r]
        piv = M[r][r]
        # scale pivot row to make the pivot exactly p^v
        s = Fraction(1 if field else p ** v) / piv
        if s != 1:
            M[r] = [x * s for x in M[r]]
            U[r] = [x * s for x in U[r]]
            for row in Ui:
                row[r] = row[r] / s
        piv = M[r][r]
        for i2 in range(m):
            if i2 != r and M[i2][r]:
                f = M[i2][r] / piv
                Mi, Mr = M[i2], M[r]
                for j2 in range(r, n):
                    if Mr[j2]:
                        Mi[j2] -= f * Mr[j2]
                Ui2, Ur = U[i2], U[r]
                for j2 in range(m):
                    if Ur[j2]:
                        Ui2[j2] -= f * Ur[j2]
                for row in Ui:
                    if row[i2]:
                        row[r] += f * row[i2]
        for j2 in range(r + 1, n):
            if M[r][j2]:
                f = M[r][j2] / piv
                for row in M:
                    if row[r]:
                        row[j2] -= f * row[r]
                for row in V:
                    if row[r]:
                        row[j2] -= f * row[r]
                Vj, Vr = Vi[j2], Vi[r]
                for k in range(n):
                    if Vj[k]:
                        Vr[k] += f * Vj[k]
        exps.append(v)
        r += 1
    # diagonal from minimal-valuation pivots is already sorted
    return SmithDecomposition(p, (m, n), exps, U, V, Ui, Vi, field)


# -- fast sparse elimination over F_p or Q --------------------------------------

class SparseEchelon:
    """Incremental row-echelon basis of vectors (dict index -> scalar).

    ``modulus`` selects F_p; None means exact rationals.
    """

    def __init__(self, modulus: Optional[int] = None):
        self.mod = modulus
        self.rows: Dict[object, Dict[object, object]] = {}  # pivot -> normalized row
        self.order: List[object] = []

    def _norm(self, v):
        if self.mod is None:
            return {k: Fraction(x) for k, x in v.items() if x}
        return {k: x % self.mod for k, x in v.items() if x % self.mod}

    def reduce(self, v):
        v = self._norm(v)
        mod = self.mod
        changed = True
        while v and changed:
            changed = False
            for piv in list(v.keys()):
                row = self.rows.get(piv)
                if row is None or piv not in v:
                    continue
                f = v[piv]
                for k, x in row.items():
                    if mod is None:
                        y = v.get(k, 0) - f * x
                    else:
                        y = (v.get(k, 0) - f * x) % mod
                    if y:
                        v[k] = y
                    else:
                        v.pop(k, None)
                changed = True
        return v

    def add(self, v) -> bool:
        """Insert v; returns True when it was independent."""
        v = self.reduce(v)
        if not v:
            return False
        piv = min(v, key=_key)
        f = v[piv]
        if self.mod is None:
            inv = 1 / f
            row = {k: x * inv for k, x in v.items()}
        else:
            inv = pow(f, -1, self.mod)
            row = {k: (x * inv) % self.mod for k, x in v.items()}
        # keep rows fully reduced with respect to the new pivot
        for p2, r2 in self.rows.items():
            if piv in r2:
                g = r2[piv]
                for k, x in row.items():
                    y = r2.get(k, 0) - g * x
                    if self.mod is not None:
                        y %= self.mod
                    if y:
                        r2[k] = y
                    else:
                        r2.pop(k, None)
        self.rows[piv] = row
        self.order.append(piv)
        return True

    def rank(self) -> int:
        return len(self.rows)

    def contains(self, v) -> bool:
        return not self.reduce(v)


def _key(k):
    return (str(type(k)), repr(k)) if not isinstance(k, (int, tuple)) else (0, k)


def nullspace(columns: Sequence[Mapping], modulus: Optional[int] = None) -> List[Dict[int, object]]:
    """Basis of {c : sum_j c_j columns[j] = 0} over F_p or Q.

    Columns are sparse vectors (dict row-key -> scalar).  Returned vectors are
    dicts column-index -> scalar.
    """
    ech = SparseEchelon(modulus)
    # track combinations: augment each column with a unit tag
    out = []
    for j, col in enumerate(columns):
        v = dict(col)
        v[("__tag__", j)] = 1
        before = ech.reduce(v)
        real = {k: x for k, x in before.items() if not (isinstance(k, tuple) and k and k[0] == "__tag__")}
        if not real:
            out.append({k[1]: x for k, x in before.items()
                        if isinstance(k, tuple) and k and k[0] == "__tag__"})
        else:
            piv = min(real, key=_key)
            # pivot must be a real coordinate, so insert manually
            f = before[piv]
            if modulus is None:
                inv = 1 / f
                row = {k: x * inv for k, x in before.items()}
            else:
                inv = pow(f, -1, modulus)
                row = {k: (x * inv) % modulus for k, x in before.items()}
            for p2, r2 in ech.rows.items():
                if piv in r2:
                    g = r2[piv]
                    for k, x in row.items():
                        y = r2.get(k, 0) - g * x
                        if modulus is not None:
                            y %= modulus
                        if y:
                            r2[k] = y
                        else:
                            r2.pop(k, None)
            ech.rows[piv] = row
    return out


# -- finitely generated Z_(p)-modules ------------------------------------------

@dataclass
class ModuleStructure:
    """Isomorphism type of a finitely generated Z_(p)-module (or Q-space)."""

    rank: int
    torsion: List[int] = field(default_factory=list)  # exponents e of Z/p^e
    p: int = 2
    rational: bool = False

    @property
    def length(self) -> int:
        return sum(self.torsion)

    def is_zero(self) -> bool:
        return self.rank == 0 and not self.torsion

    def fp_dimension(self) -> int:
        """Dimension of M/pM (rank plus number of cyclic torsion summands)."""
        return self.rank + len(self.torsion)

    def describe(self) -> str:
        if self.is_zero():
            return "0"
        parts = []
        if self.rank:
            base = "Q" if self.rational else f"Z_({self.p})"
            parts.append(base if self.rank == 1 else f"{base}^{self.rank}")
        counts: Dict[int, int] = {}
        for e in self.torsion:
            counts[e] = counts.get(e, 0) + 1
        for e in sorted(counts):
            q = self.p ** e
            parts.append(f"Z/{q}" if counts[e] == 1 else f"(Z/{q})^{counts[e]}")
        return " + ".join(parts)

    def to_json(self) -> dict:
        return {"rank": self.rank, "torsion": [self.p ** e for e in self.torsion],
                "text": self.describe()}


def saturate(vectors: Sequence[Sequence[Fraction]], n: int, p: int) -> List[List[Fraction]]:
    """Z_(p)-basis of (Q-span of vectors) ∩ Z_(p)^n."""
    if not vectors:
        return []
    # columns are the vectors
    M = [[Fraction(vectors[j][i]) for j in range(len(vectors))] for i in range(n)]
    # scale each column to be p-integral and primitive
    for j in range(len(vectors)):
        col = [M[i][j] for i in range(n)]
        nz = [x for x in col if x]
        if not nz:
            continue
        vmin = min(valuation(x, p) for x in nz)
        s = Fraction(p) ** (-vmin)
        for i in range(n):
            M[i][j] = _unit_part_free(M[i][j] * s, p)
    sd = smith_decompose(M, p)
    r = sd.rank
    return [[sd.U_inv[i][j] for i in range(n)] for j in range(r)]


def _unit_part_free(x: Fraction, p: int) -> Fraction:
    # clear p-coprime parts of the denominator (units), keep value in Z_(p)
    if x.denominator % p == 0:
        raise AlgebraError("unexpected p in denominator")
    return x


def lattice_structure(generators: Sequence[Sequence[Fraction]], relations: Sequence[Sequence[Fraction]],
                      n: int, p: int, rational: bool = False) -> ModuleStructure:
    """Structure of span(generators)/span(relations), relations inside generators."""
    gens = [list(g) for g in generators if any(g)]
    if not gens:
        return ModuleStructure(0, [], p, rational)
    if rational:
        ech = SparseEchelon(None)
        r = sum(ech.add({i: x for i, x in enumerate(g) if x}) for g in gens)
        ech2 = SparseEchelon(None)
        r2 = sum(ech2.add({i: x for i, x in enumerate(g) if x}) for g in relations)
        return ModuleStructure(r - r2, [], p, True)
    basis = lattice_basis(gens, n, p)
    if not basis:
        return ModuleStructure(0, [], p)
    coords = [solve_in_basis(basis, rel, p) for rel in relations if any(rel)]
    k = len(basis)
    if not coords:
        return ModuleStructure(k, [], p)
    M = [[coords[j][i] for j in range(len(coords))] for i in range(k)]
    sd = smith_decompose(M, p)
    free, tors = sd.cokernel()
    return ModuleStructure(free, tors, p)


def lattice_basis(gens: Sequence[Sequence[Fraction]], n: int, p: int) -> List[List[Fraction]]:
    """Z_(p)-basis of the lattice spanned by ``gens`` (vectors of length n)."""
    gens = [g for g in gens if any(g)]
    if not gens:
        return []
    M = [[Fraction(gens[j][i]) for j in range(len(gens))] for i in range(n)]
    sd = smith_decompose(M, p)
    out = []
    for j, e in enumerate(sd.exponents):
        out.append([sd.U_inv[i][j] * (p ** e) for i in range(n)])
    return out


def solve_in_basis(basis: Sequence[Sequence[Fraction]], v: Sequence[Fraction], p: int) -> List[Fraction]:
    """Coordinates of v in a Z_(p)-lattice basis; raises when v is not in the lattice."""
    n = len(v)
    k = len(basis)
    M = [[Fraction(basis[j][i]) for j in range(k)] for i in range(n)]
    sd = smith_decompose(M, p)
    Uv = [sum((sd.U[i][j] * v[j] for j in range(n) if v[j]), Fraction(0)) for i in range(n)]
    for i in range(sd.rank, n):
        if Uv[i]:
            raise AlgebraError("vector not in the rational span of the lattice")
    y = []
    for i, e in enumerate(sd.exponents):
        q = Uv[i] / (p ** e)
        if q and q.denominator % p == 0:
            raise AlgebraError("vector not in the lattice")
        y.append(q)
    y += [Fraction(0)] * (k - sd.rank)
    return [sum((sd.V[i][j] * y[j] for j in range(k)), Fraction(0)) for i in range(k)]


def in_lattice(basis: Sequence[Sequence[Fraction]], v: Sequence[Fraction], p: int) -> bool:
    if not any(v):
        return True
    if not basis:
        return False
    try:
        solve_in_basis(basis, v, p)
        return True
    except AlgebraError:
        return False


class PresentedModule:
    """Z_(p)^n modulo the span of relation vectors, in fixed coordinates."""

    def __init__(self, n: int, relations: Sequence[Sequence[Fraction]], p: int,
                 labels: Optional[Sequence] = None):
        self.n = n
        self.p = p
        self.relations = [list(map(Fraction, r)) for r in relations if any(r)]
        self.labels = list(labels) if labels is not None else list(range(n))
        self._rel_basis = None

    @property
    def relation_basis(self):
        if self._rel_basis is None:
            self._rel_basis = lattice_basis(self.relations, self.n, self.p) if self.relations else []
        return self._rel_basis

    def structure(self) -> ModuleStructure:
        unit = [[Fraction(int(i == j)) for i in range(self.n)] for j in range(self.n)]
        return lattice_structure(unit, self.relations, self.n, self.p)

    def is_zero_element(self, v: Sequence[Fraction]) -> bool:
        return in_lattice(self.relation_basis, v, self.p)

    def order_exponent(self, v: Sequence[Fraction], cap: int = 64) -> Optional[int]:
        """Least e with p^e v = 0, or None when v has infinite order."""
        if self.is_zero_element(v):
            return 0
        rb = self.relation_basis
        for e in range(1, cap + 1):
            if in_lattice(rb, [x * self.p ** e for x in v], self.p):
                return e
        return None


def kernel_mod(F: Sequence[Sequence[Fraction]], target: PresentedModule, p: int,
               nsource: int) -> List[List[Fraction]]:
    """Lattice {x in Z_(p)^nsource : F x lies in the relation span of target}.

    F is given as a list of image columns (one per source coordinate).
    """
    rels = target.relation_basis
    cols = [list(c) for c in F] + [[-x for x in r] for r in rels]
    n = target.n
    if not cols:
        return []
    M = [[Fraction(cols[j][i]) for j in range(len(cols))] for i in range(n)]
    if n == 0:
        return [[Fraction(int(i == j)) for i in range(nsource)] for j in range(nsource)]
    sd = smith_decompose(M, p)
    ker = sd.kernel_basis()
    proj = [k[:nsource] for k in ker]
    return lattice_basis(proj, nsource, p) if proj else []


def homology(f_cols: Sequence[Sequence[Fraction]], target: PresentedModule,
             g_cols: Sequence[Sequence[Fraction]], middle: PresentedModule, p: int,
             rational: bool = False) -> ModuleStructure:
    """ker(f: middle -> target) / im(g: source -> middle), all presented."""
    K = kernel_mod(f_cols, target, p, middle.n) if middle.n else []
    image = [list(c) for c in g_cols if any(c)] + middle.relation_basis
    return lattice_structure(K, image, middle.n, p, rational)
