"""Truncated Witt vectors W_n(R) for monomial F_p-algebras R.

The ring structure is carried by universal integer polynomials (sum,
product, Frobenius) computed once per (p, n) by exact ghost recursion:
the ghost components

    w_j(a) = sum_i p^i a_i^(p^(j-i)),   0 <= i <= j,

must be additive/multiplicative, which determines the structure
polynomials by induced exact integer division.  The recursion validates
itself: every division is checked exact, and the cached polynomials are
verified against the ghost identities symbolically at construction.

Entries of W_n(R) live in R over Z/p (R reduced, as the vanishing rule is
squarefree), which is what makes W_n(R) p-torsion free at full level.
"""

from .chart import MonomialElement

_STRUCTURE_CACHE = {}

MAX_LENGTH = 4
MAX_PRIME = 5


class LengthMismatch(ValueError):
    """Witt vectors of different lengths (or charts) were combined."""


# ---------------------------------------------------------------------------
# integer polynomials in 2n variables a_0..a_{n-1}, b_0..b_{n-1}
# ---------------------------------------------------------------------------


def _poly_add(f, g):
    out = dict(f)
    for e, c in g.items():
        nc = out.get(e, 0) + c
        if nc:
            out[e] = nc
        elif e in out:
            del out[e]
    return out


def _poly_scale(f, c):
    if c == 0:
        return {}
    return {e: v * c for e, v in f.items()}


def _poly_mul(f, g):
    out = {}
    for e1, c1 in f.items():
        for e2, c2 in g.items():
            e = tuple(x + y for x, y in zip(e1, e2))
            nc = out.get(e, 0) + c1 * c2
            if nc:
                out[e] = nc
            elif e in out:
                del out[e]
    return out


def _poly_pow(f, k):
    nv = len(next(iter(f))) if f else 0
    out = {(0,) * nv: 1} if f else ({(0,) * 0: 1} if k == 0 else {})
    base = f
    while k:
        if k & 1:
            out = _poly_mul(out, base)
        k >>= 1
        if k:
            base = _poly_mul(base, base)
    return out

def _poly_divexact(f, d):
    out = {}
    for e, c in f.items():
        q, r = divmod(c, d)
        if r:
            raise ArithmeticError("non-exact division in ghost recursion")
        out[e] = q
    return out


def _var(nvars, i):
    e = [0] * nvars
    e[i] = 1
    return {tuple(e): 1}


def _ghost(nvars, offsets, j, p):
    """w_j of the variable vector at the given slot offsets."""
    out = {}
    for i in range(j + 1):
        out = _poly_add(
            out, _poly_scale(_poly_pow(_var(nvars, offsets + i), p ** (j - i)), p ** i)
        )
    return out


def _ghost_of(polys, j, p, nvars):
    """w_j evaluated on a vector of polynomials."""
    out = {}
    for i in range(j + 1):
        out = _poly_add(out, _poly_scale(_poly_pow(polys[i], p ** (j - i)), p ** i))
    return out


class WittStructurePolys:
    """Sum, product and Frobenius polynomials for W_n over the prime p."""

    def __init__(self, p, n):
        if n > MAX_LENGTH or p > MAX_PRIME:
            raise ValueError("W_%d at p=%d beyond desk-scale cache policy" % (n, p))
        self.p = p
        self.n = n
        nv = 2 * n
        self.S = []
        self.P = []
        self.F = []
        for j in range(n):
            wa = _ghost(nv, 0, j, p)
            wb = _ghost(nv, n, j, p)
            tgt = _poly_add(wa, wb)
            for i in range(j):
                tgt = _poly_add(
                    tgt, _poly_scale(_poly_pow(self.S[i], p ** (j - i)), -(p ** i))
                )
            self.S.append(_poly_divexact(tgt, p ** j))
            tgt = _poly_mul(wa, wb)
            for i in range(j):
                tgt = _poly_add(
                    tgt, _poly_scale(_poly_pow(self.P[i], p ** (j - i)), -(p ** i))
                )
            self.P.append(_poly_divexact(tgt, p ** j))
        for j in range(n - 1):
            tgt = _ghost(nv, 0, j + 1, p)
            for i in range(j):
                tgt = _poly_add(
                    tgt, _poly_scale(_poly_pow(self.F[i], p ** (j - i)), -(p ** i))
                )
            self.F.append(_poly_divexact(tgt, p ** j))
        self._validate()

    def _validate(self):
        """Symbolic ghost identities for the cached polynomials."""
        p, n, nv = self.p, self.n, 2 * self.n
        for j in range(n):
            wa = _ghost(nv, 0, j, p)
            wb = _ghost(nv, n, j, p)
            assert _ghost_of(self.S, j, p, nv) == _poly_add(wa, wb)
            assert _ghost_of(self.P, j, p, nv) == _poly_mul(wa, wb)
        for j in range(n - 1):
            assert _ghost_of(self.F, j, p, nv) == _ghost(nv, 0, j + 1, p)


def structure_polys(p, n):
    key = (p, n)
    if key not in _STRUCTURE_CACHE:
        _STRUCTURE_CACHE[key] = WittStructurePolys(p, n)
    return _STRUCTURE_CACHE[key]


# ---------------------------------------------------------------------------
# Witt vectors over a monomial algebra
# ---------------------------------------------------------------------------


def _evaluate(poly, values):
    """Evaluate an integer polynomial on MonomialElement values."""
    sample = values[0]
    out = MonomialElement.zero(
        sample.chart, sample.modulus, sample.bound, sample.laurent_bound
    )
    powers = [dict() for _ in values]

    def power(i, e):
        if e == 0:
            return MonomialElement.one(
                sample.chart, sample.modulus, sample.bound, sample.laurent_bound
            )
        cache = powers[i]
        if e not in cache:
            if e == 1:
                cache[e] = values[i]
            else:
                half = power(i, e // 2)
                sq = half.multiply(half)
                cache[e] = sq if e % 2 == 0 else sq.multiply(values[i])
        return cache[e]

    for expts, coeff in poly.items():
        term = None
        for i, e in enumerate(expts):
            if e == 0:
                continue
            f = power(i, e)
            term = f if term is None else term.multiply(f)
        if term is None:
            term = MonomialElement.one(
                sample.chart, sample.modulus, sample.bound, sample.laurent_bound
            )
        out = out.add(term.scale(coeff))
    return out


class WittVector:
    """A length-n Witt vector with coordinates in a monomial F_p-algebra."""

    __slots__ = ("coords",)

    def __init__(self, coords):
        self.coords = tuple(coords)
        if not self.coords:
            raise ValueError("Witt vectors have length >= 1")
        ch = self.coords[0].chart
        for c in self.coords:
            if c.chart != ch:
                raise LengthMismatch("coordinates from different charts")
            if c.modulus != ch.p:
                raise ValueError("Witt coordinates must live over Z/p")

    @property
    def n(self):
        return len(self.coords)

    @property
    def chart(self):
        return self.coords[0].chart

    @property
    def p(self):
        return self.chart.p

    def is_zero(self):
        return all(c.is_zero() for c in self.coords)

    def __eq__(self, other):
        if not isinstance(other, WittVector):
            return NotImplemented
        return self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return "W(%s)" % ", ".join(repr(c) for c in self.coords)

    def _check(self, other):
        if self.n != other.n:
            raise LengthMismatch("length %d vs %d" % (self.n, other.n))
        if self.chart != other.chart:
            raise LengthMismatch("different charts")


def witt_zero(chart, n, bound, laurent_bound=None):
    z = MonomialElement.zero(chart, chart.p, bound, laurent_bound)
    return WittVector([z] * n)


def witt_one(chart, n, bound, laurent_bound=None):
    z = MonomialElement.zero(chart, chart.p, bound, laurent_bound)
    o = MonomialElement.one(chart, chart.p, bound, laurent_bound)
    return WittVector([o] + [z] * (n - 1))


def teichmuller(a, n):
    """[a] = (a, 0, ..., 0)."""
    z = MonomialElement.zero(a.chart, a.modulus, a.bound, a.laurent_bound)
    return WittVector([a] + [z] * (n - 1))


def verschiebung(x):
    """V(x): shift coordinates, length grows by one."""
    z = MonomialElement.zero(
        x.chart, x.chart.p, x.coords[0].bound, x.coords[0].laurent_bound
    )
    return WittVector([z] + list(x.coords))


def witt_add(x, y):
    x._check(y)
    sp = structure_polys(x.p, x.n)
    values = list(x.coords) + list(y.coords)
    return WittVector([_evaluate(sp.S[j], values) for j in range(x.n)])


def witt_mul(x, y):
    x._check(y)
    sp = structure_polys(x.p, x.n)
    values = list(x.coords) + list(y.coords)
    return WittVector([_evaluate(sp.P[j], values) for j in range(x.n)])


def frobenius_W(x):
    """F: W_n -> W_(n-1) by the Frobenius polynomials; needs n >= 2."""
    if x.n < 2:
        raise ValueError("frobenius needs length >= 2")
    sp = structure_polys(x.p, x.n)
    values = list(x.coords)
    return WittVector([_evaluate(sp.F[j], values) for j in range(x.n - 1)])


def teich_mul(a, x):
    """[a] . x without structure polynomials: coordinate i scales by a^(p^i)."""
    out = []
    pw = a
    for i, c in enumerate(x.coords):
        if i > 0:
            pw = pw.power(x.p)  # a^(p^i), built up incrementally
        out.append(c.multiply(pw))
    return WittVector(out)


def witt_int_scale(x, m):
    """m . x for a plain integer m, by double-and-add."""
    m %= x.p ** x.n
    acc = witt_zero(x.chart, x.n, x.coords[0].bound, x.coords[0].laurent_bound)
    base = x
    while m:
        if m & 1:
            acc = witt_add(acc, base)
        m >>= 1
        if m:
            base = witt_add(base, base)
    return acc


def witt_neg(x):
    """-x; coordinatewise negation for odd p, generic scaling for p = 2."""
    if x.p != 2:
        return WittVector([c.scale(-1) for c in x.coords])
    return witt_int_scale(x, 2 ** x.n - 1)


def witt_sub(x, y):
    return witt_add(x, witt_neg(y))


def split(x):
    """x = [x_0] + V(x'), returning (x_0, x').

    For Witt coordinates this is literal: x' is the tuple of remaining
    coordinates (the classical V-adic expansion x = sum V^i [x_i]).
    """
    if x.n == 1:
        return x.coords[0], None
    return x.coords[0], WittVector(x.coords[1:])


def from_int(chart, m, n, bound, laurent_bound=None):
    """The image of the integer m in W_n(F_p) < W_n(R)."""
    return witt_int_scale(witt_one(chart, n, bound, laurent_bound), m)
