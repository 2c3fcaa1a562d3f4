"""Truncated monomial algebras attached to semistable coordinate charts.

A chart consists of "blocks" of crossing variables T_{h,0}, ..., T_{h,r_h}
and extra smooth variables (optionally Laurent).  The coordinate ring is
the monomial algebra in which a monomial vanishes as soon as every
variable of some block appears with strictly positive exponent — the
shadow of the relation "product of the block variables = uniformizer"
after the uniformizer specializes to 0.

Rings are truncated at a total-degree bound D.  Within degrees strictly
below the recorded exactness window, arithmetic is exact: the vanishing
rule and every differential used downstream are degree-non-decreasing, so
truncation only ever discards terms at or above the window.
"""

import json
from fractions import Fraction

SOFT_PRIMES = (2, 3, 5)


class ChartMismatch(ValueError):
    """Two elements from different charts (or moduli) were combined."""


class LogChart:
    """A semistable monomial chart.

    >>> ch = LogChart(2, [["T0", "T1"]], [("u", True)])
    >>> ch.variables
    ('T0', 'T1', 'u')
    >>> ch.block_of("T1")
    0
    """

    def __init__(self, prime, blocks, smooth=()):
        if prime < 2 or any(prime % q == 0 for q in range(2, prime)):
            raise ValueError("prime required, got %r" % (prime,))
        if prime not in SOFT_PRIMES:
            raise ValueError("prime %d beyond desk-scale limit %r" % (prime, SOFT_PRIMES))
        self.p = prime
        self.blocks = tuple(tuple(b) for b in blocks)
        self.smooth = tuple((str(n), bool(l)) for n, l in smooth)
        if any(not b for b in self.blocks):
            raise ValueError("blocks must be nonempty")
        names = [v for b in self.blocks for v in b] + [n for n, _ in self.smooth]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be distinct")
        self.variables = tuple(names)
        self._index = {v: i for i, v in enumerate(names)}
        self._blockno = {}
        for h, b in enumerate(self.blocks):
            for v in b:
                self._blockno[v] = h
        self._laurent = {n for n, l in self.smooth if l}

    def index(self, name):
        return self._index[name]

    def block_of(self, name):
        """Block number of a crossing variable, or None for smooth ones."""
        return self._blockno.get(name)

    def is_laurent(self, name):
        return name in self._laurent

    @property
    def nvars(self):
        return len(self.variables)

    def block_index_ranges(self):
        """[(start, stop)] positions of each block inside `variables`."""
        out = []
        pos = 0
        for b in self.blocks:
            out.append((pos, pos + len(b)))
            pos += len(b)
        return out

    def __eq__(self, other):
        if not isinstance(other, LogChart):
            return NotImplemented
        return (self.p, self.blocks, self.smooth) == (other.p, other.blocks, other.smooth)

    def __hash__(self):
        return hash((self.p, self.blocks, self.smooth))

    def __repr__(self):
        return "LogChart(p=%d, blocks=%r, smooth=%r)" % (self.p, self.blocks, self.smooth)

    @classmethod
    def from_json(cls, text):
        """Parse the chart description format.

        >>> LogChart.from_json('{"prime": 2, "blocks": [["T0","T1"]], '
        ...                    '"smooth": [{"name": "u", "laurent": true}]}')
        LogChart(p=2, blocks=(('T0', 'T1'),), smooth=(('u', True),))
        """
        obj = json.loads(text)
        if not isinstance(obj, dict):
            raise ValueError("chart file must hold a JSON object")
        for key in obj:
            if key not in ("prime", "blocks", "smooth"):
                raise ValueError("unknown chart key %r" % key)
        prime = obj.get("prime")
        if not isinstance(prime, int):
            raise ValueError("chart 'prime' must be an integer")
        blocks = obj.get("blocks", [])
        smooth = [(s["name"], s.get("laurent", False)) for s in obj.get("smooth", [])]
        return cls(prime, blocks, smooth)


def vanishes(chart, expts):
    """The block vanishing rule: some block has all exponents > 0.

    `expts` is a tuple of exponents aligned with chart.variables.
    """
    for lo, hi in chart.block_index_ranges():
        if all(expts[k] > 0 for k in range(lo, hi)):
            return True
    return False


def total_degree(chart, expts):
    return sum(abs(e) for e in expts)


def monomial_str(chart, expts):
    parts = []
    for v, e in zip(chart.variables, expts):
        if e == 0:
            continue
        if e == 1:
            parts.append(v)
        else:
            parts.append("%s^%s" % (v, e))
    return "*".join(parts) if parts else "1"


class MonomialElement:
    """An element of the truncated monomial algebra over Z/p^N.

    Stored as a dict {exponent tuple: coefficient}; no zero coefficients,
    no vanishing monomials, all total degrees <= the bound.  `exact_below`
    is the largest degree below which the element is known exact.
    """

    __slots__ = ("chart", "modulus", "terms", "bound", "laurent_bound", "exact_below")

    def __init__(self, chart, modulus, terms, bound, laurent_bound=None, exact_below=None):
        self.chart = chart
        self.modulus = modulus
        self.bound = bound
        self.laurent_bound = bound if laurent_bound is None else laurent_bound
        self.exact_below = bound if exact_below is None else exact_below
        clean = {}
        for ex, c in terms.items():
            c %= modulus
            if not c:
                continue
            if vanishes(chart, ex):
                continue
            if total_degree(chart, ex) > self.bound:
                continue
            if any(
                abs(e) > self.laurent_bound
                for v, e in zip(chart.variables, ex)
                if chart.is_laurent(v)
            ):
                continue
            clean[ex] = c
        self.terms = clean

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, chart, modulus, bound, laurent_bound=None):
        return cls(chart, modulus, {}, bound, laurent_bound)

    @classmethod
    def one(cls, chart, modulus, bound, laurent_bound=None):
        ex = (Fraction(0),) * chart.nvars
        return cls(chart, modulus, {ex: 1}, bound, laurent_bound)

    @classmethod
    def variable(cls, chart, modulus, name, bound, laurent_bound=None, power=1):
        ex = [Fraction(0)] * chart.nvars
        ex[chart.index(name)] = Fraction(power)
        return cls(chart, modulus, {tuple(ex): 1}, bound, laurent_bound)

    @classmethod
    def monomial(cls, chart, modulus, expts, bound, coeff=1, laurent_bound=None):
        ex = tuple(Fraction(e) for e in expts)
        return cls(chart, modulus, {ex: coeff}, bound, laurent_bound)

    # -- structure ----------------------------------------------------

    def _check(self, other):
        if self.chart != other.chart:
            raise ChartMismatch("elements from different charts")
        if self.modulus != other.modulus:
            raise ChartMismatch("elements with different moduli")

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, MonomialElement):
            return NotImplemented
        return (
            self.chart == other.chart
            and self.modulus == other.modulus
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash(
            (self.chart, self.modulus, tuple(sorted(self.terms.items())))
        )

    def add(self, other):
        self._check(other)
        terms = dict(self.terms)
        for ex, c in other.terms.items():
            terms[ex] = terms.get(ex, 0) + c
        return MonomialElement(
            self.chart,
            self.modulus,
            terms,
            min(self.bound, other.bound),
            min(self.laurent_bound, other.laurent_bound),
            min(self.exact_below, other.exact_below),
        )

    def scale(self, c):
        terms = {ex: v * c for ex, v in self.terms.items()}
        return MonomialElement(
            self.chart, self.modulus, terms, self.bound, self.laurent_bound, self.exact_below
        )

    def sub(self, other):
        return self.add(other.scale(-1))

    def multiply(self, other):
        """Exact product below the combined window.

        >>> ch = LogChart(2, [["T0", "T1"]])
        >>> t0 = MonomialElement.variable(ch, 2, "T0", 4)
        >>> t1 = MonomialElement.variable(ch, 2, "T1", 4)
        >>> t0.multiply(t1).is_zero()
        True
        >>> s = t0.add(t1)
        >>> sorted(monomial_str(ch, ex) for ex in s.multiply(s).terms)
        ['T0^2', 'T1^2']
        """
        self._check(other)
        m = self.modulus
        terms = {}
        for ex1, c1 in self.terms.items():
            for ex2, c2 in other.terms.items():
                ex = tuple(a + b for a, b in zip(ex1, ex2))
                terms[ex] = terms.get(ex, 0) + c1 * c2
        return MonomialElement(
            self.chart,
            self.modulus,
            terms,
            min(self.bound, other.bound),
            min(self.laurent_bound, other.laurent_bound),
            min(self.exact_below, other.exact_below),
        )

    def power(self, n):
        out = MonomialElement.one(self.chart, self.modulus, self.bound, self.laurent_bound)
        out.exact_below = self.exact_below
        for _ in range(n):
            out = out.multiply(self)
        return out

    def frobenius(self):
        """Exponents times p; coefficients untouched.

        Over Z/p this is the ring Frobenius (Fermat); over Z/p^r it is the
        semilinear exponent map used by the Koszul-side F.  The output is
        exact below window/p.
        """
        p = self.chart.p
        terms = {
            tuple(e * p for e in ex): c for ex, c in self.terms.items()
        }
        out = MonomialElement(
            self.chart, self.modulus, terms, self.bound, self.laurent_bound
        )
        # conservative window: no better than the source, never beyond
        # the truncation bound itself
        out.exact_below = min(self.exact_below, self.bound)
        return out

    def coefficient(self, expts):
        return self.terms.get(tuple(Fraction(e) for e in expts), 0)

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for ex in sorted(self.terms):
            c = self.terms[ex]
            mono = monomial_str(self.chart, ex)
            bits.append(mono if c == 1 and mono != "1" else "%d*%s" % (c, mono))
        return " + ".join(bits)


def enumerate_basis(chart, fraction_depth, degree_bound, laurent_bound=None):
    """All non-vanishing exponent vectors with denominators dividing
    p^fraction_depth, total degree <= degree_bound, Laurent exponents in
    [-laurent_bound, laurent_bound]; deterministic lexicographic order.

    >>> ch = LogChart(2, [["T0", "T1"]])
    >>> [monomial_str(ch, ex) for ex in enumerate_basis(ch, 0, 2)]
    ['1', 'T1', 'T1^2', 'T0', 'T0^2']
    >>> len(enumerate_basis(ch, 1, 1))
    5
    >>> [monomial_str(ch, ex) for ex in enumerate_basis(ch, 0, 0)]
    ['1']
    """
    if laurent_bound is None:
        laurent_bound = degree_bound
    step = Fraction(1, chart.p ** fraction_depth)
    names = chart.variables
    out = []

    def rec(i, acc, deg_left):
        if i == len(names):
            ex = tuple(acc)
            if not vanishes(chart, ex):
                out.append(ex)
            return
        name = names[i]
        if chart.is_laurent(name):
            lo = -min(Fraction(laurent_bound), deg_left)
            hi = min(Fraction(laurent_bound), deg_left)
        else:
            lo = Fraction(0)
            hi = deg_left
        e = lo
        while e <= hi:
            rec(i + 1, acc + [e], deg_left - abs(e))
            e += step

    rec(0, [], Fraction(degree_bound))
    # lexicographic in the exponent tuples
    out.sort()
    return out
