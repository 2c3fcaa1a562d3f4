"""Exact sparse linear algebra over Z/p^N.

Everything downstream (cohomology, quotients, comparison maps) reduces to a
handful of operations on matrices with entries in Z/p^N: the Howell normal
form (the canonical echelon form over Z/p^N, which supports row-span
membership tests the way reduced row echelon form does over a field),
kernels, linear solves, and subquotient presentations with elementary
divisors.

Matrices are kept sparse as dict-of-dict rows; sizes here are desk scale
(at most a few thousand generators), so simplicity wins over asymptotics.

>>> m = ModMatrix.from_rows([[1, 2], [2, 0]], 4)
>>> h = howell_form(m)
>>> span_membership(h, [2, 0]) is not None
True
"""

def _val(x, p, cap):
    """p-adic valuation of x in [0, p^cap); returns cap for x == 0.

    >>> _val(12, 2, 5)
    2
    >>> _val(0, 3, 4)
    4
    """
    if x == 0:
        return cap
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def _inv_unit(u, modulus):
    """Inverse of a unit mod p^N."""
    return pow(u, -1, modulus)


class ModMatrix:
    """A sparse matrix over Z/p^N.

    Entries are stored as a dict of rows, each row a dict {col: value} with
    values in [1, p^N).  Zero entries are never stored.  The modulus is
    carried per matrix; mixing moduli in one operation is a programming
    error and raises ValueError.
    """

    __slots__ = ("rows", "cols", "modulus", "p", "N", "data")

    def __init__(self, rows, cols, modulus, data=None):
        p, N = _factor_prime_power(modulus)
        self.rows = rows
        self.cols = cols
        self.modulus = modulus
        self.p = p
        self.N = N
        self.data = {}
        if data:
            for (i, j), v in data.items():
                v %= modulus
                if v:
                    self.data.setdefault(i, {})[j] = v

    @classmethod
    def from_rows(cls, rowlist, modulus):
        data = {}
        cols = max((len(r) for r in rowlist), default=0)
        for i, row in enumerate(rowlist):
            for j, v in enumerate(row):
                if v % modulus:
                    data[(i, j)] = v % modulus
        return cls(len(rowlist), cols, modulus, data)

    @classmethod
    def from_cols(cls, collist, nrows, modulus):
        data = {}
        for j, col in enumerate(collist):
            for i, v in enumerate(col):
                if v % modulus:
                    data[(i, j)] = v % modulus
        return cls(nrows, len(collist), modulus, data)

    @classmethod
    def zero(cls, rows, cols, modulus):
        return cls(rows, cols, modulus)

    @classmethod
    def identity(cls, n, modulus):
        return cls(n, n, modulus, {(i, i): 1 for i in range(n)})

    def entry(self, i, j):
        return self.data.get(i, {}).get(j, 0)

    def row(self, i):
        return dict(self.data.get(i, {}))

    def col(self, j):
        out = []
        for i in range(self.rows):
            out.append(self.entry(i, j))
        return out

    def to_rows(self):
        return [[self.entry(i, j) for j in range(self.cols)] for i in range(self.rows)]

    def transpose(self):
        data = {}
        for i, row in self.data.items():
            for j, v in row.items():
                data[(j, i)] = v
        return ModMatrix(self.cols, self.rows, self.modulus, data)

    def is_zero(self):
        return not any(self.data.values())

    def __eq__(self, other):
        if not isinstance(other, ModMatrix):
            return NotImplemented
        if (self.rows, self.cols, self.modulus) != (other.rows, other.cols, other.modulus):
            return False
        return {k: r for k, r in self.data.items() if r} == {
            k: r for k, r in other.data.items() if r
        }

    def __hash__(self):
        items = tuple(
            sorted((i, j, v) for i, row in self.data.items() for j, v in row.items())
        )
        return hash((self.rows, self.cols, self.modulus, items))

    def __repr__(self):
        return "ModMatrix(%dx%d mod %d, %d entries)" % (
            self.rows,
            self.cols,
            self.modulus,
            sum(len(r) for r in self.data.values()),
        )

    def mat_mul(self, other):
        if self.modulus != other.modulus:
            raise ValueError("modulus mismatch: %d vs %d" % (self.modulus, other.modulus))
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        m = self.modulus
        data = {}
        for i, row in self.data.items():
            acc = {}
            for k, v in row.items():
                orow = other.data.get(k)
                if not orow:
                    continue
                for j, w in orow.items():
                    acc[j] = (acc.get(j, 0) + v * w) % m
            for j, v in acc.items():
                if v:
                    data[(i, j)] = v
        return ModMatrix(self.rows, other.cols, self.modulus, data)

    def vec_mul(self, vec):
        """Matrix times column vector (a list), returning a list."""
        m = self.modulus
        out = [0] * self.rows
        for i, row in self.data.items():
            s = 0
            for j, v in row.items():
                s += v * vec[j]
            out[i] = s % m
        return out

    def scale(self, c):
        m = self.modulus
        data = {}
        for i, row in self.data.items():
            for j, v in row.items():
                w = (v * c) % m
                if w:
                    data[(i, j)] = w
        return ModMatrix(self.rows, self.cols, self.modulus, data)

    def add(self, other):
        if (self.rows, self.cols, self.modulus) != (other.rows, other.cols, other.modulus):
            raise ValueError("shape/modulus mismatch")
        m = self.modulus
        data = {}
        for i in set(self.data) | set(other.data):
            ra = self.data.get(i, {})
            rb = other.data.get(i, {})
            for j in set(ra) | set(rb):
                v = (ra.get(j, 0) + rb.get(j, 0)) % m
                if v:
                    data[(i, j)] = v
        return ModMatrix(self.rows, self.cols, self.modulus, data)

    def sub(self, other):
        return self.add(other.scale(self.modulus - 1))

    def hstack(self, other):
        if self.rows != other.rows or self.modulus != other.modulus:
            raise ValueError("shape/modulus mismatch")
        data = {}
        for i, row in self.data.items():
            for j, v in row.items():
                data[(i, j)] = v
        for i, row in other.data.items():
            for j, v in row.items():
                data[(i, j + self.cols)] = v
        return ModMatrix(self.rows, self.cols + other.cols, self.modulus, data)

    def submatrix_cols(self, colrange):
        data = {}
        for i, row in self.data.items():
            for jnew, j in enumerate(colrange):
                v = row.get(j, 0)
                if v:
                    data[(i, jnew)] = v
        return ModMatrix(self.rows, len(colrange), self.modulus, data)


def _factor_prime_power(modulus):
    """Split p^N into (p, N); raises for moduli that are not prime powers.

    >>> _factor_prime_power(27)
    (3, 3)
    """
    if modulus < 2:
        raise ValueError("modulus must be >= 2")
    n = modulus
    p = None
    for q in range(2, n + 1):
        if n % q == 0:
            p = q
            break
    N = 0
    while n > 1:
        if n % p:
            raise ValueError("modulus %d is not a prime power" % modulus)
        n //= p
        N += 1
    return p, N


def _howell_rows(rowdicts, cols, modulus, p, N, pivot_cols=None):
    """Core Howell elimination on a list of row dicts.

    Returns (rows, pivots) where pivots is a list of (row_index, col,
    valuation) in increasing column order.  If pivot_cols is given, only
    those columns are eligible for pivoting (used for augmented
    kernel/solve computations); remaining columns are carried along.

    The three ingredients of the Howell form over Z/p^N:
      * echelon with unit-normalized pivots p^v, minimal valuation first
        (ties broken by lowest row index — deterministic);
      * for every pivot of valuation v > 0, the annihilator multiple
        p^(N-v) x row is appended and processed, so the row span is
        closed under "zero divisors reveal new leading columns";
      * entries above a pivot p^v are reduced into [0, p^v).
    """
    if pivot_cols is None:
        pivot_cols = range(cols)
    work = [dict(r) for r in rowdicts]
    # column -> indices of work rows touching it, so pivot search and
    # elimination only visit rows that are actually nonzero there
    colindex = {}
    for idx, r in enumerate(work):
        for c in r:
            colindex.setdefault(c, set()).add(idx)
    pivots = []  # (index into `final`, col, val)
    final = []
    for j in pivot_cols:
        # candidate rows: not yet consumed, nonzero at column j
        best = None
        best_v = None
        for idx in colindex.get(j, ()):
            r = work[idx]
            if r is None:
                continue
            e = r.get(j, 0)
            if not e:
                continue
            v = _val(e, p, N)
            if best is None or v < best_v or (v == best_v and idx < best):
                best, best_v = idx, v
        if best is None:
            continue
        piv = work[best]
        work[best] = None
        # normalize: entry at j becomes p^v
        e = piv[j]
        u = e // (p ** best_v)
        inv = _inv_unit(u, modulus)
        piv = {c: (w * inv) % modulus for c, w in piv.items()}
        piv = {c: w for c, w in piv.items() if w}
        pv = p ** best_v
        # eliminate below / elsewhere
        for idx in sorted(colindex.get(j, ())):
            r = work[idx]
            if r is None:
                continue
            e = r.get(j, 0)
            if not e:
                continue
            q = e // pv  # exact: e has valuation >= best_v
            if e % pv:
                # cannot happen: pivot had minimal valuation
                raise AssertionError("pivot valuation was not minimal")
            for c, w in piv.items():
                nv = (r.get(c, 0) - q * w) % modulus
                if nv:
                    if c not in r:
                        colindex.setdefault(c, set()).add(idx)
                    r[c] = nv
                elif c in r:
                    del r[c]
        # annihilator row keeps the span Howell-closed
        if best_v > 0:
            ann = {}
            mult = p ** (N - best_v)
            for c, w in piv.items():
                nv = (w * mult) % modulus
                if nv:
                    ann[c] = nv
            if ann:
                aidx = len(work)
                work.append(ann)
                for c in ann:
                    colindex.setdefault(c, set()).add(aidx)
        pivots.append((len(final), j, best_v))
        final.append(piv)
    # reduce above pivots
    for k, j, v in pivots:
        pv = p ** v
        for k2 in range(k):
            r = final[k2]
            e = r.get(j, 0)
            if e >= pv:
                q = e // pv
                for c, w in final[k].items():
                    nv = (r.get(c, 0) - q * w) % modulus
                    if nv:
                        r[c] = nv
                    elif c in r:
                        del r[c]
    leftovers = [r for r in work if r]
    return final, pivots, leftovers


def howell_form(m):
    """Canonical Howell normal form of the row span of m.

    Idempotent, and two matrices have equal row span over Z/p^N iff their
    Howell forms are equal.

    >>> howell_form(ModMatrix.from_rows([[2]], 4)).to_rows()
    [[2]]
    >>> howell_form(ModMatrix.zero(2, 2, 4)).to_rows()
    []
    """
    rows = [m.row(i) for i in range(m.rows)]
    final, pivots, leftovers = _howell_rows(rows, m.cols, m.modulus, m.p, m.N)
    if any(leftovers):
        raise AssertionError("Howell elimination left unprocessed rows")
    data = {}
    for i, r in enumerate(final):
        for j, v in r.items():
            data[(i, j)] = v
    return ModMatrix(len(final), m.cols, m.modulus, data)


def span_membership(h, vec):
    """Express vec in the row span of a Howell-form matrix h.

    Returns the coefficient list c with sum(c[i] * row_i) == vec, or None
    if vec is not in the span.  h must already be in Howell form.
    """
    m = h.modulus
    p, N = h.p, h.N
    v = {j: x % m for j, x in enumerate(vec) if x % m}
    coeffs = [0] * h.rows
    for i in range(h.rows):
        row = h.data.get(i, {})
        if not row:
            continue
        j = min(row)
        pv = row[j]
        e = v.get(j, 0)
        if not e:
            continue
        if e % pv:
            return None
        q = e // pv
        coeffs[i] = q % m
        for c, w in row.items():
            nv = (v.get(c, 0) - q * w) % m
            if nv:
                v[c] = nv
            elif c in v:
                del v[c]
    if v:
        return None
    return coeffs


def kernel(m):
    """Generators for {v : m . v == 0} over Z/p^N, as matrix columns.

    Torsion kernels are found as well:

    >>> k = kernel(ModMatrix.from_rows([[2]], 4))
    >>> sorted(k.col(j)[0] for j in range(k.cols))
    [2]
    """
    # left-kernel of m^T equals the (column) kernel of m
    t = m.transpose()
    aug = [t.row(i) for i in range(t.rows)]
    for i in range(t.rows):
        aug[i][t.cols + i] = 1
    final, pivots, leftovers = _howell_rows(
        aug, t.cols + t.rows, m.modulus, m.p, m.N, pivot_cols=range(t.cols)
    )
    kern_rows = []
    for r in final + leftovers:
        if not r:
            continue
        if all(c >= t.cols for c in r):
            kern_rows.append({c - t.cols: v for c, v in r.items()})
    # canonicalize the kernel generators themselves
    kfinal, _, klo = _howell_rows(kern_rows, t.rows, m.modulus, m.p, m.N)
    cols = kfinal + [r for r in klo if r]
    data = {}
    for j, r in enumerate(cols):
        for i, v in r.items():
            data[(i, j)] = v
    return ModMatrix(m.cols, len(cols), m.modulus, data)


class NoSolution:
    """Sentinel value: the linear system has no solution (not a fault)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NoSolution"

    def __bool__(self):
        return False


NO_SOLUTION = NoSolution()


def solve(m, b):
    """A solution v of m . v == b, or NO_SOLUTION.

    Deterministic: the first solution in Howell elimination order.

    >>> solve(ModMatrix.from_rows([[2]], 4), [2])
    [1]
    >>> solve(ModMatrix.from_rows([[2]], 4), [1])
    NoSolution
    """
    t = m.transpose()
    aug = [t.row(i) for i in range(t.rows)]
    for i in range(t.rows):
        aug[i][t.cols + i] = 1
    final, pivots, leftovers = _howell_rows(
        aug, t.cols + t.rows, m.modulus, m.p, m.N, pivot_cols=range(t.cols)
    )
    mod = m.modulus
    v = {j: x % mod for j, x in enumerate(b) if x % mod}
    combo = {}
    for r in final:
        if not r or min(r) >= t.cols:
            continue
        j = min(r)
        pv = r[j]
        e = v.get(j, 0)
        if not e:
            continue
        if e % pv:
            return NO_SOLUTION
        q = e // pv
        for c, w in r.items():
            if c < t.cols:
                nv = (v.get(c, 0) - q * w) % mod
                if nv:
                    v[c] = nv
                elif c in v:
                    del v[c]
            else:
                combo[c - t.cols] = (combo.get(c - t.cols, 0) + q * w) % mod
    if v:
        return NO_SOLUTION
    return [combo.get(j, 0) % mod for j in range(m.cols)]


class ContainmentError(ValueError):
    """Raised when the boundary span is not inside the cycle span."""


class ModulePresentation:
    """A finitely presented module over Z/p^N.

    Generators are opaque labels; relations are the columns of a sparse
    matrix.  The Howell form of the transposed relation matrix is cached
    and canonical: two presentations on the same generators are equal iff
    these forms agree.
    """

    def __init__(self, labels, relations):
        self.labels = list(labels)
        self.relations = relations
        if relations.rows != len(self.labels):
            raise ValueError("relation matrix rows must match generator count")
        self.modulus = relations.modulus
        self._howell = howell_form(relations.transpose())

    @property
    def relation_span(self):
        """Howell form whose rows span the relation submodule."""
        return self._howell

    def reduce(self, vec):
        """Canonical representative of vec modulo the relation span."""
        m = self.modulus
        p, N = self.relations.p, self.relations.N
        v = {j: x % m for j, x in enumerate(vec) if x % m}
        for i in range(self._howell.rows):
            row = self._howell.data.get(i, {})
            if not row:
                continue
            j = min(row)
            pv = row[j]
            e = v.get(j, 0)
            if e >= pv:
                q = e // pv
                for c, w in row.items():
                    nv = (v.get(c, 0) - q * w) % m
                    if nv:
                        v[c] = nv
                    elif c in v:
                        del v[c]
        return [v.get(j, 0) for j in range(len(self.labels))]

    def is_zero_element(self, vec):
        return span_membership(self._howell, vec) is not None

    def elements_equal(self, a, b):
        m = self.modulus
        return self.is_zero_element([(x - y) % m for x, y in zip(a, b)])

    def __eq__(self, other):
        if not isinstance(other, ModulePresentation):
            return NotImplemented
        return self.labels == other.labels and self._howell == other._howell

    def __hash__(self):
        return hash((tuple(self.labels), self._howell))

    def __repr__(self):
        return "ModulePresentation(%d gens, %d relations mod %d)" % (
            len(self.labels),
            self.relations.cols,
            self.modulus,
        )


def smith_divisor_exponents(m):
    """Exponents e with diag(p^e) the local Smith form of m over Z/p^N.

    Over the local ring Z/p^N an entry of minimal p-adic valuation divides
    every other entry, so plain pivoting (no Euclid steps) diagonalizes.
    Returned exponents are capped at N and sorted ascending; zero columns
    beyond the list contribute nothing.
    """
    mod = m.modulus
    p, N = m.p, m.N
    ent = {}
    for i, row in m.data.items():
        for j, v in row.items():
            ent[(i, j)] = v
    divisors = []
    while ent:
        (bi, bj), bv = min(
            ent.items(), key=lambda kv: (_val(kv[1], p, N), kv[0][0], kv[0][1])
        )
        v = _val(bv, p, N)
        if v >= N:
            break
        divisors.append(v)
        u = bv // (p ** v)
        inv = _inv_unit(u, mod)
        pv = p ** v
        # normalize the pivot column so the pivot entry is p^v
        for key in [k for k in ent if k[1] == bj]:
            nv = (ent[key] * inv) % mod
            if nv:
                ent[key] = nv
            else:
                del ent[key]
        # clear pivot row and column (all entries divisible by p^v)
        prow = {j: w for (i, j), w in ent.items() if i == bi}
        pcol = {i: w for (i, j), w in ent.items() if j == bj}
        for jj, w in prow.items():
            if jj == bj:
                continue
            q = w // pv
            for ii, x in list(pcol.items()):
                if ii == bi:
                    continue
                key = (ii, jj)
                nv = (ent.get(key, 0) - q * x) % mod
                if nv:
                    ent[key] = nv
                elif key in ent:
                    del ent[key]
        for key in [k for k in ent if k[0] == bi or k[1] == bj]:
            del ent[key]
    return sorted(divisors)


def subquotient(cycles, boundaries):
    """Presentation and elementary divisors of span(cycles)/span(boundaries).

    Both arguments hold generators as *columns* in a common ambient free
    module.  Returns (presentation, divisor_exponents) where the module is
    isomorphic to the direct sum of Z/p^e over the listed exponents
    (exponent N = a free Z/p^N summand; trivial summands are dropped).

    >>> cy = ModMatrix.from_cols([[1, 0], [0, 1]], 2, 8)
    >>> bd = ModMatrix.from_cols([[2, 0], [0, 4]], 2, 8)
    >>> pres, divs = subquotient(cy, bd)
    >>> divs
    [1, 2]
    """
    if cycles.modulus != boundaries.modulus or cycles.rows != boundaries.rows:
        raise ValueError("ambient mismatch between cycles and boundaries")
    mod = cycles.modulus
    gen_form = howell_form(cycles.transpose())
    gens = [gen_form.row(i) for i in range(gen_form.rows)]
    gens = [g for g in gens if g]
    k = len(gens)
    gmat = ModMatrix(
        cycles.rows,
        k,
        mod,
        {(i, j): v for j, g in enumerate(gens) for i, v in g.items()},
    )
    # containment check + boundary expressions
    expr_cols = []
    for j in range(boundaries.cols):
        b = boundaries.col(j)
        c = span_membership(gen_form, b)
        if c is None:
            raise ContainmentError("boundary column %d outside the cycle span" % j)
        expr_cols.append(c)
    kern = kernel(gmat)
    data = {
        (i, j): v for i, row in kern.data.items() for j, v in row.items()
    }
    for j, c in enumerate(expr_cols):
        for i, v in enumerate(c):
            if v % mod:
                data[(i, kern.cols + j)] = v % mod
    rel = ModMatrix(k, kern.cols + len(expr_cols), mod, data)
    pres = ModulePresentation(["g%d" % i for i in range(k)], rel)
    exps = smith_divisor_exponents(rel)
    N = cycles.N
    # Smith pivot p^v on a generator leaves a Z/p^v summand; generators
    # with no pivot keep their full Z/p^N
    quotient_exps = sorted(exps) + [N] * (k - len(exps))
    quotient_exps = sorted(e for e in quotient_exps if e > 0)
    return pres, quotient_exps
