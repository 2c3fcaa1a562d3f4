"""Log differential forms of a monomial chart over its log base.

The fast path realizes omega^i as a free module on the basis

    { monomial . wedge of symbols }

where the symbols are, per block h, dlog T_{h,1}, ..., dlog T_{h,r_h}
(index 0 is eliminated through the block relation
dlog T_{h,0} + ... + dlog T_{h,r_h} = 0), dlog u for each Laurent smooth
variable, and dx for each non-Laurent smooth variable (x is not a unit, so
dx rather than dlog x).  Three base modes are supported:

  * "blocks"  — one copy of the base monoid per block: the block relation
                holds separately in every block (the default);
  * "single"  — a single diagonal: only the total relation
                sum over all blocks and indices of dlog T_{h,i} = 0;
  * "trivial" — trivial log base: no dlog relation at all.

A general path builds the same modules as an honest quotient presentation
(Kaehler part plus monoid part modulo the log relations) and is used to
cross-check ranks of the asserted free basis.
"""

import itertools
from fractions import Fraction

from .chart import (
    MonomialElement,
    enumerate_basis,
    monomial_str,
    total_degree,
    vanishes,
)
from .linalg import ModMatrix, howell_form, kernel, span_membership, subquotient

BASE_MODES = ("blocks", "single", "trivial")


class DegreeOverflow(ValueError):
    """An operation left the exactness window of the truncated module."""


def basis_symbols(chart, base_mode="blocks"):
    """Ordered symbol basis; see the module docstring.

    >>> from logdrw.chart import LogChart
    >>> ch = LogChart(2, [["T0", "T1"]], [("u", True), ("x", False)])
    >>> basis_symbols(ch)
    (('dlog', 'T1'), ('dlog', 'u'), ('dx', 'x'))
    >>> basis_symbols(ch, "trivial")
    (('dlog', 'T0'), ('dlog', 'T1'), ('dlog', 'u'), ('dx', 'x'))
    """
    if base_mode not in BASE_MODES:
        raise ValueError("unknown base mode %r" % (base_mode,))
    syms = []
    for h, block in enumerate(chart.blocks):
        if base_mode == "trivial":
            keep = block
        elif base_mode == "single":
            # eliminate only the very first variable of the first block
            keep = block[1:] if h == 0 else block
        else:
            keep = block[1:]
        syms.extend(("dlog", v) for v in keep)
    for name, laurent in chart.smooth:
        syms.append(("dlog" if laurent else "dx", name))
    return tuple(syms)


def eliminated_dlog(chart, base_mode="blocks"):
    """Map from an eliminated block variable to its expansion
    {basis symbol: coefficient} via the base relation."""
    out = {}
    if base_mode == "trivial":
        return out
    if base_mode == "single":
        v0 = chart.blocks[0][0]
        combo = {}
        for h, block in enumerate(chart.blocks):
            for v in block[1:] if h == 0 else block:
                combo[("dlog", v)] = -1
        out[v0] = combo
        return out
    for block in chart.blocks:
        out[block[0]] = {("dlog", v): -1 for v in block[1:]}
    return out


def symbol_degree(sym):
    return 1 if sym[0] == "dx" else 0


class OmegaComplex:
    """The complex omega^* of a chart, on the asserted free basis.

    Basis elements in degree i are pairs (exponent tuple, strictly
    increasing wedge of i symbol indices) with
    total degree(monomial) + number of dx symbols <= the bound D.
    """

    def __init__(self, chart, modulus, bound, laurent_bound=None, base_mode="blocks",
                 fraction_depth=0):
        self.chart = chart
        self.modulus = modulus
        self.bound = bound
        self.laurent_bound = bound if laurent_bound is None else laurent_bound
        self.base_mode = base_mode
        self.symbols = basis_symbols(chart, base_mode)
        self.eliminated = eliminated_dlog(chart, base_mode)
        self.top = len(self.symbols)
        self.monomials = enumerate_basis(
            chart, fraction_depth, bound, self.laurent_bound
        )
        self.basis = {}
        self.index = {}
        for i in range(self.top + 1):
            elems = []
            for word in itertools.combinations(range(len(self.symbols)), i):
                wdeg = sum(symbol_degree(self.symbols[k]) for k in word)
                for ex in self.monomials:
                    if total_degree(chart, ex) + wdeg <= bound:
                        elems.append((ex, word))
            self.basis[i] = elems
            self.index[i] = {b: k for k, b in enumerate(elems)}
        self._d_matrices = {}

    def rank(self, i):
        return len(self.basis.get(i, ()))

    def zero_form(self, i):
        return {}

    def generator(self, ex, word, coeff=1):
        return {(tuple(Fraction(e) for e in ex), tuple(word)): coeff % self.modulus}

    # -- symbolic d ---------------------------------------------------

    def _d_monomial(self, ex):
        """d(T^ex) as {(new exponent tuple, symbol index): coeff}.

        dx symbols lower the exponent of their variable by one; dlog
        symbols leave it untouched.
        """
        chart = self.chart
        out = {}
        symindex = {s: k for k, s in enumerate(self.symbols)}
        for pos, name in enumerate(chart.variables):
            e = ex[pos]
            if e == 0:
                continue
            h = chart.block_of(name)
            if h is not None or chart.is_laurent(name):
                if ("dlog", name) in symindex:
                    key = (ex, symindex[("dlog", name)])
                    out[key] = out.get(key, 0) + e
                else:
                    for sym, c in self.eliminated[name].items():
                        key = (ex, symindex[sym])
                        out[key] = out.get(key, 0) + c * e
            else:
                nex = list(ex)
                nex[pos] = e - 1
                key = (tuple(nex), symindex[("dx", name)])
                out[key] = out.get(key, 0) + e
        clean = {}
        for (nex, k), c in out.items():
            if c.denominator != 1:
                raise DegreeOverflow(
                    "non-integral differential coefficient %s" % (c,)
                )
            c = int(c) % self.modulus
            if c and not vanishes(chart, nex):
                clean[(nex, k)] = c
        return clean

    def d_form(self, form):
        """d of a form {(exponent tuple, wedge word): coeff}."""
        out = {}
        for (ex, word), coeff in form.items():
            for (nex, k), c in self._d_monomial(ex).items():
                if k in word:
                    continue
                pos = sum(1 for w in word if w < k)
                sign = -1 if pos % 2 else 1
                nword = tuple(sorted(word + (k,)))
                key = (nex, nword)
                out[key] = (out.get(key, 0) + sign * c * coeff) % self.modulus
        return {k: v for k, v in out.items() if v}

    def wedge(self, f, g):
        out = {}
        for (ex1, w1), c1 in f.items():
            for (ex2, w2), c2 in g.items():
                if set(w1) & set(w2):
                    continue
                nex = tuple(a + b for a, b in zip(ex1, ex2))
                if vanishes(self.chart, nex):
                    continue
                merged = w1 + w2
                perm = sorted(range(len(merged)), key=lambda t: merged[t])
                sign = _perm_sign(perm)
                nword = tuple(sorted(merged))
                wdeg = sum(symbol_degree(self.symbols[k]) for k in nword)
                if total_degree(self.chart, nex) + wdeg > self.bound:
                    continue
                key = (nex, nword)
                out[key] = (out.get(key, 0) + sign * c1 * c2) % self.modulus
        return {k: v for k, v in out.items() if v}

    def to_vector(self, i, form):
        vec = [0] * self.rank(i)
        for key, c in form.items():
            if c % self.modulus == 0:
                continue
            if key not in self.index[i]:
                raise DegreeOverflow("form leaves the degree window: %r" % (key,))
            vec[self.index[i][key]] = c % self.modulus
        return vec

    def from_vector(self, i, vec):
        return {
            self.basis[i][k]: v % self.modulus
            for k, v in enumerate(vec)
            if v % self.modulus
        }

    def d_matrix(self, i):
        """The differential omega^i -> omega^(i+1) as a matrix acting on
        coordinate columns."""
        if i not in self._d_matrices:
            data = {}
            for col, (ex, word) in enumerate(self.basis[i]):
                img = self.d_form({(ex, word): 1})
                for key, c in img.items():
                    data[(self.index[i + 1][key], col)] = c
            self._d_matrices[i] = ModMatrix(
                self.rank(i + 1), self.rank(i), self.modulus, data
            )
        return self._d_matrices[i]

    def cohomology(self, i):
        """(presentation, divisor exponents) of H^i within the window."""
        if i < self.top:
            dmat = self.d_matrix(i)
            cyc = kernel(dmat)
        else:
            cyc = ModMatrix.identity(self.rank(i), self.modulus)
        if i > 0:
            bnd = self.d_matrix(i - 1)
        else:
            bnd = ModMatrix.zero(self.rank(i), 0, self.modulus)
        return subquotient(cyc, bnd)

    # -- graded pieces ------------------------------------------------

    def graded_degree(self, ex, word):
        return total_degree(self.chart, ex) + sum(
            symbol_degree(self.symbols[k]) for k in word
        )

    def graded_indices(self, i, g):
        return [
            k
            for k, (ex, word) in enumerate(self.basis[i])
            if self.graded_degree(ex, word) == g
        ]

    def graded_d_matrix(self, i, g):
        """d restricted to the graded-degree-g piece (d is homogeneous)."""
        rows = self.graded_indices(i + 1, g)
        cols = self.graded_indices(i, g)
        full = self.d_matrix(i)
        data = {}
        rowpos = {r: a for a, r in enumerate(rows)}
        for b, c in enumerate(cols):
            for r, row in full.data.items():
                if c in row and r in rowpos:
                    data[(rowpos[r], b)] = row[c]
        return ModMatrix(len(rows), len(cols), self.modulus, data)

    def graded_cohomology(self, i, g):
        """(cycles, boundaries, divisors) of H^i in graded degree g."""
        cols = self.graded_indices(i, g)
        if i < self.top:
            cyc = kernel(self.graded_d_matrix(i, g))
        else:
            cyc = ModMatrix.identity(len(cols), self.modulus)
        if i > 0:
            bnd_full = self.graded_d_matrix(i - 1, g)
        else:
            bnd_full = ModMatrix.zero(len(cols), 0, self.modulus)
        _, divs = subquotient(
            cyc if cyc.cols else ModMatrix.zero(len(cols), 0, self.modulus),
            bnd_full,
        )
        return cyc, bnd_full, divs

    # -- Cartier ------------------------------------------------------

    def cartier_inverse(self, form):
        """C^{-1}: x . dlog-word -> x^p . dlog-word, with the dx twist
        x^e dx -> x^(pe + p - 1) dx coming from dx = x dlog x."""
        p = self.chart.p
        out = {}
        for (ex, word), c in form.items():
            nex = [e * p for e in ex]
            for k in word:
                kind, name = self.symbols[k]
                if kind == "dx":
                    nex[self.chart.index(name)] += p - 1
            nex = tuple(nex)
            if vanishes(self.chart, nex):
                continue
            wdeg = sum(symbol_degree(self.symbols[k]) for k in word)
            if total_degree(self.chart, nex) + wdeg > self.bound:
                raise DegreeOverflow("Cartier image leaves the window")
            out[nex, tuple(word)] = pow(c, p, self.modulus)
        return {k: v for k, v in out.items() if v}


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for s in range(len(perm)):
        if seen[s]:
            continue
        length = 0
        t = s
        while not seen[t]:
            seen[t] = True
            t = perm[t]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def cartier_isomorphism_report(omega):
    """Check C^{-1}: omega^i -> H^i(omega^*) degree-wise within the window.

    The complex splits along the grading and C^{-1} multiplies graded
    degree by p, so the map is tested piecewise: source piece (i, g) maps
    to cohomology in graded degree p.g.  Sources whose image would leave
    the window are skipped.  Returns {(i, g): bool} plus an overall flag.
    """
    p = omega.chart.p
    out = {}
    ok = True
    for i in range(omega.top + 1):
        for g in range(omega.bound + 1):
            src = omega.graded_indices(i, g)
            if not src or p * g > omega.bound:
                continue
            # image vectors in the graded piece p*g
            tgt = omega.graded_indices(i, p * g)
            tpos = {t: a for a, t in enumerate(tgt)}
            cols = []
            good = True
            for k in src:
                ex, word = omega.basis[i][k]
                img = omega.cartier_inverse({(ex, word): 1})
                # cocycle check
                if i < omega.top and omega.d_form(img):
                    good = False
                vec = [0] * len(tgt)
                for key, c in img.items():
                    vec[tpos[omega.index[i][key]]] = c
                cols.append(vec)
            cyc, bnd, _ = omega.graded_cohomology(i, p * g)
            mmat = ModMatrix.from_cols(cols, len(tgt), omega.modulus)
            mb = mmat.hstack(bnd)
            h_mb = howell_form(mb.transpose())
            h_b = howell_form(bnd.transpose())
            injective = (h_mb.rows - h_b.rows) == len(src)
            surjective = all(
                span_membership(h_mb, cyc.col(j)) is not None
                for j in range(cyc.cols)
            )
            out[(i, g)] = bool(good and injective and surjective)
            ok = ok and out[(i, g)]
    return ok, out


# ---------------------------------------------------------------------------
# general path: omega^1 and omega^2 as honest quotient presentations
# ---------------------------------------------------------------------------


def general_omega_rank(chart, degree, bound, base_mode="blocks"):
    """Rank data for omega^degree built from the defining presentation:
    quotient of (Kaehler differentials) + (ring tensor groupified monoid)
    by d(alpha(m)) = alpha(m) . m and the base-monoid relations.

    Returns a dict {graded degree: number of free generators} where the
    grading counts monomial degree plus one per Kaehler symbol.  Only
    degrees <= bound are reported; charts with Laurent variables are
    rejected (boundary effects make the window comparison ill-posed).
    """
    if degree not in (1, 2):
        raise ValueError("general path implemented in degrees 1 and 2 only")
    if any(l for _, l in chart.smooth):
        raise ValueError("general path does not support Laurent variables")
    p = chart.p
    monos = enumerate_basis(chart, 0, bound)
    # degree-1 symbols: dT_v for every variable (weight 1: dT_v = T_v dlog T_v
    # for block variables), and the monoid tensors (weight 0)
    kah = [("dT", v) for v in chart.variables]
    mon = [("m", v) for b in chart.blocks for v in b]
    syms = kah + mon

    def wt(sym):
        return 1 if sym[0] == "dT" else 0

    def gens(deg_words):
        out = []
        for word in deg_words:
            for ex in monos:
                out.append((ex, word))
        return out

    if degree == 1:
        words = [(s,) for s in syms]
    else:
        words = list(itertools.combinations(syms, 2))

    allgens = []
    for word in words:
        for ex in monos:
            allgens.append((ex, word))
    index = {g: i for i, g in enumerate(allgens)}

    def add_term(vec, ex, word, coeff):
        ex = tuple(ex)
        if vanishes(chart, ex):
            return
        # normalize the word ordering with sign
        merged = list(word)
        perm = sorted(range(len(merged)), key=lambda t: syms.index(merged[t]))
        sign = _perm_sign(perm)
        nword = tuple(sorted(merged, key=syms.index))
        if len(set(nword)) != len(nword):
            return
        key = (ex, nword)
        if key not in index:
            return
        vec[index[key]] = (vec.get(index[key], 0) + sign * coeff) % p

    relations = []

    def rel_columns(build_rel):
        """build_rel(ex) yields (ex', word, coeff) triples for the module
        relation multiplied by the basis monomial T^ex."""
        for ex in monos:
            if degree == 1:
                vec = {}
                for exx, word, c in build_rel(ex):
                    add_term(vec, exx, word, c)
                if vec:
                    relations.append(vec)
            else:
                for s in syms:
                    vec = {}
                    for exx, word, c in build_rel(ex):
                        add_term(vec, exx, tuple(word) + (s,), c)
                    if vec:
                        relations.append(vec)

    one = (Fraction(0),) * chart.nvars

    def shift(ex, name, by):
        out = list(ex)
        out[chart.index(name)] += by
        return tuple(out)

    # (a) d of the vanishing ideal generators, multiplied by monomials:
    #     d(prod of block variables) = sum over i of (prod without i) dT_i
    for block in chart.blocks:
        def ideal_rel(ex, block=block):
            for v in block:
                exx = list(ex)
                for w in block:
                    if w != v:
                        exx[chart.index(w)] += 1
                yield tuple(exx), (("dT", v),), 1
        rel_columns(ideal_rel)

    # (b) log relation: dT_v = T_v (tensor v) for block variables
    for b in chart.blocks:
        for v in b:
            def log_rel(ex, v=v):
                yield ex, (("dT", v),), 1
                yield shift(ex, v, 1), (("m", v),), -1
            rel_columns(log_rel)

    # (c) base relation: tensor of the image of the base monoid is zero
    if base_mode == "blocks":
        groups = [list(b) for b in chart.blocks]
    elif base_mode == "single":
        groups = [[v for b in chart.blocks for v in b]]
    else:
        groups = []
    for grp in groups:
        def base_rel(ex, grp=grp):
            for v in grp:
                yield ex, (("m", v),), 1
        rel_columns(base_rel)

    rel_mat = ModMatrix(
        len(allgens),
        len(relations),
        p,
        {
            (i, j): c
            for j, vec in enumerate(relations)
            for i, c in vec.items()
            if c
        },
    )
    # per graded degree: free rank = generators - relation rank, computed
    # by restricting the (block-diagonal) relation matrix per degree
    def gdeg(g):
        ex, word = g
        return total_degree(chart, ex) + sum(wt(s) for s in word)

    ranks = {}
    for dd in range(bound + 1):
        rows = [i for i, g in enumerate(allgens) if gdeg(g) == dd]
        if not rows:
            continue
        rowset = set(rows)
        # every relation is homogeneous, so it either lives in this degree
        # or misses it entirely
        cols = []
        for j in range(rel_mat.cols):
            if any(j in row and i in rowset for i, row in rel_mat.data.items()):
                cols.append(j)
        sub = ModMatrix(
            len(rows),
            len(cols),
            p,
            {
                (rows.index(i), cols.index(j)): v
                for i, row in rel_mat.data.items()
                if i in rowset
                for j, v in row.items()
                if j in cols
            },
        )
        h = howell_form(sub.transpose())
        ranks[dd] = len(rows) - h.rows
    return ranks
