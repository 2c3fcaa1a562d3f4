"""The log de Rham-Witt tower of a monomial chart.

Level n is presented additively: W_n(R) is spanned by the generators
V^l[T^a] (0 <= l < n, T^a a basis monomial) subject to

    p . V^l[T^a] = V^(l+1)[T^(pa)],

and omega^i over W_n(R) is the free module on pairs

    V^l[T^a] . s_1 ^ ... ^ s_i,   s in {dV^j[T^b], dlog T_v},

modulo the relation families: (A) the p-relation on the function factor;
(B) p . dV^j[b] = dV^(j+1)[b^p] in any symbol slot; (L) Leibniz on all
pairs of additive generators, instantiated against every function
factor; (G) d[T_v] = [T_v] dlog T_v for log variables; plus the d-images
and symbol-wedges of all of these in higher degrees.

Everything is monomial: the product of two additive generators is a
single additive generator (or zero),

    V^l[T^a] . V^m[T^b] = V^(l+m)[T^(p^l(p^(m-l) a + b))]   (l <= m),

so no Witt structure polynomials are needed here; the witt module serves
as an independent oracle in the tests.

The tower quotient at level r additionally divides by the mixed-symbol
relation family

    V^i([a]) dV^j([T_m]) = V^i([a T_m^(p^(i-j))]) dlog T_m,

(0 <= j <= i < r, all basis monomials a, all log variables m) together
with its d-images and symbol-wedges.  F, V, R act on generators; the
procomplex axioms, level-1 comparison with omega^*, filtration
exactness, and the monodromy sequence are verified as matrix identities
modulo the relation spans.
"""

import itertools
from fractions import Fraction

from .chart import enumerate_basis, total_degree, vanishes
from .forms import BASE_MODES, OmegaComplex, basis_symbols, eliminated_dlog
from .linalg import (
    ModMatrix,
    NO_SOLUTION,
    _val,
    howell_form,
    kernel,
    solve,
    span_membership,
    subquotient,
)
from .dieudonne import ComplexLevel, _change_modulus, _quotient_basis


class CapacityExceeded(ValueError):
    """Requested level or window beyond the supported desk scale."""


class InvariantViolation(ValueError):
    """A structural identity failed modulo the relation span."""


class ExactnessFailure(ValueError):
    """A short exact sequence failed a rank or span check."""


def _to_int_exponent(ex):
    out = []
    for e in ex:
        if isinstance(e, Fraction):
            if e.denominator != 1:
                raise ValueError("integer exponents required here")
            out.append(int(e))
        else:
            out.append(int(e))
    return tuple(out)


def _perm_sign_sort(word):
    """(sorted tuple, sign) of a symbol word; None if a repeat occurs."""
    w = list(word)
    sign = 1
    for i in range(1, len(w)):
        j = i
        while j > 0 and w[j - 1] > w[j]:
            w[j - 1], w[j] = w[j], w[j - 1]
            sign = -sign
            j -= 1
    for i in range(1, len(w)):
        if w[i] == w[i - 1]:
            return None, 0
    return tuple(w), sign


class WittOmega:
    """Presentation of omega^* over W_n(R) for one chart and level."""

    def __init__(self, chart, n, bound, laurent_bound=None, base_mode="blocks", top=2):
        if n > 3:
            raise CapacityExceeded("level %d beyond the supported ceiling" % n)
        if base_mode not in BASE_MODES:
            raise ValueError("unknown base mode %r" % (base_mode,))
        self.chart = chart
        self.n = n
        self.p = chart.p
        self.modulus = chart.p ** n
        self.bound = bound
        self.laurent_bound = laurent_bound
        self.base_mode = base_mode
        self.top = top
        self.zero_exp = (0,) * chart.nvars
        self._has_laurent = any(chart.is_laurent(v) for v in chart.variables)
        self._netwin = None

        self.basis = [
            _to_int_exponent(ex)
            for ex in enumerate_basis(chart, 0, bound, laurent_bound)
        ]
        self.basis_set = set(self.basis)
        self.deg = {a: total_degree(chart, a) for a in self.basis}

        # symbols: dlog first (fixed order), then dV sorted by (j, monomial)
        self.dlog_names = [s[1] for s in basis_symbols(chart, base_mode) if s[0] == "dlog"]
        self.elim = eliminated_dlog(chart, base_mode)
        self.symbols = [("dlog", v) for v in self.dlog_names]
        for j in range(n):
            for b in sorted(self.basis):
                if b != self.zero_exp:
                    self.symbols.append(("dV", j, b))
        self.sym_index = {s: i for i, s in enumerate(self.symbols)}

        self.addgens = [(l, a) for l in range(n) for a in sorted(self.basis)]

        self.gens = []
        self.gen_index = []
        for i in range(top + 1):
            lst = self._enumerate_gens(i)
            self.gens.append(lst)
            self.gen_index.append({g: k for k, g in enumerate(lst)})

        self._d_cache = {}
        self._omega_cache = {}
        self._base_cache = None
        self._rel_cache = {}
        self._relspan_cache = {}
        self._lower = None

    def lower(self):
        """The sibling presentation one level down (cached)."""
        if self.n == 1:
            raise ValueError("no level below 1")
        if self._lower is None:
            self._lower = WittOmega(
                self.chart, self.n - 1, self.bound, self.laurent_bound,
                self.base_mode, self.top,
            )
        return self._lower

    # -- generator bookkeeping ------------------------------------------------

    def _sym_deg(self, sid):
        s = self.symbols[sid]
        return 0 if s[0] == "dlog" else self.deg[s[2]]

    def _enumerate_gens(self, i):
        words = [()]
        for _ in range(i):
            new = []
            for w in words:
                start = (w[-1] + 1) if w else 0
                for sid in range(start, len(self.symbols)):
                    new.append(w + (sid,))
            words = new
        out = set()
        for l, a in self.addgens:
            da = self.deg[a]
            for w in words:
                if da + sum(self._sym_deg(s) for s in w) <= self.bound:
                    out.add((l, a, w))
        if self._has_laurent and self.n >= 2:
            # with a laurent unit the function factor may cancel against
            # the dV arguments, so the honest window is the one on the
            # net multidegree; enumerate one function per (word, net).
            # Level one keeps the plain window: there the out-of-window
            # generators are projected by expanding their symbols instead
            nonneg = [
                k
                for k, v in enumerate(self.chart.variables)
                if not self.chart.is_laurent(v)
            ]
            for w in words:
                bsum = [0] * self.chart.nvars
                for sid in w:
                    s = self.symbols[sid]
                    if s[0] == "dV":
                        for k, bv in enumerate(s[2]):
                            bsum[k] += bv
                if not any(bsum):
                    continue
                for net in self._net_window():
                    a = tuple(x - y for x, y in zip(net, bsum))
                    if any(a[k] < 0 for k in nonneg):
                        continue
                    if a != self.zero_exp and vanishes(self.chart, a):
                        continue
                    for l in range(self.n):
                        out.add((l, a, w))
        return sorted(out)

    def _net_window(self):
        """Exponent vectors admissible as *net* multidegrees: the window
        monomials plus the vanishing ones (a vanishing net does not kill
        a generator -- only a vanishing function factor does)."""
        if self._netwin is None:
            lb = self.bound if self.laurent_bound is None else self.laurent_bound
            ranges = []
            for v in self.chart.variables:
                if self.chart.is_laurent(v):
                    cap = min(lb, self.bound)
                    ranges.append(range(-cap, cap + 1))
                else:
                    ranges.append(range(self.bound + 1))
            self._netwin = [
                net
                for net in itertools.product(*ranges)
                if sum(abs(e) for e in net) <= self.bound
            ]
        return self._netwin

    def rank(self, i):
        return len(self.gens[i])

    def mul_add(self, g1, g2):
        """Product of two additive generators, as a single generator or
        None (vanishing, window overflow, or level overflow)."""
        (l1, a1), (l2, a2) = g1, g2
        if l1 > l2:
            (l1, a1), (l2, a2) = (l2, a2), (l1, a1)
        p = self.p
        scale = p ** (l2 - l1)
        a0 = tuple(scale * x + y for x, y in zip(a1, a2))
        level = l1 + l2
        a = tuple((p ** l1) * x for x in a0)
        if not self._gen_exists(level, a):
            return None
        return (level, a)

    def gen_mul(self, g1, g2):
        """Product of two generators with symbol words, as (gen, sign) or
        None; functions are central, symbol words wedge."""
        (l1, a1, w1), (l2, a2, w2) = g1, g2
        f = self.mul_add((l1, a1), (l2, a2))
        if f is None:
            return None
        word, sign = _perm_sign_sort(w1 + w2)
        if word is None:
            return None
        return (f[0], f[1], word), sign

    def _omega_reduce(self, i, a, syms):
        """In-window class of a level-one generator given symbolically,
        expanded via d(T^b) = sum_v b_v T^b dlog T_v (T^(b-e_v) dx_v for
        a smooth variable).  Terms leaving the window drop: they are
        genuinely zero in the truncation.  Returns {index: coeff}."""
        key = (i, a, tuple(syms))
        cached = self._omega_cache.get(key)
        if cached is not None:
            return cached
        # every expansion term has window weight >= |signed multidegree|
        # minus one per expandable symbol; bail out early when that
        # already overflows
        mu = list(a)
        ndv = 0
        for s in syms:
            if s[0] == "dV":
                ndv += 1
                for k, bv in enumerate(s[2]):
                    mu[k] += bv
        if sum(abs(x) for x in mu) - ndv > self.bound:
            self._omega_cache[key] = {}
            return {}
        acc = [(a, (), 1)]
        for s in syms:
            if s[0] == "dlog":
                sid = self.sym_index[s]
                acc = [(e, ws + (sid,), c) for e, ws, c in acc]
                continue
            b = s[2]
            factors = []
            for k, bv in enumerate(b):
                if not bv:
                    continue
                expand = self.dlog_expand(self.chart.variables[k])
                if expand is not None:
                    for s2, c2 in expand.items():
                        factors.append((b, s2, bv * c2))
                else:
                    ev = tuple(1 if t == k else 0 for t in range(self.chart.nvars))
                    eb = tuple(x - y for x, y in zip(b, ev))
                    factors.append((eb, self.sym_index[("dV", 0, ev)], bv))
            acc = [
                (tuple(x + y for x, y in zip(e, eb)), ws + (s2,), c * c2)
                for e, ws, c in acc
                for eb, s2, c2 in factors
            ]
        out = {}
        for e, ws, c in acc:
            word, sign = _perm_sign_sort(ws)
            if word is None:
                continue
            idx = self.gen_index[i].get((0, e, word))
            if idx is not None:
                out[idx] = (out.get(idx, 0) + c * sign) % self.modulus
        out = {idx: c for idx, c in out.items() if c}
        self._omega_cache[key] = out
        return out

    def _image_terms_sym(self, i, l, a, syms, coeff):
        """{index: coeff} for a symbolically given generator.

        A generator outside the window is projected at level one by
        expanding its differential-symbol factors (so every relation
        column is the exact window projection of a true relation);
        deeper levels drop it, which quotients by the out-of-window
        generators.
        """
        sids = [self.sym_index.get(s) for s in syms]
        if all(x is not None for x in sids):
            word, sign = _perm_sign_sort(tuple(sids))
            if word is None:
                return {}
            idx = self.gen_index[i].get((l, a, word))
            if idx is not None:
                return {idx: (coeff * sign) % self.modulus}
        elif self.n >= 2:
            # a dV^0 argument beyond the presented symbol set: rewrite by
            # d[T^b] = [T^b] dlog(T^b) when every support variable has a
            # dlog (otherwise the drop below is the honest quotient)
            for t, sid in enumerate(sids):
                if sid is not None:
                    continue
                s = syms[t]
                if s[0] != "dV" or s[1] != 0:
                    return {}
                b = s[2]
                factors = []
                for k, bv in enumerate(b):
                    if not bv:
                        continue
                    expand = self.dlog_expand(self.chart.variables[k])
                    if expand is None:
                        return {}
                    for s2, c2 in expand.items():
                        factors.append((self.symbols[s2], bv * c2))
                g = self._mul_raw((l, a), (0, b))
                if g is None:
                    return {}
                rest = list(syms)
                out = {}
                for s2, c2 in factors:
                    rest[t] = s2
                    for idx, c in self._image_terms_sym(
                        i, g[0], g[1], rest, (coeff * c2) % self.modulus
                    ).items():
                        out[idx] = (out.get(idx, 0) + c) % self.modulus
                return {idx: c for idx, c in out.items() if c}
        if self.n == 1:
            return {
                r: (c * coeff) % self.modulus
                for r, c in self._omega_reduce(i, a, syms).items()
            }
        return {}

    def _term_sym(self, vec, i, l, a, syms, coeff):
        for idx, c in self._image_terms_sym(i, l, a, syms, coeff).items():
            vec[idx] = (vec.get(idx, 0) + c) % self.modulus
            if not vec[idx]:
                del vec[idx]

    def _term(self, vec, i, gen, coeff):
        idx = self.gen_index[i].get(gen)
        if idx is not None:
            vec[idx] = (vec.get(idx, 0) + coeff) % self.modulus
            if not vec[idx]:
                del vec[idx]
            return
        if self.n == 1:
            l, a, w = gen
            self._term_sym(vec, i, l, a, [self.symbols[s] for s in w], coeff)

    def _mul_raw(self, g1, g2):
        """Product of two additive generators without the window check:
        a generator-shaped pair or None for a genuine zero."""
        (l1, a1), (l2, a2) = g1, g2
        if l1 > l2:
            (l1, a1), (l2, a2) = (l2, a2), (l1, a1)
        p = self.p
        level = l1 + l2
        if level >= self.n:
            return None
        scale = p ** (l2 - l1)
        a = tuple((p ** l1) * (scale * x + y) for x, y in zip(a1, a2))
        if a != self.zero_exp and vanishes(self.chart, a):
            return None
        return (level, a)

    def dlog_expand(self, v):
        """{symbol id: coeff} for dlog of a log variable, or None for a
        smooth non-laurent variable (which has no dlog)."""
        if ("dlog", v) in self.sym_index:
            return {self.sym_index[("dlog", v)]: 1}
        if v in self.elim:
            return {
                self.sym_index[s]: c for s, c in self.elim[v].items()
            }
        return None

    def log_variables(self):
        out = [v for block in self.chart.blocks for v in block]
        out.extend(name for name, laurent in self.chart.smooth if laurent)
        return out

    # -- differential ---------------------------------------------------------

    def _clamp_basis(self, a):
        """A window monomial carrying as much of the exponent a as fits."""
        out = [0] * self.chart.nvars
        budget = self.bound
        cap = self.laurent_bound if self.laurent_bound is not None else self.bound
        for k, v in enumerate(a):
            if budget <= 0:
                break
            take = min(abs(v), budget)
            if self.chart.is_laurent(self.chart.variables[k]):
                take = min(take, cap)
            out[k] = take if v > 0 else -take
            budget -= take
        return tuple(out)

    def _d_split(self, a):
        """Leibniz splitting d[x^a] = sum [x^(a - b_j)] d[x^(b_j)] with
        every b_j a window monomial; returns [(a - b_j, b_j)] pairs."""
        if a in self.basis_set:
            return [(self.zero_exp, a)]
        b = self._clamp_basis(a)
        rest = tuple(x - y for x, y in zip(a, b))
        out = [(rest, b)]
        for r2, b2 in self._d_split(rest):
            out.append((tuple(x + y for x, y in zip(b, r2)), b2))
        return out

    def d_of_gen(self, i, gen):
        """d(V^l[a] . w) = dV^l[a] ^ w, as {index in degree i+1: coeff}."""
        l, a, w = gen
        if a == self.zero_exp:
            return {}
        out = {}
        sid = self.sym_index.get(("dV", l, a))
        if sid is not None:
            word, sign = _perm_sign_sort((sid,) + w)
            if word is None:
                return {}
            self._term(out, i + 1, (0, self.zero_exp, word), sign)
            return out
        # the exponent itself is outside the window (possible with a
        # laurent unit cancelling against the symbols); at depth zero
        # expand d by Leibniz over a window splitting, deeper functions
        # have no image left in the window
        if l > 0:
            return {}
        wsyms = [self.symbols[s] for s in w]
        for rest, b in self._d_split(a):
            self._term_sym(out, i + 1, 0, rest, [("dV", 0, b)] + wsyms, 1)
        return out

    def d_matrix(self, i):
        if i not in self._d_cache:
            data = {}
            for col, g in enumerate(self.gens[i]):
                for row, c in self.d_of_gen(i, g).items():
                    data[(row, col)] = c
            self._d_cache[i] = ModMatrix(
                self.rank(i + 1), self.rank(i), self.modulus, data
            )
        return self._d_cache[i]

    # -- relations ------------------------------------------------------------

    def _wedge_term(self, gen, sid):
        l, a, w = gen
        word, sign = _perm_sign_sort(w + (sid,))
        if word is None:
            return None, 0
        return (l, a, word), sign

    def _multipliers(self):
        """Function factors the relation families are instantiated
        against: the additive generators, plus (when a laurent unit
        allows cancellation) every depth-zero function occurring in an
        enumerated generator."""
        fs = [(0, self.zero_exp)] + [
            (l, a) for l, a in self.addgens if a != self.zero_exp
        ]
        if self._has_laurent:
            # level-independent so that every instance descends under R:
            # all depth-zero monomials of total degree <= bound with the
            # laurent exponents capped by the bound (not the laurent cap,
            # which only windows the presented generators)
            seen = set(fs)
            extra = set()
            ranges = []
            for v in self.chart.variables:
                if self.chart.is_laurent(v):
                    ranges.append(range(-self.bound, self.bound + 1))
                else:
                    ranges.append(range(self.bound + 1))
            for a in itertools.product(*ranges):
                if sum(abs(e) for e in a) > self.bound:
                    continue
                if a == self.zero_exp or vanishes(self.chart, a):
                    continue
                if (0, a) not in seen:
                    extra.add((0, a))
            fs.extend(sorted(extra))
        return fs

    def _base_instances(self):
        """The degree-one relation instances in symbolic form: a list of
        term lists, each term (level, exponent, symbol tuples, coeff)."""
        if self._base_cache is not None:
            return self._base_cache
        insts = []
        p = self.p
        # (L) Leibniz f . (d(g1 g2) - g1 dg2 - g2 dg1)
        nz = [(l, a) for l, a in self.addgens if a != self.zero_exp]
        fs = self._multipliers()
        for idx1, g1 in enumerate(nz):
            for g2 in nz[idx1:]:
                indeg = self.deg[g1[1]] + self.deg[g2[1]] <= self.bound
                level0 = g1[0] == 0 and g2[0] == 0
                prod = self._mul_raw(g1, g2)
                for f in fs:
                    if f[1] in self.basis_set and indeg:
                        pass
                    elif self._has_laurent and level0 and f[0] == 0:
                        net = tuple(
                            x + y + z for x, y, z in zip(f[1], g1[1], g2[1])
                        )
                        if total_degree(self.chart, net) > self.bound:
                            continue
                    else:
                        continue
                    terms = []
                    if prod is not None and prod[1] != self.zero_exp:
                        # f . d(g1 g2): function f times the symbol dV[g1 g2]
                        terms.append((f[0], f[1], [("dV", prod[0], prod[1])], 1))
                    for ga, gb in ((g1, g2), (g2, g1)):
                        fg = self._mul_raw(f, ga)
                        if fg is not None:
                            terms.append(
                                (fg[0], fg[1], [("dV", gb[0], gb[1])], -1)
                            )
                    if terms:
                        insts.append(terms)
        # (P) projection on the d-symbol: dV^0[b] ^ V(y) = V([b^(p-1)] d[b] y)
        # (for function factors the monomial product rule makes the
        # projection formula hold on the nose, so only this case is needed)
        if self.n >= 2:
            low = self.lower()
            for b in sorted(self.basis_set):
                if b == self.zero_exp:
                    continue
                db = self.deg[b]
                for ly, ay in low.addgens:
                    if not self._has_laurent and db + total_degree(self.chart, ay) > self.bound:
                        continue
                    scale = p ** ly
                    za = tuple(x + scale * (p - 1) * y for x, y in zip(ay, b))
                    za_ok = not vanishes(self.chart, za)
                    for f in fs:
                        g1 = self._mul_raw(f, (ly + 1, ay))
                        g2 = self._mul_raw(f, (ly + 1, za)) if za_ok else None
                        nets = [
                            total_degree(self.chart, tuple(x + y for x, y in zip(g[1], b)))
                            for g in (g1, g2)
                            if g is not None
                        ]
                        if not nets or min(nets) > self.bound:
                            continue
                        terms = []
                        if g1 is not None:
                            terms.append((g1[0], g1[1], [("dV", 0, b)], 1))
                        if g2 is not None:
                            terms.append((g2[0], g2[1], [("dV", 1, b)], -1))
                        if terms:
                            insts.append(terms)
        # (G) d[T_v] = [T_v] dlog T_v, instantiated against f
        for v in self.log_variables():
            expand = self.dlog_expand(v)
            if expand is None:
                continue
            ev = tuple(1 if name == v else 0 for name in self.chart.variables)
            for f in fs:
                terms = [(f[0], f[1], [("dV", 0, ev)], 1)]  # f . d[T_v]
                fg = self._mul_raw(f, (0, ev))
                # - f [T_v] dlog T_v
                if fg is not None:
                    for s, c in expand.items():
                        terms.append((fg[0], fg[1], [self.symbols[s]], -c))
                insts.append(terms)
        self._base_cache = insts
        return insts

    def _base_relation_columns(self, i):
        """The base families as columns in degree i: projected directly
        for i = 1, and (when cancellation makes the degree-one column an
        incomplete image of the instance) wedged symbolically with an
        extra word for i >= 2."""
        cols = []
        if i == 1:
            for terms in self._base_instances():
                vec = {}
                for l, a, syms, c in terms:
                    self._term_sym(vec, 1, l, a, syms, c)
                if vec:
                    cols.append(vec)
            return cols
        if not (self._has_laurent and self.n >= 2):
            return []
        words = [()]
        for _ in range(i - 1):
            words = [w + (sid,) for w in words for sid in range(len(self.symbols))]
        insts = []
        for terms in self._base_instances():
            nets = []
            for l, a, syms, _c in terms:
                mu = list(a)
                for s in syms:
                    if s[0] == "dV":
                        for k, bv in enumerate(s[2]):
                            mu[k] += bv
                nets.append(mu)
            insts.append((terms, nets))
        for w in words:
            wsyms = [self.symbols[sid] for sid in w]
            bw = [0] * self.chart.nvars
            for s in wsyms:
                if s[0] == "dV":
                    for k, bv in enumerate(s[2]):
                        bw[k] += bv
            for terms, nets in insts:
                if all(
                    sum(abs(x + y) for x, y in zip(mu, bw)) > self.bound
                    for mu in nets
                ):
                    continue
                vec = {}
                for l, a, syms, c in terms:
                    self._term_sym(vec, i, l, a, syms + wsyms, c)
                if vec:
                    cols.append(vec)
        return cols

    def _structural_columns(self, i):
        """(A) and (B) relation columns native to degree i."""
        cols = []
        p = self.p
        for g in self.gens[i]:
            l, a, w = g
            # (A) p . (l, a, w) = (l+1, pa, w)
            vec = {}
            self._term(vec, i, g, p)
            if l + 1 < self.n:
                pa = tuple(p * x for x in a)
                self._term(vec, i, (l + 1, pa, w), -1)
            if vec:
                cols.append(vec)
            # (B) p . dV^j[b] = dV^(j+1)[b^p] slotwise
            for t, sid in enumerate(w):
                s = self.symbols[sid]
                if s[0] != "dV":
                    continue
                j, b = s[1], s[2]
                vec = {}
                self._term(vec, i, g, p)
                if j + 1 < self.n:
                    pb = tuple(p * x for x in b)
                    nsid = self.sym_index.get(("dV", j + 1, pb))
                    if nsid is not None:
                        word, sign = _perm_sign_sort(
                            tuple(x for k, x in enumerate(w) if k != t) + (nsid,)
                        )
                        if word is not None:
                            self._term(vec, i, (l, a, word), -sign)
                if vec:
                    cols.append(vec)
        return cols

    def _reduction_columns(self, i):
        """Columns reducing mixed Teichmueller/dV generators through the
        projection formula (valid in the saturated complex): when the
        relevant argument is a product of log variables,

            V^l([a]) dV^j([b]) = V^l([a b^(p^(l-j))]) dlog(T^b)   (l >= j)
            V^l([a]) dV^j([b]) = p^l dV^j([T^z]) - V^j([T^z]) dlog(T^a)
                with z = p^(j-l) a + b                            (l < j)

        Emitted per generator, one dV slot each.  Only needed for charts
        with a laurent unit, where cancellation lets such classes escape
        the Leibniz/log families (whose multipliers live in the window)."""
        if not self._has_laurent:
            return []
        cols = []
        p = self.p
        for g in self.gens[i]:
            l, a, w = g
            for t, sid in enumerate(w):
                s = self.symbols[sid]
                if s[0] != "dV":
                    continue
                j, b = s[1], s[2]
                key = b if l >= j else a
                if key == self.zero_exp:
                    continue
                expands = []
                for k, bv in enumerate(key):
                    if not bv:
                        continue
                    e = self.dlog_expand(self.chart.variables[k])
                    if e is None:
                        expands = None
                        break
                    for s2, c2 in e.items():
                        expands.append((self.symbols[s2], bv * c2))
                if expands is None:
                    continue
                vec = {}
                self._term(vec, i, g, 1)
                syms = [self.symbols[x] for x in w]
                if l >= j:
                    na = tuple(x + (p ** (l - j)) * y for x, y in zip(a, b))
                    if not vanishes(self.chart, na):
                        for s2, c2 in expands:
                            self._term_sym(
                                vec, i, l, na,
                                syms[:t] + [s2] + syms[t + 1:], -c2,
                            )
                else:
                    z = tuple((p ** (j - l)) * x + y for x, y in zip(a, b))
                    if not vanishes(self.chart, z):
                        self._term_sym(
                            vec, i, 0, self.zero_exp,
                            syms[:t] + [("dV", j, z)] + syms[t + 1:],
                            -(p ** l),
                        )
                        for s2, c2 in expands:
                            self._term_sym(
                                vec, i, j, z,
                                syms[:t] + [s2] + syms[t + 1:], c2,
                            )
                if vec:
                    cols.append(vec)
                break
        return cols

    def _d_image_of_column(self, i, vec):
        out = {}
        for idx, c in vec.items():
            for row, dc in self.d_of_gen(i, self.gens[i][idx]).items():
                out[row] = (out.get(row, 0) + c * dc) % self.modulus
                if not out[row]:
                    del out[row]
        return out

    def _wedge_column(self, i, vec, sid):
        out = {}
        gi = self.gen_index[i + 1]
        for idx, c in vec.items():
            gen, sign = self._wedge_term(self.gens[i][idx], sid)
            if gen is None:
                continue
            tgt = gi.get(gen)
            if tgt is not None:
                out[tgt] = (out.get(tgt, 0) + c * sign) % self.modulus
                if not out[tgt]:
                    del out[tgt]
            elif self.n == 1:
                self._term(out, i + 1, gen, c * sign)
        return out

    def relation_columns(self, i):
        """All relation columns in degree i (deduplicated)."""
        if i in self._rel_cache:
            return self._rel_cache[i]
        if i == 0:
            cols = self._structural_columns(0)
        elif i == 1:
            cols = (
                self._structural_columns(1)
                + self._base_relation_columns(1)
                + self._reduction_columns(1)
            )
            # d-images of the degree-0 structural relations
            for vec in self._structural_columns(0):
                img = self._d_image_of_column(0, vec)
                if img:
                    cols.append(img)
        else:
            cols = (
                self._structural_columns(i)
                + self._base_relation_columns(i)
                + self._reduction_columns(i)
            )
            prev = self.relation_columns(i - 1)
            for vec in prev:
                img = self._d_image_of_column(i - 1, vec)
                if img:
                    cols.append(img)
                for sid in range(len(self.symbols)):
                    wedged = self._wedge_column(i - 1, vec, sid)
                    if wedged:
                        cols.append(wedged)
        # V-images of the lower-level relations (V of a relation is a
        # relation: p^(n-1) V = V p^(n-1) = 0 makes them well defined)
        if self.n >= 2:
            low = self.lower()
            for vec in low.relation_columns(i):
                vvec = {}
                for idx, c in vec.items():
                    vg = _vgen(low, self, low.gens[i][idx])
                    if vg is not None:
                        self._term(vvec, i, vg, c)
                if vvec:
                    cols.append(vvec)
        seen = set()
        out = []
        for vec in cols:
            key = tuple(sorted(vec.items()))
            if key and key not in seen:
                seen.add(key)
                out.append(vec)
        self._rel_cache[i] = out
        return out

    def relation_matrix(self, i, extra=None):
        cols = self.relation_columns(i)
        if extra:
            cols = cols + extra
        data = {}
        for col, vec in enumerate(cols):
            for row, c in vec.items():
                data[(row, col)] = c
        return ModMatrix(self.rank(i), len(cols), self.modulus, data)

    def relation_span(self, i):
        if i not in self._relspan_cache:
            self._relspan_cache[i] = howell_form(self.relation_matrix(i).transpose())
        return self._relspan_cache[i]

    def _gen_exists(self, l, a):
        if l >= self.n:
            return False
        if a != self.zero_exp and vanishes(self.chart, a):
            return False
        if total_degree(self.chart, a) > self.bound:
            return False
        if self.laurent_bound is not None:
            for k, e in enumerate(a):
                if self.chart.is_laurent(self.chart.variables[k]) and abs(e) > self.laurent_bound:
                    return False
        return True

    # -- maps between levels --------------------------------------------------

    def map_gen_F_sym(self, gen, target):
        """F of a generator in symbolic form (l, a, [symbol tuples]), or
        None for a genuine zero; the window projection is the caller's.

        F(V^l[a]) = V^l[a^p] read at the lower level; dV^j -> dV^(j-1)
        for j >= 1; F(d[b]) = [b^(p-1)] d[b]; dlog fixed.
        """
        l, a, w = gen
        p = self.p
        if l >= target.n:
            return None
        fa = tuple(p * x for x in a)
        syms = []
        for sid in w:
            s = self.symbols[sid]
            if s[0] == "dlog":
                syms.append(s)
            else:
                j, b = s[1], s[2]
                if j >= 1:
                    syms.append(("dV", j - 1, b))
                else:
                    # V^l[c] . [m] = V^l[c . m^(p^l)]
                    syms.append(("dV", 0, b))
                    scale = (p ** l) * (p - 1)
                    fa = tuple(x + scale * y for x, y in zip(fa, b))
        if fa != self.zero_exp and vanishes(self.chart, fa):
            return None
        return (l, fa, syms)

    def map_gen_F(self, gen, target):
        """F of a generator as (target gen, sign), or None when it is
        zero or leaves the target window."""
        res = self.map_gen_F_sym(gen, target)
        if res is None:
            return None
        l, fa, syms = res
        if not target._gen_exists(l, fa):
            return None
        sids = []
        for s in syms:
            if s not in target.sym_index:
                return None
            sids.append(target.sym_index[s])
        word, sign = _perm_sign_sort(tuple(sids))
        if word is None:
            return None
        return (l, fa, word), sign

    def F_matrix(self, i, target):
        """F: level n, degree i -> level n-1, degree i as a matrix."""
        if target.n != self.n - 1:
            raise ValueError("F lowers the level by one")
        data = {}
        for col, g in enumerate(self.gens[i]):
            res = self.map_gen_F_sym(g, target)
            if res is None:
                continue
            l, fa, syms = res
            for idx, c in target._image_terms_sym(i, l, fa, syms, 1).items():
                data[(idx, col)] = c
        return ModMatrix(target.rank(i), self.rank(i), target.modulus, data)

    def V_matrix(self, i, target):
        """V: level n, degree i -> level n+1, degree i."""
        if target.n != self.n + 1:
            raise ValueError("V raises the level by one")
        data = {}
        for col, (l, a, w) in enumerate(self.gens[i]):
            syms = []
            ok = True
            for sid in w:
                s = self.symbols[sid]
                if s[0] == "dlog":
                    syms.append(s)
                else:
                    syms.append(("dV", s[1] + 1, s[2]))
            sids = [target.sym_index[s] for s in syms if s in target.sym_index]
            if len(sids) != len(syms):
                continue
            word, sign = _perm_sign_sort(tuple(sids))
            if word is None:
                continue
            idx = target.gen_index[i].get((l + 1, a, word))
            if idx is not None:
                data[(idx, col)] = sign % target.modulus
        return ModMatrix(target.rank(i), self.rank(i), target.modulus, data)

    def R_matrix(self, i, target):
        """R: level n, degree i -> level n-1, degree i (drop top symbols)."""
        if target.n != self.n - 1:
            raise ValueError("R lowers the level by one")
        data = {}
        for col, (l, a, w) in enumerate(self.gens[i]):
            if l >= target.n:
                continue
            syms = [self.symbols[sid] for sid in w]
            if any(s[0] == "dV" and s[1] >= target.n for s in syms):
                continue
            for idx, c in target._image_terms_sym(i, l, a, syms, 1).items():
                data[(idx, col)] = c
        return ModMatrix(target.rank(i), self.rank(i), target.modulus, data)


# ---------------------------------------------------------------------------
# the mixed-symbol (tower) relation family
# ---------------------------------------------------------------------------


def hk_columns(omega):
    """Relation columns V^i([a]) dV^j([T_m]) - V^i([a T_m^(p^(i-j))]) dlog T_m
    for 0 <= j <= i < n, plus their d-images and symbol wedges; per degree.

    At n = 1 the family reduces to instances of the log relation (G) and
    contributes nothing new; the construction verifies this by producing
    columns already inside the relation span.
    """
    chart = omega.chart
    p = omega.p
    out = {1: [], 2: []}
    base = []
    for m in omega.log_variables():
        expand = omega.dlog_expand(m)
        if expand is None:
            continue
        em = tuple(1 if name == m else 0 for name in chart.variables)
        for i in range(omega.n):
            for j in range(i + 1):
                for a in omega.basis:
                    vec = {}
                    sid = omega.sym_index[("dV", j, em)]
                    omega._term(vec, 1, (i, a, (sid,)), 1)
                    scale = p ** (i - j)
                    a2 = tuple(x + scale * y for x, y in zip(a, em))
                    if not vanishes(chart, a2):
                        for s, c in expand.items():
                            omega._term(vec, 1, (i, a2, (s,)), -c)
                    if vec:
                        base.append(vec)
    seen = set()
    for vec in base:
        key = tuple(sorted(vec.items()))
        if key not in seen:
            seen.add(key)
            out[1].append(vec)
    if omega.top >= 2:
        seen = set()
        for vec in out[1]:
            img = omega._d_image_of_column(1, vec)
            if img:
                key = tuple(sorted(img.items()))
                if key not in seen:
                    seen.add(key)
                    out[2].append(img)
            for sid in range(len(omega.symbols)):
                wedged = omega._wedge_column(1, vec, sid)
                if wedged:
                    key = tuple(sorted(wedged.items()))
                    if key not in seen:
                        seen.add(key)
                        out[2].append(wedged)
    return out


# ---------------------------------------------------------------------------
# tower
# ---------------------------------------------------------------------------


class TowerLevel:
    """One level of the tower: omega^*_{W_r} divided by the mixed-symbol
    relations, with cached Howell spans."""

    def __init__(self, omega):
        self.omega = omega
        self.r = omega.n
        self.modulus = omega.modulus
        extra = hk_columns(omega)
        self.rel = {}
        self.relspan = {}
        for i in range(omega.top + 1):
            cols = omega.relation_columns(i) + extra.get(i, [])
            data = {}
            for col, vec in enumerate(cols):
                for row, c in vec.items():
                    data[(row, col)] = c
            self.rel[i] = ModMatrix(omega.rank(i), len(cols), self.modulus, data)
            self.relspan[i] = howell_form(self.rel[i].transpose())

    def rank(self, i):
        return self.omega.rank(i)

    def is_zero(self, i, vec):
        return span_membership(self.relspan[i], vec) is not None

    def equal(self, i, va, vb):
        return self.is_zero(i, [(x - y) % self.modulus for x, y in zip(va, vb)])

    def size_exponent(self, i):
        """log_p of the module order."""
        free = ModMatrix.identity(self.rank(i), self.modulus)
        _, divs = subquotient(free, self.rel[i])
        return sum(divs)

    def d(self, i):
        return self.omega.d_matrix(i)

    def cohomology(self, i):
        """(reps, boundary-and-relation matrix, divisors) of H^i of the
        presented quotient complex."""
        n = self.rank(i)
        if i < self.omega.top:
            # cocycle condition in the quotient: d x lies in the relation span
            ker = kernel(self.d(i).hstack(self.rel[i + 1]))
            cyc = ModMatrix.from_cols(
                [ker.col(j)[:n] for j in range(ker.cols)], n, self.modulus
            )
        else:
            cyc = ModMatrix.identity(n, self.modulus)
        cyc = cyc.hstack(self.rel[i])
        if i > 0:
            bnd = self.d(i - 1).hstack(self.rel[i])
        else:
            bnd = self.rel[i]
        reps = _quotient_basis(cyc, bnd, self.modulus)
        _, divs = subquotient(cyc, bnd)
        return reps, bnd, divs


class DRWTower:
    """Levels 1..r_max with F, V, R and the coordinate log data."""

    def __init__(self, chart, r_max, bound, laurent_bound=None, base_mode="blocks", top=2):
        if r_max > 3:
            raise CapacityExceeded("tower level ceiling is 3")
        self.chart = chart
        self.r_max = r_max
        self.bound = bound
        self.base_mode = base_mode
        self.top = top
        self.levels = {}
        self.omegas = {}
        for r in range(1, r_max + 1):
            om = WittOmega(chart, r, bound, laurent_bound, base_mode, top)
            self.omegas[r] = om
            self.levels[r] = TowerLevel(om)
        self.Fmats = {}
        self.Vmats = {}
        self.Rmats = {}
        for r in range(2, r_max + 1):
            self.Fmats[r] = [
                self.omegas[r].F_matrix(i, self.omegas[r - 1]) for i in range(top + 1)
            ]
            self.Rmats[r] = [
                self.omegas[r].R_matrix(i, self.omegas[r - 1]) for i in range(top + 1)
            ]
        for r in range(1, r_max):
            self.Vmats[r] = [
                self.omegas[r].V_matrix(i, self.omegas[r + 1]) for i in range(top + 1)
            ]

    def alpha(self, r, v):
        """Teichmuller log value [T_v] at level r, as a degree-0 vector."""
        om = self.omegas[r]
        ev = tuple(1 if name == v else 0 for name in self.chart.variables)
        vec = [0] * om.rank(0)
        vec[om.gen_index[0][(0, ev, ())]] = 1
        return vec

    def delta(self, r, v):
        """dlog T_v at level r as a degree-1 vector (after elimination)."""
        om = self.omegas[r]
        expand = om.dlog_expand(v)
        if expand is None:
            raise ValueError("no dlog for variable %r" % v)
        vec = [0] * om.rank(1)
        for sid, c in expand.items():
            vec[om.gen_index[1][(0, om.zero_exp, (sid,))]] = c % om.modulus
        return vec


def build_drw_tower(chart, r_max, bound, laurent_bound=None, base_mode="blocks", top=2):
    return DRWTower(chart, r_max, bound, laurent_bound, base_mode, top)


def build_witt_omega(chart, n, bound, laurent_bound=None, base_mode="blocks", top=2):
    """Presentation of omega^* over W_n(R) with Frobenius (via .lower())."""
    return WittOmega(chart, n, bound, laurent_bound, base_mode, top)


def _span_size_exponent(h):
    """log_p of the order of the row span of a Howell form."""
    total = 0
    for i in range(h.rows):
        row = h.data.get(i, {})
        if row:
            total += h.N - _val(row[min(row)], h.p, h.N)
    return total


def _cols_in_span(h, mat):
    """Index of the first column of mat outside the row span of h, or None."""
    for j in range(mat.cols):
        if span_membership(h, mat.col(j)) is None:
            return j
    return None


def _colspan_howell(mats_and_cols, nrows, modulus):
    """Howell form of the combined column span; accepts matrices and raw
    column lists.  Matrices are stacked sparsely (their columns become
    rows) without materializing dense vectors."""
    data = {}
    offset = 0
    for item in mats_and_cols:
        if isinstance(item, ModMatrix):
            for i, row in item.data.items():
                for j, v in row.items():
                    data[(offset + j, i)] = v
            offset += item.cols
        else:
            for vec in item:
                for i, v in enumerate(vec):
                    if v % modulus:
                        data[(offset, i)] = v % modulus
                offset += 1
    if not offset:
        return howell_form(ModMatrix.zero(0, nrows, modulus))
    return howell_form(ModMatrix(offset, nrows, modulus, data))


# ---------------------------------------------------------------------------
# axiom and comparison checks
# ---------------------------------------------------------------------------


def dieudonne_axiom_check(omega):
    """dF = pFd and Fd[x] = [x]^(p-1)d[x] on the level-n presentation.

    Both identities are matrix statements modulo the relation spans of
    the target level.  Returns (ok, failures).
    """
    low = omega.lower()
    p = omega.p
    failures = []
    fmats = [omega.F_matrix(i, low) for i in range(omega.top + 1)]
    for i in range(omega.top):
        lhs = low.d_matrix(i).mat_mul(fmats[i])
        rhs = fmats[i + 1].mat_mul(_change_modulus(omega.d_matrix(i), low.modulus))
        diff = lhs.sub(rhs.scale(p))
        bad = _cols_in_span(low.relation_span(i + 1), diff)
        if bad is not None:
            failures.append(("dF=pFd", i, omega.gens[i][bad]))
    for v in omega.chart.variables:
        ev = tuple(1 if name == v else 0 for name in omega.chart.variables)
        col = [0] * omega.rank(0)
        col[omega.gen_index[0][(0, ev, ())]] = 1
        dvec = omega.d_matrix(0).vec_mul(col)
        lhs = fmats[1].vec_mul([x % low.modulus for x in dvec])
        rhs = [0] * low.rank(1)
        tgt = (0, tuple((p - 1) * e for e in ev), (low.sym_index[("dV", 0, ev)],))
        idx = low.gen_index[1].get(tgt)
        if idx is not None:
            rhs[idx] = 1
        diff = [(x - y) % low.modulus for x, y in zip(lhs, rhs)]
        if span_membership(low.relation_span(1), diff) is None:
            failures.append(("Fd[x]", v))
    return not failures, failures


def nu_comparison(chart, bound, laurent_bound=None, base_mode="blocks"):
    """The cdga comparison map in level one: monomials to Teichmuller
    classes, dlog to dlog, dx to dV^0.

    Verifies that it is a degree-wise bijection onto the level-1 quotient
    and a chain map, and multiplicative on a generator sample.  Returns
    (ok, detail).
    """
    p = chart.p
    om = OmegaComplex(chart, p, bound, laurent_bound, base_mode)
    wtop = max(om.top, 2)
    w = WittOmega(chart, 1, bound, laurent_bound, base_mode, top=wtop)
    lvl = TowerLevel(w)
    mats = []
    for i in range(om.top + 1):
        data = {}
        for col, (ex, word) in enumerate(om.basis[i]):
            a = _to_int_exponent(ex)
            sids = []
            for k in word:
                s = om.symbols[k]
                if s[0] == "dlog":
                    sids.append(w.sym_index[("dlog", s[1])])
                else:
                    evx = tuple(
                        1 if name == s[1] else 0 for name in chart.variables
                    )
                    sids.append(w.sym_index[("dV", 0, evx)])
            nword, sign = _perm_sign_sort(tuple(sids))
            if nword is None:
                return False, ("collision", i, col)
            idx = w.gen_index[i].get((0, a, nword))
            if idx is None:
                return False, ("window", i, col)
            data[(idx, col)] = sign % p
        mats.append(ModMatrix(w.rank(i), om.rank(i), p, data))
    for i in range(om.top + 1):
        relrank = lvl.relspan[i].rows
        joint = _colspan_howell([mats[i], lvl.rel[i]], w.rank(i), p)
        if joint.rows != om.rank(i) + relrank:
            return False, ("not injective", i, joint.rows, om.rank(i), relrank)
        full = _colspan_howell(
            [ModMatrix.identity(w.rank(i), p), lvl.rel[i]], w.rank(i), p
        )
        if joint.rows != full.rows:
            return False, ("not surjective", i, joint.rows, full.rows)
    for i in range(om.top):
        diff = w.d_matrix(i).mat_mul(mats[i]).sub(
            mats[i + 1].mat_mul(om.d_matrix(i))
        )
        bad = _cols_in_span(lvl.relspan[i + 1], diff)
        if bad is not None:
            return False, ("chain map", i, om.basis[i][bad])
    for i in range(om.top + 1, wtop + 1):
        if lvl.size_exponent(i) != 0:
            return False, ("nonzero above top", i)
    # multiplicativity on monomial generators x symbol generators
    one = (Fraction(0),) * chart.nvars
    for ex in om.monomials[: 12]:
        for k in range(len(om.symbols)):
            fx = {(ex, ()): 1}
            fs = {(one, (k,)): 1}
            prod = om.wedge(fx, fs)
            lhs = mats[1].vec_mul(om.to_vector(1, prod))
            ga = (0, _to_int_exponent(ex), ())
            gs_img = mats[1].vec_mul(om.to_vector(1, fs))
            # the image of the symbol is a single generator; multiply
            rhs = [0] * w.rank(1)
            for idx, c in enumerate(gs_img):
                if c:
                    res = w.gen_mul(ga, w.gens[1][idx])
                    if res is not None:
                        g, sign = res
                        j = w.gen_index[1].get(g)
                        if j is not None:
                            rhs[j] = (rhs[j] + sign * c) % p
            diff = [(x - y) % p for x, y in zip(lhs, rhs)]
            if span_membership(lvl.relspan[1], diff) is None:
                return False, ("not multiplicative", ex, om.symbols[k])
    return True, None


def fil_exactness_check(tower, r):
    """Rank-exactness of 0 -> Fil^r -> W_(r+1) -> W_r -> 0 per degree.

    Fil^r is the span of V^r and dV^r applied to level 1; the quotient
    map is one restriction step.  Exactness is certified by size
    bookkeeping over the Howell spans.  Returns (ok, failures).
    """
    if r + 1 > tower.r_max:
        raise CapacityExceeded("tower does not reach level %d" % (r + 1))
    p = tower.chart.p
    A, B = tower.omegas[r + 1], tower.omegas[r]
    lvlA, lvlB = tower.levels[r + 1], tower.levels[r]
    failures = []
    # V^r from level 1 to level r+1, per degree
    vpow = []
    for i in range(tower.top + 1):
        m = tower.Vmats[1][i]
        for s in range(2, r + 1):
            m = tower.Vmats[s][i].mat_mul(_change_modulus(m, p ** (s + 1)))
        vpow.append(m)
    for i in range(tower.top + 1):
        fil = [vpow[i]]
        if i > 0:
            fil.append(A.d_matrix(i - 1).mat_mul(vpow[i - 1]))
        R = tower.Rmats[r + 1][i]
        # (a) the filtration and the level-(r+1) relations die under R
        for m in fil + [lvlA.rel[i]]:
            img = R.mat_mul(_change_modulus(m, B.modulus))
            if _cols_in_span(lvlB.relspan[i], img) is not None:
                failures.append(("R image nonzero", i))
                break
        # (b) R surjective onto the level-r quotient
        im_h = _colspan_howell([R, lvlB.rel[i]], B.rank(i), B.modulus)
        im_exp = _span_size_exponent(im_h) - _span_size_exponent(lvlB.relspan[i])
        if im_exp != lvlB.size_exponent(i):
            failures.append(("not surjective", i, im_exp, lvlB.size_exponent(i)))
        # (c) size of ker R equals size of Fil + relations
        ker_exp = (r + 1) * A.rank(i) - im_exp
        fil_h = _colspan_howell(fil + [lvlA.rel[i]], A.rank(i), A.modulus)
        if _span_size_exponent(fil_h) != ker_exp:
            failures.append(
                ("kernel size", i, _span_size_exponent(fil_h), ker_exp)
            )
    return not failures, failures


def fv_procomplex_check(tower):
    """The F-V-procomplex axioms on a built tower, as matrix identities
    modulo the relation spans: restriction compatibilities, FV = p,
    FdV = d, Vd = pdV, dF = pFd, Fd[x] = [x]^(p-1)d[x], the projection
    formula x V(y) = V(F(x) y), and the log-data compatibilities.

    Returns (ok, failures) with symbolic witnesses.
    """
    p = tower.chart.p
    top = tower.top
    failures = []

    def in_span(r, i, mat, tag):
        bad = _cols_in_span(tower.levels[r].relspan[i], mat)
        if bad is not None:
            failures.append((tag, r, i, bad))

    for r in range(1, tower.r_max):
        hi, lo = tower.omegas[r + 1], tower.omegas[r]
        F = tower.Fmats[r + 1]
        V = tower.Vmats[r]
        R = tower.Rmats[r + 1]
        for i in range(top + 1):
            fv = F[i].mat_mul(_change_modulus(V[i], lo.modulus))
            in_span(r, i, fv.sub(ModMatrix.identity(lo.rank(i), lo.modulus).scale(p)), "FV=p")
        for i in range(top):
            dhi = hi.d_matrix(i)
            dlo = lo.d_matrix(i)
            in_span(r, i + 1,
                    dlo.mat_mul(F[i]).sub(F[i + 1].mat_mul(_change_modulus(dhi, lo.modulus)).scale(p)),
                    "dF=pFd")
            in_span(r, i + 1,
                    F[i + 1].mat_mul(_change_modulus(dhi, lo.modulus)).mat_mul(_change_modulus(V[i], lo.modulus)).sub(dlo),
                    "FdV=d")
            in_span(r + 1, i + 1,
                    V[i + 1].mat_mul(_change_modulus(dlo, hi.modulus)).sub(dhi.mat_mul(V[i]).scale(p)),
                    "Vd=pdV")
            in_span(r, i + 1,
                    R[i + 1].mat_mul(_change_modulus(dhi, lo.modulus)).sub(dlo.mat_mul(R[i])),
                    "Rd=dR")
        if r + 2 <= tower.r_max:
            # RF = FR: both sides map level r+2 to level r
            F2 = tower.Fmats[r + 2]
            R2 = tower.Rmats[r + 2]
            hi2 = tower.omegas[r + 2]
            for i in range(top + 1):
                rf = R[i].mat_mul(_change_modulus(F2[i], lo.modulus))
                fr = F[i].mat_mul(_change_modulus(R2[i], lo.modulus))
                diff = rf.sub(fr)
                # a generator whose one-step image leaves the level-(r+1)
                # window carries no information about the composite at
                # this truncation; mask those columns out
                art = set()
                for col, g in enumerate(hi2.gens[i]):
                    if (
                        hi2.map_gen_F_sym(g, hi) is not None
                        and hi2.map_gen_F(g, hi) is None
                    ):
                        art.add(col)
                        continue
                    l, a, w = g
                    syms = [hi2.symbols[s] for s in w]
                    if l < hi.n and all(
                        s[0] == "dlog" or s[1] < hi.n for s in syms
                    ):
                        sids = tuple(hi.sym_index[s] for s in syms)
                        word, _sign = _perm_sign_sort(sids)
                        if word is not None and hi.gen_index[i].get(
                            (l, a, word)
                        ) is None:
                            art.add(col)
                if art:
                    flat = {}
                    for ri, row in diff.data.items():
                        for c, v in row.items():
                            if c not in art:
                                flat[(ri, c)] = v
                    diff = ModMatrix(diff.rows, diff.cols, diff.modulus, flat)
                in_span(r, i, diff, "RF=FR")
        if r >= 2:
            # RV = VR: both sides map level r to level r
            Rlow = tower.Rmats[r]
            Vlow = tower.Vmats[r - 1]
            for i in range(top + 1):
                rv = tower.Rmats[r + 1][i].mat_mul(_change_modulus(tower.Vmats[r][i], lo.modulus))
                vr = Vlow[i].mat_mul(_change_modulus(Rlow[i], lo.modulus))
                in_span(r, i, rv.sub(vr), "RV=VR")
        # Fd[x] = [x]^(p-1) d[x]
        for v in tower.chart.variables:
            ev = tuple(1 if name == v else 0 for name in tower.chart.variables)
            col = [0] * hi.rank(0)
            col[hi.gen_index[0][(0, ev, ())]] = 1
            dvec = hi.d_matrix(0).vec_mul(col)
            lhs = F[1].vec_mul([x % lo.modulus for x in dvec])
            rhs = [0] * lo.rank(1)
            tgt = (0, tuple((p - 1) * e for e in ev), (lo.sym_index[("dV", 0, ev)],))
            idx = lo.gen_index[1].get(tgt)
            if idx is not None:
                rhs[idx] = 1
            diff = [(x - y) % lo.modulus for x, y in zip(lhs, rhs)]
            if span_membership(tower.levels[r].relspan[1], diff) is None:
                failures.append(("Fd[x]", r, v))
        # projection formula x V(y) = V(F(x) y): x at level r+1, y at r.
        # Both sides are evaluated symbolically and projected into the
        # window once at the end, so no intermediate truncation occurs.
        for ix in range(top + 1):
            for iy in range(0, top + 1 - ix):
                for gx in hi.gens[ix][:: max(1, len(hi.gens[ix]) // 8)]:
                    xsyms = [hi.symbols[s] for s in gx[2]]
                    for gy in lo.gens[iy][:: max(1, len(lo.gens[iy]) // 8)]:
                        ysyms = [lo.symbols[s] for s in gy[2]]
                        vsyms = [
                            s if s[0] == "dlog" else ("dV", s[1] + 1, s[2])
                            for s in ysyms
                        ]
                        lvec = {}
                        fn = hi._mul_raw((gx[0], gx[1]), (gy[0] + 1, gy[1]))
                        if fn is not None:
                            hi._term_sym(
                                lvec, ix + iy, fn[0], fn[1], xsyms + vsyms, 1
                            )
                        fx = hi.map_gen_F_sym(gx, lo)
                        if fx is not None:
                            lf, fa, fsyms = fx
                            fn = lo._mul_raw((lf, fa), (gy[0], gy[1]))
                            if fn is not None and fn[0] + 1 < hi.n:
                                wsyms = [
                                    s if s[0] == "dlog" else ("dV", s[1] + 1, s[2])
                                    for s in fsyms + ysyms
                                ]
                                hi._term_sym(
                                    lvec, ix + iy, fn[0] + 1, fn[1], wsyms, -1
                                )
                        if lvec:
                            diff = [0] * hi.rank(ix + iy)
                            for j, c in lvec.items():
                                diff[j] = c
                            if span_membership(
                                tower.levels[r + 1].relspan[ix + iy], diff
                            ) is None:
                                failures.append(("projection", r, ix, iy, gx, gy))
    # log data: d(alpha) = alpha delta, F alpha = alpha^p, F delta = delta
    for r in range(1, tower.r_max + 1):
        om = tower.omegas[r]
        for v in om.log_variables():
            if om.dlog_expand(v) is None:
                continue
            a = tower.alpha(r, v)
            dvec = om.d_matrix(0).vec_mul(a)
            ev = tuple(1 if name == v else 0 for name in tower.chart.variables)
            rhs = [0] * om.rank(1)
            for sid, c in om.dlog_expand(v).items():
                g = (0, ev, (sid,))
                idx = om.gen_index[1].get(g)
                if idx is not None:
                    rhs[idx] = c % om.modulus
            diff = [(x - y) % om.modulus for x, y in zip(dvec, rhs)]
            if span_membership(tower.levels[r].relspan[1], diff) is None:
                failures.append(("d alpha = alpha delta", r, v))
            if r >= 2:
                lo = tower.omegas[r - 1]
                fa = tower.Fmats[r][0].vec_mul([x % lo.modulus for x in a])
                ap = [0] * lo.rank(0)
                idx = lo.gen_index[0].get((0, tuple(p * e for e in ev), ()))
                if idx is not None:
                    ap[idx] = 1
                diff = [(x - y) % lo.modulus for x, y in zip(fa, ap)]
                if span_membership(tower.levels[r - 1].relspan[0], diff) is None:
                    failures.append(("F alpha = alpha^p", r, v))
                fd = tower.Fmats[r][1].vec_mul(
                    [x % lo.modulus for x in tower.delta(r, v)]
                )
                diff = [
                    (x - y) % lo.modulus
                    for x, y in zip(fd, tower.delta(r - 1, v))
                ]
                if span_membership(tower.levels[r - 1].relspan[1], diff) is None:
                    failures.append(("F delta = delta", r, v))
    return not failures, failures


def _vgen(src, dst, gen):
    """V of a single generator from level r to r+1, or None."""
    l, a, w = gen
    syms = []
    for sid in w:
        s = src.symbols[sid]
        syms.append(s if s[0] == "dlog" else ("dV", s[1] + 1, s[2]))
    sids = [dst.sym_index[s] for s in syms if s in dst.sym_index]
    if len(sids) != len(syms):
        return None
    word, sign = _perm_sign_sort(tuple(sids))
    if word is None or sign != 1:
        return None
    return (l + 1, a, word)
