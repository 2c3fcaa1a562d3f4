"""Generic machinery for cochain complexes with Frobenius over Z/p^N.

The decalage operator eta_p is implemented by the "level-lift" trick: the
defining formula

    (eta_p C)^i = { x in p^i C^i : d x in p^(i+1) C^(i+1) }

presumes a p-torsion-free complex; at truncated precision this is
emulated by carrying a surplus of p-adic digits and treating the bottom
`guard = top degree + 2` digits of every divisor read off the output as
unreliable.  On cohomology eta_p kills exactly the p-torsion: a Z/p^k
class becomes Z/p^(k-1) and free classes survive (with the ambient cap).

Also here: the map phi_F = p^n F in degree n together with the
saturation (bijectivity) check, Bockstein differentials on H^*(C/p^r),
the comparison gamma: eta_p(C)/p^r -> (H^*(C/p^r), beta), and the
Cartier criterion F: (C/p, d) -> (H^*(C/p), beta) for complexes carrying
a Frobenius endomorphism.
"""

from .linalg import (
    ModMatrix,
    NO_SOLUTION,
    howell_form,
    kernel,
    solve,
    span_membership,
    subquotient,
)


class PrecisionExhausted(ValueError):
    """Not enough p-adic digits to run the requested operation."""


class LiftFailure(ValueError):
    """A cocycle lift failed: the level data is inconsistent."""


class PsiNotInvertible(ValueError):
    """A divided-Frobenius style map is not bijective where it must be."""


def _change_modulus(m, modulus):
    data = {(i, j): v for i, row in m.data.items() for j, v in row.items()}
    return ModMatrix(m.rows, m.cols, modulus, data)


class ComplexLevel:
    """A free graded cochain complex over Z/p^N with optional Frobenius.

    `ranks[i]` is the rank in degree i; `differentials[i]` maps degree i
    to degree i+1; `frobenius[i]`, when present, is a degree-preserving
    endomorphism satisfying d F = p F d.
    """

    def __init__(self, modulus, ranks, differentials, frobenius=None, check=True):
        self.modulus = modulus
        self.ranks = list(ranks)
        self.top = len(self.ranks) - 1
        self.differentials = list(differentials)
        self.frobenius = list(frobenius) if frobenius is not None else None
        probe = ModMatrix.zero(0, 0, modulus)
        self.p, self.N = probe.p, probe.N
        if check:
            self.validate()

    def d(self, i):
        if 0 <= i < len(self.differentials):
            return self.differentials[i]
        tgt = self.ranks[i + 1] if 0 <= i + 1 <= self.top else 0
        src = self.ranks[i] if 0 <= i <= self.top else 0
        return ModMatrix.zero(tgt, src, self.modulus)

    def F(self, i):
        return self.frobenius[i]

    def validate(self):
        if len(self.differentials) != self.top:
            raise ValueError("need one differential per adjacent degree pair")
        for i in range(self.top):
            dmat = self.d(i)
            if dmat.rows != self.ranks[i + 1] or dmat.cols != self.ranks[i]:
                raise ValueError("differential %d has wrong shape" % i)
            if i + 1 < self.top:
                if not self.d(i + 1).mat_mul(dmat).is_zero():
                    raise ValueError("d.d != 0 between degrees %d and %d" % (i, i + 2))
        if self.frobenius is not None:
            if len(self.frobenius) != self.top + 1:
                raise ValueError("need one Frobenius matrix per degree")
            for i in range(self.top):
                lhs = self.d(i).mat_mul(self.F(i))
                rhs = self.F(i + 1).mat_mul(self.d(i)).scale(self.p)
                if lhs != rhs:
                    raise ValueError("dF != pFd in degree %d" % i)

    def reduce_mod(self, modulus):
        """The same complex with entries reduced to a smaller modulus."""
        diffs = [_change_modulus(m, modulus) for m in self.differentials]
        frob = None
        if self.frobenius is not None:
            frob = [_change_modulus(m, modulus) for m in self.frobenius]
        return ComplexLevel(modulus, self.ranks, diffs, frob, check=False)

    def cohomology(self, i):
        """(cycle matrix, boundary matrix, divisor exponents) of H^i."""
        if i < self.top:
            cyc = kernel(self.d(i))
        else:
            cyc = ModMatrix.identity(self.ranks[i], self.modulus)
        if i > 0:
            bnd = self.d(i - 1)
        else:
            bnd = ModMatrix.zero(self.ranks[i], 0, self.modulus)
        _, divs = subquotient(cyc, bnd)
        return cyc, bnd, divs


# ---------------------------------------------------------------------------
# eta_p
# ---------------------------------------------------------------------------


class EtaComplex:
    """eta_p of a free complex, as spans inside the ambient complex.

    `gens[i]` holds generating columns of (eta_p C)^i inside C^i; the
    differential is the ambient one restricted.  `valid_exponent` is the
    number of trustworthy p-adic digits of any divisor read off from this
    object (the level-lift guard).
    """

    def __init__(self, ambient, gens, valid_exponent):
        self.ambient = ambient
        self.gens = gens
        self.valid_exponent = valid_exponent

    def cohomology_divisors(self, i):
        """H^i of the subcomplex with ambient (full-precision) arithmetic.

        Divisors carry truncation artifacts above the guard window; use
        `presented()` for artifact-free reads at the target modulus.
        """
        amb = self.ambient
        G = self.gens[i]
        if i < amb.top:
            # cycles of the subcomplex: combinations of generators killed by d
            combos = kernel(amb.d(i).mat_mul(G))
            cyc = G.mat_mul(combos)
        else:
            cyc = G
        if i > 0:
            bnd = amb.d(i - 1).mat_mul(self.gens[i - 1])
        else:
            bnd = ModMatrix.zero(amb.ranks[i], 0, amb.modulus)
        _, divs = subquotient(cyc, bnd)
        return divs

    def presented(self, target_exponent=None):
        """The decalage as a free complex at the reduced target modulus.

        Generators are the Howell generators of each span; the
        differential is expressed in generator coordinates by linear
        solve at full precision and then cut to p^target.  Coordinate
        ambiguity (the kernel of the generator matrix) has valuation
        above the guard window, so the cut matrix is well defined.
        """
        amb = self.ambient
        r = self.valid_exponent if target_exponent is None else target_exponent
        if r > self.valid_exponent:
            raise PrecisionExhausted(
                "requested %d digits, only %d are valid" % (r, self.valid_exponent)
            )
        pr = amb.p ** r
        ranks = [G.cols for G in self.gens]
        diffs = []
        for i in range(amb.top):
            img = amb.d(i).mat_mul(self.gens[i])
            cols = []
            for k in range(img.cols):
                sol = solve(self.gens[i + 1], img.col(k))
                if sol is NO_SOLUTION:
                    raise LiftFailure("eta_p differential does not restrict")
                cols.append(sol)
            diffs.append(
                _change_modulus(
                    ModMatrix.from_cols(cols, ranks[i + 1], amb.modulus), pr
                )
            )
        return ComplexLevel(pr, ranks, diffs)


def eta_p(c, guard=None):
    """The decalage subcomplex, with precision bookkeeping.

    Degree i is generated by p^i times lifts of ker(d mod p) together
    with p^(i+1) C^i.  Requires more than top+1 p-adic digits.
    """
    if guard is None:
        guard = c.top + 2
    if c.N <= c.top + 1:
        raise PrecisionExhausted(
            "eta_p needs more than top+1 = %d digits, modulus has %d"
            % (c.top + 1, c.N)
        )
    p = c.p
    gens = []
    for i in range(c.top + 1):
        cols = []
        if i < c.top:
            kp = kernel(_change_modulus(c.d(i), p))
            for j in range(kp.cols):
                cols.append([(p ** i) * x for x in kp.col(j)])
        else:
            for j in range(c.ranks[i]):
                e = [0] * c.ranks[i]
                e[j] = p ** i
                cols.append(e)
        for j in range(c.ranks[i]):
            e = [0] * c.ranks[i]
            e[j] = p ** (i + 1)
            cols.append(e)
        gmat = ModMatrix.from_cols(cols, c.ranks[i], c.modulus)
        gens.append(howell_form(gmat.transpose()).transpose())
    return EtaComplex(c, gens, max(1, c.N - guard))


def phi_F(c):
    """phi_F = p^n F in degree n, as matrices; checked to be a chain map
    landing inside eta_p(c)."""
    if c.frobenius is None:
        raise ValueError("phi_F needs a Frobenius structure")
    eta = eta_p(c)
    mats = [c.F(i).scale(c.p ** i) for i in range(c.top + 1)]
    for i in range(c.top):
        if c.d(i).mat_mul(mats[i]) != mats[i + 1].mat_mul(c.d(i)):
            raise ValueError("phi_F is not a chain map in degree %d" % i)
    for i in range(c.top + 1):
        span = howell_form(eta.gens[i].transpose())
        for j in range(c.ranks[i]):
            if span_membership(span, mats[i].col(j)) is None:
                raise ValueError("phi_F image leaves eta_p in degree %d" % i)
    return mats, eta


def saturation_check(c):
    """Is phi_F: C -> eta_p(C) bijective per degree, within the guard
    window?  Bijectivity is tested at the reduced modulus p^valid."""
    mats, eta = phi_F(c)
    cut = c.p ** eta.valid_exponent
    for i in range(c.top + 1):
        G = eta.gens[i]
        # surjectivity mod p^valid: every eta generator is hit
        span_cols = [mats[i].col(j) for j in range(c.ranks[i])]
        span_cols += [[cut * x for x in G.col(j)] for j in range(G.cols)]
        span = howell_form(
            ModMatrix.from_cols(span_cols, c.ranks[i], c.modulus).transpose()
        )
        for j in range(G.cols):
            if span_membership(span, G.col(j)) is None:
                return False
        # injectivity mod p^valid: phi_F x in p^valid eta => x in p^valid C
        killer = ModMatrix.from_cols(
            [[cut * x for x in G.col(j)] for j in range(G.cols)],
            c.ranks[i],
            c.modulus,
        )
        ker = kernel(mats[i].hstack(killer))
        for j in range(ker.cols):
            if any(v % cut for v in ker.col(j)[: c.ranks[i]]):
                return False
    return True


# ---------------------------------------------------------------------------
# Bockstein complexes
# ---------------------------------------------------------------------------


class BocksteinComplex:
    """(H^*(C tensor Z/p^r), beta) extracted from a complex mod p^(2r).

    Per degree i:
      * `reps[i]`: representative columns of a generating basis of
        H^i(C/p^r) modulo boundaries;
      * `relations[i]`: the presentation of H^i on these generators
        (columns x with sum x_j rep_j a boundary);
      * `beta[i]`: the Bockstein matrix in these bases, obtained by
        lifting mod p^(2r), applying d, and dividing by p^r.
    """

    def __init__(self, c, r):
        if c.N < 2 * r:
            raise PrecisionExhausted(
                "Bockstein at level %d needs modulus p^%d" % (r, 2 * r)
            )
        self.r = r
        self.p = c.p
        pr = c.p ** r
        self.pr = pr
        self.top = c.top
        self.level = c.reduce_mod(pr)
        self.amb2 = c.reduce_mod(c.p ** (2 * r))
        self.reps = []
        self.relations = []
        self.bnd_span = []
        for i in range(c.top + 1):
            cyc, bnd, _ = self.level.cohomology(i)
            reps = _quotient_basis(cyc, bnd, pr)
            self.reps.append(reps)
            self.bnd_span.append(howell_form(bnd.transpose()))
            repmat = ModMatrix.from_cols(reps, self.level.ranks[i], pr)
            ker = kernel(repmat.hstack(bnd))
            relcols = [ker.col(j)[: len(reps)] for j in range(ker.cols)]
            rel = ModMatrix.from_cols(relcols, len(reps), pr)
            self.relations.append(howell_form(rel.transpose()).transpose())
        self.beta = []
        for i in range(c.top + 1):
            cols = []
            for z in self.reps[i]:
                cols.append(self._express(i + 1, self._bockstein_of(i, z)))
            tgt = len(self.reps[i + 1]) if i + 1 <= c.top else 0
            self.beta.append(ModMatrix.from_cols(cols, tgt, pr))
        # beta^2 must vanish modulo the class relations
        for i in range(c.top - 1):
            prod = self.beta[i + 1].mat_mul(self.beta[i])
            relspan = howell_form(self.relations[i + 2].transpose())
            for j in range(prod.cols):
                col = prod.col(j)
                if any(col) and span_membership(relspan, col) is None:
                    raise LiftFailure("beta^2 is not zero on classes, degree %d" % i)

    def _bockstein_of(self, i, z):
        """beta[z]: lift mod p^2r, d of the lift is p^r w; return w."""
        img = self.amb2.d(i).vec_mul([int(x) for x in z])
        w = []
        for v in img:
            if v % self.pr:
                raise LiftFailure("representative is not a cocycle mod p^%d" % self.r)
            w.append((v // self.pr) % self.pr)
        return w

    def _express(self, i, w):
        """Write the cocycle w as a combination of the degree-i basis
        classes (coefficients modulo the relations are not unique; any
        valid expression is returned)."""
        if i > self.top or not self.reps[i]:
            if any(w) and span_membership(self.bnd_span[i], w) is None:
                raise LiftFailure("cocycle not recognized in degree %d" % i)
            return [] if i > self.top else [0] * len(self.reps[i])
        cols = [list(z) for z in self.reps[i]]
        nb = self.bnd_span[i]
        cols += [[nb.entry(j, k) for k in range(nb.cols)] for j in range(nb.rows)]
        sol = solve(ModMatrix.from_cols(cols, len(w), self.pr), list(w))
        if sol is NO_SOLUTION:
            raise LiftFailure("cocycle outside the cohomology span, degree %d" % i)
        return sol[: len(self.reps[i])]

    def cohomology_divisors(self, i):
        """Elementary divisors of H^i of the complex (H^*, beta)."""
        n = len(self.reps[i])
        beta_i = self.beta[i] if i <= self.top else ModMatrix.zero(0, n, self.pr)
        rel_i = self.relations[i]
        if i + 1 <= self.top:
            rel_next = self.relations[i + 1]
        else:
            rel_next = ModMatrix.zero(beta_i.rows, 0, self.pr)
        # cycles: x with beta x = 0 modulo the target's class relations
        ker = kernel(beta_i.hstack(rel_next))
        cyc = ModMatrix.from_cols(
            [ker.col(j)[:n] for j in range(ker.cols)], n, self.pr
        )
        cyc = cyc.hstack(rel_i)
        bnds = []
        if i > 0:
            prev = self.beta[i - 1]
            bnds += [prev.col(j) for j in range(prev.cols)]
        bnds += [rel_i.col(j) for j in range(rel_i.cols)]
        bnd = ModMatrix.from_cols(bnds, n, self.pr)
        _, divs = subquotient(cyc, bnd)
        return divs


def _quotient_basis(cyc, bnd, modulus):
    """Representative columns generating cycles modulo boundaries: rows
    of the Howell form of the cycle span that enlarge the boundary span."""
    hb = howell_form(bnd.transpose())
    hc = howell_form(cyc.transpose())
    ncols = hc.cols
    span_rows = [[hb.entry(i, j) for j in range(ncols)] for i in range(hb.rows)]
    reps = []
    for i in range(hc.rows):
        row = [hc.entry(i, j) for j in range(ncols)]
        base = howell_form(ModMatrix.from_rows(span_rows or [[0] * ncols], modulus))
        test = howell_form(ModMatrix.from_rows(span_rows + [row], modulus))
        if test != base:
            reps.append(row)
            span_rows.append(row)
    return reps


# ---------------------------------------------------------------------------
# gamma: eta_p(C)/p^r -> (H^*(C/p^r), beta)
# ---------------------------------------------------------------------------


def gamma_check(c, r=1):
    """Divisor comparison for gamma.  Both sides are computed
    independently; returns (ok, {degree: (lhs divisors, rhs divisors)})."""
    eta = eta_p(c)
    bc = BocksteinComplex(c, r)
    ok = True
    detail = {}
    for i in range(c.top + 1):
        lhs = _eta_mod_pr_cohomology(c, eta, i, r)
        rhs = bc.cohomology_divisors(i)
        detail[i] = (lhs, rhs)
        ok = ok and lhs == rhs
    return ok, detail


def _eta_mod_pr_cohomology(c, eta, i, r):
    """H^i of eta_p(C)/p^r as a presented complex over Z/p^r."""
    pr = c.p ** r
    G = eta.gens

    def dmat_on_gens(j):
        img = c.d(j).mat_mul(G[j])
        cols = []
        for k in range(img.cols):
            sol = solve(G[j + 1], img.col(k))
            if sol is NO_SOLUTION:
                raise LiftFailure("eta_p differential does not restrict")
            cols.append(sol)
        return ModMatrix.from_cols(cols, G[j + 1].cols, c.modulus)

    def relations(j):
        """x with G x in p^r span(G): kernel of the free cover of the
        quotient span(G)/p^r span(G)."""
        scaled = ModMatrix.from_cols(
            [[pr * v for v in G[j].col(k)] for k in range(G[j].cols)],
            c.ranks[j],
            c.modulus,
        )
        ker = kernel(G[j].hstack(scaled))
        cols = [ker.col(k)[: G[j].cols] for k in range(ker.cols)]
        return _change_modulus(
            ModMatrix.from_cols(cols, G[j].cols, c.modulus), pr
        )

    rel_i = relations(i)
    if i < c.top:
        d_i = _change_modulus(dmat_on_gens(i), pr)
        ker = kernel(d_i.hstack(relations(i + 1)))
        cyc = ModMatrix.from_cols(
            [ker.col(k)[: d_i.cols] for k in range(ker.cols)], d_i.cols, pr
        )
    else:
        cyc = ModMatrix.identity(G[i].cols, pr)
    cyc = cyc.hstack(rel_i)
    bnds = []
    if i > 0:
        dprev = _change_modulus(dmat_on_gens(i - 1), pr)
        bnds += [dprev.col(k) for k in range(dprev.cols)]
    bnds += [rel_i.col(k) for k in range(rel_i.cols)]
    bnd = ModMatrix.from_cols(bnds, G[i].cols, pr)
    _, divs = subquotient(cyc, bnd)
    return divs


# ---------------------------------------------------------------------------
# Cartier criterion
# ---------------------------------------------------------------------------


def cartier_criterion_check(c):
    """F: (C/p, d) -> (H^*(C/p), beta) a degree-wise bijection?

    Needs a Frobenius endomorphism and at least two p-adic digits; this
    is the saturation criterion in its cohomological form.
    """
    if c.frobenius is None:
        raise ValueError("Cartier criterion needs a Frobenius structure")
    bc = BocksteinComplex(c, 1)
    p = c.p
    cp = c.reduce_mod(p)
    for i in range(c.top + 1):
        n = c.ranks[i]
        if len(bc.reps[i]) != n:
            return False
        cols = []
        try:
            for j in range(n):
                e = [0] * n
                e[j] = 1
                cols.append(bc._express(i, cp.F(i).vec_mul(e)))
        except LiftFailure:
            return False
        mat = ModMatrix.from_cols(cols, n, p)
        # bijective iff full rank over F_p
        if howell_form(mat.transpose()).rows != n:
            return False
        # chain map on classes: beta . Fbar = Fbar . d
        if i < c.top:
            lhs = bc.beta[i].mat_mul(mat)
            rhs_cols = []
            try:
                for j in range(n):
                    e = [0] * n
                    e[j] = 1
                    dx = cp.d(i).vec_mul(e)
                    rhs_cols.append(bc._express(i + 1, cp.F(i + 1).vec_mul(dx)))
            except LiftFailure:
                return False
            rhs = ModMatrix.from_cols(rhs_cols, len(bc.reps[i + 1]), p)
            if lhs != rhs:
                return False
    return True
