"""The cone of binary forms over F in its exact field model.

V = Sym_2(R) x Herm_2(C) is seven dimensional.  A vector x in O^2 gives
the rank-one point q(x) = (x_v x_v^*)_v, and the inner product
<x, y> = sum_v c_v Tr(x_v y_v) (c real place = 1, complex = 2) pairs
points against forms.  The key computational fact: the pairing of two
integral rank-one points is the real embedding of an explicit element of
F itself,

    <q(x), q(z)> = s_r( sum_{i,j} P(z_i x_j, z_j x_i) ),
    P(u, w) = 3uw - Tr(u) w - Tr(w) u + (Tr(u)Tr(w) - Tr(uw)),

so all geometry (positivity, minimal vectors, facet equations) is exact
linear algebra over F with sign decisions under the real embedding.
No nonzero form has a rational 6x6 Gram matrix over this field, so the
field model is the exact structure available.

Forms are stored by their 6x6 F-valued Gram matrix on the Z-basis
(e1, t e1, t^2 e1, e2, t e2, t^2 e2) of O^2.
"""

from __future__ import annotations

from fractions import Fraction

from .field import EPS, ONE, ZERO, FieldElement
from .flinalg import det as fdet
from .flinalg import rank as frank
from .flinalg import solve as fsolve


# -- vectors in O^2 and 2x2 matrices over O --------------------------------------

def vec(a, b):
    return (_fe(a), _fe(b))


def _fe(x):
    return x if isinstance(x, FieldElement) else FieldElement(x)


E1 = vec(1, 0)
E2 = vec(0, 1)


def vec_add(x, y):
    return (x[0] + y[0], x[1] + y[1])


def vec_scale(c, x):
    return (c * x[0], c * x[1])


def vec_is_zero(x):
    return x[0].is_zero() and x[1].is_zero()


def vec_coords(x):
    """Integer 6-tuple of coordinates (requires integral entries)."""
    assert x[0].is_integral() and x[1].is_integral()
    return x[0].n + x[1].n


def vec_key(x):
    return (x[0].key(), x[1].key())


def det2(x, y):
    return x[0] * y[1] - x[1] * y[0]


class Mat2:
    """2x2 matrix over F, used for GL_2(O) elements and lift matrices."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d):
        self.a, self.b, self.c, self.d = _fe(a), _fe(b), _fe(c), _fe(d)

    @staticmethod
    def identity():
        return Mat2(1, 0, 0, 1)

    @staticmethod
    def from_columns(x, y):
        return Mat2(x[0], y[0], x[1], y[1])

    def columns(self):
        return (self.a, self.c), (self.b, self.d)

    def rows(self):
        return (self.a, self.b), (self.c, self.d)

    def det(self):
        return self.a * self.d - self.b * self.c

    def __mul__(self, other):
        return Mat2(self.a * other.a + self.b * other.c,
                    self.a * other.b + self.b * other.d,
                    self.c * other.a + self.d * other.c,
                    self.c * other.b + self.d * other.d)

    def apply(self, x):
        return (self.a * x[0] + self.b * x[1], self.c * x[0] + self.d * x[1])

    def inverse(self):
        dt = self.det()
        if dt.is_zero():
            raise ZeroDivisionError("singular matrix")
        inv = dt.inverse()
        return Mat2(self.d * inv, -self.b * inv, -self.c * inv, self.a * inv)

    def is_integral(self):
        return all(x.is_integral() for x in (self.a, self.b, self.c, self.d))

    def is_unimodular(self):
        return self.is_integral() and abs(self.det().norm()) == 1

    def __neg__(self):
        return Mat2(-self.a, -self.b, -self.c, -self.d)

    def __eq__(self, other):
        return (self.a, self.b, self.c, self.d) == (other.a, other.b, other.c, other.d)

    def __hash__(self):
        return hash((self.a, self.b, self.c, self.d))

    def key(self):
        return (self.a.key(), self.b.key(), self.c.key(), self.d.key())

    def __repr__(self):
        return f"Mat2([{self.a}, {self.b}; {self.c}, {self.d}])"


# -- the fundamental pairing ------------------------------------------------------

def beta_pair(u, w):
    """F-element whose real embedding is s_r(u)s_r(w) + s_c(u)s_cbar(w) + s_cbar(u)s_c(w)."""
    uw = u * w
    tu = FieldElement.from_rational(u.trace())
    tw = FieldElement.from_rational(w.trace())
    const = tu * tw - FieldElement.from_rational(uw.trace())
    return 3 * uw - tu * w - tw * u + const


def pairing_points(x, z):
    """<q(x), q(z)> as an element of F (value = its real embedding)."""
    tot = ZERO
    for i in range(2):
        for j in range(2):
            tot = tot + beta_pair(z[i] * x[j], z[j] * x[i])
    return tot


def height(x):
    """<q(x), identity point> = pairing with q(e1) + q(e2); positive for x != 0."""
    return pairing_points(x, E1) + pairing_points(x, E2)


_BASIS6 = [(i, k) for k in range(2) for i in range(3)]


def basis_vector6(idx):
    """The idx-th basis vector t^i e_k of O^2 as a vector pair."""
    i, k = _BASIS6[idx]
    coeff = [0, 0, 0]
    coeff[i] = 1
    e = FieldElement(*coeff)
    return (e, ZERO) if k == 0 else (ZERO, e)


def gram_of_point(z):
    """6x6 F-Gram of the quadratic form v -> <q(v), q(z)> on O^2."""
    vs = [basis_vector6(i) for i in range(6)]
    g = [[None] * 6 for _ in range(6)]
    for a in range(6):
        for b in range(a, 6):
            tot = ZERO
            for i in range(2):
                for j in range(2):
                    tot = tot + beta_pair(z[i] * vs[a][j], z[j] * vs[b][i])
            g[a][b] = tot
            g[b][a] = tot
    return g


def gram_eval(g, x):
    """x^T g x for an integral vector pair x (exact, in F)."""
    c = vec_coords(x)
    tot = ZERO
    for i in range(6):
        if c[i] == 0:
            continue
        tot = tot + c[i] * c[i] * g[i][i]
        for j in range(i + 1, 6):
            if c[j]:
                tot = tot + 2 * c[i] * c[j] * g[i][j]
    return tot


def gram_add(a, b):
    return [[a[i][j] + b[i][j] for j in range(6)] for i in range(6)]


def gram_scale(c, a):
    return [[c * a[i][j] for j in range(6)] for i in range(6)]


def gram_zero():
    return [[ZERO] * 6 for _ in range(6)]


def is_positive_definite(g):
    """Exact PD test via leading principal minors."""
    for k in range(1, 7):
        minor = fdet([row[:k] for row in g[:k]])
        if minor.sign() <= 0:
            return False
    return True


def is_positive_semidefinite(g):
    """Exact PSD test: all principal minors nonnegative."""
    from itertools import combinations
    for k in range(1, 7):
        for rows in combinations(range(6), k):
            minor = fdet([[g[i][j] for j in rows] for i in rows])
            if minor.sign() < 0:
                return False
    return True


def gram_rank(g):
    return frank(g)


# -- reference coordinates on V ----------------------------------------------------

_REFERENCE_POINTS = None


def reference_points():
    """Seven integral vectors whose rank-one points span V (computed once)."""
    global _REFERENCE_POINTS
    if _REFERENCE_POINTS is not None:
        return _REFERENCE_POINTS
    T = FieldElement(0, 1, 0)
    cands = [vec(1, 0), vec(0, 1), vec(1, 1), vec(T, 0), vec(0, T),
             vec(T, 1), vec(1, T), vec(T * T, 1), vec(1, T * T), vec(T, T),
             vec(1 + T, 1), vec(1, 1 + T)]
    chosen = []
    vecs = []
    for z in cands:
        g = gram_of_point(z)
        v = [g[i][j] for i in range(6) for j in range(i, 6)]
        if frank(vecs + [v]) > len(chosen):
            chosen.append(z)
            vecs.append(v)
        if len(chosen) == 7:
            break
    assert len(chosen) == 7, "failed to span V with small rank-one points"
    _REFERENCE_POINTS = chosen
    return chosen


def point_coords(x):
    """Coordinates of q(x) in V: pairings against the seven reference points.

    Faithful F-linear coordinates; linear algebra on them (over F) computes
    real spans and facets exactly.
    """
    refs = reference_points()
    return [pairing_points(x, z) for z in refs]


_GRAM_BASIS = None


def gram_basis():
    """F-basis of the 7-dimensional space of valid form Grams."""
    global _GRAM_BASIS
    if _GRAM_BASIS is None:
        _GRAM_BASIS = [gram_of_point(z) for z in reference_points()]
    return _GRAM_BASIS


def gram_in_span(g):
    """Coefficients of g in gram_basis(), or None if outside the 7-space."""
    basis = gram_basis()
    cols = [[b[i][j] for b in basis] for i in range(6) for j in range(i, 6)]
    rhs = [g[i][j] for i in range(6) for j in range(i, 6)]
    mat = [list(row) for row in cols]
    sol = fsolve(mat, rhs)
    if sol is None:
        return None
    # verify (fsolve returns echelon solution; system may be inconsistent only
    # if rhs outside the span, which fsolve already detects)
    recon = gram_zero()
    for c, b in zip(sol, basis):
        recon = gram_add(recon, gram_scale(c, b))
    if any((recon[i][j] - g[i][j]).sign() != 0 for i in range(6) for j in range(6)):
        return None
    return sol


def form_from_values(vector_value_pairs):
    """Solve for the form Gram taking prescribed pairing values on points.

    vector_value_pairs: list of (x, value) with x a vector pair and value a
    FieldElement; returns a 6x6 Gram in the valid 7-space or None.
    """
    basis = gram_basis()
    rows = []
    rhs = []
    for x, val in vector_value_pairs:
        rows.append([gram_eval(b, x) for b in basis])
        rhs.append(val if isinstance(val, FieldElement) else FieldElement.from_rational(val))
    sol = fsolve(rows, rhs)
    if sol is None:
        return None
    g = gram_zero()
    for c, b in zip(sol, basis):
        g = gram_add(g, gram_scale(c, b))
    return g


# -- spanning points, sizes --------------------------------------------------------

def content_ideal(x):
    from .ideals import Ideal
    gens = [c for c in x if not c.is_zero()]
    return Ideal.from_generators(*gens)


def primitive_part(x):
    """Divide out the content ideal's canonical generator; x integral, nonzero."""
    from .ideals import canonical_generator
    c = content_ideal(x)
    if c.norm() == 1:
        return x
    g = canonical_generator(c)
    return (x[0] / g, x[1] / g)


def ray_rep(x):
    """Canonical vertex representative of the ray class of q(x).

    Clears denominators, removes content, then normalizes the sign so the
    first nonzero coordinate is positive.  Two vectors get the same ray_rep
    iff their rank-one points span the same ray.
    """
    if vec_is_zero(x):
        raise ValueError("zero vector has no ray")
    d = 1
    for c in x:
        d = d * c.d // _gcd(d, c.d)
    y = (x[0] * d, x[1] * d)
    y = primitive_part(y)
    return _sign_normalize(y)


def _gcd(a, b):
    from math import gcd
    return gcd(a, b)


def _sign_normalize(x):
    for c in vec_coords(x):
        if c > 0:
            return x
        if c < 0:
            return (-x[0], -x[1])
    return x


def spanning_point(x):
    """Unit-canonical representative R(x): content removed, height-minimal.

    Minimizes the exact height <q(u x0), Id> over u = +-eps^k (the height is
    strictly convex in k, so the scan window certifies the minimum); ties
    broken lexicographically on the coordinate tuple.  Satisfies R(R(x)) =
    R(x) and R(ux) = +-R(x) for units u.
    """
    x0 = ray_rep(x)
    cands = {0: (_sign_normalize(x0), height(x0))}
    lo = hi = 0
    while True:
        for k in (lo - 1, hi + 1):
            y = (x0[0] * EPS ** k, x0[1] * EPS ** k)
            cands[k] = (_sign_normalize(y), height(y))
            lo, hi = min(lo, k), max(hi, k)
        ks = sorted(cands)
        best = ks[0]
        for k in ks[1:]:
            s = (cands[k][1] - cands[best][1]).sign()
            if s < 0 or (s == 0 and vec_key(cands[k][0]) < vec_key(cands[best][0])):
                best = k
        if best - lo >= 2 and hi - best >= 2:
            return cands[best][0]
        if hi - lo > 64:
            raise RuntimeError("unit window failed to certify the height minimum")


def size(x1, x2):
    """|N(det(R(x1), R(x2)))|, a nonnegative integer (GL_2(O)-invariant)."""
    r1, r2 = spanning_point(x1), spanning_point(x2)
    d = det2(r1, r2)
    n = d.norm()
    assert n.denominator == 1
    return abs(n.numerator)


def normal_form(A):
    """Left HNF over O: (H, T) with H = T A, T in GL_2(O), and H depending
    only on the left GL_2(O)-orbit of A.

    H is upper triangular with canonical-generator diagonal (first-column
    gcd ideal, then its complement in (det A)) and top-right entry reduced
    to the canonical residue modulo the lower-right entry.
    """
    from .ideals import bezout, canonical_generator, Ideal
    if A.det().is_zero():
        raise ValueError("singular lift matrix")
    x, y = A.a, A.c
    if y.is_zero():
        T1 = Mat2.identity()
    elif x.is_zero():
        T1 = Mat2(ZERO, ONE, -ONE, ZERO)
    else:
        g, al, be = bezout(x, y)
        T1 = Mat2(al, be, -y / g, x / g)
    A1 = T1 * A
    g0, s0 = A1.a, A1.d
    gcan, _ = _canon_gen_cached(g0)
    scan, sideal = _canon_gen_cached(s0)
    T2 = Mat2(gcan / g0, ZERO, ZERO, scan / s0)
    A2 = T2 * A1
    b = A2.b
    bred = FieldElement(*sideal.reduce_coords(b.n)) if b.is_integral() else b
    m = (bred - b) / scan
    assert m.is_integral()
    T3 = Mat2(ONE, m, ZERO, ONE)
    H = T3 * A2
    T = T3 * T2 * T1
    assert (T * A).key() == H.key()
    return H, T


_CANON_GEN_CACHE = {}


def _canon_gen_cached(x):
    from .ideals import Ideal, canonical_generator
    ide = Ideal.from_generators(x)
    key = ide.rows
    hit = _CANON_GEN_CACHE.get(key)
    if hit is None:
        hit = canonical_generator(ide)
        _CANON_GEN_CACHE[key] = hit
    return hit, ide
