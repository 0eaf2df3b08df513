"""Weierstrass curves over F, Tate's algorithm, conductors, point counts.

Conductor exponents at primes of residue characteristic at least 5 come
from the exact (v(c4), v(c6), v(Delta)) minimization and the tame Kodaira
table (f is 0, 1, or 2 there).  The two primes above 2 and 3 (norms 8 and
27) run the full Tate loop with brute-force root searches over the residue
field, which also yields local minimal models for point counting.
"""

from __future__ import annotations

from fractions import Fraction

from .field import FieldElement, ONE, ZERO
from .ideals import (Ideal, PrimeIdeal, ResidueField, canonical_generator,
                     element_valuation, factor_ideal, factor_integer,
                     factor_rational_prime)


class WeierstrassCurve:
    """y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6 over F."""

    __slots__ = ("a1", "a2", "a3", "a4", "a6")

    def __init__(self, a1, a2, a3, a4, a6):
        self.a1, self.a2, self.a3, self.a4, self.a6 = (
            _fe(a1), _fe(a2), _fe(a3), _fe(a4), _fe(a6))

    def ainvs(self):
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    def b_invariants(self):
        a1, a2, a3, a4, a6 = self.ainvs()
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = (a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3
              - a4 * a4)
        return b2, b4, b6, b8

    def c_invariants(self):
        b2, b4, b6, _ = self.b_invariants()
        c4 = b2 * b2 - 24 * b4
        c6 = -(b2 ** 3) + 36 * b2 * b4 - 216 * b6
        return c4, c6

    def discriminant(self):
        b2, b4, b6, b8 = self.b_invariants()
        return (-(b2 * b2 * b8) - 8 * (b4 ** 3) - 27 * (b6 * b6)
                + 9 * b2 * b4 * b6)

    def j_invariant(self):
        c4, _ = self.c_invariants()
        d = self.discriminant()
        return (c4 ** 3) / d

    def is_integral(self):
        return all(a.is_integral() for a in self.ainvs())

    def transformed(self, u, r, s, w):
        """The model with x = u^2 x' + r, y = u^3 y' + s u^2 x' + w."""
        a1, a2, a3, a4, a6 = self.ainvs()
        u = _fe(u)
        r, s, w = _fe(r), _fe(s), _fe(w)
        b1 = (a1 + 2 * s) / u
        b2 = (a2 - s * a1 + 3 * r - s * s) / (u ** 2)
        b3 = (a3 + r * a1 + 2 * w) / (u ** 3)
        b4 = (a4 - s * a3 + 2 * r * a2 - (w + r * s) * a1 + 3 * r * r
              - 2 * s * w) / (u ** 4)
        b6 = (a6 + r * a4 + r * r * a2 + r ** 3 - w * a3 - w * w
              - r * w * a1) / (u ** 6)
        return WeierstrassCurve(b1, b2, b3, b4, b6)

    def key(self):
        return tuple(a.key() for a in self.ainvs())

    def __repr__(self):
        return "WeierstrassCurve(%s)" % ", ".join(str(a) for a in self.ainvs())


def _fe(x):
    if isinstance(x, FieldElement):
        return x
    return FieldElement.from_rational(Fraction(x)) if not isinstance(x, int) else FieldElement(x)


# -- local data at a prime -----------------------------------------------------------

class LocalData:
    __slots__ = ("prime", "kodaira", "f", "v_disc_min", "minimal_model")

    def __init__(self, prime, kodaira, f, v_disc_min, minimal_model=None):
        self.prime = prime
        self.kodaira = kodaira
        self.f = f
        self.v_disc_min = v_disc_min
        self.minimal_model = minimal_model

    def __repr__(self):
        return f"LocalData(N(p)={self.prime.norm()}, {self.kodaira}, f={self.f})"


def tate_local(curve, p):
    """Kodaira type and conductor exponent of the curve at the prime p."""
    if p.ell in (2, 3):
        return _tate_full(curve, p)
    return _tate_tame(curve, p)


def _tate_tame(curve, p):
    """Residue characteristic >= 5: valuations of (c4, c6, Delta) suffice."""
    c4, c6 = curve.c_invariants()
    disc = curve.discriminant()
    d = element_valuation(disc, p)
    if d == 0:
        return LocalData(p, "I0", 0, 0, curve)
    a = element_valuation(c4, p) if not c4.is_zero() else 10 ** 9
    while d >= 12 and a >= 4:
        # not minimal at p: u = pi scaling divides (c4, c6, Delta) valuations
        # by (4, 6, 12); only the valuations matter for the type and exponent
        d -= 12
        if a < 10 ** 9:
            a -= 4
    if d == 0:
        return LocalData(p, "I0", 0, 0, None)
    if a == 0:
        return LocalData(p, f"I{d}", 1, d, None)
    if a == 2 and d >= 7:
        return LocalData(p, f"I{d - 6}*", 2, d, None)
    table = {2: "II", 3: "III", 4: "IV", 6: "I0*", 8: "IV*", 9: "III*", 10: "II*"}
    if d in table:
        return LocalData(p, table[d], 2, d, None)
    raise RuntimeError(f"unexpected tame minimal valuations a={a}, d={d}")


def _tate_full(curve, p):
    """The complete Tate loop: any residue characteristic, small fields."""
    k = ResidueField(p)
    pi = canonical_generator(p)

    def v(x):
        return element_valuation(x, p) if not x.is_zero() else 10 ** 9

    def red(x):
        return k.reduce(x)

    def lift(a):
        # residue tuple -> element of O; t maps to the class of t
        out = ZERO
        tt = ONE
        Tgen = FieldElement(0, 1, 0)
        for c in a:
            out = out + c * tt
            tt = tt * Tgen
        return out

    E = curve
    while True:
        disc = E.discriminant()
        n = v(disc)
        if n == 0:
            return LocalData(p, "I0", 0, 0, E)
        # move the singular point of the reduction to the origin
        sing = _singular_point(E, k)
        assert sing is not None
        x0, y0 = sing
        E = E.transformed(ONE, lift(x0), ZERO, lift(y0))
        assert all(v(a) >= 1 for a in (E.a3, E.a4, E.a6))
        b2, b4, b6, b8 = E.b_invariants()
        if v(b2) == 0:
            return LocalData(p, f"I{n}", 1, n, E)
        if v(E.a6) < 2:
            return LocalData(p, "II", n, n, E)
        if v(b8) < 3:
            return LocalData(p, "III", n - 1, n, E)
        if v(b6) < 3:
            return LocalData(p, "IV", n - 2, n, E)
        # normalize: pi | a1, a2; pi^2 | a3, a4; pi^3 | a6
        if k.ell == 2:
            s = lift(k.sqrt(red(E.a2)))
            E = E.transformed(ONE, ZERO, s, ZERO)
            w = pi * lift(k.sqrt(red(E.a6 / (pi * pi))))
            E = E.transformed(ONE, ZERO, ZERO, w)
        else:
            E = E.transformed(ONE, ZERO, -E.a1 / 2, ZERO)
            E = E.transformed(ONE, ZERO, ZERO, -E.a3 / 2)
        assert v(E.a1) >= 1 and v(E.a2) >= 1
        assert v(E.a3) >= 2 and v(E.a4) >= 2 and v(E.a6) >= 3
        # the cubic T^3 + a21 T^2 + a42 T + a63 over k
        a21 = red(E.a2 / pi)
        a42 = red(E.a4 / (pi * pi))
        a63 = red(E.a6 / (pi ** 3))
        roots = _cubic_roots(k, a21, a42, a63)
        if roots == "distinct":
            return LocalData(p, "I0*", 2, n, E)
        kind, root = roots
        if kind == "double":
            # I_m* loop
            E = E.transformed(ONE, pi * lift(root), ZERO, ZERO)
            m = 1
            while True:
                # quadratic Y^2 + a_{3,m+1} Y - a_{6,2m+2}
                q1b = red(E.a3 / pi ** (m + 1))
                q1c = k.neg(red(E.a6 / pi ** (2 * m + 2)))
                rts = _quadratic_roots(k, k.one(), q1b, q1c)
                if rts == "distinct":
                    return LocalData(p, f"I{2 * m - 1}*", 2, n, E)
                _, r1 = rts
                E = E.transformed(ONE, ZERO, ZERO, pi ** (m + 1) * lift(r1))
                # quadratic a_{2,1} X^2 + a_{4,m+2} X + a_{6,2m+3}
                q2a = red(E.a2 / pi)
                q2b = red(E.a4 / pi ** (m + 2))
                q2c = red(E.a6 / pi ** (2 * m + 3))
                rts = _quadratic_roots(k, q2a, q2b, q2c)
                if rts == "distinct":
                    return LocalData(p, f"I{2 * m}*", 2, n, E)
                _, r2 = rts
                E = E.transformed(ONE, pi ** (m + 1) * lift(r2), ZERO, ZERO)
                m += 1
                assert m < 100
        # triple root: translate it to zero
        E = E.transformed(ONE, pi * lift(root), ZERO, ZERO)
        # quadratic Y^2 + a_{3,2} Y - a_{6,4}
        q1b = red(E.a3 / (pi * pi))
        q1c = k.neg(red(E.a6 / (pi ** 4)))
        rts = _quadratic_roots(k, k.one(), q1b, q1c)
        if rts == "distinct":
            return LocalData(p, "IV*", n - 6, n, E)
        _, r1 = rts
        E = E.transformed(ONE, ZERO, ZERO, (pi * pi) * lift(r1))
        if v(E.a4) < 4:
            return LocalData(p, "III*", n - 7, n, E)
        if v(E.a6) < 6:
            return LocalData(p, "II*", n - 8, n, E)
        # not minimal: rescale and restart
        E = E.transformed(pi, ZERO, ZERO, ZERO)
        assert E.is_integral()


def _singular_point(curve, k):
    """The singular point of the reduced curve over k, by scanning."""
    a1, a2, a3, a4, a6 = [k.reduce(a) for a in curve.ainvs()]
    for x in k.elements():
        # dF/dy = 2y + a1 x + a3
        for y in k.elements():
            lhs = k.add(k.mul(y, y), k.add(k.mul(a1, k.mul(x, y)), k.mul(a3, y)))
            rhs = k.add(k.mul(x, k.mul(x, x)),
                        k.add(k.mul(a2, k.mul(x, x)), k.add(k.mul(a4, x), a6)))
            if lhs != rhs:
                continue
            dy = k.add(k.add(y, y), k.add(k.mul(a1, x), a3))
            if not k.is_zero(dy):
                continue
            # dF/dx = a1 y - (3x^2 + 2 a2 x + a4)
            dx = k.sub(k.mul(a1, y),
                       k.add(k.add(k.scale(k.mul(x, x), 3), k.scale(k.mul(a2, x), 2)), a4))
            if k.is_zero(dx):
                return (x, y)
    return None


def _quadratic_roots(k, a, b, c):
    """For a X^2 + b X + c over k: 'distinct' or ('double', the root).

    Only called when the polynomial is known to have a root in k-bar with
    the double case landing in k; tiny fields, so scans are fine.
    """
    if k.is_zero(a):
        return "distinct"  # degenerate: linear, treated as separable
    roots = [x for x in k.elements()
             if k.is_zero(k.add(k.mul(a, k.mul(x, x)), k.add(k.mul(b, x), c)))]
    if len(roots) == 1:
        # double iff the derivative also vanishes there
        x = roots[0]
        der = k.add(k.scale(k.mul(a, x), 2), b)
        if k.is_zero(der):
            return ("double", x)
        return "distinct"
    return "distinct"


def _cubic_roots(k, b, c, d):
    """For T^3 + b T^2 + c T + d over k: 'distinct', ('double', r), ('triple', r)."""
    def val(x):
        return k.add(k.mul(x, k.mul(x, x)),
                     k.add(k.mul(b, k.mul(x, x)), k.add(k.mul(c, x), d)))

    roots = [x for x in k.elements() if k.is_zero(val(x))]
    for x in roots:
        # multiplicity via derivative 3x^2 + 2bx + c and second derivative
        der = k.add(k.scale(k.mul(x, x), 3), k.add(k.scale(k.mul(b, x), 2), c))
        if not k.is_zero(der):
            continue
        der2 = k.add(k.scale(x, 6), k.scale(b, 2))
        if k.is_zero(der2):
            return ("triple", x)
        return ("double", x)
    return "distinct"


# -- conductors -----------------------------------------------------------------------

class ConductorData:
    __slots__ = ("ideal", "locals", "norm")

    def __init__(self, ideal, locals_):
        self.ideal = ideal
        self.locals = locals_
        self.norm = ideal.norm()

    def __repr__(self):
        return f"Conductor(norm={self.norm})"


def conductor(curve):
    """Conductor ideal with per-prime exponents and Kodaira symbols."""
    disc = curve.discriminant()
    if disc.is_zero():
        raise ValueError("singular curve")
    dideal = Ideal.from_generators(_numerator(disc))
    locals_ = []
    cond = Ideal.unit_ideal()
    for ell in sorted(factor_integer(dideal.norm())):
        for p, _ in factor_rational_prime(ell):
            if element_valuation(disc, p) <= 0:
                continue
            ld = tate_local(curve, p)
            if ld.f > 0:
                locals_.append(ld)
                cond = cond * (p ** ld.f)
    return ConductorData(cond, locals_)


def _numerator(x):
    return FieldElement(*x.n)


# -- point counting ---------------------------------------------------------------------

def count_points(curve, p):
    """|E(F_p)| for a prime of good reduction, point at infinity included."""
    disc = curve.discriminant()
    vd = element_valuation(disc, p) if not disc.is_zero() else None
    if disc.is_zero():
        raise ValueError("singular curve")
    E = curve
    if vd > 0:
        ld = tate_local(curve, p)
        if ld.f != 0:
            raise ValueError("bad reduction at this prime")
        if ld.minimal_model is not None:
            E = ld.minimal_model
        else:
            E = _minimalize_tame(curve, p)
        assert element_valuation(E.discriminant(), p) == 0
    k = ResidueField(p)
    a1, a2, a3, a4, a6 = [k.reduce(a) for a in E.ainvs()]
    count = 1
    for x in k.elements():
        rhs = k.add(k.mul(x, k.mul(x, x)),
                    k.add(k.mul(a2, k.mul(x, x)), k.add(k.mul(a4, x), a6)))
        for y in k.elements():
            lhs = k.add(k.mul(y, y), k.add(k.mul(a1, k.mul(x, y)), k.mul(a3, y)))
            if lhs == rhs:
                count += 1
    return count


def _minimalize_tame(curve, p):
    """Good-reduction minimal model at p >= 5 via complete-the-square scaling."""
    pi = canonical_generator(p)
    # complete the square and cube: a1 = a3 = 0 model (char >= 5 allows /2, /3)
    E = curve.transformed(ONE, ZERO, -curve.a1 / 2, ZERO)
    E = E.transformed(ONE, ZERO, ZERO, -E.a3 / 2)
    E = E.transformed(ONE, -E.a2 / 3, ZERO, ZERO)
    # now y^2 = x^3 + a4 x + a6; scale down by pi while possible
    while True:
        v4 = element_valuation(E.a4, p) if not E.a4.is_zero() else 10 ** 9
        v6 = element_valuation(E.a6, p) if not E.a6.is_zero() else 10 ** 9
        if v4 >= 4 and v6 >= 6:
            E = E.transformed(pi, ZERO, ZERO, ZERO)
        else:
            break
    # clear denominators at p if any (valuations may be negative at other
    # primes; only p-integrality matters for counting, so rescale up)
    while any((element_valuation(a, p) if not a.is_zero() else 0) < 0 for a in E.ainvs()):
        E = E.transformed(ONE / pi, ZERO, ZERO, ZERO)
    return E


def ap_value(curve, p):
    """a_p = N(p) + 1 - |E(F_p)| at a good prime."""
    return p.norm() + 1 - count_points(curve, p)


# -- isomorphism testing -------------------------------------------------------------------

def _nth_root_in_field(z, n):
    """Some u in F with u^n = z, or None; exact verification after a numeric guess."""
    if z.is_zero():
        return ZERO
    import cmath
    import math
    # scale to make the root integral: (M u)^n = M^n z with M the denominator
    M = z.d
    zz = z * FieldElement(M ** n)
    # now look for an integral root of zz
    sr = zz.real(200)
    sc = zz.complex()
    if n % 2 == 1:
        r_real = math.copysign(abs(sr) ** (1.0 / n), sr)
        real_choices = [r_real]
    else:
        if sr < 0:
            return None
        real_choices = [sr ** (1.0 / n), -(sr ** (1.0 / n))]
    base = sc ** (1.0 / n) if sc != 0 else 0j
    for jj in range(n):
        rot = base * cmath.exp(2j * cmath.pi * jj / n)
        for rr in real_choices:
            cand = _element_from_embeddings(rr, rot)
            if cand is not None and cand ** n == zz:
                return cand * FieldElement(1, 0, 0, M)
    return None


def _element_from_embeddings(real_val, cplx_val):
    """Integer-coefficient element with the given embeddings, or None."""
    import numpy as np
    th = FieldElement(0, 1, 0).real(200)
    zc = FieldElement(0, 1, 0).complex()
    mat = np.array([
        [1.0, th, th * th],
        [1.0, zc.real, (zc * zc).real],
        [0.0, zc.imag, (zc * zc).imag],
    ])
    rhs = np.array([real_val, cplx_val.real, cplx_val.imag])
    try:
        sol = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError:
        return None
    coeffs = [int(round(x)) for x in sol]
    if max(abs(s - c) for s, c in zip(sol, coeffs)) > 0.01:
        return None
    return FieldElement(*coeffs)


def isomorphic(e1, e2):
    """A Weierstrass transformation (u, r, s, w) with e1 -> e2, or None."""
    c41, c61 = e1.c_invariants()
    c42, c62 = e2.c_invariants()
    d1, d2 = e1.discriminant(), e2.discriminant()
    if e1.j_invariant() != e2.j_invariant():
        return None
    # u^4 = c4_1/c4_2, u^6 = c6_1/c6_2, u^12 = d1/d2
    if not c41.is_zero() and not c61.is_zero():
        if c42.is_zero() or c62.is_zero():
            return None
        z = (c61 / c62) / (c41 / c42)        # = u^2
        if (z * z != c41 / c42) or (z ** 3 != c61 / c62):
            return None
        u = _nth_root_in_field(z, 2)
    elif c41.is_zero():
        if not c42.is_zero():
            return None
        z = _nth_root_in_field(c61 / c62, 3)  # u^2
        u = _nth_root_in_field(z, 2) if z is not None else None
    else:
        if not c62.is_zero() or c42.is_zero():
            return None
        z = _nth_root_in_field(c41 / c42, 2)  # u^2
        u = _nth_root_in_field(z, 2) if z is not None else None
    if u is None or u.is_zero():
        return None
    if (u ** 12) != d1 / d2:
        return None
    s = (u * e2.a1 - e1.a1) / 2
    r = (u * u * e2.a2 - e1.a2 + s * e1.a1 + s * s) / 3
    w = (u ** 3 * e2.a3 - e1.a3 - r * e1.a1) / 2
    cand = e1.transformed(u, r, s, w)
    if cand.key() == e2.key():
        return (u, r, s, w)
    return None
