"""Congruence levels: ideals n, the finite set P^1(O/n), and lifts.

P^1(O/n) indexes the cosets Gamma_0(n) \\ GL_2(O) through the bottom row
(c : d) of a matrix, taken modulo units of O/n.  Points are built and
normalized locally at each prime power via CRT, which gives canonical
labels without scanning the unit group.
"""

from __future__ import annotations

from itertools import product

from .field import FieldElement, ONE, ZERO
from .formspace import Mat2
from .ideals import Ideal, factor_ideal, hnf_rows


def _elt_rows(x):
    from .field import T
    rows = []
    y = x
    for _ in range(3):
        rows.append(y.n)
        y = y * T
    return rows


def inverse_mod(a, m):
    """x with a x = 1 mod the ideal m, or None if a is not invertible."""
    rows = []
    e = a
    from .field import T
    for i in range(3):
        tag = [0, 0, 0]
        tag[i] = 1
        rows.append(list(e.n) + tag)
        e = e * T
    for r in m.rows:
        rows.append(list(r) + [0, 0, 0])
    red = _hnf_tail(rows)
    # solve (1,0,0) in the span of the first-3 blocks, track the tail
    target = [1, 0, 0]
    comb = [0] * 6
    for r in red:
        piv = next((j for j in range(3) if r[j] != 0), None)
        if piv is None:
            continue
        if target[piv] % r[piv] != 0:
            return None
        c = target[piv] // r[piv]
        for j in range(3):
            target[j] -= c * r[j]
        for j in range(6):
            comb[j] += c * r[j]
    if target != [0, 0, 0]:
        return None
    return FieldElement(comb[3], comb[4], comb[5])


def _hnf_tail(rows):
    rows = [list(r) for r in rows if any(r)]
    out = []
    col = 0
    while col < 3 and rows:
        live = [r for r in rows if r[col] != 0]
        if not live:
            col += 1
            continue
        while True:
            live.sort(key=lambda r: abs(r[col]))
            piv = live[0]
            done = True
            for r in live[1:]:
                qq = r[col] // piv[col]
                for j in range(len(r)):
                    r[j] -= qq * piv[j]
                if r[col] != 0:
                    done = False
            live = [piv] + [r for r in live[1:] if r[col] != 0]
            if done or len(live) == 1:
                break
        if piv[col] < 0:
            piv[:] = [-v for v in piv]
        out.append(piv)
        rows = [r for r in rows if r is not piv and any(r[:3])]
        col += 1
    return out


class LevelIdeal:
    """A level n with its factorization and the projective line P^1(O/n)."""

    def __init__(self, ideal):
        self.ideal = ideal
        self.norm = ideal.norm()
        self.factors = sorted(factor_ideal(ideal).items(),
                              key=lambda kv: (kv[0].norm(), kv[0].rows))
        self.local_moduli = [p ** e for p, e in self.factors]
        self.local_primes = [p for p, _ in self.factors]
        self._idempotents = self._crt_idempotents()
        self._p1 = None
        self._label_cache = {}

    def factorization_type(self):
        """Sorted exponent tuple, e.g. (1,), (2,), (1, 1), (3,), (1, 2), (1, 1, 1)."""
        return tuple(sorted(e for _, e in self.factors))

    def p1_size_formula(self):
        n = self.norm
        for p, _ in self.factors:
            n = n // p.norm() * (p.norm() + 1)
        return n

    def _crt_idempotents(self):
        """eps_i = 1 mod m_i, 0 mod m_j (j != i)."""
        if len(self.local_moduli) == 1:
            return [ONE]
        out = []
        for i, m in enumerate(self.local_moduli):
            c = Ideal.unit_ideal()
            for j, mm in enumerate(self.local_moduli):
                if j != i:
                    c = c * mm
            # find u in c with u = 1 mod m: u = 1 - v, v in m, via bezout
            u = _ideal_bezout_one(c, m)
            out.append(u)
        return out

    # ---- residues modulo n ------------------------------------------------

    def reduce(self, x):
        """Canonical residue representative of an integral element mod n."""
        return FieldElement(*self.ideal.reduce_coords(x.n))

    def residues(self):
        return [FieldElement(*c) for c in self.ideal.elements()]

    # ---- P^1 ----------------------------------------------------------------

    def p1_points(self):
        """All canonical labels, built locally and combined by CRT."""
        if self._p1 is not None:
            return self._p1
        local_lists = []
        for p, m in zip(self.local_primes, self.local_moduli):
            pts = []
            for b in m.elements():
                pts.append((ONE, FieldElement(*b)))
            for a in m.elements():
                if p.contains(FieldElement(*a)):
                    pts.append((FieldElement(*a), ONE))
            local_lists.append(pts)
        out = []
        for combo in product(*local_lists):
            a = ZERO
            b = ZERO
            for (al, bl), eps in zip(combo, self._idempotents):
                a = a + al * eps
                b = b + bl * eps
            out.append((self.reduce(a), self.reduce(b)))
        assert len(out) == self.p1_size_formula()
        self._p1 = sorted(out, key=lambda ab: (ab[0].key(), ab[1].key()))
        return self._p1

    def p1_normalize(self, a, b):
        """Canonical label of the class of (a : b); (a, b) must be coprime to n."""
        a, b = self.reduce(a), self.reduce(b)
        key = (a.key(), b.key())
        hit = self._label_cache.get(key)
        if hit is not None:
            return hit
        loc_a, loc_b = ZERO, ZERO
        for p, m, eps in zip(self.local_primes, self.local_moduli, self._idempotents):
            if not p.contains(a):
                inv = inverse_mod(a, m)
                la, lb = ONE, _reduce_mod(b * inv, m)
            elif not p.contains(b):
                inv = inverse_mod(b, m)
                la, lb = _reduce_mod(a * inv, m), ONE
            else:
                raise ValueError("pair is not coprime to the level")
            loc_a = loc_a + la * eps
            loc_b = loc_b + lb * eps
        lab = (self.reduce(loc_a), self.reduce(loc_b))
        self._label_cache[key] = lab
        return lab

    def label_of_matrix(self, g):
        """Label of the coset Gamma_0(n) g from the bottom row of g."""
        return self.p1_normalize(g.c, g.d)

    def act(self, label, g):
        """Right action on labels: (c d) -> (c d) g, then normalize."""
        a, b = label
        return self.p1_normalize(a * g.a + b * g.c, a * g.b + b * g.d)

    def lift_label(self, label):
        """gamma in GL_2(O) whose bottom row represents the label.

        Shifts both coordinates by elements of n until the pair generates
        the unit ideal (always possible: strong approximation for SL_2).
        """
        from .perfect import _bezout
        c0, d0 = label
        basis = [FieldElement(*r) for r in self.ideal.rows]
        if c0.is_zero() and d0.is_zero():
            raise ValueError("invalid label")
        hit = None
        for ccoeffs in _expanding_box(3):
            if any(abs(x) > 2 for x in ccoeffs):
                break
            c = c0
            for cc, be in zip(ccoeffs, basis):
                c = c + cc * be
            for dcoeffs in _expanding_box(3):
                d = d0
                for cc, be in zip(dcoeffs, basis):
                    d = d + cc * be
                if c.is_zero() and d.is_zero():
                    continue
                if _is_unimodular_pair(c, d):
                    hit = (c, d)
                    break
            if hit:
                break
        if hit is None:
            raise RuntimeError("failed to lift P^1 label to a unimodular pair")
        c, d = hit
        gg, u, v = _bezout(c, d)
        # u c + v d = gg with (gg) = (c, d) = O, so gg is a unit
        gi = gg.inverse()
        a, b = v * gi, -u * gi
        mat = Mat2(a, b, c, d)
        assert mat.is_unimodular()
        assert self.label_of_matrix(mat) == label
        return mat


def _reduce_mod(x, m):
    return FieldElement(*m.reduce_coords(x.n))


def _is_unimodular_pair(c, d):
    gens = [g for g in (c, d) if not g.is_zero()]
    if not gens:
        return False
    return Ideal.from_generators(*gens).norm() == 1


def _expanding_box(width):
    """(0,0,0), then coefficient tuples of growing sup-norm."""
    yield (0, 0, 0)
    for radius in range(1, 7):
        for coeffs in product(range(-radius, radius + 1), repeat=width):
            if max(abs(c) for c in coeffs) == radius:
                yield coeffs


def _ideal_bezout_one(c, m):
    """u in c with u = 1 mod m (c + m must be the unit ideal)."""
    rows = []
    for r in c.rows:
        rows.append(list(r) + list(r))
    for r in m.rows:
        rows.append(list(r) + [0, 0, 0])
    red = _hnf_tail(rows)
    target = [1, 0, 0]
    comb = [0] * 6
    for r in red:
        piv = next((j for j in range(3) if r[j] != 0), None)
        if piv is None:
            continue
        if target[piv] % r[piv] != 0:
            raise ValueError("ideals are not coprime")
        q = target[piv] // r[piv]
        for j in range(3):
            target[j] -= q * r[j]
        for j in range(6):
            comb[j] += q * r[j]
    if target != [0, 0, 0]:
        raise ValueError("ideals are not coprime")
    u = FieldElement(comb[3], comb[4], comb[5])
    # u is the c-part of the decomposition 1 = u + v
    return u


def level_from_string(s):
    """Level ideal from a generator string like "4t^2-t-5"."""
    from .field import parse_element
    g = parse_element(s)
    return LevelIdeal(Ideal.from_generators(g))


def levels_of_norm_up_to(bound):
    """All ideals of norm <= bound (as LevelIdeal), sorted by norm.

    Enumerates products of prime powers with norm below the bound.
    """
    from .ideals import primes_of_norm_up_to
    primes = primes_of_norm_up_to(bound)
    ideals = [(Ideal.unit_ideal(), 1)]
    for p in primes:
        np = p.norm()
        new = []
        for base, n in ideals:
            power, pn = p, np
            while n * pn <= bound:
                new.append((base * power, n * pn))
                power = power * p
                pn *= np
        ideals.extend(new)
    out = [LevelIdeal(i) for i, n in ideals if n > 1]
    out.sort(key=lambda L: (L.norm, L.ideal.rows))
    return out
