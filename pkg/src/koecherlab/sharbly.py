"""Sharbly chains, Hecke operators, and the reduction to Koecher cells.

A 1-sharbly chain mod Gamma_0(n) is stored as records (vertex triple,
coefficient); vertices are canonical ray representatives.  Reducing points
are pure GL_2(O)-equivariant functions of the unordered edge ray pair
(invariant sort keys over the spanning rays of the cone containing the
edge barycenter, with ties resolved by a stabilizer-fixed candidate), so
every Gamma_0(n)-identification between boundary edges -- including an
edge identified with itself by an orientation-reversing element --
transports reducing points compatibly and reduction preserves both the
cycle property and the homology class.  Left HNF normal forms over O play
the role of cache keys, as in the caching of normal forms the paper uses.

The reduction loop subdivides nonreduced edges at reducing points (sizes
strictly drop), dispatches all-edges-reduced but nonreduced triangles
through the explicit unit-fan subdivision, and finally rewrites the
reduced cycle in the 3-cone cell basis of the quotient complex.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .field import EPS, ONE, ZERO, FieldElement, unit_log_exponent
from .formspace import (Mat2, det2, normal_form, ray_rep, spanning_point,
                        vec_key)
from .ideals import Ideal, canonical_generator
from .perfect import ConeLocator, PointCombination


class HeuristicFailureError(RuntimeError):
    """Reduction heuristic failed; carries a diagnostic payload."""

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


# -- chains -------------------------------------------------------------------

_EDGES = ((0, 1), (0, 2), (1, 2))


def _perm_parity(perm):
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


class Chain:
    """Formal sum of 1-sharblies over F_p."""

    def __init__(self, p):
        self.p = p
        self.records = {}

    def add(self, coeff, verts, lifts=None):
        """Add coeff * [v0, v1, v2]; verts are vector pairs (any ray reps)."""
        coeff %= self.p
        if coeff == 0:
            return
        verts = [ray_rep(v) for v in verts]
        keys = [vec_key(v) for v in verts]
        # degenerate: repeated ray, or all three on one line of F^2
        if len(set(keys)) < 3:
            return
        if det2(verts[0], verts[1]).is_zero() and det2(verts[0], verts[2]).is_zero():
            return
        order = sorted(range(3), key=lambda i: keys[i])
        sign = _perm_parity(order)
        sverts = tuple(verts[i] for i in order)
        key = tuple(vec_key(v) for v in sverts)
        rec = self.records.get(key)
        if rec is None:
            self.records[key] = [coeff * sign % self.p, sverts]
        else:
            rec[0] = (rec[0] + coeff * sign) % self.p
            if rec[0] == 0:
                del self.records[key]

    def items(self):
        return [(rec[0], rec[1], None) for rec in self.records.values() if rec[0]]

    def support_size(self):
        return sum(1 for r in self.records.values() if r[0])


def hecke_cosets(q):
    """Left coset representatives for T_q, q a prime ideal coprime to the level:
    (pi, 0; 0, 1) and (1, r; 0, pi) for r over residues of O/q."""
    pi = canonical_generator(q)
    reps = [Mat2(pi, ZERO, ZERO, ONE)]
    for c in q.elements():
        reps.append(Mat2(ONE, FieldElement(*c), ZERO, pi))
    return reps


def hecke_image(chain, q):
    """T_q applied to a 1-sharbly chain."""
    out = Chain(chain.p)
    for g in hecke_cosets(q):
        for coeff, verts, _ in chain.items():
            out.add(coeff, [g.apply(v) for v in verts])
    return out


# -- normal forms ------------------------------------------------------------------

# -- reducing points ------------------------------------------------------------

class ReductionContext:
    """Shared fan, locator, and the reducing-point cache."""

    def __init__(self, fan, p=12379, use_cache=True):
        self.fan = fan
        self.locator = ConeLocator(fan)
        self.p = p
        self.use_cache = use_cache
        self.cache = {}
        self.stats = {"cache_hits": 0, "locates": 0}

    def clear_cache(self):
        self.cache.clear()


def _pair_stabilizer(r1, r2):
    """All gamma in GL_2(O) preserving the ray pair {r1, r2}."""
    from .perfect import equivalences
    return equivalences((r1, r2), (r1, r2), first_only=False)


def _candidate_key(c, r1, r2, cone_rays):
    """GL_2(O)-invariant sort key for a reducing-point candidate."""
    s1 = _edge_size(r1, c)
    s2 = _edge_size(c, r2)
    profile = tuple(sorted(_edge_size(c, r) for r in cone_rays))
    return (max(s1, s2), min(s1, s2), profile)


def reducing_point_pair(r1, r2, ctx):
    """Reducing point for the nonreduced edge with spanning rays r1, r2.

    A pure GL_2(O)-equivariant function of the unordered ray pair: the
    candidates are the spanning rays of the minimal fan cone containing the
    edge barycenter (a canonical set), ordered by invariant keys, and a tie
    is resolved by a candidate fixed under the stabilizer of the pair (a
    unique minimum is automatically fixed).  Equivariance makes reducing
    points of boundary-cancelling edges match, including edges identified
    with themselves by orientation-reversing elements.
    """
    r1, r2 = ray_rep(r1), ray_rep(r2)
    key0 = _edge_cache_key(r1, r2)
    if ctx.use_cache and key0 in ctx.cache:
        p1, p2, w0 = ctx.cache[key0]
        from .perfect import equivalent
        gam = equivalent((p1, p2), cone_rays_sorted_pair(r1, r2))
        if gam is not None:
            ctx.stats["cache_hits"] += 1
            return ray_rep(gam.apply(w0))
    ctx.stats["locates"] += 1
    point = PointCombination([(1, r1), (1, r2)])
    rays, _ = ctx.locator.minimal_cone(point)
    ends = {vec_key(r1), vec_key(r2)}
    cands = [c for c in rays if vec_key(c) not in ends]
    if not cands:
        raise HeuristicFailureError(
            "no reducing-point candidate in the located cone",
            payload={"edge": (r1, r2), "cone_rays": rays})
    keyed = sorted(((_candidate_key(c, r1, r2, rays), c) for c in cands),
                   key=lambda kc: kc[0])
    stab = None
    i = 0
    chosen = None
    while i < len(keyed):
        j = i
        while j < len(keyed) and keyed[j][0] == keyed[i][0]:
            j += 1
        tied = [keyed[k][1] for k in range(i, j)]
        if len(tied) == 1:
            chosen = tied[0]
            break
        if stab is None:
            stab = _pair_stabilizer(r1, r2)
        for c in tied:
            ck = vec_key(c)
            if all(vec_key(ray_rep(s.apply(c))) == ck for s in stab):
                chosen = c
                break
        if chosen is not None:
            break
        i = j
    if chosen is None:
        raise HeuristicFailureError(
            "no stabilizer-fixed reducing point for a symmetric edge",
            payload={"edge": (r1, r2), "cone_rays": rays})
    if ctx.use_cache:
        ctx.cache[key0] = (r1, r2, chosen)
    return chosen


def cone_rays_sorted_pair(r1, r2):
    return tuple(sorted((r1, r2), key=vec_key))


def _edge_cache_key(r1, r2):
    """Cheap Gamma-stable-ish cache key; collisions are validated on hit."""
    from .formspace import normal_form
    from .field import FieldElement
    best = None
    for sw in (False, True):
        for a in range(-4, 5):
            u = EPS ** a
            c1 = (r1[0] * u, r1[1] * u) if not sw else (r2[0] * u, r2[1] * u)
            c2 = r2 if not sw else r1
            A = Mat2.from_columns(c1, c2)
            if A.det().is_zero():
                return ("degenerate",)
            H, _ = normal_form(A)
            k = H.key()
            if best is None or k < best:
                best = k
    return best


def reducing_point(A, ctx):
    """Spec facade: the reducing point attached to a lift matrix, a pure
    function of its left normal form (it factors through the column rays)."""
    return reducing_point_pair((A.a, A.c), (A.b, A.d), ctx)


def _edge_size(a, b):
    d = det2(a, b)
    n = d.norm()
    assert n.denominator == 1
    return abs(n.numerator)


def _degenerate_midpoint(r1, r2):
    """Reducing point for an edge [x, +-eps^k x], |k| >= 2: the middle unit
    multiple.  Safe unconditionally: ray-pair symmetries act on the common
    line by +-1, so the midpoint ray is stabilizer-fixed, and no element of
    GL_2(O) can swap the two rays of a degenerate edge."""
    r1 = ray_rep(r1)
    r2 = ray_rep(r2)
    j = 0 if not r1[0].is_zero() else 1
    unit = r2[j] / r1[j]
    _, k = unit_log_exponent(unit)
    m = k // 2 if k > 0 else -((-k) // 2)
    return (r1[0] * EPS ** m, r1[1] * EPS ** m)


# -- edge classification -----------------------------------------------------------

def classify_edges(verts):
    """Status per edge pair: 'ok', 'bad', 'deg_ok' (unit ratio), 'deg_bad'."""
    status = {}
    for (i, j) in _EDGES:
        a, b = verts[i], verts[j]
        d = det2(a, b)
        if d.is_zero():
            idx = 0 if not a[0].is_zero() else 1
            unit = b[idx] / a[idx]
            _, k = unit_log_exponent(unit)
            status[(i, j)] = "deg_ok" if abs(k) <= 1 else "deg_bad"
        else:
            status[(i, j)] = "ok" if _edge_size(a, b) == 1 else "bad"
    return status


def chain_max_size(chain):
    mx = 0
    for _, verts, _ in chain.items():
        for (i, j) in _EDGES:
            d = det2(verts[i], verts[j])
            if not d.is_zero():
                mx = max(mx, _edge_size(verts[i], verts[j]))
    return mx


# -- the unit-fan subdivision for reduction level zero ------------------------------

def iint(z):
    """IInt(z) for a unit z = (-1)^f eps^n: the list z_0, ..., z_{|n|} with
    z_i = (-1)^f eps^(i sign(n)), stepping from (-1)^f toward z."""
    sgn, n = unit_log_exponent(z)
    step = 1 if n >= 0 else -1
    lead = ONE if sgn > 0 else -ONE
    return [lead * EPS ** (step * i) for i in range(abs(n) + 1)]


def type0_subdivide(gamma, a_unit, b_unit):
    """The unit-fan chain replacing [e1, e2, v], v = (a, b) nonzero units,
    transported by gamma; returns a list of (sign, vertex-triple).

    The total boundary telescopes to the boundary of gamma [e1, e2, v].
    """
    _, na = unit_log_exponent(a_unit)
    _, nb = unit_log_exponent(b_unit)
    assert na != 0 and nb != 0
    e2 = (ZERO, ONE)
    v = (a_unit, b_unit)
    va = (a_unit, ZERO)
    vb = (ZERO, b_unit)
    pa = [(z, ZERO) for z in iint(a_unit)]
    pb = [(ZERO, z) for z in iint(b_unit)]
    pieces = [(1, (v, va, vb))]
    for i in range(len(pa) - 1):
        pieces.append((1, (v, pa[i], pa[i + 1])))
        pieces.append((1, (e2, pa[i + 1], pa[i])))
    for i in range(len(pb) - 1):
        pieces.append((1, (va, pb[i], pb[i + 1])))
        pieces.append((1, (v, pb[i + 1], pb[i])))
    out = []
    for sgn, tri in pieces:
        out.append((sgn, tuple(gamma.apply(x) for x in tri)))
    return out


def _unit_sign_exp(u):
    """(f, n) with u = (-1)^f eps^n."""
    sgn, n = unit_log_exponent(u)
    return (0 if sgn > 0 else 1), n


# -- the reduction loop ---------------------------------------------------------------

def reduce_cycle(chain, ctx, max_rounds=80, progress=None):
    """Rewrite a 1-sharbly cycle mod Gamma_0(n) as a reduced homologous cycle."""
    p = chain.p
    work = chain
    out = Chain(p)
    for rnd in range(max_rounds):
        nxt = Chain(p)
        touched = 0
        finished = 0
        for coeff, verts, lifts in work.items():
            status = classify_edges(verts)
            bad = [e for e, s in status.items() if s in ("bad", "deg_bad")]
            if bad:
                touched += 1
                _subdivide(nxt, coeff, verts, lifts, status, ctx)
                continue
            if _is_reduced(verts, ctx):
                out.add(coeff, verts, lifts)
                finished += 1
                continue
            touched += 1
            _dispatch_type0(nxt, coeff, verts, ctx)
        if progress:
            progress(f"round {rnd}: worked {work.support_size()}, "
                     f"subdivided {touched}, finished {finished}, "
                     f"pending {nxt.support_size()}")
        if nxt.support_size() == 0:
            return out
        work = nxt
    raise HeuristicFailureError(
        "reduction did not terminate",
        payload={"support": [(c, [tuple(str(x) for x in v) for v in verts])
                             for c, verts, _ in work.items()][:40]})


def _is_reduced(verts, ctx):
    """Spanning points contained in the spanning points of some fan cone."""
    point = PointCombination([(1, v) for v in verts])
    rays, _ = ctx.locator.minimal_cone(point)
    rkeys = {vec_key(r) for r in rays}
    return all(vec_key(v) in rkeys for v in verts)


def _subdivide(out, coeff, verts, lifts, status, ctx):
    """Replace each nonreduced edge by two edges through its reducing point.

    Reducing points are equivariant functions of the edge rays, so every
    Gamma_0(n)-identified occurrence of an edge splits compatibly and the
    output stays a cycle mod Gamma_0(n)."""
    bad = sorted(e for e, s in status.items() if s in ("bad", "deg_bad"))
    wpts = {}
    for (i, j) in bad:
        if status[(i, j)] == "bad":
            wpts[(i, j)] = reducing_point_pair(verts[i], verts[j], ctx)
        else:
            wpts[(i, j)] = _degenerate_midpoint(verts[i], verts[j])

    if len(bad) == 1:
        (i, j) = bad[0]
        k = next(k for k in range(3) if k not in (i, j))
        a, b, y = verts[i], verts[j], verts[k]
        w = wpts[(i, j)]
        sgn = _perm_parity(_inverse_perm((i, j, k)))
        c = coeff * sgn
        out.add(c, (a, w, y))
        out.add(c, (w, b, y))
        return

    if len(bad) == 2:
        shared = set(bad[0]) & set(bad[1])
        m = shared.pop()
        i = next(x for x in bad[0] if x != m)
        j = next(x for x in bad[1] if x != m)
        a, mid, b = verts[i], verts[m], verts[j]
        w1 = wpts[bad[0]]
        w2 = wpts[bad[1]]
        sgn = _perm_parity(_inverse_perm((i, m, j)))
        c = coeff * sgn
        out.add(c, (a, w1, b))
        out.add(c, (w1, mid, w2))
        out.add(c, (w1, w2, b))
        return

    w01 = wpts[(0, 1)]
    w02 = wpts[(0, 2)]
    w12 = wpts[(1, 2)]
    x0, x1, x2 = verts
    out.add(coeff, (x0, w01, w02))
    out.add(coeff, (w01, x1, w12))
    out.add(coeff, (w02, w12, x2))
    out.add(coeff, (w01, w12, w02))


def _inverse_perm(perm):
    inv = [0] * len(perm)
    for idx, val in enumerate(perm):
        inv[val] = idx
    return tuple(inv)


def _dispatch_type0(out, coeff, verts, ctx):
    """All edges reduced but the triangle is not: unit-fan subdivision."""
    frames = []
    for (i, j) in _EDGES:
        if det2(verts[i], verts[j]).is_zero():
            continue
        k = next(k for k in range(3) if k not in (i, j))
        gamma = Mat2.from_columns(verts[i], verts[j])
        if not gamma.is_unimodular():
            continue
        v = gamma.inverse().apply(verts[k])
        a, b = v
        if a.is_zero() or b.is_zero():
            continue
        if not (a.is_integral() and b.is_integral()
                and abs(a.norm()) == 1 and abs(b.norm()) == 1):
            continue
        _, na = unit_log_exponent(a)
        _, nb = unit_log_exponent(b)
        if na == 0 or nb == 0:
            continue
        frames.append((max(abs(na), abs(nb)), (i, j, k), gamma, a, b))
    frames = [f for f in frames if f[0] > 1]
    if not frames:
        raise HeuristicFailureError(
            "nonreduced triangle with no admissible unit frame",
            payload={"verts": [tuple(str(x) for x in v) for v in verts]})
    frames.sort(key=lambda f: (f[0], f[1]))
    _, (i, j, k), gamma, a, b = frames[0]
    sgn = _perm_parity(_inverse_perm((i, j, k)))
    for piece_sign, tri in type0_subdivide(gamma, a, b):
        out.add(coeff * sgn * piece_sign, tri)


# -- rewriting reduced cycles in the cell basis ---------------------------------------

def chain_to_cells(chain, complex_, ctx, _depth=0):
    """Coordinates of a reduced 1-sharbly cycle on the 3-cone cells."""
    from .perfect import perm_sign
    p = complex_.p
    vecout = np.zeros(len(complex_.cells[3]), dtype=np.int64)
    fan = ctx.fan
    for coeff, verts, lifts in chain.items():
        point = PointCombination([(1, v) for v in verts])
        rays, (dim, orbit, transporter) = ctx.locator.minimal_cone(point)
        vkeys = {vec_key(v) for v in verts}
        rkeys = {vec_key(r) for r in rays}
        if not vkeys <= rkeys:
            raise HeuristicFailureError("support element is not reduced",
                                        payload={"verts": verts})
        if dim == 3 and vkeys == rkeys:
            rep = fan.cones[3][orbit].rays
            image = [ray_rep(transporter.apply(r)) for r in rep]
            pos = {vec_key(v): idx for idx, v in enumerate(verts)}
            perm = tuple(pos[vec_key(r)] for r in image)
            sgn = perm_sign(perm)
            hit = complex_.cone_cell_value(orbit, transporter, dim=3)
            if hit is None:
                continue
            idx, phi = hit
            vecout[idx] = (vecout[idx] + coeff * sgn * phi) % p
            continue
        # the triple sits inside a bigger cone but is not itself a face:
        # cone off a vertex of the containing cone (an exact boundary move)
        if _depth >= 3:
            raise HeuristicFailureError(
                "reduced support element is not a 3-cone after coning",
                payload={"verts": verts, "cone": rays})
        sub = Chain(p)
        done = False
        for w in rays:
            if vec_key(w) in vkeys:
                continue
            trial = Chain(p)
            trial.add(coeff, (w, verts[1], verts[2]))
            trial.add(-coeff, (w, verts[0], verts[2]))
            trial.add(coeff, (w, verts[0], verts[1]))
            if all(_triple_is_cone(t, ctx) for _, t, _ in trial.items()):
                for c2, v2, l2 in trial.items():
                    sub.add(c2, v2, l2)
                done = True
                break
        if not done:
            raise HeuristicFailureError(
                "no coning vertex rewrites the reduced element into 3-cones",
                payload={"verts": verts, "cone": rays})
        vecout = (vecout + chain_to_cells(sub, complex_, ctx, _depth + 1)) % p
    return vecout % p


def _triple_is_cone(verts, ctx):
    point = PointCombination([(1, v) for v in verts])
    rays, (dim, _, _) = ctx.locator.minimal_cone(point)
    return dim == 3 and {vec_key(r) for r in rays} == {vec_key(v) for v in verts}


def reduced_boundary_vector(chain, complex_):
    """Boundary of a reduced chain as a vector on the 2-cone cells (must be 0
    for a cycle mod Gamma_0(n))."""
    p = complex_.p
    two = complex_.two_orbit
    rep = complex_.fan.cones[2][two].rays
    R = Mat2.from_columns(rep[0], rep[1])
    Rinv = R.inverse()
    out = np.zeros(len(complex_.cells[2]), dtype=np.int64)
    signs = {(1, 2): 1, (0, 2): -1, (0, 1): 1}
    for coeff, verts, _ in chain.items():
        for (i, j), sg in signs.items():
            a, b = verts[i], verts[j]
            if det2(a, b).is_zero():
                continue  # degenerate 0-sharbly, zero in S_0
            gamma = Mat2.from_columns(a, b) * Rinv
            if not gamma.is_unimodular():
                raise ValueError("boundary edge of a reduced chain is not unimodular")
            hit = complex_.cone_cell_value(two, gamma, dim=2)
            if hit is None:
                continue
            idx, phi = hit
            out[idx] = (out[idx] + coeff * sg * phi) % p
    return out


# -- Hecke matrices on H^4 -------------------------------------------------------------

def basis_cycle_chain(complex_, hvec):
    """1-sharbly chain (with lift matrices) realizing a cycle vector on 3-cells."""
    chain = Chain(complex_.p)
    for idx, (oi, u) in enumerate(complex_.cells[3]):
        c = int(hvec[idx]) % complex_.p
        if c == 0:
            continue
        g, verts, _ = complex_.cell_sharbly(oi, u)
        chain.add(c, verts)
    return chain


def hecke_matrix(complex_, q, ctx, progress=None, check_cycle=True):
    """Matrix of T_q on the H^4 basis of the quotient complex."""
    hbasis, project = complex_.homology()
    h = hbasis.shape[0]
    mat = np.zeros((h, h), dtype=np.int64)
    for col in range(h):
        chain = basis_cycle_chain(complex_, hbasis[col])
        image = hecke_image(chain, q)
        red = reduce_cycle(image, ctx, progress=progress)
        if check_cycle:
            bd = reduced_boundary_vector(red, complex_)
            assert (bd % complex_.p == 0).all(), "reduced image is not a cycle"
        v = chain_to_cells(red, complex_, ctx)
        assert complex_.is_cycle(v), "rewritten chain is not a d3-cycle"
        mat[:, col] = project(v)
        if progress:
            progress(f"T_q column {col + 1}/{h} done")
    return mat
