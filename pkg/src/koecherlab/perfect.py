"""Voronoi's algorithm for perfect binary forms over F and the Koecher fan.

Everything is exact: minimal vectors come from an LDL^T-based enumeration
over the field with outward scans certified by convexity, perfection is a
rank condition on rank-one point coordinates, and neighbor steps solve the
one-parameter flip y + lambda * normal exactly.

The classification walk discovers the GL_2(O)-orbits of perfect pyramids,
then the face lattice, orbit representatives of cones in every dimension,
stabilizers with orientation characters, and the facet incidence used by
the cohomology complex.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .field import EPS, ONE, ZERO, FieldElement
from .flinalg import rank as frank
from .ideals import Ideal, canonical_generator, hnf_rows
from .formspace import (E1, E2, Mat2, det2, gram_add, gram_eval, gram_of_point,
                        gram_scale, gram_zero, gram_basis, is_positive_definite,
                        is_positive_semidefinite, pairing_points, point_coords,
                        ray_rep, vec, vec_coords, vec_is_zero, vec_key)


class DeadEndError(RuntimeError):
    """A perfect-pyramid facet lay in the boundary (never expected here)."""


# -- exact short vector enumeration ------------------------------------------------

def _ldl(g):
    """Exact LDL^T of a PD 6x6 F-matrix: returns (D list, L dict of mu[i][j])."""
    n = 6
    d = [None] * n
    mu = [[None] * n for _ in range(n)]
    for i in range(n):
        val = g[i][i]
        for k in range(i):
            val = val - d[k] * mu[k][i] * mu[k][i]
        d[i] = val
        if val.sign() <= 0:
            raise ValueError("form not positive definite")
        inv = val.inverse()
        for j in range(i + 1, n):
            s = g[i][j]
            for k in range(i):
                s = s - d[k] * mu[k][i] * mu[k][j]
            mu[i][j] = s * inv
    return d, mu


def short_vectors(g, bound):
    """All x in Z^6 - 0 (up to sign) with x^T g x <= bound, plus their values.

    g must be positive definite; bound is a FieldElement (or rational).
    Exact: integer scans expand outward from a float center and stop on an
    exact infeasibility test, which is sound because each level's constraint
    is convex in the coordinate.
    """
    if not isinstance(bound, FieldElement):
        bound = FieldElement.from_rational(Fraction(bound))
    d, mu = _ldl(g)
    n = 6
    out = []
    x = [0] * n

    def rec(i, rem):
        # enumerate x[i] given x[i+1..n-1]; feasible set is the integer
        # interval |x[i] + c| <= sqrt(rem / d[i]), scanned outward from a
        # float guess with a two-strike stop (interval is convex and the
        # guess is within one of its true center).
        if i < n - 1:
            c = mu[i][i + 1] * x[i + 1]
            for j in range(i + 2, n):
                c = c + mu[i][j] * x[j]
        else:
            c = ZERO
        center = int(round(-c.real()))
        for direction in (1, -1):
            m = center if direction == 1 else center - 1
            strikes = 0
            while strikes < 2:
                step = m + c
                newrem = rem - d[i] * step * step
                if newrem.sign() < 0:
                    strikes += 1
                else:
                    strikes = 0
                    x[i] = m
                    if i == 0:
                        if any(x):
                            out.append((tuple(x), bound - newrem))
                    else:
                        rec(i - 1, newrem)
                    x[i] = 0
                m += direction

    rec(n - 1, bound)
    # canonicalize signs: first nonzero coordinate positive, dedupe
    seen = {}
    for v, val in out:
        for c in v:
            if c > 0:
                key = v
                break
            if c < 0:
                key = tuple(-y for y in v)
                break
        if key not in seen:
            seen[key] = val
    return list(seen.items())


def coords_to_vec(c):
    """Integer 6-tuple -> vector pair in O^2."""
    return (FieldElement(c[0], c[1], c[2]), FieldElement(c[3], c[4], c[5]))


def minimal_vectors(g):
    """(mu, vectors) for a PD form Gram: exact minimum over O^2 - 0 and all
    +-classes attaining it (vectors returned sign-canonical)."""
    # seed with the best value over a small box
    seed = None
    from itertools import product
    for c in product((-1, 0, 1), repeat=6):
        if not any(c):
            continue
        v = coords_to_vec(c)
        val = gram_eval(g, v)
        if seed is None or (val - seed).sign() < 0:
            seed = val
    pairs = short_vectors(g, seed)
    mu = None
    for _, val in pairs:
        if mu is None or (val - mu).sign() < 0:
            mu = val
    vecs = [coords_to_vec(c) for c, val in pairs if (val - mu).sign() == 0]
    vecs.sort(key=vec_key)
    return mu, vecs


# -- perfect forms ------------------------------------------------------------------

class PerfectForm:
    """A perfect form: Gram normalized to minimum 1 plus its minimal vectors."""

    __slots__ = ("gram", "min_vectors", "_coords")

    def __init__(self, gram, min_vectors):
        self.gram = gram
        self.min_vectors = tuple(min_vectors)
        self._coords = None

    def coords(self):
        if self._coords is None:
            self._coords = [point_coords(v) for v in self.min_vectors]
        return self._coords

    def is_perfect(self):
        return frank(self.coords()) == 7

    def rays_key(self):
        return frozenset(vec_key(v) for v in self.min_vectors)


def _normalized(gram):
    mu, vecs = minimal_vectors(gram)
    g = gram_scale(mu.inverse(), gram)
    return PerfectForm(g, vecs)


def initial_perfect_form():
    """Deterministic Voronoi bootstrap from the identity point of V."""
    g = gram_add(gram_of_point(E1), gram_of_point(E2))
    for _ in range(100):
        pf = _normalized(g)
        if pf.is_perfect():
            return pf
        d = _orthogonal_direction(pf)
        if is_positive_semidefinite(d):
            d = gram_scale(FieldElement(-1), d)
        lam = _first_blocking_lambda(pf, d)
        g = gram_add(pf.gram, gram_scale(lam, d))
    raise RuntimeError("Voronoi bootstrap did not converge")


def _orthogonal_direction(pf):
    """Nonzero form direction pairing to zero with every minimal vector."""
    from .flinalg import nullspace
    basis = gram_basis()
    rows = []
    for x in pf.min_vectors:
        rows.append([gram_eval(b, x) for b in basis])
    # transpose: we want coefficients a with sum a_k <q(x), B_k> = 0 for all x
    ker = nullspace(rows)
    assert ker, "form is already perfect"
    a = ker[0]
    d = gram_zero()
    for c, b in zip(a, basis):
        d = gram_add(d, gram_scale(c, b))
    return d


def _first_blocking_lambda(pf, d):
    """Smallest lambda > 0 where a new vector reaches the minimum of g + lambda d.

    Exact; pf.gram has minimum 1 on pf.min_vectors.
    """
    g = pf.gram
    known = {vec_coords(v) for v in pf.min_vectors}
    known |= {tuple(-c for c in k) for k in known}
    one = ONE

    lam_pd = Fraction(0)
    lam_try = Fraction(1)
    candidates = []
    for _ in range(200):
        h = gram_add(g, gram_scale(FieldElement.from_rational(lam_try), d))
        ok_pd = True
        try:
            pairs = short_vectors(h, one) if is_positive_definite(h) else None
        except ValueError:
            pairs = None
        if pairs is None:
            ok_pd = False
        if not ok_pd:
            lam_try = (lam_pd + lam_try) / 2
            continue
        news = [(c, val) for c, val in pairs if c not in known]
        if not news:
            lam_pd = lam_try
            lam_try *= 2
            continue
        candidates = news
        break
    else:
        raise RuntimeError("no blocking vector found (dead direction)")

    # lambda*(x) = (1 - Q_g(x)) / Q_d(x) with Q_d(x) < 0
    def lam_star(c):
        x = coords_to_vec(c)
        qg = gram_eval(g, x)
        qd = gram_eval(d, x)
        assert qd.sign() < 0
        return (one - qg) * qd.inverse()

    lam_cur = None
    for c, _ in candidates:
        ls = lam_star(c)
        if lam_cur is None or (ls - lam_cur).sign() < 0:
            lam_cur = ls
    # tighten: re-enumerate at lam_cur until fixpoint
    for _ in range(100):
        h = gram_add(g, gram_scale(lam_cur, d))
        pairs = short_vectors(h, one)
        improved = False
        for c, _ in pairs:
            if c in known:
                continue
            ls = lam_star(c)
            if (ls - lam_cur).sign() < 0:
                lam_cur = ls
                improved = True
        if not improved:
            return lam_cur
    raise RuntimeError("flip did not stabilize")


def neighbor(pf, facet_rays):
    """The unique perfect form across the facet spanned by facet_rays."""
    normal = facet_normal(pf, facet_rays)
    if is_positive_semidefinite(normal):
        raise DeadEndError("facet normal direction lies in the closed cone")
    lam = _first_blocking_lambda(pf, normal)
    g2 = gram_add(pf.gram, gram_scale(lam, normal))
    pf2 = _normalized(g2)
    assert pf2.is_perfect(), "neighbor form is not perfect"
    return pf2


def facet_normal(pf, facet_rays):
    """Form vanishing on the facet rays and nonnegative on all min vectors."""
    from .flinalg import nullspace
    basis = gram_basis()
    rows = [[gram_eval(b, x) for b in basis] for x in facet_rays]
    ker = nullspace(rows)
    # pick a kernel combination not vanishing on the whole pyramid and with
    # consistent sign; for a facet the generic kernel vector works
    others = [x for x in pf.min_vectors
              if vec_key(x) not in {vec_key(r) for r in facet_rays}]
    for a in ker:
        d = gram_zero()
        for c, b in zip(a, basis):
            d = gram_add(d, gram_scale(c, b))
        vals = [gram_eval(d, x).sign() for x in others]
        # inward normal: positive on the off-facet minimal vectors, so the
        # flip y + lambda * n pushes them off the minimum while the facet
        # vectors stay at 1 and vectors beyond the facet descend to it
        if all(s > 0 for s in vals):
            return d
        if all(s < 0 for s in vals):
            return gram_scale(FieldElement(-1), d)
    raise ValueError("rays do not span a facet of the pyramid")


# -- cones, equivalence, stabilizers ------------------------------------------------

def cone_rays_sorted(vents):
    rays = sorted({vec_key(ray_rep(v)): ray_rep(v) for v in vents}.values(), key=vec_key)
    return tuple(rays)


def cone_dim(rays):
    return frank([point_coords(r) for r in rays])


def cone_is_interior(rays):
    """Does the cone spanned by these rays meet the open cone C?"""
    g = gram_zero()
    for r in rays:
        g = gram_add(g, gram_of_point(r))
    return is_positive_definite(g)


def cone_invariant(rays):
    dets = []
    n = len(rays)
    for i in range(n):
        for j in range(i + 1, n):
            d = det2(rays[i], rays[j]).norm()
            dets.append(abs(d.numerator))
    return (n, tuple(sorted(dets)))


def complete_to_unimodular(u):
    """w with det(u | w) a unit, for primitive u in O^2."""
    x, y = u
    if y.is_zero():
        # x is a unit
        return (ZERO, ONE)
    if x.is_zero():
        return (-ONE, ZERO)
    g, a, b = _bezout(x, y)
    assert abs(g.norm()) == 1, "vector is not primitive"
    return (-b * g.inverse(), a * g.inverse())


def _bezout(x, y):
    """(g, a, b) with a x + b y = g and (g) = (x) + (y)."""
    from .ideals import bezout
    return bezout(x, y)


def _all_proportional(rays):
    r0 = rays[0]
    return all(det2(r0, r).is_zero() for r in rays[1:])


def equivalences(rays1, rays2, first_only=True):
    """GL_2(O) elements with gamma . rays1 = rays2 (as +-ray sets).

    Complete search: any such gamma maps the chosen base pair of rays1 to
    signed rays of rays2.
    """
    set2 = {vec_key(r) for r in rays2}
    if len(rays1) != len(rays2):
        return []
    out = []

    def check(gamma):
        if not gamma.is_integral():
            return False
        if abs(gamma.det().norm()) != 1:
            return False
        image = {vec_key(ray_rep(gamma.apply(r))) for r in rays1}
        return image == set2

    if _all_proportional(rays1):
        if not _all_proportional(rays2):
            return []
        u = rays1[0]
        B = Mat2.from_columns(u, complete_to_unimodular(u))
        Binv = B.inverse()
        for target in rays2:
            Bp = Mat2.from_columns(target, complete_to_unimodular(target))
            gamma = Bp * Binv
            if check(gamma):
                out.append(gamma)
                if first_only:
                    return out
        return out

    # base pair with nonzero determinant
    base = None
    n = len(rays1)
    for i in range(n):
        for j in range(i + 1, n):
            if not det2(rays1[i], rays1[j]).is_zero():
                base = (i, j)
                break
        if base:
            break
    P1 = Mat2.from_columns(rays1[base[0]], rays1[base[1]])
    P1inv = P1.inverse()
    for a in range(len(rays2)):
        for b in range(len(rays2)):
            if a == b:
                continue
            if det2(rays2[a], rays2[b]).is_zero():
                continue
            for sa in (1, -1):
                for sb in (1, -1):
                    va = (sa * rays2[a][0], sa * rays2[a][1])
                    vb = (sb * rays2[b][0], sb * rays2[b][1])
                    gamma = Mat2.from_columns(va, vb) * P1inv
                    if check(gamma):
                        out.append(gamma)
                        if first_only:
                            return out
    return out


def equivalent(rays1, rays2):
    """Some gamma with gamma rays1 = rays2, or None."""
    if cone_invariant(rays1) != cone_invariant(rays2):
        return None
    found = equivalences(rays1, rays2, first_only=True)
    return found[0] if found else None


def stabilizer(rays):
    """All gamma in GL_2(O) preserving the +-ray set (finite for interior cones)."""
    return equivalences(rays, rays, first_only=False)


def ray_permutation(gamma, rays):
    """Permutation induced by gamma on the (ordered) ray list, or None."""
    keys = {vec_key(r): i for i, r in enumerate(rays)}
    perm = []
    for r in rays:
        img = ray_rep(gamma.apply(r))
        k = vec_key(img)
        if k not in keys:
            return None
        perm.append(keys[k])
    return tuple(perm)


def perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        ln = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            ln += 1
        if ln % 2 == 0:
            sign = -sign
    return sign


def orientation_sign(gamma, rays):
    """Sign of gamma acting on the span of the cone: rays map to rays with
    positive scalings, so the sign is that of the induced permutation."""
    perm = ray_permutation(gamma, rays)
    assert perm is not None
    return perm_sign(perm)


# -- fan classification ---------------------------------------------------------------

class ConeOrbit:
    __slots__ = ("dim", "rays", "interior", "stab", "stab_signs", "facets")

    def __init__(self, dim, rays, interior):
        self.dim = dim
        self.rays = rays              # ordered tuple of sign-canonical vectors
        self.interior = interior
        self.stab = None              # list of Mat2 (interior cones, dims 2..4)
        self.stab_signs = None        # orientation character values
        self.facets = None            # for dims 3,4: list per dropped index

    def stab_order(self):
        return len(self.stab) if self.stab is not None else None


class PyramidData:
    __slots__ = ("form", "rays", "facets", "faces")

    def __init__(self, form, rays):
        self.form = form              # PerfectForm
        self.rays = rays
        self.facets = []              # list of dicts: rayset, normal, neighbor
        self.faces = {}               # frozenset(keys) -> (dim, orbit_id, transporter)


class FanDatabase:
    """Orbit representatives, stabilizers, incidence, and location helpers."""

    def __init__(self):
        self.pyramids = []            # list of PyramidData
        self.cones = {k: [] for k in range(1, 8)}   # dim -> [ConeOrbit]

    # ---- counts and access

    def orbit_counts(self):
        return tuple(len(self.cones[k]) for k in range(1, 8))

    def interior_orbits(self, dim):
        return [i for i, c in enumerate(self.cones[dim]) if c.interior]


def pyramid_facets(pf):
    """Facets of the perfect pyramid as ray index sets (within min_vectors)."""
    rays = pf.min_vectors
    n = len(rays)
    coords = pf.coords()
    if n == 7:
        return [frozenset(range(n)) - {i} for i in range(n)]
    from itertools import combinations
    from .flinalg import nullspace
    basis = gram_basis()
    rows_all = [[gram_eval(b, x) for b in basis] for x in rays]
    facets = set()
    for sub in combinations(range(n), 6):
        sel = [coords[i] for i in sub]
        if frank(sel) != 6:
            continue
        ker = nullspace([rows_all[i] for i in sub])
        for a in ker:
            d = gram_zero()
            for c, b in zip(a, basis):
                d = gram_add(d, gram_scale(c, b))
            signs = [gram_eval(d, rays[i]).sign() for i in range(n)]
            if all(s >= 0 for s in signs) or all(s <= 0 for s in signs):
                face = frozenset(i for i in range(n) if signs[i] == 0)
                if len(face) >= 6:
                    facets.add(face)
    return sorted(facets, key=sorted)


def classify_fan(progress=None):
    """Enumerate perfect-form orbits by the neighbor walk and build the fan."""
    def log(msg):
        if progress:
            progress(msg)

    pf0 = initial_perfect_form()
    pyramid_reps = [pf0]
    queue = [0]
    facet_info = {}   # (pyr_idx, facet frozenset) -> (neighbor orbit, gamma)
    while queue:
        idx = queue.pop(0)
        pf = pyramid_reps[idx]
        log(f"pyramid {idx}: {len(pf.min_vectors)} minimal vectors")
        for facet in pyramid_facets(pf):
            frays = [pf.min_vectors[i] for i in sorted(facet)]
            if not cone_is_interior(frays):
                raise DeadEndError("pyramid facet in the boundary")
            nb = neighbor(pf, frays)
            hit = None
            for j, other in enumerate(pyramid_reps):
                gam = equivalent(other.min_vectors, nb.min_vectors)
                if gam is not None:
                    hit = (j, gam)
                    break
            if hit is None:
                pyramid_reps.append(nb)
                hit = (len(pyramid_reps) - 1, Mat2.identity())
                queue.append(len(pyramid_reps) - 1)
                log(f"  new pyramid orbit {hit[0]}")
            facet_info[(idx, facet)] = hit

    fan = FanDatabase()
    # pyramid data with facet normals and neighbors
    for idx, pf in enumerate(pyramid_reps):
        rays = pf.min_vectors
        pd = PyramidData(pf, rays)
        for facet in pyramid_facets(pf):
            frays = [rays[i] for i in sorted(facet)]
            nrm = facet_normal(pf, frays)
            pd.facets.append({
                "rayset": facet,
                "normal": nrm,
                "neighbor": facet_info[(idx, facet)],
            })
        fan.pyramids.append(pd)

    # enumerate all faces of all pyramid reps, classify into orbits per dim
    # faces of a pyramid: itself plus all subsets of each (simplicial) facet
    log("collecting faces")
    all_faces = {}
    for idx, pd in enumerate(fan.pyramids):
        rays = pd.rays
        seen_sets = set()
        face_sets = [frozenset(range(len(rays)))]
        from itertools import combinations
        for f in pd.facets:
            fr = sorted(f["rayset"])
            for k in range(1, len(fr) + 1):
                for sub in combinations(fr, k):
                    face_sets.append(frozenset(sub))
        for fs in face_sets:
            if fs in seen_sets:
                continue
            seen_sets.add(fs)
            frays = cone_rays_sorted([rays[i] for i in sorted(fs)])
            key = frozenset(vec_key(r) for r in frays)
            all_faces.setdefault(key, (frays, []))[1].append((idx, fs))

    # orbit classification per dimension
    log(f"classifying {len(all_faces)} distinct faces")
    buckets = {}
    face_orbit = {}
    for key, (frays, owners) in sorted(all_faces.items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))):
        dim = cone_dim(frays)
        inv = (dim,) + cone_invariant(frays)
        hit = None
        for oid in buckets.get(inv, []):
            rep = fan.cones[dim][oid]
            gam = equivalent(rep.rays, frays)
            if gam is not None:
                hit = (oid, gam)
                break
        if hit is None:
            interior = cone_is_interior(frays)
            fan.cones[dim].append(ConeOrbit(dim, frays, interior))
            oid = len(fan.cones[dim]) - 1
            buckets.setdefault(inv, []).append(oid)
            hit = (oid, Mat2.identity())
        face_orbit[key] = (dim, hit[0], hit[1])

    # attach face directory to pyramids
    for idx, pd in enumerate(fan.pyramids):
        rays = pd.rays
        seen = set()
        from itertools import combinations
        face_sets = [frozenset(range(len(rays)))]
        for f in pd.facets:
            fr = sorted(f["rayset"])
            for k in range(1, len(fr) + 1):
                for sub in combinations(fr, k):
                    face_sets.append(frozenset(sub))
        for fs in face_sets:
            if fs in seen:
                continue
            seen.add(fs)
            frays = cone_rays_sorted([rays[i] for i in sorted(fs)])
            key = frozenset(vec_key(r) for r in frays)
            pd.faces[key] = face_orbit[key]

    # normalize the 2-cone representatives to the classical ones
    _normalize_two_cones(fan)

    # stabilizers and orientation characters for interior cones of dim 2..4
    log("computing stabilizers")
    for dim in (2, 3, 4):
        for orbit in fan.cones[dim]:
            if not orbit.interior:
                continue
            gams = stabilizer(orbit.rays)
            orbit.stab = gams
            orbit.stab_signs = [orientation_sign(g, orbit.rays) for g in gams]

    # facet incidence for dims 3 and 4 (all simplicial)
    log("computing incidence")
    for dim in (3, 4):
        for orbit in fan.cones[dim]:
            if not orbit.interior:
                orbit.facets = []
                continue
            inc = []
            for i in range(len(orbit.rays)):
                sub = [orbit.rays[j] for j in range(len(orbit.rays)) if j != i]
                sub = cone_rays_sorted(sub)
                if not cone_is_interior(sub):
                    inc.append(None)
                    continue
                hit = None
                for oid, rep in enumerate(fan.cones[dim - 1]):
                    gam = equivalent(rep.rays, sub)
                    if gam is not None:
                        hit = (oid, gam)
                        break
                assert hit is not None, "facet not matched to an orbit"
                inc.append(hit)
            orbit.facets = inc
    log("fan complete")
    return fan


def _normalize_two_cones(fan):
    """Use (e1, e2) and (e1, t e1) as the 2-cone representatives."""
    std_int = cone_rays_sorted([E1, E2])
    std_bnd = cone_rays_sorted([E1, vec(FieldElement(0, 1, 0), 0)])
    for orbit in fan.cones[2]:
        target = std_int if orbit.interior else std_bnd
        gam = equivalent(orbit.rays, target)
        if gam is not None:
            orbit.rays = target
    for orbit in fan.cones[3]:
        pass


# -- serialization ----------------------------------------------------------------

def _fe_json(x):
    return [x.n[0], x.n[1], x.n[2], x.d]


def _fe_from_json(v):
    return FieldElement(v[0], v[1], v[2], v[3])


def _vec_json(v):
    return [_fe_json(v[0]), _fe_json(v[1])]


def _vec_from_json(v):
    return (_fe_from_json(v[0]), _fe_from_json(v[1]))


def _mat_json(m):
    return [_fe_json(m.a), _fe_json(m.b), _fe_json(m.c), _fe_json(m.d)]


def _mat_from_json(v):
    return Mat2(_fe_from_json(v[0]), _fe_from_json(v[1]),
                _fe_from_json(v[2]), _fe_from_json(v[3]))


def _gram_json(g):
    return [[_fe_json(g[i][j]) for j in range(6)] for i in range(6)]


def _gram_from_json(v):
    return [[_fe_from_json(v[i][j]) for j in range(6)] for i in range(6)]


def fan_to_json(fan):
    data = {"pyramids": [], "cones": {}}
    for pd in fan.pyramids:
        data["pyramids"].append({
            "gram": _gram_json(pd.form.gram),
            "rays": [_vec_json(r) for r in pd.rays],
            "facets": [{
                "rayset": sorted(f["rayset"]),
                "normal": _gram_json(f["normal"]),
                "neighbor": [f["neighbor"][0], _mat_json(f["neighbor"][1])],
            } for f in pd.facets],
            "faces": [{"dim": v[0], "orbit": v[1], "transporter": _mat_json(v[2])}
                      for _, v in sorted(pd.faces.items(), key=lambda kv: str(kv[0]))],
        })
    for dim, orbits in fan.cones.items():
        data["cones"][str(dim)] = [{
            "rays": [_vec_json(r) for r in o.rays],
            "interior": o.interior,
            "stab": [_mat_json(g) for g in o.stab] if o.stab is not None else None,
            "stab_signs": o.stab_signs,
            "facets": [([f[0], _mat_json(f[1])] if f else None) for f in o.facets]
            if o.facets is not None else None,
        } for o in orbits]
    return data


def save_fan(fan, path):
    with open(path, "w") as fh:
        json.dump(fan_to_json(fan), fh, sort_keys=True)


_FAN_CACHE = None
_FAN_PICKLE_VERSION = 1


def get_fan(progress=None, cache_path=None):
    """The classified fan, computed once per process.

    cache_path (or KOECHERLAB_FAN_CACHE in the environment) points at a
    pickle used to skip the classification walk across processes.
    """
    global _FAN_CACHE
    if _FAN_CACHE is not None:
        return _FAN_CACHE
    import os
    import pickle
    path = cache_path or os.environ.get("KOECHERLAB_FAN_CACHE")
    if path and os.path.exists(path):
        try:
            with open(path, "rb") as fh:
                version, fan = pickle.load(fh)
            if version == _FAN_PICKLE_VERSION:
                _FAN_CACHE = fan
                return fan
        except Exception:
            pass
    _FAN_CACHE = classify_fan(progress=progress)
    if path:
        with open(path, "wb") as fh:
            pickle.dump((_FAN_PICKLE_VERSION, _FAN_CACHE), fh)
    return _FAN_CACHE


# -- cone location ------------------------------------------------------------------

class PointCombination:
    """A point of the closed cone given as sum of coefficients times q(x)."""

    __slots__ = ("terms",)

    def __init__(self, terms):
        # terms: list of (Fraction coefficient > 0, vector pair)
        self.terms = [(Fraction(c), v) for c, v in terms]

    def pair_with_gram(self, g, transporter=None):
        """<p, form with Gram g>, optionally with the form transported by
        `transporter` (a Mat2): <p, gamma . n> = <q(gamma^-1 x), n> summed."""
        tot = ZERO
        for c, v in self.terms:
            x = v if transporter is None else transporter.apply(v)
            tot = tot + FieldElement.from_rational(c) * gram_eval_rational(g, x)
        return tot


def gram_eval_rational(g, x):
    """x^T g x for a vector pair with possibly non-integral entries."""
    den = 1
    for c in x:
        den = den * c.d // _igcd(den, c.d)
    y = (x[0] * den, x[1] * den)
    val = gram_eval(g, y)
    return val * FieldElement.from_rational(Fraction(1, den * den))


def _igcd(a, b):
    from math import gcd
    return gcd(a, b)


def _cmp_to_key(cmp):
    class K:
        __slots__ = ("v",)

        def __init__(self, v):
            self.v = v

        def __lt__(self, other):
            return cmp(self.v, other.v) < 0

    return K


class ConeLocator:
    """Walks the fan to the cone containing a given point of C.

    The target is first pre-reduced by the left HNF transporter of one of
    its vector pairs, because raw Hecke translates sit far from the
    standard cones and walks to them are long (same phenomenon the caching
    of normal forms addresses).  The walk itself follows the straight
    segment from an interior point of the starting pyramid, crossing the
    facet with the smallest exact crossing parameter; the segment meets
    each pyramid in an interval, so honest walks never revisit a pyramid,
    and rare touch-point stalls restart with a perturbed interior point.
    """

    def __init__(self, fan):
        self.fan = fan

    def _walk(self, terms, weights, max_steps=3000):
        """terms: list of (int coeff > 0, integral vector pair)."""
        fan = self.fan
        idx, delta = 0, Mat2.identity()
        p0 = [(w, r) for w, r in zip(weights, fan.pyramids[0].rays)]
        visited = {(idx, delta.key())}
        for _ in range(max_steps):
            pd = fan.pyramids[idx]
            dinv = delta.inverse()
            moved_t = [(c, dinv.apply(v)) for c, v in terms]
            moved_0 = [(c, dinv.apply(v)) for c, v in p0]
            crossing = []
            for fidx, f in enumerate(pd.facets):
                g = f["normal"]
                v = ZERO
                for c, x in moved_t:
                    v = v + c * gram_eval(g, x)
                if v.sign() < 0:
                    v0 = ZERO
                    for c, x in moved_0:
                        v0 = v0 + c * gram_eval(g, x)
                    den = v0 - v
                    if den.sign() <= 0:
                        return None  # segment does not cross: degenerate start
                    crossing.append((v0, den, fidx))
            if not crossing:
                return idx, delta

            def less(a, b):
                return (a[0] * b[1] - b[0] * a[1]).sign() < 0

            order = sorted(range(len(crossing)), key=_cmp_to_key(
                lambda i, j: -1 if less(crossing[i], crossing[j])
                else (1 if less(crossing[j], crossing[i]) else 0)))
            moved = False
            for oi in order:
                fidx = crossing[oi][2]
                nb_idx, nb_gam = pd.facets[fidx]["neighbor"]
                key = (nb_idx, (delta * nb_gam).key())
                if key in visited:
                    continue
                visited.add(key)
                idx, delta = nb_idx, delta * nb_gam
                moved = True
                break
            if not moved:
                return None
        return None

    def locate_pyramid(self, point):
        """(orbit index, delta) with the point in delta . P_orbit (closed)."""
        terms = []
        for c, v in point.terms:
            num = Fraction(c)
            assert num > 0 and num.denominator == 1
            assert v[0].is_integral() and v[1].is_integral()
            terms.append((int(num), v))
        # pre-reduce by the normal form of an independent vector pair
        from .formspace import normal_form
        pre = Mat2.identity()
        vecs = [v for _, v in terms]
        pair = None
        for i in range(len(vecs)):
            for j in range(i + 1, len(vecs)):
                if not det2(vecs[i], vecs[j]).is_zero():
                    pair = (i, j)
                    break
            if pair:
                break
        if pair is not None:
            M = Mat2.from_columns(vecs[pair[0]], vecs[pair[1]])
            _, T = normal_form(M)
            pre = T
            terms = [(c, ray_rep(T.apply(v))) for c, v in terms]
        base_weights = [k + 1 for k in range(len(self.fan.pyramids[0].rays))]
        for attempt in range(6):
            weights = [w + attempt * (k * k + 1) for k, w in enumerate(base_weights)]
            hit = self._walk(terms, weights)
            if hit is not None:
                idx, delta = hit
                return idx, pre.inverse() * delta
        raise RuntimeError("cone location failed after perturbed restarts")

    def minimal_cone(self, point):
        """Rays of the smallest fan cone containing the point, with the
        (dim, orbit, transporter) data of that cone."""
        idx, delta = self.locate_pyramid(point)
        pd = self.fan.pyramids[idx]
        dinv = delta.inverse()
        moved_t = [(int(Fraction(c)), ray_rep(dinv.apply(v))) for c, v in point.terms]
        on = []
        for f in pd.facets:
            val = ZERO
            for c, x in moved_t:
                val = val + c * gram_eval(f["normal"], x)
            s = val.sign()
            assert s >= 0, "located pyramid does not contain the point"
            if s == 0:
                on.append(f["rayset"])
        rays_idx = set(range(len(pd.rays)))
        for s in on:
            rays_idx &= s
        base_rays = cone_rays_sorted([pd.rays[i] for i in sorted(rays_idx)])
        key = frozenset(vec_key(r) for r in base_rays)
        dim, orbit, gam = pd.faces[key]
        moved = cone_rays_sorted([ray_rep(delta.apply(r)) for r in base_rays])
        # transporter from the orbit representative to the located cone
        return moved, (dim, orbit, delta * gam)
