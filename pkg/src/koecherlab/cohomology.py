"""H^4 of Gamma_0(n) via the quotient Koecher complex over F_p.

Cells in dimension k (k = 2, 3, 4 cones) are pairs (cone orbit, P^1 label)
modulo the right stabilizer action; a cell dies when the stabilizer of its
(cone, label) pair contains an orientation-reversing element.  Boundary
maps transport orientations by ray permutations (group elements move rays
to rays with positive scalings, so only the permutation sign matters).

H^4(Gamma_0(n)) is the homology at the 3-cone level, with coefficients in
F_p (p = 12379 by default, large enough to dodge small torsion).
"""

from __future__ import annotations

import numpy as np

from .flinalg import nullspace_mod, rank_mod, rref_mod, solve_mod
from .formspace import Mat2, det2, ray_rep, vec_key
from .perfect import equivalent, perm_sign, ray_permutation


class UnknownTypeError(ValueError):
    """Level factorization type outside the Eisenstein table."""


EISENSTEIN_TABLE = {
    (1,): 3,        # p
    (2,): 5,        # p^2
    (1, 1): 7,      # pq
    (3,): 7,        # p^3
    (1, 2): 11,     # pq^2
    (1, 1, 1): 15,  # pqr
}


def eisenstein_dimension(level):
    t = level.factorization_type()
    if t not in EISENSTEIN_TABLE:
        raise UnknownTypeError(f"no Eisenstein prediction for type {t}")
    return EISENSTEIN_TABLE[t]


class QuotientComplex:
    """The three relevant chain groups and boundary maps for one level."""

    def __init__(self, fan, level, p=12379):
        self.fan = fan
        self.level = level
        self.p = p
        self.two_orbit = next(i for i, o in enumerate(fan.cones[2]) if o.interior)
        self.cells = {}        # dim -> list of (orbit_idx, canonical label)
        self.cell_index = {}   # (dim, orbit_idx, label) -> column index
        self.directory = {}    # (dim, orbit_idx, label) -> (canon, phi, s) or None (killed)
        for dim in (2, 3, 4):
            self._build_cells(dim)
        self._incidence = {}
        for dim in (3, 4):
            self._build_incidence(dim)
        self.d4 = self._boundary_matrix(4)
        self.d3 = self._boundary_matrix(3)
        assert (self.d3 @ self.d4 % p == 0).all(), "d o d != 0"
        self._homology = None
        # transporters gamma-hat per (3-orbit, vertex pair) for lift matrices
        self._edge_transport = {}
        two_rep = fan.cones[2][self.two_orbit].rays
        for oi in fan.interior_orbits(3):
            rays = fan.cones[3][oi].rays
            for (i, j) in ((0, 1), (0, 2), (1, 2)):
                if det2(rays[i], rays[j]).is_zero():
                    self._edge_transport[(oi, i, j)] = None
                    continue
                pair = _sorted_rays([rays[i], rays[j]])
                gam = equivalent(two_rep, pair)
                assert gam is not None
                self._edge_transport[(oi, i, j)] = gam
        self._lift_cache = {}

    # ---- cells -------------------------------------------------------------

    def _build_cells(self, dim):
        fan, level, p = self.fan, self.level, self.p
        cells = []
        for oi in fan.interior_orbits(dim):
            orbit = fan.cones[dim][oi]
            stab = orbit.stab
            signs = orbit.stab_signs
            points = level.p1_points()
            done = set()
            for u in points:
                ku = _lkey(u)
                if ku in done:
                    continue
                # BFS over the stabilizer action, tracking transporter signs
                reach = {ku: (u, 1, Mat2.identity())}
                frontier = [u]
                killed = False
                while frontier:
                    v = frontier.pop()
                    kv = _lkey(v)
                    _, sgn_v, s_v = reach[kv]
                    for s, sg in zip(stab, signs):
                        w = level.act(v, s)
                        kw = _lkey(w)
                        nsgn = sgn_v * sg
                        ns = s_v * s
                        if kw in reach:
                            if reach[kw][1] != nsgn:
                                killed = True
                        else:
                            reach[kw] = (w, nsgn, ns)
                            frontier.append(w)
                canon_key = min(reach)
                canon = reach[canon_key][0]
                # renormalize transporters relative to the canonical point;
                # killed cells keep their transporters (lift matrices need
                # them) but carry alive=False so they vanish in the module
                _, sgn0, s0 = reach[canon_key]
                s0inv = s0.inverse()
                for kw, (w, sg, s) in reach.items():
                    done.add(kw)
                    self.directory[(dim, oi, kw)] = (canon, sg * sgn0,
                                                     s0inv * s, not killed)
                if not killed:
                    cells.append((oi, canon))
        self.cells[dim] = cells
        for idx, (oi, u) in enumerate(cells):
            self.cell_index[(dim, oi, _lkey(u))] = idx

    def _build_incidence(self, dim):
        fan = self.fan
        for oi in fan.interior_orbits(dim):
            orbit = fan.cones[dim][oi]
            entries = []
            for i in range(len(orbit.rays)):
                hit = orbit.facets[i]
                if hit is None:
                    entries.append(None)
                    continue
                tgt, gam = hit
                induced = [orbit.rays[j] for j in range(len(orbit.rays)) if j != i]
                image = [ray_rep(gam.apply(r)) for r in fan.cones[dim - 1][tgt].rays]
                keys = {vec_key(r): k for k, r in enumerate(induced)}
                perm = tuple(keys[vec_key(r)] for r in image)
                sign = (-1) ** i * perm_sign(perm)
                entries.append((tgt, gam, sign))
            self._incidence[(dim, oi)] = entries

    def _boundary_matrix(self, dim):
        p = self.p
        ncols = len(self.cells[dim])
        nrows = len(self.cells[dim - 1])
        mat = np.zeros((nrows, ncols), dtype=np.int64)
        for col, (oi, u) in enumerate(self.cells[dim]):
            for ent in self._incidence[(dim, oi)]:
                if ent is None:
                    continue
                tgt, gam, sign = ent
                w = self.level.act(u, gam)
                hit = self.directory.get((dim - 1, tgt, _lkey(w)))
                if hit is None or not hit[3]:
                    continue  # killed cell: zero in the quotient module
                canon, phi, _, _ = hit
                row = self.cell_index[(dim - 1, tgt, _lkey(canon))]
                mat[row, col] = (mat[row, col] + sign * phi) % p
        return mat

    # ---- homology ------------------------------------------------------------

    def h4_dimension(self):
        z = len(self.cells[3]) - rank_mod(self.d3, self.p)
        b = rank_mod(self.d4, self.p)
        return z - b

    def homology(self):
        """(basis, project): basis rows are cycle representatives of H^4;
        project maps a cycle vector to its H-coordinates."""
        if self._homology is not None:
            return self._homology
        p = self.p
        zbasis = nullspace_mod(self.d3, p)              # rows
        bmat = self.d4.T % p                            # rows span the image
        rr, piv = rref_mod(bmat, p)
        brows = rr[:len(piv)]
        # select Z-rows extending the span of B
        chosen = []
        cur = [list(r) for r in brows]
        cur_rank = len(piv)
        for row in zbasis:
            cand = np.array(cur + [list(row)], dtype=np.int64)
            r = rank_mod(cand, p)
            if r > cur_rank:
                chosen.append(row)
                cur.append(list(row))
                cur_rank = r
        hbasis = np.array(chosen, dtype=np.int64) if chosen else np.zeros((0, len(self.cells[3])), dtype=np.int64)
        solver_mat = np.concatenate([hbasis, brows], axis=0).T if (len(chosen) + len(brows)) else np.zeros((len(self.cells[3]), 0), dtype=np.int64)

        def project(v):
            if hbasis.shape[0] == 0:
                return np.zeros(0, dtype=np.int64)
            sol = solve_mod(solver_mat, v, p)
            assert sol is not None, "vector is not a cycle in the span"
            return sol[:hbasis.shape[0]] % p

        self._homology = (hbasis, project)
        return self._homology

    def is_cycle(self, v):
        return (self.d3 @ (np.asarray(v, dtype=np.int64) % self.p) % self.p == 0).all()

    # ---- bridges to the sharbly machinery -------------------------------------

    def cell_sharbly(self, oi, u):
        """Concrete 1-sharbly data for the 3-cell (orbit oi, canonical label u).

        Returns (g, vertices, lifts): g the coset lift, vertices the ordered
        images of the representative rays, lifts a dict (i, j) -> Mat2 for
        nondegenerate edges carrying the Gamma-equivariant lift matrices.
        """
        g = self.level.lift_label(u)
        rays = self.fan.cones[3][oi].rays
        vertices = [ray_rep(g.apply(r)) for r in rays]
        lifts = {}
        for (i, j) in ((0, 1), (0, 2), (1, 2)):
            gam = self._edge_transport[(oi, i, j)]
            if gam is None:
                lifts[(i, j)] = None
                continue
            w = self.level.act(u, gam)
            ent = self.directory.get((2, self.two_orbit, _lkey(w)))
            assert ent is not None
            canon, phi, s, alive = ent
            lifts[(i, j)] = g * gam * s.inverse()
        return g, vertices, lifts

    def cone_cell_value(self, oi, g, dim=3):
        """(cell index, phi) for the concrete cone g . rep(oi), or None if killed."""
        u = self.level.label_of_matrix(g)
        ent = self.directory.get((dim, oi, _lkey(u)))
        if ent is None or not ent[3]:
            return None
        canon, phi, _, _ = ent
        return self.cell_index[(dim, oi, _lkey(canon))], phi


def _lkey(label):
    return (label[0].key(), label[1].key())


def _sorted_rays(rays):
    return tuple(sorted((ray_rep(r) for r in rays), key=vec_key))
