"""Weierstrass box search: scan a_i in S_B for curves of small conductor.

The scan is a float64 prefilter over separable embedding values of the
discriminant (exact inputs, guard band around the threshold), followed by
an exact int64 recomputation of survivors, a smoothness/radical filter on
|N(Delta)| (a prime ideal of norm above the conductor bound dividing the
discriminant cannot be absorbed, since non-minimality needs twelfth
powers), and exact conductors for the finalists.

Soundness of the prefilter: all inputs are integers below 2^21, so the
embedding evaluations carry relative error ~1e-14; a true |N(4 Delta)|
at most 64e7 computes below 64e7 + 10, and anything computed below the
band is recomputed exactly, so no curve inside the bound is ever lost.
"""

from __future__ import annotations

import itertools
import time

import numpy as np

from .field import FieldElement
from .curves import WeierstrassCurve, conductor, isomorphic
from .ideals import factor_rational_prime


def _embeddings():
    th = FieldElement(0, 1, 0).real(200)
    zc = FieldElement(0, 1, 0).complex()
    return th, zc


def coeff_box(B):
    """The (2B+1)^3 coefficient triples of S_B, as an int64 array (n, 3)."""
    return np.array(list(itertools.product(range(-B, B + 1), repeat=3)),
                    dtype=np.int64)


def _fmul(a, b):
    c0 = a[..., 0] * b[..., 0]
    c1 = a[..., 0] * b[..., 1] + a[..., 1] * b[..., 0]
    c2 = a[..., 0] * b[..., 2] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 0]
    m3 = a[..., 1] * b[..., 2] + a[..., 2] * b[..., 1]
    m4 = a[..., 2] * b[..., 2]
    return np.stack([c0 - m3 - m4, c1 - m4, c2 + m3 + m4], axis=-1)


def _norm_int(a):
    c0, c1, c2 = a[..., 0], a[..., 1], a[..., 2]
    return (c0 * (c0 * (c0 + c1 + c2) + c2 * (c1 + c2))
            + c2 * (c1 * (c0 + c1 + c2) + c2 * c2)
            - (c1 + c2) * (c1 * (c1 + c2) - c0 * c2))


def _emb_real(a, th):
    return a[..., 0] + a[..., 1] * th + a[..., 2] * th * th


def _emb_cplx(a, zc):
    return a[..., 0] + a[..., 1] * zc + a[..., 2] * (zc * zc)


def spf_sieve(limit):
    """Smallest prime factor table up to limit."""
    spf = np.zeros(limit + 1, dtype=np.int32)
    spf[0] = spf[1] = 1
    for i in range(2, limit + 1):
        if spf[i] == 0:
            spf[i::i][spf[i::i] == 0] = i
    return spf


def _delta4_exact(a1, a3, A2, A4, A6):
    """4*Delta coordinates, int64 exact, for fixed (a1, a3) and arrays of
    (a2, a4, a6) rows (each (n, 3))."""
    a1 = a1[None, :]
    a3 = a3[None, :]
    b2 = _fmul(a1, a1) + 4 * A2
    b4 = 2 * A4 + _fmul(a1, a3)
    b6 = _fmul(a3, a3) + 4 * A6
    b2sq = _fmul(b2, b2)
    d4 = (-_fmul(_fmul(b2sq, b2), b6) + _fmul(b2sq, _fmul(b4, b4))
          - 32 * _fmul(_fmul(b4, b4), b4) - 108 * _fmul(b6, b6)
          + 36 * _fmul(b2, _fmul(b4, b6)))
    return d4


class BoxSearchResult:
    def __init__(self):
        self.scanned = 0
        self.prefilter_hits = 0
        self.disc_hits = 0
        self.radical_hits = 0
        self.curves = []          # (coeff-tuple-of-5-triples, conductor norm)
        self.classes = []         # list of lists of curve indices
        self.elapsed = 0.0


def search_box(B=2, disc_bound=10 ** 7, cond_norm_bound=20000,
               progress=None, field_prime=None):
    """All curves with coefficients in S_B, |N(Delta)| <= disc_bound nonzero,
    and conductor norm <= cond_norm_bound, grouped into isomorphism classes.
    """
    t_start = time.time()
    res = BoxSearchResult()
    S = coeff_box(B)
    n = len(S)
    th, zc = _embeddings()
    Sf = S.astype(np.float64)
    band = 64.0 * disc_bound + 16.0

    # float embeddings of b-quantities, per slice
    def emb_pair(arr):
        return _emb_real(arr, th), _emb_cplx(arr.astype(np.complex128), zc)

    # symmetry (a1,a2,a3,a4,a6) -> (-a1,a2,-a3,a4,-a6) preserves everything;
    # scan canonical (a1, a3) pairs (first nonzero coordinate of the joined
    # tuple positive) with weight two, and the zero pair with the a6-halving
    pairs = []
    for i in range(n):
        for j in range(n):
            joined = tuple(S[i]) + tuple(S[j])
            if all(v == 0 for v in joined):
                pairs.append((i, j, 0))      # special slice, handled below
                continue
            first = next(v for v in joined if v != 0)
            if first > 0:
                pairs.append((i, j, 2))

    survivors = []
    t_last = time.time()
    for cnt, (i, j, weight) in enumerate(pairs):
        a1 = S[i]
        a3 = S[j]
        a1f, a1c = emb_pair(Sf[i][None, :])
        a3f, a3c = emb_pair(Sf[j][None, :])
        # per-coordinate lists over a2, a4, a6 (real and complex embeddings)
        b2r = (a1f * a1f + 4 * _emb_real(Sf, th))
        b2c = (a1c * a1c + 4 * _emb_cplx(Sf.astype(np.complex128), zc))
        a1a3r = a1f * a3f
        a1a3c = a1c * a3c
        b4r = 2 * _emb_real(Sf, th) + a1a3r
        b4c = 2 * _emb_cplx(Sf.astype(np.complex128), zc) + a1a3c
        b6r = (a3f * a3f + 4 * _emb_real(Sf, th))
        b6c = (a3c * a3c + 4 * _emb_cplx(Sf.astype(np.complex128), zc))
        if weight == 0:
            # a1 = a3 = 0: the symmetry acts by a6 -> -a6; scan a6 with the
            # first-positive rule at weight 2 plus the a6 = 0 line at weight 1
            pass
        # real embedding of 4*Delta over the (a2, a4, a6) cube: all terms are
        # separable products of per-coordinate arrays
        dr = (36.0 * (b2r[:, None] * b4r[None, :]))[:, :, None] * b6r[None, None, :]
        T1 = (-(b2r ** 3))[:, None] * b6r[None, :]         # (a2, a6)
        T2 = (b2r ** 2)[:, None] * (b4r ** 2)[None, :]     # (a2, a4)
        dr += T1[:, None, :]
        dr += T2[:, :, None]
        dr += (-32.0 * b4r ** 3)[None, :, None]
        dr += (-108.0 * b6r ** 2)[None, None, :]
        dc = (36.0 * (b2c[:, None] * b4c[None, :]))[:, :, None] * b6c[None, None, :]
        T1c = (-(b2c ** 3))[:, None] * b6c[None, :]
        T2c = (b2c ** 2)[:, None] * (b4c ** 2)[None, :]
        dc += T1c[:, None, :]
        dc += T2c[:, :, None]
        dc += (-32.0 * b4c ** 3)[None, :, None]
        dc += (-108.0 * b6c ** 2)[None, None, :]
        absn = np.abs(dr) * (dc.real * dc.real + dc.imag * dc.imag)
        mask = absn <= band
        idx = np.nonzero(mask.ravel())[0]
        res.scanned += mask.size if weight else mask.size
        res.prefilter_hits += len(idx)
        if len(idx):
            i2, rem = np.divmod(idx, n * n)
            i4, i6 = np.divmod(rem, n)
            A2, A4, A6 = S[i2], S[i4], S[i6]
            d4 = _delta4_exact(a1, a3, A2, A4, A6)
            assert (d4 % 4 == 0).all()
            d = d4 // 4
            nd = _norm_int(d)
            keep = (nd != 0) & (np.abs(nd) <= disc_bound)
            if weight == 0:
                # canonical a6 under negation, plus the fixed a6 = 0 line
                first6 = _first_sign(A6)
                keep &= (first6 >= 0)
            for kk in np.nonzero(keep)[0]:
                wt = weight
                if weight == 0:
                    wt = 1 if _first_sign(A6[kk:kk + 1])[0] == 0 else 2
                survivors.append((tuple(a1), tuple(A2[kk]), tuple(a3),
                                  tuple(A4[kk]), tuple(A6[kk]),
                                  int(nd[kk]), wt))
        if progress and time.time() - t_last > 15:
            t_last = time.time()
            progress(f"scan {cnt + 1}/{len(pairs)} slices, "
                     f"{len(survivors)} discriminant survivors, "
                     f"{time.time() - t_start:.0f}s")
    res.disc_hits = sum(w for *_, w in survivors)

    # radical filter on |N(Delta)|: any rational prime ell | N with
    # v_ell(N) < 12 forces a bad prime of norm >= ell, so the product of
    # such ell must stay under the conductor bound
    spf = spf_sieve(disc_bound)
    finalists = []
    for rec in survivors:
        nd = abs(rec[5])
        m = nd
        rad = 1
        while m > 1:
            ell = int(spf[m])
            v = 0
            while m % ell == 0:
                m //= ell
                v += 1
            if v < 12:
                rad *= ell
            if rad > cond_norm_bound:
                break
        if rad <= cond_norm_bound:
            finalists.append(rec)
    res.radical_hits = sum(rec[6] for rec in finalists)
    if progress:
        progress(f"{len(finalists)} finalists after the radical filter, "
                 f"{time.time() - t_start:.0f}s")

    # exact conductors
    kept = []
    for cnt, rec in enumerate(finalists):
        a1, a2, a3, a4, a6, nd, wt = rec
        E = WeierstrassCurve(FieldElement(*a1), FieldElement(*a2),
                             FieldElement(*a3), FieldElement(*a4),
                             FieldElement(*a6))
        cond = conductor(E)
        if cond.norm <= cond_norm_bound:
            kept.append((E, cond, wt))
        if progress and cnt % 2000 == 1999:
            progress(f"conductors {cnt + 1}/{len(finalists)}, kept {len(kept)}, "
                     f"{time.time() - t_start:.0f}s")
    # expand the symmetry weight back into explicit curves
    expanded = []
    for E, cond, wt in kept:
        expanded.append((E, cond))
        if wt == 2:
            E2 = WeierstrassCurve(-E.a1, E.a2, -E.a3, E.a4, -E.a6)
            expanded.append((E2, cond))
    res.curves = expanded

    # isomorphism classes: bucket by (j, conductor), then pairwise tests
    buckets = {}
    for idx, (E, cond) in enumerate(expanded):
        j = E.j_invariant()
        buckets.setdefault((j.key(), cond.ideal.rows), []).append(idx)
    classes = []
    for key, members in sorted(buckets.items(), key=lambda kv: str(kv[0])):
        reps = []
        for idx in members:
            E = expanded[idx][0]
            hit = None
            for cls in reps:
                if isomorphic(expanded[cls[0]][0], E) is not None:
                    hit = cls
                    break
            if hit is None:
                reps.append([idx])
            else:
                hit.append(idx)
        classes.extend(reps)
    res.classes = classes
    res.elapsed = time.time() - t_start
    return res


def _first_sign(rows):
    """Sign of the first nonzero entry per row (0 for the zero row)."""
    out = np.zeros(len(rows), dtype=np.int64)
    for k in range(rows.shape[1]):
        fresh = (out == 0) & (rows[:, k] != 0)
        out[fresh] = np.sign(rows[fresh, k])
    return out
