"""Small exact linear algebra over the cubic field and over F_p.

Field matrices are lists of lists of FieldElement; sizes here are tiny
(at most 21 columns), so plain Gaussian elimination with exact division
is fine.  Mod-p work (boundary matrices of the quotient complex) uses
numpy int64 rows, which stays exact because p < 2^15.
"""

from __future__ import annotations

import numpy as np

from .field import ONE, ZERO, FieldElement


def mat_vec(m, v):
    return [sum((m[i][j] * v[j] for j in range(len(v))), ZERO) for i in range(len(m))]


def mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    return [[sum((a[i][t] * b[t][j] for t in range(k)), ZERO) for j in range(m)]
            for i in range(n)]


def rank(rows):
    """Rank of a list of FieldElement row vectors."""
    rows = [list(r) for r in rows]
    ncols = len(rows[0]) if rows else 0
    r = 0
    for col in range(ncols):
        piv = None
        for i in range(r, len(rows)):
            if not rows[i][col].is_zero():
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][col].inverse()
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and not rows[i][col].is_zero():
                c = rows[i][col]
                rows[i] = [x - c * y for x, y in zip(rows[i], rows[r])]
        r += 1
        if r == len(rows):
            break
    return r


def solve(mat, rhs):
    """Solve mat * x = rhs over the field; returns None if inconsistent.

    mat is n x m; returns one solution (the echelon one with free vars 0).
    """
    n = len(mat)
    m = len(mat[0])
    aug = [list(mat[i]) + [rhs[i]] for i in range(n)]
    pivots = []
    r = 0
    for col in range(m):
        piv = None
        for i in range(r, n):
            if not aug[i][col].is_zero():
                piv = i
                break
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = aug[r][col].inverse()
        aug[r] = [x * inv for x in aug[r]]
        for i in range(n):
            if i != r and not aug[i][col].is_zero():
                c = aug[i][col]
                aug[i] = [x - c * y for x, y in zip(aug[i], aug[r])]
        pivots.append(col)
        r += 1
        if r == n:
            break
    for i in range(r, n):
        if not aug[i][m].is_zero():
            return None
    x = [ZERO] * m
    for i, col in enumerate(pivots):
        x[col] = aug[i][m]
    return x


def nullspace(rows):
    """Basis of the right kernel of a matrix of FieldElements."""
    if not rows:
        return []
    n, m = len(rows), len(rows[0])
    aug = [list(r) for r in rows]
    pivots = []
    r = 0
    for col in range(m):
        piv = None
        for i in range(r, n):
            if not aug[i][col].is_zero():
                piv = i
                break
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = aug[r][col].inverse()
        aug[r] = [x * inv for x in aug[r]]
        for i in range(n):
            if i != r and not aug[i][col].is_zero():
                c = aug[i][col]
                aug[i] = [x - c * y for x, y in zip(aug[i], aug[r])]
        pivots.append(col)
        r += 1
        if r == n:
            break
    free = [c for c in range(m) if c not in pivots]
    basis = []
    for fc in free:
        v = [ZERO] * m
        v[fc] = ONE
        for i, col in enumerate(pivots):
            v[col] = -aug[i][fc]
        basis.append(v)
    return basis


def det(mat):
    """Determinant by fraction-free-ish elimination with field division."""
    n = len(mat)
    a = [list(r) for r in mat]
    d = ONE
    sign = 1
    for col in range(n):
        piv = None
        for i in range(col, n):
            if not a[i][col].is_zero():
                piv = i
                break
        if piv is None:
            return ZERO
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            sign = -sign
        d = d * a[col][col]
        inv = a[col][col].inverse()
        for i in range(col + 1, n):
            if not a[i][col].is_zero():
                c = a[i][col] * inv
                a[i] = [x - c * y for x, y in zip(a[i], a[col])]
    return d if sign == 1 else -d


# -- dense linear algebra over F_p (numpy int64) ---------------------------------

def rref_mod(mat, p):
    """Row-reduce an int64 numpy matrix mod p; returns (rref, pivot_cols)."""
    a = np.array(mat, dtype=np.int64) % p
    n, m = a.shape
    pivots = []
    r = 0
    for col in range(m):
        if r >= n:
            break
        nz = np.nonzero(a[r:, col])[0]
        if len(nz) == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        inv = pow(int(a[r, col]), -1, p)
        a[r] = a[r] * inv % p
        src = np.nonzero(a[:, col])[0]
        for i in src:
            if i != r:
                a[i] = (a[i] - a[i, col] * a[r]) % p
        pivots.append(col)
        r += 1
    return a, pivots


def rank_mod(mat, p):
    if mat.size == 0:
        return 0
    _, piv = rref_mod(mat, p)
    return len(piv)


def nullspace_mod(mat, p):
    """Basis (as rows) of the right kernel mod p."""
    a = np.asarray(mat, dtype=np.int64)
    if a.size == 0:
        m = a.shape[1] if a.ndim == 2 else 0
        return np.eye(m, dtype=np.int64)
    rr, pivots = rref_mod(a, p)
    m = a.shape[1]
    free = [c for c in range(m) if c not in pivots]
    basis = np.zeros((len(free), m), dtype=np.int64)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for i, col in enumerate(pivots):
            basis[k, col] = (-int(rr[i, fc])) % p
    return basis


def solve_mod(mat, rhs, p):
    """One solution of mat x = rhs mod p, or None."""
    a = np.asarray(mat, dtype=np.int64)
    b = np.asarray(rhs, dtype=np.int64).reshape(-1, 1)
    aug = np.concatenate([a, b], axis=1) % p
    rr, pivots = rref_mod(aug, p)
    m = a.shape[1]
    if m in pivots:
        return None
    x = np.zeros(m, dtype=np.int64)
    for i, col in enumerate(pivots):
        x[col] = rr[i, m]
    return x
