"""Exact arithmetic in F = Q(t) where t^3 = t^2 - 1.

F is the complex cubic field of discriminant -23, with ring of integers
O = Z[t], class number one, signature (1,1).  Elements are stored as
rational coefficient triples on the power basis (1, t, t^2).

The real embedding sends t to the real root theta of x^3 - x^2 + 1
(theta ~ -0.7548776662).  Sign determination of field elements under the
real embedding is exact: a nonzero element has a nonzero value, which an
isolating rational interval for theta pins down after finitely many
bisections.  Everything downstream that needs an ordering on the real
field (positivity of forms, enumeration bounds) goes through sign().
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt

# t^3 = -1 + t^2, t^4 = -1 - t + t^2
_T3 = (-1, 0, 1)
_T4 = (-1, -1, 1)


def _gcd3(a, b, c):
    return gcd(gcd(abs(a), abs(b)), abs(c))


class FieldElement:
    """Element c0 + c1*t + c2*t^2 with rational coefficients.

    Stored as integer numerators (n0, n1, n2) over a common positive
    denominator d, normalized so gcd(n0, n1, n2, d) = 1.
    """

    __slots__ = ("n", "d")

    def __init__(self, n0=0, n1=0, n2=0, d=1):
        if d == 0:
            raise ZeroDivisionError("zero denominator")
        if d < 0:
            n0, n1, n2, d = -n0, -n1, -n2, -d
        g = gcd(_gcd3(n0, n1, n2), d)
        if g > 1:
            n0, n1, n2, d = n0 // g, n1 // g, n2 // g, d // g
        self.n = (n0, n1, n2)
        self.d = d

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def from_rational(q):
        q = Fraction(q)
        return FieldElement(q.numerator, 0, 0, q.denominator)

    @staticmethod
    def from_coeffs(c0, c1, c2):
        """Build from three rationals (or ints)."""
        c0, c1, c2 = Fraction(c0), Fraction(c1), Fraction(c2)
        d = c0.denominator
        d = d * c1.denominator // gcd(d, c1.denominator)
        d = d * c2.denominator // gcd(d, c2.denominator)
        return FieldElement(int(c0 * d), int(c1 * d), int(c2 * d), d)

    def coeffs(self):
        """Rational coefficients (c0, c1, c2) on the basis (1, t, t^2)."""
        return tuple(Fraction(ni, self.d) for ni in self.n)

    # -- predicates ------------------------------------------------------------

    def is_zero(self):
        return self.n == (0, 0, 0)

    def is_integral(self):
        return self.d == 1

    def is_rational(self):
        return self.n[1] == 0 and self.n[2] == 0

    def __bool__(self):
        return not self.is_zero()

    # -- ring operations -------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        a, b = self.n, other.n
        da, db = self.d, other.d
        return FieldElement(a[0] * db + b[0] * da, a[1] * db + b[1] * da,
                            a[2] * db + b[2] * da, da * db)

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(-self.n[0], -self.n[1], -self.n[2], self.d)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        a0, a1, a2 = self.n
        b0, b1, b2 = other.n
        c0 = a0 * b0
        c1 = a0 * b1 + a1 * b0
        c2 = a0 * b2 + a1 * b1 + a2 * b0
        m3 = a1 * b2 + a2 * b1
        m4 = a2 * b2
        return FieldElement(c0 + m3 * _T3[0] + m4 * _T4[0],
                            c1 + m4 * _T4[1],
                            c2 + m3 * _T3[2] + m4 * _T4[2],
                            self.d * other.d)

    __rmul__ = __mul__

    def inverse(self):
        """Multiplicative inverse via the adjugate of the regular representation."""
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        # solve M(x) * y = e0 where M(x) is multiplication-by-x on (1, t, t^2)
        a0, a1, a2 = self.n
        # columns of M: x*1, x*t, x*t^2
        # x*t = (-a2, a0, a1+a2); x*t^2 = (-(a1+a2), -a2, a0+a1+a2)
        m = ((a0, -a2, -(a1 + a2)),
             (a1, a0, -a2),
             (a2, a1 + a2, a0 + a1 + a2))
        det = (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
               - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
               + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))
        # adjugate first column (cofactors for inverse times e0)
        c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1]
        c01 = -(m[1][0] * m[2][2] - m[1][2] * m[2][0])
        c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0]
        return FieldElement(c00 * self.d, c01 * self.d, c02 * self.d, det)

    def __truediv__(self, other):
        return self * _coerce(other).inverse()

    def __rtruediv__(self, other):
        return _coerce(other) * self.inverse()

    def __pow__(self, k):
        if k < 0:
            return self.inverse() ** (-k)
        r = ONE
        b = self
        while k:
            if k & 1:
                r = r * b
            b = b * b
            k >>= 1
        return r

    # -- invariants ------------------------------------------------------------

    def norm(self):
        """N_{F/Q}: determinant of multiplication by self (a Fraction)."""
        a0, a1, a2 = self.n
        det = (a0 * (a0 * (a0 + a1 + a2) + a2 * (a1 + a2))
               + a2 * (a1 * (a0 + a1 + a2) + a2 * a2)
               - (a1 + a2) * (a1 * (a1 + a2) - a0 * a2))
        return Fraction(det, self.d ** 3)

    def trace(self):
        """Tr_{F/Q}: Tr(1)=3, Tr(t)=1, Tr(t^2)=1."""
        return Fraction(3 * self.n[0] + self.n[1] + self.n[2], self.d)

    def complex_square_norm(self):
        """The field element whose real embedding is |sigma_c(self)|^2.

        N(x) = sigma_r(x) * |sigma_c(x)|^2, so this is N(x)/x for x != 0.
        """
        return FieldElement.from_rational(self.norm()) / self

    # -- ordering under the real embedding --------------------------------------

    def sign(self):
        """Sign of the real embedding value, exactly.

        Pure integer interval arithmetic on a dyadic enclosure of theta;
        terminates for nonzero elements since a nonzero value of the cubic
        integer combination is eventually separated from zero.
        """
        if self.is_zero():
            return 0
        c0, c1, c2 = self.n
        while True:
            L, k = _theta_dyadic()
            # theta in [L, L+1] / 2^k with L < 0; theta^2 in [(L+1)^2, L^2] / 2^2k
            t_lo, t_hi = L, L + 1
            s_lo, s_hi = (L + 1) * (L + 1), L * L
            scale = 1 << k
            v_lo = c0 * scale * scale + (c1 * t_lo if c1 >= 0 else c1 * t_hi) * scale \
                + (c2 * s_lo if c2 >= 0 else c2 * s_hi)
            v_hi = c0 * scale * scale + (c1 * t_hi if c1 >= 0 else c1 * t_lo) * scale \
                + (c2 * s_hi if c2 >= 0 else c2 * s_lo)
            if v_lo > 0:
                return 1
            if v_hi < 0:
                return -1
            _theta_dyadic_refine()

    def __lt__(self, other):
        return (self - _coerce(other)).sign() < 0

    def __le__(self, other):
        return (self - _coerce(other)).sign() <= 0

    def __gt__(self, other):
        return (self - _coerce(other)).sign() > 0

    def __ge__(self, other):
        return (self - _coerce(other)).sign() >= 0

    def abs_real(self):
        """|sigma_r(self)| as a field element (sign-adjusted copy)."""
        return self if self.sign() >= 0 else -self

    def real(self, prec=53):
        """Float approximation of the real embedding (heuristics only)."""
        lo, hi = _theta_interval(max(20, prec // 3))
        mid = (lo + hi) / 2
        return float(self.n[0] + self.n[1] * mid + self.n[2] * mid * mid) / self.d

    def complex(self):
        """Float approximation of the chosen complex embedding (heuristics only)."""
        z = _Z_APPROX
        return complex(self.n[0] + self.n[1] * z + self.n[2] * z * z) / self.d

    # -- hashing / display -------------------------------------------------------

    def __eq__(self, other):
        try:
            other = _coerce(other)
        except TypeError:
            return NotImplemented
        return self.n == other.n and self.d == other.d

    def __hash__(self):
        return hash((self.n, self.d))

    def __repr__(self):
        return f"F({self})"

    def __str__(self):
        if self.is_zero():
            return "0"
        parts = []
        for i, name in enumerate(("", "t", "t^2")):
            c = self.n[i]
            if c == 0:
                continue
            if self.d == 1:
                coeff = str(c)
            else:
                coeff = f"{c}/{self.d}"
            if name == "":
                parts.append(coeff)
            elif c == 1 and self.d == 1:
                parts.append(name)
            elif c == -1 and self.d == 1:
                parts.append(f"-{name}")
            else:
                parts.append(f"{coeff}*{name}")
        s = "+".join(parts).replace("+-", "-")
        return s

    def key(self):
        """Deterministic sort key: (d, n0, n1, n2)."""
        return (self.d, self.n)


def _coerce(x):
    if isinstance(x, FieldElement):
        return x
    if isinstance(x, int):
        return FieldElement(x, 0, 0, 1)
    if isinstance(x, Fraction):
        return FieldElement(x.numerator, 0, 0, x.denominator)
    raise TypeError(f"cannot coerce {type(x)} into the field")


ZERO = FieldElement(0)
ONE = FieldElement(1)
T = FieldElement(0, 1, 0)
T2 = FieldElement(0, 0, 1)
#: fundamental unit eps = -t (N(eps) = 1); eps^-1 = t^2 - t
EPS = FieldElement(0, -1, 0)
EPS_INV = FieldElement(0, -1, 1)

DISCRIMINANT = -23


def parse_element(s):
    """Parse "c0+c1*t+c2*t^2" (integer or a/b coefficients, any term order)."""
    s = s.replace(" ", "").replace("-", "+-")
    if s.startswith("+"):
        s = s[1:]
    c = [Fraction(0)] * 3
    for term in s.split("+"):
        if not term:
            continue
        if term.endswith("t^2"):
            body, idx = term[:-3], 2
        elif term.endswith("t2"):
            body, idx = term[:-2], 2
        elif term.endswith("t"):
            body, idx = term[:-1], 1
        else:
            body, idx = term, 0
        body = body.rstrip("*")
        if body in ("", "-"):
            coeff = Fraction(-1 if body == "-" else 1)
        else:
            coeff = Fraction(body)
        c[idx] += coeff
    return FieldElement.from_coeffs(*c)


# -- the real root of x^3 - x^2 + 1 -------------------------------------------
# dyadic isolating interval theta in [L, L+1]/2^k, refined on demand

_TH_L = -13  # [-13/16, -12/16] brackets the root
_TH_K = 4


def _fsign_dyadic(m, k):
    """Sign of f(m / 2^k) scaled by 2^(3k): m^3 - m^2 2^k + 2^(3k)."""
    return m * m * m - m * m * (1 << k) + (1 << (3 * k))


def _theta_dyadic():
    return _TH_L, _TH_K


def _theta_dyadic_refine(chunk=32):
    """Narrow the enclosure by `chunk` bits of integer bisection."""
    global _TH_L, _TH_K
    L, k = _TH_L, _TH_K
    L <<= chunk
    k += chunk
    step = 1 << (chunk - 1)
    while step:
        mid = L + step
        if _fsign_dyadic(mid, k) < 0:
            L = mid
        step >>= 1
    _TH_L, _TH_K = L, k


def _theta_interval(bits):
    """Fraction interval of theta with at least `bits` bits (float helpers)."""
    while _TH_K < bits:
        _theta_dyadic_refine()
    return (Fraction(_TH_L, 1 << _TH_K), Fraction(_TH_L + 1, 1 << _TH_K))


_Z_APPROX = complex(0.8774388331233464, 0.7448617666197442)  # complex root of f


# -- units ---------------------------------------------------------------------

def unit_log_exponent(u):
    """For a unit u = +-eps^k, return (sign, k); raise if u is not a unit."""
    if abs(u.norm()) != 1 or not u.is_integral():
        raise ValueError(f"{u} is not a unit of O")
    # |sigma_c(eps)| = |theta|^(-1/2); k from sizes, then verified exactly
    import math
    val = abs(u.real(60))
    if val == 0.0:
        raise ValueError("bad unit")
    k = round(math.log(val) / math.log(abs(EPS.real(60))))
    for kk in (k, k - 1, k + 1, k - 2, k + 2):
        w = u * EPS ** (-kk)
        if w == ONE:
            return (1, kk)
        if w == -ONE:
            return (-1, kk)
    raise ValueError(f"could not express {u} as +-eps^k")


def is_unit(x):
    return x.is_integral() and abs(x.norm()) == 1


# -- integer square root helper used by enumeration bounds ---------------------

def isqrt_fraction_upper(q):
    """Smallest integer m with m >= sqrt(q) for a nonnegative Fraction q."""
    if q < 0:
        raise ValueError("negative")
    n, d = q.numerator, q.denominator
    # ceil(sqrt(n/d)): m-1 < sqrt(n/d) <= m
    m = isqrt(n // d)
    while m * m * d < n:
        m += 1
    return m
