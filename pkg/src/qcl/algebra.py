"""Exact arithmetic cores: integral quaternions, 2x2 matrix models over
declared rings, the local division-order presentation at odd primes, and
exact values of prime-power exponential sums.

All values are immutable after construction; every operation is a pure
function, so everything here is safe to share across threads.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction

from .errors import PreconditionError, VerificationError

# ---------------------------------------------------------------------------
# Integral quaternions (doubled coordinates)
# ---------------------------------------------------------------------------


class HurwitzQuat:
    """Integral quaternion w + x*i + y*j + z*k stored as doubled integer
    coordinates (2w, 2x, 2y, 2z), all congruent mod 2.

    Doubled storage keeps half-integer coordinates exact with machine
    integers only.
    """

    __slots__ = ("c",)

    def __init__(self, c0, c1, c2, c3):
        c = (int(c0), int(c1), int(c2), int(c3))
        par = c[0] & 1
        if any((ci & 1) != par for ci in c):
            raise PreconditionError(f"doubled coordinates {c} have mixed parity")
        object.__setattr__(self, "c", c)

    def __setattr__(self, *a):  # immutability guard
        raise AttributeError("HurwitzQuat is immutable")

    @classmethod
    def from_true(cls, w, x, y, z):
        """Build from integer (non-halved) coordinates."""
        return cls(2 * w, 2 * x, 2 * y, 2 * z)

    def __repr__(self):
        return f"HurwitzQuat{self.c}"

    def __eq__(self, other):
        return isinstance(other, HurwitzQuat) and self.c == other.c

    def __hash__(self):
        return hash(self.c)

    def __add__(self, other):
        a, b = self.c, other.c
        return HurwitzQuat(a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3])

    def __sub__(self, other):
        a, b = self.c, other.c
        return HurwitzQuat(a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3])

    def __neg__(self):
        a = self.c
        return HurwitzQuat(-a[0], -a[1], -a[2], -a[3])

    def __mul__(self, other):
        if isinstance(other, int):
            a = self.c
            return HurwitzQuat(a[0] * other, a[1] * other, a[2] * other, a[3] * other)
        a, b = self.c, other.c
        # Hamilton product of the doubled vectors is 4x the true product,
        # so halving it gives the doubled coordinates of the product.
        p0 = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
        p1 = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
        p2 = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
        p3 = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]
        if (p0 | p1 | p2 | p3) & 1:
            raise VerificationError("product left the order (odd doubled sum)")
        return HurwitzQuat(p0 // 2, p1 // 2, p2 // 2, p3 // 2)

    __rmul__ = __mul__

    def conjugate(self):
        a = self.c
        return HurwitzQuat(a[0], -a[1], -a[2], -a[3])

    # `dagger` is the standard involution; for quaternions that is conjugation
    dagger = conjugate

    def trd(self):
        return self.c[0]

    def nrd(self):
        a = self.c
        s = a[0] * a[0] + a[1] * a[1] + a[2] * a[2] + a[3] * a[3]
        assert s % 4 == 0
        return s // 4

    def sup_norm(self):
        """max |coordinate| in true (non-doubled) units, as a Fraction."""
        return Fraction(max(abs(ci) for ci in self.c), 2)

    def is_zero(self):
        return self.c == (0, 0, 0, 0)

    def content(self):
        """Largest rational integer d with self/d still in the order."""
        if self.is_zero():
            raise PreconditionError("content of zero is undefined")
        g = math.gcd(math.gcd(abs(self.c[0]), abs(self.c[1])),
                     math.gcd(abs(self.c[2]), abs(self.c[3])))
        # the odd part of g always divides out; powers of 2 need a parity check
        odd = g
        while odd % 2 == 0:
            odd //= 2
        d = odd
        cur = tuple(ci // odd for ci in self.c)
        while all(ci % 2 == 0 for ci in cur):
            halved = tuple(ci // 2 for ci in cur)
            par = halved[0] & 1
            if any((hi & 1) != par for hi in halved):
                break
            cur = halved
            d *= 2
        return d

    def is_primitive(self):
        return not self.is_zero() and self.content() == 1

    def true_coords_mod(self, m):
        """Coordinates (w,x,y,z) as residues mod odd m (2 is a unit mod m)."""
        if m % 2 == 0:
            raise PreconditionError("true coordinates need an odd modulus")
        inv2 = pow(2, -1, m)
        return tuple((ci * inv2) % m for ci in self.c)


HQ_ONE = HurwitzQuat(2, 0, 0, 0)
HQ_I = HurwitzQuat(0, 2, 0, 0)
HQ_J = HurwitzQuat(0, 0, 2, 0)
HQ_K = HurwitzQuat(0, 0, 0, 2)
HQ_OMEGA = HurwitzQuat(1, 1, 1, 1)  # (1+i+j+k)/2

#: basis of the order as a Z-module: 1, i, j, (1+i+j+k)/2
HQ_BASIS = (HQ_ONE, HQ_I, HQ_J, HQ_OMEGA)


def hq_from_basis_coords(v):
    """Inverse of hq_to_basis_coords: integer coefficients -> element."""
    a, b, c, d = (int(t) for t in v)
    return HurwitzQuat(2 * a + d, 2 * b + d, 2 * c + d, d)


def hq_to_basis_coords(x):
    """Coefficients of x in the Z-basis (1, i, j, (1+i+j+k)/2)."""
    c0, c1, c2, c3 = x.c
    d = c3
    a, r0 = divmod(c0 - d, 2)
    b, r1 = divmod(c1 - d, 2)
    c, r2 = divmod(c2 - d, 2)
    assert r0 == r1 == r2 == 0
    return (a, b, c, d)


# ---------------------------------------------------------------------------
# Rings and 2x2 matrices over them
# ---------------------------------------------------------------------------


class RingZ:
    """The rational integers."""

    def normalize(self, x):
        if isinstance(x, Fraction):
            if x.denominator != 1:
                raise PreconditionError("non-integer over the integer ring")
            return int(x)
        return int(x)

    def __eq__(self, other):
        return isinstance(other, RingZ)

    def __hash__(self):
        return hash("Z")

    def __repr__(self):
        return "Z"


class RingZMod:
    """Integers mod m (m a prime power in all uses here)."""

    def __init__(self, m):
        if m <= 1:
            raise PreconditionError("modulus must exceed 1")
        self.m = int(m)

    def normalize(self, x):
        return int(x) % self.m

    def __eq__(self, other):
        return isinstance(other, RingZMod) and self.m == other.m

    def __hash__(self):
        return hash(("ZMod", self.m))

    def __repr__(self):
        return f"Z/{self.m}"


class RingQ:
    """Rationals (used with denominators a power of a single prime)."""

    def normalize(self, x):
        return Fraction(x)

    def __eq__(self, other):
        return isinstance(other, RingQ)

    def __hash__(self):
        return hash("Q")

    def __repr__(self):
        return "Q"


ZZ = RingZ()
QQ = RingQ()


class Mat2:
    """2x2 matrix with a carried ring tag.

    trd = trace, nrd = determinant, dagger = adjugate (the standard
    involution of the matrix model).
    """

    __slots__ = ("e", "ring")

    def __init__(self, entries, ring=ZZ):
        n = ring.normalize
        (a, b), (c, d) = entries
        object.__setattr__(self, "e", ((n(a), n(b)), (n(c), n(d))))
        object.__setattr__(self, "ring", ring)

    def __setattr__(self, *a):
        raise AttributeError("Mat2 is immutable")

    @classmethod
    def identity(cls, ring=ZZ):
        return cls(((1, 0), (0, 1)), ring)

    @classmethod
    def zero(cls, ring=ZZ):
        return cls(((0, 0), (0, 0)), ring)

    def __repr__(self):
        return f"Mat2({self.e}, {self.ring})"

    def __eq__(self, other):
        return isinstance(other, Mat2) and self.ring == other.ring and self.e == other.e

    def __hash__(self):
        return hash((self.e, self.ring))

    def _check(self, other):
        if self.ring != other.ring:
            raise PreconditionError(f"ring mismatch: {self.ring} vs {other.ring}")

    def __add__(self, other):
        self._check(other)
        (a, b), (c, d) = self.e
        (e, f), (g, h) = other.e
        return Mat2(((a + e, b + f), (c + g, d + h)), self.ring)

    def __sub__(self, other):
        self._check(other)
        (a, b), (c, d) = self.e
        (e, f), (g, h) = other.e
        return Mat2(((a - e, b - f), (c - g, d - h)), self.ring)

    def __neg__(self):
        (a, b), (c, d) = self.e
        return Mat2(((-a, -b), (-c, -d)), self.ring)

    def __mul__(self, other):
        if isinstance(other, Mat2):
            self._check(other)
            (a, b), (c, d) = self.e
            (e, f), (g, h) = other.e
            return Mat2(((a * e + b * g, a * f + b * h),
                         (c * e + d * g, c * f + d * h)), self.ring)
        (a, b), (c, d) = self.e
        return Mat2(((a * other, b * other), (c * other, d * other)), self.ring)

    __rmul__ = __mul__

    def trd(self):
        return self.ring.normalize(self.e[0][0] + self.e[1][1])

    def nrd(self):
        (a, b), (c, d) = self.e
        return self.ring.normalize(a * d - b * c)

    def dagger(self):
        (a, b), (c, d) = self.e
        return Mat2(((d, -b), (-c, a)), self.ring)

    def to_ring(self, ring):
        return Mat2(self.e, ring)

    def entries_flat(self):
        return (self.e[0][0], self.e[0][1], self.e[1][0], self.e[1][1])


def reduced_invariants(x):
    """(trd, nrd, dagger) for any of the element models."""
    if isinstance(x, (HurwitzQuat, Mat2, NonsplitLocalElem)):
        return (x.trd(), x.nrd(), x.dagger())
    raise PreconditionError(f"unsupported element type {type(x)!r}")


# ---------------------------------------------------------------------------
# Local division order at an odd prime
# ---------------------------------------------------------------------------


def smallest_nonresidue(p):
    """Smallest positive quadratic non-residue mod an odd prime."""
    for u in range(2, p):
        if pow(u, (p - 1) // 2, p) == p - 1:
            return u
    raise PreconditionError(f"{p} has no non-residue; not an odd prime?")


class NonsplitLocalElem:
    """Element of the local division order at an odd prime p, to precision
    p^N, in the basis 1, s, P, s*P where s^2 = u (a unit non-square) and
    P^2 = p, with the twist P*alpha = conj(alpha)*P.
    """

    __slots__ = ("z", "p", "N", "u")

    def __init__(self, z, p, N, u=None):
        if p == 2:
            raise PreconditionError("this presentation needs odd residue characteristic")
        if u is None:
            u = smallest_nonresidue(p)
        m = p ** N
        object.__setattr__(self, "z", tuple(int(t) % m for t in z))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "u", u)

    def __setattr__(self, *a):
        raise AttributeError("NonsplitLocalElem is immutable")

    def _check(self, other):
        if (self.p, self.N, self.u) != (other.p, other.N, other.u):
            raise PreconditionError("presentation mismatch (p, precision, or u)")

    def __repr__(self):
        return f"NonsplitLocalElem({self.z}, p={self.p}, N={self.N}, u={self.u})"

    def __eq__(self, other):
        return (isinstance(other, NonsplitLocalElem)
                and (self.z, self.p, self.N, self.u) == (other.z, other.p, other.N, other.u))

    def __hash__(self):
        return hash((self.z, self.p, self.N, self.u))

    def __add__(self, other):
        self._check(other)
        return NonsplitLocalElem(
            tuple(a + b for a, b in zip(self.z, other.z)), self.p, self.N, self.u)

    def __sub__(self, other):
        self._check(other)
        return NonsplitLocalElem(
            tuple(a - b for a, b in zip(self.z, other.z)), self.p, self.N, self.u)

    def __neg__(self):
        return NonsplitLocalElem(tuple(-a for a in self.z), self.p, self.N, self.u)

    def __mul__(self, other):
        if isinstance(other, int):
            return NonsplitLocalElem(
                tuple(a * other for a in self.z), self.p, self.N, self.u)
        self._check(other)
        p, u = self.p, self.u
        # write x = A + B*P, y = C + D*P with A,B,C,D in Z[s]/(s^2-u);
        # then x*y = (A*C + p*B*conj(D)) + (A*D + B*conj(C))*P
        a1, a2, b1, b2 = self.z
        c1, c2, d1, d2 = other.z
        # quadratic-extension helpers: (x1 + x2 s)(y1 + y2 s)
        def qmul(x1, x2, y1, y2):
            return (x1 * y1 + u * x2 * y2, x1 * y2 + x2 * y1)
        ac1, ac2 = qmul(a1, a2, c1, c2)
        bd1, bd2 = qmul(b1, b2, d1, -d2)
        ad1, ad2 = qmul(a1, a2, d1, d2)
        bc1, bc2 = qmul(b1, b2, c1, -c2)
        return NonsplitLocalElem(
            (ac1 + p * bd1, ac2 + p * bd2, ad1 + bc1, ad2 + bc2),
            p, self.N, u)

    __rmul__ = __mul__

    def conjugate(self):
        z = self.z
        return NonsplitLocalElem((z[0], -z[1], -z[2], -z[3]), self.p, self.N, self.u)

    dagger = conjugate

    def trd(self):
        return (2 * self.z[0]) % (self.p ** self.N)

    def nrd(self):
        z1, z2, z3, z4 = self.z
        p, u = self.p, self.u
        return (z1 * z1 - u * z2 * z2 - p * z3 * z3 + p * u * z4 * z4) % (p ** self.N)


def nonsplit_uniformizer(p, N, u=None):
    """The element P with P^2 = p."""
    return NonsplitLocalElem((0, 0, 1, 0), p, N, u)


def nonsplit_sqrt_u(p, N, u=None):
    return NonsplitLocalElem((0, 1, 0, 0), p, N, u)


# ---------------------------------------------------------------------------
# Splitting the quaternions at an odd prime
# ---------------------------------------------------------------------------

_SPLIT_CACHE = {}


def _split_generators(p, N):
    """Matrices for i and j over Z/p^N: i -> [[a,b],[b,-a]], j -> [[0,1],[-1,0]]
    with a^2 + b^2 + 1 = 0 mod p^N, lifted from a mod-p solution."""
    key = (p, N)
    if key in _SPLIT_CACHE:
        return _SPLIT_CACHE[key]
    sol = None
    for a in range(1, p):  # insist a is a unit so the lift has a usable derivative
        for b in range(p):
            if (a * a + b * b + 1) % p == 0:
                sol = (a, b)
                break
        if sol:
            break
    if sol is None:
        raise PreconditionError(f"no splitting datum mod {p}")
    a, b = sol
    m = p
    while m < p ** N:
        m = min(m * m, p ** N)
        f = (a * a + b * b + 1) % m
        a = (a - f * pow(2 * a, -1, m)) % m
    m = p ** N
    assert (a * a + b * b + 1) % m == 0
    ring = RingZMod(m)
    mi = Mat2(((a, b), (b, -a)), ring)
    mj = Mat2(((0, 1), (-1, 0)), ring)
    _SPLIT_CACHE[key] = (mi, mj, ring)
    return _SPLIT_CACHE[key]


def split_embed(x, p, N):
    """Ring embedding of an integral quaternion into M_2(Z/p^N), p odd.

    Preserves trd and nrd; the particular embedding is one choice among
    conjugate ones, so tests compare invariants rather than raw entries.
    """
    if p == 2:
        raise PreconditionError("the quaternions do not split at 2")
    mi, mj, ring = _split_generators(p, N)
    m = p ** N
    inv2 = pow(2, -1, m)
    mk = mi * mj
    one = Mat2.identity(ring)
    c0, c1, c2, c3 = x.c
    acc = one * (c0 * inv2) + mi * (c1 * inv2) + mj * (c2 * inv2) + mk * (c3 * inv2)
    return acc


# ---------------------------------------------------------------------------
# Exact prime-power exponential-sum values
# ---------------------------------------------------------------------------


class CycloSum:
    """Exact value p^(-scale) * sum_r counts[r] * e^(2 pi i r / p^k).

    Canonical form restricts support to exponents r < p^k - p^(k-1)
    (the remaining powers of the root of unity form a Q-basis), drops
    the conductor when the support allows it, and strips common p-factors
    against the scale. Equality and zero tests are exact on canonical
    forms; magnitude() is float, for inequality checks only.
    """

    __slots__ = ("p", "k", "counts", "scale")

    def __init__(self, p, k, counts, scale=0):
        if scale < 0:
            raise PreconditionError("negative scale; multiply counts instead")
        object.__setattr__(self, "p", int(p))
        object.__setattr__(self, "k", int(k))
        pk = p ** k
        cc = {}
        for r, c in counts.items():
            c = int(c)
            if c:
                r = int(r) % pk
                cc[r] = cc.get(r, 0) + c
        object.__setattr__(self, "counts", {r: c for r, c in cc.items() if c})
        object.__setattr__(self, "scale", int(scale))

    def __setattr__(self, *a):
        raise AttributeError("CycloSum is immutable")

    @classmethod
    def from_int(cls, n, p=2):
        return cls(p, 0, {0: n}, 0)

    @classmethod
    def from_fraction(cls, fr, p):
        """fr must have denominator a power of p."""
        fr = Fraction(fr)
        den = fr.denominator
        s = 0
        while den % p == 0:
            den //= p
            s += 1
        if den != 1:
            raise PreconditionError(f"denominator of {fr} is not a power of {p}")
        return cls(p, 0, {0: fr.numerator}, s)

    @classmethod
    def root(cls, p, k, r):
        """The single root of unity e^(2 pi i r / p^k)."""
        return cls(p, k, {r: 1}, 0)

    def __repr__(self):
        return f"CycloSum(p={self.p}, k={self.k}, scale={self.scale}, counts={self.counts})"

    # -- canonicalization ---------------------------------------------------

    def canonical(self):
        p = self.p
        k = self.k
        counts = dict(self.counts)
        while True:
            if k == 0:
                break
            pk = p ** k
            pk1 = pk // p
            top = pk - pk1
            changed = True
            while changed:
                changed = False
                for r in [r for r in counts if r >= top]:
                    c = counts.pop(r, 0)
                    if not c:
                        continue
                    base = r % pk1
                    for t in range(p - 1):
                        rr = base + t * pk1
                        counts[rr] = counts.get(rr, 0) - c
                    changed = True
            counts = {r: c for r, c in counts.items() if c}
            if counts and all(r % p == 0 for r in counts):
                counts = {r // p: c for r, c in counts.items()}
                k -= 1
                continue
            if not counts:
                k = 0
                continue
            break
        scale = self.scale
        if not counts:
            return CycloSum(p, 0, {}, 0)
        while scale > 0 and all(c % p == 0 for c in counts.values()):
            counts = {r: c // p for r, c in counts.items()}
            scale -= 1
        return CycloSum(p, k, counts, scale)

    def is_zero(self):
        return not self.canonical().counts

    def is_rational(self):
        return self.canonical().k == 0

    def to_fraction(self):
        c = self.canonical()
        if c.k != 0:
            raise PreconditionError("value is irrational")
        return Fraction(c.counts.get(0, 0), c.p ** c.scale)

    def __eq__(self, other):
        if isinstance(other, int):
            other = CycloSum.from_int(other, self.p)
        if not isinstance(other, CycloSum):
            return NotImplemented
        a, b = self.canonical(), other.canonical()
        if a.k == 0 and b.k == 0:
            return Fraction(a.counts.get(0, 0), a.p ** a.scale) == \
                Fraction(b.counts.get(0, 0), b.p ** b.scale)
        return (a.p, a.k, a.scale, a.counts) == (b.p, b.k, b.scale, b.counts)

    def __hash__(self):
        c = self.canonical()
        if c.k == 0:
            return hash(Fraction(c.counts.get(0, 0), c.p ** c.scale))
        return hash((c.p, c.k, c.scale, tuple(sorted(c.counts.items()))))

    # -- arithmetic ----------------------------------------------------------

    def _aligned(self, other):
        if isinstance(other, int):
            other = CycloSum.from_int(other, self.p)
        if self.p != other.p:
            a, b = self.canonical(), other.canonical()
            if a.k == 0 and a.scale == 0:
                a = CycloSum(b.p, 0, a.counts, 0)
            elif b.k == 0 and b.scale == 0:
                b = CycloSum(a.p, 0, b.counts, 0)
            else:
                raise PreconditionError("mixed-prime values are not combinable")
        else:
            a, b = self, other
        k = max(a.k, b.k)
        s = max(a.scale, b.scale)
        p = a.p

        def lift(v):
            mult = p ** (s - v.scale)
            shift = p ** (k - v.k)
            return {r * shift: c * mult for r, c in v.counts.items()}
        return p, k, s, lift(a), lift(b)

    def __add__(self, other):
        p, k, s, ca, cb = self._aligned(other)
        out = dict(ca)
        for r, c in cb.items():
            out[r] = out.get(r, 0) + c
        return CycloSum(p, k, out, s)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, int):
            other = CycloSum.from_int(other, self.p)
        return self + (-other)

    def __neg__(self):
        return CycloSum(self.p, self.k, {r: -c for r, c in self.counts.items()}, self.scale)

    def __mul__(self, other):
        if isinstance(other, int):
            return CycloSum(self.p, self.k,
                            {r: c * other for r, c in self.counts.items()}, self.scale)
        if isinstance(other, Fraction):
            return self * CycloSum.from_fraction(other, self.p)
        if self.p != other.p:
            raise PreconditionError("mixed-prime values are not combinable")
        p = self.p
        k = max(self.k, other.k)
        pk = p ** k
        sa = p ** (k - self.k)
        sb = p ** (k - other.k)
        out = {}
        for r1, c1 in self.counts.items():
            for r2, c2 in other.counts.items():
                r = (r1 * sa + r2 * sb) % pk
                out[r] = out.get(r, 0) + c1 * c2
        return CycloSum(p, k, out, self.scale + other.scale)

    __rmul__ = __mul__

    def scale_down(self, j):
        """Multiply the value by p^(-j)."""
        return CycloSum(self.p, self.k, self.counts, self.scale + j)

    def scale_up(self, j):
        """Multiply the value by p^(+j)."""
        if j <= self.scale:
            return CycloSum(self.p, self.k, self.counts, self.scale - j)
        mult = self.p ** (j - self.scale)
        return CycloSum(self.p, self.k,
                        {r: c * mult for r, c in self.counts.items()}, 0)

    def complex_value(self):
        tau = 2.0 * math.pi / (self.p ** self.k)
        re = math.fsum(c * math.cos(tau * r) for r, c in self.counts.items())
        im = math.fsum(c * math.sin(tau * r) for r, c in self.counts.items())
        return complex(re, im) / (self.p ** self.scale)

    def magnitude(self):
        return abs(self.complex_value())


def cyclo_canonicalize(v):
    return v.canonical()
