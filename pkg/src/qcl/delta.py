"""Numeric verification of the quaternionic delta-symbol identity.

The test function is a separable radial pair Phi(x, y) = phi1(nrd x) *
phi2(nrd y) with polynomial bumps supported on [0, 1] and phi2(0) = 0.  For
a nonzero integral quaternion alpha the two-sided sum

    sum_delta [ Phi(alpha/delta / Q, delta / Q) - Phi(delta / Q,
                delta^{-1} alpha / Q) ]

over delta with the integrality side conditions cancels exactly; the
cancellation is certified by an explicit bijection delta <-> alpha *
delta^{-1} between the two enumerated index sets, plus an exact rational
sum.  For alpha = 0 the sum is a smoothed quaternion-norm count whose
Q^{-4}-normalization converges to the dual-lattice main term b(Q), computed
from a one-dimensional Bessel transform of the radial profile over the
trace-form dual of the order.

Conventions (fixed throughout): additive character e(-t) on the reals,
pairing (x, y) -> trd(x y) with Gram matrix 2 diag(1,-1,-1,-1), self-dual
measure 4 * Lebesgue, so the order has covolume 2 and the dual sum carries a
factor 1/2.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .algebra import HurwitzQuat
from .errors import BudgetError, PreconditionError, VerificationError
from .lattices import norm_count


def _poly_eval(coeffs, t):
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


@dataclass(frozen=True)
class DeltaTestFn:
    """Separable radial pair: phi1/phi2 are polynomials on [0,1] (zero
    outside), phi2(0) = 0 and phi1(0) != 0 are enforced."""

    phi1_coeffs: tuple = (1, -3, 3, -1)        # (1-t)^3
    phi2_coeffs: tuple = (0, 1, -3, 3, -1)     # t(1-t)^3

    def __post_init__(self):
        if _poly_eval(self.phi2_coeffs, Fraction(0)) != 0:
            raise PreconditionError("phi2(0) must vanish")
        if _poly_eval(self.phi1_coeffs, Fraction(0)) == 0:
            raise PreconditionError("phi1(0) must not vanish")

    def phi1(self, t):
        t = Fraction(t)
        if t < 0 or t > 1:
            return Fraction(0)
        return _poly_eval(self.phi1_coeffs, t)

    def phi2(self, t):
        t = Fraction(t)
        if t < 0 or t > 1:
            return Fraction(0)
        return _poly_eval(self.phi2_coeffs, t)

    def radial_moment(self):
        """integral of t * phi2(t) over [0,1], exact."""
        return sum(Fraction(c, k + 2)
                   for k, c in enumerate(self.phi2_coeffs))


DEFAULT_PROFILE = DeltaTestFn()


# ---------------------------------------------------------------------------
# order lattice in true coordinates and its trace-form dual

ORDER_BASIS = (
    (Fraction(1), Fraction(0), Fraction(0), Fraction(0)),
    (Fraction(0), Fraction(1), Fraction(0), Fraction(0)),
    (Fraction(0), Fraction(0), Fraction(1), Fraction(0)),
    (Fraction(1, 2), Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)),
)

PAIRING_SIGNS = (Fraction(2), Fraction(-2), Fraction(-2), Fraction(-2))


def trace_pairing(x, y):
    return sum(s * a * b for s, a, b in zip(PAIRING_SIGNS, x, y))


def _mat_inv4(a):
    """Exact inverse of a 4x4 Fraction matrix by Gauss-Jordan."""
    n = 4
    m = [list(a[i]) + [Fraction(1 if i == j else 0) for j in range(n)]
         for i in range(n)]
    for col in range(n):
        piv = next(i for i in range(col, n) if m[i][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        f = m[col][col]
        m[col] = [v / f for v in m[col]]
        for i in range(n):
            if i != col and m[i][col]:
                g = m[i][col]
                m[i] = [m[i][j] - g * m[col][j] for j in range(2 * n)]
    return [row[n:] for row in m]


def dual_basis(basis=ORDER_BASIS):
    """Rows d_j with trd(b_i * d_j) = delta_ij for the given lattice rows."""
    gram = [[trace_pairing(bi, bj) for bj in basis] for bi in basis]
    ginv = _mat_inv4(gram)
    return tuple(
        tuple(sum(ginv[j][i] * basis[i][k] for i in range(4))
              for k in range(4))
        for j in range(4))


def _lattice_hnf_key(basis):
    """Canonical integer HNF of a rational-basis lattice, for comparison."""
    from .linalg import row_hnf
    den = 1
    for row in basis:
        for v in row:
            den = den * v.denominator // math.gcd(den, v.denominator)
    rows = [[int(v * den) for v in row] for row in basis]
    h, _, rank = row_hnf(rows)
    assert rank == 4
    return den, tuple(tuple(r) for r in h[:4])


def dual_double_audit():
    """The trace-form dual of the dual is the order itself (HNF equality)."""
    dd = dual_basis(dual_basis())
    if _lattice_hnf_key(dd) != _lattice_hnf_key(ORDER_BASIS):
        raise VerificationError("double dual differs from the order")
    return True


def dual_norm_histogram_direct(max_nsq):
    """Counts of Euclidean norm-squared values over the dual lattice,
    keyed by 4*|xi|^2 (an integer), by direct coefficient enumeration.
    Exact but slow; kept as an oracle for the convolution route."""
    D = dual_basis()
    Dinv = _mat_inv4(D)
    colnorm = [math.sqrt(sum(float(Dinv[i][j]) ** 2 for i in range(4)))
               for j in range(4)]
    r = math.sqrt(max_nsq)
    bounds = [int(math.floor(r * c)) + 1 for c in colnorm]
    if math.prod(2 * b + 1 for b in bounds) > 10 ** 7:
        raise BudgetError("dual enumeration box too large")
    hist = {}
    for k in itertools.product(*[range(-b, b + 1) for b in bounds]):
        xi = [sum(k[j] * D[j][i] for j in range(4)) for i in range(4)]
        nsq = sum(v * v for v in xi)
        if nsq <= max_nsq:
            key = 4 * nsq
            assert key.denominator == 1
            hist[int(key)] = hist.get(int(key), 0) + 1
    return hist


def dual_norm_histogram(max_nsq):
    """Counts of Euclidean norm-squared values over the dual lattice,
    keyed by 4*|xi|^2 (an integer), up to |xi|^2 <= max_nsq.

    Twice the dual lattice is the even-coordinate-sum sublattice of Z^4
    (checked against the direct enumeration in the tests), so the histogram
    is a parity-split two-square convolution.
    """
    nmax = int(math.floor(4 * max_nsq))
    cmax = math.isqrt(nmax)
    r2_even = [0] * (nmax + 1)
    r2_odd = [0] * (nmax + 1)
    for a in range(-cmax, cmax + 1):
        for b in range(-cmax, cmax + 1):
            s = a * a + b * b
            if s <= nmax:
                if (a + b) % 2 == 0:
                    r2_even[s] += 1
                else:
                    r2_odd[s] += 1
    hist = {}
    for n in range(nmax + 1):
        total = sum(r2_even[s] * r2_even[n - s]
                    + r2_odd[s] * r2_odd[n - s] for s in range(n + 1))
        if total:
            hist[n] = total
    return hist


# ---------------------------------------------------------------------------
# radial Fourier profile

_GHAT_CACHE = {}


def ghat(s, profile=DEFAULT_PROFILE):
    """4D radial Fourier transform of g(r) = phi2(r^2) at radius s >= 0."""
    key = (round(float(s), 12), profile.phi2_coeffs)
    if key in _GHAT_CACHE:
        return _GHAT_CACHE[key]
    coeffs = profile.phi2_coeffs
    if s == 0:
        val = float(2 * mpmath.pi ** 2
                    * mpmath.mpf(profile.radial_moment().numerator)
                    / profile.radial_moment().denominator / 2)
        # integral of phi2(r^2) r^3 dr = (1/2) integral t phi2(t) dt
    else:
        def g(r):
            t = r * r
            acc = mpmath.mpf(0)
            for c in reversed(coeffs):
                acc = acc * t + c
            return acc

        def f(r):
            return r * r * g(r) * mpmath.besselj(1, 2 * mpmath.pi * s * r)

        pts = mpmath.linspace(0, 1, max(8, int(4 * float(s)) + 8))
        val = float(2 * mpmath.pi / s * mpmath.quad(f, pts))
    _GHAT_CACHE[key] = val
    return val


def f2phi_at_zero(profile=DEFAULT_PROFILE):
    """Transform of Phi(0, .) at the origin: 4 * ghat(0)."""
    return 4 * ghat(0, profile)


def b_term(Q, profile=DEFAULT_PROFILE, cutoff=60.0):
    """Dual-lattice main term (1/2) * sum_xi F2Phi(0, Q*xi), truncated where
    the radial profile is negligible (argument 2Q|xi| > cutoff)."""
    if Q < 4:
        raise PreconditionError("Q must be >= 4")
    max_nsq = (cutoff / (2 * Q)) ** 2
    hist = dual_norm_histogram(max_nsq)
    total = 0.0
    for key, cnt in sorted(hist.items()):
        s = 2 * Q * math.sqrt(key / 4)
        total += cnt * 4 * ghat(s, profile)
    return 0.5 * total


# ---------------------------------------------------------------------------
# delta sum

def _norm_shell(d):
    """All order elements of reduced norm d, in doubled coordinates."""
    target = 4 * d
    cmax = int(math.isqrt(target))
    pairs_even, pairs_odd = {}, {}
    for c0 in range(-cmax, cmax + 1):
        for c1 in range(-cmax, cmax + 1):
            s = c0 * c0 + c1 * c1
            if s > target:
                continue
            if c0 % 2 == 0 and c1 % 2 == 0:
                pairs_even.setdefault(s, []).append((c0, c1))
            elif c0 % 2 and c1 % 2:
                pairs_odd.setdefault(s, []).append((c0, c1))
    out = []
    for s, front in pairs_even.items():
        for back in pairs_even.get(target - s, ()):
            for f in front:
                out.append(f + back)
    for s, front in pairs_odd.items():
        for back in pairs_odd.get(target - s, ()):
            for f in front:
                out.append(f + back)
    return [HurwitzQuat(*c) for c in out]


def _in_scaled_order(x, d):
    """True if the quaternion x lies in d * order."""
    if any(c % d for c in x.c):
        return False
    return len({(c // d) % 2 for c in x.c}) == 1


def delta_sum(alpha, Q, profile=DEFAULT_PROFILE):
    """Two-sided smoothed sum at shift alpha and modulus height Q.

    Returns a report with the exact rational difference, the dual main term,
    and (for nonzero alpha) the bijection certificate between the two index
    sets.  The difference is exactly zero for nonzero alpha.
    """
    if Q < 4:
        raise PreconditionError("Q must be >= 4")
    Q2 = Q * Q
    if alpha.is_zero():
        diff = Fraction(0)
        for n in range(1, Q2 + 1):
            c = norm_count(n)
            if c:
                diff += c * profile.phi2(Fraction(n, Q2))
        return {"difference": diff, "b_term": b_term(Q, profile),
                "normalized": diff / Q ** 4, "terms": None}
    na = alpha.nrd()
    # support: nrd(delta) <= Q^2 and nrd(alpha)/nrd(delta) <= Q^2, and
    # nrd(delta) must divide nrd(alpha) for alpha * delta^{-1} to be integral
    divisors = [d for d in range(1, min(na, Q2) + 1)
                if na % d == 0 and na <= d * Q2]
    side1 = {}
    side2 = {}
    for d in divisors:
        for delta in _norm_shell(d):
            if _in_scaled_order(alpha * delta.conjugate(), d):
                side1[delta.c] = (d, delta)
            if _in_scaled_order(delta.conjugate() * alpha, d):
                side2[delta.c] = (d, delta)
    # bijection certificate: delta -> alpha * delta^{-1}
    seen = set()
    for key, (d, delta) in side1.items():
        prod = alpha * delta.conjugate()
        mu = HurwitzQuat(*(c // d for c in prod.c))
        assert mu.nrd() == na // d
        if mu.c not in side2:
            raise VerificationError("bijection image escapes second side")
        if mu.c in seen:
            raise VerificationError("bijection is not injective")
        seen.add(mu.c)
    if len(seen) != len(side2):
        raise VerificationError("bijection is not surjective")
    s1 = sum(profile.phi1(Fraction(na, d * Q2)) * profile.phi2(Fraction(d, Q2))
             for _, (d, _) in side1.items())
    s2 = sum(profile.phi1(Fraction(d, Q2)) * profile.phi2(Fraction(na, d * Q2))
             for _, (d, _) in side2.items())
    diff = s1 - s2
    if diff != 0:
        raise VerificationError("two-sided sum fails to cancel exactly")
    return {"difference": diff, "b_term": None,
            "terms": (len(side1), len(side2))}


# ---------------------------------------------------------------------------
# Poisson harness

def poisson_check(scale):
    """Poisson summation over the order with a separable Gaussian.

    lhs = sum over the order of exp(-pi |x|^2 / scale^2); rhs is the
    dual-lattice Gaussian sum with the trace-pairing conventions (covolume
    factor 1/2, pairing Gram 2 diag(1,-1,-1,-1)).  Returns (lhs, rhs,
    rel_err).
    """
    scale = Fraction(scale)
    if not Fraction(1, 8) <= scale <= 8:
        raise PreconditionError("scale out of range")
    sc = float(scale)
    lhs = 1.0
    nmax = int(math.ceil(45 / math.pi * sc * sc)) + 1
    for n in range(1, nmax + 1):
        c = norm_count(n)
        if c:
            lhs += c * math.exp(-math.pi * n / (sc * sc))
    max_nsq = 45 / (4 * math.pi * sc * sc) + 1
    hist = dual_norm_histogram(max_nsq)
    rhs = 0.0
    for key, cnt in hist.items():
        rhs += cnt * math.exp(-4 * math.pi * sc * sc * key / 4)
    rhs *= 2 * sc ** 4
    rel = abs(lhs - rhs) / abs(lhs)
    return lhs, rhs, rel
