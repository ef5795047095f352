"""Rank-4 congruence lattices of integral quaternions.

Builds the lattice of quaternions M satisfying three simultaneous
conditions: M lies in H times the maximal order, (M - conj(M)) * eta lies in
K times the order, and M * eta lands in the integer line through M0 * eta
modulo m.  Provides exact Hermite bases, successive minima and point counts
under the sup-norm, structural checks for the right-annihilator of eta
modulo K, and exact representation numbers of integers by the quaternion
norm form.

All empirical constants (the global point-count factor and the short-vector
factor) were calibrated once on a fixed seeded corpus by
scripts/calibrate_lattice_constants.py and are frozen here; they are not
derived bounds.
"""

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import HQ_BASIS, HurwitzQuat, hq_from_basis_coords, hq_to_basis_coords
from .errors import BudgetError, PreconditionError, VerificationError
from .linalg import (
    congruence_lattice, hnf_determinant, kernel_count_mod, reduce_mod_hnf,
    row_hnf,
)

# frozen after calibration (see scripts/calibrate_lattice_constants.py)
C_GLOBAL = 256  # point count vs structural right side
C_SHORT = 8     # short-vector searches, in units of sqrt(K) / sqrt(Km)

_ENUM_BUDGET = 4 * 10 ** 6


def left_mul_coords(g):
    """4x4 integer matrix of x -> g*x on order-basis coordinates."""
    cols = [hq_to_basis_coords(g * b) for b in HQ_BASIS]
    return [[cols[j][i] for j in range(4)] for i in range(4)]


def right_mul_coords(g):
    """4x4 integer matrix of x -> x*g on order-basis coordinates."""
    cols = [hq_to_basis_coords(b * g) for b in HQ_BASIS]
    return [[cols[j][i] for j in range(4)] for i in range(4)]


@dataclass(frozen=True)
class Lattice4:
    """Full-rank sublattice of the maximal order, rows = HNF basis in
    order-basis coordinates; index is [order : lattice]."""

    hnf: tuple
    index: int
    H: int = 1
    K: int = 1
    m: int = 1
    eta: HurwitzQuat = None
    m0: HurwitzQuat = None

    @property
    def kprime(self):
        return self.K // math.gcd(self.K, self.H)

    @property
    def mprime(self):
        return self.m // math.gcd(self.m, self.H)


def _freeze(rows):
    return tuple(tuple(r) for r in rows)


def lattice_basis(H, K, m, eta, m0):
    """HNF basis of {M in H*order : (M-M~)eta in K*order,
    M*eta in Z*m0*eta + m*order}.

    Solved as a linear congruence system in (coords(M), lambda) over a
    single modulus, then projected back to the M coordinates.
    """
    if H < 1 or K < 1 or m < 1:
        raise PreconditionError("H, K, m must be positive")
    if m % K != 0 or eta.nrd() % m != 0:
        raise PreconditionError("need K | m | nrd(eta)")
    if K % 2 == 0:
        raise PreconditionError("K must be odd")
    if not eta.is_primitive():
        raise PreconditionError("eta must be primitive")
    L = math.lcm(H, K, m)
    # column j of t1: coords of (b_j - conj(b_j)) * eta
    t1 = [[0] * 4 for _ in range(4)]
    t2 = [[0] * 4 for _ in range(4)]
    for j, b in enumerate(HQ_BASIS):
        v1 = hq_to_basis_coords((b - b.conjugate()) * eta)
        v2 = hq_to_basis_coords(b * eta)
        for i in range(4):
            t1[i][j] = v1[i]
            t2[i][j] = v2[i]
    c = hq_to_basis_coords(m0 * eta)
    rows = []
    sh = L // H
    for j in range(4):
        rows.append([sh if i == j else 0 for i in range(4)] + [0])
    sk = L // K
    for i in range(4):
        rows.append([sk * t1[i][j] for j in range(4)] + [0])
    sm = L // m
    for i in range(4):
        rows.append([sm * t2[i][j] for j in range(4)] + [-sm * c[i]])
    sol = congruence_lattice(rows, L)
    proj = [r[:4] for r in sol]
    h, _, rank = row_hnf(proj)
    if rank != 4:
        raise PreconditionError("projected lattice is not full rank")
    h = h[:4]
    index = hnf_determinant(h)
    lat = Lattice4(_freeze(h), index, H, K, m, eta, m0)
    _audit_membership(lat)
    return lat


def _audit_membership(lat):
    """Recheck both congruences on every basis vector and m*order in Λ."""
    for row in lat.hnf:
        if any(x % lat.H for x in row):
            raise VerificationError("basis vector escapes H*order")
        M = hq_from_basis_coords(row)
        w = (M - M.conjugate()) * lat.eta
        if any(x % lat.K for x in hq_to_basis_coords(w)):
            raise VerificationError("skew congruence fails on basis")
        target = hq_to_basis_coords(M * lat.eta)
        line = hq_to_basis_coords(lat.m0 * lat.eta)
        if not any(
                all((target[i] - lam * line[i]) % lat.m == 0 for i in range(4))
                for lam in range(lat.m)):
            raise VerificationError("line congruence fails on basis")
    if lat.m % lat.H == 0:
        for j in range(4):
            v = [lat.m if i == j else 0 for i in range(4)]
            if any(reduce_mod_hnf(v, list(map(list, lat.hnf)))):
                raise VerificationError("m*order not contained in lattice")


def _coords_doubled(x):
    """Order-basis coordinates -> doubled quaternion coordinates."""
    a, b, c, d = x
    return (2 * a + d, 2 * b + d, 2 * c + d, d)


def _enum_ball(hnf, rd, budget=_ENUM_BUDGET):
    """Yield (doubled_norm, coords) over nonzero lattice points with doubled
    sup-norm <= rd, by interval propagation down the triangular basis."""
    h = [list(r) for r in hnf]
    nodes = 0
    # loose per-coordinate bounds in order-basis coordinates: every doubled
    # coordinate is one of d or 2t+d, so |t| <= rd for all four coordinates
    stack = [((), [0, 0, 0, 0])]
    while stack:
        prefix, acc = stack.pop()
        i = len(prefix)
        if i == 4:
            if all(v == 0 for v in acc):
                continue
            dd = _coords_doubled(acc)
            nd = max(abs(t) for t in dd)
            if nd <= rd:
                yield nd, tuple(acc)
            continue
        # coordinate i of the point is acc[i] + t_i * h[i][i]
        lo = math.ceil((-rd - acc[i]) / h[i][i])
        hi = math.floor((rd - acc[i]) / h[i][i])
        for t in range(lo, hi + 1):
            nodes += 1
            if nodes > budget:
                raise BudgetError("lattice enumeration budget exceeded")
            nxt = list(acc)
            for j in range(i, 4):
                nxt[j] += t * h[i][j]
            stack.append((prefix + (t,), nxt))


def sup_norm_of_coords(x):
    return Fraction(max(abs(t) for t in _coords_doubled(x)), 2)


def successive_minima(lat, bound, budget=_ENUM_BUDGET):
    """Exact successive minima of the lattice under the quaternion sup-norm.

    bound must dominate the fourth minimum; enumeration failure raises.
    """
    hnf = lat.hnf if isinstance(lat, Lattice4) else lat
    rdmax = int(math.ceil(2 * bound))
    rd = 1
    # radius-increasing search: once rank 4 is reached at radius rd the
    # points already seen dominate every remaining minimum
    while rd <= rdmax:
        minima = []
        chosen = []
        for nd, x in sorted(_enum_ball(hnf, rd, budget)):
            cand = chosen + [list(x)]
            _, _, rank = row_hnf(cand)
            if rank == len(cand):
                chosen = cand
                minima.append(Fraction(nd, 2))
                if len(minima) == 4:
                    return tuple(minima)
        if rd == rdmax:
            break
        rd = min(2 * rd, rdmax)
    raise PreconditionError("bound too small: rank 4 not reached")


def minkowski_bracket(lat, minima):
    """(product of minima, lower, upper) under the sup-ball convention."""
    prod = math.prod(minima)
    return prod, Fraction(lat.index, 24), Fraction(lat.index, 1)


def lattice_point_count(lat, R, budget=_ENUM_BUDGET):
    """Exact #{M in lattice : sup-norm <= R} with the structural bound check.

    The right side is 1 + R/H + (R/H)^2/sqrt(K') + (R/H)^3/sqrt(K'm')
    + (R/H)^4/(K'm'); the count must not exceed C_GLOBAL times it.
    """
    rd = int(math.floor(2 * R))
    count = 1 + sum(1 for _ in _enum_ball(lat.hnf, rd, budget))
    x = R / lat.H
    kp, mp = lat.kprime, lat.mprime
    rhs = (1 + x + x ** 2 / math.sqrt(kp) + x ** 3 / math.sqrt(kp * mp)
           + x ** 4 / (kp * mp))
    if count > C_GLOBAL * rhs:
        raise VerificationError(
            f"point count {count} exceeds {C_GLOBAL} * {rhs}")
    return {"count": count, "rhs": rhs, "ratio": count / rhs}


def _first_short_vector(hnf, limit_dbl, budget=_ENUM_BUDGET):
    """Shortest nonzero vector found by radius-doubling search up to the
    doubled-norm limit; returns (doubled_norm, coords) or None."""
    rd = 1
    while rd < limit_dbl:
        rd = min(2 * rd, limit_dbl)
        best = None
        for nd, x in _enum_ball(hnf, rd, budget):
            if best is None or nd < best[0]:
                best = (nd, x)
        if best is not None:
            return best
        if rd == limit_dbl:
            break
    return None


def eta_congruence_checks(eta, K, seed=0):
    """Structure checks for the right annihilator of eta modulo K.

    Verifies the exact solution count K^2, the norm divisibility K | nrd(A)
    on samples from the solution set, and exhibits short vectors: a nonzero
    annihilator theta and a short representative of eta*order + K*order,
    both below C_SHORT * sqrt(K).
    """
    if K % 2 == 0 or K < 1:
        raise PreconditionError("K must be odd and positive")
    if K > 1 and eta.nrd() % K != 0:
        raise PreconditionError("K must divide nrd(eta)")
    if not eta.is_primitive():
        raise PreconditionError("eta must be primitive")
    lmat = left_mul_coords(eta)
    theta_count = kernel_count_mod(lmat, K)
    if theta_count != K * K:
        raise VerificationError(
            f"annihilator count {theta_count} != {K * K}")
    # norm divisibility on random solutions of A*eta = 0 mod K
    rmat = right_mul_coords(eta)
    sol = congruence_lattice(rmat, K)
    rng = random.Random(seed)
    for _ in range(20):
        coeffs = [rng.randrange(-2 * K, 2 * K + 1) for _ in range(4)]
        x = [sum(coeffs[i] * sol[i][j] for i in range(4)) for j in range(4)]
        A = hq_from_basis_coords(x)
        if A.nrd() % K != 0:
            raise VerificationError("norm divisibility fails on sample")
    limit = max(1, int(math.floor(2 * C_SHORT * math.sqrt(K))))
    th = _first_short_vector(congruence_lattice(lmat, K), limit)
    if th is None:
        raise VerificationError("no short annihilator found")
    # short element of eta*order + K*order
    gens = [list(hq_to_basis_coords(eta * b)) for b in HQ_BASIS]
    gens += [[K if i == j else 0 for i in range(4)] for j in range(4)]
    h, _, rank = row_hnf(gens)
    assert rank == 4
    short = _first_short_vector(h[:4], limit)
    if short is None:
        raise VerificationError("no short coset representative found")
    return {
        "theta_count": theta_count,
        "theta_norm": Fraction(th[0], 2),
        "theta": th[1],
        "short_rep_norm": Fraction(short[0], 2),
        "short_rep": short[1],
        "c_theta": float(th[0] / 2 / math.sqrt(K)),
        "c_rep": float(short[0] / 2 / math.sqrt(K)),
    }


def _two_square_histograms(smax):
    """Histograms of c0^2 + c1^2 over even-even and odd-odd pairs."""
    he, ho = {}, {}
    cmax = int(math.isqrt(smax))
    for c0 in range(-cmax, cmax + 1):
        for c1 in range(-cmax, cmax + 1):
            s = c0 * c0 + c1 * c1
            if s > smax:
                continue
            if c0 % 2 == 0 and c1 % 2 == 0:
                he[s] = he.get(s, 0) + 1
            elif c0 % 2 and c1 % 2:
                ho[s] = ho.get(s, 0) + 1
    return he, ho


def norm_count(m, _hist_cache={}):
    """#{x in the order : nrd(x) = m}, via doubled-coordinate pairing."""
    if m < 1:
        raise PreconditionError("m must be positive")
    smax = 4 * m
    if _hist_cache.get("smax", -1) < smax:
        _hist_cache.clear()
        _hist_cache["smax"] = smax
        _hist_cache["he"], _hist_cache["ho"] = _two_square_histograms(smax)
    he, ho = _hist_cache["he"], _hist_cache["ho"]
    total = 0
    for s, c in he.items():
        total += c * he.get(smax - s, 0)
    for s, c in ho.items():
        total += c * ho.get(smax - s, 0)
    return total


def rep_number(m):
    """Primitive norm-m elements up to units: enumeration vs closed formula.

    Returns (r_enumerated, r_formula) and raises if they disagree.
    """
    if not 1 <= m <= 10 ** 6:
        raise PreconditionError("m out of range")

    def primitive_count(mm, memo={}):
        if mm in memo:
            return memo[mm]
        total = norm_count(mm)
        d = 2
        while d * d <= mm:
            if mm % (d * d) == 0:
                total -= primitive_count(mm // (d * d))
            d += 1
        memo[mm] = total
        return total

    prim = primitive_count(m)
    assert prim % 24 == 0
    r_enum = prim // 24
    v2 = 0
    mm = m
    while mm % 2 == 0:
        v2 += 1
        mm //= 2
    if v2 >= 2:
        r_formula = 0
    else:
        r_formula = 1
        p = 3
        while p * p <= mm:
            if mm % p == 0:
                v = 0
                while mm % p == 0:
                    v += 1
                    mm //= p
                r_formula *= p ** v + p ** (v - 1)
            p += 2
        if mm > 1:
            r_formula *= mm + 1
    if r_enum != r_formula:
        raise VerificationError(
            f"rep number mismatch at {m}: {r_enum} vs {r_formula}")
    return r_enum, r_formula


def _odd_prime_factors(n):
    out = []
    while n % 2 == 0:
        n //= 2
    p = 3
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 2
    if n > 1:
        out.append(n)
    return out


def instance_corpus(count, seed, max_nrd=10 ** 4, max_m=120):
    """Deterministic corpus of admissible (H, K, m, eta, M0) instances."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        x = [rng.randrange(-6, 7) for _ in range(4)]
        eta = hq_from_basis_coords(x)
        if eta.is_zero() or not eta.is_primitive():
            continue
        nrd = eta.nrd()
        if nrd > max_nrd:
            continue
        odd = [p for p in _odd_prime_factors(nrd) if p <= max_m]
        if not odd:
            continue
        K = rng.choice(odd)
        # m: a multiple of K dividing nrd, capped for enumeration cost
        mults = [d for d in range(K, max_m + 1, K)
                 if nrd % d == 0 and d % K == 0]
        m = rng.choice(mults)
        H = rng.choice([1, 1, 1, 2, 3])
        m0 = hq_from_basis_coords([rng.randrange(m) for _ in range(4)])
        out.append({"H": H, "K": K, "m": m, "eta": eta, "m0": m0})
    return out
