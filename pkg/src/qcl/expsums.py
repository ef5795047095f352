"""Local oscillatory integrals in the split 2x2 matrix model.

Main objects, all exact:

* `nonabelian_gauss_integral`: the average of e(tr(Y^2 Z)) over 2x2 integral
  matrices Y, with Z having prime-power denominator.
* `hessian_pair`: the symmetric matrix of the phase tr(Y^2 Z) and an explicit
  congruence transformation that diagonalizes it, with exact certificates.
* `i0_local`: the constrained oscillatory integral over n matrix slots
  I0(delta, gamma) = avg over Y in O^n of
  [delta^{-1} P(Y) integral] * e(trd(gamma . Y) / det(delta)),
  where P(Y) = sum of slotwise squares (with optional unit coefficients).
* `phase_integral_z`: the unconstrained companion with the constraint
  replaced by a phase tr(Z adj(delta) P(Y)).
* `w_measure` and friends: the volume of auxiliary matrices Z for which a
  target lies on the scalar line through Z times the cyclic image generator.
* `witness_report` / `local_integral_audit`: support, witness and magnitude
  bound checks for i0_local.
* `prime_case_report`: exact point-count identities at prime level.

Matrices are passed as flat 4-tuples (e00, e01, e10, e11) of ints.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import numpy as np

from .algebra import CycloSum
from .errors import BudgetError, PreconditionError, VerificationError
from .padic import pval, punit

_MAT_ENUM_CACHE = {}


def all_mats(q):
    """(q^4, 4) int64 array enumerating flat 2x2 matrices mod q."""
    if q not in _MAT_ENUM_CACHE:
        if q ** 4 > 10 ** 7:
            raise BudgetError(f"matrix enumeration {q}^4 exceeds budget")
        idx = np.indices((q, q, q, q), dtype=np.int64).reshape(4, -1).T
        idx.setflags(write=False)
        _MAT_ENUM_CACHE[q] = idx
    return _MAT_ENUM_CACHE[q]


def mat_square_flat(y, q):
    """Flat entries of Y^2 mod q for an (N,4) array of flat Y."""
    a, b, c, d = y[:, 0], y[:, 1], y[:, 2], y[:, 3]
    bc = b * c % q
    apd = (a + d) % q
    return np.stack([(a * a + bc) % q, b * apd % q, c * apd % q,
                     (d * d + bc) % q], axis=1)


def adj_flat(m):
    a, b, c, d = m
    return (d, -b, -c, a)


def mat_mul_flat(x, y):
    return (x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3],
            x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3])


def det_flat(m):
    return m[0] * m[3] - m[1] * m[2]


def trace_flat(m):
    return m[0] + m[3]


def left_mul_matrix(a):
    """4x4 integer matrix L with flat(A X) = L @ flat(X)."""
    a00, a01, a10, a11 = a
    return np.array([[a00, 0, a01, 0], [0, a00, 0, a01],
                     [a10, 0, a11, 0], [0, a10, 0, a11]], dtype=np.int64)


def right_mul_matrix(b):
    """4x4 integer matrix R with flat(X B) = R @ flat(X)."""
    b00, b01, b10, b11 = b
    return np.array([[b00, 0, b10, 0], [b01, 0, b11, 0],
                     [0, b00, 0, b10], [0, b01, 0, b11]], dtype=np.int64)


def trace_pair_coeffs(m):
    """Coefficient vector c with tr(M Y) = c . flat(Y)."""
    return np.array([m[0], m[2], m[1], m[3]], dtype=np.int64)


def _pack(rows, q):
    """Pack an (N,4) array of residues mod q into scalar keys."""
    return ((rows[:, 0] * q + rows[:, 1]) * q + rows[:, 2]) * q + rows[:, 3]


# ---------------------------------------------------------------------------
# One-variable matrix phase integral and its Hessian
# ---------------------------------------------------------------------------


def nonabelian_gauss_integral(zmat, p, k, budget=10 ** 7):
    """Exact value of p^{-4k} sum_{Y mod p^k} e(tr(Y^2 zmat) / p^k).

    `zmat` is a flat integer matrix; the actual argument has denominator p^k.
    """
    if k < 0:
        raise PreconditionError("level must be non-negative")
    if k == 0:
        return CycloSum.from_int(1, p)
    q = p ** k
    if q ** 4 > budget:
        raise BudgetError("level too large")
    y = all_mats(q)
    s = mat_square_flat(y, q)
    # tr(S zmat) with S = Y^2
    z = [t % q for t in zmat]
    r = (s[:, 0] * z[0] + s[:, 1] * z[2] + s[:, 2] * z[1] + s[:, 3] * z[3]) % q
    counts = np.bincount(r, minlength=q)
    return CycloSum(p, k, {int(i): int(c) for i, c in enumerate(counts) if c},
                    scale=4 * k)


def hessian_pair(zmat):
    """The symmetric matrix J of the quadratic form tr(Y^2 Z) (so that
    tr(Y^2 Z) = (1/2) y^T J y with y = (y00, y01, y10, y11)) and a
    companion transform R with

        R^T J R = 2 tr(Z) diag(1, -1, 1, det Z),   det R = 2 tr(Z).

    Returns (J, R, cert) with exact integer certificates.
    """
    z00, z01, z10, z11 = zmat
    J = [[2 * z00, z10, z01, 0],
         [z10, 0, z00 + z11, z10],
         [z01, z00 + z11, 0, z01],
         [0, z10, z01, 2 * z11]]
    R = [[0, 0, 1, -z11],
         [1, 1, 0, z01],
         [1, -1, 0, z10],
         [0, 0, -1, -z00]]
    r = z00 + z11
    det_z = det_flat(zmat)
    target = [[2 * r, 0, 0, 0], [0, -2 * r, 0, 0],
              [0, 0, 2 * r, 0], [0, 0, 0, 2 * r * det_z]]
    jr = [[sum(J[i][t] * R[t][j] for t in range(4)) for j in range(4)]
          for i in range(4)]
    rjr = [[sum(R[t][i] * jr[t][j] for t in range(4)) for j in range(4)]
           for i in range(4)]
    if rjr != target:
        raise VerificationError("congruence transform certificate failed")
    from .linalg import _minor
    det_r = _minor(R, (0, 1, 2, 3), (0, 1, 2, 3))
    if det_r != 2 * r:
        raise VerificationError("transform determinant certificate failed")
    # the form itself: check tr(Y^2 Z) = (1/2) y^T J y on a basis of pairs
    for y in itertools.product((0, 1, 2), repeat=4):
        s = mat_mul_flat(y, y)
        lhs = 2 * (s[0] * z00 + s[1] * z10 + s[2] * z01 + s[3] * z11)
        rhs = sum(y[i] * J[i][j] * y[j] for i in range(4) for j in range(4))
        if lhs != rhs:
            raise VerificationError("hessian certificate failed")
    return J, R, {"det_r": det_r, "trace": r, "det_z": det_z}


def quadratic_magnitude_expected_sq(zmat, p, k):
    """Predicted |integral|^2 for `nonabelian_gauss_integral` when p is odd
    and |tr Z| >= 1 (Z = zmat / p^k):

        |I| = |tr Z|^{-1/2} max(|tr Z * det Z|, ||Z||^2)^{-1/2}.

    Returns a Fraction, or None when the hypothesis fails.
    """
    if p == 2:
        return None
    tr = trace_flat(zmat)
    vtr = pval(tr, p, cap=10 * k + 1)
    if vtr > k:  # |tr Z| < 1
        return None
    det = det_flat(zmat)
    vdet = pval(det, p, cap=10 * k + 1)
    vmin = min(pval(t, p, cap=10 * k + 1) for t in zmat)
    # p-adic sizes as exponents of p
    e_tr = k - vtr
    e_det = 2 * k - vdet
    e_norm = k - vmin
    e = -e_tr - max(e_tr + e_det, 2 * e_norm)
    return Fraction(p) ** e


# ---------------------------------------------------------------------------
# The constrained local integral I0
# ---------------------------------------------------------------------------


_SLOT_CACHE = {}


def _slot_static(delta, p, vd, level, coeff):
    """Gamma-independent slot data: the matrix grid and the packed keys of
    the divisibility condition. Cached; the grid and keys dominate the cost
    of repeated evaluations at the same modulus."""
    qc = p ** vd
    key = (tuple(delta), p, vd, level, coeff % qc)
    if key not in _SLOT_CACHE:
        if len(_SLOT_CACHE) > 12:
            _SLOT_CACHE.clear()
        q = p ** level
        y = all_mats(q)
        adj = adj_flat(delta)
        lmat = left_mul_matrix(adj) % qc
        s = mat_square_flat(y, q) % qc
        s = s * (coeff % qc) % qc
        _SLOT_CACHE[key] = (y, _pack((s @ lmat.T) % qc, qc))
    return _SLOT_CACHE[key]


def _slot_tables(delta, gammas, p, vd, level, coeffs):
    """Per-slot packed condition keys and phase residues, for Y mod p^level."""
    qc = p ** vd
    inv_u = pow(punit(det_flat(delta), p, p ** (vd + 1)), -1, qc) if vd else 1
    out = []
    for i, g in enumerate(gammas):
        if coeffs[i] % p == 0:
            raise PreconditionError("slot coefficients must be units")
        y, keys = _slot_static(delta, p, vd, level, coeffs[i])
        phase = (y @ trace_pair_coeffs(g) % qc) * inv_u % qc
        out.append((keys, phase))
    return out, qc


def i0_local(delta, gammas, p, level=None, coeffs=None, budget=10 ** 7):
    """Exact I0(delta, gamma) as a CycloSum.

    delta: flat 2x2 integer matrix with nonzero determinant;
    gammas: list of n flat matrices; coeffs: optional unit coefficients of
    the slotwise squares in P(Y).

    The averaging level defaults to v_p(det delta), which suffices: both the
    divisibility condition and the phase only depend on Y mod p^{v}.
    """
    n = len(gammas)
    det = det_flat(delta)
    if det == 0:
        raise PreconditionError("delta must be invertible over the fractions")
    vd = pval(det, p)
    if coeffs is None:
        coeffs = [1] * n
    if level is None:
        level = vd
    if level < vd:
        raise PreconditionError("averaging level below the conductor")
    if vd == 0:
        return CycloSum.from_int(1, p)
    if n not in (1, 2):
        raise BudgetError("slot count limited to 1 or 2 here")
    if p ** (4 * level) > budget:
        raise BudgetError("enumeration exceeds budget")
    tables, qc = _slot_tables(delta, gammas, p, vd, level, coeffs)
    if n == 1:
        keys, phase = tables[0]
        mask = keys == 0
        counts = np.bincount(phase[mask], minlength=qc)
    else:
        (k1, ph1), (k2, ph2) = tables
        counts = _join_two_slots(k1, ph1, k2, ph2, qc)
    total = {int(r): int(c) for r, c in enumerate(counts) if c}
    return CycloSum(p, vd, total, scale=4 * n * level)


def _join_two_slots(k1, ph1, k2, ph2, qc):
    """counts[r] = #{(i,j) : k1[i] + k2[j] = 0 mod qc-packing, ph1+ph2 = r}.

    Key arithmetic: packed keys add componentwise only when we match k2
    against the packed negation of k1, so build the histograms over packed
    keys and join H1[k] with H2[neg(k)].
    """
    u1, inv1 = np.unique(k1, return_inverse=True)
    u2, inv2 = np.unique(k2, return_inverse=True)
    h1 = np.zeros((len(u1), qc), dtype=np.float64)
    np.add.at(h1, (inv1, ph1), 1.0)
    h2 = np.zeros((len(u2), qc), dtype=np.float64)
    np.add.at(h2, (inv2, ph2), 1.0)
    # negate packed keys of u1 componentwise
    neg = _pack(np.stack([(-_unpack_col(u1, qc, t)) % qc for t in range(4)],
                         axis=1), qc)
    pos = np.searchsorted(u2, neg)
    pos_clip = np.clip(pos, 0, len(u2) - 1)
    match = u2[pos_clip] == neg
    h2m = np.where(match[:, None], h2[pos_clip], 0.0)
    d = h1.T @ h2m  # (qc, qc): d[r1, r2] = paired count
    counts = np.zeros(qc, dtype=np.int64)
    for r in range(qc):
        # sum of d over anti-diagonals r1 + r2 = r mod qc
        idx = (r - np.arange(qc)) % qc
        val = d[np.arange(qc), idx].sum()
        counts[r] = int(round(val))
    return counts


def _unpack_col(keys, q, t):
    return (keys // q ** (3 - t)) % q


def i0_brute(delta, gammas, p, coeffs=None):
    """Independent slow reference for i0_local (tiny inputs only)."""
    n = len(gammas)
    det = det_flat(delta)
    vd = pval(det, p)
    if vd == 0:
        return CycloSum.from_int(1, p)
    q = p ** vd
    if q ** (4 * n) > 10 ** 7:
        raise BudgetError("brute reference too large")
    if coeffs is None:
        coeffs = [1] * n
    adj = adj_flat(delta)
    inv_u = pow(punit(det, p, p ** (vd + 1)), -1, q)
    counts = {}
    for ys in itertools.product(range(q), repeat=4 * n):
        s = (0, 0, 0, 0)
        ph = 0
        for i in range(n):
            yi = ys[4 * i:4 * i + 4]
            sq = mat_mul_flat(yi, yi)
            s = tuple((s[t] + coeffs[i] * sq[t]) % q for t in range(4))
            g = gammas[i]
            ph += g[0] * yi[0] + g[2] * yi[1] + g[1] * yi[2] + g[3] * yi[3]
        cond = mat_mul_flat(adj, s)
        if all(t % q == 0 for t in cond):
            r = ph * inv_u % q
            counts[r] = counts.get(r, 0) + 1
    return CycloSum(p, vd, counts, scale=4 * n * vd)


def phase_integral_z(zmat, delta, gammas, p, coeffs=None, budget=10 ** 7):
    """The unconstrained companion integral: average over Y in O^n of
    e(tr(Z adj(delta) P(Y)) + trd(gamma . Y)) / det(delta)). Factors over
    slots, so it is a product of single-slot sums."""
    det = det_flat(delta)
    vd = pval(det, p)
    if vd == 0:
        return CycloSum.from_int(1, p)
    q = p ** vd
    if q ** 4 > budget:
        raise BudgetError("enumeration exceeds budget")
    n = len(gammas)
    if coeffs is None:
        coeffs = [1] * n
    inv_u = pow(punit(det, p, p ** (vd + 1)), -1, q)
    zadj = mat_mul_flat(zmat, adj_flat(delta))
    y = all_mats(q)
    acc = CycloSum.from_int(1, p)
    for i, g in enumerate(gammas):
        s = mat_square_flat(y, q) * (coeffs[i] % q) % q
        r = (s[:, 0] * zadj[0] + s[:, 1] * zadj[2]
             + s[:, 2] * zadj[1] + s[:, 3] * zadj[3]
             + y @ trace_pair_coeffs(g)) % q * inv_u % q
        counts = np.bincount(r, minlength=q)
        slot = CycloSum(p, vd, {int(t): int(c) for t, c in enumerate(counts) if c},
                        scale=4 * vd)
        acc = acc * slot
    return acc


# ---------------------------------------------------------------------------
# Cyclic image generator and the auxiliary measure
# ---------------------------------------------------------------------------

_GEN_CACHE = {}


def matrix_cyclic_generator(eta, p):
    """Generator of the image of Y -> adj(eta) Y eta in M_2(Z/m), m = p^v
    with v = v_p(det eta), for primitive eta. The image is cyclic of order m;
    returns (gen_flat, m). Cached."""
    det = det_flat(eta)
    v = pval(det, p)
    m = p ** v
    key = (tuple(t % m for t in eta), p)
    if key in _GEN_CACHE:
        return _GEN_CACHE[key]
    if m == 1:
        _GEN_CACHE[key] = ((0, 0, 0, 0), 1)
        return _GEN_CACHE[key]
    if min(pval(t, p, cap=1) for t in eta) > 0:
        raise PreconditionError("eta must be primitive")
    # flat(adj(eta) Y eta) = L R flat(Y); L and R commute
    cmat = (left_mul_matrix(adj_flat(eta)) @ right_mul_matrix(eta)) % m
    ys = all_mats(m)
    img = np.unique((ys @ cmat.T) % m, axis=0)
    if len(img) != m:
        raise VerificationError(
            f"cyclic image has {len(img)} elements, expected {m}")
    img_set = {tuple(int(t) for t in row) for row in img}
    gen = None
    for row in img_set:
        orbit = {tuple(lam * t % m for t in row) for lam in range(m)}
        if orbit == img_set:
            gen = row
            break
    if gen is None:
        raise VerificationError("no cyclic generator found")
    _GEN_CACHE[key] = (gen, m)
    return _GEN_CACHE[key]


_WMEASURE_CACHE = {}


def _w_measure_from_target(target, gen, m, p):
    """Volume of {Z mod m : target lies in (Z/m) * Z gen + m O}. Cached:
    the same few class keys recur across every gamma at a fixed modulus."""
    if m == 1:
        return Fraction(1)
    key = (tuple(int(t) % m for t in target), tuple(gen), m, p)
    if key in _WMEASURE_CACHE:
        return _WMEASURE_CACHE[key]
    if len(_WMEASURE_CACHE) > 4096:
        _WMEASURE_CACHE.clear()
    rn = right_mul_matrix(gen) % m
    zs = all_mats(m)
    w = (zs @ rn.T) % m
    t = np.array(target, dtype=np.int64) % m
    ok = np.zeros(len(zs), dtype=bool)
    for lam in range(m):
        ok |= ((lam * w - t) % m == 0).all(axis=1)
    out = Fraction(int(ok.sum()), m ** 4)
    _WMEASURE_CACHE[key] = out
    return out


def w_measure(m0, eta, p):
    """The measure factor for a witness matrix m0 against primitive eta."""
    gen, m = matrix_cyclic_generator(eta, p)
    target = tuple(t % m for t in mat_mul_flat(m0, eta))
    return _w_measure_from_target(target, gen, m, p)


def m0_class_key(m0, eta, p):
    """Canonical key of the witness class: m0 * eta mod m up to unit scaling."""
    det = det_flat(eta)
    m = p ** pval(det, p)
    if m == 1:
        return (0, 0, 0, 0)
    t = tuple(x % m for x in mat_mul_flat(m0, eta))
    return min(tuple(lam * x % m for x in t)
               for lam in range(1, m) if lam % p != 0)


def w_class_sum_report(eta, p):
    """Sum of the measure factor over all witness classes; the structural
    bound is v_p(det eta) + 1. Returns (classes, total, bound)."""
    gen, m = matrix_cyclic_generator(eta, p)
    v = pval(det_flat(eta), p)
    if m == 1:
        return 1, Fraction(1), 1
    rn = right_mul_matrix(eta) % m
    targets = np.unique((all_mats(m) @ rn.T) % m, axis=0)
    classes = set()
    for row in targets:
        t = tuple(int(x) for x in row)
        classes.add(min(tuple(lam * x % m for x in t)
                        for lam in range(1, m) if lam % p != 0))
    total = Fraction(0)
    for t in sorted(classes):
        total += _w_measure_from_target(t, gen, m, p)
    return len(classes), total, v + 1


# ---------------------------------------------------------------------------
# Witnesses and the magnitude bound
# ---------------------------------------------------------------------------


def split_primitive_part(delta, p):
    """delta = p^v * eta with eta primitive; returns (v, eta_flat)."""
    v = min(pval(t, p, cap=64) for t in delta)
    if v >= 64:
        raise PreconditionError("delta is zero")
    return v, tuple(t // p ** v for t in delta)


def witness_report(delta, gammas, p):
    """Search for witnesses (M0, mu) with gamma'_j eta = mu_j M0 eta mod m,
    mu primitive. Returns dict with 'witnesses' (class key -> measure) and
    'bound_sq' (min over witnesses of the squared magnitude bound), or
    witnesses = {} when none exist.
    """
    n = len(gammas)
    vdel, eta = split_primitive_part(delta, p)
    veta = pval(det_flat(eta), p)
    m = p ** veta
    # support condition: gamma must be divisible by p^vdel
    if any(t % p ** vdel for g in gammas for t in g):
        return {"supported": False, "witnesses": {}, "bound_sq": None}
    gprime = [tuple(t // p ** vdel for t in g) for g in gammas]
    ge = [tuple(t % m for t in mat_mul_flat(g, eta)) for g in gprime]
    gen, _ = matrix_cyclic_generator(eta, p)

    candidates = {}
    # zero witness: valid when every slot is divisible by m
    if all(all(t == 0 for t in v) for v in ge):
        candidates[(0, 0, 0, 0)] = [1] + [0] * (n - 1)
    for i in range(n):
        t = ge[i]
        if m > 1 and all(x == 0 for x in t):
            continue
        mu = []
        ok = True
        for j in range(n):
            lam = next((lam for lam in range(m)
                        if all((ge[j][x] - lam * t[x]) % m == 0 for x in range(4))),
                       None)
            if lam is None:
                ok = False
                break
            mu.append(lam if j != i else 1)
        if ok:
            key = (min(tuple(lam * x % m for x in t)
                       for lam in range(1, max(m, 2)) if lam % p != 0)
                   if m > 1 else (0, 0, 0, 0))
            candidates.setdefault(key, mu)

    witnesses = {}
    bound_sq = None
    for key, mu in candidates.items():
        wm = _w_measure_from_target(key, gen, m, p)
        witnesses[key] = (wm, tuple(mu))
        bsq = _bound_sq(gprime, eta, vdel, veta, wm, p, n)
        if bound_sq is None or bsq < bound_sq:
            bound_sq = bsq
    return {"supported": True, "witnesses": witnesses, "bound_sq": bound_sq,
            "gprime": gprime, "eta": eta, "vdel": vdel, "veta": veta}


def _bound_sq(gprime, eta, vdel, veta, wm, p, n):
    """Squared magnitude bound
    (W * |det eta|^{3n/2} ||delta||^n
       / (max(||(g'-g'^+)eta||, |det eta|)^{n/2} max(||g'||, ||delta|| |det eta|)^n))^2
    as an exact Fraction (p-adic absolute values)."""
    cap = veta + vdel + 1
    v_b = min((pval(t, p, cap=cap)
               for g in gprime
               for t in mat_mul_flat(tuple(a - b for a, b in zip(g, adj_flat(g))),
                                     eta)), default=cap)
    v_gp = min((pval(t, p, cap=cap) for g in gprime for t in g), default=cap)
    e = (-3 * n * veta - 2 * n * vdel
         + n * min(v_b, veta) + 2 * n * min(v_gp, vdel + veta))
    return wm * wm * Fraction(p) ** e


def cyclo_abs_sq(v):
    """|v|^2 of a CycloSum, as an exact Fraction when rational else a float."""
    pk = v.p ** v.k
    conj = CycloSum(v.p, v.k, {(-r) % pk: c for r, c in v.counts.items()}, v.scale)
    sq = (v * conj).canonical()
    if sq.is_rational():
        return sq.to_fraction()
    return sq.magnitude()


def local_integral_audit(p, n, vds=(1, 2), max_gammas=200, seed=0,
                         check_class_sum=True):
    """Audit the support, witness, and magnitude-bound laws of i0_local.

    For each test delta with v_p(det) in `vds`, iterate over gamma tuples
    mod det-level (exhaustively when the space is small, else seeded
    samples) and verify:
      * out-of-support gammas give exactly zero;
      * a nonzero value implies a witness exists;
      * |I0|^2 <= best witness bound squared (1e-9 relative slack when the
        squared magnitude is irrational);
      * the class-sum bound for the measure factors.
    Raises VerificationError on any failure; returns a summary dict.
    """
    rng = random.Random(seed)
    report = {"p": p, "n": n, "checked": 0, "nonzero": 0, "cases": []}
    for vd in vds:
        for delta in _audit_deltas(p, vd):
            vdel, eta = split_primitive_part(delta, p)
            if check_class_sum:
                ncls, total, bound = w_class_sum_report(eta, p)
                if total > bound:
                    raise VerificationError(
                        f"class sum {total} exceeds {bound} for eta={eta}")
            level = p ** vd
            space = level ** (4 * n)
            if space <= 10 ** 4:
                gamma_iter = itertools.product(
                    itertools.product(range(level), repeat=4), repeat=n)
            else:
                gamma_iter = (
                    tuple(tuple(rng.randrange(level) * rng.choice([1, p ** vdel])
                                for _ in range(4)) for _ in range(n))
                    for _ in range(max_gammas))
            count = nz = 0
            for gammas in gamma_iter:
                val = i0_local(delta, [list(g) for g in gammas], p)
                rep = witness_report(delta, list(gammas), p)
                if not rep["supported"]:
                    if not val.is_zero():
                        raise VerificationError(
                            f"support law failed: delta={delta} gammas={gammas}")
                    count += 1
                    continue
                if not val.is_zero():
                    nz += 1
                    if not rep["witnesses"]:
                        raise VerificationError(
                            f"witness law failed: delta={delta} gammas={gammas}")
                    isq = cyclo_abs_sq(val)
                    bsq = rep["bound_sq"]
                    if isinstance(isq, Fraction):
                        ok = isq <= bsq
                    else:
                        ok = isq <= float(bsq) * (1 + 1e-9)
                    if not ok:
                        raise VerificationError(
                            f"magnitude bound failed: delta={delta} "
                            f"gammas={gammas} |I0|^2={isq} bound^2={bsq}")
                count += 1
            report["checked"] += count
            report["nonzero"] += nz
            report["cases"].append(
                {"delta": delta, "vd": vd, "checked": count, "nonzero": nz})
    return report


def _audit_deltas(p, vd):
    if vd == 1:
        return [(p, 0, 0, 1), (1, 1, 1 - p, 1 - p + p)]  # second: unit-conjugate-like
    return [(p * p, 0, 0, 1), (p, 0, 0, p), (p, 1, 0, p)]


# ---------------------------------------------------------------------------
# Prime-level point counts and identities
# ---------------------------------------------------------------------------


def x2_count(q, s):
    """#{a in F_q^n : sum a_i^2 = sum s_i a_i = 0} for s an n-vector."""
    n = len(s)
    grids = np.indices((q,) * n, dtype=np.int64).reshape(n, -1)
    sq = (grids * grids).sum(axis=0) % q
    lin = (grids * np.array(s, dtype=np.int64)[:, None]).sum(axis=0) % q
    return int(((sq == 0) & (lin == 0)).sum())


def s2_closed(q, n):
    return q ** (3 * n - 2) * (q ** n - 1) + q ** (2 * n) * x2_count(q, [0] * n)


def _slot_prime_tables(q, n, delta, gammas):
    y = all_mats(q)
    adj = adj_flat(delta)
    lmat = left_mul_matrix(adj) % q
    out = []
    for g in gammas:
        s = mat_square_flat(y, q)
        keys = _pack((s @ lmat.T) % q, q)
        tr = y @ trace_pair_coeffs(g) % q
        out.append((keys, tr))
    return out


def s2_brute(q, n, delta=None):
    delta = delta or (q, 0, 0, 1)
    tables = _slot_prime_tables(q, n, delta, [(0, 0, 0, 0)] * n)
    if n == 1:
        return int((tables[0][0] == 0).sum())
    k1, k2 = tables[0][0], tables[1][0]
    h1 = np.bincount(k1, minlength=q ** 4)
    h2 = np.bincount(k2, minlength=q ** 4)
    neg = _pack(np.stack([(-_unpack_col(np.arange(q ** 4), q, t)) % q
                          for t in range(4)], axis=1), q)
    return int((h1.astype(np.int64) * h2[neg]).sum())


def s3_brute(q, n, gammas, delta=None):
    delta = delta or (q, 0, 0, 1)
    tables = _slot_prime_tables(q, n, delta, gammas)
    if n == 1:
        keys, tr = tables[0]
        return int(((keys == 0) & (tr == 0)).sum())
    (k1, t1), (k2, t2) = tables
    c1 = np.bincount(k1 * q + t1, minlength=q ** 5).reshape(q ** 4, q)
    c2 = np.bincount(k2 * q + t2, minlength=q ** 5).reshape(q ** 4, q)
    neg = _pack(np.stack([(-_unpack_col(np.arange(q ** 4), q, t)) % q
                          for t in range(4)], axis=1), q)
    negt = (-np.arange(q)) % q
    return int((c1.astype(np.int64) * c2[neg][:, negt]).sum())


def s3_closed(q, n, gammas):
    """The exact case-by-case formula for S3 at delta = diag(q, 1).

    gammas are the n flat matrices mod q; each gamma_i = [[s_i, u_i],
    [t_i, v_i]]. The residual point counts in the formula live in at most
    n+1 variables and are evaluated directly.
    """
    s = [g[0] % q for g in gammas]
    u = [g[1] % q for g in gammas]
    t = [g[2] % q for g in gammas]
    v = [g[3] % q for g in gammas]
    u_nonzero = any(u)
    v_nonzero = any(v)
    uv_nonzero = u_nonzero or v_nonzero
    x20 = x2_count(q, [0] * n)
    total = 0
    if uv_nonzero:
        total += q ** (2 * n - 1) * x20 + q ** (3 * n - 3) * (q ** n - q)
    if u_nonzero:
        v_in_line = _in_line(v, u, q)
        if v_in_line is None:
            total += q ** (3 * n - 3) * (q - 1)
        else:
            cnt = _count_quadric_al(q, n, s, v, t, u)
            total += q ** (2 * n - 2) * (cnt - x20)
    elif v_nonzero:
        sv = [(s[i] - v[i]) % q for i in range(n)]
        tv = sum(t[i] * v[i] for i in range(n)) % q
        with_l = sum(1 for a in itertools.product(range(q), repeat=n)
                     for lam in range(q)
                     if (sum(sv[i] * a[i] for i in range(n)) + tv * lam) % q == 0)
        without = sum(1 for a in itertools.product(range(q), repeat=n)
                      if sum(sv[i] * a[i] for i in range(n)) % q == 0)
        total += q ** (2 * n - 2) * (with_l - without)
    else:
        x2s = x2_count(q, s)
        ab = sum(1 for a in itertools.product(range(q), repeat=n)
                 for b in itertools.product(range(q), repeat=n)
                 if sum(s[i] * a[i] + t[i] * b[i] for i in range(n)) % q == 0)
        a_only = sum(1 for a in itertools.product(range(q), repeat=n)
                     if sum(s[i] * a[i] for i in range(n)) % q == 0)
        total += q ** (2 * n) * x2s + q ** (2 * n - 2) * (ab - a_only)
    return total


def _in_line(v, u, q):
    """kappa with v = kappa * u mod q, or None."""
    for kappa in range(q):
        if all((v[i] - kappa * u[i]) % q == 0 for i in range(len(u))):
            return kappa
    return None


def _count_quadric_al(q, n, s, v, t, u):
    """#{(a, lambda): sum a_i^2 = sum (s_i - v_i) a_i lambda + t_i u_i lambda^2}."""
    cnt = 0
    for lam in range(q):
        rhs_quad = sum(t[i] * u[i] for i in range(n)) * lam * lam
        for a in itertools.product(range(q), repeat=n):
            lhs = sum(ai * ai for ai in a)
            rhs = sum((s[i] - v[i]) * a[i] for i in range(n)) * lam + rhs_quad
            if (lhs - rhs) % q == 0:
                cnt += 1
    return cnt


def _is_scalar_line(mats, q):
    """True when the tuple of matrices lies on a line c_i * M."""
    nz = [m for m in mats if any(x % q for x in m)]
    if not nz:
        return True
    base = nz[0]
    for m in nz[1:]:
        # m and base proportional mod q?
        found = any(all((m[x] - lam * base[x]) % q == 0 for x in range(4))
                    for lam in range(1, q))
        if not found:
            return False
    return True


def prime_case_report(q, n, num_gamma=500, seed=0, check_brute_s3=True):
    """Exact prime-level identities. Raises VerificationError on failure."""
    rng = random.Random(seed)
    delta = (q, 0, 0, 1)
    report = {"q": q, "n": n, "checked": 0, "case_histogram": {}}

    s2b = s2_brute(q, n)
    if s2b != s2_closed(q, n):
        raise VerificationError("closed S2 formula mismatch")
    # identity (zero gamma): q^{4n} I0(delta, 0) = S2
    i00 = i0_local(delta, [(0, 0, 0, 0)] * n, q)
    if (i00 * q ** (4 * n) - CycloSum.from_int(s2b, q)).is_zero() is False:
        raise VerificationError("I0 at zero gamma does not match S2")
    report["s2"] = s2b

    gammas_seen = []
    # make sure all structural cases appear: targeted gammas + random ones
    forced = _forced_case_gammas(q, n)
    while len(gammas_seen) < num_gamma:
        if forced:
            g = forced.pop()
        else:
            g = tuple(tuple(rng.randrange(q) for _ in range(4)) for _ in range(n))
        gammas_seen.append(g)
    for g in gammas_seen:
        gl = [list(x) for x in g]
        s3b = s3_brute(q, n, g) if check_brute_s3 else None
        s3c = s3_closed(q, n, g)
        if check_brute_s3 and s3b != s3c:
            raise VerificationError(f"closed S3 mismatch at gamma={g}")
        val = i0_local(delta, gl, q)
        # q^{4n} (1 - 1/q) I0 = S3 - S2/q, exactly
        lhs = val * (q ** (4 * n) - q ** (4 * n - 1))
        rhs = CycloSum.from_fraction(Fraction(s3c) - Fraction(s2b, q), q)
        if not (lhs - rhs).is_zero():
            raise VerificationError(f"prime-level identity failed at gamma={g}")
        # indicator identities relating the (u, v) casework to invariants
        _check_indicator_identities(q, g, delta)
        case = _case_label(q, g)
        report["case_histogram"][case] = report["case_histogram"].get(case, 0) + 1
        report["checked"] += 1

    # symmetry under unit multiplications and homogeneity
    for _ in range(20):
        g = [[rng.randrange(q) for _ in range(4)] for _ in range(n)]
        val = i0_local(delta, g, q)
        a = rng.choice([1] + list(range(2, q)))
        if (val - i0_local(delta, [[a * x % q for x in gi] for gi in g], q)
                ).is_zero() is False:
            raise VerificationError("scalar homogeneity failed")
        alpha, alpha_inv = _random_unit_pair(q, rng)
        beta = _random_unit_pair(q, rng)[0]
        d2 = mat_mul_flat(mat_mul_flat(alpha, delta), beta)
        g2 = [mat_mul_flat(mat_mul_flat(alpha, tuple(gi)), alpha_inv) for gi in g]
        if (val - i0_local(d2, g2, q)).is_zero() is False:
            raise VerificationError("unit symmetry failed")
    return report


def _case_label(q, g):
    u = [x[1] % q for x in g]
    v = [x[3] % q for x in g]
    if not any(u) and not any(v):
        return "u=v=0"
    if not any(u):
        return "u=0,v!=0"
    return "u!=0,v in line" if _in_line(v, u, q) is not None else "u!=0,v off line"


def _forced_case_gammas(q, n):
    """One gamma per structural case of the closed formula."""
    zero = tuple(0 for _ in range(4))
    mk = lambda s, u, t, v: (s, u, t, v)
    out = [
        tuple([mk(1, 0, 1, 0)] + [zero] * (n - 1)),            # u=v=0
        tuple([mk(0, 0, 1, 1)] + [zero] * (n - 1)),            # u=0, v!=0
        tuple([mk(1, 1, 1, 1)] + [zero] * (n - 1)),            # u!=0, v in line
        tuple([zero] * n),                                      # all zero
    ]
    if n >= 2:
        out.append((mk(0, 1, 0, 0), mk(0, 0, 0, 1)))           # v not in F_q u
    else:
        pass
    return out


def _check_indicator_identities(q, g, delta):
    """The (u,v) case indicators agree with their invariant reformulations."""
    u = [x[1] % q for x in g]
    v = [x[3] % q for x in g]
    gd = [mat_mul_flat(tuple(x), delta) for x in g]
    dga = [mat_mul_flat(adj_flat(delta), t) for t in gd]
    gd_zero = all(all(t % q == 0 for t in m) for m in gd)
    dgd_zero = all(all(t % q == 0 for t in m) for m in dga)
    if ((not any(u) and not any(v)) != gd_zero):
        raise VerificationError("indicator identity (u=v=0) failed")
    if ((not any(u)) and any(v)) != (dgd_zero and not gd_zero):
        raise VerificationError("indicator identity (u=0, v!=0) failed")
    if any(u):
        in_line = _in_line(v, u, q) is not None
        scalar_line = _is_scalar_line([tuple(t % q for t in m) for m in gd], q)
        if (in_line != (scalar_line and not dgd_zero)):
            raise VerificationError("indicator identity (u!=0 cases) failed")


def _random_unit_pair(q, rng):
    while True:
        m = tuple(rng.randrange(q) for _ in range(4))
        d = det_flat(m) % q
        if d % q and d != 0:
            dinv = pow(d, -1, q)
            adj = adj_flat(m)
            return m, tuple(x * dinv % q for x in adj)
