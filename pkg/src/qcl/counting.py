"""Exact counts of quaternion tuples solving a signed sum-of-squares equation.

Counts gamma = (gamma_1, ..., gamma_n) with integral quaternion entries of
bounded height satisfying sum_i upsilon_i * gamma_i^2 = 0, upsilon_i = +-1.
Two independent engines are provided: a direct nested enumeration
(brute_count) and a meet-in-the-middle convolution over sparse value
histograms (conv_count).  They must agree exactly wherever both run.

The traceless slice is counted twice as well: once through the quaternion
engine and once as a plain integer quadric in 3n variables; the two agree
because a traceless quaternion squares to a rational scalar.
"""

import itertools
import math

import numpy as np

from .algebra import HurwitzQuat
from .errors import BudgetError, PreconditionError

# Packed key layout: four signed 16-bit lanes in one 64-bit word.  The three
# low lanes carry a +2^15 bias; the top lane is stored as a signed multiple
# of 2^48 so the packed word stays inside int64.
_LANE_BIAS = 1 << 15
_BIAS3 = _LANE_BIAS | (_LANE_BIAS << 16) | (_LANE_BIAS << 32)
_LANE_MASK = (1 << 16) - 1

_OUTER_CHUNK = 20_000_000  # max elements per outer-sum block


def pack_key(v):
    """Pack a 4-tuple of small integers into one 64-bit key."""
    for t in v:
        if not -_LANE_BIAS < t < _LANE_BIAS:
            raise PreconditionError("coordinate out of 16-bit lane range")
    return ((v[3] << 48) + ((v[2] + _LANE_BIAS) << 32)
            + ((v[1] + _LANE_BIAS) << 16) + (v[0] + _LANE_BIAS))


def unpack_key(k):
    k = int(k)
    v0 = (k & _LANE_MASK) - _LANE_BIAS
    v1 = ((k >> 16) & _LANE_MASK) - _LANE_BIAS
    v2 = ((k >> 32) & _LANE_MASK) - _LANE_BIAS
    v3 = (k - (v0 + _LANE_BIAS) - ((v1 + _LANE_BIAS) << 16)
          - ((v2 + _LANE_BIAS) << 32)) >> 48
    return (v0, v1, v2, v3)


def _neg_key(keys):
    # pack(-v) = 2*BIAS3 - pack(v): the top lane negates natively, the
    # biased lanes reflect around the bias.
    return 2 * _BIAS3 - keys


class SparseDist:
    """Histogram of 4-coordinate integer values under packed 64-bit keys.

    keys is a sorted int64 array, counts the matching multiplicities, and
    bound is the declared max absolute coordinate (used to rule out lane
    carries when two distributions are convolved).
    """

    __slots__ = ("keys", "counts", "bound", "mass")

    def __init__(self, keys, counts, bound):
        order = np.argsort(keys, kind="stable")
        self.keys = np.ascontiguousarray(keys[order])
        self.counts = np.ascontiguousarray(counts[order])
        self.bound = int(bound)
        if self.bound >= _LANE_BIAS:
            raise PreconditionError("coordinate bound exceeds 16-bit lanes")
        self.mass = int(np.sum(self.counts, dtype=object))

    @classmethod
    def from_values(cls, values, bound):
        """Build from an iterable of 4-tuples (with multiplicity)."""
        keys = np.fromiter((pack_key(v) for v in values), dtype=np.int64)
        uk, uc = np.unique(keys, return_counts=True)
        return cls(uk, uc.astype(np.int64), bound)

    @classmethod
    def delta(cls):
        return cls(np.array([pack_key((0, 0, 0, 0))], dtype=np.int64),
                   np.array([1], dtype=np.int64), 0)

    @property
    def entries(self):
        return {unpack_key(k): int(c)
                for k, c in zip(self.keys, self.counts)}

    def multiplicity(self, v):
        i = int(np.searchsorted(self.keys, pack_key(v)))
        if i < len(self.keys) and int(self.keys[i]) == pack_key(v):
            return int(self.counts[i])
        return 0

    def value_multiset(self):
        return {unpack_key(k): int(c) for k, c in zip(self.keys, self.counts)}


def dist_convolve(a, b):
    """Exact additive convolution of two SparseDists."""
    if a.bound + b.bound >= _LANE_BIAS:
        raise PreconditionError("convolution would overflow key lanes")
    # the key arithmetic a+b-BIAS3 is carry-free once the bound check holds
    if len(a.keys) < len(b.keys):
        a, b = b, a
    chunk = max(1, _OUTER_CHUNK // max(len(a.keys), 1))
    parts_k, parts_c = [], []
    for start in range(0, len(b.keys), chunk):
        kb = b.keys[start:start + chunk]
        cb = b.counts[start:start + chunk]
        ks = (a.keys[:, None] + kb[None, :] - _BIAS3).ravel()
        cs = (a.counts[:, None] * cb[None, :]).ravel()
        uk, inv = np.unique(ks, return_inverse=True)
        uc = np.zeros(len(uk), dtype=np.int64)
        np.add.at(uc, inv, cs)
        parts_k.append(uk)
        parts_c.append(uc)
    allk = np.concatenate(parts_k)
    allc = np.concatenate(parts_c)
    uk, inv = np.unique(allk, return_inverse=True)
    uc = np.zeros(len(uk), dtype=np.int64)
    np.add.at(uc, inv, allc)
    out = SparseDist(uk, uc, a.bound + b.bound)
    assert out.mass == a.mass * b.mass
    return out


def dist_pair_zero(a, b):
    """sum_v a(v) * b(-v), exact in unbounded integers."""
    targets = _neg_key(a.keys)
    idx = np.searchsorted(b.keys, targets)
    ok = idx < len(b.keys)
    ok[ok] &= b.keys[idx[ok]] == targets[ok]
    ca = a.counts[ok].astype(object)
    cb = b.counts[idx[ok]].astype(object)
    return int(np.sum(ca * cb)) if len(ca) else 0


def hurwitz_box(X):
    """All integral quaternions of sup-norm at most X, as HurwitzQuat.

    Doubled coordinates are either all even or all odd, each bounded by 2X
    in absolute value; the box has (2X+1)^4 + (2X)^4 elements.
    """
    if X < 1:
        raise PreconditionError("height must be >= 1")
    out = []
    evens = range(-2 * X, 2 * X + 1, 2)
    odds = range(-2 * X + 1, 2 * X, 2)
    for parity in (evens, odds):
        for c in itertools.product(parity, repeat=4):
            out.append(HurwitzQuat(*c))
    return out


def box_size(X):
    return (2 * X + 1) ** 4 + (2 * X) ** 4


def _square_doubled_coords(g, sign):
    """Doubled coordinates of sign * g^2 (integers of equal parity)."""
    s = g * g
    assert len({c % 2 for c in s.c}) == 1
    return tuple(sign * c for c in s.c)


def slot_square_values(sign, X, traceless=False):
    """Doubled-coordinate 4-tuples of sign * g^2 over the height-X box."""
    if sign not in (1, -1):
        raise PreconditionError("signs must be +-1")
    if traceless:
        src = (HurwitzQuat(0, 2 * x, 2 * y, 2 * z)
               for x, y, z in itertools.product(range(-X, X + 1), repeat=3))
    else:
        src = hurwitz_box(X)
    return [_square_doubled_coords(g, sign) for g in src]


def slot_square_dist(sign, X, traceless=False):
    bound = 2 * (2 * X) ** 2
    return SparseDist.from_values(slot_square_values(sign, X, traceless),
                                  bound)


def _check_signature(n, upsilon):
    upsilon = tuple(upsilon)
    if len(upsilon) != n:
        raise PreconditionError("need one sign per slot")
    if any(u not in (1, -1) for u in upsilon):
        raise PreconditionError("signs must be +-1")
    return upsilon


def brute_count(n, upsilon, X):
    """Exact solution count by direct nested enumeration.

    Enumerates the first n-1 slots with nested loops and resolves the last
    slot against a tabulated histogram of its possible values.
    """
    if not 1 <= n <= 3 or X > 2:
        raise PreconditionError("brute engine is limited to n <= 3, X <= 2")
    upsilon = _check_signature(n, upsilon)
    if box_size(X) ** n > 10 ** 9:
        raise BudgetError("enumeration box too large")
    slots = [slot_square_values(u, X) for u in upsilon]
    if n == 1:
        return sum(1 for v in slots[0] if v == (0, 0, 0, 0))
    last = {}
    for v in slots[-1]:
        last[v] = last.get(v, 0) + 1
    total = 0
    if n == 2:
        for v in slots[0]:
            total += last.get((-v[0], -v[1], -v[2], -v[3]), 0)
    else:
        for v1 in slots[0]:
            for v2 in slots[1]:
                key = (-v1[0] - v2[0], -v1[1] - v2[1],
                       -v1[2] - v2[2], -v1[3] - v2[3])
                total += last.get(key, 0)
    return total


def _build_dist(dists, order):
    if len(dists) == 1:
        return dists[0]
    if order == "sequential":
        acc = dists[0]
        for d in dists[1:]:
            acc = dist_convolve(acc, d)
        return acc
    h = len(dists) // 2
    return dist_convolve(_build_dist(dists[:h], order),
                         _build_dist(dists[h:], order))


def conv_count(n, upsilon, X, order="balanced", traceless=False):
    """Exact solution count by sparse-histogram convolution.

    Builds the per-slot distribution of sign * g^2, convolves the slots
    (balanced binary tree by default), and reads the multiplicity of zero
    via a final meet-in-the-middle pairing.
    """
    if n == 0:
        return 1
    upsilon = _check_signature(n, upsilon)
    if order not in ("balanced", "sequential"):
        raise PreconditionError("unknown convolution order")
    if (2 * n * (2 * X) ** 2 + 1) ** 4 > 5 * 10 ** 9:
        raise BudgetError("value support exceeds memory budget")
    dists = [slot_square_dist(u, X, traceless) for u in upsilon]
    if n == 1:
        return dists[0].multiplicity((0, 0, 0, 0))
    h = (n + 1) // 2
    left = _build_dist(dists[:h], order)
    right = _build_dist(dists[h:], order)
    return dist_pair_zero(left, right)


def _quadric_histogram(sign, X):
    """Histogram of sign * (x^2 + y^2 + z^2) over the integer cube."""
    hist = {}
    for x, y, z in itertools.product(range(-X, X + 1), repeat=3):
        v = sign * (x * x + y * y + z * z)
        hist[v] = hist.get(v, 0) + 1
    return hist


def traceless_count(n, upsilon, X):
    """Count solutions with every slot traceless, by two unrelated engines.

    Returns (count, quadric_count): count runs the quaternion convolution
    engine restricted to traceless elements; quadric_count enumerates the
    3n-variable integer quadric sum_i upsilon_i (x_i^2+y_i^2+z_i^2) = 0
    without ever forming a quaternion.  A traceless quaternion squares to
    minus its norm, so the two are equal.
    """
    upsilon = _check_signature(n, upsilon)
    if (2 * X + 1) ** 3 * n > 10 ** 8:
        raise BudgetError("quadric slot enumeration too large")
    count = conv_count(n, upsilon, X, traceless=True)
    # independent scalar engine: 1D histogram convolution in exact integers
    acc = {0: 1}
    for u in upsilon:
        hist = _quadric_histogram(u, X)
        nxt = {}
        for a, ca in acc.items():
            for b, cb in hist.items():
                nxt[a + b] = nxt.get(a + b, 0) + ca * cb
        acc = nxt
    quadric = acc.get(0, 0)
    return count, quadric


def growth_report(n, upsilon, heights, traceless=False):
    """Counts at increasing heights with successive log2 slopes.

    Purely descriptive: the asymptotic regime is far beyond desk scale, so
    slopes are reported, never asserted.
    """
    upsilon = _check_signature(n, upsilon)
    heights = list(heights)
    if any(heights[i] >= heights[i + 1] for i in range(len(heights) - 1)):
        raise PreconditionError("heights must be strictly increasing")
    rows = []
    prev = None
    for X in heights:
        if traceless:
            cnt, _ = traceless_count(n, upsilon, X)
        else:
            cnt = conv_count(n, upsilon, X)
        slope = None
        if prev is not None and prev[1] > 0 and cnt > 0:
            slope = (math.log2(cnt / prev[1])
                     / math.log2(X / prev[0]))
        rows.append({"X": X, "count": cnt, "log2_slope": slope})
        prev = (X, cnt)
    return {
        "n": n,
        "upsilon": list(upsilon),
        "traceless": traceless,
        "rows": rows,
        "note": ("slopes are descriptive only; the asymptotic regime is "
                 "not reachable at these heights"),
    }
