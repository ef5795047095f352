import itertools

import pytest

from qcl.counting import (
    SparseDist, box_size, brute_count, conv_count, dist_convolve,
    dist_pair_zero, growth_report, hurwitz_box, pack_key, slot_square_dist,
    slot_square_values, traceless_count, unpack_key,
)
from qcl.errors import BudgetError, PreconditionError


class TestPackedKeys:
    def test_roundtrip(self):
        for v in [(0, 0, 0, 0), (1, -2, 3, -4), (-100, 100, -1, 7),
                  (32767, -32767, 32767, -32767)]:
            assert unpack_key(pack_key(v)) == v

    def test_additivity(self):
        a, b = (3, -5, 7, -2), (-1, 4, -6, 9)
        s = tuple(x + y for x, y in zip(a, b))
        bias = pack_key((0, 0, 0, 0))
        assert pack_key(a) + pack_key(b) - bias == pack_key(s)

    def test_out_of_range(self):
        with pytest.raises(PreconditionError):
            pack_key((1 << 15, 0, 0, 0))


class TestSparseDist:
    def test_box_sizes(self):
        assert len(hurwitz_box(1)) == box_size(1) == 97
        assert len(hurwitz_box(2)) == box_size(2) == 881

    def test_mass_equals_box(self):
        d = slot_square_dist(1, 1)
        assert d.mass == 97
        assert sum(d.entries.values()) == 97

    def test_squares_are_integral(self):
        # every key unpacks to integer true coordinates by construction;
        # spot-check the multiset against a direct recomputation
        vals = slot_square_values(-1, 1)
        d = slot_square_dist(-1, 1)
        direct = {}
        for v in vals:
            direct[v] = direct.get(v, 0) + 1
        assert d.value_multiset() == direct

    def test_convolve_matches_direct(self):
        a = slot_square_dist(1, 1)
        b = slot_square_dist(-1, 1)
        c = dist_convolve(a, b)
        assert c.mass == 97 * 97
        # direct dict convolution as oracle
        direct = {}
        for va, ca in a.value_multiset().items():
            for vb, cb in b.value_multiset().items():
                k = tuple(x + y for x, y in zip(va, vb))
                direct[k] = direct.get(k, 0) + ca * cb
        assert c.value_multiset() == direct

    def test_pair_zero_matches_convolve(self):
        a = slot_square_dist(1, 1)
        b = slot_square_dist(-1, 1)
        assert dist_pair_zero(a, b) == dist_convolve(a, b).multiplicity(
            (0, 0, 0, 0))

    def test_conjugation_multiset_invariance(self):
        # the value multiset of sign * g^2 is stable under v -> conjugate(v)
        for sign in (1, -1):
            for X in (1, 2):
                ms = slot_square_dist(sign, X).value_multiset()
                conj = {(v[0], -v[1], -v[2], -v[3]): c for v, c in ms.items()}
                assert ms == conj


class TestBruteCount:
    def test_single_slot_anisotropy(self):
        assert brute_count(1, [1], 1) == 1
        assert brute_count(1, [-1], 2) == 1

    def test_preconditions(self):
        with pytest.raises(PreconditionError):
            brute_count(4, [1, 1, 1, 1], 1)
        with pytest.raises(PreconditionError):
            brute_count(2, [1, 2], 1)


class TestConvCount:
    def test_empty_product(self):
        assert conv_count(0, [], 1) == 1

    @pytest.mark.parametrize("signs", list(itertools.product((1, -1),
                                                             repeat=2)))
    def test_matches_brute_n2(self, signs):
        for X in (1, 2):
            assert conv_count(2, signs, X) == brute_count(2, signs, X)

    def test_matches_brute_n3_sample(self):
        for signs in [(1, 1, -1), (1, -1, -1)]:
            assert conv_count(3, signs, 1) == brute_count(3, signs, 1)

    def test_slot_permutation_invariance(self):
        base = conv_count(3, (1, 1, -1), 1)
        assert conv_count(3, (1, -1, 1), 1) == base
        assert conv_count(3, (-1, 1, 1), 1) == base

    def test_monotone_in_height(self):
        assert conv_count(2, (1, -1), 2) >= conv_count(2, (1, -1), 1)

    def test_order_independence(self):
        signs = (1, 1, -1, -1, 1)
        assert (conv_count(5, signs, 1, order="balanced")
                == conv_count(5, signs, 1, order="sequential"))

    def test_budget(self):
        with pytest.raises(BudgetError):
            conv_count(9, [1] * 9, 8)


class TestTraceless:
    def test_definite_origin_only(self):
        assert traceless_count(2, (1, 1), 2) == (1, 1)
        assert traceless_count(3, (-1, -1, -1), 1) == (1, 1)

    def test_engines_agree_indefinite(self):
        for signs, X in [((1, -1), 1), ((1, -1), 2), ((1, 1, -1), 1)]:
            cnt, quad = traceless_count(len(signs), signs, X)
            assert cnt == quad

    def test_pinned_by_direct_enumeration(self):
        # 6-variable direct oracle for n=2, signs (+1,-1), X=2
        X = 2
        direct = 0
        for v in itertools.product(range(-X, X + 1), repeat=6):
            if (v[0] ** 2 + v[1] ** 2 + v[2] ** 2
                    == v[3] ** 2 + v[4] ** 2 + v[5] ** 2):
                direct += 1
        cnt, quad = traceless_count(2, (1, -1), X)
        assert cnt == quad == direct

    def test_subset_of_full_count(self):
        cnt, _ = traceless_count(2, (1, -1), 2)
        assert cnt <= conv_count(2, (1, -1), 2)


class TestGrowthReport:
    def test_single_height(self):
        rep = growth_report(2, (1, -1), [1])
        assert len(rep["rows"]) == 1
        assert rep["rows"][0]["log2_slope"] is None

    def test_slopes_present(self):
        rep = growth_report(2, (1, -1), [1, 2])
        assert rep["rows"][1]["log2_slope"] is not None
        assert rep["rows"][1]["count"] == conv_count(2, (1, -1), 2)

    def test_traceless_slice(self):
        rep = growth_report(2, (1, -1), [1, 2, 3], traceless=True)
        counts = [r["count"] for r in rep["rows"]]
        assert counts == [traceless_count(2, (1, -1), x)[0]
                          for x in (1, 2, 3)]

    def test_heights_must_increase(self):
        with pytest.raises(PreconditionError):
            growth_report(2, (1, -1), [2, 1])
