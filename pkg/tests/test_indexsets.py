import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orthantpop import ArgumentError, cover_blocks, cover_blocks_clique, parity_blocks
from orthantpop.poly import monomials_up_to


def _blocks(cover):
    return [list(b) for b in cover.blocks]


def _brute_force_cover(alphas, s):
    """Literal transcription of the first-s recipe over an explicit list."""
    out = []
    for j, a in enumerate(alphas):
        w = [b for b in alphas[j:] if all((x + y) % 2 == 0 for x, y in zip(a, b))]
        t = w[:s]
        if any(set(t) <= set(prev) for prev in out if prev):
            out.append([])
        else:
            out.append(t)
    return out


class TestParity:
    def test_univariate(self):
        assert parity_blocks(1, 2) == {(0,): [(0,), (2,)], (1,): [(1,)]}

    def test_bivariate(self):
        classes = parity_blocks(2, 2)
        assert classes[(0, 0)] == [(0, 0), (2, 0), (0, 2)]
        assert classes[(1, 0)] == [(1, 0)]
        assert classes[(0, 1)] == [(0, 1)]
        assert classes[(1, 1)] == [(1, 1)]

    def test_degree_zero(self):
        assert parity_blocks(2, 0) == {(0, 0): [(0, 0)]}

    @pytest.mark.parametrize("n,d", [(1, 4), (2, 3), (3, 3), (4, 2)])
    def test_partition(self, n, d):
        classes = parity_blocks(n, d)
        flat = [a for members in classes.values() for a in members]
        assert sorted(flat) == sorted(monomials_up_to(n, d))
        assert len(flat) == len(set(flat))


class TestCover:
    def test_two_two_two(self):
        assert _blocks(cover_blocks(2, 2, 2)) == [
            [(0, 0), (2, 0)], [(1, 0)], [(0, 1)], [(2, 0), (0, 2)], [(1, 1)], []]

    @pytest.mark.parametrize("n,d", [(1, 3), (2, 2), (3, 2)])
    def test_singletons(self, n, d):
        cover = cover_blocks(n, d, 1)
        assert [b[0] for b in cover.blocks] == monomials_up_to(n, d)
        assert all(len(b) == 1 for b in cover.blocks)

    def test_large_s_gives_parity_classes(self):
        nonempty = [list(b) for _, b in cover_blocks(2, 2, 6).nonempty()]
        assert nonempty[0] == [(0, 0), (2, 0), (0, 2)]
        assert sorted(map(sorted, nonempty)) == sorted(map(sorted, parity_blocks(2, 2).values()))

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    @pytest.mark.parametrize("d", [0, 1, 2, 3, 4])
    def test_invariants_exhaustive(self, n, d):
        alphas = monomials_up_to(n, d)
        for s in sorted({1, 2, 3, 5, len(alphas)}):
            if s > len(alphas):
                continue
            cover = cover_blocks(n, d, s)
            assert len(cover) == len(alphas)
            assert set().union(*map(set, cover.blocks)) == set(alphas)
            for block in cover.blocks:
                assert len(block) <= s
                if block:
                    par = {tuple(e % 2 for e in a) for a in block}
                    assert len(par) == 1
            assert _blocks(cover) == _brute_force_cover(alphas, s)

    def test_deterministic(self):
        assert cover_blocks(3, 3, 4) == cover_blocks(3, 3, 4)

    def test_bad_s(self):
        with pytest.raises(ArgumentError):
            cover_blocks(2, 2, 0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 3), st.integers(0, 4), st.integers(1, 12))
    def test_even_sum_property(self, n, d, s):
        for block in cover_blocks(n, d, s).blocks:
            for a in block:
                for b in block:
                    assert all((x + y) % 2 == 0 for x, y in zip(a, b))


class TestCliqueCover:
    def test_first_variable(self):
        assert _blocks(cover_blocks_clique([0], 2, 2, n=2)) == [[(0, 0), (2, 0)], [(1, 0)], []]

    def test_second_variable(self):
        assert _blocks(cover_blocks_clique([1], 2, 2, n=2)) == [[(0, 0), (0, 2)], [(0, 1)], []]

    @pytest.mark.parametrize("n,d,s", [(2, 2, 2), (3, 2, 3), (2, 4, 1)])
    def test_full_clique_is_dense(self, n, d, s):
        assert cover_blocks_clique(range(n), d, s, n=n) == cover_blocks(n, d, s)

    def test_support_restricted(self):
        cover = cover_blocks_clique([0, 2], 2, 3, n=4)
        assert len(cover) == math.comb(4, 2)
        for block in cover.blocks:
            for a in block:
                assert a[1] == 0 and a[3] == 0

    def test_empty_clique(self):
        with pytest.raises(ArgumentError):
            cover_blocks_clique([], 2, 2, n=2)
