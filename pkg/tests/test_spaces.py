"""Full and reduced candidate-space construction."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from velotrack import (
    DISAPPEAR,
    InvalidInputError,
    MatchingVector,
    ReducedSpaceConfig,
    SpaceCapError,
    build_full_space,
    build_reduced_space,
    full_space_size,
    neighborhood,
    solve_bmcf_fixed_d,
)
from velotrack.oracle import enumerate_space


class TestFullSpace:
    def test_known_sizes(self):
        assert full_space_size(2, 2) == 7
        assert full_space_size(3, 3) == 34
        assert full_space_size(0, 5) == 1
        assert full_space_size(5, 0) == 1
        assert full_space_size(1, 1) == 2

    @given(st.integers(0, 4), st.integers(0, 4))
    def test_size_matches_independent_enumeration(self, n_k, n_next):
        assert full_space_size(n_k, n_next) == len(enumerate_space(n_k, n_next))

    @given(st.integers(0, 3), st.integers(0, 3))
    def test_agrees_with_independent_enumeration(self, n_k, n_next):
        built = build_full_space(n_k, n_next)
        listed = enumerate_space(n_k, n_next)
        assert built.matrix.shape == listed.matrix.shape
        np.testing.assert_array_equal(built.matrix, listed.matrix)

    def test_rows_lexicographically_sorted(self):
        sp = build_full_space(2, 2)
        rows = [tuple(r) for r in sp.matrix]
        assert rows == sorted(rows)
        assert rows[0] == (DISAPPEAR, DISAPPEAR)

    def test_cap_enforced(self):
        with pytest.raises(SpaceCapError):
            build_full_space(8, 8, cap=1000)
        with pytest.raises(SpaceCapError):
            enumerate_space(8, 8, cap=1000)


class TestNeighborhood:
    def test_clipping(self):
        # feasible d for (3, 2) frames is [1, 3]
        assert list(neighborhood(1, 1, 3, 2)) == [1, 2]
        assert list(neighborhood(3, 1, 3, 2)) == [2, 3]
        assert list(neighborhood(2, 0, 3, 2)) == [2]
        assert list(neighborhood(1, 5, 3, 2)) == [1, 2, 3]

    def test_always_contains_d_star(self):
        for n_a in range(5):
            for n_b in range(5):
                for d_star in range(max(0, n_a - n_b), n_a + 1):
                    for delta in range(4):
                        assert d_star in neighborhood(d_star, delta, n_a, n_b)


def _random_pair(rng, n_a, n_b):
    return rng.normal(0.0, 3.0, size=(n_a, 2)), rng.normal(0.0, 3.0, size=(n_b, 2))


class TestReducedSpace:
    def test_rejects_infeasible_d_star(self):
        a = np.zeros((2, 2))
        b = np.zeros((1, 2))
        with pytest.raises(InvalidInputError):
            build_reduced_space(a, b, 0)  # at least one object must disappear

    def test_contains_fixed_d_optima(self, rng):
        for _ in range(20):
            n_a, n_b = (int(x) for x in rng.integers(1, 5, size=2))
            a, b = _random_pair(rng, n_a, n_b)
            d_lo = max(0, n_a - n_b)
            d_star = int(rng.integers(d_lo, n_a + 1))
            delta = int(rng.integers(0, 3))
            sp = build_reduced_space(a, b, d_star, ReducedSpaceConfig(delta=delta))
            for d in neighborhood(d_star, delta, n_a, n_b):
                assert solve_bmcf_fixed_d(a, b, d) in sp

    def test_nesting_in_delta(self, rng):
        for _ in range(20):
            n_a, n_b = (int(x) for x in rng.integers(1, 5, size=2))
            a, b = _random_pair(rng, n_a, n_b)
            d_star = max(0, n_a - n_b)
            spaces = [
                build_reduced_space(a, b, d_star, ReducedSpaceConfig(delta=d))
                for d in range(4)
            ]
            for small, big in zip(spaces, spaces[1:]):
                assert small.issubset(big)

    def test_size_bound(self, rng):
        # each d contributes at most 1 seed plus n(n-1)/2 exchanges
        for _ in range(20):
            n_a, n_b = (int(x) for x in rng.integers(1, 6, size=2))
            a, b = _random_pair(rng, n_a, n_b)
            d_star = max(0, n_a - n_b)
            delta = int(rng.integers(0, 3))
            sp = build_reduced_space(a, b, d_star, ReducedSpaceConfig(delta=delta))
            bound = (2 * delta + 1) * (1 + n_a * (n_a - 1) // 2)
            assert len(sp) <= bound

    def test_subset_of_full_space(self, rng):
        for _ in range(10):
            n_a, n_b = (int(x) for x in rng.integers(1, 5, size=2))
            a, b = _random_pair(rng, n_a, n_b)
            d_star = max(0, n_a - n_b)
            sp = build_reduced_space(a, b, d_star, ReducedSpaceConfig(delta=2))
            assert sp.issubset(build_full_space(n_a, n_b))

    def test_disappearance_counts_stay_near_d_star(self, rng):
        for _ in range(10):
            n_a, n_b = (int(x) for x in rng.integers(1, 6, size=2))
            a, b = _random_pair(rng, n_a, n_b)
            d_lo = max(0, n_a - n_b)
            d_star = int(rng.integers(d_lo, n_a + 1))
            delta = int(rng.integers(0, 3))
            sp = build_reduced_space(a, b, d_star, ReducedSpaceConfig(delta=delta))
            for m in sp.vectors():
                assert abs(m.n_disappeared - d_star) <= delta

    def test_swap_provenance_reconstructs_rows(self, rng):
        a, b = _random_pair(rng, 4, 3)
        sp = build_reduced_space(a, b, 1, ReducedSpaceConfig(delta=1))
        assert sp.swap_info is not None
        for r in range(len(sp)):
            seed_row, i, j = (int(v) for v in sp.swap_info[r])
            if i == -1:
                assert seed_row == r
                continue
            rebuilt = sp.matrix[seed_row].copy()
            rebuilt[i], rebuilt[j] = rebuilt[j], rebuilt[i]
            np.testing.assert_array_equal(rebuilt, sp.matrix[r])

    def test_single_object_space(self):
        a = np.array([[0.0, 0.0]])
        b = np.array([[1.0, 0.0]])
        sp = build_reduced_space(a, b, 0, ReducedSpaceConfig(delta=1))
        got = {m.entries for m in sp.vectors()}
        assert got == {(0,), (DISAPPEAR,)}

    def test_delta_zero_single_block(self):
        a = np.array([[0.0, 0.0], [5.0, 0.0]])
        b = np.array([[1.0, 0.0], [6.0, 0.0]])
        sp = build_reduced_space(a, b, 0, ReducedSpaceConfig(delta=0))
        assert all(m.n_disappeared == 0 for m in sp.vectors())
        assert MatchingVector((0, 1), n_next=2) in sp
        assert MatchingVector((1, 0), n_next=2) in sp
