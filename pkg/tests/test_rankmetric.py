"""Rank-metric distances, balls, profiles, certification and potential."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from listdec import (
    BitMatrix,
    InvalidParameterError,
    RankCode,
    RankParams,
    ResourceLimitError,
    Rng,
    baseline_potential_bound,
    certify_rank,
    check_rank_ball_bounds,
    check_rank_potential_step,
    enumerate_rank_ball,
    random_linear_rank_code,
    rank_ball_size,
    rank_distance,
    rank_list_profile,
    rank_list_profile_naive,
    rank_potential,
    tail_stats,
)
from listdec.rankmetric import rank_list_size_table, rank_table


def zero_code(m: int, n: int, radius: int) -> RankCode:
    return RankCode(RankParams(m, n, radius), ())


def full_code(m: int, n: int, radius: int) -> RankCode:
    params = RankParams(m, n, radius)
    gens = tuple(BitMatrix.from_flat(m, n, 1 << i) for i in range(m * n))
    return RankCode(params, gens)


class TestRankDistance:
    def test_zero(self):
        x = BitMatrix.from_string("101\n010\n001\n110")
        assert rank_distance(x, x) == 0

    def test_full_rank_identity_block(self):
        m, n = 4, 3
        rows = tuple(1 << (n - 1 - i) if i < n else 0 for i in range(m))
        x = BitMatrix(m, n, rows)
        assert rank_distance(x, BitMatrix.zero(m, n)) == n

    def test_rank_one_difference(self):
        x = BitMatrix.from_string("11\n11")
        assert rank_distance(x, BitMatrix.zero(2, 2)) == 1

    def test_shape_mismatch(self):
        with pytest.raises(InvalidParameterError):
            rank_distance(BitMatrix.zero(2, 2), BitMatrix.zero(3, 2))


class TestRankBallEnumeration:
    def test_radius_zero(self):
        ball = enumerate_rank_ball(3, 2, 0)
        assert len(ball) == 1
        assert ball[0].to_flat() == 0

    def test_two_by_two_radius_one(self):
        ball = enumerate_rank_ball(2, 2, 1)
        assert len(ball) == 10
        assert len({b.to_flat() for b in ball}) == 10
        assert all(b.rank() <= 1 for b in ball)

    def test_full_radius(self):
        assert len(enumerate_rank_ball(2, 2, 2)) == 16

    @pytest.mark.parametrize("m,n", [(2, 2), (3, 2), (3, 3), (4, 3), (5, 4)])
    def test_counts_match_formula(self, m, n):
        for r in range(n + 1):
            masks = np.nonzero(rank_table(m, n) <= r)[0]
            assert len(masks) == rank_ball_size(2, m, n, r)

    def test_enumeration_cap(self):
        with pytest.raises(ResourceLimitError):
            enumerate_rank_ball(6, 4, 1)


class TestRankTableOracle:
    @pytest.mark.parametrize("m,n", [(2, 2), (3, 2), (4, 3)])
    def test_matches_row_elimination(self, m, n):
        from listdec.gf2 import rank_of_ints

        table = rank_table(m, n)
        mask = (1 << n) - 1
        for value in range(1 << (m * n)):
            rows = [(value >> ((m - 1 - i) * n)) & mask for i in range(m)]
            assert table[value] == rank_of_ints(rows)


class TestRandomRankCode:
    def test_dimension_zero(self):
        code = random_linear_rank_code(RankParams(4, 3, 1), 0, Rng(61, 0))
        assert code.effective_dim == 0

    def test_seed_replay(self):
        a = random_linear_rank_code(RankParams(4, 3, 1), 5, Rng(61, 2))
        b = random_linear_rank_code(RankParams(4, 3, 1), 5, Rng(61, 2))
        assert a.generators == b.generators

    def test_rank_deficiency_rate(self):
        deficient = 0
        for i in range(200):
            code = random_linear_rank_code(RankParams(4, 3, 1), 5, Rng(2024, i))
            if code.effective_dim < 5:
                deficient += 1
        assert deficient / 200 <= 4 * 2 ** -(12 - 5)


class TestRankProfile:
    def test_zero_code_profile(self):
        prof = rank_list_profile(zero_code(2, 2, 1), 1)
        assert dict(prof.counts) == {0: 6, 1: 10}

    def test_full_code_profile(self):
        prof = rank_list_profile(full_code(3, 2, 1), 1)
        ball = rank_ball_size(2, 3, 2, 1)
        assert dict(prof.counts) == {ball: 64}

    def test_oracle_equivalence(self):
        rng = Rng(62, 0)
        shapes = [(3, 2), (4, 3), (4, 4), (5, 3), (8, 2)]
        for i in range(50):
            m, n = shapes[i % len(shapes)]
            params = RankParams(m, n, 1)
            k = rng.integer(0, min(6, m * n) + 1)
            code = random_linear_rank_code(params, k, rng.substream(i))
            for r in range(n + 1):
                assert rank_list_profile(code, r) == rank_list_profile_naive(code, r)

    def test_coset_constancy(self):
        rng = Rng(63, 0)
        for i in range(5):
            code = random_linear_rank_code(RankParams(4, 3, 1), 3, rng.substream(i))
            table = rank_list_size_table(code, 1)
            idx = np.arange(1 << 12, dtype=np.int64)
            for c in code.codeword_array():
                assert (table[idx ^ c] == table).all()

    def test_weighted_tail_identity(self):
        rng = Rng(64, 0)
        for i in range(10):
            code = random_linear_rank_code(RankParams(4, 3, 1), 4, rng.substream(i))
            r = rng.integer(0, 4)
            prof = rank_list_profile(code, r)
            _, q1 = tail_stats(prof, 1)
            expected = Fraction(rank_ball_size(2, 4, 3, r) * (1 << code.effective_dim), 1 << 12)
            assert q1 == expected


class TestCertifyRank:
    def test_zero_code_decodable(self):
        assert certify_rank(zero_code(3, 3, 1), 1, 1).decodable

    def test_full_space_witness_zero(self):
        params = RankParams(3, 2, 1)
        ball = rank_ball_size(2, 3, 2, 1)
        cert = certify_rank(full_code(3, 2, 1), 1, ball - 1)
        assert not cert.decodable
        assert cert.witness.to_flat() == 0

    def test_matches_naive_recount(self):
        code = random_linear_rank_code(RankParams(4, 3, 2), 3, Rng(65, 1))
        cert = certify_rank(code, 1, 2)
        naive = rank_list_profile_naive(code, 1)
        assert cert.decodable == (naive.max_ell <= 2)
        assert cert.max_list == naive.max_ell


class TestRankBounds:
    def test_sandwich_small_shapes(self):
        for m, n in [(2, 2), (3, 3), (4, 3), (4, 4), (5, 4)]:
            for r in range(n + 1):
                assert check_rank_ball_bounds(2, m, n, r).holds


class TestRankPotential:
    def test_zero_code_closed_form(self):
        # exponent eps*n/(1+eps) uses the matrix width n = 3, not mn = 12
        prof = rank_list_profile(zero_code(4, 3, 1), 1)
        state = rank_potential(prof, 1.0)
        expected = 1 + (2**1.5 - 1) * rank_ball_size(2, 4, 3, 1) / 2**12
        assert state.value_float == pytest.approx(expected, rel=1e-12)

    def test_zero_code_baseline_bound(self):
        report = baseline_potential_bound(RankParams(4, 3, 1), 1.0)
        assert report.holds
        assert report.bound == pytest.approx(1 + 4 * 2 ** (6 - 12), rel=1e-12)

    def test_step_check_exact(self):
        rng = Rng(66, 0)
        checked = 0
        for i in range(8):
            params = RankParams(4, 3, 1)
            code = random_linear_rank_code(params, rng.integer(0, 3), rng.substream(i))
            report = check_rank_potential_step(code, rng.uniform(0.2, 0.8), 1)
            if report.hypothesis_met and not report.degenerate:
                checked += 1
                assert report.holds
        assert checked >= 4

    def test_step_check_sixteen_bit_universe(self):
        code = random_linear_rank_code(RankParams(4, 4, 1), 2, Rng(66, 99))
        report = check_rank_potential_step(code, 0.4, 1)
        assert report.hypothesis_met
        assert report.holds
