"""Certified comparison helpers and edge behavior of the numeric layer."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from listdec import (
    LinearCode,
    PrecisionError,
    ResourceLimitError,
    Rng,
    list_profile,
    potential,
    random_linear_code,
)
from listdec.gf2 import BitVector, ball_masks
from listdec.listsize import scatter_table
from listdec.precise import certified_le, certified_less, iv_fraction


class TestCertifiedComparisons:
    def test_resolves_tight_rational_gap(self):
        # 1/3 vs 1/3 + 2^-300 differ far below the starting precision, so the
        # comparison must escalate before answering.
        small = Fraction(1, 1 << 300)
        lhs = Fraction(1, 3)
        rhs = Fraction(1, 3) + small
        assert certified_less(lambda ctx: iv_fraction(ctx, lhs), lambda ctx: iv_fraction(ctx, rhs))
        assert not certified_less(
            lambda ctx: iv_fraction(ctx, rhs), lambda ctx: iv_fraction(ctx, lhs)
        )

    def test_exact_equality_le(self):
        half = Fraction(1, 2)
        assert certified_le(lambda ctx: iv_fraction(ctx, half), lambda ctx: iv_fraction(ctx, half))

    def test_point_interval_equality_is_decidable(self):
        half = Fraction(1, 2)
        assert not certified_less(
            lambda ctx: iv_fraction(ctx, half), lambda ctx: iv_fraction(ctx, half)
        )

    def test_true_equality_through_transcendentals_unresolvable(self):
        # log(8)/log(2) encloses 3 at every precision, so strict order between
        # them can never be certified.
        with pytest.raises(PrecisionError):
            certified_less(
                lambda ctx: ctx.log(8) / ctx.log(2), lambda ctx: ctx.mpf(3)
            )

    def test_transcendental_comparison(self):
        # e^pi vs pi^e, a classically close pair.
        assert certified_less(
            lambda ctx: ctx.pi ** ctx.e, lambda ctx: ctx.exp(ctx.pi)
        )


class TestScatterChunking:
    def test_chunked_matches_unchunked(self):
        rng = Rng(71, 0)
        words = rng.bit_array(10, 37)
        ball = ball_masks(10, 2)
        full = scatter_table(words, ball, 10)
        tiny_chunks = scatter_table(words, ball, 10, chunk_pairs=8)
        assert (full == tiny_chunks).all()

    def test_table_cap(self):
        with pytest.raises(ResourceLimitError):
            scatter_table(np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64), 27)

    def test_profile_cap_via_code(self):
        code = LinearCode(27, (BitVector(27, 1),))
        with pytest.raises(ResourceLimitError):
            list_profile(code, 1)


class TestPotentialExtremes:
    def test_huge_exponent_does_not_overflow(self):
        # Full space at large epsilon: the exact value exceeds float range but
        # the state still holds it; float conversion saturates to inf.
        code = random_linear_code(10, 10, Rng(72, 0))
        prof = list_profile(code, 10)
        state = potential(prof, 5.0)
        assert state.value_float == float("inf")
        assert state.value > 1
