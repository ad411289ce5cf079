"""Rank-metric analogs: rank distance, rank-ball enumeration, random linear
rank codes, profiles, certification and the potential over m x n matrices.

Matrices flatten to mn-bit words internally so the Hamming scatter and
profile engine is reused verbatim; only the ball enumerator differs.  The
potential exponent scales with n, not mn.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from . import precise
from .counting import rank_ball_size
from .errors import InvalidParameterError, ResourceLimitError
from .gf2 import BitMatrix, Rng, SpanBasis, rank_of_ints
from .listsize import (
    Certificate,
    ListProfile,
    PotentialState,
    StepReport,
    certify_table,
    potential,
    potential_exponent,
    profile_from_table,
    scatter_table,
    step_check_from_table,
)

RANK_UNIVERSE_MAX_BITS = 24
RANK_ENUM_MAX_BITS = 20


@dataclass(frozen=True)
class RankParams:
    """Shape m x n (n <= m, mn <= 24) and integer rank radius."""

    m: int
    n: int
    radius: int

    def __post_init__(self):
        if self.n < 1 or self.n > self.m or self.m * self.n > RANK_UNIVERSE_MAX_BITS:
            raise InvalidParameterError(
                f"need 1 <= n <= m and mn <= {RANK_UNIVERSE_MAX_BITS}, got {self.m}x{self.n}"
            )
        if not 0 <= self.radius <= self.n:
            raise InvalidParameterError(
                f"rank radius must be in [0, {self.n}], got {self.radius}"
            )

    @property
    def universe_bits(self) -> int:
        return self.m * self.n

    @property
    def b(self) -> float:
        return self.n / self.m

    @property
    def p(self) -> float:
        return self.radius / self.n


@dataclass(frozen=True)
class RankCode:
    """GF(2)-linear span of generator matrices."""

    params: RankParams
    generators: tuple[BitMatrix, ...]

    def __post_init__(self):
        for g in self.generators:
            if (g.m, g.n) != (self.params.m, self.params.n):
                raise InvalidParameterError("generator shape mismatch")

    @cached_property
    def _basis(self) -> SpanBasis:
        return SpanBasis(g.to_flat() for g in self.generators)

    @property
    def n(self) -> int:
        # Flattened universe length, so the shared profile engine applies.
        return self.params.universe_bits

    @property
    def effective_dim(self) -> int:
        return self._basis.dim

    @property
    def rate(self) -> float:
        return self.effective_dim / self.params.universe_bits

    def contains(self, x: BitMatrix) -> bool:
        return self._basis.contains(x.to_flat())

    def codeword_array(self) -> np.ndarray:
        return self._basis.enumerate()


def rank_distance(x: BitMatrix, y: BitMatrix) -> int:
    """Rank of the entrywise XOR; the integer rank distance."""
    if (x.m, x.n) != (y.m, y.n):
        raise InvalidParameterError("matrix shape mismatch")
    return rank_of_ints([a ^ b for a, b in zip(x.rows, y.rows)])


@lru_cache(maxsize=None)
def _row_space_automaton(n: int):
    """States are row spaces of F_2^n; transition appends one more row."""
    start = (0,)
    states: dict[tuple[int, ...], int] = {start: 0}
    ranks = [0]
    transitions: list[list[int]] = []
    queue = [start]
    while queue:
        space = queue.pop(0)
        row_next = []
        members = set(space)
        for row in range(1 << n):
            if row in members:
                target = space
            else:
                target = tuple(sorted(members | {e ^ row for e in members}))
            if target not in states:
                states[target] = len(states)
                ranks.append(len(target).bit_length() - 1)
                queue.append(target)
            row_next.append(states[target])
        transitions.append(row_next)
    trans = np.array(transitions, dtype=np.int32)
    return trans, np.array(ranks, dtype=np.uint8)


@lru_cache(maxsize=8)
def rank_table(m: int, n: int) -> np.ndarray:
    """rank of every m x n matrix, indexed by the flattened integer."""
    if m * n > RANK_UNIVERSE_MAX_BITS:
        raise ResourceLimitError(f"rank table capped at mn <= {RANK_UNIVERSE_MAX_BITS}")
    trans, ranks = _row_space_automaton(n)
    rows = 1 << n
    state = np.zeros(1, dtype=np.int32)
    for _ in range(m):
        state = trans[np.repeat(state, rows), np.tile(np.arange(rows, dtype=np.int32), len(state))]
    return ranks[state]


def rank_ball_masks(m: int, n: int, radius: int) -> np.ndarray:
    """Flattened words of all matrices with rank <= radius, ascending."""
    if not 0 <= radius <= n:
        raise InvalidParameterError(f"rank radius must be in [0, {n}], got {radius}")
    return np.nonzero(rank_table(m, n) <= radius)[0].astype(np.int64)


def enumerate_rank_ball(m: int, n: int, radius: int) -> list[BitMatrix]:
    if m * n > RANK_ENUM_MAX_BITS:
        raise ResourceLimitError(f"rank ball enumeration capped at mn <= {RANK_ENUM_MAX_BITS}")
    return [BitMatrix.from_flat(m, n, int(v)) for v in rank_ball_masks(m, n, radius)]


def random_linear_rank_code(params: RankParams, k: int, rng: Rng) -> RankCode:
    if not 0 <= k <= params.universe_bits:
        raise InvalidParameterError(f"need 0 <= k <= mn, got k = {k}")
    gens = tuple(
        BitMatrix.from_flat(params.m, params.n, rng.bits(params.universe_bits))
        for _ in range(k)
    )
    return RankCode(params, gens)


def rank_list_profile(code: RankCode, radius: int) -> ListProfile:
    """Scatter each codeword's rank ball over the flattened universe."""
    params = code.params
    ball = rank_ball_masks(params.m, params.n, radius)
    table = scatter_table(code.codeword_array(), ball, params.universe_bits)
    return profile_from_table(table, params.n, radius)


def rank_list_size_table(code: RankCode, radius: int) -> np.ndarray:
    params = code.params
    ball = rank_ball_masks(params.m, params.n, radius)
    return scatter_table(code.codeword_array(), ball, params.universe_bits)


def rank_list_profile_naive(code: RankCode, radius: int) -> ListProfile:
    """Oracle twin: per-center recount by rank distance lookups."""
    params = code.params
    bits = params.universe_bits
    if bits > 16:
        raise ResourceLimitError("naive rank recount capped at mn <= 16")
    table = rank_table(params.m, params.n)
    centers = np.arange(1 << bits, dtype=np.int64)
    out = np.zeros(len(centers), dtype=np.int64)
    for c in code.codeword_array():
        out += table[centers ^ c] <= radius
    return profile_from_table(out, params.n, radius)


def certify_rank(code: RankCode, radius: int, max_list: int) -> Certificate:
    params = code.params
    table = rank_list_size_table(code, radius)
    ok, witness_int, max_seen = certify_table(table, max_list)
    witness = None
    if not ok:
        witness = BitMatrix.from_flat(params.m, params.n, witness_int)
        recount = sum(
            1
            for w in code.codeword_array()
            if rank_distance(witness, BitMatrix.from_flat(params.m, params.n, int(w))) <= radius
        )
        if recount != int(table[witness_int]):
            raise AssertionError("rank witness recount disagrees with scatter table")
    return Certificate(decodable=ok, witness=witness, checked_count=len(table), max_list=max_seen)


def rank_potential(profile: ListProfile, epsilon: float) -> PotentialState:
    """Identical machinery to the Hamming potential; the profile already
    carries block_length = n so the exponent uses n rather than mn."""
    return potential(profile, epsilon)


def check_rank_potential_step(code: RankCode, epsilon: float, radius: int) -> StepReport:
    table = rank_list_size_table(code, radius)
    return step_check_from_table(
        table, code.params.n, code.codeword_array(), epsilon, radius
    )


@dataclass(frozen=True)
class BaselinePotentialBound:
    s0: float
    bound: float
    holds: bool


def baseline_potential_bound(params: RankParams, epsilon: float) -> BaselinePotentialBound:
    """Check the zero-code potential against 1 + 4 * 2^(r(m+n-r) - mn).

    The exponent mn(1 - p - pb + p^2 b) equals mn - r(m+n-r) exactly.
    """
    if not epsilon > 0:
        raise InvalidParameterError(f"epsilon must be positive, got {epsilon}")
    m, n, r = params.m, params.n, params.radius
    ball = rank_ball_size(2, m, n, r)
    mn = params.universe_bits
    bound_tail = Fraction(4 * (1 << (r * (m + n - r))), 1 << mn)

    def lhs(ctx):
        e = potential_exponent(ctx, epsilon, n)
        return (ctx.mpf(2) ** e - 1) * ball / ctx.mpf(2) ** mn

    holds = precise.certified_le(lhs, lambda ctx: precise.iv_fraction(ctx, bound_tail))
    s0_float = 1.0 + precise.eval_midpoint(lhs)
    return BaselinePotentialBound(s0=s0_float, bound=1.0 + float(bound_tail), holds=holds)
