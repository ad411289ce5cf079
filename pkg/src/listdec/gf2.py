"""Bit-packed GF(2) vectors, matrices, ball enumeration and seeded randomness.

Vectors of length n are packed into a single Python int; coordinate 0 is the
most significant bit, so the serialized bit string reads left to right and
integer order coincides with lexicographic order on serializations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParameterError

MAX_N = 30
MAX_MATRIX_BITS = 30

# 16-bit popcount table; vectors here never exceed 30 bits.
_POP16 = np.array([bin(i).count("1") for i in range(1 << 16)], dtype=np.uint8)


def popcount_array(values: np.ndarray) -> np.ndarray:
    """Per-element popcount for arrays of packed words (< 2^32)."""
    v = values.astype(np.int64, copy=False)
    return (_POP16[v & 0xFFFF] + _POP16[(v >> 16) & 0xFFFF]).astype(np.int64)


@dataclass(frozen=True)
class BitVector:
    """Immutable GF(2) vector of length 1 <= n <= 30."""

    n: int
    bits: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_N:
            raise InvalidParameterError(f"vector length must be in [1, {MAX_N}], got {self.n}")
        if not 0 <= self.bits < (1 << self.n):
            raise InvalidParameterError(f"bits 0x{self.bits:x} out of range for length {self.n}")

    @classmethod
    def from_string(cls, s: str) -> "BitVector":
        s = s.strip()
        if not s or any(c not in "01" for c in s):
            raise InvalidParameterError(f"not a bit string: {s!r}")
        return cls(len(s), int(s, 2))

    @classmethod
    def zero(cls, n: int) -> "BitVector":
        return cls(n, 0)

    def to_string(self) -> str:
        return format(self.bits, f"0{self.n}b")

    def weight(self) -> int:
        return bin(self.bits).count("1")

    def __xor__(self, other: "BitVector") -> "BitVector":
        if self.n != other.n:
            raise InvalidParameterError(f"length mismatch: {self.n} vs {other.n}")
        return BitVector(self.n, self.bits ^ other.bits)

    def __str__(self) -> str:
        return self.to_string()


@dataclass(frozen=True)
class BitMatrix:
    """Immutable m x n matrix over GF(2) with n <= m and mn <= 30.

    Rows are packed n-bit words; row 0 is the most significant block of the
    flattened integer, so row-major serialization order matches integer order.
    """

    m: int
    n: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1 or self.n > self.m or self.m * self.n > MAX_MATRIX_BITS:
            raise InvalidParameterError(
                f"matrix shape must satisfy 1 <= n <= m and mn <= {MAX_MATRIX_BITS}, got {self.m}x{self.n}"
            )
        if len(self.rows) != self.m:
            raise InvalidParameterError(f"expected {self.m} rows, got {len(self.rows)}")
        mask = (1 << self.n) - 1
        for r in self.rows:
            if not 0 <= r <= mask:
                raise InvalidParameterError(f"row 0x{r:x} exceeds the {self.n}-bit mask")

    @classmethod
    def zero(cls, m: int, n: int) -> "BitMatrix":
        return cls(m, n, (0,) * m)

    @classmethod
    def from_flat(cls, m: int, n: int, value: int) -> "BitMatrix":
        mask = (1 << n) - 1
        rows = tuple((value >> ((m - 1 - i) * n)) & mask for i in range(m))
        return cls(m, n, rows)

    @classmethod
    def from_string(cls, s: str) -> "BitMatrix":
        lines = [ln for ln in s.strip().splitlines() if ln]
        rows = [BitVector.from_string(ln) for ln in lines]
        n = rows[0].n
        return cls(len(rows), n, tuple(r.bits for r in rows))

    def to_flat(self) -> int:
        value = 0
        for r in self.rows:
            value = (value << self.n) | r
        return value

    def to_string(self) -> str:
        return "\n".join(format(r, f"0{self.n}b") for r in self.rows)

    def __xor__(self, other: "BitMatrix") -> "BitMatrix":
        if (self.m, self.n) != (other.m, other.n):
            raise InvalidParameterError("matrix shape mismatch")
        return BitMatrix(self.m, self.n, tuple(a ^ b for a, b in zip(self.rows, other.rows)))

    def rank(self) -> int:
        return rank_of_ints(list(self.rows))

    def __str__(self) -> str:
        return self.to_string()


def rank_of_ints(rows: Iterable[int]) -> int:
    """GF(2) rank of packed row words via elimination on leading bits."""
    pivots: dict[int, int] = {}
    for v in rows:
        while v:
            h = v.bit_length() - 1
            if h in pivots:
                v ^= pivots[h]
            else:
                pivots[h] = v
                break
    return len(pivots)


class SpanBasis:
    """Incremental reduced basis for span membership and extension."""

    def __init__(self, vectors: Iterable[int] = ()):
        self.pivots: dict[int, int] = {}
        for v in vectors:
            self.insert(v)

    def reduce(self, v: int) -> int:
        while v:
            h = v.bit_length() - 1
            if h not in self.pivots:
                break
            v ^= self.pivots[h]
        return v

    def contains(self, v: int) -> bool:
        return self.reduce(v) == 0

    def insert(self, v: int) -> bool:
        """Insert v; returns True if it enlarged the span."""
        v = self.reduce(v)
        if v == 0:
            return False
        self.pivots[v.bit_length() - 1] = v
        return True

    @property
    def dim(self) -> int:
        return len(self.pivots)

    def enumerate(self) -> np.ndarray:
        """All 2^dim span elements as an int64 array (iterative doubling)."""
        out = np.zeros(1, dtype=np.int64)
        for v in self.pivots.values():
            out = np.concatenate([out, out ^ np.int64(v)])
        return out


def hamming_distance(u: BitVector, v: BitVector) -> int:
    if u.n != v.n:
        raise InvalidParameterError(f"length mismatch: {u.n} vs {v.n}")
    return (u ^ v).weight()


def rank_of_span(vectors: Sequence[BitVector]) -> int:
    if not vectors:
        return 0
    n = vectors[0].n
    for v in vectors:
        if v.n != n:
            raise InvalidParameterError("vectors in a span must share a length")
    return rank_of_ints([v.bits for v in vectors])


def ball_masks(n: int, radius: int) -> np.ndarray:
    """Packed words of B(0, radius) in weight-major, numeric-minor order."""
    if not 0 <= radius <= n:
        raise InvalidParameterError(f"radius must be in [0, {n}], got {radius}")
    chunks = [np.zeros(1, dtype=np.int64)]
    for w in range(1, radius + 1):
        vals = sorted(
            sum(1 << (n - 1 - i) for i in positions)
            for positions in itertools.combinations(range(n), w)
        )
        chunks.append(np.array(vals, dtype=np.int64))
    return np.concatenate(chunks)


def enumerate_ball(center: BitVector, radius: int) -> list[BitVector]:
    masks = ball_masks(center.n, radius)
    return [BitVector(center.n, center.bits ^ int(e)) for e in masks]


@dataclass
class Rng:
    """Deterministic random stream: PCG64 keyed by (master_seed, stream_index).

    Streams with distinct indices are independent for practical purposes
    (numpy SeedSequence spawn keys).  A stream is single-owner; parallel
    trials each derive their own stream index.  The PCG64 stream is
    platform-independent; bit-exact replay assumes a fixed numpy version.
    """

    master_seed: int
    stream_index: int = 0
    subkey: tuple[int, ...] = ()
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        seq = np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(self.stream_index, *self.subkey)
        )
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def stream(self, index: int) -> "Rng":
        return Rng(self.master_seed, index)

    def substream(self, *key: int) -> "Rng":
        """Independent child stream; used to give each trial its own stream."""
        return Rng(self.master_seed, self.stream_index, self.subkey + key)

    def bits(self, width: int) -> int:
        if not 1 <= width <= 62:
            raise InvalidParameterError(f"bit width must be in [1, 62], got {width}")
        return int(self._gen.integers(0, 1 << width))

    def bit_array(self, width: int, size: int) -> np.ndarray:
        if not 1 <= width <= 62:
            raise InvalidParameterError(f"bit width must be in [1, 62], got {width}")
        return self._gen.integers(0, 1 << width, size=size, dtype=np.int64)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return float(self._gen.uniform(low, high))

    def integer(self, low: int, high: int) -> int:
        """Uniform integer in [low, high)."""
        return int(self._gen.integers(low, high))


def random_vector(n: int, rng: Rng) -> BitVector:
    if not 1 <= n <= MAX_N:
        raise InvalidParameterError(f"vector length must be in [1, {MAX_N}], got {n}")
    return BitVector(n, rng.bits(n))
