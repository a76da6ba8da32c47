"""Random linear hashing over F_2 and fixed-width encodings of directions.

Bit strings are uint8 arrays of 0/1 values, most significant bit first.  A
direction in F_q^d encodes as the concatenation of its d coordinates, each
written big-endian in n = log2(q) bits; tuples of directions concatenate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .projspace import Direction
from .tape import RandomTape, as_generator

__all__ = [
    "BinaryMatrix",
    "CoordinateHasher",
    "CollisionReport",
    "RandomTape",
    "apply_hash",
    "bits_to_int",
    "collision_stats",
    "encode",
    "identity_matrix",
    "int_to_bits",
    "sample_matrix",
]


def encode(obj: Direction | Sequence[Direction]) -> np.ndarray:
    """Fixed-width canonical encoding; width = (#directions) * dim * n bits."""
    dirs = [obj] if isinstance(obj, Direction) else list(obj)
    if not dirs:
        raise ValueError("nothing to encode")
    n = dirs[0].field.degree
    out = []
    for d in dirs:
        if d.field != dirs[0].field or d.dim != dirs[0].dim:
            raise ValueError("mixed spaces in one encoding")
        for c in d.coords:
            out.extend((c >> (n - 1 - i)) & 1 for i in range(n))
    return np.array(out, dtype=np.uint8)


def bits_to_int(bits) -> int:
    v = 0
    for b in np.asarray(bits, dtype=np.uint8):
        v = (v << 1) | int(b)
    return v


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class BinaryMatrix:
    rows: int
    cols: int
    packed: np.ndarray  # (rows, ceil(cols / 8)) uint8, row-major, MSB first
    seed: int | None = None
    label: str = ""

    def __post_init__(self) -> None:
        if self.rows <= 0 or self.cols <= 0:
            raise ValueError("matrix dimensions must be positive")
        if self.packed.shape != (self.rows, (self.cols + 7) // 8):
            raise ValueError("packed array has the wrong shape")

    @classmethod
    def from_bits(cls, bits, seed: int | None = None, label: str = "") -> BinaryMatrix:
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 2:
            raise ValueError("expected a 2-D bit array")
        return cls(bits.shape[0], bits.shape[1], np.packbits(bits, axis=1), seed, label)

    @property
    def bits(self) -> np.ndarray:
        return np.unpackbits(self.packed, axis=1, count=self.cols)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BinaryMatrix)
            and (self.rows, self.cols) == (other.rows, other.cols)
            and np.array_equal(self.packed, other.packed)
        )

    def to_hex(self) -> str:
        return self.packed.tobytes().hex()

    def serialize(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "seed": self.seed, "label": self.label, "bits": self.to_hex()}

    @classmethod
    def deserialize(cls, data: dict) -> BinaryMatrix:
        rows, cols = int(data["rows"]), int(data["cols"])
        packed = np.frombuffer(bytes.fromhex(data["bits"]), dtype=np.uint8).reshape(rows, (cols + 7) // 8)
        return cls(rows, cols, packed.copy(), data.get("seed"), data.get("label", ""))


def sample_matrix(tape: RandomTape, label: str, rows: int, cols: int) -> BinaryMatrix:
    """Uniform random ``rows x cols`` matrix from the labelled stream.

    Row ``i`` comes from its own substream, so the matrix for ``rows`` is a
    prefix of the matrix for any larger row count under the same label.
    """
    if rows <= 0 or cols <= 0:
        raise ValueError("matrix dimensions must be positive")
    bits = np.stack([tape.rng(label, "row", i).integers(0, 2, size=cols, dtype=np.uint8) for i in range(rows)])
    full_label = f"{tape.label}/{label}" if tape.label else label
    return BinaryMatrix.from_bits(bits, tape.seed, full_label)


def identity_matrix(rows: int, cols: int) -> BinaryMatrix:
    """Matrix copying the first ``rows`` input bits."""
    if rows > cols:
        raise ValueError("identity prefix needs rows <= cols")
    return BinaryMatrix.from_bits(np.eye(rows, cols, dtype=np.uint8), label="identity")


def apply_hash(m: BinaryMatrix, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.uint8)
    if v.shape != (m.cols,):
        raise ValueError(f"input width {v.shape} does not match matrix columns {m.cols}")
    return ((m.bits.astype(np.int64) @ v.astype(np.int64)) & 1).astype(np.uint8)


class CoordinateHasher:
    """Vectorised ``apply_hash(m, encode(...))`` on arrays of field coordinates.

    Inputs are integer arrays of shape ``(N, n_coords)`` holding the
    coordinates that ``encode`` would concatenate; outputs are the hash values
    as integers (first output bit most significant).
    """

    def __init__(self, m: BinaryMatrix, degree: int):
        if m.cols % degree:
            raise ValueError("matrix width is not a whole number of coordinates")
        if m.rows > 63:
            raise ValueError("vectorised hashing supports at most 63 output bits")
        self.matrix = m
        self.degree = degree
        self.n_coords = m.cols // degree
        weights = np.array([1 << (m.rows - 1 - i) for i in range(m.rows)], dtype=np.int64)
        cols = (m.bits.astype(np.int64) * weights[:, None]).sum(axis=0)  # column j as an integer
        self.n_bytes = (degree + 7) // 8
        byte_vals = np.arange(256)
        tables = np.zeros((self.n_coords, self.n_bytes, 256), dtype=np.int64)
        for p in range(self.n_coords):
            for b in range(self.n_bytes):
                for u in range(8):
                    bit = 8 * b + u  # bit position counted from the coordinate's LSB
                    if bit >= degree:
                        break
                    col = cols[p * degree + (degree - 1 - bit)]
                    tables[p, b] ^= np.where((byte_vals >> u) & 1, col, 0)
        self.tables = tables

    def __call__(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64)
        if coords.ndim != 2 or coords.shape[1] != self.n_coords:
            raise ValueError(f"expected (N, {self.n_coords}) coordinates, got {coords.shape}")
        out = np.zeros(len(coords), dtype=np.int64)
        for p in range(self.n_coords):
            for b in range(self.n_bytes):
                out ^= self.tables[p, b][(coords[:, p] >> (8 * b)) & 0xFF]
        return out


@dataclass(frozen=True)
class CollisionReport:
    ell: int
    width: int
    pairs: int
    collisions: int
    rate: float
    expected: float
    sigma: float

    @property
    def z_score(self) -> float:
        return (self.rate - self.expected) / self.sigma if self.sigma > 0 else 0.0

    @property
    def within_3sigma(self) -> bool:
        return abs(self.rate - self.expected) <= 3 * self.sigma

    def to_dict(self) -> dict:
        return {
            "ell": self.ell, "width": self.width, "pairs": self.pairs, "collisions": self.collisions,
            "rate": self.rate, "expected": self.expected, "sigma": self.sigma,
            "z_score": self.z_score, "within_3sigma": self.within_3sigma,
        }


def collision_stats(ell: int, width: int, pairs, tape: RandomTape | np.random.Generator,
                    chunk: int = 10_000) -> CollisionReport:
    """Empirical Pr[M u == M v] over fresh random ``ell x width`` matrices.

    ``pairs`` is either a count of random distinct input pairs or an explicit
    sequence of ``(u, v)`` bit arrays.
    """
    rng = as_generator(tape, "collisions")
    if isinstance(pairs, int):
        total = pairs
        diffs = None
    else:
        explicit = [(np.asarray(u, np.uint8), np.asarray(v, np.uint8)) for u, v in pairs]
        total = len(explicit)
        diffs = np.array([u ^ v for u, v in explicit], dtype=np.uint8).reshape(total, width)
    if total <= 0:
        raise ValueError("need at least one pair")
    hits = 0
    for start in range(0, total, chunk):
        c = min(chunk, total - start)
        if diffs is None:
            u = rng.integers(0, 2, size=(c, width), dtype=np.uint8)
            v = rng.integers(0, 2, size=(c, width), dtype=np.uint8)
            d = u ^ v
            while True:  # distinct inputs only
                zero = ~d.any(axis=1)
                if not zero.any():
                    break
                d[zero] = rng.integers(0, 2, size=(int(zero.sum()), width), dtype=np.uint8)
        else:
            d = diffs[start:start + c]
        m = rng.integers(0, 2, size=(c, ell, width), dtype=np.uint8)
        images = np.einsum("cij,cj->ci", m.astype(np.int32), d.astype(np.int32)) & 1
        hits += int((~images.any(axis=1)).sum())
    expected = 2.0**-ell
    return CollisionReport(ell, width, total, hits, hits / total, expected, math.sqrt(expected * (1 - expected) / total))
