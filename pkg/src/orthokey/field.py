"""Arithmetic in GF(2^n) with bit-packed polynomial elements.

Elements are integers below ``2**n``; bit ``i`` is the coefficient of ``x**i``.
Each field is fixed by a published irreducible modulus (see ``MODULI``) so
every downstream object (directions, hash inputs, transcripts) is
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

MAX_DEGREE = 32
LOG_TABLE_MAX_DEGREE = 16

# Low-order bits of the modulus (the x^n term is implicit).  For n >= 2 this is
# the numerically smallest irreducible polynomial of degree n; n = 1 uses x + 1.
MODULI: dict[int, int] = {
    1: 0x1, 2: 0x3, 3: 0x3, 4: 0x3, 5: 0x5, 6: 0x3, 7: 0x3, 8: 0x1B,
    9: 0x3, 10: 0x9, 11: 0x5, 12: 0x9, 13: 0x1B, 14: 0x21, 15: 0x3, 16: 0x2B,
    17: 0x9, 18: 0x9, 19: 0x27, 20: 0x9, 21: 0x5, 22: 0x3, 23: 0x21, 24: 0x1B,
    25: 0x9, 26: 0x1B, 27: 0x27, 28: 0x3, 29: 0x5, 30: 0x3, 31: 0x9, 32: 0x8D,
}


class FieldMismatchError(ValueError):
    """Operands belong to different fields."""


def _poly_mod(a: int, b: int) -> int:
    db = b.bit_length() - 1
    while a and a.bit_length() - 1 >= db:
        a ^= b << (a.bit_length() - 1 - db)
    return a


@lru_cache(maxsize=None)
def is_irreducible(poly: int) -> bool:
    """Trial division of a GF(2)[x] polynomial by every polynomial of degree <= deg/2."""
    n = poly.bit_length() - 1
    if n < 1:
        return False
    for divisor in range(2, 1 << (n // 2 + 1)):
        if _poly_mod(poly, divisor) == 0:
            return False
    return True


@dataclass(frozen=True)
class FieldSpec:
    """The field GF(2^degree) reduced by ``x**degree + modulus``."""

    degree: int
    modulus: int

    def __post_init__(self) -> None:
        if not 1 <= self.degree <= MAX_DEGREE:
            raise ValueError(f"degree must be in [1, {MAX_DEGREE}], got {self.degree}")
        if not 0 <= self.modulus < (1 << self.degree):
            raise ValueError("modulus must be a bitmask below 2**degree")
        if not is_irreducible(self.polynomial):
            raise ValueError(f"x^{self.degree} + {self.modulus:#x} is reducible")

    @property
    def order(self) -> int:
        return 1 << self.degree

    @property
    def polynomial(self) -> int:
        return (1 << self.degree) | self.modulus

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(int(value), self)

    def __repr__(self) -> str:
        return f"GF(2^{self.degree}; {self.polynomial:#x})"

    # -- scalar arithmetic on raw integers -------------------------------

    def mul_int(self, a: int, b: int) -> int:
        r = 0
        top = 1 << self.degree
        poly = self.polynomial
        while b:
            if b & 1:
                r ^= a
            b >>= 1
            a <<= 1
            if a & top:
                a ^= poly
        return r

    def pow_int(self, a: int, e: int) -> int:
        r = 1
        while e:
            if e & 1:
                r = self.mul_int(r, a)
            a = self.mul_int(a, a)
            e >>= 1
        return r

    def inv_int(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no inverse")
        # a^(q-2) = a^-1 in the multiplicative group of order q - 1
        return self.pow_int(a, self.order - 2) if self.order > 2 else 1

    # -- vectorised arithmetic -------------------------------------------

    @cached_property
    def _tables(self) -> tuple[np.ndarray, np.ndarray]:
        q = self.order
        gen = _primitive_element(self)
        exp = np.zeros(2 * (q - 1), dtype=np.int64)
        log = np.zeros(q, dtype=np.int64)
        v = 1
        for i in range(q - 1):
            exp[i] = v
            log[v] = i
            v = self.mul_int(v, gen)
        exp[q - 1:] = exp[: q - 1]
        return exp, log

    @cached_property
    def _mul_tables(self) -> tuple[np.ndarray, np.ndarray]:
        # log(0) points past every sum of two real logs, into a zero-filled tail
        exp, log = self._tables
        zero = 2 * (self.order - 1)
        exp_z = np.zeros(2 * zero + 1, dtype=np.int64)
        exp_z[:zero] = exp
        log_z = log.copy()
        log_z[0] = zero
        return exp_z, log_z

    def mul_array(self, a, b) -> np.ndarray:
        """Elementwise product of integer arrays (broadcasting)."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.degree <= LOG_TABLE_MAX_DEGREE:
            exp, log = self._mul_tables
            return exp[log[a] + log[b]]
        a, b = np.broadcast_arrays(a, b)
        a = a.copy()
        b = b.copy()
        r = np.zeros_like(a)
        top = 1 << self.degree
        for _ in range(self.degree):
            r ^= np.where(b & 1, a, 0)
            b >>= 1
            a <<= 1
            a = np.where(a & top, a ^ self.polynomial, a)
        return r

    def inv_array(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("zero has no inverse")
        if self.degree <= LOG_TABLE_MAX_DEGREE:
            exp, log = self._tables
            return exp[(self.order - 1 - log[a]) % (self.order - 1)]
        return np.vectorize(self.inv_int, otypes=[np.int64])(a)


def _primitive_element(field: FieldSpec) -> int:
    q = field.order
    if q == 2:
        return 1
    m = q - 1
    primes = [p for p in range(2, m + 1) if m % p == 0 and all(p % d for d in range(2, int(p**0.5) + 1))]
    for g in range(2, q):
        if all(field.pow_int(g, m // p) != 1 for p in primes):
            return g
    raise RuntimeError("no primitive element found")  # pragma: no cover


@dataclass(frozen=True)
class FieldElement:
    value: int
    field: FieldSpec

    def __post_init__(self) -> None:
        if not 0 <= self.value < self.field.order:
            raise ValueError(f"{self.value} is not an element of {self.field!r}")

    def _check(self, other: FieldElement) -> None:
        if not isinstance(other, FieldElement):
            raise TypeError(f"expected FieldElement, got {type(other).__name__}")
        if other.field != self.field:
            raise FieldMismatchError(f"{self.field!r} vs {other.field!r}")

    def __add__(self, other: FieldElement) -> FieldElement:
        self._check(other)
        return FieldElement(self.value ^ other.value, self.field)

    __sub__ = __add__

    def __mul__(self, other: FieldElement) -> FieldElement:
        self._check(other)
        return FieldElement(self.field.mul_int(self.value, other.value), self.field)

    def __truediv__(self, other: FieldElement) -> FieldElement:
        return self * other.inverse()

    def __pow__(self, e: int) -> FieldElement:
        if e < 0:
            return self.inverse() ** (-e)
        return FieldElement(self.field.pow_int(self.value, e), self.field)

    def inverse(self) -> FieldElement:
        return FieldElement(self.field.inv_int(self.value), self.field)

    def __int__(self) -> int:
        return self.value

    def __bool__(self) -> bool:
        return self.value != 0

    def __repr__(self) -> str:
        return f"{self.value}@GF(2^{self.field.degree})"


@lru_cache(maxsize=None)
def make_field(n: int) -> FieldSpec:
    """Return GF(2^n) with the published modulus for degree ``n``."""
    if not isinstance(n, int) or not 1 <= n <= MAX_DEGREE:
        raise ValueError(f"field degree must be an integer in [1, {MAX_DEGREE}], got {n!r}")
    return FieldSpec(n, MODULI[n])


def field_for_order(q: int) -> FieldSpec:
    if q < 2 or q & (q - 1):
        raise ValueError(f"q must be a power of 2, got {q}")
    return make_field(q.bit_length() - 1)


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def dot(u: Sequence[FieldElement], v: Sequence[FieldElement]) -> FieldElement:
    """Sum of coordinatewise products."""
    if len(u) != len(v):
        raise ValueError(f"length mismatch: {len(u)} vs {len(v)}")
    if not u:
        raise ValueError("empty vectors have no field")
    acc = u[0].field(0)
    for a, b in zip(u, v):
        acc = acc + a * b
    return acc
