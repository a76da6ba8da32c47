"""Directions (projective points) over GF(2^n), orthogonality and triples.

A direction is stored in canonical form: the first nonzero coordinate is 1.
Directions are enumerated in a fixed order (position of the leading one
ascending, then the trailing coordinates as a base-q number), which defines
the dense ``DirectionIndex`` used by graphs, hashing and audits.

Orthogonality uses the standard dot product.  In characteristic 2 a direction
can be orthogonal to itself (``x.x = (sum x_i)^2``), so the self-orthogonal
directions are exactly the hyperplane orthogonal to the all-ones vector.  They
are kept everywhere.  Ordered triples of pairwise orthogonal directions may
therefore repeat a direction (``y == x`` when ``x`` is self-orthogonal), and
the exact triple count carries a correction over the naive product of stage
counts (see ``count_triples``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .field import FieldElement, FieldSpec, field_for_order
from .tape import RandomTape, as_generator

DEFAULT_MAX_DIRECTIONS = 5_000_000


class DependentConstraintsError(ValueError):
    """Constraint directions are linearly dependent."""


class CapacityError(ValueError):
    """A requested enumeration exceeds its memory budget."""


@dataclass(frozen=True)
class Direction:
    coords: tuple[int, ...]
    field: FieldSpec

    def __post_init__(self) -> None:
        q = self.field.order
        if any(not 0 <= c < q for c in self.coords):
            raise ValueError(f"coordinates out of range for {self.field!r}")
        lead = next((c for c in self.coords if c), 0)
        if lead != 1:
            raise ValueError(f"{self.coords} is not canonical (leading coordinate must be 1)")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def elements(self) -> tuple[FieldElement, ...]:
        return tuple(self.field(c) for c in self.coords)

    @property
    def index(self) -> int:
        return direction_index(self)

    def __repr__(self) -> str:
        return "(" + ":".join(str(c) for c in self.coords) + ")"


def _as_ints(v, field: FieldSpec | None) -> tuple[list[int], FieldSpec]:
    vals = list(v)
    if vals and isinstance(vals[0], FieldElement):
        f = vals[0].field
        if field is not None and field != f:
            raise ValueError("field argument disagrees with element fields")
        if any(e.field != f for e in vals):
            raise ValueError("mixed fields in vector")
        return [e.value for e in vals], f
    if field is None:
        raise ValueError("field is required for integer vectors")
    return [int(c) for c in vals], field


def canonicalize(v, field: FieldSpec | None = None) -> Direction:
    """Scale a nonzero vector so its first nonzero coordinate is 1."""
    vals, field = _as_ints(v, field)
    lead = next((c for c in vals if c), 0)
    if lead == 0:
        raise ValueError("the zero vector has no direction")
    s = field.inv_int(lead)
    return Direction(tuple(field.mul_int(c, s) for c in vals), field)


def count_directions(q: int, dim: int) -> int:
    if dim < 0:
        raise ValueError("dim must be nonnegative")
    return (q**dim - 1) // (q - 1)


def count_self_orthogonal(q: int, dim: int) -> int:
    """Directions with x.x = 0: the hyperplane sum(x_i) = 0."""
    return count_directions(q, dim - 1)


def count_orthogonal_pairs(q: int, dim: int) -> int:
    """Ordered pairs (x, y) with x orthogonal to y, x == y allowed."""
    return count_directions(q, dim) * count_directions(q, dim - 1)


def stage_product_count(q: int, dim: int) -> int:
    """Product of the stage counts, ignoring the self-orthogonal repeats."""
    if dim < 3:
        raise ValueError("triples need dim >= 3")
    return count_directions(q, dim) * count_directions(q, dim - 1) * count_directions(q, dim - 2)


def count_triples(q: int, dim: int) -> int:
    """Exact number of ordered triples of pairwise orthogonal directions.

    Pairs with ``y != x`` leave ``count_directions(q, dim-2)`` choices of z; the
    ``count_directions(q, dim-1)`` self-orthogonal x with ``y == x`` leave
    ``count_directions(q, dim-1)``.  The surplus over the stage product is
    ``count_directions(q, dim-1) * q**(dim-2)``.
    """
    if dim < 3:
        raise ValueError("triples need dim >= 3")
    return stage_product_count(q, dim) + count_directions(q, dim - 1) * q ** (dim - 2)


# -- enumeration and indexing ----------------------------------------------

def _check_capacity(count: int, limit: int) -> None:
    if count > limit:
        raise CapacityError(f"{count} directions exceed the budget of {limit}")


def direction_array(field: FieldSpec, dim: int, max_count: int = DEFAULT_MAX_DIRECTIONS) -> np.ndarray:
    """All canonical directions as an ``(N, dim)`` int64 array in index order."""
    q = field.order
    _check_capacity(count_directions(q, dim), max_count)
    blocks = []
    for p in range(dim):
        tail = dim - 1 - p
        m = q**tail
        block = np.zeros((m, dim), dtype=np.int64)
        block[:, p] = 1
        idx = np.arange(m, dtype=np.int64)
        for j in range(tail):
            block[:, p + 1 + j] = (idx // q ** (tail - 1 - j)) % q
        blocks.append(block)
    if not blocks:
        return np.zeros((0, dim), dtype=np.int64)
    return np.concatenate(blocks)


def enumerate_directions(field: FieldSpec, dim: int, max_count: int = DEFAULT_MAX_DIRECTIONS) -> list[Direction]:
    arr = direction_array(field, dim, max_count)
    return [Direction(tuple(int(c) for c in row), field) for row in arr]


def _offsets(q: int, dim: int) -> np.ndarray:
    sizes = [q ** (dim - 1 - p) for p in range(dim)]
    return np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)


def direction_index(d: Direction) -> int:
    q = d.field.order
    p = next(i for i, c in enumerate(d.coords) if c)
    offset = sum(q ** (d.dim - 1 - i) for i in range(p))
    tail = 0
    for c in d.coords[p + 1:]:
        tail = tail * q + c
    return offset + tail


def direction_at(field: FieldSpec, dim: int, index: int) -> Direction:
    q = field.order
    if not 0 <= index < count_directions(q, dim):
        raise IndexError(f"direction index {index} out of range")
    for p in range(dim):
        size = q ** (dim - 1 - p)
        if index < size:
            tail = []
            for _ in range(dim - 1 - p):
                tail.append(index % q)
                index //= q
            return Direction((0,) * p + (1,) + tuple(reversed(tail)), field)
        index -= size
    raise AssertionError("unreachable")  # pragma: no cover


def direction_indices(field: FieldSpec, arr: np.ndarray) -> np.ndarray:
    """Vectorised ``direction_index`` for canonical rows."""
    arr = np.asarray(arr, dtype=np.int64)
    q = field.order
    dim = arr.shape[1]
    lead = np.argmax(arr != 0, axis=1)
    weights = np.array([q ** (dim - 1 - j) for j in range(dim)], dtype=np.int64)
    after = np.arange(dim)[None, :] > lead[:, None]
    return _offsets(q, dim)[lead] + (arr * weights * after).sum(axis=1)


def canonicalize_array(field: FieldSpec, arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.int64)
    nz = arr != 0
    if not nz.any(axis=1).all():
        raise ValueError("zero vector in input")
    lead = arr[np.arange(len(arr)), np.argmax(nz, axis=1)]
    return field.mul_array(arr, field.inv_array(lead)[:, None])


def dot_array(field: FieldSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rowwise dot products (broadcasting over leading axes)."""
    return np.bitwise_xor.reduce(field.mul_array(a, b), axis=-1)


def _check_pair(a: Direction, b: Direction) -> None:
    if a.field != b.field or a.dim != b.dim:
        raise ValueError("directions live in different spaces")


def is_orthogonal(a: Direction, b: Direction) -> bool:
    _check_pair(a, b)
    acc = 0
    for u, v in zip(a.coords, b.coords):
        acc ^= a.field.mul_int(u, v)
    return acc == 0


# -- orthogonal complements --------------------------------------------------

def nullspace(field: FieldSpec, rows: Sequence[Sequence[int]], dim: int) -> list[list[int]]:
    """Basis of {v : r.v = 0 for every row}; raises if the rows are dependent."""
    m = [list(map(int, r)) for r in rows]
    pivots: list[int] = []
    r = 0
    for col in range(dim):
        piv = next((i for i in range(r, len(m)) if m[i][col]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        s = field.inv_int(m[r][col])
        m[r] = [field.mul_int(c, s) for c in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col]:
                f = m[i][col]
                m[i] = [a ^ field.mul_int(f, b) for a, b in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
    if r < len(m):
        raise DependentConstraintsError(f"{len(m)} constraints have rank {r}")
    basis = []
    for free in (c for c in range(dim) if c not in pivots):
        v = [0] * dim
        v[free] = 1
        for i, pc in enumerate(pivots):
            v[pc] = m[i][free]
        basis.append(v)
    return basis


def _combine(field: FieldSpec, coeffs: np.ndarray, basis: np.ndarray) -> np.ndarray:
    out = np.zeros((len(coeffs), basis.shape[1]), dtype=np.int64)
    for i in range(basis.shape[0]):
        out ^= field.mul_array(coeffs[:, i:i + 1], basis[i][None, :])
    return out


def orthogonal_array(field: FieldSpec, dim: int, constraints, max_count: int = DEFAULT_MAX_DIRECTIONS,
                     sort: bool = True) -> np.ndarray:
    """Canonical directions orthogonal to every constraint row, in index order unless ``sort=False``."""
    rows = [list(map(int, c)) for c in constraints]
    basis = nullspace(field, rows, dim)
    if not basis:
        return np.zeros((0, dim), dtype=np.int64)
    coeffs = direction_array(field, len(basis), max_count)
    vecs = canonicalize_array(field, _combine(field, coeffs, np.array(basis, dtype=np.int64)))
    if not sort:
        return vecs
    return vecs[np.argsort(direction_indices(field, vecs), kind="stable")]


def orthogonal_to(constraints: Sequence[Direction], max_count: int = DEFAULT_MAX_DIRECTIONS) -> list[Direction]:
    if not constraints:
        raise ValueError("at least one constraint direction is required")
    first = constraints[0]
    for c in constraints[1:]:
        _check_pair(first, c)
    arr = orthogonal_array(first.field, first.dim, [c.coords for c in constraints], max_count)
    return [Direction(tuple(int(c) for c in row), first.field) for row in arr]


def cross3(field: FieldSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rowwise cross product in dimension 3; orthogonal to both inputs in char 2."""
    m = field.mul_array
    return np.stack(
        [
            m(a[:, 1], b[:, 2]) ^ m(a[:, 2], b[:, 1]),
            m(a[:, 2], b[:, 0]) ^ m(a[:, 0], b[:, 2]),
            m(a[:, 0], b[:, 1]) ^ m(a[:, 1], b[:, 0]),
        ],
        axis=1,
    )


def orthogonal_pairs_to(field: FieldSpec, d) -> tuple[np.ndarray, np.ndarray]:
    """All ordered pairs (u, v), pairwise orthogonal and both orthogonal to ``d``."""
    d = np.asarray(d, dtype=np.int64)
    dim = len(d)
    us = orthogonal_array(field, dim, [d], sort=False)
    same = (us == d[None, :]).all(axis=1)
    if dim == 3:
        gen = us[~same]
        v_gen = canonicalize_array(field, cross3(field, np.broadcast_to(d, gen.shape), gen))
        u_parts, v_parts = [gen], [v_gen]
    else:
        u_parts, v_parts = [], []
        for u in us[~same]:
            vs = orthogonal_array(field, dim, [d, u], sort=False)
            u_parts.append(np.broadcast_to(u, vs.shape))
            v_parts.append(vs)
    if same.any():  # d is self-orthogonal: u == d leaves all of orth(d) for v
        u_parts.append(np.broadcast_to(d, us.shape))
        v_parts.append(us)
    if not u_parts:
        return np.zeros((0, dim), dtype=np.int64), np.zeros((0, dim), dtype=np.int64)
    return np.concatenate(u_parts).astype(np.int64), np.concatenate(v_parts).astype(np.int64)


# -- triples -----------------------------------------------------------------

def _hyperplane_members(field: FieldSpec, xs: np.ndarray) -> np.ndarray:
    """orth(x) for every row x: array of shape (len(xs), count_directions(q, dim-1), dim)."""
    dim = xs.shape[1]
    coeffs = direction_array(field, dim - 1)
    out = np.empty((len(xs), len(coeffs), dim), dtype=np.int64)
    lead = np.argmax(xs != 0, axis=1)
    for p in range(dim):
        sel = np.nonzero(lead == p)[0]
        if not len(sel):
            continue
        others = [j for j in range(dim) if j != p]
        x = xs[sel]
        y = np.empty((len(sel), len(coeffs), dim), dtype=np.int64)
        y[:, :, others] = coeffs[None, :, :]
        acc = np.zeros((len(sel), len(coeffs)), dtype=np.int64)
        for jj, j in enumerate(others):
            acc ^= field.mul_array(coeffs[None, :, jj], x[:, j:j + 1])
        y[:, :, p] = acc
        out[sel] = y
    flat = canonicalize_array(field, out.reshape(-1, dim))
    return flat.reshape(out.shape)


def iter_orthogonal_pairs(field: FieldSpec, dim: int, chunk: int = 4096) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield chunks (X, Y) of all ordered orthogonal pairs, grouped by x."""
    xs = direction_array(field, dim)
    for start in range(0, len(xs), chunk):
        x = xs[start:start + chunk]
        ys = _hyperplane_members(field, x)
        yield np.repeat(x, ys.shape[1], axis=0), ys.reshape(-1, dim)


def iter_triples(field: FieldSpec, dim: int, chunk: int = 4096, start: int = 0,
                 stop: int | None = None) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Yield chunks (X, Y, Z) covering every ordered pairwise-orthogonal triple once.

    Only x with index in ``[start, stop)`` are covered.  Chunks partition the
    triples by x, so any statistic keyed on x is local to one chunk.
    """
    if dim < 3:
        raise ValueError("triples need dim >= 3")
    xs_all = direction_array(field, dim)
    stop = len(xs_all) if stop is None else min(stop, len(xs_all))
    for lo in range(start, stop, chunk):
        x = xs_all[lo:min(lo + chunk, stop)]
        ys = _hyperplane_members(field, x)  # (c, m, dim)
        c, m, _ = ys.shape
        X = np.repeat(x, m, axis=0)
        Y = ys.reshape(-1, dim)
        same = (X == Y).all(axis=1)
        parts_x, parts_y, parts_z = [], [], []
        gx, gy = X[~same], Y[~same]
        if dim == 3:
            parts_x.append(gx)
            parts_y.append(gy)
            parts_z.append(canonicalize_array(field, cross3(field, gx, gy)))
        else:
            for a, b in zip(gx, gy):
                zs = orthogonal_array(field, dim, [a, b])
                parts_x.append(np.broadcast_to(a, zs.shape))
                parts_y.append(np.broadcast_to(b, zs.shape))
                parts_z.append(zs)
        # y == x (x self-orthogonal): z ranges over orth(x), i.e. the y-row of x
        for i in np.nonzero(same.reshape(c, m).any(axis=1))[0]:
            zs = ys[i]
            parts_x.append(np.broadcast_to(x[i], zs.shape))
            parts_y.append(np.broadcast_to(x[i], zs.shape))
            parts_z.append(zs)
        yield (
            np.concatenate(parts_x).astype(np.int64),
            np.concatenate(parts_y).astype(np.int64),
            np.concatenate(parts_z).astype(np.int64),
        )


def enumerate_triples(field: FieldSpec, dim: int, max_count: int = 2_000_000) -> np.ndarray:
    """All triples as an ``(N, 3, dim)`` array sorted by (x, y, z) index."""
    total = count_triples(field.order, dim)
    if total > max_count:
        raise CapacityError(f"{total} triples exceed the budget of {max_count}")
    chunks = [np.stack(t, axis=1) for t in iter_triples(field, dim)]
    trip = np.concatenate(chunks)
    keys = [direction_indices(field, trip[:, i]) for i in range(3)]
    return trip[np.lexsort(keys[::-1])]


def _randbelow(rng: np.random.Generator, n: int) -> int:
    bits = max(1, (n - 1).bit_length())
    nbytes = (bits + 7) // 8
    while True:
        v = int.from_bytes(rng.bytes(nbytes), "big") >> (8 * nbytes - bits)
        if v < n:
            return v


def _sample_orthogonal(field: FieldSpec, dim: int, constraints, rng: np.random.Generator) -> Direction:
    basis = nullspace(field, constraints, dim)
    c = direction_at(field, len(basis), _randbelow(rng, count_directions(field.order, len(basis))))
    v = [0] * dim
    for coeff, b in zip(c.coords, basis):
        if coeff:
            v = [a ^ field.mul_int(coeff, e) for a, e in zip(v, b)]
    return canonicalize(v, field)


def sample_orthogonal_triple(field: FieldSpec, dim: int, tape: RandomTape | np.random.Generator):
    """Draw (x, y, z) uniformly from all ordered pairwise-orthogonal triples.

    The draw first decides between the degenerate family (y == x, x
    self-orthogonal) and the generic one in proportion to their exact sizes;
    within each family the staged choices have constant stage counts.
    """
    if dim < 3:
        raise ValueError("triples need dim >= 3")
    rng = as_generator(tape, "triple")
    q = field.order
    n_self = count_self_orthogonal(q, dim)
    degenerate = n_self * count_directions(q, dim - 1)
    if _randbelow(rng, count_triples(q, dim)) < degenerate:
        x = _sample_orthogonal(field, dim, [[1] * dim], rng)
        z = _sample_orthogonal(field, dim, [x.coords], rng)
        return x, x, z
    while True:
        x = direction_at(field, dim, _randbelow(rng, count_directions(q, dim)))
        y = _sample_orthogonal(field, dim, [x.coords], rng)
        if y != x:
            break
    z = _sample_orthogonal(field, dim, [x.coords, y.coords], rng)
    return x, y, z


def directions_for(q: int, dim: int) -> list[Direction]:
    return enumerate_directions(field_for_order(q), dim)
