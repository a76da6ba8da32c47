import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orthokey.field import make_field
from orthokey.hashing import (
    BinaryMatrix,
    CoordinateHasher,
    apply_hash,
    bits_to_int,
    collision_stats,
    encode,
    identity_matrix,
    int_to_bits,
    sample_matrix,
)
from orthokey.projspace import Direction, enumerate_directions
from orthokey.tape import RandomTape

import oracles


def test_encode_examples():
    f2 = make_field(1)
    assert encode(Direction((1, 0, 0), f2)).tolist() == [1, 0, 0]
    f4 = make_field(2)
    a, b = Direction((0, 1, 2), f4), Direction((1, 3, 0), f4)
    assert encode(a).tolist() == [0, 0, 0, 1, 1, 0]
    assert encode([a, b]).tolist() == encode(a).tolist() + encode(b).tolist()


def test_encode_injective_q4():
    codes = {tuple(encode(d)) for d in enumerate_directions(make_field(2), 3)}
    assert len(codes) == 21


def test_encode_rejects_mixed_spaces():
    with pytest.raises(ValueError):
        encode([Direction((1, 0, 0), make_field(1)), Direction((1, 0, 0), make_field(2))])


def test_bits_int_round_trip():
    assert bits_to_int([1, 0, 1, 1]) == 11
    assert int_to_bits(11, 6).tolist() == [0, 0, 1, 0, 1, 1]


def test_sample_matrix_deterministic():
    t = RandomTape(99)
    assert sample_matrix(t, "key", 8, 40) == sample_matrix(RandomTape(99), "key", 8, 40)
    assert sample_matrix(t, "key", 16, 16) != sample_matrix(t, "round1/alice", 16, 16)
    assert sample_matrix(t, "key", 16, 16) != sample_matrix(RandomTape(100), "key", 16, 16)


def test_sample_matrix_prefix_property():
    t = RandomTape(5)
    short, long = sample_matrix(t, "key", 3, 30), sample_matrix(t, "key", 9, 30)
    assert np.array_equal(long.bits[:3], short.bits)


def test_sample_matrix_bit_frequency():
    bits = sample_matrix(RandomTape(11), "freq", 100, 1000).bits
    p = bits.mean()
    sigma = np.sqrt(0.25 / bits.size)
    assert abs(p - 0.5) <= 3 * sigma


def test_matrix_validation():
    with pytest.raises(ValueError):
        sample_matrix(RandomTape(0), "x", 0, 4)
    with pytest.raises(ValueError):
        identity_matrix(5, 4)


def test_serialization_round_trip():
    m = sample_matrix(RandomTape(3), "round2/charlie", 5, 13)
    data = m.serialize()
    assert data["rows"] == 5 and data["cols"] == 13 and data["seed"] == 3
    assert BinaryMatrix.deserialize(data) == m
    assert len(m.to_hex()) == 2 * 5 * 2


def test_apply_hash_examples():
    v = np.array([1, 0, 1, 1, 0, 1], dtype=np.uint8)
    assert apply_hash(BinaryMatrix.from_bits(np.zeros((3, 6))), v).tolist() == [0, 0, 0]
    assert apply_hash(identity_matrix(4, 6), v).tolist() == [1, 0, 1, 1]
    with pytest.raises(ValueError):
        apply_hash(identity_matrix(4, 6), v[:5])


def test_linearity_random_pairs():
    rng = np.random.default_rng(0)
    m = sample_matrix(RandomTape(1), "lin", 12, 40)
    for _ in range(1000):
        u, v = rng.integers(0, 2, 40, dtype=np.uint8), rng.integers(0, 2, 40, dtype=np.uint8)
        assert np.array_equal(apply_hash(m, u ^ v), apply_hash(m, u) ^ apply_hash(m, v))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 40), st.integers(1, 30), st.integers(0, 2**31))
def test_apply_hash_matches_naive_product(rows, cols, seed):
    m = sample_matrix(RandomTape(seed), "naive", rows, cols)
    v = np.random.default_rng(seed).integers(0, 2, cols, dtype=np.uint8)
    assert apply_hash(m, v).tolist() == oracles.matvec_f2(m.bits.tolist(), v.tolist())


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 20), st.integers(1, 3), st.integers(1, 63), st.integers(0, 2**31))
def test_coordinate_hasher_matches_encoding(n, n_dirs, rows, seed):
    f = make_field(n)
    m = sample_matrix(RandomTape(seed), "vec", rows, 3 * n * n_dirs)
    h = CoordinateHasher(m, n)
    rng = np.random.default_rng(seed)
    coords = rng.integers(0, f.order, size=(5, 3 * n_dirs))
    got = h(coords)
    for row, value in zip(coords, got):
        bits = np.concatenate([int_to_bits(int(c), n) for c in row])
        assert int(value) == bits_to_int(apply_hash(m, bits))


def test_coordinate_hasher_limits():
    with pytest.raises(ValueError):
        CoordinateHasher(sample_matrix(RandomTape(0), "w", 64, 8), 8)
    with pytest.raises(ValueError):
        CoordinateHasher(sample_matrix(RandomTape(0), "w", 4, 9), 8)


@pytest.mark.parametrize("ell", [1, 4])
def test_collision_rate_within_three_sigma(ell):
    rep = collision_stats(ell, 32, 100_000, RandomTape(8))
    assert rep.within_3sigma, rep.to_dict()


def test_identical_inputs_always_collide():
    u = np.ones(16, dtype=np.uint8)
    rep = collision_stats(6, 16, [(u, u)] * 50, RandomTape(0))
    assert rep.collisions == 50


def test_tape_streams():
    t = RandomTape(4)
    assert np.array_equal(t.bits(64, "a"), RandomTape(4).bits(64, "a"))
    assert not np.array_equal(t.bits(64, "a"), t.bits(64, "b"))
    assert np.array_equal(t.child("x").bits(32, "y"), t.bits(32, "x", "y"))
