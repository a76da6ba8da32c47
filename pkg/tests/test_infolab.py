import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orthokey.field import make_field
from orthokey.infolab import (
    InequalityViolation,
    JointDistribution,
    ProfileIdentityError,
    ProfileReport,
    check_lemma_b1,
    check_lemma_b2,
    conditional_entropy,
    entropy,
    entropy_from_counts,
    geometric_profile,
    keybound_audit,
    mutual_info,
    profile,
    random_distribution,
    triple_info,
)
from orthokey.projspace import direction_indices, enumerate_triples

import oracles


def uniform(variables, rows):
    return JointDistribution.from_pmf(variables, [(r, Fraction(1, len(rows))) for r in rows])


BIT = [0, 1]
INDEP3 = uniform("xyz", list(itertools.product(BIT, BIT, BIT)))
COPY3 = uniform("xyz", [(0, 0, 0), (1, 1, 1)])
XOR = uniform("xyz", [(a, b, a ^ b) for a in BIT for b in BIT])


def test_entropy_examples():
    assert entropy(uniform("x", [(0,), (1,)]), "x") == pytest.approx(1.0)
    assert entropy(uniform("x", [(5,)]), "x") == 0.0
    assert entropy(uniform("x", [(i,) for i in range(7)]), "x") == pytest.approx(math.log2(7), abs=1e-12)
    assert entropy_from_counts([3, 3, 0]) == pytest.approx(1.0)


def test_mutual_info_examples():
    assert mutual_info(INDEP3, "x", "y") == pytest.approx(0.0, abs=1e-12)
    assert mutual_info(COPY3, "x", "y") == pytest.approx(1.0)


def example_one(m=2):
    """x = uv and y = uw for independent uniform m-bit blocks u, v, w."""
    rows = []
    for u, v, w in itertools.product(range(2**m), repeat=3):
        rows.append(((u, v), (u, w), 0))
    return uniform(["x", "y", "z"], rows)


def test_example_one_shared_block():
    d = example_one()
    assert mutual_info(d, "x", "y") == pytest.approx(2.0)
    rep = profile(d, "x", "y", "z")
    assert rep.h_z == 0.0
    assert rep.i_xz == pytest.approx(0.0, abs=1e-12)
    assert rep.i_xy_given_z == pytest.approx(2.0)
    assert rep.i_xyz == pytest.approx(0.0, abs=1e-12)


def test_triple_info_examples():
    assert triple_info(INDEP3, "x", "y", "z") == pytest.approx(0.0, abs=1e-12)
    assert triple_info(COPY3, "x", "y", "z") == pytest.approx(1.0)
    assert triple_info(XOR, "x", "y", "z") == pytest.approx(-1.0)
    # equals I(X:Y) - I(X:Y|Z)
    for d in (INDEP3, COPY3, XOR):
        lhs = triple_info(d, "x", "y", "z")
        assert lhs == pytest.approx(mutual_info(d, "x", "y") - mutual_info(d, "x", "y", "z"), abs=1e-12)


def test_overlap_and_unknown_variable():
    with pytest.raises(ValueError):
        mutual_info(INDEP3, "x", ["x", "y"])
    with pytest.raises(KeyError):
        entropy(INDEP3, "w")
    with pytest.raises(ValueError):
        entropy(INDEP3, [])


def test_distribution_validation():
    with pytest.raises(ValueError):
        JointDistribution.from_pmf("x", [((0,), Fraction(1, 2)), ((0,), Fraction(1, 2))])
    with pytest.raises(ValueError):
        JointDistribution.from_pmf("x", [((0,), Fraction(1, 3))])
    with pytest.raises(ValueError):
        JointDistribution.from_pmf("x", [((0,), 0.5), ((1,), 0.25)])


def test_float_and_exact_modes_agree():
    exact = uniform("xy", [(0, 0), (0, 1), (1, 1)])
    floats = JointDistribution.from_pmf("xy", [((0, 0), 1 / 3), ((0, 1), 1 / 3), ((1, 1), 1 - 2 / 3)])
    assert exact.exact and not floats.exact
    assert mutual_info(exact, "x", "y") == pytest.approx(mutual_info(floats, "x", "y"), abs=1e-9)


# I(x:y) for the uniform distribution on all 125 ordered orthogonal triples over
# GF(4)^3, frozen from the dictionary-based entropy oracle.
ORACLE_I_XY_Q4 = 2.175755941145262


def _q4_triples():
    f = make_field(2)
    t = enumerate_triples(f, 3)
    return [tuple(int(v) for v in direction_indices(f, t[:, i])) for i in range(3)], len(t)


def test_profile_of_orthogonal_triples_q4():
    cols, n = _q4_triples()
    d = JointDistribution.from_counts({"x": cols[0], "y": cols[1], "z": cols[2]})
    assert n == 125
    rep = profile(d, "x", "y", "z")
    assert rep.i_xy == pytest.approx(ORACLE_I_XY_Q4, abs=1e-12)
    pmf = Counter({t: Fraction(1, n) for t in zip(*cols)})
    assert oracles.mutual(pmf, (0,), (1,)) == pytest.approx(ORACLE_I_XY_Q4, abs=1e-12)
    # exchangeable: swapping x and y permutes the profile
    swapped = profile(d, "y", "x", "z")
    assert swapped.h_x == pytest.approx(rep.h_y) and swapped.i_xz == pytest.approx(rep.i_yz)


def test_orthogonal_pairs_give_closed_form_information():
    # uniform over the 105 ordered orthogonal pairs: x and y uniform, x|y uniform over 5
    cols, _ = _q4_triples()
    pairs = sorted(set(zip(cols[0], cols[1])))
    assert len(pairs) == 105
    d = uniform("xy", pairs)
    assert mutual_info(d, "x", "y") == pytest.approx(math.log2(21 / 5), abs=1e-12)


def test_profile_identities_detect_corruption():
    rep = ProfileReport(1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0)
    rep.check()
    assert all(abs(v) < 1e-12 for v in rep.identity_residuals().values())
    bad = ProfileReport(1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0)
    object.__setattr__(bad, "h_x", float("nan"))
    with pytest.raises(ProfileIdentityError):
        bad.check()


def test_geometric_profile_examples():
    p = geometric_profile(2, 2).report
    assert p.h_x == pytest.approx(math.log2(7))
    assert p.i_xy == pytest.approx(math.log2(7 / 3))
    p = geometric_profile(16, 2).report
    assert p.i_xy == pytest.approx(math.log2(273 / 17))
    assert abs(p.i_xy - 4) <= 1
    p = geometric_profile(256, 2).report
    assert p.h_xyz == pytest.approx(math.log2(16_908_801))
    with pytest.raises(ValueError):
        geometric_profile(4, 1)


@pytest.mark.parametrize("q", [4, 16, 256])
@pytest.mark.parametrize("k", [2, 3])
def test_geometric_profile_windows(q, k):
    gp = geometric_profile(q, k)
    assert gp.within_bounds, gp.bounds()


def test_binary_field_overshoots_joint_window():
    # over GF(2) the lower-order terms are not small: H(xyz) = log2(15*7*3) vs 6
    gp = geometric_profile(2, 3)
    value, window, ok = gp.bounds()["H(xyz) - (3k-3)n"]
    assert value == pytest.approx(math.log2(315) - 6) and not ok
    assert geometric_profile(2, 2).within_bounds


def test_lemma_b1_examples():
    d = uniform("xys", [(a, b, c) for a in BIT for b in BIT for c in BIT])
    r = check_lemma_b1(d, "x", "y", "s")
    assert r.lhs == pytest.approx(r.rhs) and r.slack == pytest.approx(0.0, abs=1e-12)
    r = check_lemma_b1(XOR, "x", "y", "z")
    assert r.lhs == pytest.approx(1.0) and r.rhs == pytest.approx(1.0)


def test_lemma_b2_examples():
    rows = [(a, a, b, b, c) for a in range(3) for b in range(2) for c in range(2) if (a + b + c) % 2 == 0]
    d = uniform(["x", "xp", "y", "yp", "z"], rows)
    i, ii = check_lemma_b2(d, "x", "xp", "y", "yp", "z")
    assert i.slack == pytest.approx(0.0, abs=1e-12) and ii.slack == pytest.approx(0.0, abs=1e-12)
    # x' a function of x: data processing
    rows = [(a, a % 2, b, b, c) for a in range(4) for b in range(2) for c in range(2) if (a + b) % 3 != c]
    d = uniform(["x", "xp", "y", "yp", "z"], rows)
    i, _ = check_lemma_b2(d, "x", "xp", "y", "yp", "z")
    assert conditional_entropy(d, "xp", "x") == pytest.approx(0.0, abs=1e-12)
    assert i.lhs <= mutual_info(d, "x", "y", "z") + 1e-12


def test_strict_checker_raises_on_violation(monkeypatch):
    import orthokey.infolab as il

    monkeypatch.setattr(il, "mutual_info", lambda dist, a, b, given=(): 5.0 if given else 0.0)
    with pytest.raises(InequalityViolation):
        il.check_lemma_b1(XOR, "x", "y", "z")


def test_keybound_examples():
    rows = [(x, y, 0, 0, 0) for x in range(2) for y in range(2)]
    kb = keybound_audit(uniform(["x", "y", "mC", "t", "w"], rows))
    assert kb.h_w == 0.0 and kb.holds
    rows = [(b, b, 0, 0, w) for b in range(4) for w in range(2)]
    kb = keybound_audit(uniform(["x", "y", "mC", "t", "w"], rows))
    assert kb.h_w == pytest.approx(1.0) and kb.i_w_t == pytest.approx(0.0, abs=1e-12)
    assert kb.i_xy_given_mc == pytest.approx(2.0) and kb.holds
    with pytest.raises(KeyError):
        keybound_audit(uniform(["x", "y"], [(0, 0)]))


def test_jsonl_round_trip(tmp_path):
    d = uniform(["a", "b"], [("u", 1), ("v", 2), ("w", 2)])
    path = tmp_path / "dist.jsonl"
    d.to_jsonl(path)
    back = JointDistribution.from_jsonl(path)
    assert back.variables == ("a", "b")
    assert back.exact
    assert entropy(back, ["a", "b"]) == pytest.approx(math.log2(3))
    assert mutual_info(back, "a", "b") == pytest.approx(mutual_info(d, "a", "b"))


def _as_pmf(dist):
    w = dist.weights
    rows = zip(*(dist.codes[v].tolist() for v in dist.variables))
    return Counter({r: Fraction(int(x), int(w.sum())) for r, x in zip(rows, w)})


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 5), st.integers(2, 4))
def test_engine_matches_dictionary_oracle(seed, n_vars, alphabet):
    d = random_distribution(np.random.default_rng(seed), n_vars, alphabet)
    pmf = _as_pmf(d)
    v = d.variables
    for size in range(1, n_vars + 1):
        for group in itertools.combinations(range(n_vars), size):
            assert entropy(d, [v[i] for i in group]) == pytest.approx(oracles.entropy(pmf, group), abs=1e-9)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32), st.integers(3, 5), st.integers(2, 4))
def test_chain_rule_nonnegativity_identities(seed, n_vars, alphabet):
    d = random_distribution(np.random.default_rng(seed), n_vars, alphabet)
    v = d.variables
    h = entropy(d, v[:2])
    assert h == pytest.approx(entropy(d, v[0]) + conditional_entropy(d, v[1], v[0]), abs=1e-9)
    assert conditional_entropy(d, v[0], v[1:]) >= -1e-9
    assert mutual_info(d, v[0], v[1]) >= -1e-9
    assert mutual_info(d, v[0], v[1], v[2:]) >= -1e-9
    rep = profile(d, v[0], v[1], v[2:])
    assert max(abs(r) for r in rep.identity_residuals().values()) <= 1e-9
    assert check_lemma_b1(d, v[0], v[1], v[2]).holds
    groups = (list(v) + [(), ()])[:5]
    i, ii = check_lemma_b2(d, *groups)
    assert i.holds and ii.holds
