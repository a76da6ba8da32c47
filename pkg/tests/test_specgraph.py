import math

import numpy as np
import pytest

from orthokey.field import make_field
from orthokey.projspace import count_triples, direction_array, direction_indices, orthogonal_array
from orthokey.specgraph import (
    BipartiteGraphSpec,
    GraphKind,
    build_biadjacency,
    degree_profile,
    gram_closed_form,
    gram_matrix,
    graph_params,
    lambda2_theory,
    mixing_deviation,
    mixing_scan,
    spectrum,
)
from orthokey.tape import RandomTape

import oracles


def test_graph_params_examples():
    s = graph_params("dirdir", 2, 2)
    assert (s.n_left, s.n_right, s.d_left, s.d_right) == (7, 7, 3, 3)
    s = graph_params("dirpair", 2, 2)
    assert (s.n_left, s.n_right, s.d_left, s.d_right) == (7, 21, 3, 1)
    s = graph_params("dirdir", 4, 2)
    assert (s.n_left, s.d_left) == (21, 5)


@pytest.mark.parametrize("kind", ["dirdir", "dirpair"])
@pytest.mark.parametrize("q", [2, 4, 8, 16])
@pytest.mark.parametrize("k", [2, 3, 4])
def test_edge_count_consistency(kind, q, k):
    s = graph_params(kind, q, k)
    assert s.n_left * s.d_left == s.n_right * s.d_right


def test_graph_params_errors():
    with pytest.raises(ValueError):
        graph_params("dirdir", 2, 1)
    with pytest.raises(ValueError):
        graph_params("dirdir", 6, 2)
    with pytest.raises(ValueError):
        BipartiteGraphSpec(GraphKind.DIRDIR, 2, 2, 7, 7, 3, 4)


def test_gram_closed_form_values():
    assert gram_closed_form(graph_params("dirdir", 2, 2)) == (3, 1)
    assert gram_closed_form(graph_params("dirpair", 2, 2)) == (3, 0)
    assert gram_closed_form(graph_params("dirdir", 4, 2)) == (5, 1)


@pytest.mark.parametrize("kind", ["dirdir", "dirpair"])
@pytest.mark.parametrize("q,k", [(2, 2), (2, 3), (4, 2), (4, 3)])
def test_biadjacency_matches_oracle(kind, q, k):
    n = q.bit_length() - 1
    f = make_field(n)
    spec = graph_params(kind, q, k)
    j = build_biadjacency(spec)
    want = oracles.biadjacency(kind, n, f.polynomial, k)
    # relabel oracle rows (lexicographic) into the package enumeration order
    perm = direction_indices(f, np.array(oracles.directions(n, f.polynomial, k + 1)))
    if kind == "dirdir":
        relabelled = np.zeros_like(want)
        relabelled[np.ix_(perm, perm)] = want
        assert np.array_equal(j, relabelled)
        assert np.array_equal(j, j.T)
    else:
        assert j.shape == want.shape
        # columns are ordered pairs; compare row-wise multisets of column signatures
        relabelled = np.zeros_like(want)
        relabelled[perm] = want
        assert sorted(map(tuple, j.T.tolist())) == sorted(map(tuple, relabelled.T.tolist()))
    # edges of the pair graph are exactly the ordered orthogonal triples
    edges = spec.n_left * spec.d_left if kind == "dirdir" else count_triples(q, k + 1)
    assert int(j.sum()) == edges


def test_dirdir_regular_with_loops():
    spec = graph_params("dirdir", 2, 2)
    j = build_biadjacency(spec)
    assert set(j.sum(axis=0)) == {3} and set(j.sum(axis=1)) == {3}
    assert int(np.trace(j)) == 3  # the self-orthogonal directions


# Degree sets frozen from the brute-force oracle: the pair graph is not biregular
# once self-orthogonal directions are present.
DIRPAIR_DEGREES = {
    (2, 2): ([3, 5], [1, 3]),
    (2, 3): ([21, 25], [3, 7]),
    (4, 2): ([5, 9], [1, 5]),
    (4, 3): ([105, 121], [5, 21]),
}


@pytest.mark.parametrize("q,k", sorted(DIRPAIR_DEGREES))
def test_dirpair_degree_profile(q, k):
    prof = degree_profile(graph_params("dirpair", q, k))
    rows, cols = DIRPAIR_DEGREES[(q, k)]
    assert prof["row_sums"] == rows
    assert prof["col_sums"] == cols


# (lambda1, lambda2) frozen from an independent dense eigensolve of the oracle gram.
ORACLE_SPECTRA = {
    ("dirdir", 2, 2): (3.0, 1.414214), ("dirdir", 2, 3): (7.0, 2.0),
    ("dirdir", 4, 2): (5.0, 2.0), ("dirdir", 4, 3): (21.0, 4.0),
    ("dirpair", 2, 2): (2.613126, 2.326846), ("dirpair", 2, 3): (9.103465, 5.291503),
    ("dirpair", 4, 2): (3.50769, 3.162278), ("dirpair", 4, 3): (25.161878, 14.003307),
}


@pytest.mark.parametrize("key", sorted(ORACLE_SPECTRA))
def test_spectrum_matches_oracle(key):
    rep = spectrum(graph_params(*key))
    l1, l2 = ORACLE_SPECTRA[key]
    assert rep.lambda1_numeric == pytest.approx(l1, abs=1e-6)
    assert rep.lambda2_numeric == pytest.approx(l2, abs=1e-6)
    assert rep.lambda1_numeric >= rep.lambda2_numeric >= 0


def test_dirdir_spectrum_examples():
    rep = spectrum(graph_params("dirdir", 2, 2))
    assert rep.lambda1_numeric == pytest.approx(3.0, abs=1e-9)
    assert rep.lambda2_numeric == pytest.approx(math.sqrt(2), abs=1e-9)
    assert rep.residual2 < 1e-9 and rep.structure_residual < 1e-9
    assert spectrum(graph_params("dirdir", 4, 2)).lambda2_numeric == pytest.approx(2.0, abs=1e-9)


def test_lambda2_theory_values():
    assert lambda2_theory(graph_params("dirpair", 2, 2)) == pytest.approx(math.sqrt(3))
    assert lambda2_theory(graph_params("dirpair", 4, 3)) <= math.sqrt(graph_params("dirpair", 4, 3).d_left)


def test_gram_matrix_dirdir_structure():
    for q, k in [(2, 2), (2, 3), (4, 2), (4, 3)]:
        spec = graph_params("dirdir", q, k)
        g = gram_matrix(spec)
        diag, off = gram_closed_form(spec)
        n = spec.n_left
        assert np.array_equal(g, diag * np.eye(n, dtype=np.int64) + off * (1 - np.eye(n, dtype=np.int64)))


def test_mixing_examples():
    spec = graph_params("dirdir", 2, 2)
    full = mixing_deviation(spec, range(7), range(7))
    assert full.edges == 21 and full.deviation == pytest.approx(0.0)
    empty = mixing_deviation(spec, [], range(7))
    assert empty.edges == 0 and empty.deviation == 0
    f = make_field(1)
    x = direction_array(f, 3)[0]
    b = direction_indices(f, orthogonal_array(f, 3, [x]))
    rep = mixing_deviation(spec, [0], b)
    assert rep.edges == 3
    assert rep.main_term == pytest.approx(9 / 7)
    assert rep.deviation == pytest.approx(12 / 7)
    assert rep.bound == pytest.approx(math.sqrt(2) * math.sqrt(3))
    assert rep.satisfied
    with pytest.raises(IndexError):
        mixing_deviation(spec, [7], [0])


def test_exhaustive_mixing_small_graph():
    rep = mixing_scan(graph_params("dirdir", 2, 2), 0, RandomTape(0))
    assert rep.exhaustive and rep.pairs_checked == 16384
    assert rep.violations == 0 and rep.corollary_violations == 0
    assert rep.max_ratio <= 1


def test_random_mixing_independent_of_workers():
    spec = graph_params("dirdir", 4, 2)
    a = mixing_scan(spec, 600, RandomTape(2), workers=1)
    b = mixing_scan(spec, 600, RandomTape(2), workers=2)
    assert a.to_dict() == b.to_dict()
    assert a.violations == 0


def test_corollary_vacuous_without_qualifying_pairs():
    rep = mixing_scan(graph_params("dirpair", 2, 2), 200, RandomTape(1))
    assert rep.corollary_qualifying == 0 and rep.corollary_violations == 0


def test_capacity_guard():
    with pytest.raises(ValueError):
        build_biadjacency(graph_params("dirpair", 64, 3))
