"""Bipartite orthogonality graphs, their spectra, and mixing-bound checks.

Two graphs over directions in F_q^(k+1):

* ``DIRDIR``: left = right = directions, edge iff orthogonal (self-loops for
  self-orthogonal directions are kept).
* ``DIRPAIR``: left = directions, right = ordered orthogonal pairs (y, z)
  (``y == z`` allowed for self-orthogonal y), edge iff x, y, z are pairwise
  orthogonal.

``graph_params`` and ``gram_closed_form`` return the textbook closed forms.
They are exact for ``DIRDIR``.  For ``DIRPAIR`` the self-orthogonal
directions make the graph irregular in characteristic 2, so the built matrix
deviates from the closed forms; ``build_biadjacency`` and ``spectrum`` report
what the graph actually is.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .field import field_for_order
from .projspace import count_directions, direction_array, dot_array
from .tape import RandomTape

MAX_CELLS = 60_000_000


class GraphKind(str, enum.Enum):
    DIRDIR = "dirdir"
    DIRPAIR = "dirpair"


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class BipartiteGraphSpec:
    kind: GraphKind
    q: int
    k: int
    n_left: int
    n_right: int
    d_left: int
    d_right: int

    def __post_init__(self) -> None:
        if self.n_left * self.d_left != self.n_right * self.d_right:
            raise ValueError("edge counts from the two sides disagree")

    def to_dict(self) -> dict:
        return {**asdict(self), "kind": self.kind.value}


def _check_q(q: int) -> None:
    if q < 2 or q & (q - 1):
        raise ValueError(f"q must be a power of 2, got {q}")


def graph_params(kind: GraphKind | str, q: int, k: int) -> BipartiteGraphSpec:
    kind = GraphKind(kind)
    _check_q(q)
    if k < 2:
        raise ValueError("k must be at least 2")
    c = lambda d: count_directions(q, d)  # noqa: E731
    if kind is GraphKind.DIRDIR:
        return BipartiteGraphSpec(kind, q, k, c(k + 1), c(k + 1), c(k), c(k))
    return BipartiteGraphSpec(kind, q, k, c(k + 1), c(k + 1) * c(k), c(k) * c(k - 1), c(k - 1))


def gram_closed_form(spec: BipartiteGraphSpec) -> tuple[int, int]:
    """(diagonal, off-diagonal) of J J^T predicted by path counting."""
    c = lambda d: count_directions(spec.q, d)  # noqa: E731
    if spec.kind is GraphKind.DIRDIR:
        return spec.d_left, c(spec.k - 1)
    return spec.d_left, c(spec.k - 1) * c(spec.k - 2)


@lru_cache(maxsize=16)
def _orthogonality(q: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    f = field_for_order(q)
    dirs = direction_array(f, dim)
    o = np.empty((len(dirs), len(dirs)), dtype=np.uint8)
    for start in range(0, len(dirs), 256):
        o[start:start + 256] = dot_array(f, dirs[start:start + 256, None, :], dirs[None, :, :]) == 0
    o.setflags(write=False)
    return dirs, o


def right_vertices(spec: BipartiteGraphSpec) -> np.ndarray:
    """Right vertex labels: direction indices (DIRDIR) or (y, z) index pairs (DIRPAIR)."""
    _, o = _orthogonality(spec.q, spec.k + 1)
    if spec.kind is GraphKind.DIRDIR:
        return np.arange(len(o))
    return np.argwhere(o == 1)  # row-major: sorted by (y, z)


@lru_cache(maxsize=16)
def build_biadjacency(spec: BipartiteGraphSpec) -> np.ndarray:
    """0/1 matrix J (n_left x n_right), read-only."""
    if spec.n_left * spec.n_right > MAX_CELLS:
        raise ValueError(f"{spec.n_left} x {spec.n_right} biadjacency exceeds {MAX_CELLS} cells")
    _, o = _orthogonality(spec.q, spec.k + 1)
    if spec.kind is GraphKind.DIRDIR:
        j = o.copy()
    else:
        pairs = right_vertices(spec)
        j = o[:, pairs[:, 0]] & o[:, pairs[:, 1]]
    j.setflags(write=False)
    return j


def degree_profile(spec: BipartiteGraphSpec) -> dict:
    j = build_biadjacency(spec)
    rows, cols = j.sum(axis=1), j.sum(axis=0)
    return {
        "row_sums": sorted({int(v) for v in rows}),
        "col_sums": sorted({int(v) for v in cols}),
        "regular": bool(rows.min() == rows.max() == spec.d_left and cols.min() == cols.max() == spec.d_right),
    }


def gram_matrix(spec: BipartiteGraphSpec) -> np.ndarray:
    j = build_biadjacency(spec).astype(np.int64)
    return j @ j.T


def lambda2_theory(spec: BipartiteGraphSpec) -> float:
    if spec.kind is GraphKind.DIRDIR:
        return spec.q ** ((spec.k - 1) / 2)
    diag, off = gram_closed_form(spec)
    return math.sqrt(diag - off)


@dataclass(frozen=True)
class SpectralReport:
    spec: BipartiteGraphSpec
    lambda1_numeric: float
    lambda2_numeric: float
    lambda1_theory: float
    lambda2_theory: float
    structure_residual: float  # max |sorted eig(J J^T) - closed-form multiset|
    degrees: dict = field(default_factory=dict)

    @property
    def residual1(self) -> float:
        return abs(self.lambda1_numeric - self.lambda1_theory)

    @property
    def residual2(self) -> float:
        return abs(self.lambda2_numeric - self.lambda2_theory)

    @property
    def sqrt_d_left(self) -> float:
        return math.sqrt(self.spec.d_left)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "lambda1_numeric": self.lambda1_numeric, "lambda1_theory": self.lambda1_theory,
            "lambda2_numeric": self.lambda2_numeric, "lambda2_theory": self.lambda2_theory,
            "residual1": self.residual1, "residual2": self.residual2,
            "sqrt_d_left": self.sqrt_d_left, "structure_residual": self.structure_residual,
            "degrees": self.degrees,
        }


def closed_form_eigenvalues(spec: BipartiteGraphSpec) -> np.ndarray:
    """Eigenvalues of diag*I + off*(AllOnes - I), descending."""
    diag, off = gram_closed_form(spec)
    n = spec.n_left
    return np.array([diag + off * (n - 1)] + [diag - off] * (n - 1), dtype=np.float64)


def spectrum(spec: BipartiteGraphSpec) -> SpectralReport:
    g = gram_matrix(spec).astype(np.float64)
    try:
        eig = np.linalg.eigvalsh(g)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"symmetric eigensolver did not converge on a {g.shape[0]}-square gram: {exc}") from exc
    eig = np.sort(eig)[::-1]
    sv = np.sqrt(np.clip(eig, 0.0, None))
    return SpectralReport(
        spec,
        lambda1_numeric=float(sv[0]),
        lambda2_numeric=float(sv[1]) if len(sv) > 1 else 0.0,
        lambda1_theory=math.sqrt(spec.d_left * spec.d_right),
        lambda2_theory=lambda2_theory(spec),
        structure_residual=float(np.max(np.abs(eig - closed_form_eigenvalues(spec)))),
        degrees=degree_profile(spec),
    )


@dataclass(frozen=True)
class MixingReport:
    size_a: int
    size_b: int
    edges: int
    main_term: float
    bound: float

    @property
    def deviation(self) -> float:
        return abs(self.edges - self.main_term)

    @property
    def satisfied(self) -> bool:
        return self.deviation <= self.bound * (1 + 1e-12) + 1e-12

    @property
    def ratio(self) -> float:
        if self.bound == 0:
            return 0.0 if self.deviation == 0 else math.inf
        return self.deviation / self.bound

    def to_dict(self) -> dict:
        return {**asdict(self), "deviation": self.deviation, "satisfied": self.satisfied, "ratio": self.ratio}


def mixing_deviation(spec: BipartiteGraphSpec, a, b) -> MixingReport:
    """Exact edge count between index sets ``a`` (left) and ``b`` (right)."""
    a = np.unique(np.asarray(list(a), dtype=np.int64))
    b = np.unique(np.asarray(list(b), dtype=np.int64))
    if len(a) and (a.min() < 0 or a.max() >= spec.n_left):
        raise IndexError("left index out of range")
    if len(b) and (b.min() < 0 or b.max() >= spec.n_right):
        raise IndexError("right index out of range")
    j = build_biadjacency(spec)
    edges = int(j[np.ix_(a, b)].sum()) if len(a) and len(b) else 0
    na, nb = len(a), len(b)
    return MixingReport(na, nb, edges, spec.d_left * na * nb / spec.n_right, lambda2_theory(spec) * math.sqrt(na * nb))


@dataclass
class MixingScanReport:
    spec: BipartiteGraphSpec
    pairs_checked: int
    exhaustive: bool
    violations: int
    max_ratio: float
    worst: MixingReport | None
    corollary_qualifying: int
    corollary_violations: int

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.corollary_violations == 0

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(), "pairs_checked": self.pairs_checked, "exhaustive": self.exhaustive,
            "violations": self.violations, "max_ratio": self.max_ratio,
            "worst": self.worst.to_dict() if self.worst else None,
            "corollary_qualifying": self.corollary_qualifying, "corollary_violations": self.corollary_violations,
            "ok": self.ok,
        }


def _scan_masks(spec: BipartiteGraphSpec, ma: np.ndarray, mb: np.ndarray) -> dict:
    """Evaluate every (row of ma) x (row of mb) pair if ``cross`` else rowwise pairs."""
    j = build_biadjacency(spec).astype(np.int64)
    lam = lambda2_theory(spec)
    lam_sq = (spec.d_left - gram_closed_form(spec)[1]) if spec.kind is GraphKind.DIRPAIR else spec.q ** (spec.k - 1)
    edges = ((ma.astype(np.int64) @ j) * mb).sum(axis=1)
    na, nb = ma.sum(axis=1).astype(np.int64), mb.sum(axis=1).astype(np.int64)
    main = spec.d_left * na * nb / spec.n_right
    bound = lam * np.sqrt(na * nb)
    dev = np.abs(edges - main)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, dev / np.where(bound > 0, bound, 1), np.where(dev > 0, np.inf, 0.0))
    violated = dev > bound * (1 + 1e-12) + 1e-12
    # corollary: a*b*dL^2 >= lambda2^2 * nR^2  =>  E * nR <= 2 * dL * a * b
    qualifying = na * nb * spec.d_left**2 >= lam_sq * spec.n_right**2
    cor_bad = qualifying & (edges * spec.n_right > 2 * spec.d_left * na * nb)
    i = int(np.argmax(ratio)) if len(ratio) else 0
    return {
        "pairs": len(edges),
        "violations": int(violated.sum()),
        "max_ratio": float(ratio[i]) if len(ratio) else 0.0,
        "worst": MixingReport(int(na[i]), int(nb[i]), int(edges[i]), float(main[i]), float(bound[i])) if len(ratio) else None,
        "qualifying": int(qualifying.sum()),
        "cor_bad": int(cor_bad.sum()),
    }


def _all_subsets(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.uint8)


def _random_chunk(spec: BipartiteGraphSpec, tape: RandomTape, start: int, stop: int) -> dict:
    ma = np.empty((stop - start, spec.n_left), dtype=np.uint8)
    mb = np.empty((stop - start, spec.n_right), dtype=np.uint8)
    for row, t in enumerate(range(start, stop)):
        rng = tape.rng("mixing", t)
        ma[row] = rng.integers(0, 2, size=spec.n_left, dtype=np.uint8)
        mb[row] = rng.integers(0, 2, size=spec.n_right, dtype=np.uint8)
    return _scan_masks(spec, ma, mb)


def _merge(parts: list[dict]) -> dict:
    best = max(parts, key=lambda p: p["max_ratio"])
    return {
        "pairs": sum(p["pairs"] for p in parts),
        "violations": sum(p["violations"] for p in parts),
        "max_ratio": best["max_ratio"],
        "worst": best["worst"],
        "qualifying": sum(p["qualifying"] for p in parts),
        "cor_bad": sum(p["cor_bad"] for p in parts),
    }


EXHAUSTIVE_LIMIT = 8


def mixing_scan(spec: BipartiteGraphSpec, trials: int, tape: RandomTape, workers: int = 1,
                exhaustive: bool | None = None) -> MixingScanReport:
    """Worst mixing deviation over subset pairs, plus the constant-2 corollary.

    Graphs with both sides of at most ``EXHAUSTIVE_LIMIT`` vertices are scanned
    over all subset pairs; otherwise ``trials`` uniformly random pairs are
    drawn, pair ``t`` from the tape stream labelled ``("mixing", t)``.
    """
    if exhaustive is None:
        exhaustive = spec.n_left <= EXHAUSTIVE_LIMIT and spec.n_right <= EXHAUSTIVE_LIMIT
    parts: list[dict] = []
    if exhaustive:
        sl, sr = _all_subsets(spec.n_left), _all_subsets(spec.n_right)
        for row in sl:
            parts.append(_scan_masks(spec, np.broadcast_to(row, (len(sr), spec.n_left)), sr))
    else:
        bounds = [(s, min(s + 250, trials)) for s in range(0, trials, 250)]
        if workers > 1:
            with ProcessPoolExecutor(workers) as pool:
                parts = list(pool.map(_random_chunk, [spec] * len(bounds), [tape] * len(bounds),
                                      [s for s, _ in bounds], [e for _, e in bounds]))
        else:
            parts = [_random_chunk(spec, tape, s, e) for s, e in bounds]
    m = _merge(parts)
    return MixingScanReport(spec, m["pairs"], exhaustive, m["violations"], m["max_ratio"], m["worst"],
                            m["qualifying"], m["cor_bad"])
