"""Exact Shannon entropy over finitely supported joint distributions.

Provides the triple profile with its region identities, the two inequality
checkers used by the key-agreement lower-bound arguments, closed-form
profiles of random orthogonal-direction triples, and the key-size audit.

Distributions are columnar: one integer code array per variable plus a weight
per support point.  Weights are either exact integer counts over a common
denominator (``exact``) or float probabilities.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import reduce
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .projspace import count_directions

TOL = 1e-9
EXACT_SUPPORT_LIMIT = 100_000
_INT_LIMIT = 2**53

Group = str | Sequence[str]


class ProfileIdentityError(AssertionError):
    """A region identity failed; points at a bug in the entropy engine."""


class InequalityViolation(AssertionError):
    def __init__(self, report):
        super().__init__(f"inequality violated by {report.excess:.3g} bits: {report}")
        self.report = report


def entropy_from_counts(counts) -> float:
    """Entropy in bits of a table of nonnegative weights (normalised here)."""
    c = np.asarray(counts, dtype=np.float64).ravel()
    c = c[c > 0]
    total = c.sum()
    if total <= 0:
        raise ValueError("empty distribution")
    return float(math.log2(total) - (c * np.log2(c)).sum() / total)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    variables: tuple[str, ...]
    codes: Mapping[str, np.ndarray]
    weights: np.ndarray
    labels: Mapping[str, tuple] | None = None

    def __post_init__(self) -> None:
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variable names")
        n = len(self.weights)
        for v in self.variables:
            if len(self.codes[v]) != n:
                raise ValueError(f"column {v!r} has the wrong length")
        if np.any(self.weights < 0):
            raise ValueError("negative probability")
        if not self.exact and abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {float(self.weights.sum())!r}")
        if self.exact and self.total >= _INT_LIMIT:
            raise ValueError("integer weights too large for exact accumulation")

    @property
    def exact(self) -> bool:
        return np.issubdtype(self.weights.dtype, np.integer)

    @property
    def total(self):
        return int(self.weights.sum()) if self.exact else 1.0

    def __len__(self) -> int:
        return len(self.weights)

    # -- construction ------------------------------------------------------

    @classmethod
    def from_counts(cls, columns: Mapping[str, np.ndarray], counts=None) -> JointDistribution:
        """Columnar constructor; ``counts`` default to 1 per row (uniform)."""
        names = tuple(columns)
        codes = {k: np.asarray(v, dtype=np.int64) for k, v in columns.items()}
        n = len(codes[names[0]])
        w = np.ones(n, dtype=np.int64) if counts is None else np.asarray(counts)
        if np.issubdtype(w.dtype, np.floating):
            w = w / w.sum()
        dist = cls(names, codes, w)
        dist._check_distinct()
        return dist

    @classmethod
    def from_pmf(cls, variables: Sequence[str], entries: Iterable[tuple[Sequence, object]]) -> JointDistribution:
        """Build from ``(value tuple, probability)`` entries.

        Fractions and ints stay exact (common denominator) for supports up to
        ``EXACT_SUPPORT_LIMIT``; anything else is stored as float.
        """
        variables = tuple(variables)
        entries = list(entries)
        values = [tuple(v) for v, _ in entries]
        probs = [p for _, p in entries]
        labels, codes = {}, {}
        for j, name in enumerate(variables):
            col = [v[j] for v in values]
            uniq = tuple(sorted(set(col), key=repr))
            index = {u: i for i, u in enumerate(uniq)}
            labels[name] = uniq
            codes[name] = np.array([index[c] for c in col], dtype=np.int64)
        exact = len(entries) <= EXACT_SUPPORT_LIMIT and all(isinstance(p, (int, Fraction)) for p in probs)
        if exact:
            fr = [Fraction(p) for p in probs]
            if sum(fr) != 1:
                raise ValueError(f"probabilities sum to {sum(fr)}")
            den = reduce(math.lcm, (f.denominator for f in fr), 1)
            w = [int(f * den) for f in fr]
            if den < _INT_LIMIT:
                weights = np.array(w, dtype=np.int64)
            else:
                weights = np.array([float(f) for f in fr])
        else:
            weights = np.array([float(p) for p in probs])
        dist = cls(variables, codes, weights, labels)
        dist._check_distinct()
        return dist

    def _check_distinct(self) -> None:
        if len(self) and len(self._group_ids(self.variables)[1]) != len(self):
            raise ValueError("support tuples are not distinct")

    # -- marginals ---------------------------------------------------------

    def _resolve(self, group: Group) -> tuple[str, ...]:
        names = (group,) if isinstance(group, str) else tuple(group)
        for v in names:
            if v not in self.codes:
                raise KeyError(f"unknown variable {v!r}")
        return names

    def _group_ids(self, names: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        if not names:
            return np.zeros(len(self), dtype=np.int64), np.zeros(1, dtype=np.int64)
        stacked = np.stack([self.codes[v] for v in sorted(set(names))], axis=1)
        uniq, inverse = np.unique(stacked, axis=0, return_inverse=True)
        return inverse.ravel(), uniq

    def marginal_weights(self, group: Group) -> np.ndarray:
        names = self._resolve(group)
        ids, uniq = self._group_ids(names)
        return np.bincount(ids, weights=self.weights.astype(np.float64), minlength=len(uniq))

    def probability(self, assignment: Mapping[str, object]) -> float:
        mask = np.ones(len(self), dtype=bool)
        for name, value in assignment.items():
            code = self.labels[name].index(value) if self.labels else value
            mask &= self.codes[name] == code
        return float(self.weights[mask].sum()) / float(self.total)

    # -- JSON lines --------------------------------------------------------

    def to_jsonl(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            fh.write(json.dumps({"variables": list(self.variables)}) + "\n")
            total = self.total
            for i in range(len(self)):
                vals = [
                    str(self.labels[v][self.codes[v][i]]) if self.labels else str(int(self.codes[v][i]))
                    for v in self.variables
                ]
                w = self.weights[i]
                p = str(Fraction(int(w), total)) if self.exact else repr(float(w))
                fh.write(json.dumps({"values": vals, "p": p}) + "\n")

    @classmethod
    def from_jsonl(cls, path: str | Path, variables: Sequence[str] | None = None) -> JointDistribution:
        entries = []
        with open(path) as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                if "variables" in rec:
                    variables = rec["variables"]
                    continue
                p = rec["p"]
                prob = Fraction(p) if isinstance(p, str) and "." not in p and "e" not in p else float(p)
                entries.append((tuple(rec["values"]), prob))
        if variables is None:
            raise ValueError("variable names missing: no header line and none given")
        return cls.from_pmf(variables, entries)


def _names(dist: JointDistribution, *groups: Group) -> list[tuple[str, ...]]:
    out = [dist._resolve(g) for g in groups]
    seen: set[str] = set()
    for g in out:
        if seen & set(g):
            raise ValueError(f"variable groups overlap: {sorted(seen & set(g))}")
        seen |= set(g)
    return out


def entropy(dist: JointDistribution, variables: Group) -> float:
    names = dist._resolve(variables)
    if not names:
        raise ValueError("entropy of an empty variable set")
    return entropy_from_counts(dist.marginal_weights(names))


def _h(dist: JointDistribution, *groups: tuple[str, ...]) -> float:
    names = tuple(v for g in groups for v in g)
    return entropy(dist, names) if names else 0.0


def conditional_entropy(dist: JointDistribution, target: Group, given: Group = ()) -> float:
    t, g = _names(dist, target, given)
    return _h(dist, t, g) - _h(dist, g)


def mutual_info(dist: JointDistribution, x: Group, y: Group, given: Group = ()) -> float:
    """I(X:Y|Z) = H(XZ) + H(YZ) - H(XYZ) - H(Z)."""
    gx, gy, gz = _names(dist, x, y, given)
    return _h(dist, gx, gz) + _h(dist, gy, gz) - _h(dist, gx, gy, gz) - _h(dist, gz)


def triple_info(dist: JointDistribution, x: Group, y: Group, z: Group) -> float:
    gx, gy, gz = _names(dist, x, y, z)
    return (
        _h(dist, gx) + _h(dist, gy) + _h(dist, gz)
        - _h(dist, gx, gy) - _h(dist, gx, gz) - _h(dist, gy, gz)
        + _h(dist, gx, gy, gz)
    )


@dataclass(frozen=True)
class ProfileReport:
    """The seven joint entropies of a triple, in bits."""

    h_x: float
    h_y: float
    h_z: float
    h_xy: float
    h_xz: float
    h_yz: float
    h_xyz: float

    @property
    def h_x_given_yz(self) -> float:
        return self.h_xyz - self.h_yz

    @property
    def h_y_given_xz(self) -> float:
        return self.h_xyz - self.h_xz

    @property
    def h_z_given_xy(self) -> float:
        return self.h_xyz - self.h_xy

    @property
    def i_xy(self) -> float:
        return self.h_x + self.h_y - self.h_xy

    @property
    def i_xz(self) -> float:
        return self.h_x + self.h_z - self.h_xz

    @property
    def i_yz(self) -> float:
        return self.h_y + self.h_z - self.h_yz

    @property
    def i_xy_given_z(self) -> float:
        return self.h_xz + self.h_yz - self.h_xyz - self.h_z

    @property
    def i_xz_given_y(self) -> float:
        return self.h_xy + self.h_yz - self.h_xyz - self.h_y

    @property
    def i_yz_given_x(self) -> float:
        return self.h_xy + self.h_xz - self.h_xyz - self.h_x

    @property
    def i_xyz(self) -> float:
        return self.h_x + self.h_y + self.h_z - self.h_xy - self.h_xz - self.h_yz + self.h_xyz

    @property
    def i_x_yz(self) -> float:
        return self.h_x + self.h_yz - self.h_xyz

    @property
    def i_y_xz(self) -> float:
        return self.h_y + self.h_xz - self.h_xyz

    @property
    def i_z_xy(self) -> float:
        return self.h_z + self.h_xy - self.h_xyz

    def identity_residuals(self) -> dict[str, float]:
        """Region-diagram identities (both sides built from different terms)."""
        cxy, cxz, cyz = self.i_xy_given_z, self.i_xz_given_y, self.i_yz_given_x
        t = self.i_xyz
        return {
            "H(x) = H(x|yz)+I(x:y|z)+I(x:z|y)+I(x:y:z)": self.h_x - (self.h_x_given_yz + cxy + cxz + t),
            "H(y) = H(y|xz)+I(x:y|z)+I(y:z|x)+I(x:y:z)": self.h_y - (self.h_y_given_xz + cxy + cyz + t),
            "H(z) = H(z|xy)+I(x:z|y)+I(y:z|x)+I(x:y:z)": self.h_z - (self.h_z_given_xy + cxz + cyz + t),
            "H(xy) = H(x|yz)+H(y|xz)+I(x:y|z)+I(x:z|y)+I(y:z|x)+I(x:y:z)":
                self.h_xy - (self.h_x_given_yz + self.h_y_given_xz + cxy + cxz + cyz + t),
            "H(x|y) = H(x|yz)+I(x:z|y)": (self.h_xy - self.h_y) - (self.h_x_given_yz + cxz),
            "I(x:y) = I(x:y|z)+I(x:y:z)": self.i_xy - (cxy + t),
            "I(x:z) = I(x:z|y)+I(x:y:z)": self.i_xz - (cxz + t),
            "I(y:z) = I(y:z|x)+I(x:y:z)": self.i_yz - (cyz + t),
            "I(x:yz) = I(x:y|z)+I(x:z|y)+I(x:y:z)": self.i_x_yz - (cxy + cxz + t),
            "I(y:xz) = I(x:y|z)+I(y:z|x)+I(x:y:z)": self.i_y_xz - (cxy + cyz + t),
            "I(z:xy) = I(x:z|y)+I(y:z|x)+I(x:y:z)": self.i_z_xy - (cxz + cyz + t),
            "H(xyz) = sum of the seven regions":
                self.h_xyz - (self.h_x_given_yz + self.h_y_given_xz + self.h_z_given_xy + cxy + cxz + cyz + t),
        }

    def check(self, tol: float = TOL) -> None:
        bad = {k: v for k, v in self.identity_residuals().items() if not abs(v) <= tol}  # NaN fails too
        if bad:
            raise ProfileIdentityError(f"identity residuals above {tol}: {bad}")

    def to_dict(self) -> dict:
        out = asdict(self)
        for name in ("h_x_given_yz", "h_y_given_xz", "h_z_given_xy", "i_xy", "i_xz", "i_yz",
                     "i_xy_given_z", "i_xz_given_y", "i_yz_given_x", "i_xyz", "i_x_yz", "i_y_xz", "i_z_xy"):
            out[name] = getattr(self, name)
        return out


def profile(dist: JointDistribution, x: Group, y: Group, z: Group) -> ProfileReport:
    gx, gy, gz = _names(dist, x, y, z)
    report = ProfileReport(
        _h(dist, gx), _h(dist, gy), _h(dist, gz),
        _h(dist, gx, gy), _h(dist, gx, gz), _h(dist, gy, gz), _h(dist, gx, gy, gz),
    )
    # cross-check the derived quantities against direct engine calls
    direct = {
        "i_xy_given_z": mutual_info(dist, gx, gy, gz),
        "i_xyz": triple_info(dist, gx, gy, gz),
        "i_x_yz": mutual_info(dist, gx, gy + gz),
    }
    for name, value in direct.items():
        if abs(getattr(report, name) - value) > TOL:
            raise ProfileIdentityError(f"{name}: {getattr(report, name)} vs {value}")
    report.check()
    return report


@dataclass(frozen=True)
class GeometricProfile:
    q: int
    k: int
    report: ProfileReport

    @property
    def n(self) -> int:
        return self.q.bit_length() - 1

    def deviations(self) -> dict[str, float]:
        """Distance of each closed-form quantity from its leading term."""
        n, k, r = self.n, self.k, self.report
        return {
            "H(x) - kn": r.h_x - k * n,
            "I(x:y) - n": r.i_xy - n,
            "I(x:yz) - 2n": r.i_x_yz - 2 * n,
            "I(x:y:z)": r.i_xyz,
            "H(xyz) - (3k-3)n": r.h_xyz - (3 * k - 3) * n,
        }

    def bounds(self) -> dict[str, tuple[float, float, bool]]:
        windows = {"H(xyz) - (3k-3)n": 2.0}
        return {
            name: (value, windows.get(name, 1.0), abs(value) <= windows.get(name, 1.0))
            for name, value in self.deviations().items()
        }

    @property
    def within_bounds(self) -> bool:
        return all(ok for _, _, ok in self.bounds().values())

    def to_dict(self) -> dict:
        return {
            "q": self.q, "k": self.k, "n": self.n, "profile": self.report.to_dict(),
            "bounds": {k: {"value": v, "window": w, "ok": ok} for k, (v, w, ok) in self.bounds().items()},
        }


def geometric_profile(q: int, k: int) -> GeometricProfile:
    """Closed-form profile of a uniformly random orthogonal triple in F_q^(k+1).

    Uses the direction counts of the ambient space and of the subspaces of
    codimension one and two.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if q < 2 or q & (q - 1):
        raise ValueError("q must be a power of 2")
    h1 = math.log2(count_directions(q, k + 1))
    h2 = math.log2(count_directions(q, k))
    h3 = math.log2(count_directions(q, k - 1))
    report = ProfileReport(h1, h1, h1, h1 + h2, h1 + h2, h1 + h2, h1 + h2 + h3)
    report.check()
    return GeometricProfile(q, k, report)


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def excess(self) -> float:
        return self.lhs - self.rhs

    @property
    def holds(self) -> bool:
        return self.excess <= TOL

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack, "holds": self.holds}


def _finish(report: InequalityReport, strict: bool) -> InequalityReport:
    if strict and not report.holds:
        raise InequalityViolation(report)
    return report


def check_lemma_b1(dist: JointDistribution, x: Group, y: Group, s: Group, strict: bool = True) -> InequalityReport:
    """I(x:y|s) <= I(x:y) + I(s:xy)."""
    gx, gy, gs = _names(dist, x, y, s)
    lhs = mutual_info(dist, gx, gy, gs)
    rhs = mutual_info(dist, gx, gy) + mutual_info(dist, gs, gx + gy)
    return _finish(InequalityReport("I(x:y|s) <= I(x:y) + I(s:xy)", lhs, rhs), strict)


def check_lemma_b2(dist: JointDistribution, x: Group, xp: Group, y: Group, yp: Group, z: Group,
                   strict: bool = True) -> tuple[InequalityReport, InequalityReport]:
    """(i) I(x':y|z) <= I(x:y|z) + H(x'|x); (ii) adds H(y'|y) for I(x':y'|z)."""
    gx, gxp, gy, gyp, gz = _names(dist, x, xp, y, yp, z)
    base = mutual_info(dist, gx, gy, gz)
    hx = conditional_entropy(dist, gxp, gx)
    hy = conditional_entropy(dist, gyp, gy)
    part_i = InequalityReport("I(x':y|z) <= I(x:y|z) + H(x'|x)", mutual_info(dist, gxp, gy, gz), base + hx)
    part_ii = InequalityReport(
        "I(x':y'|z) <= I(x:y|z) + H(x'|x) + H(y'|y)", mutual_info(dist, gxp, gyp, gz), base + hx + hy
    )
    _finish(part_i, strict)
    _finish(part_ii, strict)
    return part_i, part_ii


@dataclass(frozen=True)
class KeyBoundReport:
    h_w: float
    i_w_t: float
    i_xy_given_mc: float
    margin: float = 1.0

    @property
    def holds(self) -> bool:
        return self.h_w - self.i_w_t <= self.i_xy_given_mc + self.margin + TOL

    def to_dict(self) -> dict:
        return {**asdict(self), "holds": self.holds}


def keybound_audit(dist: JointDistribution, x: Group = "x", y: Group = "y", mc: Group = "mC",
                   t: Group = "t", w: Group = "w") -> KeyBoundReport:
    """Key entropy net of leakage against I(x:y | Charlie's messages)."""
    gx, gy, gmc = _names(dist, x, y, mc)
    gt, gw = _names(dist, t, w)
    return KeyBoundReport(entropy(dist, gw), mutual_info(dist, gw, gt), mutual_info(dist, gx, gy, gmc))


def random_distribution(rng: np.random.Generator, n_vars: int, max_alphabet: int,
                        names: Sequence[str] | None = None, max_weight: int = 12) -> JointDistribution:
    """A random exact distribution: random alphabets, sparse integer weights."""
    names = tuple(names) if names is not None else tuple(f"v{i}" for i in range(n_vars))
    sizes = rng.integers(2, max_alphabet + 1, size=n_vars)
    grid = np.stack(np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij"), axis=-1).reshape(-1, n_vars)
    weights = rng.integers(0, max_weight + 1, size=len(grid))
    # sparsify so that functional dependences and zeros show up
    weights[rng.random(len(grid)) < rng.uniform(0.0, 0.8)] = 0
    if weights.sum() == 0:
        weights[rng.integers(len(grid))] = 1
    keep = weights > 0
    return JointDistribution.from_counts({nm: grid[keep, i] for i, nm in enumerate(names)}, weights[keep].astype(np.int64))
