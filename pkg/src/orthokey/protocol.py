"""Three-party key agreement on pairwise orthogonal directions.

Alice, Bob and Charlie hold x, y, z in F_q^(k+1) (q = 2^n), pairwise
orthogonal.  Two protocols share one public tape:

* ``multiround``: Alice and Bob broadcast hashes of x and y; Charlie recovers
  (x, y) and answers with a hash of the pair; Alice and Bob recover the
  partner's input.  The key is a further hash of (x, y).
* ``omniscience``: each party broadcasts one hash of its own input, everyone
  recovers the whole triple, and the key is a hash of (x, y, z).

Decoding is exhaustive over the candidate sets fixed by orthogonality; zero or
several matching candidates is a failure.  ``exact_audit`` enumerates every
triple for a fixed tape and measures what the transcript says about the key.
"""

from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .field import FieldSpec, make_field
from .hashing import BinaryMatrix, CoordinateHasher, identity_matrix, int_to_bits, sample_matrix
from .infolab import TOL
from .projspace import (
    CapacityError,
    Direction,
    count_directions,
    count_triples,
    direction_indices,
    is_orthogonal,
    iter_triples,
    orthogonal_array,
    orthogonal_pairs_to,
    sample_orthogonal_triple,
)
from .tape import RandomTape

AUDIT_CAPACITY = 20_000_000
KEYBOUND_MARGIN = 1.0
PARTIES = ("alice", "bob", "charlie")


class ProtocolKind(str, enum.Enum):
    MULTIROUND = "multiround"
    OMNISCIENCE = "omniscience"


class KeyVanishesError(ValueError):
    """The key budget is exhausted by communication and slack."""


class NonOrthogonalInputError(ValueError):
    pass


@dataclass(frozen=True)
class ProtocolParams:
    kind: ProtocolKind
    n: int
    k: int
    ell_a: int
    ell_b: int
    ell_c: int
    ell_w: int
    s: int | None = None
    s_k: int | None = None
    seed: int = 0
    identity_roles: tuple[str, ...] = ()  # hash roles ("a", "b", "c", "w") using identity-prefix matrices

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ProtocolKind(self.kind))
        if self.k < 2 or not 1 <= self.n <= 32:
            raise ValueError("need k >= 2 and 1 <= n <= 32")
        if min(self.ell_a, self.ell_b, self.ell_c) < 0 or self.ell_w < 1:
            raise ValueError("message lengths must be >= 0 and the key length >= 1")
        bad = set(self.identity_roles) - {"a", "b", "c", "w"}
        if bad:
            raise ValueError(f"unknown hash roles {sorted(bad)}")

    @property
    def q(self) -> int:
        return 2**self.n

    @property
    def dim(self) -> int:
        return self.k + 1

    @property
    def field(self) -> FieldSpec:
        return make_field(self.n)

    @property
    def width(self) -> int:
        """Encoding width of one direction in bits."""
        return self.dim * self.n

    @property
    def total_bits(self) -> int:
        return self.ell_a + self.ell_b + self.ell_c

    @property
    def key_source_count(self) -> int:
        """Number of equally likely values the key hashes."""
        q, d = self.q, self.dim
        if self.kind is ProtocolKind.MULTIROUND:
            return count_directions(q, d) * count_directions(q, d - 1)
        return count_triples(q, d)

    @property
    def asymptotic_comm(self) -> float:
        if self.kind is ProtocolKind.MULTIROUND:
            return (2 * self.k - 2.5) * self.n
        return (3 * self.k - 4.5) * self.n

    @property
    def asymptotic_key(self) -> float:
        return 1.5 * self.n  # (3k-3)n of shared entropy minus the leading communication, for both kinds

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value, "n": self.n, "k": self.k, "q": self.q, "s": self.s, "s_k": self.s_k,
            "seed": self.seed, "ell_a": self.ell_a, "ell_b": self.ell_b, "ell_c": self.ell_c,
            "ell_w": self.ell_w, "total_bits": self.total_bits, "identity_roles": list(self.identity_roles),
            "key_source_count": self.key_source_count, "asymptotic_comm": self.asymptotic_comm,
            "asymptotic_key": self.asymptotic_key,
        }


def _floor_log2(v: int) -> int:
    return v.bit_length() - 1


def default_slack(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))


def make_params(kind: ProtocolKind | str, n: int, k: int, s: int | None = None, s_k: int | None = None,
                seed: int = 0) -> ProtocolParams:
    """Message and key lengths from the exact counts; slack defaults to ceil(log2 n)."""
    kind = ProtocolKind(kind)
    if k < 2 or n < 2:
        raise ValueError("need k >= 2 and n >= 2")
    s = default_slack(n) if s is None else s
    s_k = s if s_k is None else s_k
    if s < 0 or s_k < 0:
        raise ValueError("slack must be nonnegative")
    q, d = 2**n, k + 1
    lead = ((2 * k - 3) * n + 1) // 2  # ceil((k - 1.5) n)
    if kind is ProtocolKind.MULTIROUND:
        ell_a = ell_b = lead + s
        ell_c = (n + 1) // 2 + s
        source = count_directions(q, d) * count_directions(q, d - 1)
    else:
        ell_a = ell_b = ell_c = lead + s
        source = count_triples(q, d)
    budget = _floor_log2(source)
    total = ell_a + ell_b + ell_c
    ell_w = budget - total - s_k
    if ell_w < 1:
        raise KeyVanishesError(
            f"key vanishes at these parameters: floor(log2 {source}) - ({ell_a}+{ell_b}+{ell_c}) - {s_k}"
            f" = {budget} - {total} - {s_k} = {ell_w}"
        )
    return ProtocolParams(kind, n, k, ell_a, ell_b, ell_c, ell_w, s, s_k, seed)


# -- hashing roles -------------------------------------------------------------

_ROLE_LABELS = {
    ProtocolKind.MULTIROUND: {"a": "round1/alice", "b": "round1/bob", "c": "round2/charlie", "w": "key"},
    ProtocolKind.OMNISCIENCE: {"a": "omni/alice", "b": "omni/bob", "c": "omni/charlie", "w": "key"},
}


class _ZeroHasher:
    def __call__(self, coords: np.ndarray) -> np.ndarray:
        return np.zeros(len(coords), dtype=np.int64)


class Hashers:
    """The four hash functions of one run, drawn from a public tape."""

    def __init__(self, params: ProtocolParams, tape: RandomTape):
        p = params
        one, two, three = p.width, 2 * p.width, 3 * p.width
        if p.kind is ProtocolKind.MULTIROUND:
            shapes = {"a": (p.ell_a, one), "b": (p.ell_b, one), "c": (p.ell_c, two), "w": (p.ell_w, two)}
        else:
            shapes = {"a": (p.ell_a, one), "b": (p.ell_b, one), "c": (p.ell_c, one), "w": (p.ell_w, three)}
        self.lengths = {r: rows for r, (rows, _) in shapes.items()}
        self.matrices: dict[str, BinaryMatrix | None] = {}
        self._fns = {}
        for role, (rows, cols) in shapes.items():
            if rows == 0:
                self.matrices[role] = None
                self._fns[role] = _ZeroHasher()
                continue
            if role in p.identity_roles:
                m = identity_matrix(rows, cols)
            else:
                m = sample_matrix(tape, _ROLE_LABELS[p.kind][role], rows, cols)
            self.matrices[role] = m
            self._fns[role] = CoordinateHasher(m, p.n)

    def __call__(self, role: str, *parts: np.ndarray) -> np.ndarray:
        coords = np.concatenate([np.atleast_2d(np.asarray(a, dtype=np.int64)) for a in parts], axis=1)
        return self._fns[role](coords)


# -- runs ----------------------------------------------------------------------

@dataclass(frozen=True)
class Transcript:
    m_a: np.ndarray
    m_b: np.ndarray
    m_c: np.ndarray

    @property
    def total_bits(self) -> int:
        return len(self.m_a) + len(self.m_b) + len(self.m_c)

    def to_hex(self) -> dict:
        return {name: np.packbits(m).tobytes().hex() for name, m in (("m_a", self.m_a), ("m_b", self.m_b), ("m_c", self.m_c))}

    def to_dict(self) -> dict:
        return {
            "m_a": "".join(map(str, self.m_a)), "m_b": "".join(map(str, self.m_b)),
            "m_c": "".join(map(str, self.m_c)), "total_bits": self.total_bits,
        }


@dataclass(frozen=True)
class Outcome:
    transcript: Transcript
    status: dict[str, str]  # "ok", "no_match", "ambiguous" or "aborted"
    decoded: dict[str, tuple[Direction, ...] | None]
    keys: dict[str, np.ndarray | None]
    candidates: dict[str, int]
    truth: tuple[Direction, ...]

    @property
    def success(self) -> dict[str, bool]:
        return {p: s == "ok" for p, s in self.status.items()}

    @property
    def all_success(self) -> bool:
        return all(self.success.values())

    @property
    def sound(self) -> bool:
        """Every reported success decoded the true inputs."""
        return all(self.decoded[p] == self.truth for p in PARTIES if self.status[p] == "ok")

    @property
    def agreed(self) -> bool:
        if not self.all_success:
            return False
        first = self.keys[PARTIES[0]]
        return all(np.array_equal(first, self.keys[p]) for p in PARTIES[1:])

    def to_dict(self) -> dict:
        return {
            "transcript": self.transcript.to_dict(), "status": dict(self.status),
            "decoded": {p: None if d is None else [list(v.coords) for v in d] for p, d in self.decoded.items()},
            "keys": {p: None if k is None else "".join(map(str, k)) for p, k in self.keys.items()},
            "candidates": dict(self.candidates), "agreed": self.agreed, "sound": self.sound,
        }


def _check_inputs(params: ProtocolParams, x: Direction, y: Direction, z: Direction) -> None:
    f = params.field
    for d in (x, y, z):
        if d.field != f or d.dim != params.dim:
            raise ValueError(f"input {d} does not live in F_{params.q}^{params.dim}")
    for a, b in ((x, y), (x, z), (y, z)):
        if not is_orthogonal(a, b):
            raise NonOrthogonalInputError(f"{a} and {b} are not orthogonal")


def _pick(match: np.ndarray) -> tuple[str, int | None]:
    hits = np.flatnonzero(match)
    if len(hits) == 1:
        return "ok", int(hits[0])
    return ("no_match" if len(hits) == 0 else "ambiguous"), None


def _dir(field: FieldSpec, row) -> Direction:
    return Direction(tuple(int(c) for c in row), field)


def _as_row(d: Direction) -> np.ndarray:
    return np.array(d.coords, dtype=np.int64)


def run_multiround(params: ProtocolParams, x: Direction, y: Direction, z: Direction,
                   tape: RandomTape) -> Outcome:
    if params.kind is not ProtocolKind.MULTIROUND:
        raise ValueError("params are not for the multi-round protocol")
    _check_inputs(params, x, y, z)
    f, h = params.field, Hashers(params, tape)
    xa, ya, za = _as_row(x), _as_row(y), _as_row(z)
    m_a, m_b = int(h("a", xa)[0]), int(h("b", ya)[0])
    status, decoded, keys, cands = {}, {}, {}, {}

    # round 1: Charlie searches pairs orthogonal to z and to each other
    us, vs = orthogonal_pairs_to(f, za)
    cands["charlie"] = len(us)
    status["charlie"], i = _pick((h("a", us) == m_a) & (h("b", vs) == m_b))
    if i is None:
        decoded["charlie"], m_c = None, 0
    else:
        decoded["charlie"] = (_dir(f, us[i]), _dir(f, vs[i]), z)
        m_c = int(h("c", us[i], vs[i])[0])

    # round 2: Alice looks for y, Bob for x
    for party, own, msg in (("alice", xa, m_b), ("bob", ya, m_a)):
        others = orthogonal_array(f, params.dim, [own], sort=False)
        cands[party] = len(others)
        if decoded["charlie"] is None:
            status[party], decoded[party] = "aborted", None
            continue
        own_rep = np.broadcast_to(own, others.shape)
        if party == "alice":
            match = (h("b", others) == msg) & (h("c", own_rep, others) == m_c)
        else:
            match = (h("a", others) == msg) & (h("c", others, own_rep) == m_c)
        status[party], j = _pick(match)
        if j is None:
            decoded[party] = None
        elif party == "alice":
            decoded[party] = (x, _dir(f, others[j]), z)
        else:
            decoded[party] = (_dir(f, others[j]), y, z)

    for p in PARTIES:
        keys[p] = None
        if status[p] == "ok":
            dx, dy, _ = decoded[p]
            keys[p] = int_to_bits(int(h("w", _as_row(dx), _as_row(dy))[0]), params.ell_w)
    transcript = Transcript(int_to_bits(m_a, params.ell_a), int_to_bits(m_b, params.ell_b),
                            int_to_bits(m_c, params.ell_c))
    return Outcome(transcript, {p: status[p] for p in PARTIES}, {p: decoded[p] for p in PARTIES}, keys,
                   {p: cands[p] for p in PARTIES}, (x, y, z))


def run_omniscience(params: ProtocolParams, x: Direction, y: Direction, z: Direction,
                    tape: RandomTape) -> Outcome:
    if params.kind is not ProtocolKind.OMNISCIENCE:
        raise ValueError("params are not for the omniscience protocol")
    _check_inputs(params, x, y, z)
    f, h = params.field, Hashers(params, tape)
    rows = {"a": _as_row(x), "b": _as_row(y), "c": _as_row(z)}
    msgs = {r: int(h(r, v)[0]) for r, v in rows.items()}
    status, decoded, keys, cands = {}, {}, {}, {}
    # each party knows one slot and searches the other two
    plan = {"alice": ("a", "b", "c"), "bob": ("b", "a", "c"), "charlie": ("c", "a", "b")}
    slot = {"a": 0, "b": 1, "c": 2}
    for party, (own, r1, r2) in plan.items():
        us, vs = orthogonal_pairs_to(f, rows[own])
        cands[party] = len(us)
        status[party], i = _pick((h(r1, us) == msgs[r1]) & (h(r2, vs) == msgs[r2]))
        if i is None:
            decoded[party] = None
            continue
        triple = [None, None, None]
        triple[slot[own]] = rows[own]
        triple[slot[r1]], triple[slot[r2]] = us[i], vs[i]
        decoded[party] = tuple(_dir(f, t) for t in triple)
    for p in PARTIES:
        keys[p] = None
        if status[p] == "ok":
            keys[p] = int_to_bits(int(h("w", *[_as_row(d) for d in decoded[p]])[0]), params.ell_w)
    transcript = Transcript(*(int_to_bits(msgs[r], length) for r, length in
                              (("a", params.ell_a), ("b", params.ell_b), ("c", params.ell_c))))
    return Outcome(transcript, {p: status[p] for p in PARTIES}, {p: decoded[p] for p in PARTIES}, keys,
                   {p: cands[p] for p in PARTIES}, (x, y, z))


def run_protocol(params: ProtocolParams, x: Direction, y: Direction, z: Direction, tape: RandomTape) -> Outcome:
    if params.kind is ProtocolKind.MULTIROUND:
        return run_multiround(params, x, y, z, tape)
    return run_omniscience(params, x, y, z, tape)


# -- batches -------------------------------------------------------------------

def trial_tape(params: ProtocolParams, i: int) -> RandomTape:
    return RandomTape(params.seed).child("trial", i)


def run_trial(params: ProtocolParams, i: int) -> Outcome:
    tape = trial_tape(params, i)
    x, y, z = sample_orthogonal_triple(params.field, params.dim, tape.child("inputs"))
    return run_protocol(params, x, y, z, tape.child("public"))


def union_bound(params: ProtocolParams) -> float:
    """Expected number of false candidate matches per run, summed over parties."""
    q, d = params.q, params.dim
    pairs = count_directions(q, d - 1) * count_directions(q, d - 2)  # generic candidate-set size
    if params.kind is ProtocolKind.MULTIROUND:
        charlie = (pairs - 1) * 2.0 ** -(params.ell_a + params.ell_b)
        side = (count_directions(q, d - 1) - 1) * 2.0 ** -(params.ell_c + params.ell_b)
        side_b = (count_directions(q, d - 1) - 1) * 2.0 ** -(params.ell_c + params.ell_a)
        return charlie + side + side_b
    return (pairs - 1) * (2.0 ** -(params.ell_b + params.ell_c) + 2.0 ** -(params.ell_a + params.ell_c)
                          + 2.0 ** -(params.ell_a + params.ell_b))


@dataclass
class BatchReport:
    params: ProtocolParams
    trials: int
    successes: int = 0
    agreements: int = 0
    soundness_failures: int = 0
    agreement_failures: int = 0
    comm_bits: set = dc_field(default_factory=set)
    key_bits: set = dc_field(default_factory=set)
    party_status: dict = dc_field(default_factory=lambda: {p: {} for p in PARTIES})
    failed_trials: list = dc_field(default_factory=list)
    wall_time: float = 0.0

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    @property
    def mean_comm(self) -> float:
        return float(np.mean(sorted(self.comm_bits))) if self.comm_bits else 0.0

    def add(self, i: int, out: Outcome) -> None:
        ok = out.all_success
        self.successes += ok
        self.agreements += out.agreed
        if ok and not out.agreed:
            self.agreement_failures += 1
        if not out.sound:
            self.soundness_failures += 1
        self.comm_bits.add(out.transcript.total_bits)
        for p in PARTIES:
            st = self.party_status[p]
            st[out.status[p]] = st.get(out.status[p], 0) + 1
            if out.keys[p] is not None:
                self.key_bits.add(len(out.keys[p]))
        if not ok:
            self.failed_trials.append(i)

    def merge(self, other: BatchReport) -> None:
        self.successes += other.successes
        self.agreements += other.agreements
        self.soundness_failures += other.soundness_failures
        self.agreement_failures += other.agreement_failures
        self.comm_bits |= other.comm_bits
        self.key_bits |= other.key_bits
        for p in PARTIES:
            for k, v in other.party_status[p].items():
                self.party_status[p][k] = self.party_status[p].get(k, 0) + v
        self.failed_trials = sorted(self.failed_trials + other.failed_trials)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(), "trials": self.trials, "successes": self.successes,
            "success_rate": self.success_rate, "agreements": self.agreements,
            "soundness_failures": self.soundness_failures, "agreement_failures": self.agreement_failures,
            "comm_bits": sorted(self.comm_bits), "mean_comm": self.mean_comm, "key_bits": sorted(self.key_bits),
            "party_status": {p: dict(sorted(v.items())) for p, v in self.party_status.items()},
            "failed_trials": self.failed_trials, "union_bound": union_bound(self.params),
            "wall_time": self.wall_time,
        }


def _batch_range(params: ProtocolParams, start: int, stop: int) -> BatchReport:
    rep = BatchReport(params, stop - start)
    for i in range(start, stop):
        rep.add(i, run_trial(params, i))
    return rep


def batch(params: ProtocolParams, trials: int, workers: int = 1) -> BatchReport:
    """Run ``trials`` independent trials; trial i uses its own tape branch, so
    results do not depend on ``workers``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    t0 = time.perf_counter()
    report = BatchReport(params, trials)
    if workers <= 1:
        for i in range(trials):
            report.add(i, run_trial(params, i))
    else:
        bounds = np.linspace(0, trials, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = [ex.submit(_batch_range, params, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
            for fut in futures:
                report.merge(fut.result())
    report.wall_time = time.perf_counter() - t0
    return report


# -- exact audit ---------------------------------------------------------------

def _plogp_sum(counts: np.ndarray) -> float:
    c = counts[counts > 0].astype(np.float64)
    return float(np.sum(c * np.log2(c)))


def _entropy(counts: np.ndarray, total: int) -> float:
    return math.log2(total) - _plogp_sum(np.asarray(counts)) / total


def _unique_counts(keys: np.ndarray, weights: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    uniq, inv = np.unique(keys, return_inverse=True)
    return uniq, np.bincount(inv.ravel(), weights=weights, minlength=len(uniq)).astype(np.int64)


def audit_hashers(params: ProtocolParams, seed_index: int) -> Hashers:
    return Hashers(params, RandomTape(params.seed).child("audit", seed_index))


def transcript_and_key(params: ProtocolParams, h: Hashers, X: np.ndarray, Y: np.ndarray,
                       Z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised (t, m_C, w) for arrays of triples; t packs m_A | m_B | m_C."""
    m_a, m_b = h("a", X), h("b", Y)
    if params.kind is ProtocolKind.MULTIROUND:
        m_c, w = h("c", X, Y), h("w", X, Y)
    else:
        m_c, w = h("c", Z), h("w", X, Y, Z)
    t = (m_a << (params.ell_b + params.ell_c)) | (m_b << params.ell_c) | m_c
    return t, m_c, w


def _audit_part(params: ProtocolParams, seeds: Sequence[int], start: int, stop: int, chunk: int) -> dict:
    f, dim = params.field, params.dim
    nd = count_directions(params.q, dim)
    c_bits = params.ell_c
    hashers = [audit_hashers(params, s) for s in seeds]
    out = {
        "n": 0, "x": np.zeros(nd, np.int64), "y": np.zeros(nd, np.int64), "xy": [],
        "tw": [[] for _ in seeds], "mc": [np.zeros(2**c_bits, np.int64) for _ in seeds],
        "y_mc": [np.zeros(nd << c_bits, np.int64) for _ in seeds],
        "x_mc": [[] for _ in seeds], "xy_mc": [[] for _ in seeds],
    }
    for X, Y, Z in iter_triples(f, dim, chunk, start, stop):
        xi, yi = direction_indices(f, X), direction_indices(f, Y)
        out["n"] += len(X)
        out["x"] += np.bincount(xi, minlength=nd)
        out["y"] += np.bincount(yi, minlength=nd)
        xy_key = xi * nd + yi
        out["xy"].append(_plogp_sum(_unique_counts(xy_key)[1]))
        for j, h in enumerate(hashers):
            t, m_c, w = transcript_and_key(params, h, X, Y, Z)
            out["tw"][j].append(_unique_counts((t << params.ell_w) | w))
            out["mc"][j] += np.bincount(m_c, minlength=2**c_bits)
            out["y_mc"][j] += np.bincount((yi << c_bits) | m_c, minlength=nd << c_bits)
            out["x_mc"][j].append(_plogp_sum(_unique_counts((xi << c_bits) | m_c)[1]))
            out["xy_mc"][j].append(_plogp_sum(_unique_counts((xy_key << c_bits) | m_c)[1]))
    return out


@dataclass(frozen=True)
class SeedAudit:
    seed_index: int
    h_w: float
    h_t: float
    i_w_t: float
    sd: float
    i_xy_given_mc: float
    i_xy: float
    leakage_by_prefix: tuple[float, ...]  # I(first j key bits : t) for j = 0..ell_w

    @property
    def keybound_slack(self) -> float:
        return self.i_xy_given_mc + KEYBOUND_MARGIN - (self.h_w - self.i_w_t)

    @property
    def keybound_holds(self) -> bool:
        return self.keybound_slack >= -TOL

    @property
    def monotone(self) -> bool:
        L = self.leakage_by_prefix
        return all(L[j] <= L[j + 1] + TOL for j in range(len(L) - 1))

    def to_dict(self) -> dict:
        return {
            "seed_index": self.seed_index, "H(w)": self.h_w, "H(t)": self.h_t, "I(w:t)": self.i_w_t,
            "SD": self.sd, "I(x:y|mC)": self.i_xy_given_mc, "I(x:y)": self.i_xy,
            "keybound_slack": self.keybound_slack, "keybound_holds": self.keybound_holds,
            "leakage_by_prefix": list(self.leakage_by_prefix), "monotone": self.monotone,
        }


@dataclass(frozen=True)
class AuditReport:
    params: ProtocolParams
    triples: int
    seeds: tuple[SeedAudit, ...]
    wall_time: float

    @property
    def worst_i_w_t(self) -> float:
        return max(s.i_w_t for s in self.seeds)

    @property
    def worst_sd(self) -> float:
        return max(s.sd for s in self.seeds)

    @property
    def keybound_holds(self) -> bool:
        return all(s.keybound_holds for s in self.seeds)

    @property
    def monotone(self) -> bool:
        return all(s.monotone for s in self.seeds)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(), "triples": self.triples, "seeds": [s.to_dict() for s in self.seeds],
            "worst_I(w:t)": self.worst_i_w_t, "worst_SD": self.worst_sd, "keybound_holds": self.keybound_holds,
            "monotone": self.monotone, "wall_time": self.wall_time,
        }


def _tw_stats(params: ProtocolParams, keys: np.ndarray, counts: np.ndarray, total: int):
    lw = params.ell_w
    t = keys >> lw
    t_uniq, t_counts = _unique_counts(t, counts)
    h_t = _entropy(t_counts, total)
    leak = []
    for j in range(lw + 1):
        wj = (keys & ((1 << lw) - 1)) >> (lw - j)
        h_wj = _entropy(_unique_counts(wj, counts)[1], total)
        h_twj = _entropy(_unique_counts(keys >> (lw - j), counts)[1], total)
        leak.append(h_wj + h_t - h_twj)
    w = keys & ((1 << lw) - 1)
    h_w = _entropy(_unique_counts(w, counts)[1], total)
    # statistical distance from (uniform w) x (marginal t), unobserved cells included
    W = 2**lw
    pt = t_counts[np.searchsorted(t_uniq, t)] / total
    observed = np.sum(np.abs(counts / total - pt / W))
    n_obs = np.bincount(np.searchsorted(t_uniq, t), minlength=len(t_uniq))
    unobserved = np.sum((W - n_obs) * (t_counts / total) / W)
    return h_w, h_t, leak[-1], 0.5 * float(observed + unobserved), tuple(max(v, 0.0) for v in leak)


def exact_audit(params: ProtocolParams, seeds: int | Sequence[int] = 5, workers: int = 1,
                capacity: int = AUDIT_CAPACITY, chunk: int = 4096) -> AuditReport:
    """Enumerate every triple with uniform weight under fixed tapes and audit the key.

    Work is split into fixed x-chunks whose partial results are reduced in
    chunk order, so the report is identical for any ``workers``.
    """
    total_triples = count_triples(params.q, params.dim)
    if total_triples > capacity:
        raise CapacityError(f"{total_triples} triples exceed the audit capacity of {capacity}")
    if params.total_bits + params.ell_w > 62:
        raise CapacityError("transcript plus key do not fit in 62 bits")
    seed_list = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    t0 = time.perf_counter()
    nd = count_directions(params.q, params.dim)
    ranges = [(a, min(a + chunk, nd)) for a in range(0, nd, chunk)]
    if workers <= 1:
        parts = [_audit_part(params, seed_list, a, b, chunk) for a, b in ranges]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_audit_part, [params] * len(ranges), [seed_list] * len(ranges),
                                [a for a, _ in ranges], [b for _, b in ranges], [chunk] * len(ranges)))
    N = sum(p["n"] for p in parts)
    assert N == total_triples, (N, total_triples)
    h_x = _entropy(sum(p["x"] for p in parts), N)
    h_y = _entropy(sum(p["y"] for p in parts), N)
    h_xy = math.log2(N) - sum(v for p in parts for v in p["xy"]) / N
    reports = []
    for j, s in enumerate(seed_list):
        keys = np.concatenate([kc[0] for p in parts for kc in p["tw"][j]])
        counts = np.concatenate([kc[1] for p in parts for kc in p["tw"][j]])
        keys, counts = _unique_counts(keys, counts)
        h_w, h_t, i_wt, sd, leak = _tw_stats(params, keys, counts, N)
        h_mc = _entropy(sum(p["mc"][j] for p in parts), N)
        h_ymc = _entropy(sum(p["y_mc"][j] for p in parts), N)
        h_xmc = math.log2(N) - sum(v for p in parts for v in p["x_mc"][j]) / N
        h_xymc = math.log2(N) - sum(v for p in parts for v in p["xy_mc"][j]) / N
        reports.append(SeedAudit(
            seed_index=s, h_w=h_w, h_t=h_t, i_w_t=max(i_wt, 0.0), sd=sd,
            i_xy_given_mc=h_xmc + h_ymc - h_xymc - h_mc, i_xy=h_x + h_y - h_xy, leakage_by_prefix=leak,
        ))
    return AuditReport(params, N, tuple(reports), time.perf_counter() - t0)
