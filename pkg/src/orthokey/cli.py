"""Command-line experiment runner.

Every subcommand writes a JSON report (to ``--out`` or stdout) and an aligned
text summary (stdout when ``--out`` is given, stderr otherwise).  Exit codes:
0 when every check passes, 1 when a check fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import sys
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from ._json import dumps, jsonable
from .field import field_for_order
from .hashing import collision_stats
from .infolab import TOL, check_lemma_b1, check_lemma_b2, geometric_profile, profile, random_distribution
from .projspace import (
    CapacityError,
    count_directions,
    count_self_orthogonal,
    count_triples,
    direction_array,
    dot_array,
    enumerate_triples,
    orthogonal_array,
    stage_product_count,
)
from .protocol import batch, exact_audit, make_params
from .specgraph import gram_closed_form, gram_matrix, graph_params, mixing_scan, spectrum
from .tape import RandomTape

SPECTRAL_TOL = 1e-6


class UsageError(ValueError):
    pass


# Each option: (flag, type, default, help).  Defaults are applied after the
# config file so that explicit flags always win.
_COMMON = [("seed", int, 0, "root seed of the public tape"), ("workers", int, 1, "worker processes")]
_GRAPH = [("kind", str, "dirdir", "dirdir or dirpair"), ("q", int, 2, "field order"), ("k", int, 2, "dimension is k+1")]
_PROTO = [
    ("protocol", str, "multiround", "multiround or omniscience"), ("n", int, 16, "field degree"),
    ("k", int, 2, "dimension is k+1"), ("s", int, None, "message slack (default ceil(log2 n))"),
    ("s_k", int, None, "key slack (default s)"),
]
OPTIONS = {
    "counts": [("q", int, 2, "field order"), ("k", int, 2, "dimension is k+1"),
               ("verify", bool, True, "compare with exhaustive enumeration when small")],
    "spectrum": _GRAPH,
    "gram": _GRAPH,
    "mixing": _GRAPH + [("trials", int, 1000, "random subset pairs")],
    "profile": [("q", int, 16, "field order"), ("k", int, 2, "dimension is k+1")],
    "ineq": [("trials", int, 1000, "random distributions"), ("vars", int, 5, "variables per distribution"),
             ("alphabet", int, 4, "maximum alphabet size")],
    "simulate": _PROTO + [("trials", int, 1000, "protocol runs"),
                          ("min_success", float, None, "fail below this success rate")],
    "audit": _PROTO + [("seeds", int, 5, "tape seeds"), ("max_leak", float, None, "fail above this I(w:t)"),
                       ("max_sd", float, None, "fail above this statistical distance")],
    "hashstats": [("ell", str, "1,4,8", "comma-separated output lengths"), ("width", int, 48, "input bits"),
                  ("pairs", int, 100_000, "random distinct pairs per length")],
}


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orthokey", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"orthokey {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in OPTIONS.items():
        p = sub.add_parser(name)
        for flag, typ, _, text in opts + _COMMON:
            p.add_argument("--" + flag.replace("_", "-"), dest=flag, type=_bool if typ is bool else typ,
                           default=None, help=text)
        p.add_argument("--config", type=Path, help="JSON file of option values; flags take precedence")
        p.add_argument("--out", type=Path, help="write the JSON report here instead of stdout")
        p.add_argument("--csv", type=Path, help="also write plot-ready rows as CSV")
        p.add_argument("--deterministic", action="store_true", help="omit timestamps and wall times")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    opts = OPTIONS[args.command] + _COMMON
    from_file = {}
    if args.config is not None:
        try:
            from_file = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(from_file, dict):
            raise UsageError("config file must hold a JSON object")
        known = {o[0] for o in opts}
        unknown = set(from_file) - known
        if unknown:
            raise UsageError(f"unknown config keys for {args.command}: {sorted(unknown)}")
    cfg = {}
    for flag, typ, default, _ in opts:
        value = getattr(args, flag)
        if value is None:
            value = from_file.get(flag, default)
            if value is not None and typ is not bool:
                value = typ(value)
        cfg[flag] = value
    return cfg


# -- commands: each returns (result dict, ok, summary lines, csv rows) -------------

def cmd_counts(cfg: dict):
    q, k = cfg["q"], cfg["k"]
    f = field_for_order(q)
    d = k + 1
    res = {
        "q": q, "k": k, "directions": count_directions(q, d), "orthogonal_to_one": count_directions(q, d - 1),
        "orthogonal_to_two": count_directions(q, d - 2), "self_orthogonal": count_self_orthogonal(q, d),
        "triples": count_triples(q, d), "stage_product": stage_product_count(q, d),
    }
    ok = True
    if cfg["verify"] and res["triples"] <= 2_000_000:
        dirs = direction_array(f, d)
        sample = dirs[: min(len(dirs), 50)]
        sizes = {len(orthogonal_array(f, d, [x])) for x in sample}
        triples = enumerate_triples(f, d)
        gram = dot_array(f, dirs[:, None, :], dirs[None, :, :]) == 0 if len(dirs) <= 5000 else None
        res["verified"] = {
            "directions": len(dirs), "orthogonal_to_one": sorted(sizes), "triples": len(triples),
            "self_orthogonal": int(np.trace(gram)) if gram is not None else None,
        }
        ok = (len(dirs) == res["directions"] and sizes == {res["orthogonal_to_one"]}
              and len(triples) == res["triples"]
              and (gram is None or int(np.trace(gram)) == res["self_orthogonal"]))
    lines = [f"{k_:<20}{v}" for k_, v in res.items() if k_ != "verified"]
    return res, ok, lines, [res | {"ok": ok}]


def cmd_spectrum(cfg: dict):
    rep = spectrum(graph_params(cfg["kind"], cfg["q"], cfg["k"]))
    if rep.spec.kind.value == "dirdir":
        ok = rep.residual1 < SPECTRAL_TOL and rep.residual2 < SPECTRAL_TOL
    else:
        ok = rep.lambda2_numeric <= rep.sqrt_d_left + SPECTRAL_TOL
    res = rep.to_dict()
    lines = [f"{name:<20}{res[name]:.9g}" for name in
             ("lambda1_numeric", "lambda1_theory", "lambda2_numeric", "lambda2_theory", "residual2", "sqrt_d_left")]
    row = {k_: res[k_] for k_ in ("lambda1_numeric", "lambda1_theory", "lambda2_numeric", "lambda2_theory", "sqrt_d_left")}
    return res, ok, lines, [{"kind": cfg["kind"], "q": cfg["q"], "k": cfg["k"], **row, "ok": ok}]


def cmd_gram(cfg: dict):
    spec = graph_params(cfg["kind"], cfg["q"], cfg["k"])
    g = gram_matrix(spec)
    diag, off = gram_closed_form(spec)
    n = spec.n_left
    expected = diag * np.eye(n, dtype=np.int64) + off * (np.ones((n, n), dtype=np.int64) - np.eye(n, dtype=np.int64))
    mismatch = int((g != expected).sum())
    offdiag = g[~np.eye(n, dtype=bool)]
    res = {
        "spec": spec.to_dict(), "closed_form": {"diag": diag, "offdiag": off},
        "observed_diag": sorted(set(np.diag(g).tolist())), "observed_offdiag": sorted(set(offdiag.tolist())),
        "mismatched_entries": mismatch,
    }
    ok = mismatch == 0
    lines = [f"{'closed form':<20}diag={diag} offdiag={off}",
             f"{'observed diag':<20}{res['observed_diag']}", f"{'observed offdiag':<20}{res['observed_offdiag']}",
             f"{'mismatched':<20}{mismatch} of {n * n}"]
    return res, ok, lines, [{"kind": cfg["kind"], "q": cfg["q"], "k": cfg["k"], "mismatched": mismatch, "ok": ok}]


def cmd_mixing(cfg: dict):
    spec = graph_params(cfg["kind"], cfg["q"], cfg["k"])
    rep = mixing_scan(spec, cfg["trials"], RandomTape(cfg["seed"]), workers=cfg["workers"])
    res = rep.to_dict()
    lines = [f"{name:<22}{res[name]}" for name in
             ("pairs_checked", "exhaustive", "violations", "max_ratio", "corollary_qualifying", "corollary_violations")]
    row = {k_: res[k_] for k_ in ("pairs_checked", "violations", "max_ratio", "corollary_qualifying", "corollary_violations")}
    return res, rep.ok, lines, [{"kind": cfg["kind"], "q": cfg["q"], "k": cfg["k"], **row}]


def cmd_profile(cfg: dict):
    gp = geometric_profile(cfg["q"], cfg["k"])
    res = gp.to_dict()
    lines = [f"{name:<20}{value:+.6f}  (window {window:g}) {'ok' if ok else 'OUT'}"
             for name, (value, window, ok) in gp.bounds().items()]
    return res, gp.within_bounds, lines, [{"q": cfg["q"], "k": cfg["k"], **gp.deviations()}]


def cmd_ineq(cfg: dict):
    rng = RandomTape(cfg["seed"]).rng("ineq")
    nv = cfg["vars"]
    if nv < 3:
        raise UsageError("ineq needs at least 3 variables")
    worst = {"identity": 0.0, "B1": -np.inf, "B2(i)": -np.inf, "B2(ii)": -np.inf}
    violations = {key: 0 for key in worst}
    for _ in range(cfg["trials"]):
        dist = random_distribution(rng, nv, cfg["alphabet"])
        v = dist.variables
        rep = profile(dist, v[0], v[1], v[2:])
        resid = max(abs(r) for r in rep.identity_residuals().values())
        worst["identity"] = max(worst["identity"], resid)
        violations["identity"] += resid > TOL
        b1 = check_lemma_b1(dist, v[0], v[1], v[2], strict=False)
        b2 = check_lemma_b2(dist, *(list(v) + [(), ()])[:5], strict=False)
        for key, r in (("B1", b1), ("B2(i)", b2[0]), ("B2(ii)", b2[1])):
            worst[key] = max(worst[key], r.excess)
            violations[key] += not r.holds
    res = {"trials": cfg["trials"], "worst_excess": worst, "violations": violations}
    ok = not any(violations.values())
    lines = [f"{key:<10}worst {worst[key]:+.3e}  violations {violations[key]}" for key in worst]
    return res, ok, lines, [{"check": key, "worst": worst[key], "violations": violations[key]} for key in worst]


def _proto_params(cfg: dict):
    return make_params(cfg["protocol"], cfg["n"], cfg["k"], cfg["s"], cfg["s_k"], cfg["seed"])


def cmd_simulate(cfg: dict):
    params = _proto_params(cfg)
    rep = batch(params, cfg["trials"], workers=cfg["workers"])
    res = rep.to_dict()
    ok = rep.soundness_failures == 0 and rep.agreement_failures == 0
    if cfg["min_success"] is not None:
        ok = ok and rep.success_rate >= cfg["min_success"]
    lines = [f"{'success rate':<22}{rep.success_rate:.4f} ({rep.successes}/{rep.trials})",
             f"{'communication bits':<22}{params.total_bits}", f"{'key bits':<22}{params.ell_w}",
             f"{'soundness failures':<22}{rep.soundness_failures}", f"{'union bound':<22}{res['union_bound']:.5f}",
             f"{'party status':<22}{res['party_status']}"]
    row = {"protocol": params.kind.value, "n": params.n, "k": params.k, "s": params.s, "s_k": params.s_k,
           "trials": rep.trials, "success_rate": rep.success_rate, "comm_bits": params.total_bits,
           "key_bits": params.ell_w, "union_bound": res["union_bound"]}
    return res, ok, lines, [row]


def cmd_audit(cfg: dict):
    params = _proto_params(cfg)
    rep = exact_audit(params, cfg["seeds"], workers=cfg["workers"])
    res = rep.to_dict()
    ok = rep.keybound_holds and rep.monotone
    if cfg["max_leak"] is not None:
        ok = ok and rep.worst_i_w_t <= cfg["max_leak"]
    if cfg["max_sd"] is not None:
        ok = ok and rep.worst_sd <= cfg["max_sd"]
    lines = [f"{'triples':<14}{rep.triples}"]
    lines += [f"seed {s.seed_index}: H(w)={s.h_w:.6f} I(w:t)={s.i_w_t:.6f} SD={s.sd:.6f} "
              f"I(x:y|mC)={s.i_xy_given_mc:.6f} bound {'ok' if s.keybound_holds else 'VIOLATED'}" for s in rep.seeds]
    rows = [{"seed": s.seed_index, "key_prefix_bits": j, "leakage": v}
            for s in rep.seeds for j, v in enumerate(s.leakage_by_prefix)]
    return res, ok, lines, rows


def cmd_hashstats(cfg: dict):
    try:
        ells = [int(e) for e in str(cfg["ell"]).split(",") if e.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --ell list: {cfg['ell']!r}") from exc
    tape = RandomTape(cfg["seed"])
    reports = [collision_stats(ell, cfg["width"], cfg["pairs"], tape.child("hashstats", ell)) for ell in ells]
    res = {"reports": [r.to_dict() for r in reports]}
    ok = all(r.within_3sigma for r in reports)
    lines = [f"ell={r.ell:<3} rate {r.rate:.6f} expected {r.expected:.6f} z {r.z_score:+.2f}" for r in reports]
    return res, ok, lines, [r.to_dict() for r in reports]


COMMANDS: dict[str, Callable] = {
    "counts": cmd_counts, "spectrum": cmd_spectrum, "gram": cmd_gram, "mixing": cmd_mixing,
    "profile": cmd_profile, "ineq": cmd_ineq, "simulate": cmd_simulate, "audit": cmd_audit,
    "hashstats": cmd_hashstats,
}


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k not in ("wall_time", "timestamp")}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def _write_csv(path: Path, rows: list[dict]) -> None:
    fields: list[str] = []
    for r in rows:
        fields += [k for k in r if k not in fields]
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow(jsonable(r))


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors itself
        return int(exc.code) if isinstance(exc.code, int) else 2
    try:
        cfg = resolve_config(args)
        result, ok, lines, rows = COMMANDS[args.command](cfg)
    except (UsageError, CapacityError, ValueError, IndexError) as exc:
        print(f"orthokey {args.command}: error: {exc}", file=sys.stderr)
        return 2
    report = {"command": args.command, "version": __version__, "config": cfg, "ok": ok, "result": result}
    if args.deterministic:
        report = _strip_timing(jsonable(report))
    else:
        report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    text = dumps(report, indent=2) + "\n"
    summary = "\n".join([f"orthokey {args.command}: {'PASS' if ok else 'FAIL'}"] + ["  " + ln for ln in lines]) + "\n"
    if args.out is not None:
        args.out.write_text(text)
        sys.stdout.write(summary)
    else:
        sys.stdout.write(text)
        sys.stderr.write(summary)
    if args.csv is not None:
        _write_csv(args.csv, rows)
    return 0 if ok else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
