"""Batch experiment runner.

    linshadow certify --config cfg.json --seed 7 --out runs/a
    linshadow reverify runs/a

Every command writes ``certificates.csv``, ``report.md`` and ``run.json`` into
``--out``.  Exit status: 0 all certificates verified, 1 a certificate failed,
2 parse/config error, 3 capability error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import random
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .chains import chain_csv_rows, contraction_no_return_certificate, isometry_return_chain
from .core import NormKind, SeqVector, as_rational, format_rational
from .errors import (CertificateFailure, ChainInvalid, ConfigError, DomainError, InfeasibleCertificate, LinShadowError,
                     ParseError, PseudoOrbitInvalid, UnsupportedCapability)
from .fhc import construct_fhc_vector, dense_seq_generator
from .operators import PolyFunction, from_config
from .shadowing import (l1_defect, l1_table, mixing_witness, random_pseudo_orbit, right_inverse_connector,
                        shadow_csv_rows, solver_for)

COMMANDS = ("chains", "shadow", "mixing", "l1demo", "fhc", "certify")
HELP = {
    "chains": "isometry return chain or contraction no-return search",
    "shadow": "shadow one random pseudo orbit",
    "mixing": "mixing witnesses for k in a range",
    "l1demo": "defect table for the integration operator on L1",
    "fhc": "build a frequently hypercyclic vector up to a horizon",
    "certify": "batch shadowing certificates over deltas and trials",
}
RANDOMIZED = {"shadow", "certify"}

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_CAPABILITY = 0, 1, 2, 3

DEFAULT_OPERATOR = {
    "chains": {"op": "diagonal", "default": "1/2"},
    "shadow": {"op": "doubling_shift_fixed_line"},
    "certify": {"op": "doubling_shift_fixed_line"},
    "mixing": {"op": "doubling_shift_fixed_line"},
    "fhc": {"op": "doubling_shift_fixed_line"},
}


@dataclass
class Outcome:
    rows: list
    summary: list            # (check, status) lines for the report
    ok: bool = True
    failure: str = ""
    notes: list = field(default_factory=list)


# -- config helpers ----------------------------------------------------------

def _rat(params: dict, key: str, default=None) -> Fraction:
    if key not in params:
        if default is None:
            raise ConfigError(f"missing parameter {key!r}")
        return as_rational(default)
    return as_rational(params[key])


def _vec(params: dict, key: str, default=None) -> SeqVector:
    v = params.get(key, default)
    if v is None:
        raise ConfigError(f"missing parameter {key!r}")
    if isinstance(v, list):
        return SeqVector.from_list([as_rational(c) for c in v])
    return SeqVector.parse(v)


def _int(params: dict, key: str, default: int) -> int:
    v = params.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key!r} must be an integer, got {v!r}")
    return v


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"config {path} is not valid JSON: {e}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def normalize(command: str, cfg: dict, seed=None, horizon=None) -> dict:
    """Merge flags into the config; the result is what run.json records."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    cfg = dict(cfg)
    cfg.pop("command", None)
    if seed is not None:
        cfg["seed"] = seed
    if horizon is not None:
        cfg["horizon"] = horizon
    if command in DEFAULT_OPERATOR:
        cfg.setdefault("operator", DEFAULT_OPERATOR[command])
    if command in RANDOMIZED or (command == "chains" and cfg.get("mode", "no_return") == "no_return"):
        if "seed" not in cfg:
            raise ConfigError(f"{command} draws random inputs and needs a seed (--seed)")
    if "seed" in cfg and (isinstance(cfg["seed"], bool) or not isinstance(cfg["seed"], int) or cfg["seed"] < 0):
        raise ConfigError(f"seed must be a non-negative integer, got {cfg['seed']!r}")
    return {"command": command, **cfg}


# -- commands ---------------------------------------------------------------

def _kind(cfg) -> NormKind:
    return NormKind.parse(cfg.get("norm", "1"))


def run_chains(cfg: dict) -> Outcome:
    T = from_config(cfg["operator"])
    kind = _kind(cfg)
    mode = cfg.get("mode", "no_return")
    if mode == "isometry_return":
        x = _vec(cfg, "x", "{0:1/1}")
        eps = _rat(cfg, "eps", "1/4")
        c = isometry_return_chain(T, x, eps, kind)
        ok = c.start == x and c.end == x
        return Outcome(chain_csv_rows(c), [
            ("isometry return chain", f"{len(c.points)} points, x -> x, every defect < {format_rational(eps)}")], ok)
    if mode != "no_return":
        raise ConfigError(f"unknown chains mode {mode!r}")
    x = _vec(cfg, "x", "{0:1/1}")
    cert = contraction_no_return_certificate(T, x, _rat(cfg, "delta", "1/10"), kind)
    rep = cert.search(_int(cfg, "trials", 10_000), cfg["seed"], _int(cfg, "max_length", 12), _int(cfg, "grid", 64))
    rows = [("trial", "length", "terminal_norm", "analytic_bound", "ok")]
    rows += [(str(t), str(N), format_rational(e), format_rational(b), str(ok).lower()) for t, N, e, b, ok in rep.rows]
    ok = rep.violations == 0
    return Outcome(rows, [
        ("no-return eps", format_rational(cert.eps)),
        ("random valid eps-chains", f"{rep.trials} trials, {rep.violations} violations"),
    ], ok, "" if ok else f"{rep.violations} chains came back or broke the analytic bound")


def run_shadow(cfg: dict) -> Outcome:
    T = from_config(cfg["operator"])
    kind = _kind(cfg)
    solver = solver_for(T, kind)
    delta = _rat(cfg, "delta", "1/8")
    H = _int(cfg, "horizon", 50)
    po = random_pseudo_orbit(T, delta, H, random.Random(cfg["seed"]), kind=kind)
    cert = solver.shadow(po)
    return Outcome(shadow_csv_rows(po, cert), [
        ("pseudo orbit", f"delta = {format_rational(delta)}, H = {H}"),
        ("max shadow error", f"{format_rational(cert.max_error)} <= {format_rational(cert.analytic_bound)}"),
    ], cert.ok)


def run_certify(cfg: dict) -> Outcome:
    T = from_config(cfg["operator"])
    kind = _kind(cfg)
    solver = solver_for(T, kind)
    deltas = [as_rational(d) for d in cfg.get("deltas", [cfg.get("delta", "1/8")])]
    trials = _int(cfg, "trials", 100)
    H = _int(cfg, "horizon", 50)
    rng = random.Random(cfg["seed"])
    rows = [("delta", "trial", "horizon", "max_error", "bound", "within_2delta", "ok")]
    failures = 0
    summary = []
    for delta in deltas:
        worst = Fraction(0)
        for t in range(trials):
            po = random_pseudo_orbit(T, delta, H, rng, kind=kind)
            try:
                cert = solver.shadow(po)
                err, bound, ok = cert.max_error, cert.analytic_bound, cert.ok
            except CertificateFailure:
                err, bound, ok = Fraction(-1), solver.bound(delta), False
            within = Fraction(0) <= err <= 2 * delta
            failures += not ok
            worst = max(worst, err)
            rows.append((format_rational(delta), str(t), str(H), format_rational(err), format_rational(bound),
                         str(within).lower(), str(ok).lower()))
        summary.append((f"delta = {format_rational(delta)}",
                        f"{trials} pseudo orbits, worst error {format_rational(worst)}"))
    ok = failures == 0
    return Outcome(rows, summary, ok, "" if ok else f"{failures} shadow certificates failed")


def run_mixing(cfg: dict) -> Outcome:
    T = from_config(cfg["operator"])
    kind = _kind(cfg)
    x, y = _vec(cfg, "x", "{0:1/1}"), _vec(cfg, "y", "{1:1/1}")
    lam = _rat(cfg, "lambda", "1/10")
    k_min, k_max = _int(cfg, "k_min", 0), _int(cfg, "k_max", 20)
    connect = right_inverse_connector(T, kind)
    solver = solver_for(T, kind)
    norm = T.norm(kind)
    rows = [("k", "hitting_time", "dist_to_x", "dist_to_y", "ok")]
    times = []
    for k in range(k_min, k_max + 1):
        w = mixing_witness(T, x, y, lam, k, connect, solver, kind)
        dx = norm.upper(w.z - x)
        dy = norm.upper(T.power(w.z, w.hitting_time) - y)
        times.append(w.hitting_time)
        rows.append((str(k), str(w.hitting_time), format_rational(dx), format_rational(dy), "true"))
    full = sorted(times) == list(range(min(times), max(times) + 1))
    return Outcome(rows, [
        ("witnesses", f"k = {k_min}..{k_max}, lambda = {format_rational(lam)}"),
        ("hitting times", f"{min(times)}..{max(times)}, full interval: {str(full).lower()}"),
    ], full, "" if full else "hitting times have gaps")


def run_l1demo(cfg: dict) -> Outcome:
    delta = _rat(cfg, "delta", "1/10")
    n_max = _int(cfg, "n_max", 200)
    g = PolyFunction(tuple(as_rational(c) for c in cfg.get("g", [])))
    defect = l1_defect(delta, 1)
    rows = [("n", "defect", "lower_bound", "exceeds_quarter")]
    crossing = None
    table = l1_table(delta, n_max, g)
    for n, b in table:
        d = l1_defect(delta, n)
        if d != delta / 2:
            return Outcome(rows, [], False, f"defect at n={n} is {d}, expected {delta / 2}")
        big = b > Fraction(1, 4)
        if big and crossing is None:
            crossing = n
        rows.append((str(n), format_rational(d), format_rational(b), str(big).lower()))
    mono = all(b2 > b1 for (_, b1), (_, b2) in zip(table, table[1:])) if not g.coefficients else True
    return Outcome(rows, [
        ("pseudo orbit defect", f"exactly {format_rational(defect)} for n = 1..{n_max}"),
        ("lower bound", f"strictly increasing: {str(mono).lower()}, first n with bound > 1/4: {crossing}"),
    ], mono)


def run_fhc(cfg: dict) -> Outcome:
    T = from_config(cfg["operator"])
    kind = _kind(cfg)
    if "targets" in cfg:
        targets = [SeqVector.parse(t) for t in cfg["targets"]]
    else:
        targets = [dense_seq_generator(int(i)) for i in cfg.get("dense_indices", [])]
        if not targets:
            targets = [SeqVector.basis(0), SeqVector.basis(1)]
    cert = construct_fhc_vector(T, targets, _int(cfg, "first_class", 1), cfg.get("horizon"), kind=kind)
    s = cert.schedule
    floor = Fraction(1, 2 * s.period)
    rows = [("p", "target", "eps", "delta", "R", "N", "offset", "period", "z_norm", "worst_b", "worst_c",
             "checked_b", "checked_c", "soma_max", "visit_radius", "visits_required", "visit_density", "ok")]
    ok = True
    for r in cert.records:
        good = r.visit_density >= floor
        ok &= good
        rows.append((str(r.p), r.target.to_text(), format_rational(r.eps), format_rational(r.delta), str(r.R),
                     str(r.N), str(s.offset(r.p)), str(s.period), format_rational(r.z_norm),
                     format_rational(r.worst_b), format_rational(r.worst_c), str(r.checked_b), str(r.checked_c),
                     format_rational(r.soma_max), format_rational(r.visit_radius), str(r.visits_required),
                     format_rational(r.visit_density), str(good).lower()))
    summary = [
        ("schedule", f"sizes {list(s.sizes)}, offsets {list(s.offsets)}, period {s.period}"),
        ("horizon", f"H = {cert.horizon}"),
        ("properties (a), (b), (c)", "hold at every checked index <= H"),
        ("visit density floor", f"1/(2L) = {format_rational(floor)}"),
    ]
    notes = ["Only indices n <= H are checked. The certificate witnesses the construction "
             "up to the horizon and does not prove the infinite-time statement."]
    return Outcome(rows, summary, ok, "" if ok else "visit density below 1/(2L)", notes)


RUNNERS = {"chains": run_chains, "shadow": run_shadow, "certify": run_certify, "mixing": run_mixing,
           "l1demo": run_l1demo, "fhc": run_fhc}


# -- artifacts ----------------------------------------------------------------

def _csv_bytes(rows) -> bytes:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue().encode()


def _report(cfg: dict, out: Outcome, status: int) -> str:
    lines = [f"# {cfg['command']} run", ""]
    lines += [f"- status: {'verified' if status == EXIT_OK else 'FAILED'} (exit {status})"]
    if "operator" in cfg:
        lines.append(f"- operator: `{json.dumps(cfg['operator'], sort_keys=True)}`")
    for key in ("norm", "seed", "horizon"):
        if key in cfg:
            lines.append(f"- {key}: {cfg[key]}")
    lines.append("")
    lines += out.notes + ([""] if out.notes else [])
    lines += ["| check | result |", "|---|---|"]
    lines += [f"| {a} | {b} |" for a, b in out.summary]
    if out.failure:
        lines += ["", f"First failure: {out.failure}"]
    lines += ["", f"Rows in certificates.csv: {len(out.rows) - 1}", ""]
    return "\n".join(lines)


def execute(cfg: dict, out_dir) -> int:
    """Run a normalized config and write the artifacts; returns the exit status."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        out = RUNNERS[cfg["command"]](cfg)
        status = EXIT_OK if out.ok else EXIT_FAIL
    except (CertificateFailure, ChainInvalid, PseudoOrbitInvalid, InfeasibleCertificate) as e:
        out, status = Outcome([("error",), (str(e),)], [], False, str(e)), EXIT_FAIL
    except UnsupportedCapability as e:
        out, status = Outcome([("error",), (str(e),)], [], False, str(e)), EXIT_CAPABILITY
    except (ParseError, ConfigError, DomainError) as e:
        out, status = Outcome([("error",), (str(e),)], [], False, str(e)), EXIT_PARSE
    data = _csv_bytes(out.rows)
    (out_dir / "certificates.csv").write_bytes(data)
    (out_dir / "report.md").write_text(_report(cfg, out, status))
    run = {"config": cfg, "status": status, "failure": out.failure,
           "csv_sha256": hashlib.sha256(data).hexdigest()}
    (out_dir / "run.json").write_text(json.dumps(run, indent=2, sort_keys=True) + "\n")
    if out.failure:
        print(f"{cfg['command']}: {out.failure}", file=sys.stderr)
    return status


def reverify(out_dir) -> int:
    """Re-run a recorded config and check status and CSV bytes against the stored run."""
    out_dir = Path(out_dir)
    try:
        run = json.loads((out_dir / "run.json").read_text())
        stored = (out_dir / "certificates.csv").read_bytes()
    except (OSError, json.JSONDecodeError) as e:
        print(f"reverify: cannot load run from {out_dir}: {e}", file=sys.stderr)
        return EXIT_PARSE
    if hashlib.sha256(stored).hexdigest() != run.get("csv_sha256"):
        print("reverify: certificates.csv does not match its recorded digest", file=sys.stderr)
        return EXIT_FAIL
    with tempfile.TemporaryDirectory() as tmp:
        status = execute(run["config"], tmp)
        fresh = (Path(tmp) / "certificates.csv").read_bytes()
    if status != run["status"] or fresh != stored:
        print("reverify: re-run does not reproduce the stored certificates", file=sys.stderr)
        return EXIT_FAIL
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="linshadow", description="Exact chain and shadowing certificates.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--seed", type=int, help="RNG seed, required by randomized runs")
        p.add_argument("--horizon", type=int, help="override the config horizon")
        p.add_argument("--out", default=f"out/{name}", help="output directory")
    rv = sub.add_parser("reverify", help="re-check a previous run directory")
    rv.add_argument("dir")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "reverify":
        return reverify(args.dir)
    try:
        cfg = load_config(args.config) if args.config else {}
        cfg = normalize(args.command, cfg, args.seed, args.horizon)
    except LinShadowError as e:
        print(f"{args.command}: {e}", file=sys.stderr)
        return EXIT_PARSE
    return execute(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
