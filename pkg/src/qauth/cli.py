"""
Command-line runner for the verification suites.

    qauth [--config FILE] [--seed N] [--out DIR] [--jobs N] COMMAND ...

Commands: ``lemmas``, ``correctness``, ``security clifford``, ``security
trap``, ``eta`` and ``all``.  Every job draws its randomness from a subseed
derived by hashing ``"<root seed>/<job name>"``, so results do not depend
on the number of parallel workers.

Exit status: 0 when every check passes, 1 when any check fails, 2 on a
configuration or usage error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from qauth import verification as v

DEFAULTS: dict[str, dict] = {
    "run": {"seed": None, "out": "qauth-out", "jobs": None},
    "lemmas": {"states": 20},
    "correctness": {"trials": 50, "n": 1, "d": 2},
    "clifford": {
        "n": 1, "d": 2, "r": 1, "haar_attacks": 50, "keys": 10_000, "batches": 20, "random_inputs": 20,
    },
    "trap": {
        "haar_attacks": 20, "r": 1, "random_inputs": 20, "code": "five_qubit", "attacks": 200,
        "permutations": 10_000,
    },
    "eta": {"sample": 500, "n_max": 50},
}
TOP_LEVEL = ("seed", "out", "jobs")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    sections: dict[str, dict] = field(default_factory=lambda: {k: dict(d) for k, d in DEFAULTS.items()})
    source: str | None = None

    def __getitem__(self, section: str) -> dict:
        return self.sections[section]

    @property
    def seed(self) -> int | None:
        return self.sections["run"]["seed"]


def _locate(text: str, section: str | None, key: str) -> int | None:
    """1-based line of ``key = ...`` inside ``[section]`` (top level when ``section`` is None)."""
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        m = re.match(r"^\[\s*([^\]]+?)\s*\]", stripped)
        if m:
            current = m.group(1)
            if section is not None and current == section and key == "":
                return lineno
            continue
        if current == section and re.match(rf"^{re.escape(key)}\s*=", stripped):
            return lineno
    return None


def _type_ok(default, value) -> bool:
    if default is None or isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, type(default))


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else 0
        raise ConfigError(f"{path}:{line}: {exc}") from None
    cfg = ExperimentConfig(source=str(path))

    def fail(section, key, msg):
        line = _locate(text, section, key) or 0
        raise ConfigError(f"{path}:{line}: {msg}")

    for key, value in data.items():
        if isinstance(value, dict):
            if key not in DEFAULTS or key == "run":
                fail(key, "", f"unknown section [{key}]")
            for sub, val in value.items():
                if sub not in DEFAULTS[key]:
                    fail(key, sub, f"unknown key {sub!r} in [{key}]")
                if not _type_ok(DEFAULTS[key][sub], val):
                    fail(key, sub, f"{key}.{sub} has the wrong type ({type(val).__name__})")
                cfg.sections[key][sub] = val
        elif key in TOP_LEVEL:
            if not _type_ok(DEFAULTS["run"][key], value):
                fail(None, key, f"{key} has the wrong type ({type(value).__name__})")
            cfg.sections["run"][key] = value
        else:
            fail(None, key, f"unknown top-level key {key!r}")
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    run = cfg["run"]
    if run["seed"] is not None and not 0 <= run["seed"] < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if run["jobs"] is not None and run["jobs"] < 1:
        raise ConfigError("jobs must be at least 1")
    from qauth.trap_code import CODES

    if cfg["trap"]["code"] not in CODES:
        raise ConfigError(f"unknown error-correcting code {cfg['trap']['code']!r} (choose from {sorted(CODES)})")
    c = cfg["clifford"]
    if c["n"] < 1 or c["d"] < 1 or c["r"] < 0:
        raise ConfigError("clifford.n and clifford.d must be positive, clifford.r nonnegative")
    if c["keys"] < 2 or c["batches"] < 1:
        raise ConfigError("clifford.keys must be at least 2 and clifford.batches positive")
    for sec, key in (("trap", "attacks"), ("trap", "permutations"), ("eta", "sample"), ("lemmas", "states")):
        if cfg[sec][key] < 1:
            raise ConfigError(f"{sec}.{key} must be positive")


# -- jobs ------------------------------------------------------------------


def subseed(root: int, job: str) -> int:
    """64-bit seed for ``job``: the first 8 bytes of sha256("<root>/<job>")."""
    digest = hashlib.sha256(f"{root}/{job}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _job_lemmas(seed, cfg):
    return v.twirl_reports(seed, cfg["lemmas"]["states"])


def _job_correctness(seed, cfg):
    c = cfg["correctness"]
    return v.correctness_reports(seed, c["trials"], c["n"], c["d"])


def _job_clifford_security(seed, cfg):
    c = cfg["clifford"]
    return v.clifford_security_reports(
        seed, c["n"], c["d"], c["r"], c["haar_attacks"], c["keys"], c["batches"], c["random_inputs"]
    )


def _job_trap_dense(seed, cfg):
    c = cfg["trap"]
    return v.trap_security_dense_reports(seed, c["haar_attacks"], c["r"], c["random_inputs"])


def _job_trap_symbolic(seed, cfg):
    c = cfg["trap"]
    return v.trap_security_symbolic_reports(seed, c["code"], c["attacks"], c["permutations"], c["r"], c["random_inputs"])


def _job_eta(seed, cfg):
    return v.eta_reports(seed, cfg["eta"]["sample"])


def _job_chain(seed, cfg):
    return v.bound_chain_check(cfg["eta"]["n_max"])


JOBS = {
    "lemmas": _job_lemmas,
    "correctness": _job_correctness,
    "security.clifford": _job_clifford_security,
    "security.trap.dense": _job_trap_dense,
    "security.trap.symbolic": _job_trap_symbolic,
    "eta.table": _job_eta,
    "eta.chain": _job_chain,
}
SUITES = {
    "lemmas": ["lemmas"],
    "correctness": ["correctness"],
    "security clifford": ["security.clifford"],
    "security trap": ["security.trap.dense", "security.trap.symbolic"],
    "eta": ["eta.table", "eta.chain"],
}
SUITES["all"] = [job for name in ("lemmas", "correctness", "security clifford", "security trap", "eta") for job in SUITES[name]]


def _run_job(name: str, root: int, cfg: ExperimentConfig) -> tuple[str, list[v.VerificationReport], float]:
    seed = subseed(root, name)
    start = time.perf_counter()
    try:
        reports = JOBS[name](seed, cfg)
    except v.OracleDisagreement as exc:
        reports = [v.VerificationReport(f"{name}.oracle_gate", {}, 1.0, 0.0, 0.0, False, details={"error": str(exc)})]
    return name, reports, time.perf_counter() - start


def run_jobs(names: list[str], cfg: ExperimentConfig, jobs: int = 1) -> tuple[list[v.VerificationReport], dict]:
    """Run jobs (in parallel when ``jobs > 1``); results are merged in job-name order."""
    root = cfg.seed
    if jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(names))) as pool:
            results = list(pool.map(_run_job, names, [root] * len(names), [cfg] * len(names)))
    else:
        results = [_run_job(name, root, cfg) for name in names]
    reports, timing = [], {}
    for name, reps, elapsed in sorted(results, key=lambda r: r[0]):
        reports.extend(reps)
        timing[name] = elapsed
    return reports, timing


def write_outputs(out: Path, reports: list[v.VerificationReport], meta: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(v.reports_to_json(reports))
    (out / "summary.csv").write_text(v.reports_to_csv(reports))
    meta = dict(meta)
    meta["runtimes"] = {r.name: round(r.runtime, 6) for r in sorted(reports, key=lambda r: r.name)}
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _print_summary(reports: list[v.VerificationReport], stream) -> None:
    per_attack = [r for r in reports if ".attack." in r.name]
    for r in sorted(reports, key=lambda r: r.name):
        if ".attack." in r.name and r.passed:
            continue
        status = "PASS" if r.passed else "FAIL"
        err = f" +/- {r.stderr:.3g}" if r.stderr else ""
        print(f"{status}  {r.name}: measured {r.measured:.6g}{err} vs {r.expected:.6g}", file=stream)
    if per_attack:
        bad = sum(not r.passed for r in per_attack)
        print(f"per-attack checks: {len(per_attack) - bad}/{len(per_attack)} passed", file=stream)


# -- eta table -------------------------------------------------------------


def eta_table(n: int, t: int) -> list[dict]:
    """One row per letter multiset of a ``3n``-qubit Pauli."""
    from math import factorial

    from qauth.pauli import PauliOperator

    m = 3 * n
    rows = []
    for cx in range(m + 1):
        for cy in range(m + 1 - cx):
            for cz in range(m + 1 - cx - cy):
                counts = (cx, cy, cz)
                eta = v.undetected_minus_accepted(n, t, counts)
                row = {
                    "x": cx, "y": cy, "z": cz,
                    "eta": eta,
                    "eta_composition": v.eta_from_compositions(n, t, counts),
                    "eta_bound": v.eta_bound(n, t),
                    "ratio": eta / factorial(m),
                }
                if m <= v.BRUTE_FORCE_LIMIT:
                    p = PauliOperator(m, (1 << (cx + cy)) - 1, ((1 << (cy + cz)) - 1) << cx)
                    row["eta_bruteforce"] = v.eta_bruteforce(v.EtaQuery(n, t, p))
                rows.append(row)
    return rows


def _eta_table_command(args, cfg) -> int:
    rows = eta_table(args.n, args.t)
    out = Path(cfg["run"]["out"])
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"eta_n{args.n}_t{args.t}.csv"
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    bound = v.eta_bound(args.n, args.t)
    mismatch = sum(r["eta"] != r["eta_composition"] or r.get("eta_bruteforce", r["eta"]) != r["eta"] for r in rows)
    over = [r for r in rows if r["eta"] > bound]
    reports = [
        v.exact_check(f"eta.table.n{args.n}.t{args.t}.agreement", {"n": args.n, "t": args.t}, mismatch, 0, 0),
        v.exact_check(f"eta.table.n{args.n}.t{args.t}.bound", {"n": args.n, "t": args.t}, len(over), 0, 0),
    ]
    print(f"{'X':>3} {'Y':>3} {'Z':>3} {'eta':>14} {'bound':>14}")
    for r in rows:
        if r["eta"]:
            print(f"{r['x']:>3} {r['y']:>3} {r['z']:>3} {r['eta']:>14} {bound:>14}")
    write_outputs(out, reports, _metadata(args, cfg, {}))
    _print_summary(reports, sys.stdout)
    print(f"table written to {path}")
    return 0 if all(r.passed for r in reports) else 1


# -- argument handling -----------------------------------------------------


def _metadata(args, cfg, timing) -> dict:
    return {
        "argv": sys.argv[1:],
        "config": cfg.source,
        "finished": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "jobs": args.jobs,
        "job_seconds": {k: round(t, 6) for k, t in timing.items()},
    }


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="TOML experiment config")
    common.add_argument("--seed", type=int, help="root seed (unsigned 64-bit)")
    common.add_argument("--out", help="output directory for report.json, summary.csv, metadata.json")
    common.add_argument("--jobs", type=int, help="parallel worker processes (default: $QAUTH_JOBS or 1)")

    parser = argparse.ArgumentParser(prog="qauth", description=__doc__.split("\n\n")[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("lemmas", parents=[common], help="Pauli and Clifford twirls, Clifford randomization")
    sub.add_parser("correctness", parents=[common], help="honest encode/decode round trips")
    sec = sub.add_parser("security", parents=[common], help="security gaps against the stated bounds")
    which = sec.add_subparsers(dest="code", required=True)
    cl = which.add_parser("clifford", parents=[common])
    cl.add_argument("--n", type=int)
    cl.add_argument("--d", type=int)
    cl.add_argument("--r", type=int, help="reference qubits")
    cl.add_argument("--attacks", type=int, help="number of Haar-random attacks")
    cl.add_argument("--keys", type=int, help="sampled Clifford keys")
    tr = which.add_parser("trap", parents=[common])
    tr.add_argument("--mode", choices=("dense", "symbolic", "both"), default="both")
    tr.add_argument("--code", help="error-correcting code for symbolic mode")
    tr.add_argument("--attacks", type=int, help="random Pauli attacks (symbolic mode)")
    tr.add_argument("--haar", type=int, help="Haar-random attacks (dense mode)")
    tr.add_argument("--permutations", type=int, help="sampled permutations per attack (symbolic mode)")
    eta = sub.add_parser("eta", parents=[common], help="permutation counts and the bound chain")
    eta.add_argument("--n", type=int, help="print the table for this block size")
    eta.add_argument("--t", type=int, default=0)
    sub.add_parser("all", parents=[common], help="every suite")
    return parser


def _apply_overrides(args, cfg: ExperimentConfig) -> None:
    run = cfg["run"]
    if args.seed is not None:
        run["seed"] = args.seed
    if args.out is not None:
        run["out"] = args.out
    if args.jobs is not None:
        run["jobs"] = args.jobs
    if run["jobs"] is None:
        run["jobs"] = 1
        env = os.environ.get("QAUTH_JOBS")
        if env:
            try:
                run["jobs"] = int(env)
            except ValueError:
                raise ConfigError(f"QAUTH_JOBS must be an integer, got {env!r}") from None
    args.jobs = run["jobs"]
    if args.command == "security" and args.code == "clifford":
        for flag, key in (("n", "n"), ("d", "d"), ("r", "r"), ("attacks", "haar_attacks"), ("keys", "keys")):
            if getattr(args, flag) is not None:
                cfg["clifford"][key] = getattr(args, flag)
    if args.command == "security" and args.code == "trap":
        for flag, key in (("code", "code"), ("attacks", "attacks"), ("haar", "haar_attacks"), ("permutations", "permutations")):
            if getattr(args, flag) is not None:
                cfg["trap"][key] = getattr(args, flag)
    validate(cfg)


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse ``argv``; shared flags may appear before or after the subcommand."""
    args = build_parser().parse_args(argv)
    for name in ("config", "seed", "out", "jobs"):
        setattr(args, name, getattr(args, name, None))
    return args


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        _apply_overrides(args, cfg)
        if args.command == "eta" and args.n is not None:
            if args.n < 1 or not 0 <= args.t:
                raise ConfigError("eta needs n >= 1 and t >= 0")
            return _eta_table_command(args, cfg)
        if cfg.seed is None:
            raise ConfigError("a seed is required (--seed or 'seed' in the config)")
    except ConfigError as exc:
        print(f"qauth: error: {exc}", file=sys.stderr)
        return 2

    if args.command == "security":
        names = list(SUITES[f"security {args.code}"])
        if args.code == "trap" and args.mode != "both":
            names = [f"security.trap.{args.mode}"]
    else:
        names = SUITES[args.command]
    reports, timing = run_jobs(names, cfg, cfg["run"]["jobs"])
    write_outputs(Path(cfg["run"]["out"]), reports, _metadata(args, cfg, timing))
    _print_summary(reports, sys.stdout)
    failed = sum(not r.passed for r in reports)
    print(f"{len(reports) - failed}/{len(reports)} checks passed; reports in {cfg['run']['out']}")
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
