"""Command-line front end.

Exit status: 0 if every requested certificate passed, 1 on a certificate
failure, 2 on numerical non-convergence, 3 on an invalid configuration.

Reports go to ``--output`` if given, else to ``$RMTBOUND_OUTPUT_DIR/<command>.<format>``
if that variable is set, else to stdout.  Files are written atomically.
All floating-point output carries 17 significant digits.

CSV columns
  scan:    m, max_mQ, max_signed_mQ, min_signed_mQ, lambda1_Kprime, det_T,
           det_trace_log, lemma2_ok, theorem1_ok
  loggas:  N, beta, k, method, value_log, error, seed
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .bounds import (maple_check, verify_FG, verify_lemma3, verify_lemma4,
                     verify_theorem1)
from .integration import QuadratureError, QuadratureSpec
from .loggas import (CSV_COLUMNS, METHODS, LogGasError, Potential,
                     convergence_study, estimate_rows, partition_function)

SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "RMTBOUND_OUTPUT_DIR"
M_MAX = 500
COMMANDS = ("verify", "scan", "lemma3", "lemma4", "fg", "maple", "loggas")
SCAN_COLUMNS = ("m", "max_mQ", "max_signed_mQ", "min_signed_mQ", "lambda1_Kprime",
                "det_T", "det_trace_log", "lemma2_ok", "theorem1_ok")

EXIT_OK, EXIT_FAIL, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2, 3


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    m_min: int = 2
    m_max: int = 2
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    precision: str = "standard"
    max_panels: int = 50_000
    output: Path | None = None
    fmt: str = "json"
    seed: int = 0
    jobs: int = 1
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command}")
        if not 2 <= self.m_min <= self.m_max <= M_MAX:
            raise ConfigError(f"m-range must satisfy 2 <= m-min <= m-max <= {M_MAX}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ConfigError("tolerances must be positive")
        if self.max_panels < 1:
            raise ConfigError("--max-panels must be >= 1")
        if self.jobs < 1:
            raise ConfigError("--jobs must be >= 1")

    def spec(self) -> QuadratureSpec:
        spec = QuadratureSpec(abs_tol=self.abs_tol, rel_tol=self.rel_tol,
                              max_panels=self.max_panels)
        return spec.tightened() if self.precision == "high" else spec


# ---------------------------------------------------------------- formatting

def fmt_float(x: float) -> str:
    return format(x, ".17g")


_FLOAT_TAG = "\x1ff:"


def _tag_floats(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return _FLOAT_TAG + fmt_float(obj) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _tag_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tag_floats(v) for v in obj]
    if hasattr(obj, "item"):
        return _tag_floats(obj.item())
    return str(obj)


def dumps_json(obj) -> str:
    """JSON with every float printed to 17 significant digits (NaN/inf -> null)."""
    text = json.dumps(_tag_floats(obj), indent=2, sort_keys=False)
    return re.sub(r'"\\u001ff:([^"]*)"', r"\1", text) + "\n"


def dumps_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        cells = []
        for c in columns:
            v = row[c]
            if isinstance(v, bool):
                cells.append("true" if v else "false")
            elif isinstance(v, float):
                cells.append(fmt_float(v))
            else:
                cells.append(v)
        writer.writerow(cells)
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- commands

def _theorem1_row(args) -> dict:
    m, spec, stability = args
    return verify_theorem1(m, spec, stability_check=stability).to_dict()


def _run_scan(cfg: RunConfig, ms) -> list[dict]:
    tasks = [(m, cfg.spec(), cfg.extra.get("stability", False)) for m in ms]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_theorem1_row, tasks))
    return [_theorem1_row(t) for t in tasks]


def _config_record(cfg: RunConfig) -> dict:
    # parallelism is deliberately left out: reports must not depend on it
    rec = {"command": cfg.command, "m_min": cfg.m_min, "m_max": cfg.m_max,
           "abs_tol": cfg.abs_tol, "rel_tol": cfg.rel_tol, "precision": cfg.precision,
           "max_panels": cfg.max_panels,
           "seed": cfg.seed}
    rec.update({k: v for k, v in cfg.extra.items()})
    return rec


def build_report(cfg: RunConfig) -> tuple[dict, str | None]:
    """Run the command; returns the JSON document and, for CSV output, the CSV text."""
    spec = cfg.spec()
    csv_text = None
    if cfg.command in ("verify", "scan"):
        reports = _run_scan(cfg, range(cfg.m_min, cfg.m_max + 1))
        passed = all(r["theorem1_ok"] for r in reports)
        if cfg.fmt == "csv":
            csv_text = dumps_csv(SCAN_COLUMNS, reports)
    elif cfg.command == "lemma3":
        reports = [verify_lemma3(m, cfg.extra["grid_step"]).to_dict()
                   for m in range(cfg.m_min, cfg.m_max + 1)]
        passed = all(r["passed"] for r in reports)
    elif cfg.command == "lemma4":
        q_list = range(3, cfg.extra["q_max"] + 1, 2)
        reports = [verify_lemma4(q_list, cfg.extra["grid_step"], spec).to_dict()]
        passed = reports[0]["passed"]
    elif cfg.command == "fg":
        reports = [verify_FG(cfg.extra["grid_step"], spec).to_dict()]
        passed = reports[0]["passed"]
    elif cfg.command == "maple":
        reports = [maple_check(cfg.extra["m_top"]).to_dict()]
        passed = reports[0]["passed"]
    else:
        reports, passed, csv_rows = _run_loggas(cfg)
        if cfg.fmt == "csv":
            csv_text = dumps_csv(CSV_COLUMNS, csv_rows)
    doc = {"schema": SCHEMA_VERSION, "config": _config_record(cfg), "passed": passed,
           "reports": reports}
    return doc, csv_text


def _run_loggas(cfg: RunConfig):
    m = cfg.m_min
    V = Potential.monomial(m, cfg.extra["kappa"])
    method = cfg.extra["method"]
    rows = convergence_study(m, cfg.extra["N"], V, method=None if method == "auto" else method,
                             samples=cfg.extra["samples"], seed=cfg.seed, jobs=cfg.jobs)
    reports, csv_rows = [], []
    passed = True
    for row in rows:
        checks = []
        for est in row.estimates:
            if est.k <= 4 and est.method != "monte-carlo" and cfg.extra["cross_check"]:
                W = V if est.beta == 1 else V.scaled(2.0)
                mc = partition_function(W, est.beta, est.k, "monte-carlo",
                                        samples=cfg.extra["samples"], seed=cfg.seed,
                                        jobs=cfg.jobs)
                sigma = math.hypot(est.error, mc.error)
                z = abs(est.value - mc.value) / sigma if sigma > 0 else math.inf
                checks.append({"beta": est.beta, "k": est.k, "reference": est.value,
                               "monte_carlo": mc.value, "sigma": sigma, "z": z,
                               "pass": z <= 3.0})
        ok = (not row.inconclusive and all(c["pass"] for c in checks)
              and all(e.value > 0 and math.isfinite(e.value) for e in row.estimates))
        passed &= ok
        reports.append({
            "N": row.N, "ratio": row.ratio, "error": row.error,
            "rescaled_ratio": row.rescaled, "rescaled_error": row.rescaled_error,
            "det_T": row.det_T, "distance": row.distance,
            "rescaled_distance": row.rescaled_distance, "inconclusive": row.inconclusive,
            "estimates": estimate_rows(row.N, row.estimates),
            "cross_checks": checks, "passed": ok,
        })
        csv_rows.extend(estimate_rows(row.N, row.estimates))
    return reports, passed, csv_rows


# ---------------------------------------------------------------- argparse

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def make_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--abs-tol", type=float, default=1e-12)
    common.add_argument("--rel-tol", type=float, default=1e-12)
    common.add_argument("--precision", choices=("standard", "high"), default="standard",
                        help="high: tolerances x1e-2 and doubled Gauss order")
    common.add_argument("--max-panels", type=int, default=50_000,
                        help="panel budget per integral; exceeding it exits with status 2")
    common.add_argument("--output", "-o", type=Path, default=None)
    common.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1,
                        help="worker processes; never affects report contents")

    parser = _Parser(prog="rmtbound", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="full certificate for one m")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--stability", action="store_true",
                   help="also recompute det T with tightened quadrature")

    p = sub.add_parser("scan", parents=[common], help="certificate for a range of m")
    p.add_argument("--m-min", type=int, default=2)
    p.add_argument("--m-max", type=int, default=50)
    p.add_argument("--stability", action="store_true")
    p.set_defaults(fmt_default="csv")

    p = sub.add_parser("lemma3", parents=[common], help="unimodality and range of u")
    p.add_argument("--m", type=int)
    p.add_argument("--m-min", type=int, default=2)
    p.add_argument("--m-max", type=int, default=50)
    p.add_argument("--grid-step", type=float, default=1e-4)

    p = sub.add_parser("lemma4", parents=[common], help="bounds on the Gibbs primitive W")
    p.add_argument("--q-max", type=int, default=201)
    p.add_argument("--grid-step", type=float, default=1e-3)

    p = sub.add_parser("fg", parents=[common], help="F and G inequalities on [1, sqrt 3]")
    p.add_argument("--grid-step", type=float, default=1e-3)

    p = sub.add_parser("maple", parents=[common], help="exact min of u(x_m) + 1/(4m), m <= 15")
    p.add_argument("--m-top", type=int, default=15)

    p = sub.add_parser("loggas", parents=[common], help="finite-N partition-function ratio")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--N", type=int, nargs="+", default=[2, 4, 6])
    p.add_argument("--method", choices=("auto",) + METHODS, default="auto")
    p.add_argument("--samples", type=int, default=1 << 18)
    p.add_argument("--no-cross-check", dest="cross_check", action="store_false")
    return parser


def config_from_args(ns: argparse.Namespace, argv_fmt_given: bool) -> RunConfig:
    cmd = ns.command
    cfg = RunConfig(command=cmd, abs_tol=ns.abs_tol, rel_tol=ns.rel_tol,
                    precision=ns.precision, max_panels=ns.max_panels, output=ns.output, fmt=ns.fmt,
                    seed=ns.seed, jobs=ns.jobs)
    if cmd == "scan" and not argv_fmt_given:
        cfg.fmt = "csv"
    if cmd == "verify":
        cfg.m_min = cfg.m_max = ns.m
        cfg.extra["stability"] = ns.stability
    elif cmd == "scan":
        cfg.m_min, cfg.m_max = ns.m_min, ns.m_max
        cfg.extra["stability"] = ns.stability
    elif cmd == "lemma3":
        cfg.m_min, cfg.m_max = (ns.m, ns.m) if ns.m is not None else (ns.m_min, ns.m_max)
        cfg.extra["grid_step"] = ns.grid_step
    elif cmd == "lemma4":
        if ns.q_max < 3:
            raise ConfigError("--q-max must be >= 3")
        cfg.extra.update(q_max=ns.q_max, grid_step=ns.grid_step)
    elif cmd == "fg":
        cfg.extra["grid_step"] = ns.grid_step
    elif cmd == "maple":
        if ns.m_top < 2:
            raise ConfigError("--m-top must be >= 2")
        cfg.extra["m_top"] = ns.m_top
    elif cmd == "loggas":
        cfg.m_min = cfg.m_max = ns.m
        if any(N < 2 or N % 2 for N in ns.N) or sorted(ns.N) != ns.N:
            raise ConfigError("--N values must be even, >= 2 and ascending")
        cfg.extra.update(kappa=ns.kappa, N=list(ns.N), method=ns.method,
                         samples=ns.samples, cross_check=ns.cross_check)
    if cfg.fmt == "csv" and cmd not in ("verify", "scan", "loggas"):
        raise ConfigError(f"csv output is not available for {cmd}")
    cfg.validate()
    return cfg


def _destination(cfg: RunConfig) -> Path | None:
    if cfg.output is not None:
        return cfg.output
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env) / f"{cfg.command}.{cfg.fmt}"
    return None


def run(cfg: RunConfig) -> int:
    """Execute ``cfg``; write the report and return the exit status."""
    start = time.perf_counter()
    try:
        doc, csv_text = build_report(cfg)
    except QuadratureError as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LogGasError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = csv_text if csv_text is not None else dumps_json(doc)
    dest = _destination(cfg)
    if dest is None:
        sys.stdout.write(text)
    else:
        write_atomic(dest, text)
    if cfg.command == "maple":
        rep = doc["reports"][0]
        print(f"min u(x_m) + 1/(4m) = {fmt_float(rep['minimum'])} at m = {rep['argmin']} "
              f"(> 0.0129: {rep['passed']})", file=sys.stderr)
    elapsed = time.perf_counter() - start
    print(f"[{cfg.command}] {'PASS' if doc['passed'] else 'FAIL'} "
          f"({elapsed:.2f}s, jobs={cfg.jobs})", file=sys.stderr)
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = make_parser()
    ns = parser.parse_args(argv)
    fmt_given = any(a == "--format" or a.startswith("--format=") for a in argv)
    try:
        cfg = config_from_args(ns, fmt_given)
    except ConfigError as exc:
        print(f"rmtbound: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
