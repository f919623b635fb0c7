"""Command-line front end: redundancy sweeps, the Z-channel table, audits and mixture dumps.

Exit codes: 0 on success, 1 when a certified claim fails, 2 on a usage or
configuration error.  Tables are CSV with a header row; reports are JSON
carrying a ``schema_version``.  Floats are printed with 12 significant
digits so identical configurations give byte-identical output.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Sequence

from . import audit
from .errors import DomainError
from .measures import check_lambda
from .mixtures import ModifiedPriorSpec, jeffreys_mixture, modified_mixture_binary, modified_mixture_general
from .simplex import to_base
from .solver import (
    DEFAULT_GAP_THRESHOLD,
    DEFAULT_RESOLUTION,
    asymptotic_prediction,
    classical_redundancy_r0,
    renyi_redundancy,
    shtarkov_regret,
    zchannel_optimal_prior,
    zchannel_solve,
    zchannel_value,
)

SCHEMA_VERSION = 1
ORDER_SLACK = 1e-6
ZCHANNEL_TOL = 1e-6

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return f"{float(x):.12g}"


def _round(x):
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        return float(f"{x:.12g}") if math.isfinite(x) else str(x)
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    return x


def dump_json(payload: dict) -> str:
    return json.dumps(_round(payload), indent=2, sort_keys=True) + "\n"


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


@dataclass
class SweepConfig:
    """Flat sweep configuration; values are in nats unless ``log_base`` says otherwise."""

    k: int = 2
    lambdas: list[float] = field(default_factory=lambda: [1.0])
    ns: list[int] = field(default_factory=lambda: [1])
    resolution: int | None = None
    tol: float = DEFAULT_GAP_THRESHOLD
    c: float = 0.25
    epsilon: float = 0.05
    delta: float = 0.1
    csv: str | None = None
    json: str | None = None
    log_base: str = "nats"
    workers: int = 1

    # JSON keys that differ from field names
    _ALIASES = {"lambda": "lambdas", "n": "ns"}

    def validate(self) -> "SweepConfig":
        if not isinstance(self.k, int) or self.k < 2:
            raise ConfigError(f"k must be an integer >= 2, got {self.k!r}")
        if self.k not in DEFAULT_RESOLUTION and self.resolution is None:
            raise ConfigError(f"no default grid for k={self.k}; set resolution")
        if not self.ns or any(not isinstance(n, int) or n < 1 for n in self.ns):
            raise ConfigError(f"n values must be positive integers, got {self.ns!r}")
        try:
            self.lambdas = sorted(check_lambda(x) for x in self.lambdas)
        except (DomainError, TypeError) as exc:
            raise ConfigError(f"bad lambda list: {exc}") from None
        if not self.lambdas:
            raise ConfigError("at least one lambda is required")
        self.ns = sorted(self.ns)
        if self.resolution is not None and (not isinstance(self.resolution, int) or self.resolution < 1):
            raise ConfigError(f"resolution must be a positive integer, got {self.resolution!r}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if not 0 < self.c < 0.5:
            raise ConfigError("c must lie in (0, 1/2)")
        if not 0 < self.epsilon <= 1:
            raise ConfigError("epsilon must lie in (0, 1]")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        if self.log_base not in ("nats", "bits"):
            raise ConfigError(f"log_base must be 'nats' or 'bits', got {self.log_base!r}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        names = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            key = cls._ALIASES.get(key, key)
            if key not in names:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = value
        for key in ("lambdas", "ns"):
            if key in kwargs and not isinstance(kwargs[key], list):
                kwargs[key] = [kwargs[key]]
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str) -> "SweepConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a flat JSON object")
        return cls.from_dict(data)


def _map(fn: Callable, items: list, workers: int) -> list:
    """Ordered map, on a process pool when ``workers > 1``."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _emit(text: str, path: str | None, out) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)


# ---------------------------------------------------------------------------
# redundancy

def _redundancy_row(job):
    n, k, lam, resolution, tol = job
    return renyi_redundancy(n, k, lam, resolution=resolution, tol=tol)


def cmd_redundancy(cfg: SweepConfig, out=None) -> int:
    out = out or sys.stdout
    jobs = [(n, cfg.k, lam, cfg.resolution, cfg.tol) for n in cfg.ns for lam in cfg.lambdas]
    brackets = _map(_redundancy_row, jobs, cfg.workers)
    b = lambda v: to_base(v, cfg.log_base)
    header = ["n", "k", "lambda", "lower", "upper", "gap", "certified",
              "asymptotic_prediction", "residual", "argmax_theta1"]
    rows, records = [], []
    for br in brackets:
        pred = asymptotic_prediction(br.n, br.k, br.lam) if br.n >= 2 else None
        residual = br.upper - (br.k - 1) / 2 * math.log(br.n / (2 * math.pi))
        rows.append([br.n, br.k, br.lam, b(br.lower), b(br.upper), b(br.gap), br.certified,
                     None if pred is None else b(pred), b(residual), br.argmax_theta[0]])
        rec = br.to_record()
        rec.update(asymptotic_prediction=pred, residual=residual)
        records.append(rec)
    text = csv_text(header, rows)
    _emit(text, cfg.csv, out)
    if cfg.json:
        _emit(dump_json({"schema_version": SCHEMA_VERSION, "command": "redundancy",
                         "log_base": "nats", "config": _config_record(cfg), "records": records}),
              cfg.json, out)
    return EXIT_OK if all(br.certified for br in brackets) else EXIT_FAIL


def _config_record(cfg: SweepConfig) -> dict:
    d = asdict(cfg)
    d.pop("csv"), d.pop("json"), d.pop("workers")
    return d


# ---------------------------------------------------------------------------
# zchannel

def cmd_zchannel(lambdas: Sequence[float], log_base: str = "nats", out=None) -> int:
    out = out or sys.stdout
    rows, ok = [], True
    for lam in sorted(check_lambda(x) for x in lambdas):
        res = zchannel_solve(lam)
        closed = zchannel_value(lam)
        diff = abs(res.value - closed)
        ok &= diff <= ZCHANNEL_TOL
        rows.append([lam, zchannel_optimal_prior(lam), to_base(closed, log_base),
                     to_base(res.value, log_base), float(res.weights[1]), diff])
    header = ["lambda", "prior_closed_form", "value_closed_form", "value_solver",
              "prior_solver", "abs_diff_nats"]
    out.write(csv_text(header, rows))
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# audit

def cmd_audit(names: Sequence[str] | None, c1_scale: float, json_path: str | None,
              workers: int, out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            report = audit.run_battery(names, c1_scale=c1_scale, executor=pool)
    else:
        report = audit.run_battery(names, c1_scale=c1_scale)
    err.write(report.summary_table() + "\n")
    payload = json.loads(report.to_json())
    _emit(dump_json(payload), json_path, out)
    for r in report.failures():
        err.write(f"violation in {r.name}: {fmt(r.max_violation)} at {json.dumps(r.witness)}\n")
    return EXIT_OK if report.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# endpoints

def _endpoint_row(job):
    n, k, lambdas, resolution, tol = job
    r0 = classical_redundancy_r0(n, k)
    brackets = [renyi_redundancy(n, k, lam, resolution=resolution, tol=tol) for lam in lambdas]
    return n, r0, brackets, shtarkov_regret(n, k)


def endpoints_ordered(r0, brackets, rn, slack: float = ORDER_SLACK) -> bool:
    """``R0 <= R_lam <= R_lam' <= r_n`` for increasing lambda, each within ``slack``."""
    chain_lo = [r0.lower] + [br.lower for br in brackets] + [rn]
    chain_hi = [r0.upper] + [br.upper for br in brackets] + [rn]
    return all(chain_lo[i] <= chain_hi[i + 1] + slack for i in range(len(chain_lo) - 1))


def cmd_endpoints(cfg: SweepConfig, out=None) -> int:
    out = out or sys.stdout
    jobs = [(n, cfg.k, cfg.lambdas, cfg.resolution, cfg.tol) for n in cfg.ns]
    results = _map(_endpoint_row, jobs, cfg.workers)
    b = lambda v: to_base(v, cfg.log_base)
    header = ["n", "R0"] + [f"R_{fmt(lam)}" for lam in cfg.lambdas] + ["r_n", "ordered"]
    rows, ok = [], True
    for n, r0, brackets, rn in results:
        ordered = endpoints_ordered(r0, brackets, rn)
        ok &= ordered
        rows.append([n, b(r0.lower)] + [b(br.lower) for br in brackets] + [b(rn), ordered])
    _emit(csv_text(header, rows), cfg.csv, out)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# mixture-dump

def cmd_mixture_dump(kind: str, n: int, k: int, c: float, epsilon: float, path: str | None,
                     out=None) -> int:
    out = out or sys.stdout
    if kind == "jeffreys":
        Q = jeffreys_mixture(n, k)
    else:
        spec = ModifiedPriorSpec(n, epsilon, c, k)
        Q = modified_mixture_binary(spec) if k == 2 else modified_mixture_general(spec)
    header = [f"t{i + 1}" for i in range(k)] + ["log_prob"]
    rows = [list(t) + [v] for t, v in Q.items()]
    _emit(csv_text(header, rows), path, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            lo, hi = part.split(":")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _add_sweep_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON config file; flags override its values")
    p.add_argument("--k", type=int)
    p.add_argument("--lambda", dest="lambdas", type=_floats, help="comma-separated list")
    p.add_argument("--n", dest="ns", type=_ints, help="comma-separated list; a:b is a range")
    p.add_argument("--resolution", type=int, help="lattice denominator (m-1 for k=2)")
    p.add_argument("--tol", type=float, help="certification threshold on the gap, nats")
    p.add_argument("--c", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--csv", help="write the CSV table here instead of stdout")
    p.add_argument("--json", help="write the JSON report here")
    p.add_argument("--log-base", dest="log_base", choices=["nats", "bits"])
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="renyi-redundancy",
                                     description="Minimax Renyi redundancy computations and audits.")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_sweep_flags(sub.add_parser("redundancy", help="certified brackets per (n, lambda)"))
    _add_sweep_flags(sub.add_parser("endpoints", help="R0 <= R_lambda <= r_n per n"))
    z = sub.add_parser("zchannel", help="Z-channel closed forms against the solver")
    z.add_argument("--lambda", dest="lambdas", type=_floats, default=[0.5, 1.0, 2.0, 4.0])
    z.add_argument("--log-base", dest="log_base", choices=["nats", "bits"], default="nats")
    a = sub.add_parser("audit", help="run the inequality audit battery")
    a.add_argument("--only", type=lambda s: [x for x in s.split(",") if x],
                   help="comma-separated audit names")
    a.add_argument("--perturb-c1", dest="c1_scale", type=float, default=1.0,
                   help="multiply C1 by this factor (fault injection)")
    a.add_argument("--json", help="write the JSON report here instead of stdout")
    a.add_argument("--workers", type=int, default=1)
    a.add_argument("--list", action="store_true", help="list audit names and exit")
    m = sub.add_parser("mixture-dump", help="per-type log-probabilities of a mixture as CSV")
    m.add_argument("--kind", choices=["jeffreys", "modified"], default="jeffreys")
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--k", type=int, default=2)
    m.add_argument("--c", type=float, default=0.25)
    m.add_argument("--epsilon", type=float, default=0.05)
    m.add_argument("--out", help="output path")
    return parser


def _sweep_config(args) -> SweepConfig:
    cfg = SweepConfig.load(args.config) if args.config else SweepConfig()
    for f in fields(SweepConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(cfg, f.name, value)
    return cfg.validate()


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "redundancy":
            return cmd_redundancy(_sweep_config(args))
        if args.command == "endpoints":
            return cmd_endpoints(_sweep_config(args))
        if args.command == "zchannel":
            try:
                lambdas = [check_lambda(x) for x in args.lambdas]
            except DomainError as exc:
                raise ConfigError(str(exc)) from None
            for lam in lambdas:
                to_base(lam, args.log_base)
            return cmd_zchannel(lambdas, args.log_base)
        if args.command == "audit":
            if args.list:
                sys.stdout.write("\n".join(audit.BATTERY) + "\n")
                return EXIT_OK
            if not args.c1_scale > 0 or args.workers < 1:
                raise ConfigError("--perturb-c1 must be positive and --workers at least 1")
            unknown = [x for x in args.only or [] if x not in audit.BATTERY]
            if unknown:
                raise ConfigError(f"unknown audits: {unknown}")
            return cmd_audit(args.only, args.c1_scale, args.json, args.workers)
        if args.command == "mixture-dump":
            try:
                return cmd_mixture_dump(args.kind, args.n, args.k, args.c, args.epsilon, args.out)
            except DomainError as exc:
                raise ConfigError(str(exc)) from None
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
