"""Command-line front end.

Commands::

    stokesmorse hilbert INPUT.csv --out OUT.csv
    stokesmorse count "trig: 1 + cos t" --m 64 [--converge] [--alpha 10]
    stokesmorse weyl "const:1" --alphas 10,20,50
    stokesmorse branch --config problem.yaml --amplitudes 0.02:0.2:0.02 --out branch.jsonl [--resume]
    stokesmorse verify --out results/

Potentials are written as ``const:c``, ``trig: a0 + a1 cos t + b2 sin 2t ...``
or ``file:path`` (CSV with columns ``t, V`` or a single column ``V``).

Exit codes: 0 success, 1 verification or computation failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import re
import sys
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import __version__, acceptance, negcount, spectral, waves
from .errors import ConfigError, StokesMorseError
from .spectral import PeriodicFunction

log = logging.getLogger("stokesmorse")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    """Settings of one command invocation.

    ``config_hash`` covers every field except output paths, so the same
    experiment written to a different place carries the same hash.
    """

    command: str
    m: int | None = None
    grid: int | None = None
    tol: float = 1e-10
    amplitudes: list = field(default_factory=list)
    alphas: list = field(default_factory=list)
    seed: int = 0
    out: str | None = None
    potential: str | None = None
    problem: dict = field(default_factory=lambda: {"stokes": 1.0})
    nu0_cap: float = 50.0
    workers: int = 1
    max_m: int = 512

    def validate(self):
        if not (isinstance(self.tol, (int, float)) and self.tol > 0 and math.isfinite(self.tol)):
            raise ConfigError(f"tolerance must be positive, got {self.tol!r}")
        if self.m is not None and int(self.m) < 1:
            raise ConfigError("m must be a positive integer")
        if self.grid is not None and (self.grid < 8 or self.grid & (self.grid - 1)):
            raise ConfigError(f"grid must be a power of two >= 8, got {self.grid}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not self.nu0_cap > 1:
            raise ConfigError("nu0_cap must exceed 1")
        if any(a <= 0 for a in self.alphas):
            raise ConfigError("alphas must be positive")
        return self

    def hashable(self):
        d = dataclasses.asdict(self)
        d.pop("out", None)
        d.pop("workers", None)
        return d

    @property
    def config_hash(self):
        blob = json.dumps(self.hashable(), sort_keys=True, default=float).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def stamp(self):
        return {"config_hash": self.config_hash, "seed": int(self.seed), "version": __version__}


def load_config_file(path):
    """YAML or JSON mapping of :class:`ExperimentConfig` fields."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def build_problem(spec):
    """:class:`~stokesmorse.waves.BernoulliProblem` from a config mapping.

    ``{"stokes": mu}`` selects the built-in Stokes profile; otherwise
    ``{"profile": [1, c1, c2, ...], "mu": mu, "rho": ..., "m1": ..., "m2": ...}``
    gives the coefficient table of ``l`` in ``lambda(y) = l(mu y)``.
    """
    if not isinstance(spec, dict):
        raise ConfigError("problem must be a mapping")
    if "stokes" in spec:
        return waves.BernoulliProblem.stokes(float(spec["stokes"]))
    try:
        return waves.BernoulliProblem(
            profile=tuple(spec["profile"]),
            mu=float(spec.get("mu", 1.0)),
            rho=float(spec.get("rho", 1.0)),
            m1=spec.get("m1"),
            m2=spec.get("m2"),
            name=str(spec.get("name", "bernoulli")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid problem definition: {exc}") from exc


# ---------------------------------------------------------------------------
# potential grammar

_TERM = re.compile(
    r"""\s*(?P<sign>[+-])?\s*
        (?P<coef>(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?)?\s*\*?\s*
        (?:(?P<fn>cos|sin)\s*\(?\s*(?P<k>\d+)?\s*\*?\s*t\s*\)?)?\s*""",
    re.VERBOSE,
)


def parse_trig(text):
    """Coefficients of ``a0 + sum (a_k cos kt + b_k sin kt)`` from text."""
    pos = 0
    text = text.strip()
    a, b = {}, {}
    first = True
    while pos < len(text):
        mt = _TERM.match(text, pos)
        if mt is None or mt.end() == pos or (mt.group("coef") is None and mt.group("fn") is None):
            raise ConfigError(f"cannot parse trig potential near {text[pos:]!r}")
        if not first and mt.group("sign") is None:
            raise ConfigError(f"missing + or - before {text[pos:mt.end()].strip()!r}")
        sign = -1.0 if mt.group("sign") == "-" else 1.0
        coef = sign * (float(mt.group("coef")) if mt.group("coef") else 1.0)
        if mt.group("fn") is None:
            a[0] = a.get(0, 0.0) + coef
        else:
            k = int(mt.group("k") or 1)
            tgt = a if mt.group("fn") == "cos" else b
            if mt.group("fn") == "sin" and k == 0:
                continue
            tgt[k] = tgt.get(k, 0.0) + coef
        pos = mt.end()
        first = False
    kmax = max([0, *a, *b])
    ca = np.zeros(kmax + 1)
    cb = np.zeros(kmax + 1)
    for k, v in a.items():
        ca[k] = v
    for k, v in b.items():
        cb[k] = v
    return ca, cb


def _read_table(path):
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if rows and not _numeric(rows[0][0]):
        rows = rows[1:]
    try:
        return np.array([[float(x) for x in r] for r in rows])
    except ValueError as exc:
        raise ConfigError(f"non-numeric data in {path}") from exc


def _numeric(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def _check_uniform(t, path):
    n = t.size
    d = np.diff(t)
    h = 2 * math.pi / n
    if np.max(np.abs(d - h)) > 1e-8 * h:
        raise ConfigError(
            f"{path}: grid is not a uniform {n}-point periodic grid; detected spacing "
            f"{d.min():.6g}..{d.max():.6g}, expected {h:.6g}"
        )


def load_samples(path):
    """Periodic samples from CSV ``t, u`` (uniform grid checked) or a single column."""
    data = _read_table(path)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ConfigError(f"{path}: no data")
    if data.shape[1] >= 2:
        _check_uniform(data[:, 0], path)
        vals = data[:, 1]
    else:
        vals = data[:, 0]
    try:
        return PeriodicFunction(vals)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_potential(spec, grid=None):
    """Potential from ``const:c``, ``trig: ...`` or ``file:path``."""
    kind, sep, body = spec.partition(":")
    kind = kind.strip().lower()
    if not sep:
        raise ConfigError(f"potential spec {spec!r} needs a prefix const:, trig: or file:")
    if kind == "const":
        try:
            c = float(body)
        except ValueError as exc:
            raise ConfigError(f"bad constant {body!r}") from exc
        V = PeriodicFunction.constant(c, grid or 8)
    elif kind == "trig":
        ca, cb = parse_trig(body)
        n = grid or spectral.next_pow2(max(8, 4 * ca.size))
        if 2 * (ca.size - 1) >= n:
            raise ConfigError(f"grid {n} too coarse for degree {ca.size - 1}")
        t = spectral.grid(n)
        k = np.arange(ca.size)
        V = PeriodicFunction(np.cos(np.multiply.outer(t, k)) @ ca + np.sin(np.multiply.outer(t, k)) @ cb)
    elif kind == "file":
        V = load_samples(body.strip())
        if grid:
            V = V.resample(grid)
    else:
        raise ConfigError(f"unknown potential kind {kind!r}")
    try:
        return negcount.Potential(V)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_list(text):
    """``"0.1,0.2"`` or a range ``"start:stop:step"`` (stop included)."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigError(f"range must be start:stop:step with step > 0, got {text!r}")
        start, stop, step = parts
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(max(count, 0))]
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse list {text!r}") from exc


# ---------------------------------------------------------------------------
# output


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _dumps(obj):
    return json.dumps(_jsonable(obj), sort_keys=True)


def _prepare_out(path):
    d = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(d):
        os.makedirs(d, exist_ok=True)
        log.info("created output directory %s", d)


def _sibling(path, suffix):
    root, _ = os.path.splitext(path)
    return root + suffix


# ---------------------------------------------------------------------------
# commands


def cmd_hilbert(args, cfg):
    u = load_samples(args.input)
    cu = spectral.hilbert(u)
    norms = {
        "l1": spectral.l1_norm(u),
        "l2": spectral.l2_norm(u),
        "linf": spectral.linf_norm(u),
        "h_half": spectral.h_half_norm(u),
        "e0": spectral.e0_form(u),
        "n": u.n,
        **cfg.stamp(),
    }
    data = _read_table(args.input)
    t = data[:, 0] if data.shape[1] >= 2 else u.t
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "Cu"])
    for ti, ci in zip(t, cu.samples):
        w.writerow([repr(float(ti)), repr(float(ci))])
    if cfg.out:
        _prepare_out(cfg.out)
        with open(cfg.out, "w") as fh:
            fh.write(buf.getvalue())
        with open(_sibling(cfg.out, ".json"), "w") as fh:
            fh.write(_dumps(norms) + "\n")
    else:
        sys.stdout.write(buf.getvalue())
    print(_dumps({"norms": norms}))
    return EXIT_OK


def cmd_count(args, cfg):
    pot = parse_potential(cfg.potential, cfg.grid)
    alpha = float(args.alpha)
    m = cfg.m or negcount.default_truncation(pot, alpha)
    if args.converge:
        rep = negcount.converged_n_minus(pot, m, alpha, max_m=max(cfg.max_m, m))
    else:
        rep = negcount.n_minus(pot, m, alpha)
    rep.label = cfg.potential
    line = _dumps({**rep.to_dict(), **cfg.stamp()})
    if cfg.out:
        _prepare_out(cfg.out)
        with open(cfg.out, "a") as fh:
            fh.write(line + "\n")
    print(line)
    return EXIT_OK


def cmd_weyl(args, cfg):
    if not cfg.alphas:
        raise ConfigError("weyl needs a non-empty --alphas list")
    pot = parse_potential(cfg.potential, cfg.grid)
    pts = negcount.weyl_slope(pot, cfg.alphas, m=cfg.m, check=not args.no_check, max_m=max(cfg.max_m, 16384))
    buf = io.StringIO()
    buf.write(f"# config_hash={cfg.config_hash} seed={cfg.seed} potential={cfg.potential}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "count", "ratio", "target"])
    for p in pts:
        w.writerow([repr(p.alpha), p.count, repr(p.ratio), repr(p.target)])
    if cfg.out:
        _prepare_out(cfg.out)
        with open(cfg.out, "w") as fh:
            fh.write(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


BRANCH_CSV_FIELDS = ["a", "mu", "residual", "nu", "nu0", "morse", "morse_upper", "n_minus_plotnikov", "v_l1", "v_b"]


def _branch_record(sol, diag, cfg):
    rec = {
        "a": diag.a,
        "mu": diag.mu,
        "residual": diag.residual,
        "nu": diag.nu,
        "nu0": diag.nu0,
        "morse": diag.morse,
        "morse_upper": diag.morse_upper,
        "n_minus_plotnikov": diag.n_minus_plotnikov,
        "n_minus_upper": diag.n_minus_upper,
        "counts_agree": diag.morse == diag.n_minus_plotnikov,
        "bound_ratios": diag.bound_ratios,
        "lower_expr": diag.lower_expr,
        "upper_expr": diag.upper_expr,
        "v_l1": diag.v_l1,
        "v_b": diag.v_b,
        "checks": diag.checks,
        "n": sol.n,
        "coeffs": sol.cosines,
        **cfg.stamp(),
    }
    return rec


def _read_branch(path):
    header, records = None, []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if "header" in obj:
                header = obj["header"]
            else:
                records.append(obj)
    return header, records


def cmd_branch(args, cfg):
    problem = build_problem(cfg.problem)
    n = cfg.grid or 256
    m = cfg.m or 32
    header = {"problem": cfg.problem, "grid": n, "m": m, "nu0_cap": cfg.nu0_cap, "tol": cfg.tol, **cfg.stamp()}
    start = None
    mode = "w"
    if args.resume:
        if not cfg.out or not os.path.exists(cfg.out):
            raise ConfigError("--resume needs an existing --out branch file")
        old_header, records = _read_branch(cfg.out)
        if old_header is not None and old_header.get("config_hash") != cfg.config_hash:
            log.warning("resuming with a different configuration hash")
        if records:
            last = records[-1]
            start = waves.WaveSolution.from_dict(last, problem)
            n = start.n
        mode = "a"
    br = waves.branch_continuation(problem, cfg.amplitudes, n=n, nu0_cap=cfg.nu0_cap, start=start, tol=cfg.tol)
    diags = waves.diagnose_branch(br.solutions, m=m, max_m=cfg.max_m, workers=cfg.workers)
    lines = [] if mode == "a" else [_dumps({"header": header})]
    rows = []
    for sol, d in zip(br.solutions, diags):
        rec = _branch_record(sol, d, cfg)
        lines.append(_dumps(rec))
        rows.append(rec)
    summary = {
        "points": len(rows),
        "stop_reason": br.stop_reason,
        "disagreements": sum(not r["counts_agree"] for r in rows),
        **cfg.stamp(),
    }
    if rows:
        summary["M1_fit"] = min(r["morse"] / r["lower_expr"] for r in rows)
        summary["M2_fit"] = max(r["morse"] / r["upper_expr"] for r in rows)
    if cfg.out:
        _prepare_out(cfg.out)
        with open(cfg.out, mode) as fh:
            for ln in lines:
                fh.write(ln + "\n")
        csv_path = _sibling(cfg.out, ".csv")
        new_csv = mode == "w" or not os.path.exists(csv_path)
        with open(csv_path, "w" if new_csv else "a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if new_csv:
                fh.write(f"# config_hash={cfg.config_hash} seed={cfg.seed}\n")
                w.writerow(BRANCH_CSV_FIELDS)
            for r in rows:
                w.writerow([_jsonable(r[k]) for k in BRANCH_CSV_FIELDS])
    else:
        for ln in lines:
            print(ln)
    print(_dumps({"summary": summary}))
    return EXIT_OK


def cmd_verify(args, cfg):
    out_dir = cfg.out or "verify-results"
    if not os.path.isdir(out_dir):
        os.makedirs(out_dir, exist_ok=True)
        log.info("created output directory %s", out_dir)
    only = {int(x) for x in parse_list(args.only)} if args.only else None
    results = acceptance.run_all(seed=cfg.seed, only=only, log=lambda s: print(s, flush=True))
    summary = {
        "passed": all(r.passed for r in results),
        "criteria": [
            {"number": r.number, "name": r.name, "passed": r.passed, "budget_seconds": r.budget,
             "details": {k: v for k, v in r.details.items() if k != "within_budget"}}
            for r in results
        ],
        **cfg.stamp(),
    }
    path = os.path.join(out_dir, "verify_summary.json")
    with open(path, "w") as fh:
        fh.write(json.dumps(_jsonable(summary), sort_keys=True, indent=2) + "\n")
    print(f"summary written to {path}")
    return EXIT_OK if summary["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="stokesmorse", description="Morse-index experiments for Stokes waves.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML or JSON file with experiment settings")
        sp.add_argument("--m", type=int, help="Galerkin truncation order")
        sp.add_argument("--grid", type=int, help="grid size N (power of two)")
        sp.add_argument("--tol", type=float, help="solver tolerance")
        sp.add_argument("--seed", type=int, help="64-bit seed recorded in every output")
        sp.add_argument("--out", help="output path")

    sp = sub.add_parser("hilbert", help="periodic Hilbert transform of sampled data")
    sp.add_argument("input")
    common(sp)

    sp = sub.add_parser("count", help="negative-eigenvalue count of q_V")
    sp.add_argument("potential")
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--converge", action="store_true", help="double m until the count is stable")
    common(sp)

    sp = sub.add_parser("weyl", help="counts along an alpha sweep")
    sp.add_argument("potential")
    sp.add_argument("--alphas", default="")
    sp.add_argument("--no-check", action="store_true", help="skip the recount at doubled truncation")
    common(sp)

    sp = sub.add_parser("branch", help="continue a wave branch and record diagnostics")
    sp.add_argument("--amplitudes", help="list a1,a2,... or range start:stop:step")
    sp.add_argument("--stokes", type=float, help="Stokes problem with this mu (overrides config)")
    sp.add_argument("--nu0-cap", type=float)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--resume", action="store_true", help="continue from the last record of --out")
    common(sp)

    sp = sub.add_parser("verify", help="run the acceptance experiments")
    sp.add_argument("--only", help="comma-separated criterion numbers")
    common(sp)
    return p


def make_config(args):
    data = load_config_file(args.config) if getattr(args, "config", None) else {}
    data["command"] = args.command
    for name in ("m", "grid", "tol", "seed", "out", "nu0_cap", "workers"):
        val = getattr(args, name, None)
        if val is not None:
            data[name] = val
    if getattr(args, "potential", None):
        data["potential"] = args.potential
    if getattr(args, "alphas", None):
        data["alphas"] = parse_list(args.alphas)
    if getattr(args, "amplitudes", None) is not None:
        data["amplitudes"] = parse_list(args.amplitudes)
    if getattr(args, "stokes", None) is not None:
        data["problem"] = {"stokes": args.stokes}
    try:
        cfg = ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.amplitudes = [float(a) for a in cfg.amplitudes]
    cfg.alphas = [float(a) for a in cfg.alphas]
    return cfg.validate()


COMMANDS = {"hilbert": cmd_hilbert, "count": cmd_count, "weyl": cmd_weyl, "branch": cmd_branch, "verify": cmd_verify}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = make_config(args)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StokesMorseError, ArithmeticError) as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
