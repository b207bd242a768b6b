"""Command-line entry point.

Exit status: 0 when every check passes, 1 when a check fails (the report
names it), 2 for malformed input or invalid configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .matrixio import MatrixFormatError, config_hash, dumps_report, load_json, load_matrix

VERBS = (
    "membership",
    "dilate-disc",
    "dilate-row",
    "dilate-dc",
    "dilate-annulus",
    "annulus-map",
    "inner",
    "kappa",
    "verify",
)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    verb: str
    matrix: list = field(default_factory=list)
    r: float = 0.5
    q: float = 0.25
    tol: float = 1e-8
    algebraic_tol: float = 1e-10
    cluster_tol: float = 1e-8
    quadrature_tol: float = 1e-6
    modes: int = 64
    grid: int = 2048
    ell: int = 4
    m: int = 100
    rho: float = 0.9
    eps: float = 1e-3
    lam: float = 1.0
    samples: int = 1024
    seed: int = 7
    workers: int = 1
    budget: int = 10_000
    dims: tuple = (2, 4, 8, 16)
    n_max: int = 6
    zeros: str = None
    at: str = None
    circle: str = "outer"
    action: str = None
    quick: bool = False
    only: tuple = None
    out: str = None
    csv: str = None

    def validate(self):
        if self.verb not in VERBS:
            raise ConfigError(f"unknown verb {self.verb!r}")
        for name in ("modes", "grid", "ell", "m", "samples", "n_max", "workers"):
            if int(getattr(self, name)) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.budget < 0:
            raise ConfigError("budget must be non-negative")
        for name in ("tol", "algebraic_tol", "cluster_tol", "quadrature_tol", "eps"):
            if not float(getattr(self, name)) > 0:
                raise ConfigError(f"{name} must be strictly positive")
        if not (0 < self.r < 1):
            raise ConfigError("r must lie in (0, 1)")
        if not (0 < self.q < 1):
            raise ConfigError("q must lie in (0, 1)")
        if not (0 < self.rho < 1):
            raise ConfigError("rho must lie in (0, 1)")
        if any(int(d) <= 0 for d in self.dims):
            raise ConfigError("dims must be positive")
        if self.circle not in ("outer", "inner"):
            raise ConfigError("circle must be 'outer' or 'inner'")

    def replay(self):
        """Fields that determine the report (output paths excluded)."""
        d = asdict(self)
        d.pop("out")
        d.pop("csv")
        return d


# ------------------------------------------------------------------ parsing


def _dims(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from e


def build_parser():
    from .acceptance import BASE_SEED
    from .kappa import default_workers

    p = argparse.ArgumentParser(prog="annulus-dilation", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    base = argparse.ArgumentParser(add_help=False)
    base.add_argument("--config", help="JSON file whose keys override the flags")
    base.add_argument("--out", help="write the report here instead of stdout")
    base.add_argument("--tol", type=float, default=1e-8)
    common = argparse.ArgumentParser(add_help=False, parents=[base])
    common.add_argument("--seed", type=int, default=7)
    sub = p.add_subparsers(dest="verb", required=True, metavar="VERB")

    s = sub.add_parser("membership", parents=[common], help="annulus membership flags for one matrix")
    s.add_argument("--matrix", action="append", required=True)
    s.add_argument("--r", type=float, default=0.5)

    s = sub.add_parser("dilate-disc", parents=[common], help="unitary dilation of a strict contraction")
    s.add_argument("--matrix", action="append", required=True)
    s.add_argument("--modes", type=int, default=64)
    s.add_argument("--grid", type=int, default=2048)
    s.add_argument("--rho", type=float, default=0.95)

    s = sub.add_parser("dilate-row", parents=[common], help="isometric lift of a row contraction")
    s.add_argument("--matrix", action="append", required=True, help="repeat once per entry of the row")
    s.add_argument("--ell", type=int, default=4)
    s.add_argument("--modes", type=int, default=64)
    s.add_argument("--grid", type=int, default=2048)
    s.add_argument("--rho", type=float, default=0.95)

    s = sub.add_parser("dilate-dc", parents=[common], help="lift of a doubly commuting tuple")
    s.add_argument("--matrix", action="append", required=True, help="repeat once per operator")
    s.add_argument("--modes", type=int, default=64)
    s.add_argument("--grid", type=int, default=2048)
    s.add_argument("--rho", type=float, default=0.95)

    s = sub.add_parser("dilate-annulus", parents=[common], help="boundary dilation of a QA element")
    s.add_argument("--matrix", action="append", required=True)
    s.add_argument("--r", type=float, default=0.5)
    s.add_argument("--m", type=int, default=100)
    s.add_argument("--modes", type=int, default=128)
    s.add_argument("--grid", type=int, default=4096)
    s.add_argument("--rho", type=float, default=0.9)
    s.add_argument("--eps", type=float, default=1e-3)

    s = sub.add_parser("annulus-map", parents=[common], help="CSV samples of the normalized covering map")
    s.add_argument("--r", type=float, default=0.5)
    s.add_argument("--lambda", dest="lam", type=float, default=1.0)
    s.add_argument("--samples", type=int, default=1024)
    s.add_argument("--eps", type=float, default=1e-3)

    s = sub.add_parser("inner", parents=[common], help="evaluate or tabulate an annulus inner function")
    s.add_argument("action", choices=("eval", "table"))
    s.add_argument("--q", type=float, default=0.5)
    s.add_argument("--zeros", help="JSON list of zeros, each a number or [re, im]")
    s.add_argument("--at", help="JSON list of evaluation points (eval)")
    s.add_argument("--circle", choices=("outer", "inner"), default="outer")
    s.add_argument("--samples", type=int, default=256)

    s = sub.add_parser("kappa", parents=[common], help="search for large ||psi(J)|| on boundary operators")
    s.add_argument("--q", type=float, default=0.25)
    s.add_argument("--budget", type=int, default=10_000)
    s.add_argument("--dims", type=_dims, default=(2, 4, 8, 16))
    s.add_argument("--n-max", dest="n_max", type=int, default=6)
    s.add_argument("--workers", type=int, default=default_workers())
    s.add_argument("--csv", help="write every evaluation here")

    s = sub.add_parser("verify", parents=[base], help="run the acceptance battery")
    s.add_argument("--seed", type=int, default=BASE_SEED)
    s.add_argument("--quick", action="store_true")
    s.add_argument("--only", type=_dims, default=None, help="comma-separated criterion ids")
    return p


def config_from_args(ns):
    values = {k: v for k, v in vars(ns).items() if k != "config" and v is not None}
    if getattr(ns, "config", None):
        try:
            override = load_json(ns.config)
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {ns.config}") from e
        if not isinstance(override, dict):
            raise ConfigError("config file must hold a JSON object")
        known = set(RunConfig.__dataclass_fields__)
        unknown = set(override) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(override)
    if "lambda" in values:
        values["lam"] = values.pop("lambda")
    for key in ("dims", "only"):
        if isinstance(values.get(key), list):
            values[key] = tuple(values[key])
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------- helpers


def _one_matrix(cfg):
    if len(cfg.matrix) != 1:
        raise ConfigError(f"{cfg.verb} takes exactly one --matrix")
    return load_matrix(cfg.matrix[0])


def _points(obj, what):
    if isinstance(obj, dict) and what in obj:
        obj = obj[what]
    if not isinstance(obj, list) or not obj:
        raise MatrixFormatError(f"{what}: expected a non-empty JSON list")
    out = []
    for i, x in enumerate(obj):
        if isinstance(x, (int, float)) and not isinstance(x, bool):
            out.append(complex(x))
        elif isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
            out.append(complex(x[0], x[1]))
        else:
            raise MatrixFormatError(f"{what}[{i}]: expected a number or [re, im], got {x!r}")
    arr = np.array(out)
    if not np.all(np.isfinite(arr)):
        raise MatrixFormatError(f"{what}: non-finite entry")
    return arr


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _emit(text, path):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _tol_policy(cfg):
    from .linalg import TolerancePolicy

    return TolerancePolicy(cfg.algebraic_tol, cfg.cluster_tol, cfg.quadrature_tol)


# ------------------------------------------------------------------ verbs


def run_membership(cfg):
    from .annuli import membership_report
    from .params import AnnulusParam

    T = _one_matrix(cfg)
    rep = membership_report(T, AnnulusParam(cfg.r), cfg.tol)
    out = rep.to_dict()
    violations = rep.chain_violations()
    out["failed"] = violations
    return out, not violations


def _lift_report(rep, ok):
    return {"report": asdict(rep), "failed": [] if ok else [type(rep).__name__]}, ok


def run_dilate_disc(cfg):
    from .disc import verify_sznagy

    T = _one_matrix(cfg)
    rep = verify_sznagy(T, N=cfg.modes, M=cfg.grid, rho=cfg.rho)
    return _lift_report(rep, rep.passed(cfg.quadrature_tol))


def run_dilate_row(cfg):
    from .disc import nelson_row

    Ts = [load_matrix(p) for p in cfg.matrix]
    rep = nelson_row(Ts, ell=cfg.ell, N=cfg.modes, M=cfg.grid, rho=cfg.rho)
    return _lift_report(rep, rep.passed(tol=cfg.quadrature_tol))


def run_dilate_dc(cfg):
    from .disc import nelson_doubly_commuting

    Ts = [load_matrix(p) for p in cfg.matrix]
    rep = nelson_doubly_commuting(Ts, N=cfg.modes, M=cfg.grid, rho=cfg.rho, seed=cfg.seed, tol=cfg.algebraic_tol)
    return _lift_report(rep, rep.passed(quad_tol=cfg.quadrature_tol))


def run_dilate_annulus(cfg):
    from .params import AnnulusParam
    from .qa import dilate

    T = _one_matrix(cfg)
    if cfg.modes >= cfg.grid // 4:
        raise ConfigError(f"--modes must be below grid/4 = {cfg.grid // 4}")
    N_list = tuple(sorted({max(2, cfg.modes // 4), max(2, cfg.modes // 2), cfg.modes}))
    model, rep = dilate(T, AnnulusParam(cfg.r), m=cfg.m, N_list=N_list, M=cfg.grid, rho=cfg.rho, eps=cfg.eps, tol=_tol_policy(cfg))
    checks = {
        "compression": rep.compression.max_error <= cfg.quadrature_tol,
        "boundary_law": rep.trend.boundary_law <= 1e-8,
        "defect_trend": rep.trend.non_increasing,
    }
    out = rep.to_dict()
    out["spectral_values"] = model.spectral_values
    out["checks"] = checks
    out["failed"] = [k for k, v in checks.items() if not v]
    return out, all(checks.values())


def run_annulus_map(cfg):
    from .geometry import boundary_partition, lambda_lift
    from .params import AnnulusParam

    lm = lambda_lift(cfg.lam, AnnulusParam(cfg.r))
    part = boundary_partition(lm, cfg.samples, cfg.eps)
    label = {1: "inner", -1: "outer", 0: "excluded"}
    rows = [
        (t, v.real, v.imag, abs(v), label[int(c)])
        for t, v, c in zip(part.theta, part.values, part.arc_class)
    ]
    ok = part.classification_error <= 1e-8
    return _csv_text(["theta", "re", "im", "modulus", "arc"], rows), ok


def _load_psi(cfg):
    from .inner import psi_W, validate_zero_set

    if not cfg.zeros:
        raise ConfigError("--zeros is required")
    W = _points(load_json(cfg.zeros), "zeros")
    return psi_W(validate_zero_set(W, cfg.q))


def run_inner(cfg):
    from .inner import boundary_modulus_error

    psi = _load_psi(cfg)
    if cfg.action == "eval":
        if not cfg.at:
            raise ConfigError("inner eval needs --at")
        z = _points(load_json(cfg.at), "points")
        vals = psi(z)
        return {
            "spec": psi.spec.to_dict(),
            "points": [[p.real, p.imag] for p in z],
            "values": [[v.real, v.imag] for v in vals],
            "modulus": np.abs(vals).tolist(),
        }, True
    radius = 1.0 if cfg.circle == "outer" else cfg.q
    theta = 2.0 * np.pi * np.arange(cfg.samples) / cfg.samples
    vals = psi(radius * np.exp(1j * theta))
    rows = [(t, v.real, v.imag, abs(v)) for t, v in zip(theta, vals)]
    ok = max(boundary_modulus_error(psi, cfg.q, cfg.samples).values()) <= cfg.quadrature_tol
    return _csv_text(["theta", "re", "im", "modulus"], rows), ok


def run_kappa(cfg):
    from .kappa import REFERENCE_PA, REFERENCE_QA, UPPER_BOUND, search_kappa

    res = search_kappa(q=cfg.q, budget=cfg.budget, seed=cfg.seed, dims=tuple(cfg.dims), n_max=cfg.n_max, workers=cfg.workers)
    if cfg.csv:
        Path(cfg.csv).write_text(_csv_text(["value", "fn", "op", "tail"], res.evaluations), encoding="utf-8")
    out = {
        "certificate": res.best.to_dict(),
        "evaluations": len(res.evaluations),
        "refusals": res.refusals,
        "max_value": res.max_value,
        "upper_bound": UPPER_BOUND,
        "reference_lines": {"QA_lower_bound": REFERENCE_QA, "PA_value": REFERENCE_PA},
        "violations": [c.to_dict() for c in res.violations],
        "failed": ["upper_bound"] if res.violations else [],
    }
    return out, not res.violations


def run_verify(cfg):
    from .acceptance import verify_suite

    results = verify_suite(quick=cfg.quick, only=cfg.only, seed=cfg.seed)
    for r in results:
        print(r.line(), file=sys.stderr)
    out = {
        "criteria": [r.to_dict() for r in results],
        "failed": [r.cid for r in results if not r.passed],
    }
    return out, all(r.passed for r in results)


RUNNERS = {
    "membership": run_membership,
    "dilate-disc": run_dilate_disc,
    "dilate-row": run_dilate_row,
    "dilate-dc": run_dilate_dc,
    "dilate-annulus": run_dilate_annulus,
    "annulus-map": run_annulus_map,
    "inner": run_inner,
    "kappa": run_kappa,
    "verify": run_verify,
}


def _split_timing(obj, sidecar):
    """Move wall-clock fields out of the report so reruns are byte-identical."""
    if isinstance(obj, dict):
        for k in list(obj):
            if k == "elapsed":
                sidecar.append(obj.pop(k))
            else:
                _split_timing(obj[k], sidecar)
    elif isinstance(obj, list):
        for v in obj:
            _split_timing(v, sidecar)


def run(cfg):
    """Execute one verb; returns the exit code."""
    result, ok = RUNNERS[cfg.verb](cfg)
    if isinstance(result, str):
        _emit(result, cfg.out)
        return 0 if ok else 1
    timing = []
    _split_timing(result, timing)
    result["config"] = cfg.replay()
    result["config_hash"] = config_hash(cfg.replay())
    result["seed"] = cfg.seed
    result["passed"] = ok
    _emit(dumps_report(result), cfg.out)
    if cfg.out and timing:
        Path(str(cfg.out) + ".timing.json").write_text(json.dumps({"elapsed": timing}), encoding="utf-8")
    return 0 if ok else 1


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)  # exits 2 on unknown verbs and bad flags
    try:
        cfg = config_from_args(ns)
        return run(cfg)
    except (ConfigError, MatrixFormatError, FileNotFoundError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:  # domain preconditions on the inputs
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
