"""Command line entry point: ``oestrip --mode compare --out results``."""

import argparse
import dataclasses
import json
import logging
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bie import bie_table
from .contours import TOL_START, MeshGrading, ProblemParams
from .directivity import OEPipeline, compare, theta_grid
from .errors import ConfigError, NumericalFailure, OEStripError
from .oe_solver import median_residual, residual_points

log = logging.getLogger("oestrip")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
MODES = ("oe", "bie", "compare")
CASES = ("antisym", "sym", "total")
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    k0a: float = 8.0
    k0_im_rel: float = 1e-3
    a: float = 1.0
    eta_re: float = 1.0
    eta_im: float = -0.25
    theta_inc_deg: float = 30.0
    mode: str = "compare"
    case: str = "total"
    n_gamma: int = 200
    substeps: int = 4
    t_min_rel: float = 1e-5
    n_panels: int = 256
    n_theta: int = 181
    delta_theta_deg: float = 3.0
    tol_start: float = TOL_START
    eps_shore_rel: float = 0.05
    eps_deg: float = 1e-10
    residual_points: int = 0
    out: str = "oestrip-out"
    format: str = "csv"

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.case not in CASES:
            raise ConfigError(f"case must be one of {CASES}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        checks = [
            (self.k0a > 0, "k0a must be positive"),
            (0 <= self.k0_im_rel < 1, "k0_im_rel must lie in [0, 1)"),
            (self.a > 0, "a must be positive"),
            (self.eta_im <= 0, "eta_im must be <= 0"),
            (0 < self.theta_inc_deg < 180, "theta_inc_deg must lie in (0, 180)"),
            (self.n_gamma >= 16, "n_gamma must be >= 16"),
            (self.substeps >= 1, "substeps must be >= 1"),
            (0 < self.t_min_rel < 1, "t_min_rel must lie in (0, 1)"),
            (self.n_panels >= 16, "n_panels must be >= 16"),
            (self.n_theta >= 2, "n_theta must be >= 2"),
            (0 < self.delta_theta_deg < 90, "delta_theta_deg must lie in (0, 90)"),
            (0 < self.tol_start < 1, "tol_start must lie in (0, 1)"),
            (self.eps_shore_rel > 0, "eps_shore_rel must be positive"),
            (self.eps_deg > 0, "eps_deg must be positive"),
            (self.residual_points >= 0, "residual_points must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        if complex(self.eta_re, self.eta_im) == 0 and self.mode != "bie":
            raise ConfigError("eta = 0 is only supported in bie mode")
        return self

    def params(self):
        return ProblemParams.from_k0a(self.k0a, complex(self.eta_re, self.eta_im),
                                      math.radians(self.theta_inc_deg), self.a, self.k0_im_rel)

    def echo(self):
        return dataclasses.asdict(self)


def load_config(path):
    """Read a JSON object of RunConfig fields."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError:
        raise
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    known = {f.name: f for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    out = {}
    for key, value in raw.items():
        kind = type(getattr(RunConfig(), key))
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kind) or isinstance(value, bool):
            raise ConfigError(f"{path}: {key} must be {kind.__name__}")
        out[key] = value
    return out


FLAG_FIELDS = {
    "mode": "mode", "case": "case", "k0a": "k0a", "eta_re": "eta_re", "eta_im": "eta_im",
    "theta_inc_deg": "theta_inc_deg", "n_gamma": "n_gamma", "n_panels": "n_panels",
    "n_theta": "n_theta", "out": "out", "format": "format",
}


def build_parser():
    p = argparse.ArgumentParser(prog="oestrip", description="Impedance-strip directivity by the OE-equation method and a BIE reference.")
    p.add_argument("--config", help="JSON file with run settings; flags override it")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--case", choices=CASES)
    p.add_argument("--k0a", type=float)
    p.add_argument("--eta-re", dest="eta_re", type=float)
    p.add_argument("--eta-im", dest="eta_im", type=float)
    p.add_argument("--theta-inc-deg", dest="theta_inc_deg", type=float)
    p.add_argument("--n-gamma", dest="n_gamma", type=int)
    p.add_argument("--n-panels", dest="n_panels", type=int)
    p.add_argument("--n-theta", dest="n_theta", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--verbose", "-v", action="store_true")
    return p


def resolve_config(args):
    values = load_config(args.config) if args.config else {}
    for flag, name in FLAG_FIELDS.items():
        v = getattr(args, flag)
        if v is not None:
            values[name] = v
    return RunConfig(**values).validate()


def _comments(cfg, extra=()):
    lines = [f"config {json.dumps(cfg.echo(), sort_keys=True)}"]
    lines.extend(extra)
    return lines


def _oe_tables(cfg, params, theta):
    t0 = time.perf_counter()
    pipe = OEPipeline(params, N=cfg.n_gamma, grading=MeshGrading(t_min_rel=cfg.t_min_rel),
                      tol_start=cfg.tol_start, substeps=cfg.substeps,
                      delta_theta=math.radians(cfg.delta_theta_deg), eps_deg=cfg.eps_deg)
    table = pipe.directivity(theta, cfg.case)
    log.info("OE stage: %.2f s", time.perf_counter() - t0)
    meta = dict(table.metadata)
    if pipe.alpha_scores is not None:
        meta["alpha_sign_residuals"] = {str(k): v for k, v in pipe.alpha_scores.items()}
    if cfg.residual_points:
        cases = ["antisym", "sym"] if cfg.case == "total" else [cfg.case]
        res = {}
        for c in cases:
            tab = pipe.table(c)
            pts = residual_points(pipe.mesh, cfg.residual_points)
            res[c] = median_residual(tab, pts, eps_rel=cfg.eps_shore_rel)
        meta["median_oe_residual"] = res
    return dataclasses.replace(table, metadata=meta)


def _bie_table(cfg, params, theta):
    t0 = time.perf_counter()
    table = bie_table(params, cfg.n_panels, theta, cfg.case)
    log.info("BIE stage: %.2f s", time.perf_counter() - t0)
    return table


def run(cfg):
    """Execute one configured run and write its artifacts; returns the written paths."""
    params = cfg.params()
    theta = theta_grid(cfg.n_theta, math.radians(cfg.delta_theta_deg))
    tables = {}
    if cfg.mode in ("oe", "compare"):
        tables["oe"] = _oe_tables(cfg, params, theta)
    if cfg.mode in ("bie", "compare"):
        tables["bie"] = _bie_table(cfg, params, theta)
    report = compare(tables["oe"], tables["bie"], cfg.echo()) if cfg.mode == "compare" else None

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if cfg.format == "csv":
        for name, table in tables.items():
            path = out / f"{name}.csv"
            meta = [f"metadata {json.dumps(table.metadata, sort_keys=True)}", f"method {table.method}"]
            table.to_csv(path, _comments(cfg, meta))
            written.append(path)
        if report is not None:
            path = out / "compare.csv"
            _write_compare_csv(path, report, cfg)
            written.append(path)
    else:
        name = "compare" if report is not None else cfg.mode
        doc = {"config": cfg.echo(),
               "metadata": {k: t.metadata for k, t in tables.items()},
               "table": {k: t.to_dict() for k, t in tables.items()} if report is not None
               else next(iter(tables.values())).to_dict()}
        if report is not None:
            doc["compare"] = report.to_dict()
        path = out / f"{name}.json"
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        written.append(path)
    if report is not None:
        for comp in report.rel_l2:
            log.info("|S_%s|: relative L2 %.3e, Linf %.3e", comp, report.rel_l2[comp], report.rel_linf[comp])
    return written, report


def _write_compare_csv(path, report, cfg):
    comps = list(report.abs_diff)
    extra = [f"rel_l2 {json.dumps(report.rel_l2, sort_keys=True)}",
             f"rel_linf {json.dumps(report.rel_linf, sort_keys=True)}"]
    with open(path, "w", newline="") as fh:
        for line in _comments(cfg, extra):
            fh.write(f"# {line}\n")
        fh.write(",".join(["theta_deg"] + [f"absdiff_S_{c}" for c in comps]) + "\n")
        for i, t in enumerate(np.degrees(report.theta)):
            fh.write(",".join([repr(float(t))] + [repr(float(report.abs_diff[c][i])) for c in comps]) + "\n")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        written, report = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OEStripError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for p in written:
        print(p)
    if report is not None:
        for comp in report.rel_l2:
            print(f"|S_{comp}|  rel L2 {report.rel_l2[comp]:.3e}  rel Linf {report.rel_linf[comp]:.3e}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
