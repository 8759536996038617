"""Command-line entry point ``blstab``.

Every run resolves its configuration (file plus flag overrides) into a
canonical JSON document and writes its outputs under
``<output_dir>/<sha256 of that document>/``.  Exit status: 0 on success, 2 on
invalid input, 3 when a numerical failure flag is raised.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .datum import (
    Datum,
    DatumError,
    classify_finiteness,
    classify_simplicity,
    frame_120,
    holder_pair,
    is_geometric,
    scaling_defect,
)
from .integrator import COMPLEX, REAL_POSITIVE, FunctionSpec, QuadratureOpts, dist_to_gaussians

SUBCOMMANDS = ("check", "constant", "reduce", "fourier", "deficit", "distance", "experiment")
EXPERIMENTS = ("sweep", "opt1", "opt2", "corollary", "tuple", "holder", "complex")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3

TOP_LEVEL = {"datum", "functions", "quadrature", "optimizer", "experiment", "seed", "output_dir",
             "p", "class", "bl_const", "c", "d", "factors"}
OPTIMIZER_KEYS = {"restarts": int, "tol": float, "max_iters": int, "fp_iters": int}
QUADRATURE_KEYS = {"points_per_axis", "truncation", "radius_multiplier", "method", "mc_samples",
                   "seed", "target_rel_error", "box", "chunk_points"}
EXPERIMENT_PARAMS = {
    "sweep": {"trials", "floor", "starts"},
    "opt1": {"t_grid", "starts"},
    "opt2": {"deltas", "K", "radius", "starts"},
    "corollary": {"eps", "starts", "s_max"},
    "tuple": {"n_samples", "threshold"},
    "holder": {"p", "profile", "r", "starts"},
    "complex": {"vectors", "p", "starts"},
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class RunConfig:
    subcommand: str
    seed: int = 0
    output_dir: str = "runs"
    datum: Optional[Datum] = None
    functions: Optional[list] = None
    quadrature: QuadratureOpts = field(default_factory=QuadratureOpts)
    optimizer: dict = field(default_factory=dict)
    experiment: Optional[dict] = None
    p: Optional[float] = None
    cls: str = COMPLEX
    bl_const: Optional[float] = None
    c: Optional[list] = None

    def canonical(self) -> dict:
        """Everything that influences results; the output directory is excluded."""
        return _plain({
            "subcommand": self.subcommand,
            "seed": self.seed,
            "datum": None if self.datum is None else self.datum.to_dict(),
            "functions": None if self.functions is None else [f.to_dict() for f in self.functions],
            "quadrature": self.quadrature.to_dict(),
            "optimizer": self.optimizer,
            "experiment": self.experiment,
            "p": self.p,
            "class": self.cls,
            "bl_const": self.bl_const,
            "c": self.c,
        })

    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.canonical()).encode()).hexdigest()


@dataclass
class RunRecord:
    config_hash: str
    tool_version: str
    started: str
    finished: str
    status: str
    exit_code: int
    outputs: list
    values: dict

    def deterministic_part(self) -> dict:
        return {"config_hash": self.config_hash, "tool_version": self.tool_version,
                "status": self.status, "exit_code": self.exit_code,
                "outputs": self.outputs, "values": self.values}


# ---------------------------------------------------------------------------
# serialization helpers

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def _dump_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def parse_grid(text: str, points: int = 9) -> list:
    """``"1e-1..1e-3"`` (log-spaced, ``points`` values) or a comma-separated list."""
    text = text.strip()
    if ".." in text:
        a, b = (float(x) for x in text.split(".."))
        if a <= 0 or b <= 0:
            raise ConfigError("grid endpoints must be positive: %r" % text)
        return [float(x) for x in np.logspace(math.log10(a), math.log10(b), points)]
    return [float(x) for x in text.split(",") if x.strip()]


# ---------------------------------------------------------------------------
# configuration

def _load_json(path: Path, what: str):
    if not path.is_file():
        raise ConfigError("%s: file %s does not exist" % (what, path))
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("%s: %s is not valid JSON (%s)" % (what, path, exc)) from None


def _resolve(value, base: Path, what: str):
    if isinstance(value, str):
        return _load_json((base / value) if not os.path.isabs(value) else Path(value), what)
    return value


def validate_config(path: Optional[str], subcommand: str, overrides: Optional[dict] = None) -> RunConfig:
    """Parse, default and validate a configuration file plus CLI overrides."""
    raw = {}
    base = Path(".")
    if path is not None:
        p = Path(path)
        raw = _load_json(p, "config")
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be an object")
        base = p.parent
    # a persisted config.json carries its subcommand and explicit nulls
    persisted = raw.get("subcommand")
    if persisted is not None and persisted != subcommand:
        raise ConfigError("subcommand: config was written for %r, not %r" % (persisted, subcommand))
    raw = {k: v for k, v in raw.items() if v is not None and k != "subcommand"}
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k in ("experiment_params",):
            exp = dict(raw.get("experiment") or {})
            params = dict(exp.get("params") or {})
            params.update(v)
            exp["params"] = params
            raw["experiment"] = exp
        elif k == "restarts":
            opt = dict(raw.get("optimizer") or {})
            opt["restarts"] = v
            raw["optimizer"] = opt
        elif k == "experiment_name":
            exp = dict(raw.get("experiment") or {})
            exp["name"] = v
            raw["experiment"] = exp
        else:
            raw[k] = v
    unknown = set(raw) - TOP_LEVEL
    if unknown:
        raise ConfigError("unknown config field(s): %s" % ", ".join(sorted(unknown)))
    cfg = RunConfig(subcommand=subcommand)

    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed: must be a nonnegative integer, got %r" % (seed,))
    cfg.seed = seed
    cfg.output_dir = str(raw.get("output_dir", "runs"))

    if "d" in raw or "factors" in raw:
        if "datum" in raw:
            raise ConfigError("datum: given both inline (d/factors) and under 'datum'")
        raw["datum"] = {k: raw[k] for k in ("d", "factors") if k in raw}
    if "datum" in raw:
        obj = _resolve(raw["datum"], base, "datum")
        try:
            cfg.datum = Datum.from_dict(obj)
        except DatumError as exc:
            raise ConfigError("datum: %s" % exc) from None
        except (TypeError, ValueError) as exc:
            raise ConfigError("datum: malformed (%s)" % exc) from None

    if "functions" in raw:
        objs = _resolve(raw["functions"], base, "functions")
        if not isinstance(objs, list):
            raise ConfigError("functions: must be a list of function specs")
        try:
            cfg.functions = [FunctionSpec.from_dict(o) for o in objs]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("functions: %s" % exc) from None

    quad = raw.get("quadrature") or {}
    bad = set(quad) - QUADRATURE_KEYS
    if bad:
        raise ConfigError("quadrature: unknown field(s) %s" % ", ".join(sorted(bad)))
    try:
        if "box" in quad and quad["box"] is not None:
            quad = dict(quad, box=tuple(tuple(b) for b in quad["box"]))
        cfg.quadrature = QuadratureOpts(**quad)
    except (TypeError, ValueError) as exc:
        raise ConfigError("quadrature: %s" % exc) from None

    opt = raw.get("optimizer") or {}
    bad = set(opt) - set(OPTIMIZER_KEYS)
    if bad:
        raise ConfigError("optimizer: unknown field(s) %s" % ", ".join(sorted(bad)))
    for k, typ in OPTIMIZER_KEYS.items():
        if k in opt:
            v = opt[k]
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
                raise ConfigError("optimizer.%s: must be positive, got %r" % (k, v))
            if typ is int and int(v) != v:
                raise ConfigError("optimizer.%s: must be an integer" % k)
    cfg.optimizer = {"restarts": 8, "tol": 1e-10, "max_iters": 5000, "fp_iters": 200}
    cfg.optimizer.update({k: OPTIMIZER_KEYS[k](v) for k, v in opt.items()})

    if "p" in raw and raw["p"] is not None:
        try:
            cfg.p = float(raw["p"])
        except (TypeError, ValueError):
            raise ConfigError("p: must be a number") from None
        if not cfg.p >= 1:
            raise ConfigError("p: exponent must lie in [1, inf], got %r" % raw["p"])
    cls = raw.get("class", COMPLEX)
    if cls not in (COMPLEX, REAL_POSITIVE):
        raise ConfigError("class: must be %s or %s" % (COMPLEX, REAL_POSITIVE))
    cfg.cls = cls
    if raw.get("bl_const") is not None:
        v = raw["bl_const"]
        if not isinstance(v, (int, float)) or not v > 0 or not math.isfinite(v):
            raise ConfigError("bl_const: must be a positive finite number")
        cfg.bl_const = float(v)
    if raw.get("c") is not None:
        cfg.c = [float(x) for x in raw["c"]]
        if any(not x > 0 for x in cfg.c):
            raise ConfigError("c: constants must be positive")

    if subcommand == "experiment":
        exp = raw.get("experiment") or {}
        bad = set(exp) - {"name", "params"}
        if bad:
            raise ConfigError("experiment: unknown field(s) %s" % ", ".join(sorted(bad)))
        name = exp.get("name")
        if name not in EXPERIMENTS:
            raise ConfigError("experiment.name: must be one of %s, got %r"
                              % (", ".join(EXPERIMENTS), name))
        params = dict(exp.get("params") or {})
        bad = set(params) - EXPERIMENT_PARAMS[name]
        if bad:
            raise ConfigError("experiment.params: unknown field(s) %s for %s"
                              % (", ".join(sorted(bad)), name))
        cfg.experiment = {"name": name, "params": params}
    elif raw.get("experiment") is not None:
        raise ConfigError("experiment: only valid for the experiment subcommand")

    needs_datum = subcommand in ("check", "constant", "reduce", "deficit")
    if needs_datum and cfg.datum is None:
        raise ConfigError("datum: required for %s" % subcommand)
    if subcommand in ("deficit", "distance") and not cfg.functions:
        raise ConfigError("functions: required for %s" % subcommand)
    if subcommand == "deficit" and len(cfg.functions) != cfg.datum.m:
        raise ConfigError("functions: need %d specs (one per factor), got %d"
                          % (cfg.datum.m, len(cfg.functions)))
    if subcommand == "distance" and cfg.p is None:
        raise ConfigError("p: required for distance")
    return cfg


# ---------------------------------------------------------------------------
# pipelines; each returns (summary, {filename: text}, numeric_failure)

def _bl(cfg: RunConfig, datum: Datum):
    from .optimizer import bl_constant

    o = cfg.optimizer
    return bl_constant(datum, restarts=o["restarts"], seed=cfg.seed, fp_iters=o["fp_iters"],
                       max_iters=o["max_iters"], tol=o["tol"])


def run_check(cfg):
    datum = cfg.datum
    fin = classify_finiteness(datum, seed=cfg.seed)
    out = {"feasibility": fin.to_dict(), "scaling_defect": scaling_defect(datum)}
    if abs(scaling_defect(datum)) <= 1e-12:
        out["simplicity"] = classify_simplicity(datum, seed=cfg.seed).to_dict()
    ok, res = is_geometric(datum)
    out["geometric"] = {"is_geometric": ok, **res}
    return out, {}, False


def run_constant(cfg):
    res = _bl(cfg, cfg.datum)
    trace = _csv_text(["iteration", "value", "eig_ratio"], [list(t) for t in res.trace])
    return res.to_dict(), {"trace.csv": trace}, bool(res.divergence_flag)


def run_reduce(cfg):
    from .optimizer import geometric_reduce

    res = _bl(cfg, cfg.datum)
    if res.divergence_flag:
        return {"constant": res.to_dict(), "reduced": None}, {}, True
    red = geometric_reduce(cfg.datum, res.maximizer)
    return {"constant": res.value, "reduced_datum": red.datum.to_dict(),
            "E": red.E, "F": red.F, "residuals": red.residuals}, {}, False


def run_fourier(cfg):
    from .fourier import a_p, fbl_constant, hy_ratio

    grid = [1.0 + k / 20 for k in range(21)]
    table = _csv_text(["p", "a_p"], [[p, a_p(p)] for p in grid])
    out = {}
    flagged = False
    if cfg.datum is not None:
        if all(1 <= p <= 2 for p in cfg.datum.p):
            value = cfg.bl_const
            if value is None:
                res = _bl(cfg, cfg.datum)
                flagged = res.divergence_flag
                value = res.value
            out["bl_constant"] = value
            out["fbl_constant"] = None if flagged else fbl_constant(cfg.datum, value)
        else:
            out["fbl_constant"] = None
            out["note"] = "some exponents lie outside [1, 2]"
    reports = []
    rows = []
    p = cfg.p if cfg.p is not None else 4.0 / 3.0
    for j, f in enumerate(cfg.functions or []):
        rep = hy_ratio(f, p, cfg.quadrature, seed=cfg.seed)
        reports.append(rep.to_dict())
        rows.append([j, p, rep.ratio, "" if rep.dist_ratio is None else rep.dist_ratio,
                     "" if rep.implied_c is None else rep.implied_c])
    out["hy_reports"] = reports
    files = {"a_p.csv": table}
    if rows:
        files["hy.csv"] = _csv_text(["function", "p", "ratio", "dist_ratio", "implied_c"], rows)
    return out, files, flagged


def run_deficit(cfg):
    from .stability_lab import deficit_report

    flagged = False
    value = cfg.bl_const
    if value is None:
        res = _bl(cfg, cfg.datum)
        flagged = res.divergence_flag
        value = res.value
    rep = deficit_report(cfg.datum, cfg.functions, value, cfg.quadrature, c=cfg.c, cls=cfg.cls,
                         seed=cfg.seed)
    rows = [[j, f.p, D] for j, (f, D) in enumerate(zip(cfg.datum.factors, rep.D))]
    return rep.to_dict(), {"deficit.csv": _csv_text(["factor", "p", "D"], rows)}, flagged


def run_distance(cfg):
    rows, out = [], []
    for j, f in enumerate(cfg.functions):
        r = dist_to_gaussians(f, cfg.p, cfg.cls, cfg.quadrature, seed=cfg.seed)
        rows.append([j, cfg.p, cfg.cls, r.dist, r.norm, r.relative, int(r.converged)])
        out.append({"function": j, "dist": r.dist, "norm": r.norm, "relative": r.relative,
                    "converged": r.converged,
                    "argmin": None if r.argmin is None else r.argmin.to_dict()})
    header = ["function", "p", "class", "dist", "norm", "relative", "converged"]
    return {"distances": out}, {"distance.csv": _csv_text(header, rows)}, False


def run_experiment(cfg):
    from . import stability_lab as lab

    name = cfg.experiment["name"]
    prm = cfg.experiment["params"]
    datum = cfg.datum
    opts = cfg.quadrature
    seed = cfg.seed
    if name == "sweep":
        rep = lab.sharpened_sweep(datum or frame_120(), trials=int(prm.get("trials", 500)),
                                  seed=seed, floor=float(prm.get("floor", lab.SHARPENED_FLOOR)),
                                  opts=opts, starts=int(prm.get("starts", 8)),
                                  bl_const=cfg.bl_const)
    elif name == "opt1":
        rep = lab.opt1_experiment(datum, t_grid=prm.get("t_grid"), bl_const=cfg.bl_const,
                                  opts=opts, starts=int(prm.get("starts", 8)), seed=seed)
    elif name == "opt2":
        rep = lab.opt2_experiment(datum or holder_pair((3.0, 1.5)), delta_grid=prm.get("deltas"),
                                  K=float(prm.get("K", 1.0)), radius=float(prm.get("radius", 1.0)),
                                  opts=opts, starts=int(prm.get("starts", 8)), seed=seed)
    elif name == "corollary":
        rep = lab.corollary_sweep(datum, eps_grid=prm.get("eps"), bl_const=cfg.bl_const, opts=opts,
                                  s_max=float(prm.get("s_max", 2.0)),
                                  starts=int(prm.get("starts", 8)), seed=seed)
    elif name == "tuple":
        rep = lab.tuple_stability_experiment(datum, n_samples=int(prm.get("n_samples", 400)),
                                             seed=seed, threshold=float(prm.get("threshold", 1e-4)),
                                             restarts=cfg.optimizer["restarts"])
    elif name == "holder":
        rep = lab.holder_equality_family(prm.get("p", (2.0, 2.0)), prm.get("profile", "bump"),
                                         float(prm.get("r", 1.0)), opts,
                                         starts=int(prm.get("starts", 16)), seed=seed)
    else:
        vectors = prm.get("vectors", [[1, 0], [0, 1], [1, 1], [1, -1]])
        rep = lab.complex_extremizer_build(vectors, prm.get("p"),
                                           restarts=cfg.optimizer["restarts"], seed=seed,
                                           opts=opts, starts=int(prm.get("starts", 16)))
    header, rows = rep.rows()
    summary = {"experiment": name, **rep.summary()}
    return summary, {"%s.csv" % name: _csv_text(header, rows)}, not summary.get("pass", True)


PIPELINES = {"check": run_check, "constant": run_constant, "reduce": run_reduce,
             "fourier": run_fourier, "deficit": run_deficit, "distance": run_distance,
             "experiment": run_experiment}


# ---------------------------------------------------------------------------
# run directories

class _Lock:
    def __init__(self, directory: Path):
        self.path = directory / ".lock"

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConfigError("output directory %s is locked by another run"
                              % self.path.parent) from None
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def execute(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    h = cfg.config_hash()
    run_dir = Path(cfg.output_dir) / h
    run_dir.mkdir(parents=True, exist_ok=True)
    with _Lock(run_dir):
        started = _now()
        result, files, flagged = PIPELINES[cfg.subcommand](cfg)
        code = EXIT_NUMERIC if flagged else EXIT_OK
        summary = {"subcommand": cfg.subcommand, "config_hash": h,
                   "status": "numerical_failure" if flagged else "ok", "result": result}
        files = dict(files)
        files["config.json"] = _dump_json(cfg.canonical())
        files["summary.json"] = _dump_json(summary)
        outputs = sorted(files) + ["run_record.json"]
        record = RunRecord(h, __version__, started, _now(), summary["status"], code, outputs,
                           {"result_digest": hashlib.sha256(
                               canonical_json(result).encode()).hexdigest()})
        files["run_record.json"] = _dump_json(record.deterministic_part())
        for name, text in files.items():
            (run_dir / name).write_text(text)
        # wall-clock times are kept out of the JSON outputs so reruns stay byte-identical
        (run_dir / "timestamps.txt").write_text("started %s\nfinished %s\n"
                                                % (record.started, record.finished))
    stdout.write(_dump_json(summary))
    stdout.write("run directory: %s\n" % run_dir)
    return code


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blstab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--output-dir", dest="output_dir")
        sp.add_argument("--restarts", type=int)
        sp.add_argument("--print-config", action="store_true",
                        help="print the canonical configuration and exit")

    helps = {"check": "finiteness, simplicity and geometric tests for a datum",
             "constant": "optimize over Gaussian tuples to compute the constant",
             "reduce": "change variables to the equivalent geometric datum",
             "fourier": "Hausdorff-Young constants, Fourier-side constant, HY ratios",
             "deficit": "deficit and per-factor distances for a function tuple",
             "distance": "distance of functions to positive or complex Gaussians",
             "experiment": "run a named experiment"}
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        if name == "experiment":
            sp.add_argument("name", nargs="?", choices=EXPERIMENTS,
                            help="experiment to run; defaults to experiment.name in the config")
            sp.add_argument("--deltas", help="delta grid for opt2, e.g. 1e-1..1e-3")
            sp.add_argument("--t-grid", dest="t_grid", help="t grid for opt1")
            sp.add_argument("--eps", help="eps grid for corollary")
            sp.add_argument("--points", type=int, default=9, help="points in a range grid")
            sp.add_argument("--trials", type=int)
        if name in ("distance", "fourier"):
            sp.add_argument("--p", type=float)
            sp.add_argument("--class", dest="cls", choices=(COMPLEX, REAL_POSITIVE))
        common(sp)
    return parser


def _overrides(args) -> dict:
    out = {"seed": args.seed, "output_dir": args.output_dir, "restarts": args.restarts}
    if getattr(args, "p", None) is not None:
        out["p"] = args.p
    if getattr(args, "cls", None) is not None:
        out["class"] = args.cls
    if args.subcommand == "experiment":
        out["experiment_name"] = args.name
        params = {}
        if args.deltas:
            params["deltas"] = parse_grid(args.deltas, args.points)
        if args.t_grid:
            params["t_grid"] = parse_grid(args.t_grid, args.points)
        if args.eps:
            params["eps"] = parse_grid(args.eps, args.points)
        if args.trials is not None:
            params["trials"] = args.trials
        if params:
            out["experiment_params"] = params
    return out


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        cfg = validate_config(args.config, args.subcommand, _overrides(args))
        if args.print_config:
            sys.stdout.write(_dump_json(cfg.canonical()))
            return EXIT_OK
        return execute(cfg)
    except ConfigError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return EXIT_INVALID
    except (DatumError, ValueError) as exc:
        sys.stderr.write("error: %s\n" % exc)
        return EXIT_INVALID
    except (np.linalg.LinAlgError, RuntimeError, FloatingPointError) as exc:
        sys.stderr.write("numerical failure: %s\n" % exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
