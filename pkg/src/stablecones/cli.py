"""Command-line front end.

Exit codes: 0 success, 1 a numerical check failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__, cache
from .exponent import MeshControls

CONFIG_KEYS = {
    "seed": int,
    "paths": int,
    "batch_size": int,
    "cells": int,
    "levels": int,
    "grading": float,
    "tol": float,
    "eps_levels": lambda v: tuple(float(x) for x in v.split(",")),
    "format": str,
    "cache_dir": str,
    "use_cache": lambda v: v.strip().lower() in ("1", "true", "yes", "on"),
}

DEFAULTS = {
    "seed": 0,
    "paths": 20000,
    "batch_size": 1000,
    "cells": 20,
    "levels": 3,
    "grading": 2.5,
    "tol": 1e-8,
    "eps_levels": (0.08, 0.04),
    "format": None,
    "cache_dir": None,
    "use_cache": True,
}


class UsageError(Exception):
    pass


def read_config(path) -> dict:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, val = (p.strip() for p in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = CONFIG_KEYS[key](val)
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return out


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


# ---------------------------------------------------------------- subcommands
# each returns (payload, rows or None, ok)


def cmd_verify(a, cfg):
    from .constants import identity_suite

    reps = identity_suite(a.s, tol=cfg["tol"])
    rows = [
        {"identity": r.identity_id, "s": r.s, "n": r.n, "lhs": r.lhs, "rhs": r.rhs,
         "residual": r.residual, "quad_err": r.quadrature_error_estimate, "passed": r.passed}
        for r in reps
    ]
    return rows, rows, all(r.passed for r in reps)


def cmd_flap(a, cfg):
    from .fraclap import Profile1D, flap_1d

    gamma = a.s - 1.0 if a.gamma is None else a.gamma
    prof = Profile1D.power_plus(gamma)
    rows = []
    for x in a.x:
        v, e = flap_1d(prof, a.s, x, full_output=True)
        rows.append({"x": x, "gamma": gamma, "value": v, "err": e})
    return rows, rows, True


def cmd_firstvar(a, cfg):
    from .energy import Configuration1D, first_variation_scan

    c = Configuration1D(slope_coefficient=a.U0, lambda_param=a.lam)
    r = first_variation_scan(c, a.s)
    return r, None, True


def _mesh(cfg):
    return MeshControls(cells=cfg["cells"], levels=cfg["levels"], grading=cfg["grading"])


def cmd_aperture(a, cfg):
    from .exponent import find_aperture

    r = find_aperture(a.n, a.s, controls=_mesh(cfg), use_cache=cfg["use_cache"])
    return r, None, True


def cmd_wos(a, cfg):
    from .wos import Ball, WosConfig, ball_green, green_estimate

    n = a.n
    x = np.zeros(n)
    x[0] = 0.3
    y = np.zeros(n)
    y[0] = -0.2
    w = WosConfig(seed=cfg["seed"], paths=cfg["paths"], batch_size=cfg["batch_size"])
    est = green_estimate(Ball(tuple(np.zeros(n)), 1.0), x, y, a.s, w)
    exact = float(ball_green(n, a.s, 1.0, x, y))
    z = (est.value - exact) / est.std_err if est.std_err > 0 else math.inf
    payload = {"estimate": est, "exact": exact, "z_score": z}
    return payload, None, abs(z) < 4.0


def _kernel_cfg(cfg):
    from .kernel import KernelConfig
    from .wos import WosConfig

    w = WosConfig(seed=cfg["seed"], paths=cfg["paths"], batch_size=cfg["batch_size"])
    return KernelConfig(wos=w, eps_levels=tuple(cfg["eps_levels"]))


def cmd_kernel_table(a, cfg):
    from .cone import Cone
    from .exponent import find_aperture
    from .kernel import cached_kernel_table

    ap = find_aperture(a.n, a.s, controls=_mesh(cfg), use_cache=cfg["use_cache"])
    table, key, hit = cached_kernel_table(Cone(a.n, ap.beta), a.s, _kernel_cfg(cfg), cfg["use_cache"])
    rows = [{"t": t, "value": v, "std_err": e} for t, v, e in zip(table.t_grid, table.values, table.std_errs)]
    payload = {"table": json.loads(table.to_json()), "cache_key": key, "from_cache": hit}
    return payload, rows, not table.degraded


def cmd_stability(a, cfg):
    from .stability import StabilityConfig, check_stability

    sc = StabilityConfig(kernel=_kernel_cfg(cfg), mesh=_mesh(cfg), use_cache=cfg["use_cache"])
    rep = check_stability(a.n, a.s, sc)
    print(rep.summary(), file=sys.stderr)
    return rep.to_dict(), None, True


def cmd_hardy2d(a, cfg):
    from .stability import hardy_2d_demo

    r = hardy_2d_demo(a.s, a.R, aperture_kw={"controls": _mesh(cfg), "use_cache": cfg["use_cache"]})
    rows = [{"R": R, "lhs": lhs, "rhs": rhs} for R, lhs, rhs in zip(r.R_grid, r.lhs_values, r.rhs_values)]
    ok = 0.95 <= r.fitted_log_slope / r.rays <= 1.05
    return r, rows, ok


COMMANDS = {
    "verify": (cmd_verify, "csv"),
    "flap": (cmd_flap, "csv"),
    "firstvar": (cmd_firstvar, "json"),
    "aperture": (cmd_aperture, "json"),
    "wos": (cmd_wos, "json"),
    "kernel-table": (cmd_kernel_table, "json"),
    "stability": (cmd_stability, "json"),
    "hardy2d": (cmd_hardy2d, "csv"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file supplying defaults")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--output", "-o", help="write here instead of stdout")
    common.add_argument("--cache-dir", dest="cache_dir")
    common.add_argument("--no-cache", dest="use_cache", action="store_false", default=None)
    common.add_argument("--seed", type=int)
    common.add_argument("--paths", type=int)
    common.add_argument("--batch-size", dest="batch_size", type=int)
    common.add_argument("--mesh", dest="cells", type=int, help="coarsest angular cell count")
    common.add_argument("--levels", type=int, help="mesh halvings")
    common.add_argument("--tol", type=float)

    p = argparse.ArgumentParser(prog="stablecones", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="closed-form integral identities")
    v.add_argument("--s", type=float, nargs="+", default=[0.25, 0.5, 0.75])

    f = sub.add_parser("flap", parents=[common], help="1D fractional Laplacian of t_+^gamma")
    f.add_argument("--s", type=float, default=0.5)
    f.add_argument("--gamma", type=float, help="default s - 1 (the large solution)")
    f.add_argument("--x", type=float, nargs="+", default=[0.5, 1.0, 2.0])

    fv = sub.add_parser("firstvar", parents=[common], help="first variation of the energy")
    fv.add_argument("--s", type=float, default=0.5)
    fv.add_argument("--U0", type=float, default=1.0)
    fv.add_argument("--lambda", dest="lam", type=float, default=1.0)

    for name, hlp in (("aperture", "critical aperture"), ("kernel-table", "boundary kernel table"),
                      ("stability", "H1 versus m(0)")):
        q = sub.add_parser(name, parents=[common], help=hlp)
        q.add_argument("n", type=int)
        q.add_argument("s", type=float)

    w = sub.add_parser("wos", parents=[common], help="Green function of the ball by walk on spheres")
    w.add_argument("n", type=int)
    w.add_argument("s", type=float)

    h = sub.add_parser("hardy2d", parents=[common], help="planar Hardy versus seminorm scan")
    h.add_argument("--s", type=float, default=0.5)
    h.add_argument("--R", type=float, nargs="+", default=[1e2, 1e3, 1e4])
    return p


def effective_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if cfg["format"] is None:
        cfg["format"] = COMMANDS[args.command][1]
    return cfg


def _render(command, args, cfg, payload, rows) -> str:
    header = {"tool": "stablecones", "version": __version__, "command": command,
              "arguments": {k: v for k, v in vars(args).items() if k not in CONFIG_KEYS and k != "command"},
              "config": cfg}
    if cfg["format"] == "json" or rows is None:
        return json.dumps(_jsonable({**header, "result": payload}), indent=1, sort_keys=True) + "\n"
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}: {json.dumps(_jsonable(v), sort_keys=True)}\n")
    wr = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    wr.writeheader()
    for r in rows:
        wr.writerow(_jsonable(r))
    return buf.getvalue()


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = effective_config(args)
    except (UsageError, OSError) as exc:
        print(f"stablecones: {exc}", file=sys.stderr)
        return 2
    if cfg["cache_dir"]:
        os.environ[cache.ENV_VAR] = cfg["cache_dir"]
    fn, _ = COMMANDS[args.command]
    try:
        payload, rows, ok = fn(args, cfg)
    except ValueError as exc:
        print(f"stablecones: {exc}", file=sys.stderr)
        return 2
    text = _render(args.command, args, cfg, payload, rows)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not ok:
        print("stablecones: check failed", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
