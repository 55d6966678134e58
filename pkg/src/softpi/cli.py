"""Run orchestration: config files, the four subcommands, result persistence.

Config grammar: one ``key = value`` pair per line with dotted keys; a
``[section]`` header prefixes the keys that follow it, so::

    [model.merton]
    rf = 0.03

is the same as ``model.merton.rf = 0.03``.  Blank lines and lines starting
with ``#`` are ignored.  Unknown keys are rejected with the offending line
number; every key not present takes its default.

Subcommands and exit codes::

    softpi solve    CONFIG                  0 converged / 2 max-iters / 3 assumptions
    softpi rollout  CONFIG [--x ...] [--policy final|uniform|file]
    softpi validate CONFIG                  0 pass / 3 any assumption failed
    softpi sweep    CONFIG --lam ...        one solve per entropy weight

plus exit 1 for any usage or config error.  Data files (value_grid.csv,
iterations.csv, rollout.csv, sweep_summary.csv) carry 17-significant-digit
floats so identical runs are byte-identical; manifest.json lists every file
in the output directory with a sha256 checksum.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .evaluate import (
    NEUMANN0,
    dirichlet,
    evaluate_policy,
    evaluate_snapshot,
    hjb_residual,
)
from .gibbs import uniform_snapshot
from .model import (
    ActionSpace,
    GrowthParams,
    MertonParams,
    make_growth,
    make_merton,
    make_quadratic_test,
)
from .pia import PiaConfig, run_pia
from .quadrature import build_quadrature
from .rollout import McConfig, simulate_value
from .validate import validate_problem

__all__ = ["ConfigError", "parse_config", "main"]


class ConfigError(Exception):
    pass


def _bool(text):
    low = text.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_SCHEMA = {
    "seed": (int, 1234),
    "output.dir": (str, "runs/out"),
    "model.name": (str, "merton"),
    "model.rho": (float, 0.1),
    "model.lambda": (float, 0.5),
    "model.merton.rf": (float, 0.03),
    "model.merton.prem": (float, 0.05),
    "model.merton.vol_a": (float, 0.2),
    "model.merton.frac_eta": (float, 0.5),
    "model.merton.risk_alpha": (float, 1.0),
    "model.merton.c_floor": (float, 0.05),
    "model.growth.mu_dep": (float, 0.05),
    "model.growth.vol_a": (float, 0.2),
    "model.growth.risk_alpha": (float, 1.0),
    "model.growth.c_floor": (float, 0.05),
    "model.growth.prod_theta": (float, 1.0),
    "model.quadratic.y_star": (float, 0.0),
    "model.quadratic.u_lo": (float, -1.0),
    "model.quadratic.u_hi": (float, 1.0),
    "model.quadratic.eta0": (float, 1.0),
    "grid.x_lo": (float, -6.0),
    "grid.x_hi": (float, 4.0),
    "grid.n": (int, 801),
    "grid.bc": (str, "neumann0"),
    "grid.dirichlet_lo": (float, 0.0),
    "grid.dirichlet_hi": (float, 0.0),
    "quad.rule": (str, "gauss-legendre"),
    "quad.order": (int, 16),
    "quad.panels": (int, 4),
    "pia.max_iters": (int, 60),
    "pia.stop_tol": (float, 1e-8),
    "pia.residual_tol": (float, 5e-3),
    "pia.v0": (float, 0.0),
    "pia.scheme": (str, "upwind"),
    "mc.paths": (int, 200_000),
    "mc.dt": (float, 1e-3),
    "mc.T": (float, 0.0),
    "mc.seed": (int, -1),
    "mc.antithetic": (_bool, True),
    "validate.budget": (int, 4096),
    "sweep.x0": (float, 0.0),
}


def parse_config(path) -> dict:
    """Read a config file into a fully defaulted flat dict."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cfg = {key: default for key, (_, default) in _SCHEMA.items()}
    prefix = ""
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            prefix = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if prefix:
            key = f"{prefix}.{key}"
        if key not in _SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        caster = _SCHEMA[key][0]
        try:
            cfg[key] = caster(value.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return cfg


def build_problem(cfg):
    name = cfg["model.name"]
    rho = cfg["model.rho"]
    lam = cfg["model.lambda"]
    if name == "merton":
        params = MertonParams(
            rf=cfg["model.merton.rf"],
            prem=cfg["model.merton.prem"],
            vol_a=cfg["model.merton.vol_a"],
            frac_eta=cfg["model.merton.frac_eta"],
            risk_alpha=cfg["model.merton.risk_alpha"],
            c_floor=cfg["model.merton.c_floor"],
        )
        return make_merton(params, rho, lam)
    if name == "growth":
        params = GrowthParams(
            mu_dep=cfg["model.growth.mu_dep"],
            vol_a=cfg["model.growth.vol_a"],
            risk_alpha=cfg["model.growth.risk_alpha"],
            c_floor=cfg["model.growth.c_floor"],
            prod_theta=cfg["model.growth.prod_theta"],
        )
        return make_growth(params, rho, lam)
    if name == "quadratic":
        space = ActionSpace(((cfg["model.quadratic.u_lo"], cfg["model.quadratic.u_hi"]),))
        return make_quadratic_test(
            cfg["model.quadratic.y_star"], rho, lam, space,
            eta0=cfg["model.quadratic.eta0"],
        )
    raise ConfigError(f"unknown model name {name!r}")


def build_grid(cfg):
    x_lo, x_hi, n = cfg["grid.x_lo"], cfg["grid.x_hi"], cfg["grid.n"]
    if not x_hi > x_lo:
        raise ConfigError("grid.x_hi must exceed grid.x_lo")
    if n < 5:
        raise ConfigError("grid.n must be at least 5")
    return np.linspace(x_lo, x_hi, n)


def build_bc(cfg):
    kind = cfg["grid.bc"]
    if kind == "neumann0":
        return NEUMANN0
    if kind == "dirichlet":
        return dirichlet(cfg["grid.dirichlet_lo"], cfg["grid.dirichlet_hi"])
    raise ConfigError(f"unknown grid.bc {kind!r}")


def build_quad(cfg, problem):
    return build_quadrature(
        problem.action_space,
        rule=cfg["quad.rule"],
        order=cfg["quad.order"],
        panels=cfg["quad.panels"],
    )


def build_mc(cfg):
    seed = cfg["mc.seed"]
    if seed < 0:
        seed = cfg["seed"]
    horizon = cfg["mc.T"] if cfg["mc.T"] > 0 else None
    return McConfig(
        n_paths=cfg["mc.paths"],
        dt=cfg["mc.dt"],
        horizon=horizon,
        seed=seed,
        antithetic=cfg["mc.antithetic"],
    )


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path, header, columns):
    rows = zip(*columns)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(c) for c in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _read_csv(path):
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(c) for c in line.split(",")] for line in lines[1:]])
    return header, data


def write_manifest(out_dir, cfg, wall_clock):
    out_dir = Path(out_dir)
    files = {}
    for f in sorted(out_dir.rglob("*")):
        if f.is_file() and f.name != "manifest.json":
            files[str(f.relative_to(out_dir))] = hashlib.sha256(f.read_bytes()).hexdigest()
    manifest = {
        "config": {k: cfg[k] for k in sorted(cfg)},
        "versions": {"softpi": __version__, "numpy": np.__version__},
        "wall_clock_s": wall_clock,
        "files": files,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _solve_into(cfg, out_dir):
    """Shared by solve and sweep: validate, iterate, persist. Returns
    (exit_code, history)."""
    t0 = time.perf_counter()
    problem = build_problem(cfg)
    x = build_grid(cfg)
    quad = build_quad(cfg, problem)
    report = validate_problem(
        problem, cfg["grid.x_lo"], cfg["grid.x_hi"],
        budget=cfg["validate.budget"], seed=cfg["seed"],
    )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "assumptions.json").write_text(report.to_json() + "\n")
    if not report.passed:
        print(report.to_json())
        print("assumption checks failed; not solving", file=sys.stderr)
        write_manifest(out_dir, cfg, time.perf_counter() - t0)
        return 3, None
    pia_cfg = PiaConfig(
        max_iters=cfg["pia.max_iters"],
        stop_tol=cfg["pia.stop_tol"],
        residual_tol=cfg["pia.residual_tol"],
        v0=cfg["pia.v0"],
        scheme=cfg["pia.scheme"],
    )
    history = run_pia(problem, quad, x, pia_cfg, build_bc(cfg))
    grid = history.grid
    residual = hjb_residual(problem, quad, grid)
    _write_csv(
        out_dir / "value_grid.csv",
        ["x", "v", "dv", "d2v", "residual"],
        [grid.x, grid.v, grid.dv, grid.d2v, residual],
    )
    recs = history.records
    _write_csv(
        out_dir / "iterations.csv",
        ["n", "sup_delta", "mono_margin", "residual_sup", "c2_proxy"],
        [
            [r.n for r in recs],
            [r.sup_delta for r in recs],
            [r.mono_margin for r in recs],
            [r.residual_sup for r in recs],
            [r.c2_proxy for r in recs],
        ],
    )
    write_manifest(out_dir, cfg, time.perf_counter() - t0)
    return (0 if history.converged else 2), history


def cmd_solve(config_path) -> int:
    cfg = parse_config(config_path)
    code, _ = _solve_into(cfg, cfg["output.dir"])
    return code


def cmd_validate(config_path) -> int:
    cfg = parse_config(config_path)
    problem = build_problem(cfg)
    report = validate_problem(
        problem, cfg["grid.x_lo"], cfg["grid.x_hi"],
        budget=cfg["validate.budget"], seed=cfg["seed"],
    )
    print(report.to_json())
    return 0 if report.passed else 3


def cmd_rollout(config_path, x_points, policy="final", policy_file=None) -> int:
    cfg = parse_config(config_path)
    problem = build_problem(cfg)
    x = build_grid(cfg)
    quad = build_quad(cfg, problem)
    out_dir = Path(cfg["output.dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    mc = build_mc(cfg)
    t0 = time.perf_counter()

    if policy == "final":
        grid_file = out_dir / "value_grid.csv"
        if not grid_file.is_file():
            print(f"missing solve artifact {grid_file}", file=sys.stderr)
            return 1
        header, data = _read_csv(grid_file)
        xs_art = data[:, header.index("x")]
        v_art = data[:, header.index("v")]
        y_field = data[:, header.index("dv")]
        if xs_art.shape != x.shape or not np.allclose(xs_art, x):
            print("solve artifact grid does not match config grid", file=sys.stderr)
            return 1
        sim_policy = y_field
        v_pde = np.interp(x_points, xs_art, v_art)
    elif policy == "uniform":
        snap = uniform_snapshot(problem, quad, x)
        vg = evaluate_snapshot(problem, quad, x, snap, build_bc(cfg), cfg["pia.scheme"])
        sim_policy = snap
        v_pde = np.interp(x_points, x, vg.v)
    elif policy == "file":
        if not policy_file:
            print("--policy file requires --policy-file", file=sys.stderr)
            return 1
        header, data = _read_csv(policy_file)
        y_field = np.interp(x, data[:, header.index("x")], data[:, header.index("dv")])
        vg = evaluate_policy(problem, quad, x, y_field, build_bc(cfg), cfg["pia.scheme"])
        sim_policy = y_field
        v_pde = np.interp(x_points, x, vg.v)
    else:
        print(f"unknown policy {policy!r}", file=sys.stderr)
        return 1

    means, ses, tails = [], [], []
    for x0 in x_points:
        est = simulate_value(problem, quad, x, sim_policy, float(x0), mc)
        means.append(est.mean)
        ses.append(est.std_error)
        tails.append(est.tail_bound)
    _write_csv(
        out_dir / "rollout.csv",
        ["x0", "mean", "std_error", "tail_bound", "v_pde"],
        [x_points, means, ses, tails, v_pde],
    )
    write_manifest(out_dir, cfg, time.perf_counter() - t0)
    return 0


def cmd_sweep(config_path, lambdas) -> int:
    if not lambdas:
        print("sweep needs at least one entropy weight", file=sys.stderr)
        return 1
    cfg = parse_config(config_path)
    out_dir = Path(cfg["output.dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    x0 = cfg["sweep.x0"]
    rows = []
    code = 0
    t0 = time.perf_counter()
    for lam in lambdas:
        sub_cfg = dict(cfg)
        sub_cfg["model.lambda"] = float(lam)
        sub_dir = out_dir / f"lambda_{lam:g}"
        sub_cfg["output.dir"] = str(sub_dir)
        sub_code, history = _solve_into(sub_cfg, sub_dir)
        if sub_code != 0 and code == 0:
            code = sub_code
        if history is not None:
            grid = history.grid
            rows.append(
                (
                    float(lam),
                    float(np.interp(x0, grid.x, grid.v)),
                    history.iterations,
                    history.records[-1].residual_sup,
                )
            )
    if rows:
        cols = list(zip(*rows))
        _write_csv(
            out_dir / "sweep_summary.csv",
            ["lambda", "v_star_at_x0", "iters", "final_residual"],
            cols,
        )
    write_manifest(out_dir, cfg, time.perf_counter() - t0)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="softpi",
        description="Entropy-regularized policy improvement for 1-D diffusions",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_solve = sub.add_parser("solve", help="run the policy improvement loop")
    p_solve.add_argument("config")
    p_roll = sub.add_parser("rollout", help="Monte Carlo cross-check of a policy")
    p_roll.add_argument("config")
    p_roll.add_argument("--x", default="-1,0,1", help="comma-separated start points")
    p_roll.add_argument("--policy", default="final", choices=["final", "uniform", "file"])
    p_roll.add_argument("--policy-file", default=None)
    p_val = sub.add_parser("validate", help="print the assumption report")
    p_val.add_argument("config")
    p_sweep = sub.add_parser("sweep", help="one solve per entropy weight")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--lam", required=True, help="comma-separated entropy weights")
    args = parser.parse_args(argv)

    try:
        if args.command == "solve":
            return cmd_solve(args.config)
        if args.command == "validate":
            return cmd_validate(args.config)
        if args.command == "rollout":
            xs = [float(t) for t in args.x.split(",") if t.strip()]
            return cmd_rollout(args.config, xs, args.policy, args.policy_file)
        if args.command == "sweep":
            lams = [float(t) for t in args.lam.split(",") if t.strip()]
            return cmd_sweep(args.config, lams)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
