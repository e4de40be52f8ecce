"""Command-line front end.

    python -m levy_inventory solve    --config run.ini
    python -m levy_inventory value    --config run.ini --x-min -5 --x-max 5 --x-step 0.05
    python -m levy_inventory sweep    --config run.ini
    python -m levy_inventory simulate --config run.ini
    python -m levy_inventory check    --config run.ini

Exit codes: 0 ok, 1 failed check, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import checks
from .cost_model import CostSpec, Quadratic
from .errors import BracketError, ConvergenceError, InvalidModelError, SpecError
from .levy_models import BetaFamily, BrownianDrift, LevyModel
from .mc_simulator import SimConfig
from .policy_solver import PolicySolution, solve, value_function, value_function_tilde
from .scale_fns import ScaleKernel, build_kernel


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: LevyModel
    cost: CostSpec
    n_terms: int
    tail: bool
    sim: SimConfig
    auto_horizon: bool
    out_dir: Path
    x_grid: np.ndarray
    sweep_param: str | None
    sweep_values: tuple[float, ...]
    sweep_points: tuple[float, ...]
    check_monte_carlo: bool


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def load_config(path: str | Path, overrides: argparse.Namespace | None = None) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    for section in ("model", "cost"):
        if not parser.has_section(section):
            raise ConfigError(f"missing [{section}] section")
    for section in ("solver", "sim", "output", "sweep", "check"):
        if not parser.has_section(section):
            parser.add_section(section)
    try:
        m = parser["model"]
        kind = m.get("type", "beta").strip().lower()
        if kind == "beta":
            model = BetaFamily(m.getfloat("delta_hat"), m.getfloat("sigma"), m.getfloat("alpha"),
                               m.getfloat("beta"), m.getfloat("varpi"), m.getfloat("lambda"))
        elif kind == "brownian":
            model = BrownianDrift(m.getfloat("mu_hat"), m.getfloat("sigma"))
        else:
            raise ConfigError(f"unknown model type {kind!r}")
        c = parser["cost"]
        if c.get("f", "quadratic").strip().lower() != "quadratic":
            raise ConfigError("only the quadratic running cost can be configured from a file")
        cost = CostSpec(c.getfloat("C"), c.getfloat("K"), c.getfloat("q"), Quadratic())
        sv = parser["solver"]
        n_terms = sv.getint("n_terms", 1000)
        tail = sv.getboolean("tail", True)
        if n_terms < 1:
            raise ConfigError("n_terms must be at least 1")
        sm = parser["sim"]
        horizon_text = sm.get("horizon", "auto").strip().lower()
        seed = overrides.seed if overrides is not None and overrides.seed is not None else sm.getint("seed", 0)
        sim = SimConfig(
            jump_cutoff_eps=sm.getfloat("eps", 1e-3),
            time_step=sm.getfloat("time_step", 1e-3),
            horizon=300.0 if horizon_text == "auto" else float(horizon_text),
            n_paths=sm.getint("n_paths", 10_000),
            seed=seed,
            antithetic=sm.getboolean("antithetic", False),
            coarse_step=sm.getfloat("coarse_step", 0.05),
            clamp_creep=sm.getboolean("clamp_creep", True),
            workers=sm.getint("workers", 0) or None,
        )
        out = parser["output"]
        out_dir = Path(out.get("dir", "."))
        x_min, x_max, x_step = out.getfloat("x_min", -5.0), out.getfloat("x_max", 5.0), out.getfloat("x_step", 0.05)
        if overrides is not None:
            out_dir = Path(overrides.out) if overrides.out else out_dir
            x_min = x_min if overrides.x_min is None else overrides.x_min
            x_max = x_max if overrides.x_max is None else overrides.x_max
            x_step = x_step if overrides.x_step is None else overrides.x_step
        if not (x_step > 0 and x_max >= x_min):
            raise ConfigError("bad x grid")
        n = int(np.floor((x_max - x_min) / x_step + 1e-9)) + 1
        x_grid = x_min + x_step * np.arange(n)
        sw = parser["sweep"]
        sweep_param = sw.get("param", "").strip() or None
        if sweep_param not in (None, "C", "K"):
            raise ConfigError("sweep param must be C or K")
        sweep_values = _floats(sw.get("values", ""))
        sweep_points = _floats(sw.get("x", "0"))
        check_mc = parser["check"].getboolean("monte_carlo", False)
    except (ValueError, TypeError, KeyError, InvalidModelError, SpecError) as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(model, cost, n_terms, tail, sim, horizon_text == "auto", out_dir, x_grid,
                     sweep_param, sweep_values, sweep_points, check_mc)


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
            fh.flush()


def _kernel(cfg: RunConfig) -> ScaleKernel:
    return build_kernel(cfg.model, cfg.cost.q, cfg.n_terms, cfg.tail)


def _solution_row(label: str, sol: PolicySolution):
    h = sol.h_at_opt if sol.kind == "ss" else None
    return [label, sol.s_star, sol.S_star, sol.a0, sol.g_at_opt, h]


SOLUTION_HEADER = ["param", "s_star", "S_star", "a0", "residual_g", "residual_h"]


def _report(sol: PolicySolution) -> str:
    f = sol.fit
    lines = []
    if sol.kind == "ss":
        lines.append(f"s_star = {sol.s_star:.12g}")
        lines.append(f"a0     = {sol.a0:.12g}")
        lines.append(f"S_star = {sol.S_star:.12g}")
        lines.append(f"residual G = {sol.g_at_opt:.3e}   residual H = {sol.h_at_opt:.3e}")
    else:
        lines.append(f"barrier a0 = {sol.a0:.12g}")
        lines.append(f"residual Psi(a0; f_tilde') = {sol.g_at_opt:.3e}")
    lines.append(f"fit: value gap {f.value_gap:.3e}, slope gap {f.slope_gap:.3e}"
                 + (f", slope at S* {f.slope_at_S:.3e}" if f.slope_at_S is not None else "")
                 + (f", curvature {f.left_curvature:.3e} | {f.right_curvature:.3e}" if f.right_curvature is not None else "")
                 + f" ({'bounded' if f.bounded_variation else 'unbounded'} variation, {'pass' if f.passed else 'FAIL'})")
    return "\n".join(lines)


def cmd_solve(cfg: RunConfig) -> int:
    sol = solve(_kernel(cfg), cfg.cost)
    print(_report(sol))
    _write(cfg.out_dir / "solution.csv", SOLUTION_HEADER, [_solution_row("base", sol)])
    return 0


def _region(sol: PolicySolution, x: float) -> str:
    if x < sol.threshold:
        return "below_s"
    if sol.kind == "ss" and x <= sol.S_star:
        return "between"
    return "above_S"


def cmd_value(cfg: RunConfig) -> int:
    sol = solve(_kernel(cfg), cfg.cost)
    xs = cfg.x_grid
    v, vt = value_function(sol, xs), value_function_tilde(sol, xs)
    _write(cfg.out_dir / "value.csv", ["x", "v", "v_tilde", "region"],
           ([x, a, b, _region(sol, x)] for x, a, b in zip(xs, v, vt)))
    print(f"wrote {len(xs)} rows to {cfg.out_dir / 'value.csv'}")
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.sweep_param is None or not cfg.sweep_values:
        raise ConfigError("sweep needs [sweep] param and values")
    k = _kernel(cfg)
    header = ["param", "value", "s_star", "S_star", "a0"] + [f"v_at_{x:g}" for x in cfg.sweep_points]
    path = cfg.out_dir / "sweep.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for val in cfg.sweep_values:
            spec = replace(cfg.cost, **{cfg.sweep_param: val})
            sol = solve(k, spec)
            vs = value_function(sol, np.asarray(cfg.sweep_points))
            w.writerow([_fmt(v) for v in [cfg.sweep_param, val, sol.s_star, sol.S_star, sol.a0, *vs]])
            fh.flush()
            print(f"{cfg.sweep_param} = {val:g}: s* = {_fmt(sol.s_star) or '-'}, S* = {_fmt(sol.S_star) or '-'}, a0 = {sol.a0:.10g}")
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    sol = solve(_kernel(cfg), cfg.cost)
    rows = checks.monte_carlo_rows(sol, cfg.sim, cfg.auto_horizon)
    _write(cfg.out_dir / "mc.csv", ["quantity", "estimate", "std_error", "analytic", "z_score", "n_paths",
                                     "horizon_bias_bound"], rows)
    for r in rows:
        print(f"{r[0]:<24} {r[1]:12.6f} +- {r[2]:.6f}   analytic {r[3]:12.6f}   z = {r[4]:+.2f}")
    return 0


def cmd_check(cfg: RunConfig) -> int:
    results = checks.run_all(cfg.model, cfg.cost, cfg.n_terms, cfg.tail,
                             cfg.sim if cfg.check_monte_carlo else None, cfg.auto_horizon)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {"solve": cmd_solve, "value": cmd_value, "sweep": cmd_sweep, "simulate": cmd_simulate,
            "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levy-inventory", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--x-min", type=float)
    p.add_argument("--x-max", type=float)
    p.add_argument("--x-step", type=float)
    p.add_argument("--seed", type=int)
    return p


def _fail(kind: str, exc: BaseException, code: int) -> int:
    print(f"error\t{kind}\t{exc}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args)
    except ConfigError as exc:
        return _fail("config", exc, 2)
    try:
        return COMMANDS[args.command](cfg)
    except (ConfigError, SpecError, InvalidModelError) as exc:
        return _fail("config", exc, 2)
    except (BracketError, ConvergenceError, ArithmeticError, RuntimeError) as exc:
        return _fail("numerical", exc, 3)


if __name__ == "__main__":
    sys.exit(main())
