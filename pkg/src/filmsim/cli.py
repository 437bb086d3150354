"""Experiment runner: ``filmsim fit|sweep|ber|validate --config <file>``.

Writes figure-ready tabular outputs with a resolved-config comment header;
numeric cells use 17 significant digits so reruns round-trip exactly.
"""

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .baselines import (
    ArchitectureSpec,
    SingularChannelError,
    fit_architecture,
    mimo_zf_baseline,
)
from .cascade import beamformer, end_to_end
from .config import ConfigError, ExperimentConfig, load_config_file
from .metrics import ber_monte_carlo, dbm_to_watt, nmse, sum_rate, uniform_budget
from .optimizer import NonFiniteObjectiveError, OptimizerConfig
from .propagation import UserSet, user_channel
from .scenario import Scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

THREADS_ENV = "FILM_SIM_THREADS"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _header_lines(cfg: ExperimentConfig, seed: int) -> list[str]:
    lines = [f"# filmsim {__version__}", f"# seed = {_fmt(seed)}"]
    for key, value in cfg.resolved.items():
        if isinstance(value, list):
            value = ", ".join(_fmt(v) for v in value)
        else:
            value = _fmt(value)
        lines.append(f"# config {key} = {value}")
    return lines


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_table(path, cfg, seed, columns, rows, output_format):
    if output_format == "json":
        payload = {
            "version": __version__,
            "seed": seed,
            "config": cfg.resolved,
            "columns": columns,
            "rows": [[row[c] for c in columns] for row in rows],
        }
        _atomic_write(path, json.dumps(payload, indent=1, default=_fmt) + "\n")
        return
    lines = _header_lines(cfg, seed)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    _atomic_write(path, "\n".join(lines) + "\n")


def _table_path(out_dir: str, stem: str, output_format: str) -> str:
    ext = "json" if output_format == "json" else "csv"
    return os.path.join(out_dir, f"{stem}.{ext}")


def _with_users(scenario: Scenario, k: int) -> Scenario:
    users = scenario.users
    if k > users.n_users:
        raise ConfigError(f"sweep needs {k} users but the config defines {users.n_users}")
    subset = UserSet(theta=users.theta[:k], phi=users.phi[:k],
                     distance=users.distance[:k], exponent=users.exponent)
    return dataclasses.replace(scenario, users=subset)


def _apply_sweep(parameter, value, spec: ArchitectureSpec, scenario: Scenario):
    if parameter == "N":
        side = math.isqrt(int(value))
        if side * side != int(value) or value != int(value):
            raise ConfigError(f"sweep value N={value} is not a perfect square")
        return dataclasses.replace(spec, n_x=side, n_z=side), scenario
    if parameter == "K":
        if value != int(value) or value < 1:
            raise ConfigError(f"sweep value K={value} is not a positive integer")
        return spec, _with_users(scenario, int(value))
    if parameter == "y_max":
        return dataclasses.replace(spec, y_max=value * 1e-3), scenario
    if parameter == "rho":
        return dataclasses.replace(spec, rho=value), scenario
    if parameter == "P_t":
        return spec, dataclasses.replace(scenario, p_total=dbm_to_watt(value))
    raise ConfigError(f"unknown sweep parameter {parameter!r}")


def _converged_channel(cfg: ExperimentConfig, spec, scenario, opt: OptimizerConfig):
    """Fit (or solve, for MIMO) one architecture; return (g, alpha, fit_nmse)."""
    if spec.kind == "MIMO":
        res = mimo_zf_baseline(scenario, spec)
        fit_nmse = nmse(res.g, res.alpha) if res.alpha != 0 else float("inf")
        return res.g, res.alpha, fit_nmse
    fit = fit_architecture(spec, scenario,
                           dataclasses.replace(opt, shape_updates=cfg.shape_updates_for(spec)))
    h = user_channel(scenario.users, fit.state.layers[-1].geometry, scenario.wavelength).H
    g = end_to_end(h, beamformer(fit.state))
    return g, fit.state.alpha, float(fit.nmse_trace[-1])


def run_fit(cfg: ExperimentConfig, out_dir: str, seed: int) -> int:
    if len(cfg.architectures) != 1:
        raise ConfigError("fit needs exactly one architecture.kind")
    spec = cfg.architectures[0]
    if spec.kind == "MIMO":
        raise ConfigError("fit applies to metasurface architectures; MIMO has no fit")
    opt = dataclasses.replace(cfg.optimizer, seed=seed,
                              shape_updates=cfg.shape_updates_for(spec))
    result = fit_architecture(spec, cfg.scenario, opt)
    rows = [
        {"iteration": it + 1, "J": float(result.j_trace[it]),
         "nmse": float(result.nmse_trace[it]), "alpha": float(result.alpha_trace[it])}
        for it in range(result.iterations)
    ]
    os.makedirs(out_dir, exist_ok=True)
    _write_table(_table_path(out_dir, "trace", cfg.output_format), cfg, seed,
                 ["iteration", "J", "nmse", "alpha"], rows, cfg.output_format)
    state = result.state
    payload = {
        "version": __version__,
        "architecture": spec.kind,
        "alpha": state.alpha,
        "phases": [layer.theta.tolist() for layer in state.layers],
        "y_offsets_m": [layer.geometry.y_offsets.tolist() for layer in state.layers],
        "iterations": result.iterations,
        "converged": result.converged,
        "final_nmse": float(result.nmse_trace[-1]),
    }
    _atomic_write(os.path.join(out_dir, "state.json"), json.dumps(payload, indent=1) + "\n")
    print(f"fit: {result.iterations} iterations, final nmse {result.nmse_trace[-1]:.3e}")
    return EXIT_OK


def run_sweep(cfg: ExperimentConfig, out_dir: str, seed: int, threads: int) -> int:
    if cfg.sweep is None:
        raise ConfigError("config has no sweep block")
    opt = dataclasses.replace(cfg.optimizer, seed=seed)
    tasks = [
        (value, spec)
        for value in cfg.sweep.values
        for spec in cfg.architectures
    ]

    def one(task):
        value, spec = task
        spec2, scen2 = _apply_sweep(cfg.sweep.parameter, value, spec, cfg.scenario)
        t0 = time.perf_counter()
        g, alpha, fit_nmse = _converged_channel(cfg, spec2, scen2, opt)
        rates = sum_rate(g, alpha, scen2.uniform_budget())
        seconds = time.perf_counter() - t0
        return {
            "sweep_param": cfg.sweep.parameter, "value": value,
            "architecture": spec2.kind, "nmse": fit_nmse,
            "sum_rate": rates.sum_rate, "upper_bound": rates.upper_bound,
            "seconds": seconds,
        }

    rows = _run_pool(one, tasks, threads)
    os.makedirs(out_dir, exist_ok=True)
    _write_table(_table_path(out_dir, "sweep", cfg.output_format), cfg, seed,
                 ["sweep_param", "value", "architecture", "nmse", "sum_rate",
                  "upper_bound", "seconds"], rows, cfg.output_format)
    print(f"sweep: {len(rows)} rows")
    return EXIT_OK


def run_ber(cfg: ExperimentConfig, out_dir: str, seed: int, threads: int) -> int:
    if cfg.ber is None:
        raise ConfigError("config has no ber block")
    opt = dataclasses.replace(cfg.optimizer, seed=seed)
    fitted = [
        (spec, _converged_channel(cfg, spec, cfg.scenario, opt))
        for spec in cfg.architectures
    ]
    tasks = [
        (spec, g, alpha, p_dbm)
        for p_dbm in cfg.ber.p_t_dbm
        for (spec, (g, alpha, _)) in fitted
    ]

    def one(task):
        spec, g, alpha, p_dbm = task
        budget = uniform_budget(dbm_to_watt(p_dbm), cfg.scenario.noise_vector(),
                                cfg.scenario.n_users)
        _, avg = ber_monte_carlo(g, alpha, budget, cfg.ber.n_symbols, seed,
                                 equalize_by=cfg.ber.receiver)
        return {"P_t_dBm": p_dbm, "architecture": spec.kind, "ber": avg,
                "n_symbols": cfg.ber.n_symbols, "seed": seed}

    rows = _run_pool(one, tasks, threads)
    os.makedirs(out_dir, exist_ok=True)
    _write_table(_table_path(out_dir, "ber", cfg.output_format), cfg, seed,
                 ["P_t_dBm", "architecture", "ber", "n_symbols", "seed"], rows,
                 cfg.output_format)
    print(f"ber: {len(rows)} rows")
    return EXIT_OK


def _run_pool(fn, tasks, threads):
    """Run tasks possibly in parallel; results keep the task order."""
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def _resolve_threads(arg_threads) -> int:
    if arg_threads is not None:
        return max(1, arg_threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="filmsim",
        description="Layered-metasurface beamforming experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("fit", "fit one architecture; write trace.csv and state.json"),
        ("sweep", "run the configured parameter sweep; write sweep.csv"),
        ("ber", "run the BER power sweep; write ber.csv"),
        ("validate", "parse and validate the config, then exit"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the experiment config")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="override optimizer.seed")
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (or set {THREADS_ENV})")
    args = parser.parse_args(argv)

    try:
        cfg = load_config_file(args.config)
        threads = _resolve_threads(args.threads)
        seed = args.seed if args.seed is not None else cfg.optimizer.seed
        out_dir = args.out if args.out is not None else cfg.output_dir
        if args.command == "validate":
            print(f"config OK: {len(cfg.architectures)} architecture(s), "
                  f"K={cfg.scenario.n_users}, "
                  f"wavelength={cfg.scenario.wavelength * 1e3:.4g} mm")
            return EXIT_OK
        if args.command == "fit":
            return run_fit(cfg, out_dir, seed)
        if args.command == "sweep":
            return run_sweep(cfg, out_dir, seed, threads)
        return run_ber(cfg, out_dir, seed, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonFiniteObjectiveError, SingularChannelError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
