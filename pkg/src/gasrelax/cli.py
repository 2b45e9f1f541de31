"""Command-line front end: bounds, gamma sweeps, simulation campaigns, reports.

Runs are described by a plain-text config of `key = value` lines (# starts a
comment).  Every key can also be given as a --key flag, which overrides the
file.  Unknown keys are errors.  Exit codes: 0 success, 1 runtime failure,
2 validation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .bounds import (PhysicalUnits, RegimeError, build_bound_report,
                     t_relax_lower)
from .dynamics import (EnergyDriftError, IntegratorConfig, WallBreachError,
                       lower_bound_curve, make_relaxation_report)
from .gibbs import build_marginal, gamma_h, gamma_tilde_h, hoelder_certificate
from .model import ModelParams
from .numerics import QuadratureError
from .rng import substream

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2

_OUTPUT_DIR_ENV = "GASRELAX_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # model
    n_particles: int = 64
    beta: float = 1.0
    delta_wall: float = 1.0
    box_side: float = 10.0
    field: float = 1e-3
    mass: float = 1.0
    sigma: float = 1.0
    # physical unit constants (all four or none)
    mass_kg: Optional[float] = None
    sigma_m: Optional[float] = None
    box_m: Optional[float] = None
    temperature_k: Optional[float] = None
    # integrator
    dt: float = 2.5e-4
    t_end: Optional[float] = None
    energy_drift_tol: float = 1e-5
    wall_guard: float = 0.999
    # estimator sizes
    n_samples: int = 100000
    n_traj: int = 10000
    n_times: int = 64
    grid_size: int = 2048
    # gamma sweep
    delta_moment: float = 0.1
    epsilon: float = 0.01
    h_min: float = 1e-5
    h_max: float = 0.1
    h_points: int = 9
    # run control
    seed: int = 20260808
    workers: int = 1
    output_dir: str = ""

    def __post_init__(self):
        if not self.output_dir:
            self.output_dir = os.environ.get(_OUTPUT_DIR_ENV, ".")
        units = [self.mass_kg, self.sigma_m, self.box_m, self.temperature_k]
        given = [u is not None for u in units]
        if any(given) and not all(given):
            raise ConfigError("physical units require all of mass_kg, sigma_m, "
                              "box_m, temperature_k")

    def model_params(self) -> ModelParams:
        return ModelParams(n_particles=self.n_particles, beta=self.beta,
                           delta_wall=self.delta_wall, box_side=self.box_side,
                           field=self.field, mass=self.mass, sigma=self.sigma)

    def physical_units(self) -> Optional[PhysicalUnits]:
        if self.mass_kg is None:
            return None
        return PhysicalUnits(mass_kg=self.mass_kg, sigma_m=self.sigma_m,
                             box_m=self.box_m, temperature_k=self.temperature_k)

    def integrator_config(self, t0: float) -> IntegratorConfig:
        t_end = self.t_end if self.t_end is not None else 2.0 * t0
        return IntegratorConfig(dt=self.dt, t_end=t_end,
                                energy_drift_tol=self.energy_drift_tol,
                                wall_guard=self.wall_guard)

    def hash(self) -> str:
        blob = "\n".join(f"{f.name}={getattr(self, f.name)!r}"
                         for f in fields(self))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_INT_KEYS = {"n_particles", "n_samples", "n_traj", "n_times", "grid_size",
             "h_points", "seed", "workers"}
_STR_KEYS = {"output_dir"}
_OPTIONAL_FLOAT_KEYS = {"mass_kg", "sigma_m", "box_m", "temperature_k", "t_end"}
_ALL_KEYS = {f.name for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    try:
        if key in _STR_KEYS:
            return raw
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config_file(path: str) -> dict:
    values = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def load_config(args: argparse.Namespace) -> RunConfig:
    values = parse_config_file(args.config) if args.config else {}
    for key in _ALL_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = _coerce(key, flag) if isinstance(flag, str) else flag
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _meta(config: RunConfig) -> dict:
    return {"version": __version__, "config_hash": config.hash(),
            "seed": config.seed}


def _meta_lines(config: RunConfig) -> list[str]:
    return [f"gasrelax {__version__}",
            f"config_hash: {config.hash()}",
            f"seed: {config.seed}"]


def _write_csv(path: Path, config: RunConfig, header: list[str],
               rows: list[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        for line in _meta_lines(config):
            fh.write(f"# {line}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def cmd_bounds(config: RunConfig) -> int:
    params = config.model_params()
    report = build_bound_report(params, n_samples=config.n_samples,
                                rng=substream(config.seed, 101),
                                units=config.physical_units())
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bounds_report.json").write_text(report.to_json(_meta(config)) + "\n")
    print(f"c = {report.c:.6f}")
    print(f"eta_analytic = {report.eta_analytic:.6f}")
    print(f"t0_natural = {report.t0_natural:.6f}")
    if report.t0_physical is not None:
        print(f"t0_physical = {report.t0_physical:.6e} s")
    print(f"z_tilde = {report.z_tilde:.6f}")
    for chk in report.inequality_checks:
        verdict = "PASS" if chk.passed else "FAIL"
        print(f"{verdict} {chk.name}: lhs={chk.lhs:.6g} rhs={chk.rhs:.6g}")
    return EXIT_OK if report.all_passed else EXIT_RUNTIME


def cmd_gamma(config: RunConfig) -> int:
    params = config.model_params()
    marginal = build_marginal(params, grid_size=config.grid_size)
    h_grid = [0.0] + [float(h) for h in np.geomspace(config.h_min, config.h_max,
                                                     config.h_points)]
    rows = []
    cert_limit = config.delta_moment / (2.0 * params.beta)
    for h in h_grid:
        gam = gamma_h(params, marginal, h)
        gtl = gamma_tilde_h(params, marginal, h)
        if h < cert_limit:
            cert = hoelder_certificate(params, marginal, config.delta_moment,
                                       h, config.epsilon)
            rows.append((h, gam, gtl, cert.hoelder_bound, cert.ok))
        else:
            rows.append((h, gam, gtl, float("nan"), False))
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "gamma_sweep.csv", config,
               ["h", "gamma", "gamma_tilde", "hoelder_bound", "pass"], rows)
    print(f"gamma sweep written: {len(rows)} rows, "
          f"certificate limit h < {cert_limit:.6g}")
    return EXIT_OK


def cmd_simulate(config: RunConfig) -> int:
    params = config.model_params()
    t0 = t_relax_lower(params)
    int_config = config.integrator_config(t0)
    report, series = make_relaxation_report(
        params, int_config, n_traj=config.n_traj, seed=config.seed,
        n_times=config.n_times, n_workers=max(1, config.workers))
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "relaxation_report.json").write_text(
        report.to_json(_meta(config)) + "\n")
    curve = lower_bound_curve(params, params.field, series.times)
    rows = list(zip((float(t) for t in series.times),
                    (float(c) for c in series.c_values),
                    (float(e) for e in series.std_errors),
                    (float(b) for b in np.atleast_1d(curve))))
    _write_csv(out / "correlation.csv", config,
               ["t", "c", "stderr", "bound_curve"], rows)
    t_star = report.t_star_empirical
    print(f"t0_bound = {report.t0_bound:.6f}")
    print("t_star = " + (f"{t_star:.6f}" if t_star is not None
                         else "not crossed within t_end"))
    for name in ("positivity_ok", "curve_check", "displacement_ok"):
        verdict = "PASS" if getattr(report, name) else "FAIL"
        print(f"{verdict} {name}")
    print(f"max_energy_drift = {report.max_energy_drift:.3e}")
    return EXIT_OK if report.all_ok else EXIT_RUNTIME


def cmd_report(config: RunConfig) -> int:
    out = Path(config.output_dir)
    bounds_path = out / "bounds_report.json"
    relax_path = out / "relaxation_report.json"
    missing = [str(p) for p in (bounds_path, relax_path) if not p.exists()]
    if missing:
        raise ConfigError("missing input files: " + ", ".join(missing))
    bounds_doc = json.loads(bounds_path.read_text())
    relax_doc = json.loads(relax_path.read_text())
    t0 = relax_doc["t0_bound"]
    t_star = relax_doc["t_star_empirical"]
    print(f"analytic lower bound t0 = {t0:.6f}")
    if isinstance(t_star, str):
        print(f"empirical crossing t* : {t_star} (t* >= t0 holds)")
    else:
        holds = "holds" if t_star >= t0 else "VIOLATED"
        print(f"empirical crossing t* = {t_star:.6f} (t* >= t0 {holds})")
    print(f"eta_analytic = {bounds_doc['eta_analytic']:.6f}, "
          f"eta_empirical = {bounds_doc['eta_empirical']['value']:.6f}")
    t0_si = bounds_doc.get("t0_physical_seconds")
    if t0_si is not None:
        print(f"t0_physical = {t0_si:.6e} s")
    flags = {name: relax_doc[name] for name in
             ("positivity_ok", "curve_check", "displacement_ok")}
    print("checks: " + ", ".join(f"{k}={v}" for k, v in flags.items()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gasrelax",
        description="Relaxation-time bounds for a gas in a box: closed forms "
                    "and empirical verification.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("bounds", "compute analytic bounds and inequality checks"),
        ("gamma", "sweep the measure-change diagnostics over field sizes"),
        ("simulate", "run the ensemble campaign against the bound"),
        ("report", "summarize previously written reports"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="key = value configuration file")
        for f in fields(RunConfig):
            p.add_argument(f"--{f.name}", default=None,
                           help=f"override config key {f.name}")
    return parser


_COMMANDS = {"bounds": cmd_bounds, "gamma": cmd_gamma,
             "simulate": cmd_simulate, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        return _COMMANDS[args.command](config)
    except (ConfigError, RegimeError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (QuadratureError, EnergyDriftError, WallBreachError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
