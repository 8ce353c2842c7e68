"""Command-line front end: run an experiment from a flat key = value config and write CSV + manifest.

    qmachines <experiment> --config <path> [--out <path>] [--preset fig5a|fig5b|fig6|fig7|fig8]

Exit codes: 0 success, 2 configuration error, 3 numerical guard tripped.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from . import catalysis as cat
from . import cycles
from .entropy_bounds import sigma_along, tight_bound_constant_H
from .gaussian import GaussianState
from .lindblad import (
    GeneratorError,
    IntegrationError,
    SteadyStateError,
    integrate,
    qubit_thermal_generator,
    squeezed_bath_generator,
)
from .passivity import TrajectoryError, passive_state
from .quantum_core import (
    DivergentRelativeEntropyError,
    HilbertSpace,
    InvalidStateError,
    basis_state,
    bose_occupation,
    project_density,
    random_density,
    thermal_state,
    von_neumann_entropy,
)

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
NUMERIC_ERRORS = (IntegrationError, SteadyStateError, TrajectoryError, cycles.SlowDrivingError, cycles.RegimeError,
                  cat.IdentityError, DivergentRelativeEntropyError, InvalidStateError, FloatingPointError)


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text: str):
    return None if text.strip().lower() in ("none", "derived", "derive") else float(text)


def _choice(*options):
    def parse(text: str) -> str:
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return t
    return parse


# key -> (parser, default)
SCHEMAS = {
    "relax": {
        "kappa": (float, 1.0), "omega": (float, 1.0), "n_bar": (float, 0.0), "r": (float, 0.5),
        "t_max": (float, 5.0), "n_points": (int, 101), "fock_dim": (int, 41),
        "initial": (_choice("vacuum", "thermal", "coherent"), "vacuum"), "initial_n": (float, 0.0),
        "alpha": (float, 0.0),
    },
    "otto": {
        "omega_c": (float, 0.5), "omega_h": (float, 1.0), "T_c": (float, 1 / 3), "T_h": (float, 1.0),
        "r": (float, 0.5), "kappa": (float, 1.0), "stroke_time": (float, 12.0), "fock_dim": (int, 61),
        "delta_n_c": (_opt_float, None), "method": (_choice("analytic", "fock", "gaussian"), "analytic"),
        "extract_ergotropy": (_bool, True), "bath_kind": (_choice("squeezed", "second_kind"), "squeezed"),
    },
    "carnot": {
        "omega_start": (float, 25.0), "ramp_rate": (float, 0.05), "T_h": (float, 5.0), "r": (float, 0.2),
        "kappa": (float, 1.0), "duration": (float, 60.0), "fock_dim": (int, 41), "n_points": (int, 301),
    },
    "catalysis": {
        "panel": (_choice("a", "b", "c"), "b"), "omega0": (float, 3.0), "nu": (float, 0.5), "g": (float, 0.05),
        "T_h": (float, 1.0), "T_c": (float, 0.6), "kappa_ratio": (float, 0.1), "alpha0": (float, 1.0),
        "pump": (_choice("none", "linear", "quadratic"), "quadratic"),
        "gamma_t_min": (float, 0.0), "gamma_t_max": (float, 5.0), "n_points": (int, 51),
        "nu_min": (float, 0.25), "nu_max": (float, 1.5), "gamma_t": (float, 3.0),
    },
    "bounds": {
        "system": (_choice("qubit", "oscillator"), "qubit"), "kappa": (float, 1.0), "T": (float, 1.0),
        "omega": (float, 1.0), "r": (float, 0.0), "fock_dim": (int, 31),
        "initial": (_choice("excited", "ground", "coherent", "random"), "excited"), "alpha": (float, 1.0),
        "t_max": (float, 20.0), "n_points": (int, 201), "require_stationary": (_bool, False),
    },
}

SWEEPABLE = {"otto": ("omega_c", "r", "T_c", "T_h", "omega_h")}

PRESETS = {
    "fig5a": ("otto", dict(omega_h=1.0, T_h=1.0, T_c=1 / 3, r=0.5, method="analytic"),
              ("omega_c", "linspace(0.05, 0.95, 20)")),
    "fig5b": ("otto", dict(omega_h=1.0, omega_c=0.5, T_h=1.0, T_c=1 / 3, method="analytic"),
              ("r", "linspace(0, 1.5, 31)")),
    "fig6": ("relax", dict(n_bar=0.0, r=0.5, initial="vacuum", t_max=5.0), None),
    "fig7": ("catalysis", dict(T_h=1.0, T_c=0.6, kappa_ratio=0.1, alpha0=1.0), None),
    "fig8": ("carnot", dict(omega_start=25.0, ramp_rate=0.05, T_h=5.0, r=0.2, duration=60.0, fock_dim=41), None),
}


@dataclass
class ExperimentConfig:
    experiment: str
    parameters: dict
    sweep: tuple | None = None  # (name, grid)
    seed: int = 0
    workers: int = 1
    preset: str | None = None
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        out = dict(experiment=self.experiment, preset=self.preset, seed=self.seed, workers=self.workers,
                   parameters={k: v for k, v in sorted(self.parameters.items())})
        if self.sweep is not None:
            out["sweep"] = dict(name=self.sweep[0], grid=[float(x) for x in self.sweep[1]])
        return out


def _parse_grid(text: str) -> np.ndarray:
    t = text.strip()
    if t.startswith("linspace(") and t.endswith(")"):
        parts = [p.strip() for p in t[len("linspace("):-1].split(",")]
        if len(parts) != 3:
            raise ValueError("linspace(start, stop, count)")
        grid = np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))
    else:
        grid = np.array([float(p) for p in t.split(",") if p.strip()])
    if grid.size == 0 or not np.all(np.isfinite(grid)):
        raise ValueError("sweep grid must be non-empty and finite")
    return grid


def read_config_text(text: str) -> list[tuple[int, str, str]]:
    entries, seen = [], set()
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (s.strip() for s in body.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        entries.append((lineno, key, value))
    return entries


def build_config(experiment: str, text: str = "", preset: str | None = None) -> ExperimentConfig:
    if experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    schema = SCHEMAS[experiment]
    params = {k: default for k, (_, default) in schema.items()}
    sweep_spec = None
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}")
        pexp, pparams, psweep = PRESETS[preset]
        if pexp != experiment:
            raise ConfigError(f"preset {preset} belongs to experiment {pexp!r}, not {experiment!r}")
        params.update(pparams)
        sweep_spec = psweep
    seed, workers, raw = 0, 1, {}
    for lineno, key, value in read_config_text(text):
        raw[key] = value
        try:
            if key == "seed":
                seed = int(value)
            elif key == "workers":
                workers = int(value)
                if workers < 1:
                    raise ValueError("workers must be >= 1")
            elif key == "sweep":
                name, _, grid = value.partition(":")
                sweep_spec = (name.strip(), grid)
            elif key in schema:
                params[key] = schema[key][0](value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r} for experiment {experiment!r} "
                                  f"(allowed: {', '.join(sorted(schema))}, seed, workers, sweep)")
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    sweep = None
    if sweep_spec is not None:
        name, grid = sweep_spec
        if name not in SWEEPABLE.get(experiment, ()):
            raise ConfigError(f"sweep over {name!r} not supported for {experiment!r}")
        try:
            sweep = (name, _parse_grid(grid))
        except ValueError as exc:
            raise ConfigError(f"sweep: {exc}") from None
    return ExperimentConfig(experiment, params, sweep, seed, workers, preset, raw)


# experiments ---------------------------------------------------------------------------------


@dataclass
class Table:
    columns: list
    rows: list
    comments: list = field(default_factory=list)


def _otto_config(p: dict) -> cycles.OttoConfig:
    method = "gaussian" if p["method"] == "analytic" else p["method"]
    return cycles.OttoConfig(p["omega_c"], p["omega_h"], p["T_c"], p["T_h"], p["r"], p["kappa"], p["stroke_time"],
                             p["fock_dim"], p["delta_n_c"], method, p["extract_ergotropy"], p["bath_kind"])


def _otto_point(p: dict) -> list:
    cfg = _otto_config(p)
    flags = []
    try:
        eta, eta_max, eta_sigma = cycles.otto_efficiencies(cfg.n_c, cfg.n_h, cfg.delta_n_h, cfg.omega_c, cfg.omega_h,
                                                           cfg.T_c, cfg.T_h, cfg.delta_n_c)
        regime = "engine" if cfg.n_h >= cfg.n_c else "engine_and_refrigerator"
    except cycles.RegimeError as exc:
        eta = eta_max = eta_sigma = np.nan
        regime = "no_engine"
        flags.append(str(exc))
    if eta_sigma > 1:
        flags.append("eta_sigma above 1")
    eta_num = np.nan
    if p["method"] != "analytic":
        res = cycles.run_modified_otto(cfg)
        eta_num = res.efficiency
        flags.extend(res.flags)
        if res.regime != regime:
            flags.append(f"numeric regime {res.regime}")
    carnot = 1 - cfg.T_c / cfg.T_h if cfg.T_h > 0 else np.nan
    return [eta, eta_max, eta_sigma, carnot, regime, eta_num, "; ".join(flags)]


def run_otto(cfg: ExperimentConfig) -> Table:
    name, grid = cfg.sweep if cfg.sweep else ("none", np.array([np.nan]))
    points = []
    for v in grid:
        p = dict(cfg.parameters)
        if cfg.sweep:
            p[name] = float(v)
        points.append(p)
    for p in points:
        _otto_config(p)  # validate every point before running any
    if cfg.workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_otto_point, points))  # map keeps grid order
    else:
        results = [_otto_point(p) for p in points]
    rows = [[float(v)] + res for v, res in zip(grid, results)]
    return Table(["sweep_value", "eta", "eta_max", "eta_sigma", "eta_carnot", "regime", "eta_numeric", "flags"], rows,
                 [f"sweep: {name}", "efficiencies are dimensionless; eta_numeric is filled when a full cycle is run"])


def _relax_initial(p: dict, space: HilbertSpace):
    if p["initial"] == "vacuum":
        return basis_state(space, 0)
    if p["initial"] == "thermal":
        return thermal_state(space, p["initial_n"])
    from .gaussian import to_fock
    return to_fock(GaussianState.coherent(p["alpha"]), space)


def run_relax(cfg: ExperimentConfig) -> Table:
    p = cfg.parameters
    space = HilbertSpace(p["fock_dim"])
    gen = squeezed_bath_generator(p["kappa"], p["n_bar"], p["r"], p["omega"], space)
    rho0 = _relax_initial(p, space)
    traj = integrate(gen, rho0, (0.0, p["t_max"]), t_eval=np.linspace(0.0, p["t_max"], p["n_points"]))
    H = traj.hamiltonians[0]
    rows = []
    for t, rho in zip(traj.times, traj.states):
        trace_err = abs(np.trace(rho).real - 1.0)
        rho_c = project_density(rho)
        dec = passive_state(rho_c, H)
        energy = float(np.real(np.trace(rho @ H)))
        rows.append([t, energy, dec.passive_energy, energy - dec.passive_energy, von_neumann_entropy(rho_c),
                     trace_err, ""])
    if traj.flags:
        rows[-1][-1] = "; ".join(traj.flags)
    return Table(["t", "energy", "passive_energy", "ergotropy", "entropy", "trace_error", "flags"], rows,
                 ["units: t in 1/kappa, energies in the units of omega, entropy in k_B"])


def run_carnot(cfg: ExperimentConfig) -> Table:
    p = cfg.parameters
    rep = cycles.hot_isotherm_bounds(p["omega_start"], p["ramp_rate"], p["T_h"], p["r"], p["duration"], p["kappa"],
                                     p["fock_dim"], p["n_points"])
    rows = []
    for i, t in enumerate(rep.times):
        rows.append([t, rep.delta_S_curve[i], rep.dissipated_curve[i], rep.second_law_curve[i], rep.tight_curve[i],
                     ""])
    if rep.flags:
        rows[-1][-1] = "; ".join(rep.flags)
    return Table(["t", "delta_S", "E_d_over_T", "E_tilde_d_over_T", "Q_prime_over_T", "flags"], rows,
                 ["units: t in 1/kappa, entropies in k_B",
                  "E_tilde_d_over_T is the second-law bound for the squeezed bath; E_d_over_T is the plain "
                  "dissipated energy over T"])


def _cat_config(p: dict, pump: str, nu: float | None = None) -> cat.CatalysisConfig:
    return cat.fig7_config(pump, nu=nu if nu is not None else p["nu"], kappa_ratio=p["kappa_ratio"],
                           omega0=p["omega0"], g=p["g"], T_h=p["T_h"], T_c=p["T_c"])


def run_catalysis(cfg: ExperimentConfig) -> Table:
    p = cfg.parameters
    s0 = GaussianState.coherent(p["alpha0"])
    kinds = ("none", "linear", "quadratic")
    comments = [f"preset: T_c/T_h = {p['T_c'] / p['T_h']:g}, |kappa|/|Gamma| = {p['kappa_ratio']:g}, "
                f"|alpha(0)|^2 = {p['alpha0'] ** 2:g}", "identity_residual: relative residual of the power identity"]
    if p["panel"] == "a":
        rows = []
        for nu in np.linspace(p["nu_min"], p["nu_max"], p["n_points"]):
            cfgs = {k: _cat_config(p, k, float(nu)) for k in kinds}
            Gamma, _ = cat.drift_diffusion(cfgs["none"])
            if Gamma >= 0:
                rows.append([nu, np.nan, np.nan, np.nan, 0.0, "no gain (Gamma >= 0)"])
                continue
            t = p["gamma_t"] / abs(Gamma)
            pts = {k: cat.evolve_piston(c, s0, [t])[-1] for k, c in cfgs.items()}
            res = max(pt.identity_residual for pt in pts.values())
            flags = sorted({f for pt in pts.values() for f in pt.flags})
            rows.append([nu] + [pts[k].power_max for k in kinds] + [res, "; ".join(flags)])
        comments.append(f"power evaluated at |Gamma| t = {p['gamma_t']:g}")
        return Table(["nu", "power_none", "power_linear", "power_quadratic", "identity_residual", "flags"], rows,
                     comments)
    cfgs = {k: _cat_config(p, k) for k in kinds}
    Gamma, D = cat.drift_diffusion(cfgs["none"])
    grid = np.linspace(p["gamma_t_min"], p["gamma_t_max"], p["n_points"])
    times = grid / abs(Gamma)
    runs = {k: cat.evolve_piston(c, s0, times) for k, c in cfgs.items()}
    n = min(len(r) for r in runs.values())
    comments.append(f"Gamma = {Gamma:.17g}, D = {D:.17g}, time column is |Gamma| t")
    rows = []
    if p["panel"] == "b":
        pumped = runs[p["pump"]]
        eta0 = cat.unpumped_efficiency(cfgs["none"], p["alpha0"]) if Gamma < 0 else np.nan
        for i in range(n):
            pt = pumped[i]
            rows.append([grid[i], pt.eta, runs["none"][i].eta, eta0, cfgs["none"].eta_max, pt.eta_approx,
                         pt.identity_residual, "; ".join(pt.flags)])
        return Table(["t", "eta_pumped", "eta_unpumped", "eta_unpumped_formula", "eta_max_ref", "eta_pumped_approx",
                      "identity_residual", "flags"], rows, comments + [f"pumped = {p['pump']}"])
    W0 = cfgs["none"].nu * p["alpha0"] ** 2
    for i in range(n):
        e = [runs[k][i].ergotropy for k in kinds]
        res = max(runs[k][i].identity_residual for k in kinds)
        flags = sorted({f for k in kinds for f in runs[k][i].flags})
        rows.append([grid[i]] + e + [x / W0 for x in e] + [res, "; ".join(flags)])
    return Table(["t", "ergotropy_none", "ergotropy_linear", "ergotropy_quadratic", "ratio_none", "ratio_linear",
                  "ratio_quadratic", "identity_residual", "flags"], rows,
                 comments + ["ratios are relative to the initial ergotropy nu |alpha(0)|^2"])


def run_bounds(cfg: ExperimentConfig) -> Table:
    p = cfg.parameters
    rng = np.random.default_rng(cfg.seed)
    if p["system"] == "qubit":
        gen = qubit_thermal_generator(p["kappa"], p["T"], p["omega"])
        space = HilbertSpace(2)
        if p["initial"] == "excited":
            rho0 = basis_state(space, 1)
        elif p["initial"] == "ground":
            rho0 = basis_state(space, 0)
        elif p["initial"] == "random":
            rho0 = random_density(2, rng)
        else:
            raise ConfigError("initial = coherent needs system = oscillator")
    else:
        space = HilbertSpace(p["fock_dim"])
        gen = squeezed_bath_generator(p["kappa"], bose_occupation(p["omega"], p["T"]), p["r"], p["omega"], space)
        if p["initial"] == "coherent":
            from .gaussian import to_fock
            rho0 = to_fock(GaussianState.coherent(p["alpha"]), space)
        elif p["initial"] == "ground":
            rho0 = basis_state(space, 0)
        elif p["initial"] == "random":
            # random state on the lowest four levels
            rho0 = np.zeros((space.dim, space.dim), dtype=complex)
            rho0[:4, :4] = random_density(4, rng)
        else:
            rho0 = basis_state(space, 1)
    grid = np.linspace(0.0, p["t_max"], p["n_points"])
    traj = integrate(gen, rho0, (0.0, p["t_max"]), t_eval=grid)
    rep = tight_bound_constant_H(traj, p["T"], gen, waive_finality=not p["require_stationary"])
    sig = sigma_along(traj, gen)
    rows = [[t, rep.delta_S_curve[i], rep.second_law_curve[i], rep.tight_curve[i], sig[i][1], ""]
            for i, t in enumerate(traj.times)]
    if rep.flags:
        rows[-1][-1] = "; ".join(rep.flags)
    return Table(["t", "delta_S", "bound_second_law", "bound_tight", "sigma", "flags"], rows,
                 ["units: t in 1/kappa, entropies in k_B, sigma in k_B kappa"])


RUNNERS = dict(relax=run_relax, otto=run_otto, carnot=run_carnot, catalysis=run_catalysis, bounds=run_bounds)


# output --------------------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, int, np.floating, np.integer)):
        return "%.17g" % float(v)
    return str(v)


def render_csv(table: Table, header: list[str]) -> str:
    buf = io.StringIO()
    for line in header + table.comments:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def toolkit_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def run(cfg: ExperimentConfig, out: str) -> dict:
    t0 = time.perf_counter()
    table = RUNNERS[cfg.experiment](cfg)
    wall = time.perf_counter() - t0
    header = [f"qmachines {toolkit_version()} experiment={cfg.experiment}"
              + (f" preset={cfg.preset}" if cfg.preset else "")]
    text = render_csv(table, header)
    _atomic_write(out, text)
    flags_col = table.columns.index("flags") if "flags" in table.columns else None
    row_flags = {str(i): r[flags_col] for i, r in enumerate(table.rows) if flags_col is not None and r[flags_col]}
    manifest = dict(toolkit_version=toolkit_version(), config=cfg.echo(), output=os.path.basename(out),
                    csv_sha256=hashlib.sha256(text.encode()).hexdigest(), rows=len(table.rows),
                    flags=row_flags, wall_time_s=round(wall, 3))
    _atomic_write(out + ".manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="qmachines", description=__doc__.splitlines()[0])
    ap.add_argument("experiment", choices=sorted(SCHEMAS))
    ap.add_argument("--config", help="flat key = value file ('#' comments); optional with --preset")
    ap.add_argument("--out", help="CSV path (default <experiment>.csv); the manifest goes to <out>.manifest.json")
    ap.add_argument("--preset", choices=sorted(PRESETS))
    ap.add_argument("-v", "--verbose", action="store_true")
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.config is None and args.preset is None:
            raise ConfigError("--config is required unless --preset is given")
        text = ""
        if args.config is not None:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        cfg = build_config(args.experiment, text, args.preset)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or f"{args.experiment}.csv"
    try:
        manifest = run(cfg, out)
    except NUMERIC_ERRORS as exc:
        print(f"numerical guard: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, GeneratorError, cat.CatalysisConfigError, cat.SpectrumError, ValueError) as exc:
        # parameter combinations rejected by the physics modules
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("wrote %s (%d rows, %.2fs)", out, manifest["rows"], manifest["wall_time_s"])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
