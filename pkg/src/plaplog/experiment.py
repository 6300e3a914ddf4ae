"""Experiment configuration, orchestration and report emission.

Configurations are flat TOML documents::

    p = 2.0
    q = 3.0
    N = 3
    s = 1.0
    R = 1.0
    grid_cells = 200
    profile = "eigen"        # power | bump | eigen | inline
    amplitude = 1.0
    dt0 = 1e-3
    t_max = 1.0
    seed = 0

Every key is listed in :data:`SCHEMA` with its type and default. Shape
parameters of named profiles are ``profile_beta``, ``profile_a`` and
``profile_width``; ``profile = "inline"`` takes cell values from ``values``.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import evolution, nehari
from .constants import WellConstants, well_constants
from .domain import Params, RadialField, make_grid, params_violations, profile
from .errors import ConfigurationError, ParseError
from .evolution import SolverConfig, Trajectory, extrapolate_blowup
from .functionals import EnergyReport, evaluate
from .nehari import WellVerdict
from .theorems import check_trajectory

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_REQUIRED = object()

SCHEMA = {
    "p": (float, _REQUIRED), "q": (float, _REQUIRED), "N": (int, _REQUIRED),
    "s": (float, _REQUIRED), "R": (float, 1.0),
    "grid_cells": (int, 100),
    "profile": (str, "power"), "amplitude": (float, 1.0),
    "profile_beta": (float, None), "profile_a": (float, None), "profile_width": (float, None),
    "values": (list, None),
    "dt0": (float, 1e-3), "t_max": (float, 1.0), "blowup_threshold": (float, 1e8),
    "dt_floor": (float, 1e-13), "theta_impl": (float, 1.0), "monitor_stride": (int, 1),
    "alpha_samples": (int, 32), "family_size": (int, 16), "safety_factor": (float, 1.25),
    "seed": (int, 0),
    "csv": (str, "series.csv"), "json": (str, "report.json"),
    "report": (str, "report.txt"), "plot_data": (str, "plot.csv"),
}
PROFILES = ("power", "bump", "eigen", "inline")


@dataclass
class ExperimentConfig:
    params: Params
    grid_cells: int
    profile: str
    amplitude: float
    shape: dict
    values: list | None
    solver: SolverConfig
    alpha_samples: int = 32
    family_size: int = 16
    safety_factor: float = 1.25
    seed: int = 0
    outputs: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def initial_field(self, grid) -> RadialField:
        if self.profile == "inline":
            return RadialField(self.amplitude * np.asarray(self.values, float), grid)
        return profile(grid, self.profile, self.amplitude, **self.shape)

    def with_overrides(self, grid_cells=None, seed=None) -> "ExperimentConfig":
        raw = dict(self.raw)
        if grid_cells is not None:
            raw["grid_cells"] = grid_cells
        if seed is not None:
            raw["seed"] = seed
        return config_from_mapping(raw)


def _coerce(key, value, kind):
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is str and isinstance(value, str):
        return value
    if kind is list and isinstance(value, list):
        return value
    raise ConfigurationError(f"key {key!r}: expected {kind.__name__}, got {value!r}",
                             [f"{key} has wrong type"], module="cli-io")


def config_from_mapping(doc: dict) -> ExperimentConfig:
    """Validate a parsed mapping; every problem is collected before raising."""
    problems = []
    unknown = sorted(set(doc) - set(SCHEMA))
    problems += [f"unknown key {k!r}" for k in unknown]
    vals = {}
    for key, (kind, default) in SCHEMA.items():
        if key not in doc:
            if default is _REQUIRED:
                problems.append(f"missing required key {key!r}")
            vals[key] = None if default is _REQUIRED else default
            continue
        try:
            vals[key] = _coerce(key, doc[key], kind)
        except ConfigurationError as exc:
            problems.append(str(exc))
            vals[key] = None
    if None not in (vals["p"], vals["q"], vals["N"], vals["s"], vals["R"]):
        problems += params_violations(vals["p"], vals["q"], vals["N"], vals["s"], vals["R"])
    if vals["grid_cells"] is not None and vals["grid_cells"] < 4:
        problems.append(f"grid_cells >= 4 violated ({vals['grid_cells']})")
    if vals["profile"] not in PROFILES:
        problems.append(f"profile must be one of {', '.join(PROFILES)} ({vals['profile']!r})")
    if vals["profile"] == "inline":
        v = vals["values"]
        if v is None:
            problems.append("profile 'inline' needs 'values'")
        elif vals["grid_cells"] is not None and len(v) != vals["grid_cells"]:
            problems.append(f"'values' has {len(v)} entries, grid_cells = {vals['grid_cells']}")
        elif not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            problems.append("'values' must be numbers")
    for k in ("alpha_samples", "family_size"):
        if vals[k] is not None and vals[k] < 1:
            problems.append(f"{k} >= 1 violated ({vals[k]})")
    if vals["safety_factor"] is not None and not vals["safety_factor"] >= 1:
        problems.append(f"safety_factor >= 1 violated ({vals['safety_factor']})")
    solver = None
    try:
        solver = SolverConfig(vals["dt0"], vals["t_max"], vals["blowup_threshold"],
                              vals["dt_floor"], vals["theta_impl"], vals["monitor_stride"])
    except ConfigurationError as exc:
        problems += exc.clauses
    except TypeError:
        pass
    if problems:
        raise ConfigurationError("invalid configuration: " + "; ".join(problems), problems,
                                 module="cli-io")
    shape = {k: vals["profile_" + k] for k in ("beta", "a", "width")
             if vals["profile_" + k] is not None}
    return ExperimentConfig(
        params=Params(vals["p"], vals["q"], vals["N"], vals["s"], vals["R"]),
        grid_cells=vals["grid_cells"], profile=vals["profile"], amplitude=vals["amplitude"],
        shape=shape, values=vals["values"], solver=solver,
        alpha_samples=vals["alpha_samples"], family_size=vals["family_size"],
        safety_factor=vals["safety_factor"], seed=vals["seed"],
        outputs={k: vals[k] for k in ("csv", "json", "report", "plot_data")}, raw=dict(doc))


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a TOML configuration document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"malformed configuration: {exc}") from exc
    nested = [k for k, v in doc.items() if isinstance(v, dict)]
    if nested:
        raise ParseError(f"configuration must be flat; found tables {nested}")
    return config_from_mapping(doc)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


# -- run ----------------------------------------------------------------------

@dataclass
class RunReport:
    config: ExperimentConfig
    constants: WellConstants
    d_est: float
    initial: EnergyReport
    classification: WellVerdict
    trajectory: Trajectory
    bound_reports: list
    residuals: dict
    d_drift: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "params": self.config.params.as_dict(),
            "seed": self.config.seed,
            "grid_cells": self.config.grid_cells,
            "constants": json.loads(self.constants.to_json()),
            "d_est": self.d_est,
            "d_drift": self.d_drift,
            "initial": self.initial.as_dict(),
            "classification": self.classification.as_dict(),
            "trajectory": self.trajectory.summary(),
            "bound_reports": [_jsonable(b.as_dict()) for b in self.bound_reports],
            "residuals": self.residuals,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        c = self.classification
        tr = self.trajectory.summary()
        lines = [f"params: {self.config.params.as_dict()}  grid_cells={self.config.grid_cells}"
                 f"  seed={self.config.seed}", "", self.constants.to_text(),
                 f"d_est = {self.d_est:.10g}" + (
                     f"  (drift {self.d_drift['relative_drift']:.2e} from "
                     f"{self.d_drift['cells'][0]} to {self.d_drift['cells'][1]} cells)"
                     if self.d_drift else ""),
                 f"classification: {c.label}  J={c.J:.10g}  I={c.I:.10g}  d_ref={c.d_ref:.10g}",
                 f"trajectory: verdict={tr['verdict']}  T_num={tr['T_num']}  steps={tr['steps']}",
                 f"residuals: energy_identity={self.residuals['energy_identity']:.3e}"
                 f"  dL_dt={self.residuals['dL_dt']:.3e}", ""]
        if not self.bound_reports:
            lines.append("no theorem applies to the initial data")
        else:
            lines.append(f"{'theorem':<11} {'bound':>14} {'observed':>14} {'margin':>12}  passed")
            for b in self.bound_reports:
                bv = b.bound_value if not isinstance(b.bound_value, list) else "envelope"
                ob = b.observed if not isinstance(b.observed, list) else "series"
                lines.append(f"{b.theorem_id:<11} {_fmt(bv):>14} {_fmt(ob):>14} "
                             f"{_fmt(b.margin):>12}  {b.passed}")
        return "\n".join(lines) + "\n"


def _fmt(x):
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def compute_constants(cfg: ExperimentConfig, grid=None) -> WellConstants:
    grid = grid or make_grid(cfg.params, cfg.grid_cells)
    return well_constants(cfg.params, grid, cfg.alpha_samples, cfg.family_size,
                          cfg.safety_factor)


def classify_initial(cfg: ExperimentConfig):
    """Return ``(verdict, d_est)`` for the configured initial field."""
    grid = make_grid(cfg.params, cfg.grid_cells)
    d = nehari.estimate_d(grid, cfg.params, cfg.family_size)
    return nehari.classify(cfg.initial_field(grid), cfg.params, d), d


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> RunReport:
    """Estimate constants, classify and evolve ``u0``, check the theorems.

    Artifacts are written to ``out_dir`` when given.
    """
    grid = make_grid(cfg.params, cfg.grid_cells)
    wc = compute_constants(cfg, grid)
    d = nehari.estimate_d(grid, cfg.params, cfg.family_size)
    u0 = cfg.initial_field(grid)
    rep0 = evaluate(u0, cfg.params)
    verdict = nehari.classify(u0, cfg.params, d)
    traj = evolution.run(u0, cfg.params, cfg.solver)
    bounds = check_trajectory(traj, cfg.params, wc)
    res = {k: float(v) for k, v in evolution.max_residuals(traj).items()}
    drift = nehari.resolution_drift(cfg.params, cfg.grid_cells, cfg.family_size, d)
    report = RunReport(cfg, wc, d, rep0, verdict, traj, bounds, res, drift)
    if out_dir is not None:
        write_outputs(report, out_dir)
    return report


def write_outputs(report: RunReport, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = report.config.outputs
    paths = {k: out / v for k, v in names.items()}
    emit_series(report.trajectory, paths["csv"])
    paths["json"].write_text(report.to_json())
    paths["report"].write_text(report.to_text())
    emit_plot_data(report, paths["plot_data"])
    return paths


def emit_series(traj: Trajectory, path) -> None:
    """CSV of the sampled monitors with round-trip float formatting."""
    Path(path).write_text(traj.to_csv())


def plot_columns(report: RunReport) -> tuple[list[str], list[list[float]]]:
    traj = report.trajectory
    t = traj.times
    L = traj.series("L")
    ids = {b.theorem_id: b for b in report.bound_reports}
    if "T2.3_decay" in ids:
        env = ids["T2.3_decay"].bound_value
        return ["t", "L", "envelope"], [list(r) for r in zip(t, L, env)]
    if traj.verdict == "blowup":
        q = report.config.params.q
        Tn, slope, icpt = extrapolate_blowup(t, L, q)
        pw = L ** ((2.0 - q) / 2.0)
        rows = [[a, b, c, slope * a + icpt] for a, b, c in zip(t, L, pw)]
        rows.append([Tn, float("nan"), float("nan"), slope * Tn + icpt])
        return ["t", "L", "L_pow", "L_pow_fit"], rows
    return ["t", "L"], [list(r) for r in zip(t, L)]


def emit_plot_data(report: RunReport, path) -> None:
    """Columnar plot data: observed ``L`` with the envelope or blow-up fit."""
    header, rows = plot_columns(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) for x in r])
    Path(path).write_text(buf.getvalue())
