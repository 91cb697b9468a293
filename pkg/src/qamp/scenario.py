"""Scenario runs, figure presets and their on-disk artifacts.

A run directory holds ``thermo.csv`` (times in 1/Gamma_H, energies in units
of lambda, currents in lambda^2, with hbar = 1), ``snapshots/<F>_t<time>.csv``
phase-space grids with JSON sidecars, and ``meta.json``.  ``meta.json``
carries the fully resolved configuration, so it can be passed back to
``simulate --config`` to repeat the run bit for bit.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, serialize_config
from .errors import ConfigError, IntegratorAbort, QampError
from .hilbert import partial_trace
from .integrate import evolve
from .phasespace import (
    GridSpec,
    grid_distance,
    negativity_metrics,
    parity_expectation,
    q_function,
    read_grid_csv,
    wigner_function,
    write_grid_csv,
)
from .semiclassical import SemiclassicalModel, semiclassical_report
from .thermo import CSV_COLUMNS, detect_steady_state, first_law_residual

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "QAMP_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "qamp_output"
FAST_OVERRIDES = {"lambda_over_gamma": 100.0, "field_dim": 60}
_QW = {"Q": q_function, "W": wigner_function}


def output_root():
    return Path(os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT))


def _clean(obj):
    """JSON-safe copy: NaN/inf become null, numpy scalars become floats."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(_clean(doc), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _fmt(v):
    return repr(float(v))


def write_thermo_csv(series, path):
    """One row per sample; ``t`` converted to units of 1/Gamma_H."""
    g = series.model.gamma_h
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for s in series.samples:
            row = s.as_dict()
            row["t"] = s.t * g
            fh.write(",".join(_fmt(row[c]) for c in CSV_COLUMNS) + "\n")


def read_thermo_csv(path):
    """Columns of a thermo CSV as a dict of float arrays."""
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    data = np.atleast_1d(data)
    return {name: np.asarray(data[name], dtype=float) for name in data.dtype.names}


def snapshot_name(kind, t):
    return f"{kind}_t{t:g}"


def grid_for(config, rho_f):
    if config.grid_radius is not None:
        return GridSpec.square(config.grid_radius, config.grid_points)
    return GridSpec.auto(rho_f, config.grid_points)


def final_window(series, window):
    """Mean currents and ratios over the last ``window`` (internal units)."""
    t = np.asarray(series.times)
    sel = t >= t[-1] - window * (1 + 1e-9)
    qh = series.column("qdot_h")[sel].mean()
    qc = series.column("qdot_c")[sel].mean()
    pf = series.column("p_f")[sel].mean()
    eta = series.column("eta")[sel]
    return {
        "qdot_h": qh,
        "qdot_c": qc,
        "p_f": pf,
        "eta": float(np.mean(eta)) if np.all(np.isfinite(eta)) else float("nan"),
        "qdot_c_over_qdot_h": qc / qh if qh else float("nan"),
        "p_f_over_qdot_h": pf / qh if qh else float("nan"),
    }


def health(series, config):
    g = series.model.gamma_h
    out = {
        "dt": series.dt,
        "backend": series.backend,
        "samples": len(series.samples),
        "max_trace_drift": None,
        "min_eigenvalue": None,
        "max_tail_mass": None,
        "max_parity_drift": None,
        "steady_state_time": None,
        "max_first_law_residual_after_steady": None,
    }
    if not series.diagnostics:
        return out
    parity = np.array([d.parity for d in series.diagnostics])
    out.update(
        max_trace_drift=series.max_trace_drift,
        min_eigenvalue=series.min_eigenvalue,
        max_tail_mass=series.max_tail_mass,
        max_parity_drift=float(np.max(np.abs(parity - parity[0]))),
    )
    t_ss = detect_steady_state(series, config.steady_window / g, config.steady_tol)
    if t_ss is not None:
        out["steady_state_time"] = t_ss * g
        after = [first_law_residual(s) for s in series.samples if s.t >= t_ss]
        out["max_first_law_residual_after_steady"] = max(after)
    return out


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    out_dir: Path
    status: str
    meta: dict
    series: object = None
    grids: dict = field(default_factory=dict)

    @property
    def exit_code(self):
        return 0 if self.status == "ok" else 3


def resolve_output_dir(config, out_dir=None):
    if out_dir is not None:
        return Path(out_dir)
    if config.output_dir:
        return Path(config.output_dir)
    return output_root() / config.scenario_id


def run_scenario(config, out_dir=None, keep_grids=False):
    """Run one scenario and write its artifacts.

    Configuration problems raise :class:`ConfigError` before anything is
    written.  An integrator abort is recorded in ``meta.json`` together with
    the partial series and gives ``status == "aborted"``.
    """
    model = config.build_model()
    initial = config.initial_state(model)
    try:
        icfg = config.integrator_config(model)
    except (QampError, ValueError) as err:
        raise ConfigError(str(err)) from err
    out = resolve_output_dir(config, out_dir)
    out.mkdir(parents=True, exist_ok=True)

    status, error = "ok", None
    try:
        series = evolve(initial.rho, model, icfg)
    except IntegratorAbort as err:
        series = err.series
        status = "aborted"
        error = {"message": str(err), "metric": err.metric, "value": err.value, "t": err.time * model.gamma_h}
        log.error("integrator abort: %s", err)
    except QampError as err:
        raise ConfigError(str(err)) from err

    write_thermo_csv(series, out / "thermo.csv")

    grids, snap_files, warnings = {}, [], []
    if config.phase_space and series.snapshots:
        (out / "snapshots").mkdir(exist_ok=True)
    for t_int, rho in sorted(series.snapshots.items()):
        t = t_int * model.gamma_h
        rho_f = partial_trace(rho, "field", model.layout)
        spec = grid_for(config, rho_f)
        for kind in config.phase_space:
            grid = _QW[kind](rho_f, spec, check=False)
            name = snapshot_name(kind, t)
            integral = grid.integral()
            if abs(integral - 1.0) > 0.01:
                warnings.append(f"{name}: grid integral {integral:.4f}; grid does not cover the state")
            write_grid_csv(
                grid,
                out / "snapshots" / f"{name}.csv",
                {"t": t, "scenario_id": config.scenario_id, "parity": parity_expectation(rho_f)},
            )
            snap_files.append(f"snapshots/{name}.csv")
            if keep_grids:
                grids[(kind, round(t, 12))] = grid

    meta = {
        "scenario_id": config.scenario_id,
        "status": status,
        "error": error,
        "config": config.to_dict(),
        "config_text": serialize_config(config),
        "initial_discarded_mass": initial.discarded,
        "units": {"time": "1/Gamma_H", "energy": "hbar*lambda", "current": "hbar*lambda^2"},
        "health": health(series, config),
        "final_window": final_window(series, config.steady_window / model.gamma_h) if series.samples else None,
        "snapshots": snap_files,
        "warnings": warnings,
    }
    write_json(out / "meta.json", meta)
    return ScenarioResult(config, out, status, meta, series, grids)


# presets ---------------------------------------------------------------

_FOCK4_VS_MIXED4 = (
    ("fock", {"atom_level": 1, "field_state": "fock", "fock_n": 4}),
    ("mixed", {"atom_level": 1, "field_state": "poisson_mixed", "field_mean": 4.0}),
)
_PHASE_TIMES = (0.0, 0.1, 8.0)

PRESETS = {
    "fig2": (
        ("order2", {"interaction_order": 2, "atom_level": 2, "field_state": "vacuum", "phase_space": ()}),
        ("order1", {"interaction_order": 1, "atom_level": 2, "field_state": "vacuum", "phase_space": ()}),
    ),
    "fig3": tuple((b, dict(o, phase_space=())) for b, o in _FOCK4_VS_MIXED4),
    "fig4": tuple(
        (b, dict(o, snapshots=_PHASE_TIMES, phase_space=("Q",), grid_radius=9.0)) for b, o in _FOCK4_VS_MIXED4
    ),
    "fig5": tuple(
        (b, dict(o, snapshots=_PHASE_TIMES, phase_space=("W",), grid_radius=9.0)) for b, o in _FOCK4_VS_MIXED4
    ),
    "fig6": tuple(
        (b, dict(o, interaction_order=1, snapshots=(0.0, 0.1, 10.0), phase_space=("W",), grid_radius=9.0))
        for b, o in _FOCK4_VS_MIXED4
    ),
    "fig7": (
        ("fock", {"atom_level": 1, "field_state": "fock", "fock_n": 3,
                  "snapshots": _PHASE_TIMES, "phase_space": ("W",), "grid_radius": 9.0}),
        ("mixed", {"atom_level": 1, "field_state": "poisson_mixed", "field_mean": 3.0,
                   "snapshots": _PHASE_TIMES, "phase_space": ("W",), "grid_radius": 9.0}),
    ),
}
PRESET_NAMES = tuple(PRESETS) + ("semiclassical_table",)


def preset_configs(name, fast=False):
    """``[(branch, ScenarioConfig), ...]`` for a figure preset."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}", "preset")
    tag = f"{name}_fast" if fast else name
    out = []
    for branch, overrides in PRESETS[name]:
        values = dict(overrides, scenario_id=f"{tag}_{branch}")
        if fast:
            values.update(FAST_OVERRIDES)
        out.append((branch, ScenarioConfig(**values)))
    return out


def _run_branch(args):
    config, out_dir = args
    result = run_scenario(config, out_dir)
    return result.status, result.meta


def compare_branches(a_dir, b_dir, meta_a, meta_b):
    """Pairwise grid distances and thermodynamic differences of two branches."""
    out = {"grids": {}}
    fa, fb = meta_a.get("final_window") or {}, meta_b.get("final_window") or {}
    for key in ("p_f", "eta"):
        if fa.get(key) is not None and fb.get(key) is not None:
            out[f"{key}_rel_diff"] = abs(fa[key] - fb[key]) / abs(fb[key])
    for rel in meta_a.get("snapshots", []):
        if rel not in meta_b.get("snapshots", []):
            continue
        ga, gb = read_grid_csv(a_dir / rel, rel), read_grid_csv(b_dir / rel, rel)
        peak = max(ga.peak(), gb.peak())
        d = grid_distance(ga, gb, "max_abs")
        out["grids"][Path(rel).stem] = {
            "max_abs": d,
            "max_abs_over_peak": d / peak,
            "integrated_abs": grid_distance(ga, gb, "integrated_abs"),
            "origin": [ga.value_at(0j), gb.value_at(0j)],
            "min_value": [negativity_metrics(ga)["min_value"], negativity_metrics(gb)["min_value"]],
        }
    return out


def reproduce_preset(name, out_root, fast=False, jobs=None):
    """Run every branch of a preset (in parallel) and write ``summary.json``.

    Returns the exit code: 0 when every branch finished, 3 otherwise.
    """
    tag = f"{name}_fast" if fast else name
    root = Path(out_root) / tag
    root.mkdir(parents=True, exist_ok=True)
    if name == "semiclassical_table":
        model = SemiclassicalModel.from_amplifier(ScenarioConfig().build_model())
        write_json(root / "semiclassical.json", semiclassical_report(model))
        return 0
    branches = preset_configs(name, fast)
    tasks = [(cfg, root / branch) for branch, cfg in branches]
    jobs = jobs or min(len(tasks), os.cpu_count() or 1)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_branch, tasks))
    else:
        results = [_run_branch(t) for t in tasks]
    summary = {"preset": tag, "branches": {}}
    for (branch, _), (status, meta) in zip(branches, results):
        summary["branches"][branch] = {
            "status": status,
            "final_window": meta["final_window"],
            "health": meta["health"],
        }
    if len(branches) == 2:
        (ba, _), (bb, _) = branches
        summary["comparison"] = compare_branches(root / ba, root / bb, results[0][1], results[1][1])
    write_json(root / "summary.json", summary)
    return 0 if all(s == "ok" for s, _ in results) else 3
