"""Fixed-step RK4 evolution of the master equation with health monitoring.

Two backends run the same method.  ``dense`` steps the full joint density
matrix through :func:`rk4_step`.  ``sector`` steps the populations and
resonant coherences of :class:`~qamp.sector.ExcitationSector`, which is
exact whenever the initial state lies in that sector and costs O(N) per
step instead of O(N^3).  ``auto`` picks ``sector`` when it applies.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegratorAbort, UnsupportedConfigurationError
from .hilbert import partial_trace
from .liouville import build_hamiltonian, master_rhs
from .sector import ExcitationSector
from .thermo import thermo_sample

log = logging.getLogger(__name__)

DEFAULT_DT = 0.00125
RK4_STABILITY_LIMIT = 2.0 * math.sqrt(2.0)
AUTO_DT_SAFETY = 2.5
_GRID_RTOL = 1e-9


@dataclass(frozen=True)
class IntegratorConfig:
    """Step and sampling controls, all times in internal units (1/lambda).

    ``dt=None`` selects the default step, shrunk if needed to stay inside
    the RK4 stability region of the model.  The step actually used is
    snapped down so that it divides ``sample_interval``.
    """

    t_max: float
    sample_interval: float
    dt: float | None = None
    guard_levels: int = 5
    guard_tol: float = 1e-6
    trace_drift_tol: float = 1e-8
    snapshot_times: tuple = ()
    backend: str = "auto"

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.sample_interval > 0:
            raise ValueError("sample_interval must be positive")
        if self.dt is not None and self.sample_interval < self.dt:
            raise ValueError("sample_interval must be >= dt")
        if not self.t_max >= 0:
            raise ValueError("t_max must be >= 0")
        if self.guard_levels < 1:
            raise ValueError("guard_levels must be >= 1")
        if self.backend not in ("auto", "dense", "sector"):
            raise ValueError(f"unknown backend {self.backend!r}")
        for ts in self.snapshot_times:
            if not 0 <= ts <= self.t_max * (1 + _GRID_RTOL):
                raise ValueError(f"snapshot time {ts} outside [0, t_max]")

    @classmethod
    def in_gamma_units(cls, model, t_max, sample_interval, snapshot_times=(), **kwargs):
        """Build a config from times given in units of 1/Gamma_H."""
        unit = 1.0 / model.gamma_h
        return cls(
            t_max=t_max * unit,
            sample_interval=sample_interval * unit,
            snapshot_times=tuple(t * unit for t in snapshot_times),
            **kwargs,
        )


@dataclass(frozen=True)
class SampleDiagnostics:
    trace: float
    min_eigenvalue: float
    tail_mass: float
    populations: tuple
    parity: float
    mean_photons: float

    @property
    def trace_drift(self):
        return abs(self.trace - 1.0)


@dataclass
class TimeSeries:
    model: object
    config: IntegratorConfig
    dt: float
    backend: str
    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    samples: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    observed: dict = field(default_factory=dict)
    final_state: np.ndarray | None = None

    def column(self, name):
        return np.array([getattr(s, name) for s in self.samples])

    def times_in_gamma(self):
        return np.asarray(self.times) * self.model.gamma_h

    def snapshot(self, t, rtol=1e-9):
        """Snapshot closest to ``t`` (internal units)."""
        for ts, rho in self.snapshots.items():
            if abs(ts - t) <= rtol * max(1.0, abs(t)):
                return rho
        raise KeyError(f"no snapshot at t={t}")

    @property
    def max_trace_drift(self):
        return max(d.trace_drift for d in self.diagnostics)

    @property
    def min_eigenvalue(self):
        return min(d.min_eigenvalue for d in self.diagnostics)

    @property
    def max_tail_mass(self):
        return max(d.tail_mass for d in self.diagnostics)


def rk4_step(rho, model, dt):
    """One classical RK4 step of the dense master equation."""
    k1 = master_rhs(rho, model)
    k2 = master_rhs(rho + 0.5 * dt * k1, model)
    k3 = master_rhs(rho + 0.5 * dt * k2, model)
    k4 = master_rhs(rho + dt * k3, model)
    out = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return 0.5 * (out + out.conj().T)


def truncation_guard(rho, layout, guard_levels, guard_tol):
    """Population in the top ``guard_levels`` Fock levels; ``(ok, tail_mass)``."""
    p = np.real(np.diag(partial_trace(rho, "field", layout)))
    tail = float(p[-guard_levels:].sum())
    return tail <= guard_tol, tail


def dense_spectral_bound(model):
    h = build_hamiltonian(model)
    e = np.linalg.eigvalsh(h)
    rate = 2 * (model.gamma_h * (2 * model.nbar_h + 1) + model.gamma_c * (2 * model.nbar_c + 1))
    return float(e[-1] - e[0]) + rate


def resolve_dt(config, bound):
    """Step used for a run: stable, and dividing the sample interval."""
    if config.dt is not None:
        if config.dt * bound > RK4_STABILITY_LIMIT:
            raise UnsupportedConfigurationError(
                f"dt={config.dt:g} exceeds the RK4 stability limit {RK4_STABILITY_LIMIT / bound:.4g} "
                "for this truncation; lower dt or field_dim"
            )
        dt_max = config.dt
    else:
        dt_max = min(DEFAULT_DT, AUTO_DT_SAFETY / bound) if bound > 0 else DEFAULT_DT
    per_sample = max(1, math.ceil(config.sample_interval / dt_max * (1 - _GRID_RTOL)))
    return config.sample_interval / per_sample


def _step_index(t, dt, what):
    k = round(t / dt)
    if abs(k * dt - t) > _GRID_RTOL * max(1.0, abs(t)):
        raise ValueError(f"{what} {t} is not on the step grid dt={dt}")
    return int(k)


def _event_steps(config, dt):
    per_sample = round(config.sample_interval / dt)
    last = _step_index(config.t_max, dt, "t_max")
    steps = set(range(0, last + 1, per_sample))
    steps.add(last)
    snaps = {_step_index(t, dt, "snapshot time"): t for t in config.snapshot_times}
    steps.update(snaps)
    return sorted(steps), set(snaps)


def _choose_backend(rho0, model, config):
    if config.backend != "auto":
        return config.backend
    return "sector" if ExcitationSector(model).contains(rho0) else "dense"


def evolve(rho0, model, config, observers=None):
    """Integrate ``rho0`` to ``config.t_max`` and sample along the way.

    ``observers`` maps names to callables ``f(t, rho)`` whose results are
    collected in ``series.observed``.  Aborts with :class:`IntegratorAbort`
    (carrying the partial series as ``err.series``) on NaN, trace drift or
    a truncation-guard trip.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    observers = dict(observers or {})
    backend = _choose_backend(rho0, model, config)
    if backend == "sector":
        sector = ExcitationSector(model)
        if not sector.contains(rho0):
            raise UnsupportedConfigurationError("initial state is outside the excitation sector")
        bound = sector.spectral_radius_bound()
    else:
        sector = None
        bound = dense_spectral_bound(model)
    dt = resolve_dt(config, bound)
    events, snap_steps = _event_steps(config, dt)
    series = TimeSeries(model=model, config=config, dt=dt, backend=backend)
    series.observed = {name: [] for name in observers}
    times = []
    log.info("evolve: backend=%s dt=%.6g steps=%d samples=%d", backend, dt, events[-1], len(events))

    def record(step, rho, eigenvalues):
        t = step * dt
        if not np.all(np.isfinite(rho)):
            raise IntegratorAbort(f"non-finite state at t={t:g}", t, "nan", math.nan)
        p_field = np.real(np.diag(partial_trace(rho, "field", model.layout)))
        tr = float(p_field.sum())
        tail = float(p_field[-config.guard_levels :].sum())
        pops = tuple(float(v) for v in np.real(np.einsum("inin->i", model.layout.blocks(rho))))
        parity = float(np.sum(p_field * (-1.0) ** np.arange(p_field.size)))
        diag = SampleDiagnostics(
            trace=tr,
            min_eigenvalue=float(np.min(eigenvalues)),
            tail_mass=tail,
            populations=pops,
            parity=parity,
            mean_photons=float(np.dot(np.arange(p_field.size), p_field)),
        )
        times.append(t)
        series.diagnostics.append(diag)
        series.samples.append(thermo_sample(rho, model, t, joint_eigenvalues=eigenvalues))
        for name, fn in observers.items():
            series.observed[name].append(fn(t, rho))
        if step in snap_steps:
            series.snapshots[t] = rho.copy()
        series.times = np.asarray(times)
        if diag.trace_drift > config.trace_drift_tol:
            raise IntegratorAbort(
                f"trace drift {diag.trace_drift:.3e} at t={t:g}", t, "trace_drift", diag.trace_drift
            )
        if tail > config.guard_tol:
            raise IntegratorAbort(
                f"truncation guard: {tail:.3e} population in top {config.guard_levels} Fock levels "
                f"at t={t:g}; increase field_dim",
                t,
                "tail_mass",
                tail,
            )

    try:
        if sector is not None:
            x = sector.from_dense(rho0)
            prop = sector.rk4_propagator(dt)
            step = 0
            for target in events:
                for _ in range(target - step):
                    x = prop @ x
                step = target
                rho = sector.to_dense(x)
                record(step, rho, sector.eigenvalues(x))
        else:
            rho = rho0.copy()
            step = 0
            for target in events:
                for _ in range(target - step):
                    rho = rk4_step(rho, model, dt)
                step = target
                record(step, rho, np.linalg.eigvalsh(rho))
    except IntegratorAbort as err:
        err.series = series
        series.final_state = rho
        raise
    series.final_state = rho
    return series
