"""Plain-text scenario configuration: ``key = value`` lines, ``#`` comments.

Every key has a default; a document containing only ``interaction_order = 2``
describes the reference two-photon run.  Unknown keys are errors.  Times
(``t_max``, ``sample_interval``, ``snapshots``, ``steady_window``) are in
units of 1/Gamma_H; ``dt`` is in units of 1/lambda.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace

from .errors import ConfigError, QampError, TruncationError
from .hilbert import AtomStateSpec, FieldStateSpec, build_joint_state
from .integrate import IntegratorConfig
from .liouville import AmplifierModel

FIELD_KINDS = FieldStateSpec.KINDS
PHASE_FUNCTIONS = ("Q", "W")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str = "scenario"
    output_dir: str = ""
    # model
    interaction_order: int = 2
    omega_res_over_lambda: float = 1000.0
    lambda_over_gamma: float = 1000.0
    pump_over_res: float = 1.2
    gamma_c_over_gamma_h: float = 1.0
    nbar_h: float = 10.0
    nbar_c: float = 0.1
    detuning_over_lambda: float = 0.0
    frame: str = "interaction"
    field_dim: int = 100
    # initial state
    atom_level: int = 2
    field_state: str = "vacuum"
    fock_n: int = 0
    field_mean: float = 0.0
    coherent_re: float = 0.0
    coherent_im: float = 0.0
    max_discarded: float = 1e-6
    # integrator
    t_max: float = 10.0
    sample_interval: float = 0.1
    dt: float | None = None
    guard_levels: int = 5
    guard_tol: float = 1e-6
    trace_drift_tol: float = 1e-8
    backend: str = "auto"
    steady_window: float = 1.0
    steady_tol: float = 1e-3
    # phase space
    snapshots: tuple = ()
    phase_space: tuple = ("Q", "W")
    grid_radius: float | None = None
    grid_points: int = 201

    def __post_init__(self):
        _validate(self)

    def with_(self, **changes):
        return replace(self, **changes)

    def build_model(self):
        try:
            return AmplifierModel.from_ratios(
                order=self.interaction_order,
                omega_res_over_lambda=self.omega_res_over_lambda,
                lambda_over_gamma=self.lambda_over_gamma,
                pump_over_res=self.pump_over_res,
                nbar_h=self.nbar_h,
                nbar_c=self.nbar_c,
                field_dim=self.field_dim,
                frame=self.frame,
                gamma_c_over_gamma_h=self.gamma_c_over_gamma_h,
                detuning_over_lambda=self.detuning_over_lambda,
            )
        except (QampError, ValueError) as err:
            raise ConfigError(str(err)) from err

    def field_spec(self):
        if self.field_state == "fock":
            return FieldStateSpec.fock(self.fock_n)
        if self.field_state == "coherent":
            return FieldStateSpec.coherent(complex(self.coherent_re, self.coherent_im))
        if self.field_state in ("poisson_mixed", "thermal"):
            return FieldStateSpec(self.field_state, mean=self.field_mean)
        return FieldStateSpec.vacuum()

    def atom_spec(self):
        return AtomStateSpec.from_level(self.atom_level)

    def initial_state(self, model=None):
        model = model or self.build_model()
        try:
            return build_joint_state(self.atom_spec(), self.field_spec(), model.layout, self.max_discarded)
        except TruncationError as err:
            raise ConfigError(str(err), "field_dim") from err

    def integrator_config(self, model=None):
        model = model or self.build_model()
        return IntegratorConfig.in_gamma_units(
            model,
            self.t_max,
            self.sample_interval,
            snapshot_times=self.snapshots,
            dt=self.dt,
            guard_levels=self.guard_levels,
            guard_tol=self.guard_tol,
            trace_drift_tol=self.trace_drift_tol,
            backend=self.backend,
        )

    def to_dict(self):
        d = asdict(self)
        d["snapshots"] = list(self.snapshots)
        d["phase_space"] = list(self.phase_space)
        return d


_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _fail(key, message):
    raise ConfigError(f"{key}: {message}", key)


def _validate(c):
    if not c.scenario_id or any(ch in c.scenario_id for ch in "/\\ "):
        _fail("scenario_id", f"must be a non-empty name without slashes or spaces, got {c.scenario_id!r}")
    positive = ("omega_res_over_lambda", "lambda_over_gamma", "gamma_c_over_gamma_h", "sample_interval",
                "steady_window", "steady_tol", "max_discarded", "guard_tol", "trace_drift_tol")
    for key in positive:
        v = getattr(c, key)
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            _fail(key, f"must be a positive number, got {v!r}")
    for key in ("nbar_h", "nbar_c", "t_max", "field_mean"):
        v = getattr(c, key)
        if not (math.isfinite(v) and v >= 0):
            _fail(key, f"must be a non-negative number, got {v!r}")
    if not c.pump_over_res > 1:
        _fail("pump_over_res", f"must exceed 1 (omega3 above omega2), got {c.pump_over_res}")
    if c.interaction_order not in (1, 2):
        _fail("interaction_order", f"must be 1 or 2, got {c.interaction_order}")
    if c.frame not in ("interaction", "lab"):
        _fail("frame", f"must be 'interaction' or 'lab', got {c.frame!r}")
    if c.field_dim < 2:
        _fail("field_dim", f"must be >= 2, got {c.field_dim}")
    if c.atom_level not in (1, 2, 3):
        _fail("atom_level", f"must be 1, 2 or 3, got {c.atom_level}")
    if c.field_state not in FIELD_KINDS:
        _fail("field_state", f"must be one of {', '.join(FIELD_KINDS)}, got {c.field_state!r}")
    if c.fock_n < 0:
        _fail("fock_n", f"must be >= 0, got {c.fock_n}")
    if c.field_state == "fock" and c.fock_n >= c.field_dim:
        _fail("fock_n", f"fock_n={c.fock_n} does not fit in field_dim={c.field_dim}")
    if c.dt is not None and not c.dt > 0:
        _fail("dt", f"must be positive or 'auto', got {c.dt}")
    if c.guard_levels < 1 or c.guard_levels > c.field_dim:
        _fail("guard_levels", f"must be in [1, field_dim], got {c.guard_levels}")
    if c.backend not in ("auto", "dense", "sector"):
        _fail("backend", f"must be auto, dense or sector, got {c.backend!r}")
    for t in c.snapshots:
        if not 0 <= t <= c.t_max:
            _fail("snapshots", f"time {t} outside [0, t_max={c.t_max}]")
    for f in c.phase_space:
        if f not in PHASE_FUNCTIONS:
            _fail("phase_space", f"unknown function {f!r}; use Q and/or W")
    if c.grid_radius is not None and not c.grid_radius > 0:
        _fail("grid_radius", f"must be positive or 'auto', got {c.grid_radius}")
    if c.grid_points < 2:
        _fail("grid_points", f"must be >= 2, got {c.grid_points}")
    if c.frame == "interaction" and c.detuning_over_lambda != 0:
        _fail("frame", "off-resonant runs need frame = lab")


def _parse_value(key, raw):
    kind = _TYPES[key]
    raw = raw.strip()
    try:
        if kind == "int":
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        if kind == "float":
            return float(raw)
        if kind == "float | None":
            return None if raw.lower() in ("auto", "none", "") else float(raw)
        if kind == "tuple":
            items = [s.strip() for s in raw.replace(";", ",").split(",") if s.strip()]
            if key == "snapshots":
                return tuple(float(s) for s in items)
            return tuple(items)
        return raw
    except ValueError:
        _fail(key, f"cannot parse {raw!r} as {kind}")


def _coerce(key, value):
    """Type a value coming from JSON (meta.json) rather than text."""
    if key not in _TYPES:
        _fail(key, "unknown key")
    if isinstance(value, (list, tuple)):
        return _parse_value(key, ",".join(str(v) for v in value))
    if value is None:
        return _parse_value(key, "auto")
    return _parse_value(key, str(value) if not isinstance(value, float) else repr(value))


def from_mapping(mapping):
    return ScenarioConfig(**{k: _coerce(k, v) for k, v in mapping.items()})


def parse_config(text):
    """Parse a key/value document, or a ``meta.json`` written by a run."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON: {err}") from err
        return from_mapping(doc.get("config", doc))
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            _fail(key, f"unknown key (line {lineno})")
        if key in values:
            _fail(key, f"duplicate key (line {lineno})")
        values[key] = _parse_value(key, raw)
    return ScenarioConfig(**values)


def _format(value):
    if value is None:
        return "auto"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


def serialize_config(config):
    """Every key, explicit, one per line; ``parse_config`` reads it back."""
    return "".join(f"{f.name} = {_format(getattr(config, f.name))}\n" for f in fields(ScenarioConfig))


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())
