"""Heat currents, field power, efficiency and subsystem energies/entropies.

Currents follow the quasi-semiclassical energy ``H~ = H_a + H_int``:
``Qdot_x = Tr{D_x[rho] H~}`` and ``P_f = -i Tr{rho [H_f, H_int]}`` so that
``dE~/dt = Qdot_h + Qdot_c - P_f``.  Lab-frame operators are used for every
quantity; at resonance they commute with the frame rotation, so the same
numbers come out of an interaction-frame state.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .hilbert import (
    atomic_transition_op,
    entropy_from_eigenvalues,
    partial_trace,
    von_neumann_entropy,
)
from .liouville import (
    apply_dissipator,
    atom_hamiltonian,
    bath_channels,
    field_hamiltonian,
    interaction_hamiltonian,
    ladder_power,
)

ETA_UNDEFINED_BELOW = 1e-12

CSV_COLUMNS = (
    "t", "e_total", "e_atom", "e_field", "e_int",
    "s_atom", "s_field", "s_total", "qdot_h", "qdot_c", "p_f", "eta",
)


@dataclass(frozen=True)
class ThermoSample:
    t: float
    e_total: float
    e_atom: float
    e_field: float
    e_int: float
    s_atom: float
    s_field: float
    s_total: float
    qdot_h: float
    qdot_c: float
    p_f: float
    eta: float

    def as_dict(self):
        return asdict(self)


def _trace_product(a, b):
    return complex(np.einsum("ij,ji->", a, b))


@lru_cache(maxsize=32)
def _quasi_energy_operator(model):
    op = atom_hamiltonian(model) + interaction_hamiltonian(model)
    op.setflags(write=False)
    return op


@lru_cache(maxsize=32)
def power_operator(model):
    """``-i [H_f, H_int]``; its expectation is the field power."""
    hf = field_hamiltonian(model)
    hi = interaction_hamiltonian(model)
    op = -1j * (hf @ hi - hi @ hf)
    op.setflags(write=False)
    return op


def power_operator_closed_form(model):
    """``-i k omega_f lambda (sigma_12 (x) a^dag^k - sigma_12^dag (x) a^k)``.

    Follows from ``[a^dag a, a^k] = -k a^k``.
    """
    a_k = ladder_power(model.field_dim, model.order)
    s12 = atomic_transition_op(1, 2)
    pref = -1j * model.order * model.omega_f * model.coupling
    return pref * (np.kron(s12, a_k.conj().T) - np.kron(s12.conj().T, a_k))


def heat_current(rho, model, bath):
    """Heat current from the ``"hot"`` or ``"cold"`` bath into the system."""
    hot, cold = bath_channels(model)
    channel = {"hot": hot, "cold": cold}[bath]
    d = apply_dissipator(rho, channel, model.layout)
    return _trace_product(d, _quasi_energy_operator(model)).real


def field_power(rho, model):
    return _trace_product(np.asarray(rho), power_operator(model)).real


def efficiency(p_f, qdot_h):
    if abs(qdot_h) < ETA_UNDEFINED_BELOW:
        return math.nan
    return p_f / qdot_h


def thermo_sample(rho, model, t, joint_eigenvalues=None):
    """All thermodynamic observables of the joint state ``rho`` at time ``t``.

    ``joint_eigenvalues`` may be supplied when the spectrum of ``rho`` is
    already known; otherwise it is computed densely.
    """
    rho = np.asarray(rho)
    layout = model.layout
    e_atom = _trace_product(rho, atom_hamiltonian(model)).real
    e_field = _trace_product(rho, field_hamiltonian(model)).real
    e_int = _trace_product(rho, interaction_hamiltonian(model)).real
    rho_a = partial_trace(rho, "atom", layout)
    rho_f = partial_trace(rho, "field", layout)
    if joint_eigenvalues is None:
        joint_eigenvalues = np.linalg.eigvalsh(rho)
    qh = heat_current(rho, model, "hot")
    qc = heat_current(rho, model, "cold")
    pf = field_power(rho, model)
    return ThermoSample(
        t=float(t),
        e_total=e_atom + e_field + e_int,
        e_atom=e_atom,
        e_field=e_field,
        e_int=e_int,
        s_atom=von_neumann_entropy(rho_a),
        s_field=von_neumann_entropy(rho_f),
        s_total=entropy_from_eigenvalues(joint_eigenvalues),
        qdot_h=qh,
        qdot_c=qc,
        p_f=pf,
        eta=efficiency(pf, qh),
    )


def first_law_residual(sample):
    """``|qdot_h + qdot_c - p_f| / |qdot_h|``."""
    return abs(sample.qdot_h + sample.qdot_c - sample.p_f) / abs(sample.qdot_h)


def steady_state_time(times, columns, window, tol, floor=1e-12):
    """Earliest time after which every column is flat over every window.

    A window starting at ``t_s`` covers samples in ``[t_s, t_s + window]``;
    it is flat when ``max - min <= tol * max(max|q|, floor)`` for each
    column.  Returns the start of the first window from which all later
    windows are flat, or None.
    """
    times = np.asarray(times, dtype=float)
    cols = np.atleast_2d(np.asarray(columns, dtype=float))
    if cols.shape[-1] != times.size:
        raise ValueError(f"columns have {cols.shape[-1]} samples, times have {times.size}")
    if times.size < 2 or times[-1] - times[0] < 2 * window:
        return None
    ends = np.searchsorted(times, times + window * (1 + 1e-9), side="right")
    flat = []
    for s, e in enumerate(ends):
        if times[e - 1] - times[s] < window * (1 - 1e-9):
            break
        seg = cols[:, s:e]
        spread = seg.max(axis=1) - seg.min(axis=1)
        scale = np.maximum(np.abs(seg).max(axis=1), floor)
        flat.append(bool(np.all(spread <= tol * scale)))
    if not flat or not flat[-1]:
        return None
    first = len(flat) - 1
    while first > 0 and flat[first - 1]:
        first -= 1
    return float(times[first])


def detect_steady_state(series, window, tol=1e-3):
    """Steady-state time of a :class:`~qamp.integrate.TimeSeries`.

    Watches qdot_h, qdot_c, p_f and the three atomic populations.  ``window``
    is in the series' time units.
    """
    cols = [
        [s.qdot_h for s in series.samples],
        [s.qdot_c for s in series.samples],
        [s.p_f for s in series.samples],
    ]
    pops = np.asarray([d.populations for d in series.diagnostics])
    cols.extend(pops.T)
    return steady_state_time(series.times, cols, window, tol)
