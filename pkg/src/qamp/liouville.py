"""Hamiltonians, thermal dissipators and the master-equation generator.

Units: hbar = k_B = 1 and all frequencies are angular.  The hot bath drives
the 1 <-> 3 transition, the cold bath 2 <-> 3, and the field couples 1 <-> 2
through ``sigma_12 (x) (a^dag)^k + h.c.`` with ``k`` the interaction order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import LayoutMismatchError, UnsupportedConfigurationError
from .hilbert import (
    HilbertLayout,
    annihilation_op,
    atomic_projector,
    atomic_transition_op,
    embed,
    number_op,
)

RESONANCE_RTOL = 1e-12


def planck_occupation(gap, temperature):
    """Bose-Einstein occupation ``1 / (exp(gap / T) - 1)``."""
    if not gap > 0 or not temperature > 0:
        raise ValueError(f"gap and temperature must be positive, got {gap}, {temperature}")
    x = gap / temperature
    if x > 700:
        return 0.0
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class AmplifierModel:
    """Physical parameters of the three-level amplifier.

    ``coupling`` is the atom-field constant lambda.  ``frame`` is ``"lab"``
    (full H_a + H_f + H_int) or ``"interaction"`` (H_int only, valid at
    resonance).
    """

    omega1: float
    omega2: float
    omega3: float
    omega_f: float
    coupling: float
    gamma_h: float
    gamma_c: float
    nbar_h: float
    nbar_c: float
    order: int = 2
    frame: str = "interaction"
    field_dim: int = 100

    def __post_init__(self):
        if not self.omega3 > self.omega2 > self.omega1:
            raise ValueError("level frequencies must satisfy omega3 > omega2 > omega1")
        if not self.coupling >= 0:
            raise ValueError("coupling must be non-negative")
        if not (self.gamma_h >= 0 and self.gamma_c >= 0):
            raise ValueError("bath rates must be non-negative")
        if not (self.nbar_h >= 0 and self.nbar_c >= 0):
            raise ValueError("thermal occupations must be non-negative")
        if self.order not in (1, 2):
            raise UnsupportedConfigurationError(f"interaction order must be 1 or 2, got {self.order}")
        if self.frame not in ("lab", "interaction"):
            raise ValueError(f"frame must be 'lab' or 'interaction', got {self.frame!r}")
        if self.frame == "interaction" and not self.resonant:
            raise UnsupportedConfigurationError(
                "the interaction frame is time independent only at resonance; use frame='lab'"
            )
        HilbertLayout(self.field_dim)

    @property
    def layout(self):
        return HilbertLayout(self.field_dim)

    @property
    def omega_res(self):
        return self.omega2 - self.omega1

    @property
    def detuning(self):
        """``omega2 - omega1 - k * omega_f``; zero at resonance."""
        return self.omega_res - self.order * self.omega_f

    @property
    def resonant(self):
        return abs(self.detuning) <= RESONANCE_RTOL * abs(self.omega_res)

    def with_(self, **changes):
        return replace(self, **changes)

    @classmethod
    def from_ratios(
        cls,
        order=2,
        omega_res_over_lambda=1e3,
        lambda_over_gamma=1e3,
        pump_over_res=1.2,
        nbar_h=10.0,
        nbar_c=0.1,
        field_dim=100,
        frame="interaction",
        gamma_c_over_gamma_h=1.0,
        omega1=0.0,
        detuning_over_lambda=0.0,
    ):
        """Model in internal units lambda = 1 from dimensionless ratios.

        ``pump_over_res`` is ``(omega3 - omega1) / (omega2 - omega1)``; the
        cold gap follows as ``pump_over_res - 1``.  The defaults are the
        reference parameter set.
        """
        w_res = float(omega_res_over_lambda)
        gamma_h = 1.0 / float(lambda_over_gamma)
        return cls(
            omega1=float(omega1),
            omega2=float(omega1) + w_res,
            omega3=float(omega1) + float(pump_over_res) * w_res,
            omega_f=(w_res - float(detuning_over_lambda)) / order,
            coupling=1.0,
            gamma_h=gamma_h,
            gamma_c=gamma_h * float(gamma_c_over_gamma_h),
            nbar_h=float(nbar_h),
            nbar_c=float(nbar_c),
            order=int(order),
            frame=frame,
            field_dim=int(field_dim),
        )


@dataclass(frozen=True)
class BathChannel:
    """Thermal channel acting on ``|lower> <-> |3>`` of the atom."""

    which: str
    lower: int
    rate: float
    nbar: float

    def lowering_op(self, layout):
        return embed(atomic_transition_op(self.lower, 3), "atom", layout)


def bath_channels(model):
    return (
        BathChannel("hot", 1, model.gamma_h, model.nbar_h),
        BathChannel("cold", 2, model.gamma_c, model.nbar_c),
    )


def _readonly(a):
    a.setflags(write=False)
    return a


@lru_cache(maxsize=32)
def ladder_power(field_dim, order):
    """``a^order`` on ``field_dim`` levels."""
    return np.linalg.matrix_power(annihilation_op(field_dim), order)


@lru_cache(maxsize=32)
def atom_hamiltonian(model):
    h = np.diag([model.omega1, model.omega2, model.omega3]).astype(complex)
    return _readonly(embed(h, "atom", model.layout))


@lru_cache(maxsize=32)
def field_hamiltonian(model):
    return _readonly(embed(model.omega_f * number_op(model.field_dim), "field", model.layout))


@lru_cache(maxsize=32)
def interaction_hamiltonian(model):
    """``lambda (sigma_12 (x) (a^dag)^k + sigma_12^dag (x) a^k)``."""
    a_k = ladder_power(model.field_dim, model.order)
    s12 = atomic_transition_op(1, 2)
    h = model.coupling * (np.kron(s12, a_k.conj().T) + np.kron(s12.conj().T, a_k))
    return _readonly(h)


@lru_cache(maxsize=32)
def build_hamiltonian(model):
    if model.frame == "interaction":
        if not model.resonant:
            raise UnsupportedConfigurationError("interaction frame requested off resonance")
        return interaction_hamiltonian(model)
    return _readonly(atom_hamiltonian(model) + field_hamiltonian(model) + interaction_hamiltonian(model))


def apply_dissipator(rho, channel, layout):
    """Thermal Lindblad dissipator of one channel applied to ``rho``.

    ``G(n+1)(2 s rho s^+ - s^+ s rho - rho s^+ s) + G n (2 s^+ rho s - s s^+ rho - rho s s^+)``
    with ``s = |lower><3| (x) 1``.  Uses the block structure instead of
    matrix products, so the cost is O(N^2).
    """
    rho = np.asarray(rho)
    if rho.shape != (layout.dim, layout.dim):
        raise LayoutMismatchError(f"expected {layout.dim}x{layout.dim}, got {rho.shape}")
    b = layout.blocks(rho)
    out = np.zeros_like(b)
    lo, up = channel.lower - 1, 2
    down = channel.rate * (channel.nbar + 1.0)
    pump = channel.rate * channel.nbar
    out[lo, :, lo, :] += 2.0 * down * b[up, :, up, :]
    out[up, :, :, :] -= down * b[up, :, :, :]
    out[:, :, up, :] -= down * b[:, :, up, :]
    out[up, :, up, :] += 2.0 * pump * b[lo, :, lo, :]
    out[lo, :, :, :] -= pump * b[lo, :, :, :]
    out[:, :, lo, :] -= pump * b[:, :, lo, :]
    return out.reshape(layout.dim, layout.dim)


def dissipator_reference(rho, channel, layout):
    """Same map as :func:`apply_dissipator` written with dense products."""
    s = channel.lowering_op(layout)
    sd = s.conj().T
    down = channel.rate * (channel.nbar + 1.0)
    pump = channel.rate * channel.nbar
    return down * (2 * s @ rho @ sd - sd @ s @ rho - rho @ sd @ s) + pump * (
        2 * sd @ rho @ s - s @ sd @ rho - rho @ s @ sd
    )


def master_rhs(rho, model):
    """``-i[H, rho] + D_hot(rho) + D_cold(rho)``."""
    layout = model.layout
    rho = np.asarray(rho)
    if rho.shape != (layout.dim, layout.dim):
        raise LayoutMismatchError(f"expected {layout.dim}x{layout.dim}, got {rho.shape}")
    h = build_hamiltonian(model)
    out = -1j * (h @ rho - rho @ h)
    for ch in bath_channels(model):
        out += apply_dissipator(rho, ch, layout)
    return out


def atomic_level_populations(rho, layout):
    b = layout.blocks(rho)
    return np.real(np.einsum("inin->i", b))


def projector(level, layout):
    return embed(atomic_projector(level), "atom", layout)
