"""Operators and states on the three-level atom (x) truncated field space.

Layout convention, used by every module in the package: the joint space is
atom (x) field with atom-major ordering, so the joint index of atomic level
``i`` (1-based) and Fock number ``n`` is ``(i - 1) * N + n``.  A joint
operator reshaped to ``(3, N, 3, N)`` therefore has axes
``(atom_row, fock_row, atom_col, fock_col)``.

Operators and density matrices are plain complex ``numpy`` arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .errors import (
    InvalidDimensionError,
    InvalidTransitionError,
    LayoutMismatchError,
    NotAStateError,
    TruncationError,
)

ATOM_DIM = 3

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
EIGEN_CLAMP = 1e-10
EIGEN_FAIL = 1e-8


@dataclass(frozen=True)
class HilbertLayout:
    field_dim: int
    atom_dim: int = field(default=ATOM_DIM, init=False)

    def __post_init__(self):
        if int(self.field_dim) != self.field_dim or self.field_dim < 2:
            raise InvalidDimensionError(f"field_dim must be an integer >= 2, got {self.field_dim}")

    @property
    def dim(self):
        return self.atom_dim * self.field_dim

    def index(self, level, n):
        """Joint index of ``|level, n>`` with 1-based ``level``."""
        if level not in (1, 2, 3) or not 0 <= n < self.field_dim:
            raise IndexError(f"|{level}, {n}> outside layout with N={self.field_dim}")
        return (level - 1) * self.field_dim + n

    def blocks(self, op):
        """View a joint operator as ``(3, N, 3, N)``."""
        return np.asarray(op).reshape(self.atom_dim, self.field_dim, self.atom_dim, self.field_dim)


def _require_dim(n):
    if int(n) != n or n < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {n}")
    return int(n)


def annihilation_op(field_dim):
    """Truncated lowering operator: ``<n-1|a|n> = sqrt(n)``."""
    field_dim = _require_dim(field_dim)
    return np.diag(np.sqrt(np.arange(1, field_dim, dtype=float)), 1).astype(complex)


def creation_op(field_dim):
    return annihilation_op(field_dim).conj().T


def number_op(field_dim):
    field_dim = _require_dim(field_dim)
    return np.diag(np.arange(field_dim, dtype=float)).astype(complex)


def parity_op(field_dim):
    field_dim = _require_dim(field_dim)
    return np.diag((-1.0) ** np.arange(field_dim)).astype(complex)


def atomic_transition_op(lower, upper):
    """``|lower><upper|`` on the atom, levels numbered 1..3."""
    if lower not in (1, 2, 3) or upper not in (1, 2, 3) or lower >= upper:
        raise InvalidTransitionError(f"need 1 <= lower < upper <= 3, got ({lower}, {upper})")
    op = np.zeros((ATOM_DIM, ATOM_DIM), dtype=complex)
    op[lower - 1, upper - 1] = 1.0
    return op


def atomic_projector(level):
    if level not in (1, 2, 3):
        raise InvalidTransitionError(f"level must be 1, 2 or 3, got {level}")
    op = np.zeros((ATOM_DIM, ATOM_DIM), dtype=complex)
    op[level - 1, level - 1] = 1.0
    return op


def embed(op, side, layout):
    """Lift a single-subsystem operator into the joint space."""
    op = np.asarray(op)
    if side == "atom":
        if op.shape != (layout.atom_dim, layout.atom_dim):
            raise LayoutMismatchError(f"atom operator must be 3x3, got {op.shape}")
        return np.kron(op, np.eye(layout.field_dim))
    if side == "field":
        if op.shape != (layout.field_dim, layout.field_dim):
            raise LayoutMismatchError(
                f"field operator must be {layout.field_dim}x{layout.field_dim}, got {op.shape}"
            )
        return np.kron(np.eye(layout.atom_dim), op)
    raise ValueError(f"side must be 'atom' or 'field', got {side!r}")


def partial_trace(rho, keep, layout):
    rho = np.asarray(rho)
    if rho.shape != (layout.dim, layout.dim):
        raise LayoutMismatchError(f"expected a {layout.dim}x{layout.dim} joint operator, got {rho.shape}")
    blocks = layout.blocks(rho)
    if keep == "field":
        return np.einsum("imin->mn", blocks)
    if keep == "atom":
        return np.einsum("injn->ij", blocks)
    raise ValueError(f"keep must be 'atom' or 'field', got {keep!r}")


def expectation(rho, obs):
    rho = np.asarray(rho)
    obs = np.asarray(obs)
    if rho.shape != obs.shape:
        raise LayoutMismatchError(f"state {rho.shape} and observable {obs.shape} differ")
    return complex(np.einsum("ij,ji->", rho, obs))


def purity(rho):
    rho = np.asarray(rho)
    return float(np.einsum("ij,ji->", rho, rho).real)


def entropy_from_eigenvalues(eigenvalues):
    """Entropy in nats from a spectrum, clamping tiny negative roundoff."""
    lam = np.asarray(eigenvalues, dtype=float)
    worst = lam.min(initial=0.0)
    if worst < -EIGEN_FAIL:
        raise NotAStateError(f"eigenvalue {worst:.3e} below {-EIGEN_FAIL:g}")
    lam = lam[lam > 0.0]
    return float(0.0 - np.sum(lam * np.log(lam)))


def von_neumann_entropy(rho):
    return entropy_from_eigenvalues(np.linalg.eigvalsh(np.asarray(rho)))


class StateReport(NamedTuple):
    trace: float
    hermiticity: float
    min_eigenvalue: float


def check_state(rho, strict=True):
    """Measure trace, Hermiticity defect and lowest eigenvalue of ``rho``.

    With ``strict`` the density-matrix tolerances are enforced.
    """
    rho = np.asarray(rho)
    herm = float(np.max(np.abs(rho - rho.conj().T), initial=0.0))
    tr = float(np.trace(rho).real)
    lo = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    if strict:
        if herm > HERMITIAN_TOL:
            raise NotAStateError(f"not Hermitian: max |rho - rho^dag| = {herm:.3e}")
        if abs(tr - 1.0) > TRACE_TOL:
            raise NotAStateError(f"trace {tr!r} differs from 1")
        if lo < -EIGEN_CLAMP:
            raise NotAStateError(f"negative eigenvalue {lo:.3e}")
    return StateReport(tr, herm, lo)


@dataclass(frozen=True)
class FieldStateSpec:
    """Initial field state.

    ``kind`` is one of vacuum, fock, coherent, poisson_mixed, thermal.  ``n``
    is used by fock, ``amplitude`` by coherent and ``mean`` by the two
    diagonal mixtures.
    """

    kind: str = "vacuum"
    n: int = 0
    amplitude: complex = 0.0
    mean: float = 0.0

    KINDS = ("vacuum", "fock", "coherent", "poisson_mixed", "thermal")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown field state kind {self.kind!r}")
        if self.kind == "fock" and (int(self.n) != self.n or self.n < 0):
            raise ValueError(f"fock number must be a non-negative integer, got {self.n}")
        if self.kind in ("poisson_mixed", "thermal") and not self.mean >= 0:
            raise ValueError(f"mean photon number must be >= 0, got {self.mean}")

    @classmethod
    def vacuum(cls):
        return cls("vacuum")

    @classmethod
    def fock(cls, n):
        return cls("fock", n=int(n))

    @classmethod
    def coherent(cls, amplitude):
        return cls("coherent", amplitude=complex(amplitude))

    @classmethod
    def poisson_mixed(cls, mean):
        return cls("poisson_mixed", mean=float(mean))

    @classmethod
    def thermal(cls, mean):
        return cls("thermal", mean=float(mean))


@dataclass(frozen=True)
class AtomStateSpec:
    kind: str = "level"
    level: int = 1
    matrix: tuple | None = None

    def __post_init__(self):
        if self.kind == "level":
            if self.level not in (1, 2, 3):
                raise ValueError(f"atomic level must be 1, 2 or 3, got {self.level}")
        elif self.kind == "general":
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (3, 3):
                raise ValueError("general atomic state must be 3x3")
            check_state(m)
        else:
            raise ValueError(f"unknown atom state kind {self.kind!r}")

    @classmethod
    def from_level(cls, level):
        return cls("level", level=int(level))

    @classmethod
    def general(cls, matrix):
        m = np.asarray(matrix, dtype=complex)
        return cls("general", matrix=tuple(map(tuple, m)))


class TruncatedState(NamedTuple):
    rho: np.ndarray
    discarded: float


def _poisson_weights(mean, field_dim):
    n = np.arange(field_dim)
    if mean == 0:
        w = np.zeros(field_dim)
        w[0] = 1.0
        return w, 0.0
    w = np.exp(-mean + n * math.log(mean) - gammaln(n + 1))
    return w, float(stats.poisson.sf(field_dim - 1, mean))


def build_field_state(spec, field_dim, max_discarded=1e-6):
    """Density matrix of ``spec`` on ``field_dim`` Fock levels.

    Truncated distributions are renormalized on the kept levels; the
    probability mass lost to truncation is returned alongside the state.
    """
    field_dim = _require_dim(field_dim)
    rho = np.zeros((field_dim, field_dim), dtype=complex)
    discarded = 0.0
    if spec.kind == "vacuum":
        rho[0, 0] = 1.0
    elif spec.kind == "fock":
        if spec.n >= field_dim:
            raise TruncationError(f"fock({spec.n}) does not fit in {field_dim} levels", 1.0)
        rho[spec.n, spec.n] = 1.0
    elif spec.kind == "poisson_mixed":
        w, discarded = _poisson_weights(spec.mean, field_dim)
        rho[np.diag_indices(field_dim)] = w / w.sum()
    elif spec.kind == "thermal":
        q = spec.mean / (1.0 + spec.mean)
        w = (1.0 - q) * q ** np.arange(field_dim)
        discarded = float(q**field_dim)
        rho[np.diag_indices(field_dim)] = w / w.sum()
    elif spec.kind == "coherent":
        beta = complex(spec.amplitude)
        r2 = abs(beta) ** 2
        n = np.arange(field_dim)
        amp = np.zeros(field_dim, dtype=complex)
        if r2 == 0:
            amp[0] = 1.0
        else:
            mag = np.exp(-0.5 * r2 + n * math.log(abs(beta)) - 0.5 * gammaln(n + 1))
            amp = mag * np.exp(1j * n * np.angle(beta))
            discarded = float(stats.poisson.sf(field_dim - 1, r2))
        amp /= np.linalg.norm(amp)
        rho = np.outer(amp, amp.conj())
    if discarded > max_discarded:
        raise TruncationError(
            f"{spec.kind} state loses {discarded:.3e} probability at N={field_dim}", discarded
        )
    return TruncatedState(rho, discarded)


def build_atom_state(spec):
    if spec.kind == "level":
        return atomic_projector(spec.level)
    return np.array(spec.matrix, dtype=complex)


def build_joint_state(atom, field_spec, layout, max_discarded=1e-6):
    fs = build_field_state(field_spec, layout.field_dim, max_discarded)
    return TruncatedState(np.kron(build_atom_state(atom), fs.rho), fs.discarded)
