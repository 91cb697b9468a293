"""Husimi Q and Wigner functions of a field state on a grid in the alpha plane.

Grids are indexed ``values[j, i]`` with ``i`` along Re(alpha) and ``j``
along Im(alpha).  The (x, p) quadrature picture maps in through
``alpha = (x + i p) / sqrt(2)``, so ``W(alpha) = 2 W(x, p)``.

The Wigner kernel uses normalized Laguerre functions

    U_n^d(x) = e^{-x/2} x^{d/2} sqrt(n! / (n+d)!) L_n^d(x),   x = 4|alpha|^2,

which are bounded by one and obey a three-term recurrence in ``n``.  With
them ``W = (2/pi) [sum_n (-1)^n rho_nn U_n^0
+ 2 Re sum_{d>0} e^{-i d theta} sum_n (-1)^n rho_{n+d,n} U_n^d]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from .errors import GridMismatchError, QampError

DEFAULT_RADIUS = 6.0
DEFAULT_POINTS = 201
RADIUS_MARGIN = 5.0
NORMALIZATION_TOL = 0.01
IMAG_TOL = 1e-10
_RESCALE = 1e150


class GridCoverageError(QampError, ValueError):
    """The grid misses part of the distribution (normalization check failed)."""


@dataclass(frozen=True)
class GridSpec:
    re_min: float = -DEFAULT_RADIUS
    re_max: float = DEFAULT_RADIUS
    n_re: int = DEFAULT_POINTS
    im_min: float = -DEFAULT_RADIUS
    im_max: float = DEFAULT_RADIUS
    n_im: int = DEFAULT_POINTS

    def __post_init__(self):
        if self.n_re < 2 or self.n_im < 2:
            raise ValueError("a grid needs at least two points per axis")
        if not (self.re_max > self.re_min and self.im_max > self.im_min):
            raise ValueError("grid bounds must be increasing")

    @classmethod
    def square(cls, radius=DEFAULT_RADIUS, points=DEFAULT_POINTS):
        return cls(-radius, radius, points, -radius, radius, points)

    @classmethod
    def auto(cls, rho_f, points=DEFAULT_POINTS, min_radius=DEFAULT_RADIUS):
        """Square grid of radius ``max(6, sqrt(<n>) + 5)``."""
        n = np.arange(rho_f.shape[0])
        mean = float(np.dot(n, np.real(np.diag(rho_f))))
        return cls.square(max(min_radius, math.sqrt(max(mean, 0.0)) + RADIUS_MARGIN), points)

    def axes(self):
        return np.linspace(self.re_min, self.re_max, self.n_re), np.linspace(self.im_min, self.im_max, self.n_im)

    @property
    def cell_area(self):
        return (self.re_max - self.re_min) / (self.n_re - 1) * (self.im_max - self.im_min) / (self.n_im - 1)

    def alphas(self):
        re, im = self.axes()
        return re[None, :] + 1j * im[:, None]


@dataclass(frozen=True)
class PhaseSpaceGrid:
    kind: str
    spec: GridSpec
    values: np.ndarray

    @property
    def convention(self):
        return "alpha-plane"

    @property
    def cell_area(self):
        return self.spec.cell_area

    def integral(self):
        return float(self.values.sum() * self.cell_area)

    def value_at(self, alpha):
        """Value at the grid point nearest to ``alpha``."""
        re, im = self.spec.axes()
        i = int(np.argmin(np.abs(re - alpha.real)))
        j = int(np.argmin(np.abs(im - alpha.imag)))
        return float(self.values[j, i])

    def peak(self):
        return float(np.max(np.abs(self.values)))


def _check_field_state(rho_f):
    rho_f = np.asarray(rho_f, dtype=complex)
    if rho_f.ndim != 2 or rho_f.shape[0] != rho_f.shape[1]:
        raise ValueError(f"expected a square field density matrix, got shape {rho_f.shape}")
    return rho_f


def _finish(kind, spec, values, check):
    residue = float(np.max(np.abs(np.imag(values)), initial=0.0))
    if residue > IMAG_TOL:
        raise ValueError(f"{kind} values have imaginary residue {residue:.3e}")
    grid = PhaseSpaceGrid(kind, spec, np.ascontiguousarray(np.real(values)))
    if check:
        total = grid.integral()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise GridCoverageError(
                f"{kind} grid integrates to {total:.6f}; enlarge the grid or refine the spacing"
            )
    return grid


def coherent_amplitudes(alphas, field_dim):
    """``<n|alpha>`` for every point, shape ``alphas.shape + (field_dim,)``."""
    a = np.asarray(alphas, dtype=complex)[..., None]
    n = np.arange(field_dim)
    r = np.abs(a)
    logr = np.log(np.where(r > 0, r, 1.0))
    powers = np.where(r > 0, n * logr, np.where(n == 0, 0.0, -np.inf))
    logmag = -0.5 * r**2 + powers - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * np.angle(a))


def q_function(rho_f, spec=None, check=True):
    """``Q(alpha) = <alpha|rho_f|alpha> / pi``."""
    rho_f = _check_field_state(rho_f)
    spec = spec or GridSpec.auto(rho_f)
    v = coherent_amplitudes(spec.alphas(), rho_f.shape[0])
    values = np.einsum("...m,mn,...n->...", v.conj(), rho_f, v) / np.pi
    return _finish("Q", spec, values, check)


def normalized_laguerre(n_max, d, x):
    """``U_n^d(x)`` for ``n = 0..n_max``, shape ``(n_max + 1,) + x.shape``.

    Upward recurrence with a running log scale so the start value never
    underflows.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    zero = x == 0.0
    with np.errstate(divide="ignore"):
        log0 = -0.5 * x + 0.5 * d * np.log(np.where(zero, 1.0, x)) - 0.5 * gammaln(d + 1)
    log0 = np.where(zero & (d > 0), -np.inf, log0)
    if np.all(np.isneginf(log0)):
        out[:] = 0.0
        return out
    shift = np.where(np.isfinite(log0), log0, 0.0)
    u_prev = np.zeros_like(x)
    u = np.where(np.isfinite(log0), 1.0, 0.0)
    out[0] = u * np.exp(shift)
    for n in range(n_max):
        u_next = ((2 * n + 1 + d - x) * u - math.sqrt(n * (n + d)) * u_prev) / math.sqrt((n + 1) * (n + 1 + d))
        u_prev, u = u, u_next
        big = np.abs(u) > _RESCALE
        if np.any(big):
            s = np.where(big, np.abs(u), 1.0)
            u = u / s
            u_prev = u_prev / s
            shift = shift + np.log(s)
        out[n + 1] = u * np.exp(shift)
    return out


def laguerre(n, d, x):
    """Generalized Laguerre polynomial ``L_n^d(x)`` by the plain recurrence."""
    x = np.asarray(x, dtype=float)
    prev, cur = np.zeros_like(x), np.ones_like(x)
    for j in range(n):
        prev, cur = cur, ((2 * j + 1 + d - x) * cur - (j + d) * prev) / (j + 1)
    return cur


def wigner_function(rho_f, spec=None, check=True):
    """Wigner function ``(2/pi) Tr[rho_f D(alpha) P D(alpha)^dag]``, P the parity."""
    rho_f = _check_field_state(rho_f)
    spec = spec or GridSpec.auto(rho_f)
    alphas = spec.alphas()
    x = 4.0 * np.abs(alphas) ** 2
    phase = np.exp(-1j * np.angle(alphas))
    n_dim = rho_f.shape[0]
    total = np.zeros(alphas.shape, dtype=complex)
    for d in range(n_dim):
        diag = np.diagonal(rho_f, offset=-d)
        if not np.any(diag):
            continue
        signed = diag * (-1.0) ** np.arange(diag.size)
        u = normalized_laguerre(diag.size - 1, d, x)
        term = np.tensordot(signed, u, axes=1)
        total += term if d == 0 else 2.0 * phase**d * term
    return _finish("W", spec, (2.0 / np.pi) * total.real, check)


def parity_expectation(rho_f):
    p = np.real(np.diag(_check_field_state(rho_f)))
    return float(np.sum(p * (-1.0) ** np.arange(p.size)))


def negativity_metrics(grid):
    j, i = np.unravel_index(int(np.argmin(grid.values)), grid.values.shape)
    re, im = grid.spec.axes()
    return {
        "min_value": float(grid.values[j, i]),
        "min_location": (float(re[i]), float(im[j])),
        "negative_volume": float(np.sum(np.maximum(0.0, -grid.values)) * grid.cell_area),
    }


def grid_distance(a, b, norm="max_abs"):
    if a.spec != b.spec:
        raise GridMismatchError(f"grids differ: {a.spec} vs {b.spec}")
    diff = np.abs(a.values - b.values)
    if norm == "max_abs":
        return float(diff.max())
    if norm == "integrated_abs":
        return float(diff.sum() * a.cell_area)
    raise ValueError(f"unknown norm {norm!r}")


def write_grid_csv(grid, path, meta=None):
    """Grid CSV plus a ``.json`` sidecar next to it."""
    s = grid.spec
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# re_min,re_max,n_re = {s.re_min!r},{s.re_max!r},{s.n_re}\n")
        fh.write(f"# im_min,im_max,n_im = {s.im_min!r},{s.im_max!r},{s.n_im}\n")
        for row in grid.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    side = dict(meta or {})
    side.update(kind=grid.kind, **negativity_metrics(grid))
    side["integral"] = grid.integral()
    with open(Path(path).with_suffix(".json"), "w") as fh:
        json.dump(side, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_grid_csv(path, kind="?"):
    with open(path) as fh:
        head = [next(fh), next(fh)]
        rows = [line for line in fh if line.strip()]
    bounds = []
    for line in head:
        a, b, n = line.split("=", 1)[1].split(",")
        bounds.append((float(a), float(b), int(n)))
    spec = GridSpec(bounds[0][0], bounds[0][1], bounds[0][2], bounds[1][0], bounds[1][1], bounds[1][2])
    values = np.array([[float(v) for v in r.split(",")] for r in rows])
    if values.shape != (spec.n_im, spec.n_re):
        raise GridMismatchError(f"grid body has shape {values.shape}, header says {(spec.n_im, spec.n_re)}")
    return PhaseSpaceGrid(kind, spec, values)
