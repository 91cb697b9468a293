"""Excitation-conserving sector of the amplifier master equation.

The interaction ``sigma_12 (x) (a^dag)^k + h.c.`` conserves
``a^dag a + k |2><2|`` and the atomic dissipators only attach phases to
their jump operators under that rotation.  A state whose only nonzero
entries are the populations ``<i,n|rho|i,n>`` and the coherences
``c_n = <1,n+k|rho|2,n>`` therefore stays in that form forever, which is
the block structure the long-time joint state takes.  Every preset starts
there (product of a level projector with a Fock-diagonal field state).

Inside the sector the generator is a real sparse matrix of size ~5N acting
on ``x = [p1, p2, p3, Re c, Im c]``; one RK4 step is the fourth-order
Taylor polynomial of ``dt * M`` applied to ``x``, which is the classical
RK4 update for a linear autonomous system.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .errors import LayoutMismatchError

SECTOR_TOL = 1e-14


class ExcitationSector:
    def __init__(self, model):
        self.model = model
        self.layout = model.layout
        self.N = N = model.field_dim
        self.k = k = model.order
        self.ncoh = N - k
        n = np.arange(self.ncoh)
        g = np.ones(self.ncoh)
        for j in range(1, k + 1):
            g = g * (n + j)
        self.couplings = model.coupling * np.sqrt(g)
        self.size = 3 * N + 2 * self.ncoh
        self._generator = None

    # slices into the flat state vector
    @property
    def p1(self):
        return slice(0, self.N)

    @property
    def p2(self):
        return slice(self.N, 2 * self.N)

    @property
    def p3(self):
        return slice(2 * self.N, 3 * self.N)

    @property
    def cr(self):
        return slice(3 * self.N, 3 * self.N + self.ncoh)

    @property
    def ci(self):
        return slice(3 * self.N + self.ncoh, self.size)

    def _coherence_indices(self):
        """Joint (row, col) indices of ``<1, n+k| rho |2, n>``."""
        n = np.arange(self.ncoh)
        return n + self.k, self.N + n

    def contains(self, rho, tol=SECTOR_TOL):
        rho = np.asarray(rho)
        if rho.shape != (self.layout.dim, self.layout.dim):
            return False
        mask = np.ones(rho.shape, dtype=bool)
        mask[np.diag_indices(self.layout.dim)] = False
        r, c = self._coherence_indices()
        mask[r, c] = False
        mask[c, r] = False
        return float(np.max(np.abs(rho[mask]), initial=0.0)) <= tol

    def from_dense(self, rho):
        rho = np.asarray(rho)
        if rho.shape != (self.layout.dim, self.layout.dim):
            raise LayoutMismatchError(f"expected {self.layout.dim}x{self.layout.dim}, got {rho.shape}")
        x = np.empty(self.size)
        d = np.real(np.diag(rho))
        x[: 3 * self.N] = d
        r, c = self._coherence_indices()
        coh = rho[r, c]
        x[self.cr] = coh.real
        x[self.ci] = coh.imag
        return x

    def to_dense(self, x):
        dim = self.layout.dim
        rho = np.zeros((dim, dim), dtype=complex)
        rho[np.diag_indices(dim)] = x[: 3 * self.N]
        r, c = self._coherence_indices()
        coh = x[self.cr] + 1j * x[self.ci]
        rho[r, c] = coh
        rho[c, r] = coh.conj()
        return rho

    def field_populations(self, x):
        return x[self.p1] + x[self.p2] + x[self.p3]

    def atom_populations(self, x):
        return np.array([x[self.p1].sum(), x[self.p2].sum(), x[self.p3].sum()])

    def eigenvalues(self, x):
        """Spectrum of the dense state, from its 2x2 and 1x1 blocks."""
        k, N = self.k, self.N
        pa = x[self.p2][: self.ncoh]
        pb = x[self.p1][k:]
        c2 = x[self.cr] ** 2 + x[self.ci] ** 2
        mean = 0.5 * (pa + pb)
        rad = np.sqrt(0.25 * (pa - pb) ** 2 + c2)
        return np.concatenate(
            [mean + rad, mean - rad, x[self.p1][:k], x[self.p2][N - k :], x[self.p3]]
        )

    @property
    def generator(self):
        if self._generator is None:
            self._generator = self._build_generator()
        return self._generator

    def _build_generator(self):
        m = self.model
        N, k, nc = self.N, self.k, self.ncoh
        rows, cols, vals = [], [], []

        def add(r, c, v):
            rows.append(np.atleast_1d(r))
            cols.append(np.atleast_1d(c))
            vals.append(np.broadcast_to(np.asarray(v, dtype=float), np.atleast_1d(r).shape))

        i1 = np.arange(N)
        i2 = N + i1
        i3 = 2 * N + i1
        hot_down = 2 * m.gamma_h * (m.nbar_h + 1)
        hot_up = 2 * m.gamma_h * m.nbar_h
        cold_down = 2 * m.gamma_c * (m.nbar_c + 1)
        cold_up = 2 * m.gamma_c * m.nbar_c
        add(i1, i3, hot_down)
        add(i1, i1, -hot_up)
        add(i2, i3, cold_down)
        add(i2, i2, -cold_up)
        add(i3, i3, -(hot_down + cold_down))
        add(i3, i1, hot_up)
        add(i3, i2, cold_up)

        n = np.arange(nc)
        icr = 3 * N + n
        ici = 3 * N + nc + n
        v = self.couplings
        delta = -m.detuning if m.frame == "lab" else 0.0
        kappa = m.gamma_h * m.nbar_h + m.gamma_c * m.nbar_c
        # dp1[n+k] = -2 V Im c ; dp2[n] = +2 V Im c
        add(n + k, ici, -2 * v)
        add(N + n, ici, 2 * v)
        # dc = -i delta c - i V (p2[n] - p1[n+k]) - kappa c
        add(icr, icr, -kappa)
        add(ici, ici, -kappa)
        if delta != 0.0:
            add(icr, ici, delta)
            add(ici, icr, -delta)
        add(ici, N + n, -v)
        add(ici, n + k, v)

        mat = sparse.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.size, self.size),
        )
        return mat.tocsr()

    def rhs(self, x):
        return self.generator @ x

    def spectral_radius_bound(self):
        """Upper bound on |eigenvalue| of the sector generator."""
        m = self.model
        rate = 2 * (m.gamma_h * (2 * m.nbar_h + 1) + m.gamma_c * (2 * m.nbar_c + 1))
        delta = abs(m.detuning) if m.frame == "lab" else 0.0
        return 2 * float(self.couplings.max(initial=0.0)) + delta + rate

    def rk4_propagator(self, dt):
        """Sparse matrix of one classical RK4 step, ``sum_j (dt M)^j / j!``."""
        hm = (dt * self.generator).tocsr()
        eye = sparse.identity(self.size, format="csr")
        r = eye + hm / 4.0
        r = eye + (hm @ r) / 3.0
        r = eye + (hm @ r) / 2.0
        r = eye + hm @ r
        return r.tocsr()
