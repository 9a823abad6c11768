"""Staggered (MAC) grid for a channel periodic in ``x`` with walls at ``y = 0, ly``.

Storage layout, ``j`` indexing rows (``y``) and ``i`` columns (``x``):

* ``u[j, i]`` at ``(i dx, (j + 1/2) dy)``, shape ``(ny, nx)``;
* ``v[j, i]`` at ``((i + 1/2) dx, j dy)``, shape ``(ny + 1, nx)``; rows 0 and
  ``ny`` lie on the walls and are identically zero;
* pressure and the normal stresses ``S_xx, S_yy`` at cell centres ``(ny, nx)``;
* the shear stress ``S_xy`` at nodes ``(i dx, j dy)``, shape ``(ny + 1, nx)``,
  wall rows included.

The unknown vector ``U`` stacks ``u`` and the interior rows of ``v``.  The
discrete gradient is ``-DIV^T`` so divergence and gradient are negative
adjoints with respect to the (uniform) cell volume.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError("nx and ny must be >= 4")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("domain lengths must be positive")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def h(self) -> float:
        return max(self.dx, self.dy)

    @property
    def vol(self) -> float:
        return self.dx * self.dy

    @property
    def nu(self) -> int:
        return self.ny * self.nx

    @property
    def nv(self) -> int:
        return (self.ny - 1) * self.nx

    @property
    def n_unknowns(self) -> int:
        return self.nu + self.nv

    # coordinates ---------------------------------------------------------
    @cached_property
    def xc(self):
        return (np.arange(self.nx) + 0.5) * self.dx

    @cached_property
    def yc(self):
        return (np.arange(self.ny) + 0.5) * self.dy

    @cached_property
    def xn(self):
        return np.arange(self.nx) * self.dx

    @cached_property
    def yn(self):
        return np.arange(self.ny + 1) * self.dy

    def u_coords(self):
        return np.meshgrid(self.xn, self.yc)

    def v_coords(self):
        return np.meshgrid(self.xc, self.yn)

    def centre_coords(self):
        return np.meshgrid(self.xc, self.yc)

    def node_coords(self):
        return np.meshgrid(self.xn, self.yn)

    # packing -------------------------------------------------------------
    def pack(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.concatenate([u.ravel(), v[1:-1].ravel()])

    def unpack(self, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        u = U[: self.nu].reshape(self.ny, self.nx).copy()
        v = np.zeros((self.ny + 1, self.nx))
        v[1:-1] = U[self.nu :].reshape(self.ny - 1, self.nx)
        return u, v

    def _uidx(self, j, i):
        return j * self.nx + (i % self.nx)

    def _vidx(self, j, i):
        # interior v rows only (1 <= j <= ny-1)
        return self.nu + (j - 1) * self.nx + (i % self.nx)

    # operators -------------------------------------------------------------
    @cached_property
    def DIV(self) -> sp.csr_matrix:
        """Cell divergence of ``U``."""
        nx, ny, dx, dy = self.nx, self.ny, self.dx, self.dy
        rows, cols, vals = [], [], []
        for j in range(ny):
            for i in range(nx):
                c = j * nx + i
                rows += [c, c]
                cols += [self._uidx(j, i + 1), self._uidx(j, i)]
                vals += [1.0 / dx, -1.0 / dx]
                if j + 1 <= ny - 1:
                    rows.append(c); cols.append(self._vidx(j + 1, i)); vals.append(1.0 / dy)
                if j >= 1:
                    rows.append(c); cols.append(self._vidx(j, i)); vals.append(-1.0 / dy)
        return sp.csr_matrix((vals, (rows, cols)), shape=(nx * ny, self.n_unknowns))

    @cached_property
    def GRAD(self) -> sp.csr_matrix:
        return (-self.DIV.T).tocsr()

    @cached_property
    def Exx(self) -> sp.csr_matrix:
        nx, ny, dx = self.nx, self.ny, self.dx
        rows, cols, vals = [], [], []
        for j in range(ny):
            for i in range(nx):
                c = j * nx + i
                rows += [c, c]
                cols += [self._uidx(j, i + 1), self._uidx(j, i)]
                vals += [1.0 / dx, -1.0 / dx]
        return sp.csr_matrix((vals, (rows, cols)), shape=(nx * ny, self.n_unknowns))

    @cached_property
    def Eyy(self) -> sp.csr_matrix:
        nx, ny, dy = self.nx, self.ny, self.dy
        rows, cols, vals = [], [], []
        for j in range(ny):
            for i in range(nx):
                c = j * nx + i
                if j + 1 <= ny - 1:
                    rows.append(c); cols.append(self._vidx(j + 1, i)); vals.append(1.0 / dy)
                if j >= 1:
                    rows.append(c); cols.append(self._vidx(j, i)); vals.append(-1.0 / dy)
        return sp.csr_matrix((vals, (rows, cols)), shape=(nx * ny, self.n_unknowns))

    @cached_property
    def Exy(self) -> sp.csr_matrix:
        """Shear rate at interior nodes ``1 <= j <= ny-1`` (row-major)."""
        nx, ny, dx, dy = self.nx, self.ny, self.dx, self.dy
        rows, cols, vals = [], [], []
        for j in range(1, ny):
            for i in range(nx):
                n = (j - 1) * nx + i
                rows += [n, n]
                cols += [self._uidx(j, i), self._uidx(j - 1, i)]
                vals += [0.5 / dy, -0.5 / dy]
                rows += [n, n]
                cols += [self._vidx(j, i), self._vidx(j, i - 1)]
                vals += [0.5 / dx, -0.5 / dx]
        return sp.csr_matrix((vals, (rows, cols)), shape=((ny - 1) * nx, self.n_unknowns))

    @cached_property
    def Exy_u(self) -> sp.csr_matrix:
        """``du/dy`` at interior nodes."""
        nx, ny, dy = self.nx, self.ny, self.dy
        rows, cols, vals = [], [], []
        for j in range(1, ny):
            for i in range(nx):
                n = (j - 1) * nx + i
                rows += [n, n]
                cols += [self._uidx(j, i), self._uidx(j - 1, i)]
                vals += [1.0 / dy, -1.0 / dy]
        return sp.csr_matrix((vals, (rows, cols)), shape=((ny - 1) * nx, self.n_unknowns))

    @cached_property
    def Exy_v(self) -> sp.csr_matrix:
        """``dv/dx`` at interior nodes; ``Exy = (Exy_u + Exy_v) / 2``."""
        nx, ny, dx = self.nx, self.ny, self.dx
        rows, cols, vals = [], [], []
        for j in range(1, ny):
            for i in range(nx):
                n = (j - 1) * nx + i
                rows += [n, n]
                cols += [self._vidx(j, i), self._vidx(j, i - 1)]
                vals += [1.0 / dx, -1.0 / dx]
        return sp.csr_matrix((vals, (rows, cols)), shape=((ny - 1) * nx, self.n_unknowns))

    @cached_property
    def LAP(self) -> sp.csc_matrix:
        """Pressure Laplacian ``DIV GRAD`` with cell 0 pinned."""
        L = (self.DIV @ self.GRAD).tolil()
        L[0, :] = 0.0
        L[0, 0] = 1.0
        return L.tocsc()

    @cached_property
    def lap_factor(self):
        from scipy.sparse.linalg import splu

        return splu(self.LAP)

    # interpolation -----------------------------------------------------------
    def u_at_centres(self, u):
        return 0.5 * (u + np.roll(u, -1, axis=1))

    def v_at_centres(self, v):
        return 0.5 * (v[:-1] + v[1:])

    def u_at_nodes(self, u, u_wall):
        """``u`` at all nodes; wall rows take the slip velocities ``u_wall[0|1]``."""
        out = np.empty((self.ny + 1, self.nx))
        out[1:-1] = 0.5 * (u[:-1] + u[1:])
        out[0] = u_wall[0]
        out[-1] = u_wall[1]
        return out

    def v_at_nodes(self, v):
        return 0.5 * (v + np.roll(v, 1, axis=1))

    def nodes_to_centres(self, a):
        return 0.25 * (a[:-1] + a[1:] + np.roll(a[:-1], -1, axis=1) + np.roll(a[1:], -1, axis=1))

    def centres_to_nodes(self, a):
        """Average of the adjacent cells; wall nodes see the two cells beside them."""
        ax = 0.5 * (a + np.roll(a, 1, axis=1))
        out = np.empty((self.ny + 1, self.nx))
        out[1:-1] = 0.5 * (ax[:-1] + ax[1:])
        out[0] = ax[0]
        out[-1] = ax[-1]
        return out

    def node_weights(self):
        """Control-volume areas of the nodes (half cells on the walls)."""
        w = np.full((self.ny + 1, self.nx), self.vol)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def divergence(self, u, v):
        return (np.roll(u, -1, axis=1) - u) / self.dx + (v[1:] - v[:-1]) / self.dy
