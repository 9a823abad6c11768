"""Unsteady channel flow with regularized implicit stresses and a cut-off convection.

One step advances ``U^n -> U^{n+1}``:

1. explicit convective flux ``phi_delta(|v|^2) v (x) v`` evaluated at ``U^n``;
2. a linear solve ``(M/dt + K) U* = M(U^n/dt + conv + b) - M G p^n + f`` in
   which the stress is replaced by the affine model ``c D + e`` of the last
   resolved state (:class:`Linearization`) and the wall slip is eliminated;
3. incremental projection onto discretely divergence-free fields;
4. resolution of ``S = S*_eps(D U)`` and ``s = s*_eps(u_wall)`` at the new
   velocity, which also refreshes the linearization.  Steps 2 to 4 repeat
   ``picard_sweeps`` times.

Every catalog relation is isotropic, ``G(S, D) = a(|S|,|D|) S - b(|S|,|D|) D``,
so the resolvent is collinear with its argument,
``S*_eps(D) = sigma(|D|) D / |D|``.  Stress points therefore solve the scalar
reduction for ``sigma`` and scale ``D``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize.elementwise import find_root
from scipy.sparse import diags
from scipy.sparse.linalg import splu

from .config import SimConfig
from .expr import Expression
from .grid import Grid
from .regularization import NoConvergence, make_eps_boundary, make_eps_bulk

__all__ = ["cutoff", "FlowState", "FlowSolver", "Linearization", "SolverError"]


class SolverError(RuntimeError):
    """A step could not be completed; ``where`` locates the failing points."""

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


def cutoff(sq_speed, delta):
    """``phi(delta * sq_speed)`` with ``phi = 1, 2 - s, 0`` on ``[0,1), [1,2), [2, inf)``."""
    sq = np.asarray(sq_speed, dtype=float)
    if np.any(sq < 0) or not np.all(np.isfinite(sq)):
        raise ValueError("sq_speed must be finite and >= 0")
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    out = np.clip(2.0 - delta * sq, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass
class FlowState:
    """Discrete fields at time ``t``.

    ``S_c`` and ``S_n`` hold ``(xx, yy, xy)`` components of the stress at cell
    centres and nodes, ``D_c``/``D_n`` the matching rates.  The staggered
    stress is ``S_c[..., :2]`` (normal) plus ``S_n[..., 2]`` (shear).
    ``s`` is the unweighted wall traction ``s*_eps(u_wall)`` along ``x`` at
    the bottom and top walls, ``phi_wall`` the cut-off weights applied to it.
    """

    t: float
    step: int
    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    S_c: np.ndarray
    S_n: np.ndarray
    D_c: np.ndarray
    D_n: np.ndarray
    u_wall: np.ndarray
    s: np.ndarray
    phi_wall: np.ndarray
    lin: "Linearization" = field(repr=False, default=None)

    @property
    def speed_max(self) -> float:
        return float(max(np.abs(self.u).max(), np.abs(self.v).max()))


def _secant_tangent(rel, mags, floor):
    """``(sigma/m, dsigma/dm)`` of the scalar resolvent on magnitudes ``m``.

    Below ``floor`` the resolvent is continued linearly with the values at
    ``floor``.  The slope comes from implicit differentiation of the scalar
    residual.
    """
    m = np.asarray(mags, dtype=float)
    dm = np.maximum(m.ravel(), floor)
    uniq, inv = np.unique(dm, return_inverse=True)
    sig = np.abs(rel.solve(uniq[:, None])[:, 0])
    g = rel.scalar_residual
    hd = 1e-6 * uniq
    hs = 1e-6 * (sig + uniq)
    with np.errstate(divide="ignore", invalid="ignore"):
        gd = (g(sig, uniq + hd) - g(sig, uniq - hd)) / (2.0 * hd)
        gs = (g(sig + hs, uniq) - g(sig - hs, uniq)) / (2.0 * hs)
        slope = -gd / gs
        ratio = sig / uniq
    slope = np.where(np.isfinite(slope) & (slope > 0), slope, ratio)
    below = uniq <= floor
    slope[below] = ratio[below]
    shape = m.shape
    return ratio[inv].reshape(shape), slope[inv].reshape(shape)


@dataclass
class Linearization:
    """Affine stress model ``S ~ c D + e`` used by the next linear solve.

    ``c`` is the mean of the secant and tangent moduli of the resolvent, so
    the lagged iteration contracts for every monotone relation; ``e`` makes
    the model exact at the last resolved state.  ``cs, es`` do the same for
    the wall traction, ``phi`` holds the wall cut-off weights.
    """

    c_c: np.ndarray
    c_n: np.ndarray
    e_c: np.ndarray
    e_n: np.ndarray
    cs: np.ndarray
    es: np.ndarray
    phi: np.ndarray

    @classmethod
    def initial(cls, grid: Grid):
        ny, nx = grid.ny, grid.nx
        return cls(np.ones((ny, nx)), np.ones((ny + 1, nx)), np.zeros((ny, nx, 3)),
                   np.zeros((ny + 1, nx, 3)), np.ones((2, nx)), np.zeros((2, nx)), np.ones((2, nx)))

    def wall_terms(self, dy):
        """``(a, e')``: wall-node modulus over ``dy`` and outward shear offsets."""
        a = np.stack([self.c_n[0], self.c_n[-1]]) / dy
        e = np.stack([self.e_n[0, :, 2], -self.e_n[-1, :, 2]])
        return a, e


class FlowSolver:
    """Time stepper for one :class:`SimConfig`."""

    def __init__(self, config: SimConfig):
        self.cfg = config
        g: Grid = config.grid
        self.grid = g
        self.eps_bulk = make_eps_bulk(config.bulk, config.eps)
        self.eps_wall = make_eps_boundary(config.boundary, config.eps)
        self._bx = Expression(config.bx, ("x", "y", "t"))
        self._by = Expression(config.by, ("x", "y", "t"))
        self._xu, self._yu = g.u_coords()
        self._xv, self._yv = g.v_coords()
        self._factor = None
        self._factor_key = None
        self._wall_rows = np.concatenate([np.arange(g.nx), (g.ny - 1) * g.nx + np.arange(g.nx)])

    # fields ------------------------------------------------------------------
    def phi(self, sq):
        if not self.cfg.cutoff:
            return np.ones_like(np.asarray(sq, dtype=float))
        return cutoff(sq, self.cfg.delta)

    def body_force(self, t: float) -> np.ndarray:
        g = self.grid
        bu = np.broadcast_to(self._bx(x=self._xu, y=self._yu, t=t), (g.ny, g.nx))
        bv = np.zeros((g.ny + 1, g.nx))
        bv[:] = np.broadcast_to(self._by(x=self._xv, y=self._yv, t=t), bv.shape)
        return g.pack(np.asarray(bu, dtype=float), bv)

    def rates(self, U, u_wall):
        """Rate tensors ``(xx, yy, xy)`` at centres and nodes."""
        g = self.grid
        u, _ = g.unpack(U)
        dxx = (g.Exx @ U).reshape(g.ny, g.nx)
        dyy = (g.Eyy @ U).reshape(g.ny, g.nx)
        dxy_n = np.empty((g.ny + 1, g.nx))
        dxy_n[1:-1] = (g.Exy @ U).reshape(g.ny - 1, g.nx)
        dxy_n[0] = (u[0] - u_wall[0]) / g.dy
        dxy_n[-1] = (u_wall[1] - u[-1]) / g.dy
        D_c = np.stack([dxx, dyy, g.nodes_to_centres(dxy_n)], axis=-1)
        D_n = np.stack([g.centres_to_nodes(dxx), g.centres_to_nodes(dyy), dxy_n], axis=-1)
        return D_c, D_n

    @staticmethod
    def _norm(T):
        return np.sqrt(T[..., 0] ** 2 + T[..., 1] ** 2 + 2.0 * T[..., 2] ** 2)

    def convection(self, U) -> np.ndarray:
        """``-div(phi v (x) v)`` on the face unknowns (per unit volume).

        Donor-cell fluxes: the advecting velocity is averaged to the flux
        point and the advected one taken from the upwind face.
        """
        g = self.grid
        u, v = g.unpack(U)
        uc, vc = g.u_at_centres(u), g.v_at_centres(v)
        un = g.u_at_nodes(u, np.zeros(2))[1:-1]
        vn = g.v_at_nodes(v)[1:-1]
        wc = self.phi(uc**2 + vc**2)
        wn = self.phi(un**2 + vn**2)
        u_up = np.where(uc >= 0, u, np.roll(u, -1, axis=1))
        v_up = np.where(vc >= 0, v[:-1], v[1:])
        uy_up = np.where(vn >= 0, u[:-1], u[1:])
        vx_up = np.where(un >= 0, np.roll(v[1:-1], 1, axis=1), v[1:-1])
        Fxx = (wc * uc * u_up).ravel()
        Fyy = (wc * vc * v_up).ravel()
        # node flux of u-momentum across y and of v-momentum across x
        Fu = (wn * vn * uy_up).ravel()
        Fv = (wn * un * vx_up).ravel()
        return g.Exx.T @ Fxx + g.Eyy.T @ Fyy + g.Exy_u.T @ Fu + g.Exy_v.T @ Fv

    def cfl(self, U) -> float:
        g = self.grid
        u, v = g.unpack(U)
        return self.cfg.dt * (np.abs(u).max() / g.dx + np.abs(v).max() / g.dy)

    # constitutive --------------------------------------------------------------
    @staticmethod
    def _floor(mags):
        return 1e-6 * (1.0 + float(np.max(mags, initial=0.0)))

    def _ratio(self, rel, mags, floor):
        """Secant modulus ``sigma(m)/m`` of a resolvent, continued linearly below ``floor``."""
        m = np.maximum(np.asarray(mags, dtype=float), floor)
        return np.abs(rel.solve(m.reshape(-1, 1))[:, 0]).reshape(m.shape) / m

    def wall_velocity(self, U, lin: Linearization | None = None):
        """Slip velocity at which bulk shear flux and wall traction balance.

        Per wall column the bulk wall-node stress is decreasing and the
        weighted traction increasing in the slip velocity, so the root is
        bracketed by zero and the adjacent interior velocity.  The prediction
        of the affine model ``lin`` narrows the bracket and is kept where it
        already balances to rounding.
        """
        g = self.grid
        u, _ = g.unpack(U)
        adj = np.stack([u[0], u[-1]])
        xx = g.centres_to_nodes((g.Exx @ U).reshape(g.ny, g.nx))[[0, -1]]
        yy = g.centres_to_nodes((g.Eyy @ U).reshape(g.ny, g.nx))[[0, -1]]
        fb = self._floor(np.abs(adj) / g.dy)
        fw = self._floor(np.abs(adj))

        def parts(w, adj, xx, yy):
            dxy = (adj - w) / g.dy
            flux = self._ratio(self.eps_bulk, np.sqrt(xx**2 + yy**2 + 2.0 * dxy**2), fb) * dxy
            return flux, self.phi(w**2) * self._ratio(self.eps_wall, np.abs(w), fw) * w

        def balance(w, adj, xx, yy):
            flux, trac = parts(w, adj, xx, yy)
            return flux - trac

        lo, hi = np.minimum(adj, 0.0), np.maximum(adj, 0.0)
        w = np.zeros_like(adj)
        live = adj != 0.0
        if lin is not None:
            a, e = lin.wall_terms(g.dy)
            guess = np.clip((a * adj + e - lin.phi * lin.es) / (a + lin.phi * lin.cs), lo, hi)
            flux, trac = parts(guess, adj, xx, yy)
            h = flux - trac
            live &= np.abs(h) > 1e-13 * (np.abs(flux) + np.abs(trac))
            # the balance has the sign of adj below the root
            below = np.sign(h) == np.sign(adj)
            up = adj > 0
            lo = np.where(below == up, guess, lo)
            hi = np.where(below == up, hi, guess)
            live &= lo < hi
            w = np.where(adj != 0.0, guess, 0.0)
        if np.any(live):
            res = find_root(balance, (lo[live], hi[live]), args=(adj[live], xx[live], yy[live]),
                            tolerances=dict(xatol=0.0, xrtol=1e-12, fatol=0.0, frtol=0.0))
            if not np.all(res.success):
                raise SolverError("wall balance did not converge")
            w[live] = res.x
        return w

    def resolve(self, U, lin: Linearization | None = None):
        """Stresses and tractions at velocity ``U`` plus the next linearization."""
        u_wall = self.wall_velocity(U, lin)
        D_c, D_n = self.rates(U, u_wall)
        dc, dn = self._norm(D_c), self._norm(D_n)
        floor = self._floor(np.concatenate([dc.ravel(), dn.ravel()]))
        vw = np.abs(u_wall)
        try:
            r_c, t_c = _secant_tangent(self.eps_bulk, dc, floor)
            r_n, t_n = _secant_tangent(self.eps_bulk, dn, floor)
            r_s, t_s = _secant_tangent(self.eps_wall, vw, self._floor(vw))
        except NoConvergence as exc:
            raise SolverError(f"resolvent failed: {exc}", getattr(exc, "indices", None)) from None
        S_c = r_c[..., None] * D_c
        S_n = r_n[..., None] * D_n
        s = r_s * u_wall
        c_c, c_n, cs = 0.5 * (r_c + t_c), 0.5 * (r_n + t_n), 0.5 * (r_s + t_s)
        lin = Linearization(c_c, c_n, S_c - c_c[..., None] * D_c, S_n - c_n[..., None] * D_n,
                            cs, s - cs * u_wall, self.phi(u_wall**2))
        return dict(S_c=S_c, S_n=S_n, D_c=D_c, D_n=D_n, u_wall=u_wall, s=s, phi_wall=lin.phi, lin=lin)

    # linear algebra -------------------------------------------------------------
    def _system(self, lin: Linearization):
        g, dt = self.grid, self.cfg.dt
        key = (lin.c_c, lin.c_n, lin.cs, lin.phi)
        if self._factor_key is not None and all(
            np.allclose(a, b, rtol=1e-10, atol=0.0) for a, b in zip(key, self._factor_key)
        ):
            return self._factor
        vol = g.vol
        cc = diags(lin.c_c.ravel() * vol)
        K = g.Exx.T @ cc @ g.Exx + g.Eyy.T @ cc @ g.Eyy
        K = K + g.Exy.T @ diags(2.0 * lin.c_n[1:-1].ravel() * vol) @ g.Exy
        a, _ = lin.wall_terms(g.dy)
        pc = lin.phi * lin.cs
        wall = np.zeros(g.n_unknowns)
        wall[self._wall_rows] = (a * pc / (a + pc)).ravel() * g.dx
        A = (K + diags(vol / dt + wall)).tocsc()
        self._factor = splu(A)
        self._factor_key = tuple(np.array(x, copy=True) for x in key)
        return self._factor

    def _offset_force(self, lin: Linearization):
        """Right-hand side contribution of the affine offsets (volume weighted)."""
        g = self.grid
        vol = g.vol
        f = -vol * (g.Exx.T @ lin.e_c[..., 0].ravel() + g.Eyy.T @ lin.e_c[..., 1].ravel()
                    + 2.0 * (g.Exy.T @ lin.e_n[1:-1, :, 2].ravel()))
        a, e = lin.wall_terms(g.dy)
        pc = lin.phi * lin.cs
        fw = (pc * e + a * lin.phi * lin.es) / (a + pc)
        f[self._wall_rows] -= fw.ravel() * g.dx
        return f

    def project(self, Ustar, scale=1.0):
        """Return ``(U, phi)`` with ``DIV U = 0`` and ``U = Ustar - scale * G phi``."""
        g = self.grid
        rhs = (g.DIV @ Ustar) / scale
        rhs[0] = 0.0
        ph = g.lap_factor.solve(rhs)
        U = Ustar - scale * (g.GRAD @ ph)
        return U, ph

    # public ---------------------------------------------------------------------
    def initial_velocity(self) -> np.ndarray:
        cfg, g = self.cfg, self.grid
        if cfg.initial_mode == "stokes":
            from .oracles import stokes_wavenumber

            k = stokes_wavenumber(cfg.bulk, cfg.boundary, 0.5 * g.ly, cfg.eps)
            u = cfg.amplitude * np.cos(k * (self._yu - 0.5 * g.ly))
            v = np.zeros((g.ny + 1, g.nx))
        else:
            fu = Expression(cfg.u0, ("x", "y", "t"))
            fv = Expression(cfg.v0, ("x", "y", "t"))
            u = np.broadcast_to(fu(x=self._xu, y=self._yu, t=0.0), (g.ny, g.nx)).astype(float)
            v = np.broadcast_to(fv(x=self._xv, y=self._yv, t=0.0), (g.ny + 1, g.nx)).astype(float)
            v = v.copy()
            v[0] = v[-1] = 0.0
        return g.pack(u, v)

    def init(self, U0=None) -> FlowState:
        """Project the initial velocity and resolve consistent stresses."""
        g = self.grid
        U0 = self.initial_velocity() if U0 is None else np.asarray(U0, dtype=float)
        if not np.all(np.isfinite(U0)):
            raise SolverError("non-finite initial velocity")
        U, _ = self.project(U0)
        res = self.resolve(U)
        u, v = g.unpack(U)
        return FlowState(0.0, 0, u, v, np.zeros((g.ny, g.nx)), **res)

    def step(self, state: FlowState) -> FlowState:
        cfg, g = self.cfg, self.grid
        dt, vol = cfg.dt, g.vol
        Un = g.pack(state.u, state.v)
        t1 = state.t + dt
        p_flat = state.p.ravel()
        rhs = vol * (Un / dt + self.convection(Un) + self.body_force(t1)) - vol * (g.GRAD @ p_flat)
        lin = state.lin
        for _ in range(cfg.picard_sweeps):
            Ustar = self._system(lin).solve(rhs + self._offset_force(lin))
            U, ph = self.project(Ustar, dt)
            if not np.all(np.isfinite(U)):
                raise SolverError(f"non-finite velocity at t = {t1:g}")
            res = self.resolve(U, lin)
            lin = res["lin"]
        u, v = g.unpack(U)
        return FlowState(t1, state.step + 1, u, v, (p_flat + ph).reshape(g.ny, g.nx), **res)

    def n_steps(self) -> int:
        cfg = self.cfg
        return min(cfg.max_steps, int(math.ceil(cfg.t_end / cfg.dt - 1e-9)))
