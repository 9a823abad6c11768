"""Energy ledger, weak-form residual, pressure ratio and pointwise checks.

All sums run in a fixed order over flattened arrays so results are
reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid

__all__ = [
    "EnergyLedger",
    "LedgerAccumulator",
    "energy_ledger",
    "kinetic_energy",
    "bulk_dissipation_rate",
    "boundary_dissipation_rate",
    "divergence_ratio",
    "wall_normal_max",
    "dissipation_sign",
    "SmoothField",
    "field_bank",
    "WeakResidual",
    "weak_residual",
    "pressure_diagnostic",
]


def kinetic_energy(grid: Grid, u, v) -> float:
    return 0.5 * grid.vol * (float(np.sum(u * u)) + float(np.sum(v[1:-1] * v[1:-1])))


def bulk_dissipation_rate(grid: Grid, state) -> float:
    """``sum S:D vol`` on the staggered stress points (wall nodes at half weight)."""
    Sc, Dc, Sn, Dn = state.S_c, state.D_c, state.S_n, state.D_n
    centres = float(np.sum(Sc[..., 0] * Dc[..., 0] + Sc[..., 1] * Dc[..., 1])) * grid.vol
    nodes = float(np.sum(2.0 * Sn[..., 2] * Dn[..., 2] * grid.node_weights()))
    return centres + nodes


def boundary_dissipation_rate(grid: Grid, state, weighted: bool = True) -> float:
    w = state.phi_wall if weighted else 1.0
    return float(np.sum(w * state.s * state.u_wall)) * grid.dx


def work_rate(grid: Grid, b: np.ndarray, state) -> float:
    return grid.vol * float(np.dot(b, grid.pack(state.u, state.v)))


def divergence_ratio(grid: Grid, u, v) -> float:
    """``max|div v| h / |v|_inf`` (0 for the zero field)."""
    vmax = max(float(np.abs(u).max()), float(np.abs(v).max()))
    if vmax == 0.0:
        return 0.0
    return float(np.abs(grid.divergence(u, v)).max()) * grid.h / vmax


def wall_normal_max(v) -> float:
    return float(max(np.abs(v[0]).max(), np.abs(v[-1]).max()))


def dissipation_sign(state) -> tuple[float, float]:
    """Least normalized ``S:D/(|S||D|)`` over stress points and ``s v/(|s||v|)`` over walls."""

    def worst(S, D):
        sd = S[..., 0] * D[..., 0] + S[..., 1] * D[..., 1] + 2.0 * S[..., 2] * D[..., 2]
        ns = np.sqrt(S[..., 0] ** 2 + S[..., 1] ** 2 + 2.0 * S[..., 2] ** 2)
        nd = np.sqrt(D[..., 0] ** 2 + D[..., 1] ** 2 + 2.0 * D[..., 2] ** 2)
        den = ns * nd
        q = np.where(den > 0, sd / np.where(den > 0, den, 1.0), 0.0)
        return float(q.min())

    bulk = min(worst(state.S_c, state.D_c), worst(state.S_n, state.D_n))
    den = np.abs(state.s) * np.abs(state.u_wall)
    q = np.where(den > 0, state.s * state.u_wall / np.where(den > 0, den, 1.0), 0.0)
    return bulk, float(q.min())


@dataclass
class EnergyLedger:
    """Per-step budget; dissipations and work are cumulative from ``t = 0``."""

    t: list = field(default_factory=list)
    kinetic: list = field(default_factory=list)
    bulk_diss: list = field(default_factory=list)
    boundary_diss: list = field(default_factory=list)
    work: list = field(default_factory=list)
    defect: list = field(default_factory=list)

    COLUMNS = ("t", "kinetic", "bulk_diss", "boundary_diss", "work", "defect")

    def rows(self):
        return list(zip(*(getattr(self, c) for c in self.COLUMNS)))

    @property
    def energy_scale(self) -> float:
        """Largest budget entry, used to normalize the defect."""
        vals = [abs(x) for c in self.COLUMNS[1:5] for x in getattr(self, c)]
        return max(vals, default=0.0)

    def max_defect(self, normalized: bool = True) -> float:
        if not self.defect:
            return 0.0
        d = max(self.defect)
        if not normalized:
            return d
        scale = self.energy_scale
        return d / scale if scale > 0 else 0.0

    def min_dissipation_increment(self) -> tuple[float, float]:
        b = np.diff([0.0] + self.bulk_diss)
        s = np.diff([0.0] + self.boundary_diss)
        return float(b.min(initial=0.0)), float(s.min(initial=0.0))


class LedgerAccumulator:
    """Builds an :class:`EnergyLedger` one state at a time (right-endpoint rule)."""

    def __init__(self, grid: Grid, force):
        self.grid = grid
        self.force = force
        self.ledger = EnergyLedger()
        self._k0 = None

    def add(self, state, dt: float | None = None):
        g, L = self.grid, self.ledger
        ke = kinetic_energy(g, state.u, state.v)
        if self._k0 is None:
            self._k0 = ke
            L.t.append(state.t)
            L.kinetic.append(ke)
            for c in ("bulk_diss", "boundary_diss", "work", "defect"):
                getattr(L, c).append(0.0)
            return
        dt = state.t - L.t[-1] if dt is None else dt
        bd = L.bulk_diss[-1] + dt * bulk_dissipation_rate(g, state)
        sd = L.boundary_diss[-1] + dt * boundary_dissipation_rate(g, state)
        w = L.work[-1] + dt * work_rate(g, self.force(state.t), state)
        L.t.append(state.t)
        L.kinetic.append(ke)
        L.bulk_diss.append(bd)
        L.boundary_diss.append(sd)
        L.work.append(w)
        L.defect.append(ke + bd + sd - w - self._k0)


def energy_ledger(states, config) -> EnergyLedger:
    """Ledger of a sequence of states of one run."""
    states = list(states)
    if len(states) < 2:
        raise ValueError("energy ledger needs at least two states")
    g = config.grid
    for s in states:
        if s.u.shape != (g.ny, g.nx):
            raise ValueError("state does not match the configured grid")
    from .solver import FlowSolver

    fs = FlowSolver(config)
    acc = LedgerAccumulator(g, fs.body_force)
    for s in states:
        acc.add(s)
    return acc.ledger


# weak residual -------------------------------------------------------------------
@dataclass(frozen=True)
class SmoothField:
    """Smooth solenoidal field ``W = curl psi`` with ``W.n = 0`` on the walls.

    ``W(x, y)`` returns ``(Wu, Wv)`` and ``grad(x, y)`` returns
    ``(dWu/dx, dWu/dy, dWv/dx, dWv/dy)``, both analytic.
    """

    name: str
    W: object
    grad: object


def field_bank(grid: Grid) -> list[SmoothField]:
    """Curls of ``y``, ``(L/pi) sin(pi y/L)``, ``(L/2pi) sin(2 pi y/L)`` and
    ``sin^2(pi y/L)`` times ``sin(k x)`` or ``cos(k x)``, ``k = 2 pi/lx``."""
    L, k = grid.ly, 2.0 * np.pi / grid.lx
    a = np.pi / L
    z = np.zeros_like
    bank = [
        SmoothField("uniform", lambda x, y: (np.ones_like(y + x), z(y + x)),
                  lambda x, y: (z(y + x),) * 4),
        SmoothField("cos1", lambda x, y: (np.cos(a * y) + z(x), z(y + x)),
                  lambda x, y: (z(y + x), -a * np.sin(a * y) + z(x), z(y + x), z(y + x))),
        SmoothField("cos2", lambda x, y: (np.cos(2 * a * y) + z(x), z(y + x)),
                  lambda x, y: (z(y + x), -2 * a * np.sin(2 * a * y) + z(x), z(y + x), z(y + x))),
    ]
    for name, f, df in (("cell_sin", np.sin, np.cos), ("cell_cos", np.cos, lambda t: -np.sin(t))):
        bank.append(SmoothField(
            name,
            lambda x, y, f=f, df=df: (a * np.sin(2 * a * y) * f(k * x), -np.sin(a * y) ** 2 * k * df(k * x)),
            lambda x, y, f=f, df=df: (
                a * np.sin(2 * a * y) * k * df(k * x),
                2 * a * a * np.cos(2 * a * y) * f(k * x),
                np.sin(a * y) ** 2 * k * k * f(k * x),
                -k * df(k * x) * a * np.sin(2 * a * y),
            ),
        ))
    return bank


class WeakResidual:
    """Time-integrated weak form of the limit momentum balance on smooth test fields.

    For each field ``W`` of the bank it accumulates ``(v(t) - v(0), W)`` plus
    the right-endpoint time integral of ``-(v (x) v : grad W) + (S : D W)
    + (s . W)_wall - (b . W)``, with unweighted convection and traction.  The
    pressure drops out because ``W`` is solenoidal and tangential.  ``W`` and
    its gradient are evaluated exactly at the staggered points, so the residual
    measures the consistency error of the discrete solution.  Every residual
    is divided by the largest total magnitude of the contributions over the
    bank, which keeps fields the flow does not excite at round-off.
    """

    def __init__(self, grid: Grid, force, bank=None):
        self.grid = grid
        self.force = force
        self.bank = field_bank(grid) if bank is None else bank
        g = grid
        Xu, Yu = g.u_coords()
        Xv, Yv = g.v_coords()
        Xc, Yc = g.centre_coords()
        Xn, Yn = g.node_coords()
        self._ops = []
        for f in self.bank:
            wu = np.broadcast_to(f.W(Xu, Yu)[0], Xu.shape)
            wv = np.array(np.broadcast_to(f.W(Xv, Yv)[1], Xv.shape))
            wv[0] = wv[-1] = 0.0
            gc = [np.broadcast_to(q, Xc.shape) for q in f.grad(Xc, Yc)]
            gn = [np.broadcast_to(q, Xn.shape) for q in f.grad(Xn, Yn)]
            self._ops.append(dict(
                W=g.pack(wu, wv), exx=gc[0], eyy=gc[3], exy=0.5 * (gn[1] + gn[2]),
                dudy=gn[1], dvdx=gn[2],
                wall=np.stack([np.broadcast_to(f.W(Xn[r], Yn[r])[0], Xn[r].shape) for r in (0, -1)]),
            ))
        self._w = g.node_weights()
        n = len(self.bank)
        self.integral = np.zeros(n)
        self.scale = np.zeros(n)
        self._U0 = None
        self._last = None

    def add(self, state, dt: float | None = None):
        g = self.grid
        U = g.pack(state.u, state.v)
        if self._U0 is None:
            self._U0 = U
            self._t = state.t
            return
        dt = state.t - self._t if dt is None else dt
        self._t = state.t
        uc, vc = g.u_at_centres(state.u), g.v_at_centres(state.v)
        un = g.u_at_nodes(state.u, state.u_wall)
        vn = g.v_at_nodes(state.v)
        Sxx, Syy = state.S_c[..., 0], state.S_c[..., 1]
        Sxy = state.S_n[..., 2]
        b = self.force(state.t)
        vol, w = g.vol, self._w
        for k, op in enumerate(self._ops):
            conv = -(vol * float(np.sum(uc * uc * op["exx"] + vc * vc * op["eyy"]))
                     + float(np.sum(w * un * vn * (op["dudy"] + op["dvdx"]))))
            stress = vol * float(np.sum(Sxx * op["exx"] + Syy * op["eyy"])) + float(np.sum(w * 2.0 * Sxy * op["exy"]))
            wall = g.dx * float(np.sum(state.s * op["wall"]))
            force = -vol * float(b @ op["W"])
            self.integral[k] += dt * (conv + stress + wall + force)
            self.scale[k] += dt * (abs(conv) + abs(stress) + abs(wall) + abs(force))
        self._last = U

    def values(self) -> np.ndarray:
        n = len(self.bank)
        if self._last is None:
            return np.zeros(n)
        vol = self.grid.vol
        res, sc = np.empty(n), np.empty(n)
        for k, op in enumerate(self._ops):
            dv = vol * float((self._last - self._U0) @ op["W"])
            res[k] = abs(dv + self.integral[k])
            sc[k] = abs(dv) + self.scale[k]
        top = sc.max()
        return res / top if top > 0 else np.zeros(n)

    def value(self) -> float:
        return float(self.values().max(initial=0.0))


def weak_residual(states, config, bank=None) -> float:
    """Largest normalized weak-form residual over the test bank."""
    from .solver import FlowSolver

    g = config.grid
    wr = WeakResidual(g, FlowSolver(config).body_force, bank)
    for s in states:
        wr.add(s)
    return wr.value()


# pressure --------------------------------------------------------------------------
def _lnorm(a, z, w):
    a = np.abs(np.asarray(a, dtype=float))
    return float(np.sum(w * a**z)) ** (1.0 / z)


def pressure_diagnostic(state, config, force=None) -> dict:
    """Discrete ``L^{z'}`` norm of the mean-free pressure and the bound surrogate.

    The surrogate adds the ``L^{z'}`` norms of ``v (x) v``, ``S``, the wall
    traction and the body force; ``ratio`` is their quotient (0 when both
    vanish).
    """
    g = config.grid
    z = config.z
    zp = z / (z - 1.0)
    vol = g.vol
    p = state.p - state.p.mean()
    pn = _lnorm(p, zp, vol)
    uc, vc = g.u_at_centres(state.u), g.v_at_centres(state.v)
    vv = np.sqrt(uc**4 + 2 * (uc * vc) ** 2 + vc**4)
    S = state.S_c
    Sn = np.sqrt(S[..., 0] ** 2 + S[..., 1] ** 2 + 2 * S[..., 2] ** 2)
    if force is None:
        from .solver import FlowSolver

        force = FlowSolver(config).body_force
    bu, bv = g.unpack(force(state.t))
    bn = np.sqrt(g.u_at_centres(bu) ** 2 + g.v_at_centres(bv) ** 2)
    rhs = _lnorm(vv, zp, vol) + _lnorm(Sn, zp, vol) + _lnorm(state.s, zp, g.dx) + _lnorm(bn, zp, vol)
    ratio = pn / rhs if rhs > 0 else 0.0
    return {"pressure_norm": pn, "bound": rhs, "ratio": ratio, "z": z}
