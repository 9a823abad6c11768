from __future__ import annotations

import numpy as np
import pytest
from conftest import make_config

from rheoflow.diagnostics import divergence_ratio, wall_normal_max
from rheoflow.solver import FlowSolver, cutoff


def test_cutoff_branch_values():
    assert cutoff(0.5, 1.0) == 1.0
    assert cutoff(1.5, 1.0) == 0.5
    assert cutoff(8.0, 0.25) == 0.0
    assert cutoff(4.0, 0.25) == 1.0
    np.testing.assert_array_equal(cutoff(np.array([0.0, 1.0, 2.0, 3.0]), 1.0), [1.0, 1.0, 0.0, 0.0])


@pytest.mark.parametrize("sq, delta", [(-1.0, 1.0), (1.0, 0.0), (1.0, 1.5), (np.nan, 1.0)])
def test_cutoff_rejects_bad_input(sq, delta):
    with pytest.raises(ValueError):
        cutoff(sq, delta)


def _fields(st):
    return [st.u, st.v, st.p, st.S_c, st.S_n, st.s]


def test_init_zero_field():
    st = FlowSolver(make_config()).init()
    for a in _fields(st):
        assert np.all(a == 0.0)


def test_init_translation_unchanged():
    fs = FlowSolver(make_config(u0="1"))
    st = fs.init()
    assert np.abs(st.u - 1.0).max() < 1e-13
    assert np.all(st.v == 0.0)


def test_init_gradient_projected_to_zero():
    cfg = make_config(nx=8, ny=8, lx=1.0, ly=1.0)
    fs = FlowSolver(cfg)
    g = cfg.grid
    rng = np.random.default_rng(0)
    U0 = g.GRAD @ rng.standard_normal(g.nx * g.ny)
    st = fs.init(U0)
    assert max(np.abs(st.u).max(), np.abs(st.v).max()) < 1e-12 * np.abs(U0).max()


def test_rest_stays_at_rest():
    fs = FlowSolver(make_config())
    st = fs.init()
    for _ in range(5):
        st = fs.step(st)
        for a in _fields(st):
            assert np.all(a == 0.0)


def test_forced_channel_accelerates_and_stays_solenoidal():
    cfg = make_config(bx="1", dt=0.1)
    fs = FlowSolver(cfg)
    st = fs.init()
    prev = st.u.mean()
    for _ in range(10):
        st = fs.step(st)
        assert st.u.mean() > prev
        prev = st.u.mean()
        assert divergence_ratio(cfg.grid, st.u, st.v) <= 1e-10
        assert wall_normal_max(st.v) == 0.0


def test_tiny_delta_matches_uncut_step():
    kw = dict(nx=8, ny=8, lx=1.0, ly=1.0, u0="1 + 0.3*sin(2*pi*x) + 0.2*y", dt=0.01)
    cut = make_config(extra="delta = 1e-12", **kw)
    off = make_config(extra="cutoff = off", **kw)
    a, b = FlowSolver(cut), FlowSolver(off)
    sa, sb = a.step(a.init()), b.step(b.init())
    np.testing.assert_allclose(sa.u, sb.u, rtol=0, atol=1e-14)
    np.testing.assert_allclose(sa.v, sb.v, rtol=0, atol=1e-14)


def test_cutoff_suppresses_fast_convection():
    kw = dict(nx=8, ny=8, lx=1.0, ly=1.0, u0="5 + sin(2*pi*x)")
    fs = FlowSolver(make_config(extra="delta = 1", **kw))
    st = fs.init()
    U = fs.grid.pack(st.u, st.v)
    # |v|^2 >= 16 everywhere, so phi(delta |v|^2) = 0
    assert np.all(fs.convection(U) == 0.0)
    slow = FlowSolver(make_config(extra="delta = 1e-3", **kw))
    assert np.abs(slow.convection(U)).max() > 0.0
