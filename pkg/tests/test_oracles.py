from __future__ import annotations

import numpy as np
import pytest
from conftest import rel

from rheoflow.oracles import (
    analytic_poiseuille,
    plug_halfwidth,
    stokes_decay,
    stokes_wavenumber,
)

NS = rel("kind = navier_stokes\nnu = 1\n")
SLIP = rel("kind = navier_slip\ngamma = 1\n")


def test_newtonian_closed_form():
    y, u, us = analytic_poiseuille(NS, SLIP, 1.0, 1.0)
    assert us == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(u, (1 - y**2) / 2 + 1, rtol=1e-12)


def test_zero_force():
    _, u, us = analytic_poiseuille(NS, SLIP, 1.0, 0.0)
    assert us == 0.0 and np.all(u == 0.0)


def test_negative_force_flips_sign():
    _, up, _ = analytic_poiseuille(NS, SLIP, 1.0, 1.0)
    _, um, _ = analytic_poiseuille(NS, SLIP, 1.0, -1.0)
    np.testing.assert_array_equal(um, -up)


def test_power_law_power_slip_closed_form():
    # S = |D| D and s = |v| v; S_xy = |u'| u'/(2 sqrt 2) = -f y
    bulk = rel("kind = power_law\nnu0 = 0.5\nr = 3\n")
    wall = rel("kind = power_slip\ngamma = 1\nq = 3\n")
    H, f = 1.0, 0.7
    y, u, us = analytic_poiseuille(bulk, wall, H, f)
    c = np.sqrt(2 * np.sqrt(2) * f)
    exact = np.sqrt(f * H) + c * 2 / 3 * (H**1.5 - np.abs(y) ** 1.5)
    assert us == pytest.approx(np.sqrt(f * H), rel=1e-12)
    np.testing.assert_allclose(u, exact, rtol=1e-10)


def test_bingham_plug():
    # |S| = sqrt 2 |S_xy| reaches tau at |y| = tau/(sqrt 2 f)
    b = rel("kind = bingham\nnu = 0.5\ntau = 0.5\n")
    f = 1.0
    yp = plug_halfwidth(b, f)
    assert yp == pytest.approx(0.5 / np.sqrt(2), rel=1e-15)
    y, u, _ = analytic_poiseuille(b, SLIP, 1.0, f, np.linspace(-1, 1, 401))
    inside = np.abs(y) <= yp
    assert np.ptp(u[inside]) < 1e-12
    outside = np.abs(y) > yp + 1e-3
    # flowing branch: u' = -(sqrt 2 f |y| - tau)/(sqrt 2 nu) away from the plug
    us = 1.0  # s = f H with gamma = 1
    a = np.abs(y[outside])
    exact = us + (np.sqrt(2) * f * (1 - a**2) / 2 - 0.5 * (1 - a)) / (np.sqrt(2) * 0.5)
    np.testing.assert_allclose(u[outside], exact, rtol=1e-9)


def test_eps_oracle_approaches_limit():
    bulk = rel("kind = power_law\nnu0 = 0.5\nr = 3\n")
    wall = rel("kind = power_slip\ngamma = 1\nq = 3\n")
    y = np.linspace(-1, 1, 9)
    _, u0, _ = analytic_poiseuille(bulk, wall, 1.0, 1.0, y)
    errs = [np.abs(analytic_poiseuille(bulk, wall, 1.0, 1.0, y, eps=e)[1] - u0).max() for e in (1e-1, 1e-2, 1e-3)]
    assert errs[0] > errs[1] > errs[2]


def test_stokes_mode():
    k = stokes_wavenumber(NS, SLIP, 1.0)
    assert k * np.tan(k) == pytest.approx(1.0, rel=1e-12)
    y = np.linspace(-1, 1, 11)
    np.testing.assert_allclose(stokes_decay(NS, SLIP, 1.0, 2.0, y, 0.5),
                               2.0 * np.cos(k * y) * np.exp(-k * k * 0.5), rtol=1e-14)


def test_bad_half_width():
    with pytest.raises(ValueError):
        analytic_poiseuille(NS, SLIP, 0.0, 1.0)
