from __future__ import annotations

import json

import numpy as np
import pytest
from conftest import rel

from rheoflow.admissibility import (
    check_all,
    check_asymptotics,
    check_boundary,
    check_coercivity,
    check_derivative_signs,
    check_graph_monotone,
    check_lipschitz,
    report_dict,
)
from rheoflow.relations import eval_bulk
from rheoflow.sampling import Sampler

ZERO_BULK = "kind = custom\ntarget = bulk\nalpha = 0\nbeta = 0\ngraph = stress\nr = 2\n"
ZERO_WALL = "kind = custom\ntarget = boundary\nalpha = 0\nbeta = 0\ngraph = stress\nq = 2\n"


def power_law(nu0, r):
    return rel(f"kind = power_law\nnu0 = {nu0}\nr = {r}\n")


def test_lipschitz_navier_stokes(catalog):
    rep = check_lipschitz(catalog["navier_stokes"])
    assert rep.passed
    assert 2.0 <= rep.estimated_constants["L"] <= 2.3


def test_lipschitz_power_law_flags_superlinear_growth():
    rep = check_lipschitz(power_law(0.5, 3))
    assert rep.passed
    assert rep.estimated_constants["superlinear_growth"]


def test_lipschitz_zero_relation():
    rep = check_lipschitz(rel(ZERO_BULK))
    assert rep.passed and rep.estimated_constants["L"] == 0.0


def test_derivative_signs_navier_stokes(catalog):
    c = check_derivative_signs(catalog["navier_stokes"]).estimated_constants
    assert c["A_min"] == pytest.approx(1.0, abs=1e-8)
    assert c["B_max"] == pytest.approx(-2.0, abs=1e-8)


def test_derivative_signs_power_law():
    assert check_derivative_signs(power_law(0.5, 3)).passed


def test_derivative_signs_non_monotone_witness_reproduces(catalog):
    nm = catalog["non_monotone"]
    rep = check_derivative_signs(nm)
    assert not rep.passed
    w = rep.worst_witness
    assert w["condition"] == "B_max"
    # d/dt G(S, D + t X) : X by central differences, recomputed here
    S, D, X, h = (np.array(w[k]) for k in ("S", "D", "X", "fd_step"))
    dG = (eval_bulk(nm, S, D + h * X) - eval_bulk(nm, S, D - h * X)) / (2 * h)
    assert np.dot(dG, X) / np.dot(X, X) > 1e-7


def test_graph_monotone_bingham(catalog):
    assert check_graph_monotone(catalog["bingham"]).passed


def test_graph_monotone_identical_pair_is_zero(catalog):
    b = catalog["bingham"]
    S, D = b.graph_points(np.array([2.0]), np.array([[1.0, -1.0, 0.5]]))
    assert np.sum((S - S) * (D - D)) == 0.0


def test_graph_monotone_non_monotone_witness(catalog):
    nm = catalog["non_monotone"]
    rep = check_graph_monotone(nm)
    assert not rep.passed
    w = {k: np.array(v) for k, v in rep.worst_witness.items() if k != "product"}
    for S, D in ((w["S1"], w["D1"]), (w["S2"], w["D2"])):
        assert np.linalg.norm(eval_bulk(nm, S, D)) < 1e-9 * (1 + np.linalg.norm(D))
    assert np.dot(w["S1"] - w["S2"], w["D1"] - w["D2"]) < -1e-7


def test_asymptotics(catalog):
    assert check_asymptotics(catalog["navier_stokes"]).estimated_constants["stress_branch"] == "passed"
    assert check_asymptotics(power_law(0.5, 3)).estimated_constants["rate_branch"] == "passed"
    assert not check_asymptotics(rel(ZERO_BULK)).passed


def test_coercivity_navier_stokes(catalog):
    c = check_coercivity(catalog["navier_stokes"]).estimated_constants
    assert 0.2375 <= c["C1"] <= 0.25
    assert c["C2"] == 0.0


@pytest.mark.parametrize("nu0", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("r", [1.5, 3.0])
def test_coercivity_power_law_matches_split(nu0, r):
    analytic = min(2 * nu0 / r, (r - 1) / (r * (2 * nu0) ** (1 / (r - 1))))
    c = check_coercivity(power_law(nu0, r)).estimated_constants
    assert c["C1"] == pytest.approx(analytic, rel=0.05)
    assert c["C1"] <= analytic * 1.05
    assert c["C2"] == 0.0


def test_coercivity_bingham_needs_offset(catalog):
    rep = check_coercivity(catalog["bingham"])
    assert rep.passed and rep.estimated_constants["r"] == 2.0
    assert rep.estimated_constants["C2"] > 0


def test_boundary_navier_slip():
    reps = check_boundary(rel("kind = navier_slip\ngamma = 2\n"))
    assert all(r.passed for r in reps)
    # s.v = gamma |v|^2 = (gamma/2)|v|^2 + |s|^2/(2 gamma)
    c1 = reps[-1].estimated_constants["C1"]
    assert c1 == pytest.approx(min(2 / 2, 1 / (2 * 2)), rel=0.05)


def test_boundary_stick_slip():
    reps = check_boundary(rel("kind = stick_slip\nsigma = 1\n"))
    assert all(r.passed for r in reps)
    assert reps[-1].estimated_constants["C2"] > 0


def test_boundary_zero_fails_coercivity():
    reps = {r.condition: r for r in check_boundary(rel(ZERO_WALL))}
    assert not reps["G4"].passed


def test_reports_are_deterministic(catalog):
    a = report_dict(catalog["carreau"], check_all(catalog["carreau"], Sampler(seed=5)))
    b = report_dict(catalog["carreau"], check_all(catalog["carreau"], Sampler(seed=5)))
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_sampler_validation():
    with pytest.raises(ValueError):
        Sampler(count=0)
    with pytest.raises(ValueError):
        Sampler(radius_schedule=(1.0, 0.5))
