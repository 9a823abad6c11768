from __future__ import annotations

import numpy as np
import pytest
from conftest import random_mandel, rel

from rheoflow.regularization import (
    NewtonSettings,
    NoConvergence,
    continuation_resolve,
    estimate_resolvent_constants,
    make_eps_boundary,
    make_eps_bulk,
    resolve_slip,
    resolve_stress,
    scalar_oracle_resolve,
)
from rheoflow.relations import eval_bulk, explicit_stress
from rheoflow.sampling import Sampler
from rheoflow.tensors import SymTensor2, norms

NS = "kind = navier_stokes\nnu = 1\n"
BINGHAM = "kind = bingham\nnu = 0.5\ntau = 1\n"


def test_eps_bulk_linear_algebra():
    e = 0.1
    G = make_eps_bulk(rel(NS), e)
    rng = np.random.default_rng(0)
    S, D = rng.standard_normal((2, 50, 3))
    np.testing.assert_allclose(G.residual(S, D), (1 + 2 * e) * S - (2 + e) * D, rtol=1e-13, atol=1e-13)


def test_eps_bulk_is_substitution(catalog):
    rng = np.random.default_rng(1)
    S, D = rng.standard_normal((2, 40, 3))
    for name in ("bingham", "carreau", "glen", "herschel_bulkley"):
        base = catalog[name]
        G = make_eps_bulk(base, 0.3)
        assert np.array_equal(G.residual(S, D), eval_bulk(base, S - 0.3 * D, D - 0.3 * S)), name


def test_eps_bulk_small_eps_limit(catalog):
    rng = np.random.default_rng(2)
    S = random_mandel(rng, 100) * rng.uniform(0, 1, (100, 1))
    D = random_mandel(rng, 100) * rng.uniform(0, 1, (100, 1))
    for name in ("navier_stokes", "carreau", "power_law_r3"):
        base = catalog[name]
        diff = make_eps_bulk(base, 1e-8).residual(S, D) - eval_bulk(base, S, D)
        assert np.max(norms(diff)) < 1e-6, name


def test_eps_origin_and_range(catalog):
    for name, base in catalog.items():
        make = make_eps_bulk if base.target == "bulk" else make_eps_boundary
        m = 3 if base.target == "bulk" else 2
        assert np.all(make(base, 0.1).residual(np.zeros(m), np.zeros(m)) == 0.0), name
    for e in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            make_eps_bulk(rel(NS), e)


def test_resolve_stress_navier_stokes():
    D = SymTensor2.diag(1.0, -1.0)
    S = resolve_stress(make_eps_bulk(rel(NS), 0.1), D)
    np.testing.assert_allclose(S.mandel(), 1.75 * D.mandel(), rtol=1e-13)


def test_resolve_zero_rate(catalog):
    for name, base in catalog.items():
        if base.target == "bulk":
            out = resolve_stress(make_eps_bulk(base, 0.1), np.zeros(3))
        else:
            out = resolve_slip(make_eps_boundary(base, 0.1), np.zeros(2))
        assert np.all(out == 0.0), name


def test_resolve_power_law_near_explicit():
    p = rel("kind = power_law\nnu0 = 0.5\nr = 3\n")
    D = SymTensor2.diag(1.0, -1.0) * (1 / np.sqrt(2))
    S = resolve_stress(make_eps_bulk(p, 1e-3), D)
    assert (S - D).norm() <= 5e-3


def test_resolve_slip_examples():
    s = resolve_slip(make_eps_boundary(rel("kind = navier_slip\ngamma = 2\n"), 0.1), [1.0, 0.0])
    np.testing.assert_allclose(s, [1.75, 0.0], rtol=1e-13, atol=1e-15)
    ss = make_eps_boundary(rel("kind = stick_slip\nsigma = 1\n"), 0.01)
    s = resolve_slip(ss, [2.0, 0.0])
    assert s[1] == 0.0
    assert 1.0 < s[0] < 1.0 + 2.0 * 1.01
    assert s[0] == pytest.approx(scalar_oracle_resolve(ss, 2.0), rel=1e-8)


def test_scalar_oracle_examples():
    assert scalar_oracle_resolve(make_eps_bulk(rel(NS), 0.1), np.sqrt(2)) == pytest.approx(1.75 * np.sqrt(2), rel=1e-12)
    assert scalar_oracle_resolve(make_eps_bulk(rel(NS), 0.1), 0.0) == 0.0
    assert scalar_oracle_resolve(make_eps_bulk(rel(BINGHAM), 0.1), 0.0) == 0.0


def test_continuation_navier_stokes():
    D = SymTensor2.diag(1.0, -1.0)
    res = continuation_resolve(rel(NS), D, (1e-1, 1e-2, 1e-3))
    assert (res.S - D * 2.0).norm() <= 3e-3 * D.norm()
    assert res.cauchy_trend and res.cauchy == res.increments[-1]


def test_continuation_bingham():
    b = rel(BINGHAM)
    assert continuation_resolve(b, SymTensor2.zeros(2), (1e-1, 1e-2, 1e-3)).S.norm() == 0.0
    D = SymTensor2.diag(1.0, -1.0)
    S = continuation_resolve(b, D, (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7)).S
    assert eval_bulk(b, S, D).norm() < 1e-6
    assert S.norm() > 1.0


def test_continuation_schedule_validation():
    with pytest.raises(ValueError):
        continuation_resolve(rel(NS), np.zeros(3), (1e-2, 1e-1))
    with pytest.raises(ValueError):
        continuation_resolve(rel(NS), np.zeros(3), (1e-1, 1e-9))


def test_constants_navier_stokes():
    c = estimate_resolvent_constants(make_eps_bulk(rel(NS), 0.1))
    assert c.lipschitz == pytest.approx(1.75, rel=1e-9)
    assert c.monotone == pytest.approx(1.75, rel=1e-9)


def test_constants_monotone_for_catalog(catalog):
    for name, base in catalog.items():
        if name == "non_monotone":
            continue
        make = make_eps_bulk if base.target == "bulk" else make_eps_boundary
        for e in (0.1, 0.01):
            c = estimate_resolvent_constants(make(base, e), Sampler(count=16))
            assert c.monotone >= 0.0, (name, e)
            assert c.lipschitz >= c.monotone, (name, e)


def test_constants_coercivity_stable_in_eps():
    p = rel("kind = power_law\nnu0 = 0.5\nr = 3\n")
    c1 = [estimate_resolvent_constants(make_eps_bulk(p, e), Sampler(count=32)).coercivity[0]
          for e in (0.1, 0.01, 0.001)]
    assert min(c1) > 0 and max(c1) <= 2 * min(c1)


def test_restart_uniqueness(catalog):
    rng = np.random.default_rng(4)
    D = random_mandel(rng, 20) * 2.0
    for name in ("bingham", "herschel_bulkley", "carreau", "power_law_r1.5"):
        G = make_eps_bulk(catalog[name], 0.01)
        ref = G.solve(D)
        for _ in range(16):
            S = G.solve(D, rng.standard_normal(D.shape) * 5)
            assert np.max(norms(S - ref)) <= 1e-8 * (1 + np.max(norms(ref))), name


def test_eps_consistency_monotone(catalog):
    rng = np.random.default_rng(5)
    D = random_mandel(rng, 100) * rng.uniform(0, 1, (100, 1))
    for name in ("navier_stokes", "carreau", "power_law_r3", "activated_euler"):
        base = catalog[name]
        exact = explicit_stress(base, D)
        errs = [np.max(norms(make_eps_bulk(base, e).solve(D) - exact)) for e in (1e-1, 1e-2, 1e-3)]
        assert errs[0] > errs[1] > errs[2], name


def test_no_convergence_surfaces_indices():
    G = make_eps_bulk(rel("kind = power_law\nnu0 = 0.5\nr = 3\n"), 0.01, NewtonSettings(max_iter=1))
    D = np.array([[0.0, 0.0, 0.0], [50.0, -30.0, 20.0]])
    with pytest.raises(NoConvergence) as err:
        G.solve(D, np.zeros_like(D))
    assert 1 in list(np.atleast_1d(err.value.indices))
