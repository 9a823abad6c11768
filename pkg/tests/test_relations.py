from __future__ import annotations

import numpy as np
import pytest
from conftest import random_mandel, rel

from rheoflow.admissibility import compare_forms
from rheoflow.relations import (
    ExplicitFormUnavailable,
    dissipation_split,
    eval_boundary,
    eval_bulk,
    explicit_rate,
    explicit_stress,
    explicit_traction,
    relation_from_text,
    relation_to_text,
)
from rheoflow.tensors import SymTensor2, norms

NS = "kind = navier_stokes\nnu = 1\n"
SQ2 = np.sqrt(2.0)


def _bulk(catalog):
    return {k: v for k, v in catalog.items() if v.target == "bulk"}


def _boundary(catalog):
    return {k: v for k, v in catalog.items() if v.target == "boundary"}


def test_navier_stokes_identity_point():
    G = eval_bulk(rel(NS), SymTensor2.diag(2.0, -2.0), SymTensor2.diag(1.0, -1.0))
    assert G.norm() == 0.0


def test_origin_is_graph_point(catalog):
    for name, r in catalog.items():
        if r.target == "bulk":
            assert np.all(eval_bulk(r, np.zeros(3), np.zeros(3)) == 0.0), name
        else:
            assert np.all(eval_boundary(r, np.zeros(2), np.zeros(2)) == 0.0), name


def test_bingham_scalar_point():
    # D = (|S| - tau)/(2 nu |S|) S with |S| = 2 sqrt 2, nu = 1/2, tau = 1
    b = rel("kind = bingham\nnu = 0.5\ntau = 1\n")
    G = eval_bulk(b, SymTensor2.diag(2.0, -2.0), SymTensor2.diag(1.2929, -1.2929))
    assert G.norm() < 1e-3


def test_navier_slip_identity_point():
    g = rel("kind = navier_slip\ngamma = 1\n")
    assert np.all(eval_boundary(g, [1.0, 0.0], [1.0, 0.0]) == 0.0)


def test_stick_slip_point():
    g = rel("kind = stick_slip\nsigma = 1\n")
    np.testing.assert_allclose(eval_boundary(g, [2.0, 0.0], [1.0, 0.0]), [0.0, 0.0], atol=1e-15)


def test_power_law_unit_rate():
    p = rel("kind = power_law\nnu0 = 0.5\nr = 3\n")
    D = SymTensor2.diag(1.0, -1.0) * (1.0 / SQ2)
    np.testing.assert_allclose(explicit_stress(p, D).mandel(), D.mandel(), rtol=1e-15)


def test_navier_stokes_explicit_stress():
    D = SymTensor2.from_matrix([[0.3, 0.7], [0.7, -0.3]])
    np.testing.assert_allclose(explicit_stress(rel(NS), D).mandel(), 2.0 * D.mandel(), rtol=1e-15)


def test_activated_euler_below_threshold():
    a = rel("kind = activated_euler\nnu = 0.5\ndelta = 1\n")
    assert explicit_stress(a, SymTensor2.diag(0.5, -0.5)).norm() == 0.0


def test_explicit_rate_examples():
    S = SymTensor2.from_matrix([[0.4, -0.2], [-0.2, 0.1]])
    p2 = rel("kind = power_law\nnu0 = 0.5\nr = 2\n")
    np.testing.assert_allclose(explicit_rate(p2, S).mandel(), S.mandel(), rtol=1e-15)
    b = rel("kind = bingham\nnu = 0.5\ntau = 1\n")
    assert explicit_rate(b, S).norm() == 0.0
    glen = rel("kind = glen\nA = 1\nm = 2\n")
    S = SymTensor2.diag(1.0, -1.0)
    np.testing.assert_allclose(explicit_rate(glen, S).mandel(), SQ2 * S.mandel(), rtol=1e-14)


@pytest.mark.parametrize("text", ["kind = ellis\nnu0 = 1\nA = 1\nn = 2\n", "kind = bingham\nnu = 0.5\ntau = 1\n"])
def test_explicit_stress_unavailable(text):
    with pytest.raises(ExplicitFormUnavailable):
        explicit_stress(rel(text), SymTensor2.diag(1.0, -1.0))


def test_dissipation_split_examples():
    p2 = rel("kind = power_law\nnu0 = 0.5\nr = 2\n")
    D = SymTensor2.diag(1.0, -1.0)
    out = dissipation_split(p2, D, D)
    assert (out.total, out.rate_part, out.stress_part) == pytest.approx((2.0, 1.0, 1.0), rel=1e-14)
    z = dissipation_split(p2, SymTensor2.zeros(2), SymTensor2.zeros(2))
    assert (z.total, z.rate_part, z.stress_part) == (0.0, 0.0, 0.0)
    p3 = rel("kind = power_law\nnu0 = 0.5\nr = 3\n")
    D = SymTensor2.diag(1.0, -1.0) * (1.0 / SQ2)
    out = dissipation_split(p3, explicit_stress(p3, D), D)
    assert (out.total, out.rate_part, out.stress_part) == pytest.approx((1.0, 1 / 3, 2 / 3), rel=1e-14)


def test_dissipation_split_rejects_non_graph_point():
    p = rel("kind = power_law\nnu0 = 0.5\nr = 3\n")
    with pytest.raises(ValueError):
        dissipation_split(p, SymTensor2.diag(1.0, -1.0), SymTensor2.diag(2.0, -2.0))


def _graph_points(r, rng, n=1000):
    radii = np.repeat([0.1, 1.0, 10.0], n // 3 + 1)[:n]
    if r.has_explicit_stress:
        D = random_mandel(rng, n) * radii[:, None]
        return explicit_stress(r, D), D
    S = random_mandel(rng, n) * radii[:, None]
    return S, explicit_rate(r, S)


def test_round_trip_residual_and_collinearity(catalog):
    rng = np.random.default_rng(1)
    for name, r in _bulk(catalog).items():
        if r.kind == "custom":
            continue
        S, D = _graph_points(r, rng)
        res = norms(eval_bulk(r, S, D))
        assert np.all(res <= 1e-12 * (1 + norms(S) + norms(D))), name
        both = (norms(S) > 0) & (norms(D) > 0)
        cos = np.sum(S * D, axis=1)[both] / (norms(S) * norms(D))[both]
        assert np.all(np.abs(cos - 1.0) <= 1e-12), name


def test_boundary_round_trip(catalog):
    rng = np.random.default_rng(2)
    for name, g in _boundary(catalog).items():
        v = rng.standard_normal((300, 2)) * np.repeat([0.1, 1.0, 10.0], 100)[:, None]
        if g.has_explicit_stress:
            s = explicit_traction(g, v)
        else:
            s, v = v, g.explicit_rate_array(v)
        res = norms(eval_boundary(g, s, v))
        assert np.all(res <= 1e-12 * (1 + norms(s) + norms(v))), name


@pytest.mark.parametrize("r", [1.5, 2.0, 3.0])
def test_power_law_duality_and_split(r):
    p = rel(f"kind = power_law\nnu0 = 0.7\nr = {r}\n")
    rng = np.random.default_rng(3)
    D = random_mandel(rng, 200) * rng.uniform(0.01, 10, 200)[:, None]
    S = explicit_stress(p, D)
    back = explicit_rate(p, S)
    assert np.max(norms(back - D) / norms(D)) < 1e-10
    for k in range(0, 200, 20):
        out = dissipation_split(p, S[k], D[k])
        assert abs(out.total - out.rate_part - out.stress_part) < 1e-12 * out.total


def test_serialization_round_trip(catalog):
    for name, r in catalog.items():
        again = relation_from_text(relation_to_text(r))
        assert again == r, name


def test_unknown_and_missing_keys_rejected():
    with pytest.raises(ValueError):
        rel("kind = navier_stokes\nnu = 1\nfoo = 2\n")
    with pytest.raises(ValueError):
        rel("kind = carreau\nnu0 = 1\n")
    with pytest.raises(ValueError):
        rel("kind = warp_drive\n")


def test_non_finite_inputs_rejected():
    with pytest.raises(ValueError):
        eval_bulk(rel(NS), np.array([np.nan, 0.0, 0.0]), np.zeros(3))


def test_viscosity_form_orientations_reported(catalog):
    forms = compare_forms(catalog["glen"])
    assert set(forms) == {"rate", "viscosity"}
    assert all(isinstance(v, bool) for v in forms.values())
