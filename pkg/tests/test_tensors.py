from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rheoflow.tensors import (
    SymTensor2,
    frobenius_norm,
    inner,
    mandel_to_matrix,
    matrix_to_mandel,
    norms,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_inner_identity_dim2():
    assert inner(SymTensor2.identity(2), SymTensor2.identity(2)) == 2.0


def test_inner_with_zero():
    A = SymTensor2.from_matrix([[1.0, 3.0], [3.0, -2.0]])
    assert inner(A, SymTensor2.zeros(2)) == 0.0


def test_inner_diag_symmetric_case():
    A = SymTensor2.diag(1.0, -1.0)
    assert inner(A, A) == 2.0


def test_inner_dimension_mismatch():
    with pytest.raises(ValueError):
        inner(SymTensor2.identity(2), SymTensor2.identity(3))


def test_from_matrix_rejects_asymmetric():
    with pytest.raises(ValueError):
        SymTensor2.from_matrix([[1.0, 2.0], [0.0, 1.0]])


@settings(max_examples=50, deadline=None)
@given(st.lists(finite, min_size=3, max_size=3), st.lists(finite, min_size=3, max_size=3))
def test_inner_matches_matrix_contraction(a, b):
    A = np.array([[a[0], a[2]], [a[2], a[1]]])
    B = np.array([[b[0], b[2]], [b[2], b[1]]])
    got = inner(SymTensor2.from_matrix(A), SymTensor2.from_matrix(B))
    assert got == pytest.approx(np.sum(A * B), rel=1e-12, abs=1e-9)
    assert got == pytest.approx(inner(SymTensor2.from_matrix(B), SymTensor2.from_matrix(A)), rel=1e-14, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(finite, min_size=6, max_size=6))
def test_mandel_round_trip_3d(a):
    M = np.array([[a[0], a[3], a[4]], [a[3], a[1], a[5]], [a[4], a[5], a[2]]])
    back = mandel_to_matrix(matrix_to_mandel(M))
    np.testing.assert_allclose(back, M, rtol=1e-14, atol=1e-12)
    assert frobenius_norm(SymTensor2.from_matrix(M)) == pytest.approx(np.linalg.norm(M), rel=1e-12, abs=1e-12)


def test_norms_rowwise():
    x = np.array([[3.0, 4.0, 0.0], [0.0, 0.0, 0.0]])
    np.testing.assert_array_equal(norms(x), [5.0, 0.0])
