"""Symmetric second-order tensors.

Library code works on *Mandel coordinates*: a symmetric ``d x d`` matrix is
mapped to a vector of length ``d(d+1)/2`` whose off-diagonal entries carry a
factor ``sqrt(2)``.  In these coordinates the Frobenius product ``A:B`` is
the Euclidean dot product and ``|A|`` is the Euclidean norm, so isotropic
relations of the form ``a(|S|,|D|) S - b(|S|,|D|) D`` can be evaluated on
stacks of tensors with plain numpy broadcasting.

:class:`SymTensor2` is the user-facing value type; it stores the upper
triangle and converts to and from Mandel vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

SQRT2 = np.sqrt(2.0)

# upper-triangle (row-major) index pairs and the Mandel ordering used below
_UPPER = {
    2: ((0, 0), (0, 1), (1, 1)),
    3: ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)),
}
_MANDEL = {
    2: ((0, 0), (1, 1), (0, 1)),
    3: ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)),
}


def mandel_size(dim: int) -> int:
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    return dim * (dim + 1) // 2


def dim_from_mandel_size(m: int) -> int:
    for d in (2, 3):
        if mandel_size(d) == m:
            return d
    raise ValueError(f"no symmetric tensor has {m} independent components")


def matrix_to_mandel(mat: np.ndarray) -> np.ndarray:
    """Map ``(..., d, d)`` symmetric matrices to ``(..., m)`` Mandel vectors."""
    mat = np.asarray(mat, dtype=float)
    d = mat.shape[-1]
    out = []
    for i, j in _MANDEL[d]:
        if i == j:
            out.append(mat[..., i, j])
        else:
            out.append(SQRT2 * 0.5 * (mat[..., i, j] + mat[..., j, i]))
    return np.stack(out, axis=-1)


def mandel_to_matrix(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=float)
    d = dim_from_mandel_size(vec.shape[-1])
    mat = np.zeros(vec.shape[:-1] + (d, d))
    for k, (i, j) in enumerate(_MANDEL[d]):
        if i == j:
            mat[..., i, i] = vec[..., k]
        else:
            mat[..., i, j] = vec[..., k] / SQRT2
            mat[..., j, i] = vec[..., k] / SQRT2
    return mat


@dataclass(frozen=True)
class SymTensor2:
    """Symmetric ``dim x dim`` tensor stored by its upper triangle.

    ``entries`` follow row-major upper-triangle order, i.e. ``(xx, xy, yy)``
    in 2D and ``(xx, xy, xz, yy, yz, zz)`` in 3D.
    """

    dim: int
    entries: tuple[float, ...]

    def __post_init__(self):
        m = mandel_size(self.dim)
        if len(self.entries) != m:
            raise ValueError(f"{self.dim}D symmetric tensor needs {m} entries, got {len(self.entries)}")
        object.__setattr__(self, "entries", tuple(float(e) for e in self.entries))

    @classmethod
    def from_matrix(cls, mat: Sequence[Sequence[float]] | np.ndarray) -> "SymTensor2":
        mat = np.asarray(mat, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("expected a square matrix")
        if not np.allclose(mat, mat.T, rtol=0.0, atol=1e-14 * (1.0 + np.abs(mat).max())):
            raise ValueError("matrix is not symmetric")
        d = mat.shape[0]
        return cls(d, tuple(mat[i, j] for i, j in _UPPER[d]))

    @classmethod
    def from_mandel(cls, vec: Sequence[float] | np.ndarray) -> "SymTensor2":
        return cls.from_matrix(mandel_to_matrix(np.asarray(vec, dtype=float)))

    @classmethod
    def zeros(cls, dim: int) -> "SymTensor2":
        return cls(dim, (0.0,) * mandel_size(dim))

    @classmethod
    def identity(cls, dim: int) -> "SymTensor2":
        return cls.from_matrix(np.eye(dim))

    @classmethod
    def diag(cls, *values: float) -> "SymTensor2":
        return cls.from_matrix(np.diag(values))

    def matrix(self) -> np.ndarray:
        mat = np.zeros((self.dim, self.dim))
        for (i, j), e in zip(_UPPER[self.dim], self.entries):
            mat[i, j] = e
            mat[j, i] = e
        return mat

    def mandel(self) -> np.ndarray:
        return matrix_to_mandel(self.matrix())

    def norm(self) -> float:
        return frobenius_norm(self)

    def trace(self) -> float:
        return float(np.trace(self.matrix()))

    def __add__(self, other: "SymTensor2") -> "SymTensor2":
        _check_dims(self, other)
        return SymTensor2(self.dim, tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "SymTensor2") -> "SymTensor2":
        _check_dims(self, other)
        return SymTensor2(self.dim, tuple(a - b for a, b in zip(self.entries, other.entries)))

    def __mul__(self, k: float) -> "SymTensor2":
        return SymTensor2(self.dim, tuple(k * a for a in self.entries))

    __rmul__ = __mul__

    def __neg__(self) -> "SymTensor2":
        return self * -1.0


def _check_dims(a: SymTensor2, b: SymTensor2) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def inner(a: SymTensor2, b: SymTensor2) -> float:
    """Double-dot product ``A:B = sum_ij A_ij B_ij``."""
    _check_dims(a, b)
    return float(np.sum(a.matrix() * b.matrix()))


def frobenius_norm(a: SymTensor2) -> float:
    return float(np.sqrt(inner(a, a)))


def as_mandel(x) -> tuple[np.ndarray, int | None]:
    """Return ``(array, dim)`` where dim is set when ``x`` was a SymTensor2."""
    if isinstance(x, SymTensor2):
        return x.mandel(), x.dim
    return np.asarray(x, dtype=float), None


def norms(x: np.ndarray) -> np.ndarray:
    """Euclidean norm over the last axis (Frobenius norm for Mandel vectors)."""
    return np.sqrt(np.einsum("...i,...i->...", x, x))
