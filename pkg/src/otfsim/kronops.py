"""Complex dense linear algebra kernels used throughout the package.

Normalized DFT matrices, Kronecker products, column-stacking
vectorization, and matrix-free application of Kronecker-structured
operators (DFT factors go through the FFT, so a factor of size n costs
O(total * log n) instead of a dense product).

Conventions: ``vec`` stacks columns (Fortran order), so for conformable
A, X, B the identity ``kron(B.T, A) @ vec(X) == vec(A @ X @ B)`` holds.
All arrays are complex128.
"""

from __future__ import annotations

from functools import reduce
from typing import Sequence, Union

import numpy as np

from .errors import DimensionError, SizeCapError

# Refuse dense materialization above this many entries (~1.6 GB complex128).
DENSE_ENTRY_CAP = 100_000_000


def dft_matrix(n: int) -> np.ndarray:
    """Normalized n-point DFT matrix: entry (m, k) = exp(-2j*pi*m*k/n)/sqrt(n)."""
    if n < 1:
        raise DimensionError(f"DFT size must be >= 1, got {n}")
    return np.fft.fft(np.eye(n), axis=0, norm="ortho")


def idft_matrix(n: int) -> np.ndarray:
    """Conjugate transpose of ``dft_matrix(n)`` (the inverse, by unitarity)."""
    return dft_matrix(n).conj().T


def vec(x: np.ndarray) -> np.ndarray:
    """Stack the columns of a matrix into one vector."""
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec` for a ``rows x cols`` matrix."""
    v = np.asarray(v)
    if v.size != rows * cols:
        raise DimensionError(f"cannot reshape length-{v.size} vector to {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def kron(a: np.ndarray, b: np.ndarray, entry_cap: int = DENSE_ENTRY_CAP) -> np.ndarray:
    """Kronecker product with a guard against runaway dense sizes."""
    a = np.atleast_2d(np.asarray(a))
    b = np.atleast_2d(np.asarray(b))
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows * cols > entry_cap:
        raise SizeCapError(
            f"dense Kronecker product would have {rows}x{cols} entries "
            f"(cap {entry_cap}); use KronOperator for matrix-free application"
        )
    return np.kron(a, b)


def block_diag(blocks) -> np.ndarray:
    """Dense block-diagonal matrix from a sequence of (possibly rectangular)
    complex blocks."""
    blocks = [np.asarray(b, dtype=np.complex128) for b in blocks]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols), dtype=np.complex128)
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def _max_abs(x: np.ndarray) -> float:
    return float(np.max(np.abs(x))) if x.size else 0.0


def mixed_product_holds(a, b, c, d, tol: float = 1e-10) -> bool:
    """Whether kron(a, b) @ kron(c, d) equals kron(a @ c, b @ d) to tolerance.

    Test utility; relative to the right-hand side's largest entry.
    """
    a, b, c, d = (np.atleast_2d(np.asarray(m)) for m in (a, b, c, d))
    if a.shape[1] != c.shape[0] or b.shape[1] != d.shape[0]:
        raise DimensionError(
            f"inner dimensions not conformable: {a.shape}x{c.shape}, {b.shape}x{d.shape}"
        )
    lhs = kron(a, b) @ kron(c, d)
    rhs = kron(a @ c, b @ d)
    return _max_abs(lhs - rhs) <= tol * max(1.0, _max_abs(rhs))


def vec_identity_holds(a, x, b, tol: float = 1e-10) -> bool:
    """Whether kron(b.T, a) @ vec(x) equals vec(a @ x @ b) to tolerance."""
    a, x, b = (np.atleast_2d(np.asarray(m)) for m in (a, x, b))
    if a.shape[1] != x.shape[0] or x.shape[1] != b.shape[0]:
        raise DimensionError(
            f"a @ x @ b not conformable: {a.shape}, {x.shape}, {b.shape}"
        )
    lhs = kron(b.T, a) @ vec(x)
    rhs = vec(a @ x @ b)
    return _max_abs(lhs - rhs) <= tol * max(1.0, _max_abs(rhs))


class DenseFactor:
    """Arbitrary dense matrix factor."""

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.ndim != 2:
            raise DimensionError("dense factor must be a 2-D array")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("dense factor contains non-finite entries")
        self.matrix = matrix
        self.rows, self.cols = matrix.shape

    def materialize(self) -> np.ndarray:
        return self.matrix

    def apply(self, tensor: np.ndarray, axis: int) -> np.ndarray:
        out = np.tensordot(self.matrix, tensor, axes=([1], [axis]))
        return np.moveaxis(out, 0, axis)


class IdentityFactor:
    """Identity of size n; application is a no-op."""

    def __init__(self, n: int):
        if n < 1:
            raise DimensionError(f"identity size must be >= 1, got {n}")
        self.rows = self.cols = n

    def materialize(self) -> np.ndarray:
        return np.eye(self.rows, dtype=np.complex128)

    def apply(self, tensor: np.ndarray, axis: int) -> np.ndarray:
        return tensor


class DftFactor:
    """Normalized DFT of size n, applied via FFT along the factor's axis."""

    def __init__(self, n: int):
        if n < 1:
            raise DimensionError(f"DFT size must be >= 1, got {n}")
        self.rows = self.cols = n

    def materialize(self) -> np.ndarray:
        return dft_matrix(self.rows)

    def apply(self, tensor: np.ndarray, axis: int) -> np.ndarray:
        return np.fft.fft(tensor, axis=axis, norm="ortho")


class InverseDftFactor:
    """Conjugate transpose of the normalized DFT, applied via inverse FFT."""

    def __init__(self, n: int):
        if n < 1:
            raise DimensionError(f"DFT size must be >= 1, got {n}")
        self.rows = self.cols = n

    def materialize(self) -> np.ndarray:
        return idft_matrix(self.rows)

    def apply(self, tensor: np.ndarray, axis: int) -> np.ndarray:
        return np.fft.ifft(tensor, axis=axis, norm="ortho")


class DiagonalFactor:
    """Diagonal matrix factor, applied as a broadcast multiply."""

    def __init__(self, diagonal: np.ndarray):
        diagonal = np.asarray(diagonal, dtype=np.complex128).reshape(-1)
        if not np.all(np.isfinite(diagonal)):
            raise ValueError("diagonal factor contains non-finite entries")
        self.diagonal = diagonal
        self.rows = self.cols = diagonal.size

    def materialize(self) -> np.ndarray:
        return np.diag(self.diagonal)

    def apply(self, tensor: np.ndarray, axis: int) -> np.ndarray:
        shape = [1] * tensor.ndim
        shape[axis] = self.rows
        return tensor * self.diagonal.reshape(shape)


Factor = Union[DenseFactor, IdentityFactor, DftFactor, InverseDftFactor, DiagonalFactor]


class KronOperator:
    """Kronecker product of an ordered list of factors.

    Represents ``factors[0] (x) factors[1] (x) ... (x) factors[-1]`` and
    applies it to vectors (or to matrices, column by column) without
    materializing the product: the input is reshaped into a tensor whose
    axes follow the factor order (first factor slowest) and each factor
    acts along its own axis.
    """

    def __init__(self, factors: Sequence[Factor]):
        if not factors:
            raise DimensionError("KronOperator needs at least one factor")
        self.factors = list(factors)
        rows = cols = 1
        for f in self.factors:
            rows *= f.rows
            cols *= f.cols
        self.shape = (rows, cols)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        single = x.ndim == 1
        if single:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] != self.shape[1]:
            raise DimensionError(
                f"operator of shape {self.shape} cannot act on input of shape {x.shape}"
            )
        batch = x.shape[1]
        tensor = x.reshape([f.cols for f in self.factors] + [batch])
        for axis, factor in enumerate(self.factors):
            tensor = factor.apply(tensor, axis)
        out = tensor.reshape(self.shape[0], batch)
        return out[:, 0] if single else out

    def materialize(self, entry_cap: int = DENSE_ENTRY_CAP) -> np.ndarray:
        if self.shape[0] * self.shape[1] > entry_cap:
            raise SizeCapError(
                f"materializing {self.shape[0]}x{self.shape[1]} operator exceeds "
                f"cap of {entry_cap} entries"
            )
        return reduce(np.kron, (f.materialize() for f in self.factors))


class OperatorChain:
    """Product of operator stages, listed left to right in matrix order.

    ``OperatorChain([A, B, C]).apply(x)`` computes ``A @ (B @ (C @ x))``.
    Stages are :class:`KronOperator` instances (wrap a plain matrix in a
    single :class:`DenseFactor` to insert it).
    """

    def __init__(self, stages: Sequence[KronOperator]):
        if not stages:
            raise DimensionError("OperatorChain needs at least one stage")
        self.stages = list(stages)
        for left, right in zip(self.stages, self.stages[1:]):
            if left.shape[1] != right.shape[0]:
                raise DimensionError(
                    f"stages not conformable: {left.shape} cannot follow {right.shape}"
                )
        self.shape = (self.stages[0].shape[0], self.stages[-1].shape[1])

    def apply(self, x: np.ndarray) -> np.ndarray:
        for stage in reversed(self.stages):
            x = stage.apply(x)
        return x

    def materialize(self, entry_cap: int = DENSE_ENTRY_CAP) -> np.ndarray:
        if self.shape[0] * self.shape[1] > entry_cap:
            raise SizeCapError(
                f"materializing {self.shape[0]}x{self.shape[1]} chain exceeds "
                f"cap of {entry_cap} entries"
            )
        return self.apply(np.eye(self.shape[1], dtype=np.complex128))
