"""Dense matrix primitives and the roll/unroll conventions.

A "matrix" here is a 2-D ``float64`` :class:`numpy.ndarray`; a "vector" is a
1-D one. Every function validates shapes up front and raises
:class:`~gcde_adjoint.exceptions.ShapeError` naming the offending shapes,
so shape bugs surface at the call site instead of as broadcasting surprises.
"""

from enum import Enum

import numpy as np

from .exceptions import ShapeError

__all__ = [
    "UnrollOrder",
    "as_matrix",
    "as_vector",
    "matmul",
    "transpose",
    "hadamard",
    "relu",
    "step",
    "unroll",
    "roll",
    "norm_rel_err",
]


class UnrollOrder(Enum):
    """Direction in which a matrix is flattened into a vector."""

    BY_ROWS = "rows"
    BY_COLS = "cols"


def as_matrix(m, name="matrix"):
    """Return ``m`` as a 2-D float64 array, rejecting other ranks and empty shapes."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must have positive dimensions, got {arr.shape}")
    return arr


def as_vector(v, name="vector"):
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ShapeError(f"{name} must be a non-empty 1-D array, got shape {arr.shape}")
    return arr


def matmul(lhs, rhs):
    """Matrix product ``lhs @ rhs``."""
    lhs = as_matrix(lhs, "lhs")
    rhs = as_matrix(rhs, "rhs")
    if lhs.shape[1] != rhs.shape[0]:
        raise ShapeError(f"cannot multiply {lhs.shape} by {rhs.shape}")
    return lhs @ rhs


def transpose(m):
    return as_matrix(m).T.copy()


def hadamard(a, b):
    """Elementwise product of two equally shaped matrices."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise ShapeError(f"hadamard operands differ in shape: {a.shape} vs {b.shape}")
    return a * b


def relu(m):
    return np.maximum(as_matrix(m), 0.0)


def step(m):
    """Derivative of ReLU: 1 where the entry is strictly positive, else 0.

    Exact zeros map to 0.
    """
    return (as_matrix(m) > 0.0).astype(np.float64)


def unroll(m, order):
    """Flatten ``m`` row by row (``BY_ROWS``) or column by column (``BY_COLS``)."""
    m = as_matrix(m)
    order = UnrollOrder(order)
    if order is UnrollOrder.BY_ROWS:
        return m.reshape(-1).copy()
    return m.T.reshape(-1).copy()


def roll(v, rows, cols, order):
    """Inverse of :func:`unroll` for the same ``order``."""
    v = as_vector(v)
    order = UnrollOrder(order)
    if rows < 1 or cols < 1 or v.size != rows * cols:
        raise ShapeError(f"cannot roll a vector of length {v.size} into ({rows}, {cols})")
    if order is UnrollOrder.BY_ROWS:
        return v.reshape(rows, cols).copy()
    return v.reshape(cols, rows).T.copy()


def norm_rel_err(actual, expected):
    """Frobenius-norm relative error ``||actual - expected|| / ||expected||``.

    Returns 0 when both are zero and ``inf`` when only ``expected`` is.
    """
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    if actual.shape != expected.shape:
        raise ShapeError(f"cannot compare shapes {actual.shape} and {expected.shape}")
    diff = float(np.linalg.norm(actual - expected))
    ref = float(np.linalg.norm(expected))
    if ref == 0.0:
        return 0.0 if diff == 0.0 else float("inf")
    return diff / ref
