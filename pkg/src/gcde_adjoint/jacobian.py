"""Explicit unrolled Jacobians: the memory-hungry ground truth.

Everything here materialises the full (output size x input size) derivative
matrix of a matrix-to-matrix map. The vectorized kernels in
:mod:`gcde_adjoint.adjoint` exist precisely to avoid this; these builders are
kept deliberately literal so they can serve as an independent oracle.

Conventions, fixed for every builder: the differentiated input is unrolled by
columns and the output by rows, except :func:`jacobian_right_mul`, whose input
``B`` is unrolled by rows. Each :class:`UnrolledJacobian` records both orders.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import OracleSizeError, ShapeError
from .linalg import UnrollOrder, as_matrix, roll, step, unroll

#: Largest flattened input or output size any oracle will materialise.
MAX_ORACLE_DIM = 256


@dataclass(frozen=True)
class UnrolledJacobian:
    """Dense Jacobian of a matrix map together with its flattening bookkeeping.

    ``inner[r, c]`` is the derivative of output entry ``r`` (in ``out_order``)
    with respect to input entry ``c`` (in ``in_order``).
    """

    inner: np.ndarray
    out_rows: int
    out_cols: int
    in_rows: int
    in_cols: int
    out_order: UnrollOrder
    in_order: UnrollOrder

    def __post_init__(self):
        expected = (self.out_rows * self.out_cols, self.in_rows * self.in_cols)
        if self.inner.shape != expected:
            raise ShapeError(
                f"Jacobian inner shape {self.inner.shape} does not match "
                f"output ({self.out_rows}, {self.out_cols}) x input ({self.in_rows}, {self.in_cols})"
            )

    @property
    def out_shape(self):
        return (self.out_rows, self.out_cols)

    @property
    def in_shape(self):
        return (self.in_rows, self.in_cols)


def check_oracle_size(out_size, in_size):
    """Refuse to build a dense Jacobian whose sides exceed :data:`MAX_ORACLE_DIM`."""
    if max(out_size, in_size) > MAX_ORACLE_DIM:
        raise OracleSizeError(
            f"dense Jacobian of shape ({out_size}, {in_size}) exceeds the oracle "
            f"guard of {MAX_ORACLE_DIM} per side"
        )


def _positive(count, name):
    if int(count) != count or count < 1:
        raise ShapeError(f"{name} must be a positive integer, got {count!r}")
    return int(count)


def jacobian_left_mul(x, p):
    """Jacobian of ``A -> X A`` for ``A`` of shape ``(n, p)``.

    Row block ``i`` (``p`` rows, one per output column) carries row ``x[i, :]``
    on its block diagonal: ``d(XA)[i, j] / dA[k, l] = x[i, k]`` iff ``j == l``.
    """
    x = as_matrix(x, "x")
    p = _positive(p, "p")
    m, n = x.shape
    check_oracle_size(m * p, n * p)
    inner = np.zeros((m * p, n * p))
    for i in range(m):
        for j in range(p):
            # output (i, j) by rows; inputs (:, j) by columns start at j * n
            inner[i * p + j, j * n:(j + 1) * n] = x[i, :]
    return UnrolledJacobian(inner, m, p, n, p, UnrollOrder.BY_ROWS, UnrollOrder.BY_COLS)


def jacobian_right_mul(y, m):
    """Jacobian of ``B -> B Y`` for ``B`` of shape ``(m, p)``: ``m`` copies of ``Y.T``."""
    y = as_matrix(y, "y")
    m = _positive(m, "m")
    p, q = y.shape
    check_oracle_size(m * q, m * p)
    inner = np.zeros((m * q, m * p))
    yt = y.T
    for i in range(m):
        inner[i * q:(i + 1) * q, i * p:(i + 1) * p] = yt
    return UnrolledJacobian(inner, m, q, m, p, UnrollOrder.BY_ROWS, UnrollOrder.BY_ROWS)


def jacobian_sandwich(x, y, p):
    """Jacobian of ``A -> X A Y`` for ``A`` of shape ``(n, p)``.

    Block ``(i, j)`` (``q x n``) is the outer product ``y[j, :].T @ x[i, :]``.
    """
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    p = _positive(p, "p")
    m, n = x.shape
    if y.shape[0] != p:
        raise ShapeError(f"y has {y.shape[0]} rows but A has {p} columns")
    q = y.shape[1]
    check_oracle_size(m * q, n * p)
    inner = np.zeros((m * q, n * p))
    for i in range(m):
        for j in range(p):
            inner[i * q:(i + 1) * q, j * n:(j + 1) * n] = np.outer(y[j, :], x[i, :])
    return UnrolledJacobian(inner, m, q, n, p, UnrollOrder.BY_ROWS, UnrollOrder.BY_COLS)


def _gcde_shapes(a, w, h):
    a = as_matrix(a, "a")
    w = as_matrix(w, "w")
    h = as_matrix(h, "h")
    n_nodes, c = h.shape
    if a.shape != (n_nodes, n_nodes):
        raise ShapeError(f"adjacency {a.shape} does not match state {h.shape}")
    if w.shape != (c, c):
        raise ShapeError(f"weights {w.shape} do not match state {h.shape}")
    return a, w, h


def gcde_jacobian_wrt_state(a, w, h):
    """Full Jacobian of ``H -> ReLU(A H W)`` with respect to ``H``."""
    a, w, h = _gcde_shapes(a, w, h)
    c = h.shape[1]
    check_oracle_size(h.size, h.size)
    gate = unroll(step(a @ h @ w), UnrollOrder.BY_ROWS)
    sandwich = jacobian_sandwich(a, w, c)
    return UnrolledJacobian(gate[:, None] * sandwich.inner, *sandwich.out_shape,
                            *sandwich.in_shape, sandwich.out_order, sandwich.in_order)


def gcde_jacobian_wrt_weights(a, h, w):
    """Full Jacobian of ``W -> ReLU((A H) W)`` with respect to ``W``."""
    a, w, h = _gcde_shapes(a, w, h)
    c = h.shape[1]
    check_oracle_size(h.size, w.size)
    gate = unroll(step(a @ h @ w), UnrollOrder.BY_ROWS)
    left = jacobian_left_mul(a @ h, c)
    return UnrolledJacobian(gate[:, None] * left.inner, *left.out_shape,
                            *left.in_shape, left.out_order, left.in_order)


def numeric_jacobian(fn, at, in_order=UnrollOrder.BY_COLS,
                     out_order=UnrollOrder.BY_ROWS, eps=1e-5):
    """Central-difference Jacobian of the matrix map ``fn`` at ``at``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    at = as_matrix(at, "at")
    in_order = UnrollOrder(in_order)
    out_order = UnrollOrder(out_order)
    base = as_matrix(fn(at.copy()), "fn output")
    check_oracle_size(base.size, at.size)
    x0 = unroll(at, in_order)
    inner = np.empty((base.size, at.size))
    for col in range(at.size):
        plus = x0.copy()
        minus = x0.copy()
        plus[col] += eps
        minus[col] -= eps
        f_plus = as_matrix(fn(roll(plus, *at.shape, in_order)))
        f_minus = as_matrix(fn(roll(minus, *at.shape, in_order)))
        if f_plus.shape != base.shape or f_minus.shape != base.shape:
            raise ShapeError("fn output shape changed under perturbation")
        diff = (unroll(f_plus, out_order) - unroll(f_minus, out_order)) / (2.0 * eps)
        if not np.all(np.isfinite(diff)):
            raise FloatingPointError(f"non-finite finite difference in input entry {col}")
        inner[:, col] = diff
    return UnrolledJacobian(inner, *base.shape, *at.shape, out_order, in_order)


def vjp_via_jacobian(j, upstream):
    """Row-vector-times-Jacobian product, rolled back to the input's shape."""
    upstream = as_matrix(upstream, "upstream")
    if upstream.shape != j.out_shape:
        raise ShapeError(f"upstream {upstream.shape} does not match Jacobian output {j.out_shape}")
    row = unroll(upstream, j.out_order) @ j.inner
    return roll(row, j.in_rows, j.in_cols, j.in_order)
