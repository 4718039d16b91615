"""Vectorized vector-Jacobian products for ``f(H) = ReLU(A H W)``.

None of these kernels flattens anything: every intermediate is one of the
shapes ``N x N``, ``N x C``, ``C x N`` or ``C x C``. They agree with the dense
products in :mod:`gcde_adjoint.jacobian` to rounding error, which is what the
test suite checks.

Sign convention: the general kernels :func:`vjp_sandwich` and :func:`vjp_left`
return the plain (unsigned) VJP. The two GCDE right-hand sides include the
leading minus of the adjoint ODE, so they can be handed straight to a solver.

The ReLU gate is evaluated on the pre-activation ``Z = A H W``, which is the
argument ReLU actually receives.
"""

import numpy as np

from .exceptions import ShapeError, ValidationError
from .linalg import as_matrix

__all__ = [
    "SYMMETRY_TOL",
    "vjp_sandwich",
    "vjp_left",
    "adjoint_state_rhs",
    "weight_grad_rhs",
    "check_symmetric",
]

SYMMETRY_TOL = 1e-9


def vjp_sandwich(x, y, upstream):
    """VJP of ``A -> X A Y``: returns ``X.T @ upstream @ Y.T``, shaped like ``A``."""
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    upstream = as_matrix(upstream, "upstream")
    if upstream.shape != (x.shape[0], y.shape[1]):
        raise ShapeError(
            f"upstream {upstream.shape} does not match X A Y output "
            f"({x.shape[0]}, {y.shape[1]}) for x {x.shape}, y {y.shape}"
        )
    return x.T @ upstream @ y.T


def vjp_left(x, upstream):
    """VJP of ``A -> X A``: returns ``X.T @ upstream``, shaped like ``A``."""
    x = as_matrix(x, "x")
    upstream = as_matrix(upstream, "upstream")
    if upstream.shape[0] != x.shape[0]:
        raise ShapeError(f"upstream {upstream.shape} does not match X A output rows for x {x.shape}")
    return x.T @ upstream


def check_symmetric(a, tol=SYMMETRY_TOL):
    a = as_matrix(a, "adjacency")
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"adjacency must be square, got {a.shape}")
    asym = float(np.max(np.abs(a - a.T)))
    if asym > tol:
        raise ValidationError(f"adjacency is not symmetric (max |A - A.T| = {asym:.3g})")
    return a


def _check_gcde(a, w, h, adj):
    a = as_matrix(a, "a")
    w = as_matrix(w, "w")
    h = as_matrix(h, "h")
    adj = as_matrix(adj, "adj")
    n_nodes, c = h.shape
    if a.shape != (n_nodes, n_nodes):
        raise ShapeError(f"adjacency {a.shape} does not match state {h.shape}")
    if w.shape != (c, c):
        raise ShapeError(f"weights {w.shape} do not match state {h.shape}")
    if adj.shape != h.shape:
        raise ShapeError(f"adjoint {adj.shape} does not match state {h.shape}")
    return a, w, h, adj


def adjoint_state_rhs(a, w, h, adj, check_symmetry=True):
    """Time derivative of the adjoint: ``-A.T @ (adj * step(Z)) @ W.T``.

    ``A.T`` is used even though ``A`` is symmetric for a GCDE, so the result
    stays correct when ``check_symmetry=False``.
    """
    a, w, h, adj = _check_gcde(a, w, h, adj)
    if check_symmetry:
        check_symmetric(a)
    gated = adj * (a @ h @ w > 0.0)
    return -(a.T @ gated @ w.T)


def weight_grad_rhs(a, h, w, adj):
    """Integrand of the weight gradient: ``-(A H).T @ (adj * step(Z))``, shape ``C x C``."""
    a, w, h, adj = _check_gcde(a, w, h, adj)
    ah = a @ h
    gated = adj * (ah @ w > 0.0)
    return -(ah.T @ gated)
