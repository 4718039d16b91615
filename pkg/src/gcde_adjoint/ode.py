"""Forward GCDE integration and backward adjoint integration.

The forward pass solves ``dH/dt = ReLU(A H W)`` on a fixed grid with explicit
Euler or classic RK4. The backward pass integrates, from ``t1`` down to ``t0``,
the coupled system

    da/dt = adjoint_state_rhs(A, W, H, a)      a(t1) = dL/dH(t1)
    dG/dt = weight_grad_rhs(A, H, W, a)        G(t1) = 0

so that ``a(t0) = dL/dH(t0)`` and ``G(t0) = dL/dW``. This is the continuous
adjoint (differentiate, then discretize); it matches the gradient of the
discretized forward pass up to the solver's truncation error.
"""

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .adjoint import adjoint_state_rhs, check_symmetric, weight_grad_rhs
from .exceptions import DivergenceError, ShapeError, ValidationError
from .linalg import as_matrix

__all__ = [
    "Method",
    "BackwardMode",
    "GcdeModel",
    "SolverConfig",
    "Trajectory",
    "BackwardResult",
    "gcde_rhs",
    "time_grid",
    "integrate_forward",
    "integrate_backward",
]


class Method(Enum):
    EULER = "euler"
    RK4 = "rk4"


class BackwardMode(Enum):
    """Where the backward pass gets ``H(t)`` from.

    ``STORED_TRAJECTORY`` reads the forward grid (RK4 half-step states are
    re-derived locally from the left grid point). ``AUGMENTED_RECOMPUTE``
    carries ``H`` as extra state and integrates it in reverse time from
    ``H(t1)``, which is what a memory-constrained implementation would do.
    """

    STORED_TRAJECTORY = "stored"
    AUGMENTED_RECOMPUTE = "augmented"


@dataclass(frozen=True)
class GcdeModel:
    """Adjacency ``A`` (N x N, symmetric), weights ``W`` (C x C) and time span."""

    adjacency: np.ndarray
    weights: np.ndarray
    t0: float = 0.0
    t1: float = 1.0

    def __post_init__(self):
        a = check_symmetric(as_matrix(self.adjacency, "adjacency"))
        w = as_matrix(self.weights, "weights")
        if w.shape[0] != w.shape[1]:
            raise ShapeError(f"weights must be square, got {w.shape}")
        if not (np.isfinite(self.t0) and np.isfinite(self.t1)) or not self.t1 > self.t0:
            raise ValidationError(f"need finite t0 < t1, got t0={self.t0}, t1={self.t1}")
        object.__setattr__(self, "adjacency", a)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "t1", float(self.t1))

    @property
    def n_nodes(self):
        return self.adjacency.shape[0]

    @property
    def n_features(self):
        return self.weights.shape[0]

    def with_weights(self, weights):
        return replace(self, weights=weights)

    def check_state(self, h, name="state"):
        h = as_matrix(h, name)
        if h.shape != (self.n_nodes, self.n_features):
            raise ShapeError(
                f"{name} has shape {h.shape}, model expects ({self.n_nodes}, {self.n_features})"
            )
        return h


@dataclass(frozen=True)
class SolverConfig:
    method: Method = Method.RK4
    steps: int = 100

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValidationError(f"steps must be a positive integer, got {self.steps!r}")
        object.__setattr__(self, "steps", int(self.steps))


@dataclass(frozen=True)
class Trajectory:
    """States on the fixed grid; ``states[k]`` is ``H(times[k])``."""

    times: np.ndarray
    states: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.states.ndim != 3 or len(self.times) != len(self.states):
            raise ShapeError("trajectory needs one N x C state per time stamp")
        if len(self.times) < 2 or not np.all(np.diff(self.times) > 0):
            raise ValidationError("trajectory times must be strictly increasing")

    @property
    def steps(self):
        return len(self.times) - 1

    @property
    def final(self):
        return self.states[-1]


@dataclass(frozen=True)
class BackwardResult:
    state_grad: np.ndarray
    weight_grad: np.ndarray


def gcde_rhs(model, h):
    """``ReLU(A H W)``."""
    h = model.check_state(h)
    return np.maximum(model.adjacency @ h @ model.weights, 0.0)


def _rhs(a, w, h):
    return np.maximum(a @ h @ w, 0.0)


def time_grid(t0, t1, steps):
    """``t0 + k * (t1 - t0) / steps`` for ``k = 0..steps``."""
    dt = (t1 - t0) / steps
    return np.array([t0 + k * dt for k in range(steps + 1)])


def _rk4_step(a, w, h, dt):
    k1 = _rhs(a, w, h)
    k2 = _rhs(a, w, h + 0.5 * dt * k1)
    k3 = _rhs(a, w, h + 0.5 * dt * k2)
    k4 = _rhs(a, w, h + dt * k3)
    return h + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_forward(model, h0, cfg=None):
    """Integrate the GCDE from ``model.t0`` to ``model.t1``.

    Returns the full :class:`Trajectory`, both endpoints included. Raises
    :class:`DivergenceError` naming the first step that produced a non-finite
    state.
    """
    cfg = cfg or SolverConfig()
    h = model.check_state(h0, "h0").copy()
    a, w = model.adjacency, model.weights
    times = time_grid(model.t0, model.t1, cfg.steps)
    dt = (model.t1 - model.t0) / cfg.steps
    states = np.empty((cfg.steps + 1,) + h.shape)
    states[0] = h
    for k in range(cfg.steps):
        if cfg.method is Method.EULER:
            h = h + dt * _rhs(a, w, h)
        else:
            h = _rk4_step(a, w, h, dt)
        if not np.all(np.isfinite(h)):
            raise DivergenceError(f"forward state became non-finite at step {k + 1}", step=k + 1)
        states[k + 1] = h
    return Trajectory(times, states)


def integrate_backward(model, forward, loss_grad_at_t1, cfg=None,
                       mode=BackwardMode.STORED_TRAJECTORY):
    """Integrate the adjoint system from ``t1`` back to ``t0``.

    ``forward`` must come from :func:`integrate_forward` with the same model
    and solver grid. Returns ``dL/dH(t0)`` and ``dL/dW``.
    """
    cfg = cfg or SolverConfig()
    mode = BackwardMode(mode)
    adj = model.check_state(loss_grad_at_t1, "loss_grad_at_t1").copy()
    if forward.steps != cfg.steps:
        raise ValidationError(
            f"trajectory has {forward.steps} steps but solver config asks for {cfg.steps}"
        )
    if forward.states.shape[1:] != adj.shape:
        raise ValidationError(f"trajectory states {forward.states.shape[1:]} do not match model")
    if not np.allclose(forward.times[[0, -1]], [model.t0, model.t1], rtol=0, atol=1e-12):
        raise ValidationError("trajectory time span does not match the model's [t0, t1]")

    a_mat, w = model.adjacency, model.weights
    c = model.n_features
    dt = (model.t1 - model.t0) / cfg.steps
    half = 0.5 * dt
    grad_w = np.zeros((c, c))
    h = forward.final.copy()

    def rhs(h_t, adj_t):
        return (adjoint_state_rhs(a_mat, w, h_t, adj_t, check_symmetry=False),
                weight_grad_rhs(a_mat, h_t, w, adj_t))

    for k in range(cfg.steps - 1, -1, -1):
        # one step of size -dt from t_{k+1} to t_k
        if cfg.method is Method.EULER:
            h_right = forward.states[k + 1] if mode is BackwardMode.STORED_TRAJECTORY else h
            d_adj, d_w = rhs(h_right, adj)
            if mode is BackwardMode.AUGMENTED_RECOMPUTE:
                h = h - dt * _rhs(a_mat, w, h)
            adj = adj - dt * d_adj
            grad_w = grad_w - dt * d_w
        else:
            if mode is BackwardMode.STORED_TRAJECTORY:
                h1 = forward.states[k + 1]
                h4 = forward.states[k]
                h2 = h3 = _rk4_step(a_mat, w, h4, half)
            else:
                kh1 = _rhs(a_mat, w, h)
                h1 = h
                h2 = h - half * kh1
                kh2 = _rhs(a_mat, w, h2)
                h3 = h - half * kh2
                kh3 = _rhs(a_mat, w, h3)
                h4 = h - dt * kh3
                kh4 = _rhs(a_mat, w, h4)
                h = h - (dt / 6.0) * (kh1 + 2.0 * kh2 + 2.0 * kh3 + kh4)
            ka1, kw1 = rhs(h1, adj)
            ka2, kw2 = rhs(h2, adj - half * ka1)
            ka3, kw3 = rhs(h3, adj - half * ka2)
            ka4, kw4 = rhs(h4, adj - dt * ka3)
            adj = adj - (dt / 6.0) * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4)
            grad_w = grad_w - (dt / 6.0) * (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4)
        if not (np.all(np.isfinite(adj)) and np.all(np.isfinite(grad_w))):
            raise DivergenceError(f"adjoint became non-finite at step {k}", step=k)
    return BackwardResult(state_grad=adj, weight_grad=grad_w)
