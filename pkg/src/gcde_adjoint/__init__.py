"""Autograd-free adjoint gradients for graph convolutional neural ODEs.

The model is ``dH/dt = ReLU(A H W)``. Gradients of a loss at ``t1`` with
respect to ``H(t0)`` and ``W`` come from integrating the adjoint system
backward with closed-form matrix VJPs that never flatten ``H`` or ``W``.
"""

__version__ = "0.1.0"

from .adjoint import adjoint_state_rhs, vjp_left, vjp_sandwich, weight_grad_rhs
from .estimator import GCDERegressor
from .exceptions import (
    DivergenceError,
    KinkWarning,
    OracleSizeError,
    ShapeError,
    ValidationError,
)
from .linalg import UnrollOrder, roll, unroll
from .ode import (
    BackwardMode,
    BackwardResult,
    GcdeModel,
    Method,
    SolverConfig,
    Trajectory,
    gcde_rhs,
    integrate_backward,
    integrate_forward,
)
from .training import Dataset, GradientReport, TrainConfig, fit, grad_check, mse_loss

__all__ = [
    "adjoint_state_rhs",
    "vjp_left",
    "vjp_sandwich",
    "weight_grad_rhs",
    "GCDERegressor",
    "DivergenceError",
    "KinkWarning",
    "OracleSizeError",
    "ShapeError",
    "ValidationError",
    "UnrollOrder",
    "roll",
    "unroll",
    "BackwardMode",
    "BackwardResult",
    "GcdeModel",
    "Method",
    "SolverConfig",
    "Trajectory",
    "gcde_rhs",
    "integrate_backward",
    "integrate_forward",
    "Dataset",
    "GradientReport",
    "TrainConfig",
    "fit",
    "grad_check",
    "mse_loss",
]
