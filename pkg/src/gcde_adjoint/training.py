"""Loss, gradient checking and plain gradient-descent training for a GCDE."""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DivergenceError, KinkWarning, ValidationError
from .graph import build_adjacency, random_edges
from .linalg import as_matrix, norm_rel_err
from .ode import (
    BackwardMode,
    GcdeModel,
    SolverConfig,
    integrate_backward,
    integrate_forward,
)

__all__ = [
    "KINK_MARGIN",
    "Dataset",
    "TrainConfig",
    "GradientReport",
    "TrainingDivergedError",
    "mse_loss",
    "loss_and_grads",
    "end_to_end_loss",
    "central_difference",
    "min_preactivation",
    "grad_check",
    "fit",
    "teacher_student",
]

logger = logging.getLogger(__name__)

#: Pre-activations closer to zero than this make finite differences unreliable.
KINK_MARGIN = 0.05


@dataclass(frozen=True)
class Dataset:
    """Initial node features, regression target at ``t1``, optional node mask."""

    h0: np.ndarray
    target: np.ndarray
    node_mask: np.ndarray = None

    def __post_init__(self):
        h0 = as_matrix(self.h0, "h0")
        target = as_matrix(self.target, "target")
        if h0.shape != target.shape:
            raise ValidationError(f"h0 {h0.shape} and target {target.shape} differ in shape")
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "target", target)
        if self.node_mask is not None:
            mask = np.asarray(self.node_mask, dtype=np.float64)
            if mask.shape != (h0.shape[0],):
                raise ValidationError(f"node_mask must have length {h0.shape[0]}, got {mask.shape}")
            if not np.all((mask == 0.0) | (mask == 1.0)):
                raise ValidationError("node_mask entries must be 0 or 1")
            object.__setattr__(self, "node_mask", mask)

    def mask_matrix(self):
        if self.node_mask is None:
            return np.ones_like(self.target)
        return np.repeat(self.node_mask[:, None], self.target.shape[1], axis=1)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 100
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.learning_rate) and self.learning_rate >= 0):
            raise ValidationError(f"learning_rate must be non-negative, got {self.learning_rate}")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ValidationError(f"epochs must be a positive integer, got {self.epochs!r}")


@dataclass(frozen=True)
class GradientReport:
    """Analytic versus finite-difference gradient; errors derive from the two."""

    analytic: np.ndarray
    numeric: np.ndarray
    kink_warning: bool = False
    min_abs_preactivation: float = float("inf")

    @property
    def max_abs_err(self):
        return float(np.max(np.abs(self.analytic - self.numeric)))

    @property
    def norm_rel_err(self):
        return norm_rel_err(self.analytic, self.numeric)

    def summary(self):
        return (
            f"max_abs_err   {self.max_abs_err:.6e}\n"
            f"norm_rel_err  {self.norm_rel_err:.6e}\n"
            f"min |Z|       {self.min_abs_preactivation:.6e}\n"
            f"kink_warning  {self.kink_warning}"
        )


class TrainingDivergedError(DivergenceError):
    """Loss went non-finite; ``history`` holds the losses recorded so far."""

    def __init__(self, message, history, step=None):
        super().__init__(message, step=step)
        self.history = history


def mse_loss(pred, ds):
    """Masked mean squared error ``sum(mask * r**2) / (2 * M)`` and its gradient.

    ``M`` is the number of masked entries (masked nodes times features).
    """
    pred = as_matrix(pred, "pred")
    if pred.shape != ds.target.shape:
        raise ValidationError(f"prediction {pred.shape} does not match target {ds.target.shape}")
    mask = ds.mask_matrix()
    count = float(mask.sum())
    if count == 0:
        raise ValidationError("node mask selects no nodes")
    resid = mask * (pred - ds.target)
    return float(np.sum(resid * resid)) / (2.0 * count), resid / count


def loss_and_grads(model, ds, cfg, mode=BackwardMode.STORED_TRAJECTORY):
    """Forward solve, loss at ``t1`` and adjoint gradients.

    Returns ``(loss, BackwardResult, Trajectory)``.
    """
    traj = integrate_forward(model, ds.h0, cfg)
    loss, d_pred = mse_loss(traj.final, ds)
    return loss, integrate_backward(model, traj, d_pred, cfg, mode), traj


def end_to_end_loss(model, ds, cfg):
    return mse_loss(integrate_forward(model, ds.h0, cfg).final, ds)[0]


def central_difference(fn, x, eps=1e-5, order=2):
    """Gradient of the scalar function ``fn`` at matrix ``x`` by central differences.

    ``order=2`` is the usual two-point stencil; ``order=4`` uses the
    five-point stencil, whose truncation error is ``O(eps**4)``.
    """
    if not eps > 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    if order == 2:
        offsets, coeffs, denom = (1, -1), (1.0, -1.0), 2.0
    elif order == 4:
        offsets, coeffs, denom = (2, 1, -1, -2), (-1.0, 8.0, -8.0, 1.0), 12.0
    else:
        raise ValueError(f"order must be 2 or 4, got {order}")
    x = as_matrix(x)
    grad = np.empty_like(x)
    for idx in np.ndindex(x.shape):
        total = 0.0
        for off, coef in zip(offsets, coeffs):
            xp = x.copy()
            xp[idx] += off * eps
            total += coef * fn(xp)
        grad[idx] = total / (denom * eps)
    return grad


def min_preactivation(model, traj):
    """Smallest ``|Z|`` over the trajectory, with ``Z = A H W``.

    Rows of ``A`` that are entirely zero give ``Z`` rows that stay exactly
    zero under any perturbation of ``H`` or ``W``; those are not kinks and are
    skipped.
    """
    live = np.any(model.adjacency != 0.0, axis=1)
    if not np.any(live):
        return float("inf")
    z = np.einsum("ij,tjk,kl->til", model.adjacency[live], traj.states, model.weights)
    return float(np.min(np.abs(z)))


def grad_check(model, ds, cfg, eps=1e-5, order=2, mode=BackwardMode.STORED_TRAJECTORY):
    """Compare the adjoint ``dL/dW`` with central differences of the end-to-end loss."""
    if not eps > 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    _, grads, traj = loss_and_grads(model, ds, cfg, mode)
    numeric = central_difference(
        lambda w: end_to_end_loss(model.with_weights(w), ds, cfg), model.weights, eps, order
    )
    z_min = min_preactivation(model, traj)
    if z_min < KINK_MARGIN:
        warnings.warn(f"min |A H W| along the trajectory is {z_min:.3g}, below {KINK_MARGIN}; "
                      "finite differences may straddle a ReLU kink", KinkWarning, stacklevel=2)
    return GradientReport(grads.weight_grad, numeric, kink_warning=z_min < KINK_MARGIN,
                          min_abs_preactivation=z_min)


def fit(model, ds, tc, mode=BackwardMode.STORED_TRAJECTORY):
    """Full-batch gradient descent on ``W``.

    Returns the trained model and the loss recorded at the start of each
    epoch. Raises :class:`TrainingDivergedError` if the loss goes non-finite.
    """
    history = []
    for epoch in range(tc.epochs):
        try:
            loss, grads, _ = loss_and_grads(model, ds, tc.solver, mode)
        except DivergenceError as exc:
            raise TrainingDivergedError(f"epoch {epoch}: {exc}", history, step=epoch) from exc
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"loss became non-finite at epoch {epoch}", history, step=epoch)
        history.append(loss)
        model = model.with_weights(model.weights - tc.learning_rate * grads.weight_grad)
        if epoch % 100 == 0:
            logger.debug("epoch %d loss %.6e", epoch, loss)
    return model, history


def teacher_student(n_nodes=8, n_features=4, seed=0, t0=0.0, t1=1.0, solver=None,
                    edge_prob=0.3, student_noise=0.5):
    """Synthetic regression task whose target is produced by a hidden ``W*``.

    Returns ``(student_model, dataset, teacher_weights)``. The graph is a
    random undirected graph with self loops and symmetric normalisation.
    """
    rng = np.random.default_rng(seed)
    solver = solver or SolverConfig()
    edges = random_edges(n_nodes, edge_prob, rng)
    a = build_adjacency(n_nodes, edges, self_loops=True, normalize=True)
    teacher = rng.normal(scale=1.0 / np.sqrt(n_features), size=(n_features, n_features))
    h0 = rng.normal(size=(n_nodes, n_features))
    target = integrate_forward(GcdeModel(a, teacher, t0, t1), h0, solver).final
    student = teacher + rng.normal(scale=student_noise, size=teacher.shape)
    return GcdeModel(a, student, t0, t1), Dataset(h0, target), teacher
