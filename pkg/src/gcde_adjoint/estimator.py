"""scikit-learn compatible wrapper around GCDE training.

The graph is fixed at construction (transductive setting), so ``X`` is the
``N x C`` node-feature matrix ``H(t0)`` and ``y`` the ``N x C`` target at
``t1``. Rows are nodes, not independent samples.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .ode import BackwardMode, GcdeModel, SolverConfig, integrate_forward
from .training import Dataset, TrainConfig, fit, loss_and_grads

__all__ = ["GCDERegressor"]


class GCDERegressor(RegressorMixin, TransformerMixin, BaseEstimator):
    """Fit the filter matrix ``W`` of ``dH/dt = ReLU(A H W)`` by adjoint gradient descent.

    Parameters
    ----------
    adjacency : array of shape (n_nodes, n_nodes)
        Symmetric graph matrix ``A``.
    t0, t1 : float
        Integration window.
    solver : {"rk4", "euler"}
    steps : int
        Fixed number of solver steps over ``[t0, t1]``.
    learning_rate, epochs : float, int
        Plain full-batch gradient descent settings.
    init_weights : array of shape (n_features, n_features), optional
        Starting ``W``; drawn from ``N(0, 1/C)`` with ``seed`` when omitted.
    seed : int
    backward_mode : {"stored", "augmented"}
        How the backward pass obtains ``H(t)``.

    Attributes
    ----------
    weights_ : ndarray of shape (n_features, n_features)
    loss_history_ : list of float
    model_ : GcdeModel
    n_features_in_ : int
    """

    def __init__(self, adjacency=None, t0=0.0, t1=1.0, solver="rk4", steps=20,
                 learning_rate=0.5, epochs=100, init_weights=None, seed=0,
                 backward_mode="stored"):
        self.adjacency = adjacency
        self.t0 = t0
        self.t1 = t1
        self.solver = solver
        self.steps = steps
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.init_weights = init_weights
        self.seed = seed
        self.backward_mode = backward_mode

    def _solver_config(self):
        return SolverConfig(self.solver, self.steps)

    def _validate_features(self, X, reset):
        X = check_array(X, dtype=np.float64)
        if self.adjacency is None:
            raise ValueError("GCDERegressor needs an adjacency matrix")
        n_nodes = np.shape(self.adjacency)[0]
        if X.shape[0] != n_nodes:
            raise ValueError(f"X has {X.shape[0]} rows but the graph has {n_nodes} nodes")
        if reset:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, estimator was fitted with {self.n_features_in_}"
            )
        return X

    def _initial_weights(self, n_features):
        if self.init_weights is not None:
            return check_array(self.init_weights, dtype=np.float64)
        rng = np.random.default_rng(self.seed)
        return rng.normal(scale=1.0 / np.sqrt(n_features), size=(n_features, n_features))

    def fit(self, X, y, node_mask=None):
        X = self._validate_features(X, reset=True)
        y = check_array(y, dtype=np.float64)
        model = GcdeModel(self.adjacency, self._initial_weights(X.shape[1]), self.t0, self.t1)
        tc = TrainConfig(self.learning_rate, self.epochs, self._solver_config(), self.seed)
        self.model_, self.loss_history_ = fit(model, Dataset(X, y, node_mask), tc,
                                             BackwardMode(self.backward_mode))
        self.weights_ = self.model_.weights
        return self

    def predict(self, X):
        """``H(t1)`` for initial features ``X``."""
        check_is_fitted(self, "model_")
        X = self._validate_features(X, reset=False)
        return integrate_forward(self.model_, X, self._solver_config()).final

    def transform(self, X):
        return self.predict(X)

    def gradient(self, X, y, node_mask=None):
        """Loss and adjoint gradient ``dL/dW`` at the current (fitted) weights."""
        check_is_fitted(self, "model_")
        X = self._validate_features(X, reset=False)
        loss, grads, _ = loss_and_grads(self.model_, Dataset(X, y, node_mask),
                                        self._solver_config(), BackwardMode(self.backward_mode))
        return loss, grads.weight_grad
