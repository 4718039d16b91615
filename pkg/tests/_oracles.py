"""Independent reference computations used by the tests.

Nothing here imports the code paths it is used to check: products are triple
loops, Jacobian entries come from single-entry perturbation, and instances
are filtered for distance from the ReLU kink.
"""

import numpy as np

from gcde_adjoint.ode import GcdeModel, SolverConfig, integrate_forward


def naive_matmul(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            s = 0.0
            for k in range(a.shape[1]):
                s += a[i, k] * b[k, j]
            out[i, j] = s
    return out


def entrywise_partial(fn, at, out_idx, in_idx, eps=1e-6):
    """d fn(at)[out_idx] / d at[in_idx] by a single-entry central difference."""
    plus = at.copy()
    minus = at.copy()
    plus[in_idx] += eps
    minus[in_idx] -= eps
    return (fn(plus)[out_idx] - fn(minus)[out_idx]) / (2 * eps)


def random_symmetric(rng, n, scale=1.0):
    a = rng.normal(size=(n, n))
    return scale * 0.5 * (a + a.T)


def kink_free_gcde(rng, n, c, margin, scale=1.0, check_steps=400, min_active=0.3, t1=1.0):
    """Random (model, h0) whose pre-activations stay at least ``margin`` from 0.

    The check runs on a fine RK4 grid; instances with mostly dead units or
    a blown-up state are rejected as uninformative.
    """
    for _ in range(10_000):
        a = random_symmetric(rng, n, scale)
        w = rng.normal(size=(c, c))
        h0 = rng.normal(size=(n, c))
        model = GcdeModel(a, w, 0.0, t1)
        traj = integrate_forward(model, h0, SolverConfig("rk4", check_steps))
        z = np.einsum("ij,tjk,kl->til", a, traj.states, w)
        if (np.abs(z).min() >= margin and (z > 0).mean() >= min_active
                and np.abs(traj.final).max() < 50):
            return model, h0
    raise RuntimeError("could not draw a kink-free instance")


def kink_guarded_pair(rng, n, c, margin=0.1):
    """(a, w, h) with every entry of A H W at least ``margin`` away from 0."""
    while True:
        a = random_symmetric(rng, n)
        w = rng.normal(size=(c, c))
        h = rng.normal(size=(n, c))
        if np.abs(a @ h @ w).min() >= margin:
            return a, w, h
