import numpy as np
import pytest

from gcde_adjoint.exceptions import KinkWarning, ValidationError
from gcde_adjoint.ode import GcdeModel, SolverConfig, integrate_forward
from gcde_adjoint.training import (
    Dataset,
    GradientReport,
    TrainConfig,
    TrainingDivergedError,
    central_difference,
    fit,
    grad_check,
    mse_loss,
    teacher_student,
)

from _oracles import kink_free_gcde, random_symmetric

FAST = SolverConfig("rk4", 20)


class TestMse:
    def test_perfect_prediction(self):
        t = np.random.default_rng(0).normal(size=(3, 2))
        loss, grad = mse_loss(t, Dataset(np.zeros((3, 2)), t))
        assert loss == 0.0
        np.testing.assert_array_equal(grad, np.zeros((3, 2)))

    def test_unit_residual(self):
        loss, grad = mse_loss(np.ones((2, 2)), Dataset(np.zeros((2, 2)), np.zeros((2, 2))))
        assert loss == 0.5
        np.testing.assert_array_equal(grad, np.full((2, 2), 0.25))

    def test_gradient_matches_fd(self):
        rng = np.random.default_rng(1)
        ds = Dataset(np.zeros((4, 3)), rng.normal(size=(4, 3)), node_mask=[1, 0, 1, 1])
        pred = rng.normal(size=(4, 3))
        _, grad = mse_loss(pred, ds)
        numeric = central_difference(lambda p: mse_loss(p, ds)[0], pred, eps=1e-6)
        np.testing.assert_allclose(grad, numeric, atol=1e-7)

    def test_mask_restricts_loss(self):
        target = np.zeros((2, 2))
        pred = np.array([[1.0, 1.0], [5.0, 5.0]])
        loss, grad = mse_loss(pred, Dataset(target, target, node_mask=[1, 0]))
        assert loss == pytest.approx(0.5)
        np.testing.assert_array_equal(grad[1], [0.0, 0.0])

    def test_empty_mask(self):
        ds = Dataset(np.zeros((2, 2)), np.zeros((2, 2)), node_mask=[0, 0])
        with pytest.raises(ValidationError):
            mse_loss(np.ones((2, 2)), ds)

    def test_dataset_validation(self):
        with pytest.raises(ValidationError):
            Dataset(np.zeros((2, 2)), np.zeros((3, 2)))
        with pytest.raises(ValidationError):
            Dataset(np.zeros((2, 2)), np.zeros((2, 2)), node_mask=[1, 0, 1])
        with pytest.raises(ValidationError):
            Dataset(np.zeros((2, 2)), np.zeros((2, 2)), node_mask=[0.5, 1])

    def test_prediction_shape(self):
        with pytest.raises(ValidationError):
            mse_loss(np.zeros((2, 3)), Dataset(np.zeros((2, 2)), np.zeros((2, 2))))


class TestGradCheck:
    def test_zero_adjacency(self):
        rng = np.random.default_rng(2)
        model = GcdeModel(np.zeros((3, 3)), rng.normal(size=(2, 2)))
        ds = Dataset(rng.normal(size=(3, 2)), rng.normal(size=(3, 2)))
        report = grad_check(model, ds, FAST)
        np.testing.assert_array_equal(report.analytic, 0.0)
        np.testing.assert_array_equal(report.numeric, 0.0)
        assert report.max_abs_err == 0.0
        assert report.norm_rel_err == 0.0
        assert not report.kink_warning

    def test_exponential_instance(self):
        model = GcdeModel([[1.0]], [[1.0]])
        ds = Dataset([[1.0]], [[0.0]])
        report = grad_check(model, ds, SolverConfig("rk4", 200))
        assert report.norm_rel_err <= 1e-5
        assert not report.kink_warning

    def test_random_instance(self):
        rng = np.random.default_rng(3)
        model, h0 = kink_free_gcde(rng, 3, 2, margin=0.05)
        report = grad_check(model, Dataset(h0, rng.normal(size=h0.shape)), SolverConfig("rk4", 200))
        assert report.norm_rel_err <= 1e-4
        assert not report.kink_warning

    def test_kink_flagged(self):
        # node 1 starts exactly on the kink
        model = GcdeModel(np.eye(2), np.eye(1))
        ds = Dataset([[1.0], [0.0]], [[0.0], [0.0]])
        with pytest.warns(KinkWarning):
            report = grad_check(model, ds, FAST)
        assert report.kink_warning
        assert report.min_abs_preactivation == 0.0

    def test_error_shrinks_as_steps_double(self):
        # the wide fourth-order stencil keeps the FD floor under the discretization gap
        rng = np.random.default_rng(4)
        for _ in range(3):
            model, h0 = kink_free_gcde(rng, 3, 2, margin=0.05, scale=2.0, min_active=0.5)
            ds = Dataset(h0, rng.normal(size=h0.shape))
            errs = [grad_check(model, ds, SolverConfig("rk4", s), eps=1e-3, order=4).norm_rel_err
                    for s in (50, 100, 200)]
            assert errs[0] > errs[1] > errs[2], errs

    def test_report_errors_track_matrices(self):
        report = GradientReport(np.array([[1.0, 2.0]]), np.array([[1.0, 1.5]]))
        assert report.max_abs_err == 0.5
        assert report.norm_rel_err == pytest.approx(0.5 / np.hypot(1.0, 1.5))
        assert "norm_rel_err" in report.summary()

    def test_bad_eps(self):
        with pytest.raises(ValidationError):
            grad_check(GcdeModel([[1.0]], [[1.0]]), Dataset([[1.0]], [[0.0]]), FAST, eps=0.0)


class TestFit:
    def test_zero_learning_rate(self):
        model, ds, _ = teacher_student(6, 3, seed=5, solver=FAST)
        _, history = fit(model, ds, TrainConfig(0.0, 5, FAST))
        assert len(history) == 5
        assert len(set(history)) == 1

    def test_already_optimal(self):
        rng = np.random.default_rng(6)
        model = GcdeModel(random_symmetric(rng, 4), rng.normal(size=(2, 2)))
        h0 = rng.normal(size=(4, 2))
        ds = Dataset(h0, integrate_forward(model, h0, FAST).final)
        trained, history = fit(model, ds, TrainConfig(0.5, 10, FAST))
        assert history == [0.0] * 10
        np.testing.assert_array_equal(trained.weights, model.weights)

    def test_teacher_student_converges(self):
        model, ds, _ = teacher_student(8, 4, seed=0, solver=FAST)
        _, history = fit(model, ds, TrainConfig(1.0, 500, FAST))
        assert history[-1] <= 0.1 * history[0]

    def test_descent_with_backoff(self):
        model, ds, _ = teacher_student(6, 3, seed=7, solver=FAST)
        lr = 8.0
        for _ in range(10):
            _, history = fit(model, ds, TrainConfig(lr, 60, FAST))
            if np.all(np.diff(history) <= 0.0):
                break
            lr /= 2
        assert np.all(np.diff(history) <= 0.0)
        assert history[-1] < history[0]

    def test_deterministic(self):
        model, ds, _ = teacher_student(6, 3, seed=8, solver=FAST)
        tc = TrainConfig(1.0, 30, FAST, seed=3)
        _, h1 = fit(model, ds, tc)
        _, h2 = fit(model, ds, tc)
        assert h1 == h2

    def test_divergence_keeps_partial_history(self):
        # one huge step pushes W far into the growing regime
        model = GcdeModel([[1.0]], [[1.0]])
        ds = Dataset([[1.0]], [[100.0]])
        with np.errstate(over="ignore", invalid="ignore"), pytest.raises(TrainingDivergedError) as info:
            fit(model, ds, TrainConfig(1e6, 10, FAST))
        assert len(info.value.history) == 1
        assert np.all(np.isfinite(info.value.history))

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            TrainConfig(-1.0, 10)
        with pytest.raises(ValidationError):
            TrainConfig(0.1, 0)


def test_teacher_student_is_realizable():
    model, ds, teacher = teacher_student(5, 3, seed=10, solver=FAST)
    pred = integrate_forward(model.with_weights(teacher), ds.h0, FAST).final
    np.testing.assert_array_equal(pred, ds.target)
    assert np.allclose(model.adjacency, model.adjacency.T)
