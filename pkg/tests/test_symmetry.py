import numpy as np
import pytest

from dyadicsim import (
    Closure,
    IntegratorConfig,
    ModelParams,
    integrate,
    residual_scan,
    transform_scale,
    transform_shift,
    transform_sign_flip,
)

P6 = ModelParams(beta=1.0, n_max=6, closure=Closure.GALERKIN_ZERO)
X6 = np.array([0.0, 0.8, 0.2, 0.05, 0.0, 0.0])


@pytest.fixture(scope="module")
def base_traj():
    return integrate(P6, IntegratorConfig(), X6, 1.0)


class TestSignFlip:
    def test_initial_condition_negated(self, base_traj):
        flipped = transform_sign_flip(base_traj, 2)
        assert flipped.ys[0, 1] == -X6[1]
        assert np.array_equal(flipped.ys[0, 2:], X6[2:])

    def test_involution_bitwise(self, base_traj):
        twice = transform_sign_flip(transform_sign_flip(base_traj, 2), 2)
        assert np.array_equal(twice.ys, base_traj.ys)
        assert np.array_equal(twice.qs, base_traj.qs)
        assert np.array_equal(twice.ts, base_traj.ts)

    def test_wrong_nbar_rejected(self, base_traj):
        with pytest.raises(ValueError):
            transform_sign_flip(base_traj, 1)  # x_1 == 0
        with pytest.raises(ValueError):
            transform_sign_flip(base_traj, 3)  # not the first nonzero

    def test_flipped_solves_system(self, base_traj):
        flipped = transform_sign_flip(base_traj, 2)
        assert residual_scan(flipped) <= 10.0


class TestShift:
    def test_time_rescale(self, base_traj):
        # Z_1(t) = X_2(t / k_1) with k_1 = 2
        shifted = transform_shift(base_traj, 2)
        assert shifted.model.n_max == 5
        assert np.allclose(shifted.ts, 2.0 * base_traj.ts, rtol=0, atol=0)
        t_probe = 0.8
        z1 = shifted.dense_eval(t_probe).x[0]
        x2 = base_traj.dense_eval(t_probe / 2.0).x[1]
        assert abs(z1 - x2) < 1e-14

    def test_nbar_one_disallowed(self, base_traj):
        with pytest.raises(ValueError):
            transform_shift(base_traj, 1)

    def test_nonzero_below_nbar_rejected(self):
        p = ModelParams(beta=1.0, n_max=4, closure=Closure.GALERKIN_ZERO)
        traj = integrate(p, IntegratorConfig(), np.array([0.5, 0.1, 0.0, 0.0]), 0.5)
        with pytest.raises(ValueError):
            transform_shift(traj, 2)

    def test_shifted_solves_smaller_system(self, base_traj):
        shifted = transform_shift(base_traj, 2)
        assert residual_scan(shifted) <= 10.0


class TestScale:
    def test_identity(self, base_traj):
        same = transform_scale(base_traj, 1.0)
        assert np.array_equal(same.ys, base_traj.ys)
        assert np.array_equal(same.ts, base_traj.ts)

    def test_zero_solution(self):
        p = ModelParams(beta=1.0, n_max=3)
        traj = integrate(p, IntegratorConfig(), np.zeros(3), 1.0)
        scaled = transform_scale(traj, 2.0)
        assert np.all(scaled.ys == 0.0)

    def test_invalid_alpha(self, base_traj):
        with pytest.raises(ValueError):
            transform_scale(base_traj, 0.0)
        with pytest.raises(ValueError):
            transform_scale(base_traj, -1.0)

    def test_scaled_solves_system(self, base_traj):
        scaled = transform_scale(base_traj, 0.5)
        assert residual_scan(scaled) <= 10.0

    def test_pointwise_relation(self, base_traj):
        alpha = 0.5
        scaled = transform_scale(base_traj, alpha)
        t_probe = 0.6  # W(t) = alpha X(alpha t); t range scales to 1/alpha
        w = scaled.dense_eval(t_probe).x
        x = base_traj.dense_eval(alpha * t_probe).x
        assert np.abs(w - alpha * x).max() < 1e-14


class TestComposition:
    def test_mirror_closure_carries_over(self):
        p = ModelParams(beta=1.5, n_max=5, closure=Closure.MIRROR)
        x0 = np.array([0.0, 0.5, 0.25, 0.1, 0.05])
        traj = integrate(p, IntegratorConfig(), x0, 0.5)
        shifted = transform_shift(traj, 2)
        assert shifted.model.closure is Closure.MIRROR
        assert residual_scan(shifted) <= 10.0
