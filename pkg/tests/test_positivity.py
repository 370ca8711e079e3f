import numpy as np
import pytest

from dyadicsim import (
    Closure,
    GammaUndefined,
    IntegratorConfig,
    ModelParams,
    build_schedule,
    integrate,
    measure_tau,
    waiting_time,
)

P10 = ModelParams(beta=1.0, n_max=10, closure=Closure.MIRROR)
E1_10 = np.eye(10)[0]


def waiting_time_independent(beta: float, eta: float, a: float, n: int) -> float:
    """Second implementation, straight from the closed form."""
    k_np1 = 2.0 ** (beta * (n + 1))
    return (2.0 ** (2 * beta) * eta * eta + a**4) / (k_np1 * a**4 * eta**0.5)


class TestWaitingTime:
    def test_unit_case(self):
        # (2^2 * 1 + 1) / (4 * 1 * 1)
        assert waiting_time(P10, 1.0, 1.0, 1) == 1.25

    def test_large_level_limit(self):
        # a -> infinity leaves 1 / (k_{n+1} sqrt(eta))
        for n in (1, 3, 7):
            v = waiting_time(P10, 2.0, 1e6, n)
            limit = 1.0 / (P10.k[n + 1] * np.sqrt(2.0))
            assert abs(v - limit) / limit <= 1e-4

    def test_against_independent_formula(self):
        for beta in (0.7, 1.0, 2.0, 4.0):
            p = ModelParams(beta=beta, n_max=12)
            for n in (1, 5, 12):
                for eta, a in ((1.0, 0.3), (4.0, 2.0), (0.25, 1.7)):
                    got = waiting_time(p, eta, a, n)
                    want = waiting_time_independent(beta, eta, a, n)
                    assert abs(got - want) <= 1e-15 * want

    def test_doubling_beta_quadruples_eta_term(self):
        # the 2^(2 beta) eta^2 part of the numerator quadruples per unit
        # of beta while the denominator picks up k_{n+1} scaling
        n, eta = 3, 1.0
        a = 1e8  # isolate the denominator
        v1 = waiting_time(ModelParams(beta=1.0, n_max=10), eta, a, n)
        v2 = waiting_time(ModelParams(beta=2.0, n_max=10), eta, a, n)
        assert abs(v1 / v2 - 2.0 ** (n + 1)) < 1e-3

    def test_validation(self):
        with pytest.raises(ValueError):
            waiting_time(P10, 0.0, 1.0, 1)
        with pytest.raises(ValueError):
            waiting_time(P10, 1.0, -1.0, 1)


class TestBuildSchedule:
    def test_eta_is_total_energy(self):
        s = build_schedule(P10, E1_10, a=1.0)
        assert np.all(s.eta == 1.0)

    def test_omega_capped(self):
        x0 = np.array([1.0, -0.1, -0.2, 0.3] + [-0.01] * 6)
        s = build_schedule(P10, x0, a=1.0)
        # omega_1 = inf{i >= 1 : x_{i+1} >= 0} = 3 (x_4 = 0.3)
        assert s.omega[0] == 3
        # from shell 4 on, nothing nonnegative remains: capped at N
        assert s.omega[4] == 10

    def test_gamma_algebraic_identity(self):
        # pick eps so that eps * sum(a_i) = x_1^2 / 2 exactly
        q = 2.0 ** (-(1.0 - 1.0 / 12.0) / 3.0)
        a_total = q / (1.0 - q)
        eps = 0.5 / a_total
        s = build_schedule(P10, E1_10, a=1.0, C=1.0, delta=1.0 / 12.0, eps=eps)
        assert abs(s.gamma - 1.0 / np.sqrt(2.0)) < 1e-15

    def test_tau_bound_against_summation_oracle(self):
        s = build_schedule(P10, E1_10, a=1.0, C=1.0, delta=1.0 / 12.0, eps=0.1)
        beta, x1, eta, C, delta, eps = 1.0, 1.0, 1.0, 1.0, 1.0 / 12.0, 0.1

        def v(n, a):
            return (2 ** (2 * beta) * eta**2 + a**4) / (
                2 ** (beta * (n + 1)) * a**4 * np.sqrt(eta)
            )

        a_tot = sum(C * 2 ** (-beta * n * (1 - delta) / 3) for n in range(1, 600))
        gamma = np.sqrt(x1**2 - eps * a_tot)
        oracle = v(1, x1) + sum(
            eps**-2 * (2 ** (1 + beta) / x1) * 2 ** (-beta * n * (1 - delta) / 3)
            + v(n + 1, gamma)
            for n in range(1, 600)
        )
        assert abs(s.tau_bound - oracle) <= 1e-12 * oracle

    def test_gamma_undefined(self):
        with pytest.raises(GammaUndefined):
            build_schedule(P10, E1_10, a=1.0, C=100.0, eps=1.0)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            build_schedule(P10, np.zeros(10), a=1.0)  # x_1 = 0
        with pytest.raises(ValueError):
            build_schedule(P10, E1_10, a=1.0, delta=1.5)
        with pytest.raises(ValueError):
            build_schedule(P10, E1_10, a=1.0, C=-1.0)
        with pytest.raises(ValueError):
            build_schedule(P10, E1_10, a=1.0, eps=2.0)

    def test_summability_ratio(self):
        # with constant eta the v_n ratio is exactly 2^(-beta)
        p = ModelParams(beta=1.5, n_max=30)
        v = np.array([waiting_time(p, 1.0, 0.5, n) for n in range(1, 31)])
        ratios = v[20:] / v[19:-1]
        assert np.all(np.abs(ratios - 2.0**-1.5) <= 0.1 * 2.0**-1.5)


class TestMeasureTau:
    def test_nonnegative_start_gives_zero(self, traj_positive10):
        assert measure_tau(traj_positive10) == 0.0

    def test_mixed_sign_finite_tau(self, traj_mixed8):
        tau = measure_tau(traj_mixed8)
        assert tau is not None and 0 < tau < 5.0
        floor = -1e-10 * np.linalg.norm(traj_mixed8.ys[0])
        after = traj_mixed8.ys[traj_mixed8.ts >= tau]
        assert after.min() >= floor

    def test_zero_first_component_still_measurable(self):
        # schedule precondition violated, measurement still runs
        p = ModelParams(beta=1.0, n_max=4, closure=Closure.MIRROR)
        x0 = np.array([0.0, 0.5, -0.05, 0.1])
        traj = integrate(p, IntegratorConfig(), x0, 3.0)
        tau = measure_tau(traj)
        assert tau is None or tau >= 0.0
        with pytest.raises(ValueError):
            build_schedule(p, x0, a=1.0)

    def test_energy_bound_along_trajectory(self, traj_mixed8):
        # X_n(t)^2 never exceeds the initial total energy (Leray-Hopf)
        norm2 = float(np.dot(traj_mixed8.ys[0], traj_mixed8.ys[0]))
        tol = traj_mixed8.config.rtol * norm2 + traj_mixed8.config.atol
        assert (traj_mixed8.ys**2).max() <= norm2 + 100 * tol

    def test_monotone_positivization(self, traj_mixed8):
        # once every component is nonnegative at a sample, it stays so
        eps_pos = 1e-10 * np.linalg.norm(traj_mixed8.ys[0])
        mins = traj_mixed8.ys.min(axis=1)
        first_ok = np.flatnonzero(mins >= 0)[0]
        assert np.all(mins[first_ok:] >= -eps_pos)
