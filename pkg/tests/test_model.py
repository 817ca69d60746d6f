"""Closed-form mean/covariance and the step-function calculus behind jumps."""

import math

import numpy as np
import pytest

from clockforge import (
    AnomalySchedule,
    ClockParameters,
    DomainError,
    InitialState,
    InstantJump,
    MomentPair,
    PairedJump,
    ScheduleError,
    VarianceWindow,
    analytic_covariance,
    analytic_mean,
    anomalous_mean,
    heaviside_integral,
    window_indicator,
)


class TestHeavisideIntegral:
    def test_step_convention_at_zero(self):
        # jumps take effect at their own epoch
        assert heaviside_integral(0.0, 0) == 1.0

    def test_negative_argument_vanishes(self):
        assert heaviside_integral(-1e-300, 0) == 0.0
        assert heaviside_integral(-2.0, 3) == 0.0

    def test_orders(self):
        assert heaviside_integral(2.0, 1) == 2.0
        assert heaviside_integral(3.0, 2) == 4.5  # 3^2 / 2!
        assert heaviside_integral(2.0, 3) == pytest.approx(8.0 / 6.0, rel=1e-15)

    def test_negative_order_rejected(self):
        with pytest.raises(DomainError):
            heaviside_integral(1.0, -1)


class TestWindowIndicator:
    def test_half_open_semantics(self):
        assert window_indicator(4.0, 4.0, 6.0) == 1.0  # left endpoint in
        assert window_indicator(5.0, 4.0, 6.0) == 1.0
        assert window_indicator(6.0, 4.0, 6.0) == 0.0  # right endpoint out
        assert window_indicator(3.999, 4.0, 6.0) == 0.0
        assert window_indicator(7.0, 4.0, 6.0) == 0.0

    def test_degenerate_window_rejected(self):
        with pytest.raises(DomainError):
            window_indicator(1.0, 2.0, 2.0)
        with pytest.raises(DomainError):
            window_indicator(1.0, 3.0, 2.0)


class TestParameterValidation:
    def test_negative_sigma_rejected(self):
        with pytest.raises(DomainError):
            ClockParameters(sigma1=-1.0)

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            ClockParameters(mu1=float("nan"))
        with pytest.raises(DomainError):
            InitialState(c2=float("inf"))

    def test_partial_burst_trio_rejected(self):
        with pytest.raises(DomainError):
            ClockParameters(sigma1p=8.0)
        with pytest.raises(DomainError):
            ClockParameters(sigma1p=8.0, sigma2p=8.0)

    def test_full_burst_trio_accepted(self):
        params = ClockParameters(sigma1p=8.0, sigma2p=8.0, sigma3p=8.0)
        assert params.has_burst
        assert params.burst_sigmas == (8.0, 8.0, 8.0)

    def test_no_burst_by_default(self):
        assert not ClockParameters().has_burst
        assert ClockParameters().burst_sigmas is None


class TestAnalyticMean:
    def test_zero_drives_keep_initial_state_frozen_in_x3(self):
        out = analytic_mean(ClockParameters(), InitialState(c1=1.0), 5.0)
        np.testing.assert_array_equal(out, [1.0, 0.0, 0.0])

    def test_polynomial_oracle(self):
        # Frozen from integrating dx1 = x2 + mu1, dx2 = x3 + mu2, dx3 = mu3
        # with solve_ivp at rtol 1e-12; exact rationals give the same.
        out = analytic_mean(
            ClockParameters(mu1=0.5, mu2=0.25, mu3=6.0),
            InitialState(c1=1.0, c2=2.0, c3=3.0),
            2.0,
        )
        np.testing.assert_array_equal(out, [20.5, 20.5, 15.0])

    def test_initial_time(self):
        init = InitialState(c1=0.25, c2=-1.0, c3=3.0)
        out = analytic_mean(ClockParameters(mu1=1, mu2=2, mu3=3), init, 0.0)
        np.testing.assert_array_equal(out, init.as_array())

    def test_negative_time_rejected(self):
        with pytest.raises(DomainError):
            analytic_mean(ClockParameters(), InitialState(), -1.0)


class TestAnalyticCovariance:
    def test_quadrature_oracle(self):
        # Frozen from scipy.integrate.quad of the propagator integral
        # int_0^t Phi(s) diag(sigma^2) Phi(s)^T ds; exact values are
        # [[406/15, 26, 12], [26, 32, 18], [12, 18, 18]].
        cov = analytic_covariance(ClockParameters(sigma1=1, sigma2=2, sigma3=3), 2.0)
        expected = np.array(
            [
                [406.0 / 15.0, 26.0, 12.0],
                [26.0, 32.0, 18.0],
                [12.0, 18.0, 18.0],
            ]
        )
        np.testing.assert_allclose(cov, expected, rtol=1e-14)

    def test_exactly_symmetric(self):
        cov = analytic_covariance(
            ClockParameters(sigma1=0.3, sigma2=1.7, sigma3=0.01), 3.7
        )
        np.testing.assert_array_equal(cov, cov.T)

    def test_positive_semidefinite_over_random_draws(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            sig = 10.0 ** rng.uniform(-12, 2, size=3)
            t = 10.0 ** rng.uniform(-2, 4)
            cov = analytic_covariance(
                ClockParameters(sigma1=sig[0], sigma2=sig[1], sigma3=sig[2]), t
            )
            eigs = np.linalg.eigvalsh(cov)
            assert eigs.min() >= -1e-12 * max(eigs.max(), 0.0)

    def test_zero_time_zero_noise(self):
        np.testing.assert_array_equal(
            analytic_covariance(ClockParameters(sigma1=1, sigma2=1, sigma3=1), 0.0),
            np.zeros((3, 3)),
        )
        np.testing.assert_array_equal(
            analytic_covariance(ClockParameters(), 5.0), np.zeros((3, 3))
        )

    def test_monotone_in_time(self):
        params = ClockParameters(sigma1=1, sigma2=1, sigma3=1)
        prev = -1.0
        for t in np.linspace(0.0, 10.0, 21):
            cur = analytic_covariance(params, float(t))[0, 0]
            assert cur >= prev
            prev = cur


class TestScheduleTypes:
    def test_instant_jump_component_checked(self):
        with pytest.raises(DomainError):
            InstantJump("amplitude", 1.0, 0.0)
        assert InstantJump("drift", 1.0, 0.0).axis == 2

    def test_negative_epoch_rejected(self):
        with pytest.raises(DomainError):
            InstantJump("phase", 1.0, -2.0)

    def test_paired_jump_ordering(self):
        with pytest.raises(DomainError):
            PairedJump(a=4.0, theta0=6.0, theta1=4.0)
        with pytest.raises(DomainError):
            PairedJump(a=4.0, theta0=4.0, theta1=4.0)
        jump = PairedJump(a=4.0, theta0=4.0, theta1=6.0)
        assert jump.delta == 2.0
        assert jump.rate == 2.0

    def test_overlapping_windows_rejected(self):
        with pytest.raises(ScheduleError):
            AnomalySchedule(
                variance_windows=(
                    VarianceWindow(1.0, 4.0),
                    VarianceWindow(3.0, 6.0),
                )
            )

    def test_touching_windows_rejected(self):
        # closed windows sharing an endpoint would make the burst sigmas
        # ambiguous at the shared epoch
        with pytest.raises(ScheduleError):
            AnomalySchedule(
                variance_windows=(
                    VarianceWindow(1.0, 2.0),
                    VarianceWindow(2.0, 3.0),
                )
            )

    def test_disjoint_windows_accepted(self):
        schedule = AnomalySchedule(
            variance_windows=(VarianceWindow(5.0, 6.0), VarianceWindow(1.0, 2.0))
        )
        assert len(schedule.variance_windows) == 2
        assert not schedule.is_empty

    def test_empty_schedule(self):
        assert AnomalySchedule.empty().is_empty


class TestAnomalousMean:
    params = ClockParameters(mu1=0.1, mu2=0.2, mu3=0.3)
    init = InitialState(c1=1.0, c2=-0.5, c3=0.25)

    def test_empty_schedule_is_bitwise_base(self):
        t = 3.7
        base = analytic_mean(self.params, self.init, t)
        out = anomalous_mean(self.params, self.init, AnomalySchedule(), t)
        np.testing.assert_array_equal(out, base)

    def test_phase_jump_column(self):
        schedule = AnomalySchedule(instant_jumps=(InstantJump("phase", 3.0, 6.0),))
        base = analytic_mean(self.params, self.init, 7.0)
        out = anomalous_mean(self.params, self.init, schedule, 7.0)
        np.testing.assert_array_equal(out - base, [3.0, 0.0, 0.0])
        # takes effect at its own epoch
        at6 = anomalous_mean(self.params, self.init, schedule, 6.0)
        assert at6[0] - analytic_mean(self.params, self.init, 6.0)[0] == 3.0
        before = anomalous_mean(self.params, self.init, schedule, 5.999)
        np.testing.assert_array_equal(
            before, analytic_mean(self.params, self.init, 5.999)
        )

    def test_frequency_jump_ramps_phase(self):
        a, theta = 1e-12, 100.0
        schedule = AnomalySchedule(
            instant_jumps=(InstantJump("frequency", a, theta),)
        )
        params = ClockParameters(sigma1=5e-12, sigma2=1e-22, sigma3=1e-22)
        out = anomalous_mean(params, InitialState(), schedule, 6000.0)
        assert out[0] == 5.9e-9  # 1e-12 * 5900 is exact in binary64
        assert out[1] == a
        assert out[2] == 0.0

    def test_jump_impact_linearity_exact(self):
        a, theta = 2.5, 3.0
        schedule = AnomalySchedule(
            instant_jumps=(InstantJump("frequency", a, theta),)
        )
        for t in (0.0, 2.9, 3.0, 4.5, 10.0):
            shift = (
                anomalous_mean(self.params, self.init, schedule, t)[0]
                - analytic_mean(self.params, self.init, t)[0]
            )
            expected = a * (t - theta) if t >= theta else 0.0
            assert shift == expected

    def test_drift_jump_column(self):
        a, theta = 3.0, 2.0
        schedule = AnomalySchedule(instant_jumps=(InstantJump("drift", a, theta),))
        t = 5.0
        u = t - theta
        base = analytic_mean(self.params, self.init, t)
        out = anomalous_mean(self.params, self.init, schedule, t)
        np.testing.assert_allclose(
            out - base, [a * u * u / 2.0, a * u, a], rtol=1e-15
        )

    def test_paired_jump_profile(self):
        schedule = AnomalySchedule(paired_jumps=(PairedJump(4.0, 4.0, 6.0),))
        params = ClockParameters()
        init = InitialState()

        def column(t):
            return anomalous_mean(params, init, schedule, t)

        np.testing.assert_array_equal(column(3.0), [0.0, 0.0, 0.0])
        np.testing.assert_array_equal(column(4.0), [0.0, 2.0, 0.0])
        np.testing.assert_array_equal(column(5.0), [2.0, 2.0, 0.0])
        # phase has fully accumulated a=4 at the closing epoch and holds
        np.testing.assert_array_equal(column(6.0), [4.0, 0.0, 0.0])
        np.testing.assert_array_equal(column(9.0), [4.0, 0.0, 0.0])

    def test_jump_corrections_superpose(self):
        j1 = InstantJump("frequency", 2.0, 1.0)
        j2 = InstantJump("drift", -1.0, 3.0)
        both = anomalous_mean(
            self.params, self.init, AnomalySchedule(instant_jumps=(j1, j2)), 8.0
        )
        only1 = anomalous_mean(
            self.params, self.init, AnomalySchedule(instant_jumps=(j1,)), 8.0
        )
        only2 = anomalous_mean(
            self.params, self.init, AnomalySchedule(instant_jumps=(j2,)), 8.0
        )
        base = analytic_mean(self.params, self.init, 8.0)
        np.testing.assert_allclose(
            both - base, (only1 - base) + (only2 - base), rtol=1e-14
        )

    def test_variance_window_does_not_move_mean(self):
        schedule = AnomalySchedule(variance_windows=(VarianceWindow(2.0, 4.0),))
        out = anomalous_mean(self.params, self.init, schedule, 5.0)
        np.testing.assert_array_equal(out, analytic_mean(self.params, self.init, 5.0))


class TestMomentPair:
    def test_shape_validation(self):
        with pytest.raises(DomainError):
            MomentPair(mean=np.zeros(2), covariance=np.zeros((3, 3)))
        with pytest.raises(DomainError):
            MomentPair(mean=np.zeros(3), covariance=np.zeros((2, 3)))

    def test_holds_arrays(self):
        pair = MomentPair(mean=[1, 2, 3], covariance=np.eye(3))
        assert pair.mean.shape == (3,)
        assert pair.covariance.shape == (3, 3)
