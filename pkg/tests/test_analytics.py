import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from conftest import PAPER_DP, PAPER_GAMMA, PAPER_TAU, yz_state
from rabi_estimation import (
    AngleCoords,
    DegenerateGeometryError,
    DomainError,
    InvalidCoordinatesError,
    InvalidParameterError,
    OdeSpec,
    ProtocolParams,
    asymptotic_fidelities,
    averaged_ode_prediction,
    closed_form_fidelity,
    delta_f_closed_form,
    delta_f_mean_angle,
    expected_delta_f_bruteforce,
    gamma_from_discrete,
    integrate_ode,
    make_measurement_model,
    ode_rhs,
    oscillation_averaged_rate,
)


def bruteforce(theta, theta_e, omega_e_tau, dp, delta_tau):
    params = ProtocolParams(omega_e_tau + delta_tau, omega_e_tau, dp, 1.0)
    return expected_delta_f_bruteforce(yz_state(theta), yz_state(theta_e), params, make_measurement_model(dp))


class TestClosedForm:
    def test_converged(self):
        assert delta_f_closed_form(1.1, 1.1, 0.3, 0.5, 0.0) == 0.0

    @pytest.mark.parametrize("theta, theta_e, a", [(math.pi / 2, 0.0, 0.3), (2.0, 0.5, 1.0), (0.1, 3.0, 0.0)])
    def test_projective(self, theta, theta_e, a):
        value = delta_f_closed_form(theta, theta_e, a, 1.0, 0.0)
        assert value == pytest.approx(1 - math.cos((theta - theta_e) / 2) ** 2, abs=1e-14)

    def test_against_bruteforce_example(self):
        args = (math.pi / 2, math.pi / 6, math.pi / 50, 0.04, 0.001)
        assert delta_f_closed_form(*args) == pytest.approx(bruteforce(*args), abs=1e-12)

    def test_against_bruteforce_grid(self):
        grid = np.linspace(0.0, math.pi, 9)
        for dp, a, d in itertools.product((0.0, 0.04, 0.3, 0.9), (0.0, 0.4, 2.0), (0.0, 0.02, -0.3)):
            for theta, theta_e in itertools.product(grid, grid):
                assert abs(delta_f_closed_form(theta, theta_e, a, dp, d) - bruteforce(theta, theta_e, a, dp, d)) <= 1e-10

    def test_degenerate_denominator(self):
        with pytest.raises(DegenerateGeometryError):
            delta_f_closed_form(1.0, 0.0, 0.0, 1.0, 0.0)

    def test_rejects_bad_strength(self):
        with pytest.raises(InvalidParameterError):
            delta_f_closed_form(1.0, 0.0, 0.0, 1.2, 0.0)

    def test_measurement_term_grows_with_strength(self):
        dps = np.linspace(0.0, 0.95, 20)
        for theta, theta_e, a in itertools.product(np.linspace(0, math.pi, 7), np.linspace(0, math.pi, 7), (0.1, 1.3)):
            x = a + theta_e
            first = [dp**2 * math.sin(x) ** 2 * math.sin((theta - theta_e) / 2) ** 2 / (1 - dp**2 * math.cos(x) ** 2) for dp in dps]
            assert np.all(np.diff(first) >= 0)
        assert np.all(np.diff(1 - dps**2) < 0)


class TestMeanAngle:
    def test_converged(self):
        assert delta_f_mean_angle(1.0, 0.7, 0.0, 0.2, 0.3, 0.0, 1) == pytest.approx(0.0, abs=1e-16)

    @given(st.floats(0, 1), st.floats(-3, 3), st.floats(-3, 3))
    def test_no_dynamics(self, _f, theta_bar, theta_r):
        f = math.cos(theta_r) ** 2
        assert delta_f_mean_angle(f, theta_bar, theta_r, 0.5, 0.0, 0.0, 1) == pytest.approx(0.0, abs=1e-15)

    def test_inconsistent_coordinates(self):
        with pytest.raises(InvalidCoordinatesError):
            delta_f_mean_angle(0.5, 0.0, 0.0, 0.1, 0.1, 0.0, 1)

    def test_change_of_variables_sweep(self):
        rng = np.random.default_rng(2024)
        for _ in range(10_000):
            theta_bar, theta_r = rng.uniform(0, math.pi), rng.uniform(-math.pi / 2, math.pi / 2)
            a, dp, d = rng.uniform(0, 2 * math.pi), rng.uniform(0, 0.99), rng.uniform(-0.1, 0.1)
            coords = AngleCoords.from_mean_relative(theta_bar, theta_r)
            expected = delta_f_closed_form(coords.theta, coords.theta_e, a, dp, d)
            got = delta_f_mean_angle(coords.fidelity, theta_bar, theta_r, a, dp, d, coords.branch_sign)
            assert abs(got - expected) <= 1e-12

    def test_coordinates(self):
        c = AngleCoords.from_polar(2.0, 0.5)
        assert c.theta_r == 0.75 and c.theta_bar == 1.25
        assert c.theta_bar + c.theta_r == c.theta and c.theta_bar - c.theta_r == c.theta_e
        assert 0 <= c.fidelity <= 1
        assert AngleCoords.from_polar(0.5, 2.0).branch_sign == -1


class TestOscillationAverage:
    @pytest.mark.parametrize("f, sign, delta", [(0.1, 1, 0.0), (0.5, -1, 0.005), (0.9, 1, 0.005), (0.3, -1, 0.2)])
    def test_against_quadrature(self, f, sign, delta):
        dp, tau = 0.3, 0.5
        theta_r = -sign * math.acos(math.sqrt(f))

        def increment(tb):
            return delta_f_closed_form(tb + theta_r, tb - theta_r, 0.0, dp, delta * tau)

        expected = quad(increment, 0.0, 2 * math.pi, epsabs=1e-14, epsrel=1e-12, limit=200)[0] / (2 * math.pi) / tau
        assert oscillation_averaged_rate(f, dp, tau, delta, sign) == pytest.approx(expected, abs=1e-12)

    def test_approaches_ode(self):
        gamma, delta = PAPER_GAMMA, PAPER_GAMMA / 5
        tau, dp = PAPER_TAU / 64, PAPER_DP / 8
        for sign in (1, -1):
            assert oscillation_averaged_rate(0.5, dp, tau, delta, sign) == pytest.approx(ode_rhs(0.5, gamma, delta, sign), abs=1e-7)


class TestOde:
    def test_rhs_examples(self):
        g, d = 0.0255, 0.003
        for s in (1, -1):
            assert ode_rhs(1.0, g, d, s) == 0.0
        assert ode_rhs(0.0, g, d, 1) == g / 2
        f_minus = g**2 / (g**2 + 4 * d**2)
        assert ode_rhs(f_minus, g, d, -1) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("f", [-1e-9, 1.0 + 1e-9])
    def test_rhs_domain(self, f):
        with pytest.raises(DomainError):
            ode_rhs(f, 0.1, 0.0, 1)

    def test_rhs_sign(self):
        with pytest.raises(InvalidParameterError):
            ode_rhs(0.5, 0.1, 0.0, 0)

    def test_gamma(self):
        assert gamma_from_discrete(0.04, math.pi / 50) == pytest.approx(0.0255, abs=5e-5)
        assert gamma_from_discrete(0.04, math.pi / 50) == pytest.approx(0.08 / math.pi, rel=1e-15)
        assert gamma_from_discrete(0.0, 3.0) == 0.0
        assert gamma_from_discrete(0.08, math.pi / 50) == pytest.approx(0.32 / math.pi, rel=1e-15)
        with pytest.raises(InvalidParameterError):
            gamma_from_discrete(0.1, 0.0)

    def test_closed_form(self):
        assert closed_form_fidelity(0.0, 0.0255) == 0.0
        assert abs(closed_form_fidelity(100 / 0.0255, 0.0255) - 1.0) <= 1e-15
        assert closed_form_fidelity(2 * math.log(2) / 0.0255, 0.0255) == pytest.approx(0.5, abs=1e-15)
        values = closed_form_fidelity(np.linspace(0, 400, 1001), 0.0255)
        assert np.all(np.diff(values) > 0)
        with pytest.raises(DomainError):
            closed_form_fidelity(-1.0, 0.1)

    def test_asymptotic(self):
        assert asymptotic_fidelities(0.03, 0.0) == (1.0, 1.0, 1.0)
        g = PAPER_GAMMA
        _, fm, fb = asymptotic_fidelities(g, g / 5)
        assert fm == pytest.approx(25 / 29, rel=1e-14) and fb == pytest.approx(27 / 29, rel=1e-14)
        _, fm, fb = asymptotic_fidelities(g, g / 20)
        assert fm == pytest.approx(100 / 101, rel=1e-14) and fb == pytest.approx(0.995050, abs=5e-7)
        with pytest.raises(InvalidParameterError):
            asymptotic_fidelities(0.0, 0.1)

    def test_f_minus_decreasing_in_detuning(self):
        fm = [asymptotic_fidelities(0.02, d)[1] for d in np.linspace(0, 0.1, 50)]
        assert np.all(np.diff(fm) < 0)
        assert asymptotic_fidelities(0.02, -0.03) == asymptotic_fidelities(0.02, 0.03)

    def test_integrate_matches_exponential(self):
        trace = integrate_ode(OdeSpec(0.0255, 0.0, 1, 0.0), 400.0, 1e-2)
        assert trace.times[-1] == 400.0
        assert np.max(np.abs(trace.fidelities - closed_form_fidelity(trace.times, 0.0255))) <= 1e-8

    def test_fixed_point_trace(self):
        trace = integrate_ode(OdeSpec(0.03, 0.01, -1, 1.0), 50.0, 0.1)
        assert np.all(trace.fidelities == 1.0)

    def test_minus_branch_fixed_point(self):
        g = PAPER_GAMMA
        trace = integrate_ode(OdeSpec(g, g / 5, -1, 0.0), 3000.0, 0.05)
        assert trace.fidelities[-1] == pytest.approx(25 / 29, abs=1e-6)
        assert trace.clamp_events == 0

    def test_plus_branch_absorbed_at_one(self):
        g = PAPER_GAMMA
        trace = integrate_ode(OdeSpec(g, g / 5, 1, 0.0), 1000.0, 0.05)
        assert trace.fidelities[-1] == 1.0
        assert np.all((trace.fidelities >= 0) & (trace.fidelities <= 1))

    def test_partial_last_step(self):
        trace = integrate_ode(OdeSpec(0.1, 0.0, 1, 0.0), 1.05, 0.1)
        assert len(trace) == 12 and trace.times[-1] == 1.05
        assert trace.fidelities[-1] == pytest.approx(closed_form_fidelity(1.05, 0.1), abs=1e-10)

    def test_fourth_order(self):
        g, d = 0.5, 0.1
        ref = integrate_ode(OdeSpec(g, d, -1, 0.2), 4.0, 1e-3).fidelities[-1]
        errs = [abs(integrate_ode(OdeSpec(g, d, -1, 0.2), 4.0, h).fidelities[-1] - ref) for h in (0.4, 0.2)]
        assert 10 < errs[0] / errs[1] < 24

    def test_rejects_bad_step(self):
        with pytest.raises(InvalidParameterError):
            integrate_ode(OdeSpec(0.1, 0.0, 1, 0.0), 1.0, 2.0)
        with pytest.raises(InvalidParameterError):
            OdeSpec(0.0, 0.0, 1, 0.0)
        with pytest.raises(InvalidParameterError):
            OdeSpec(0.1, 0.0, 1, 1.5)

    def test_averaged_prediction(self):
        g = PAPER_GAMMA
        same = averaged_ode_prediction(g, 0.0, 0.0, 200.0, 0.1)
        plus = integrate_ode(OdeSpec(g, 0.0, 1, 0.0), 200.0, 0.1)
        assert np.array_equal(same.fidelities, plus.fidelities)
        tail5 = averaged_ode_prediction(g, g / 5, 0.0, 3000.0, 0.05).fidelities[-1]
        tail20 = averaged_ode_prediction(g, g / 20, 0.0, 3000.0, 0.05).fidelities[-1]
        assert tail5 == pytest.approx(27 / 29, abs=1e-6)
        assert tail20 == pytest.approx(0.995050, abs=1e-6)


def test_negative_detuning_swaps_branch_roles():
    g, d = 0.03, -0.01
    f_minus = asymptotic_fidelities(g, d)[1]
    assert ode_rhs(f_minus, g, d, 1) == pytest.approx(0.0, abs=1e-15)
    assert ode_rhs(f_minus, g, d, -1) > 0
