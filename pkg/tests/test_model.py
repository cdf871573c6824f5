import math

import numpy as np
import pytest

import delayflux as dfx
from delayflux import ParameterError


def bisect_root(alpha, m, iters=200):
    """Independent root oracle: plain bisection, no Newton polish."""
    lo, hi = 0.0, alpha
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid + mid ** (m + 1.0) < alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestNondimensionalize:
    def test_unit_scales(self):
        p = dfx.PhysicalParams(D=1, k=1, A=1, P0=1, m=4, T0=0)
        mp = dfx.nondimensionalize(p)
        assert (mp.alpha, mp.m, mp.tau) == (1.0, 4.0, 0.0)

    def test_delay_identity(self):
        mp = dfx.nondimensionalize(dfx.PhysicalParams(D=1, k=1, A=1, P0=1, m=4, T0=3))
        assert mp.tau == 3.0

    def test_hand_evaluation(self):
        # 3 / (1.5 * sqrt(4*1)) = 1, tau = 1*2 = 2
        mp = dfx.nondimensionalize(dfx.PhysicalParams(D=4, k=1, A=3, P0=1.5, m=2, T0=2))
        assert abs(mp.alpha - 1.0) < 1e-15
        assert mp.tau == 2.0

    @pytest.mark.parametrize("bad", [
        dict(D=0, k=1, A=1, P0=1, m=1, T0=0),
        dict(D=1, k=-2, A=1, P0=1, m=1, T0=0),
        dict(D=1, k=1, A=0, P0=1, m=1, T0=0),
        dict(D=1, k=1, A=1, P0=0, m=1, T0=0),
        dict(D=1, k=1, A=1, P0=1, m=0, T0=0),
        dict(D=1, k=1, A=1, P0=1, m=1, T0=-1),
    ])
    def test_domain_errors(self, bad):
        with pytest.raises(ParameterError):
            dfx.PhysicalParams(**bad)


class TestSteadyRoot:
    def test_reference_values(self, reference_cases):
        for case in reference_cases:
            c = dfx.steady_state_c(case["alpha"], case["m"])
            assert abs(c - case["c"]) <= 5e-5

    def test_exact_unit_root(self):
        # 1 + 1 = 2 for every m
        for m in (0.5, 2.0, 7.0, 19.0):
            assert abs(dfx.steady_state_c(2.0, m) - 1.0) < 1e-12

    def test_against_bisection_oracle(self):
        for alpha, m in [(0.4, 4), (1.6, 2), (5.0, 6), (0.05, 0.3), (9.0, 17.0)]:
            assert abs(dfx.steady_state_c(alpha, m) - bisect_root(alpha, m)) < 1e-10

    def test_residual_and_bounds_random(self, rng):
        alphas = rng.uniform(0.01, 10.0, size=1000)
        ms = rng.uniform(0.1, 20.0, size=1000)
        for alpha, m in zip(alphas, ms):
            c = dfx.steady_state_c(alpha, m)
            assert 0.0 < c < alpha
            assert abs(c + c ** (m + 1.0) - alpha) <= 1e-12 * max(1.0, alpha)

    def test_monotone_in_alpha(self):
        for m in (0.5, 2.0, 6.0):
            grid = np.linspace(0.05, 8.0, 60)
            roots = [dfx.steady_state_c(a, m) for a in grid]
            assert np.all(np.diff(roots) > 0)


class TestGain:
    def test_trivial(self):
        assert abs(dfx.feedback_gain(2.0, 2.0, 1.0) - 1.0) < 1e-15

    def test_reference_values(self, reference_cases):
        for case in reference_cases:
            c = dfx.steady_state_c(case["alpha"], case["m"])
            Q = dfx.feedback_gain(case["alpha"], case["m"], c)
            assert abs(Q - case["Q"]) <= 5e-5

    def test_gain_identity(self, rng):
        # Q (1+c^m)^2 = m alpha c^(m-1)
        for _ in range(100):
            alpha = rng.uniform(0.05, 8.0)
            m = rng.uniform(0.2, 15.0)
            c = dfx.steady_state_c(alpha, m)
            Q = dfx.feedback_gain(alpha, m, c)
            lhs = Q * (1.0 + c ** m) ** 2
            rhs = m * alpha * c ** (m - 1.0)
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


class TestBoundaryFlux:
    def test_zero_boundary(self):
        assert dfx.boundary_flux(0.0, 0.4, 4) == -0.4

    def test_half_maximum(self):
        assert abs(dfx.boundary_flux(1.0, 1.5, 4) - (-0.75)) < 1e-15

    def test_fixed_point(self, rng):
        # c (1 + c^m) = alpha forces g(c) = -c
        for _ in range(50):
            alpha = rng.uniform(0.05, 8.0)
            m = rng.uniform(0.2, 15.0)
            c = dfx.steady_state_c(alpha, m)
            assert abs(dfx.boundary_flux(c, alpha, m) + c) <= 1e-12

    def test_range(self, rng):
        q = rng.uniform(0.0, 50.0, size=200)
        g = dfx.boundary_flux(q, 2.5, 3.0)
        assert np.all(g >= -2.5) and np.all(g < 0)

    def test_negative_rejected(self):
        with pytest.raises(ParameterError):
            dfx.boundary_flux(-0.1, 1.0, 2.0)


class TestAsymptoticGain:
    def test_formula(self):
        assert abs(dfx.asymptotic_gain(2.0, 100.0) - 50.0) < 1e-12

    def test_against_exact(self):
        c = dfx.steady_state_c(5.0, 6)
        Q = dfx.feedback_gain(5.0, 6, c)
        est = dfx.asymptotic_gain(5.0, 6)
        assert abs(est - 4.8) < 1e-12
        assert abs(est - Q) / Q < 0.10

    def test_small_alpha_vanishes(self):
        assert dfx.asymptotic_gain(0.4, 40.0) < 1e-10

    def test_error_decreasing_in_m(self):
        errs = []
        for m in (6, 12, 24, 48):
            c = dfx.steady_state_c(5.0, m)
            Q = dfx.feedback_gain(5.0, m, c)
            errs.append(abs(dfx.asymptotic_gain(5.0, m) - Q) / Q)
        assert errs[0] < 0.15
        assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))


class TestLowerSolution:
    def test_membrane_value(self):
        c = dfx.steady_state_c(1.5, 4)
        assert abs(dfx.lower_solution(0.0, 1.5, 4, 2.0, 1.5, 2.0) - c) < 1e-14

    def test_hand_value(self):
        # zeta=2 meets the admissibility bound sqrt(1.5*2*1 + 1) = 2 with equality
        c = dfx.steady_state_c(1.5, 4)
        got = dfx.lower_solution(1.0, 1.5, 4, 2.0, 1.5, 2.0)
        assert abs(got - c * math.exp(-3.5)) < 1e-15
        assert abs(got - 0.02725) < 5e-5

    def test_monotone_decay(self):
        x = np.linspace(0.0, 8.0, 200)
        vals = dfx.lower_solution(x, 1.5, 4, 2.0, 1.5, 2.0)
        assert np.all(np.diff(vals) < 0)
        assert vals[-1] < 1e-12

    def test_below_constant_majorant(self, rng):
        c = dfx.steady_state_c(0.4, 4)
        x = rng.uniform(0.0, 20.0, size=100)
        assert np.all(dfx.lower_solution(x, 0.4, 4, 2.0, 1.5, 2.0) <= c)

    @pytest.mark.parametrize("zeta,beta,gamma", [
        (2.0, 1.5, 1.5),    # gamma < 2
        (2.0, 1.0, 2.0),    # beta not > 1
        (1.7, 1.5, 2.0),    # zeta below sqrt(beta*gamma*(gamma-1)+1) = 2
    ])
    def test_inadmissible_parameters(self, zeta, beta, gamma):
        with pytest.raises(ParameterError):
            dfx.lower_solution(1.0, 1.5, 4, zeta, beta, gamma)


class TestModelParams:
    @pytest.mark.parametrize("kw", [
        dict(alpha=0.0, m=1.0, tau=0.0),
        dict(alpha=1.0, m=0.0, tau=0.0),
        dict(alpha=1.0, m=1.0, tau=-0.5),
    ])
    def test_invalid(self, kw):
        with pytest.raises(ParameterError):
            dfx.ModelParams(**kw)

    def test_steady_state_record(self):
        st = dfx.steady_state(dfx.ModelParams(alpha=1.5, m=4))
        assert abs(st.c + st.c ** 5 - 1.5) < 1e-12
        assert st.Q > 1
        prof = st.profile(np.array([0.0, 1.0]))
        assert abs(prof[0] - st.c) < 1e-15
        assert abs(prof[1] - st.c * math.exp(-1)) < 1e-15


class TestInitialData:
    def test_compatibility_enforced(self):
        f = lambda x: np.ones_like(np.asarray(x, float))
        h = lambda t: np.full_like(np.asarray(t, float), 1.0 + 1e-6)
        with pytest.raises(ParameterError, match="incompatible"):
            dfx.InitialData(f, h, tau=1.0)

    def test_negative_profile_rejected(self):
        f = lambda x: 1.0 - np.asarray(x, float)
        h = lambda t: np.ones_like(np.asarray(t, float))
        with pytest.raises(ParameterError):
            dfx.InitialData(f, h, tau=0.0)

    def test_sampled_round_trip(self):
        x = np.linspace(0.0, 20.0, 101)
        fx = 0.7 * np.exp(-x)
        t = np.linspace(-2.0, 0.0, 41)
        ht = 0.7 + 0.1 * t * (t + 2.0)
        data = dfx.InitialData.from_samples(x, fx, t, ht, tau=2.0)
        assert abs(data.f(np.array([0.0]))[0] - 0.7) < 1e-15
        assert abs(data.h(np.array([-1.0]))[0] - (0.7 - 0.1)) < 1e-12
        assert abs(data.sup_f - 0.7) < 1e-15

    def test_history_underrun(self):
        x = np.linspace(0.0, 20.0, 51)
        fx = np.exp(-x)
        t = np.linspace(-0.5, 0.0, 11)   # does not reach -tau = -1
        with pytest.raises(ParameterError, match="cover"):
            dfx.InitialData.from_samples(x, fx, t, np.ones_like(t), tau=1.0)

    def test_x_column_validated(self):
        x = np.array([0.5, 1.0, 2.0])    # must start at 0
        with pytest.raises(ParameterError):
            dfx.InitialData.from_samples(x, np.ones(3), None, None, tau=0.0)

    def test_steady_factory(self):
        params = dfx.ModelParams(alpha=1.5, m=4, tau=1.0)
        data = dfx.InitialData.steady(params, bump=0.1)
        c = dfx.steady_state_c(1.5, 4)
        assert abs(data.f(np.array([0.0]))[0] - c) < 1e-14
        assert abs(data.h(np.array([-0.3]))[0] - c) < 1e-14
        assert data.sup_f >= c
