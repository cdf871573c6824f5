import math

import numpy as np
import pytest

import delayflux as dfx
from delayflux import ParameterError
from delayflux.spectral import BRANCH_NEG, BRANCH_POS


def tau0_bisection_oracle(Q, iters=200):
    """Independent threshold oracle: bisect tan(tau*omega) + r on the bracket."""
    om = math.sqrt(Q ** 4 - 1.0)
    r = math.sqrt((Q * Q - 1.0) / (Q * Q + 1.0))
    lo, hi = math.pi / (2.0 * om), math.pi / om
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if math.tan(mid * om) + r < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestCharResidual:
    def test_real_root_at_zero_delay(self):
        for Q in (0.3, 1.0, 2.7):
            re, im = dfx.char_residual(-Q, 0.0, 0.0, Q, BRANCH_POS)
            assert re == 0.0 and im == 0.0

    def test_mirror_root_at_zero_delay(self):
        re, im = dfx.char_residual(1.0, 0.0, 0.0, 1.0, BRANCH_NEG)
        assert re == 0.0 and im == 0.0

    def test_threshold_root_both_branches(self):
        Q = 1.5941
        tau0 = tau0_bisection_oracle(Q)
        a0, b0 = dfx.crossing_pair(Q)
        rp = dfx.char_residual(a0, b0, tau0, Q, BRANCH_POS)
        rn = dfx.char_residual(-a0, b0, tau0, Q, BRANCH_NEG)
        assert math.hypot(*rp) <= 1e-8
        assert math.hypot(*rn) <= 1e-8

    def test_unknown_branch(self):
        with pytest.raises(ParameterError):
            dfx.char_residual(1.0, 0.0, 0.0, 1.0, "F_x")


class TestBracket:
    def test_forced_pi_frequency(self):
        Q = (1.0 + math.pi ** 2) ** 0.25
        lo, hi = dfx.hopf_bracket(Q)
        assert abs(lo - 0.5) < 1e-14
        assert abs(hi - 1.0) < 1e-14

    def test_hi_is_twice_lo(self, rng):
        for Q in rng.uniform(1.01, 20.0, size=50):
            lo, hi = dfx.hopf_bracket(Q)
            assert hi == 2.0 * lo

    def test_subcritical_rejected(self):
        for Q in (0.2, 1.0):
            with pytest.raises(ParameterError):
                dfx.hopf_bracket(Q)


class TestThresholdDelay:
    def test_against_bisection_oracle(self, rng):
        for Q in rng.uniform(1.01, 20.0, size=100):
            tau0 = dfx.hopf_tau0(Q)
            assert abs(tau0 - tau0_bisection_oracle(Q)) <= 1e-9
            om = math.sqrt(Q ** 4 - 1.0)
            r = math.sqrt((Q * Q - 1.0) / (Q * Q + 1.0))
            assert abs(math.tan(tau0 * om) + r) <= 1e-9
            lo, hi = dfx.hopf_bracket(Q)
            assert lo < tau0 < hi

    def test_module_bisection_agrees(self, rng):
        for Q in rng.uniform(1.01, 20.0, size=20):
            assert abs(dfx.hopf_tau0(Q) - dfx.spectral.hopf_tau0_bisect(Q)) <= 1e-9

    def test_closed_form_value(self):
        # (pi - arctan(sqrt(99/101))) / sqrt(9999)
        assert abs(dfx.hopf_tau0(10.0) - 0.023613) < 1e-6

    def test_reference_thresholds(self):
        assert abs(dfx.hopf_tau0(1.5941) - 1.0951) <= 1e-3
        assert abs(dfx.hopf_tau0(4.5484) - 0.1152) <= 1e-3


class TestCrossingPair:
    def test_degenerate_tangency(self):
        a0, b0 = dfx.crossing_pair(1.0)
        assert a0 == 1.0 and b0 == 0.0

    def test_exact_surds(self):
        a0, b0 = dfx.crossing_pair(math.sqrt(3.0))
        assert abs(a0 - math.sqrt(2.0)) < 1e-15
        assert abs(b0 - 1.0) < 1e-15

    def test_circle_and_hyperbola(self, rng):
        for Q in rng.uniform(1.0, 25.0, size=100):
            a0, b0 = dfx.crossing_pair(Q)
            assert abs(a0 * a0 + b0 * b0 - Q * Q) <= 1e-12 * max(1.0, Q * Q)
            assert abs(a0 * a0 - b0 * b0 - 1.0) <= 1e-12


class TestCrossingSpeed:
    def test_positive(self):
        for Q in (1.1, 1.5941, 3.0, 4.5484, 10.0):
            assert dfx.crossing_speed(Q) > 0

    def test_against_simplified_form(self, rng):
        # eliminating the trig terms with the root identities collapses the
        # speed to 2 omega^2 / (D1^2 + D2^2) with D1 = 1 + 2 tau0, D2 = -2 tau0 omega
        for Q in rng.uniform(1.05, 12.0, size=40):
            tau0 = dfx.hopf_tau0(Q)
            om = math.sqrt(Q ** 4 - 1.0)
            simplified = 2.0 * om * om / ((1.0 + 2.0 * tau0) ** 2 + (2.0 * tau0 * om) ** 2)
            got = dfx.crossing_speed(Q, tau0)
            assert abs(got - simplified) <= 1e-10 * simplified

    def test_against_tracked_slope(self):
        for Q in (1.5941, 4.5484, math.sqrt(3.0)):
            tau0 = dfx.hopf_tau0(Q)
            d = 1e-5
            roots = dfx.track_rightmost_root(Q, np.array([tau0 - d, tau0 + d]))
            slope = (roots[1].lambda_re - roots[0].lambda_re) / (2 * d)
            speed = dfx.crossing_speed(Q, tau0)
            assert slope > 0
            assert abs(slope - speed) <= 1e-2 * speed


class TestTracking:
    def test_subcritical_stays_left(self):
        roots = dfx.track_rightmost_root(0.5, np.linspace(0.0, 20.0, 201))
        assert all(r.converged for r in roots)
        assert all(r.lambda_re < 0 for r in roots)
        assert all(r.b == 0.0 for r in roots)

    def test_zero_delay_root(self):
        root = dfx.track_rightmost_root(0.75, np.array([0.0]))[0]
        assert abs(root.a + 0.75) < 1e-12 and root.b == 0.0

    def test_derived_eigenvalue_fields(self):
        r = dfx.CharRoot(a=1.25, b=0.5, tau=0.3)
        assert r.lambda_re == 1.25 ** 2 - 0.25 - 1.0
        assert r.lambda_im == 2.0 * 1.25 * 0.5

    def test_sign_change_brackets_threshold(self):
        Q = 1.5941
        tau0 = dfx.hopf_tau0(Q)
        grid = np.arange(0.9 * tau0, 1.1 * tau0, 1e-3)
        roots = dfx.track_rightmost_root(Q, grid)
        lam = np.array([r.lambda_re for r in roots])
        flips = np.where(np.diff(np.sign(lam)) > 0)[0]
        assert len(flips) == 1
        i = flips[0]
        assert grid[i] <= tau0 <= grid[i + 1]

    def test_tracked_points_are_roots(self):
        Q = 2.5
        tau0 = dfx.hopf_tau0(Q)
        grid = np.linspace(0.5 * tau0, 1.5 * tau0, 41)
        for r in dfx.track_rightmost_root(Q, grid):
            assert r.converged
            assert math.hypot(*dfx.char_residual(r.a, r.b, r.tau, Q, r.branch)) < 1e-9

    def test_grid_validation(self):
        with pytest.raises(ParameterError):
            dfx.track_rightmost_root(0.5, np.array([1.0, 0.5]))


class TestClassify:
    def test_reference_regimes(self):
        assert dfx.classify(0.4, 4, 15.0).regime == dfx.spectral.REGIME_STABLE_ALL
        assert dfx.classify(1.5, 4, 1.5).regime == dfx.spectral.REGIME_OSCILLATORY
        assert dfx.classify(1.5, 4, 0.5).regime == dfx.spectral.REGIME_STABLE_BELOW

    def test_marginal_gain(self):
        # alpha=2, m=2 gives c=1 and Q exactly 1
        assert dfx.classify(2.0, 2.0, 3.0).regime == dfx.spectral.REGIME_MARGINAL

    def test_threshold_recorded(self):
        v = dfx.classify(1.5, 4, 1.5)
        assert v.tau0 is not None
        assert abs(v.tau0 - 1.0951) < 1e-3
        assert dfx.classify(0.4, 4, 1.0).tau0 is None


class TestHopfAnalysis:
    def test_record_consistency(self):
        ha = dfx.hopf_analysis(1.5941)
        assert ha.bracket_lo < ha.tau0 < ha.bracket_hi
        assert abs(ha.a0 ** 2 + ha.b0 ** 2 - ha.Q ** 2) < 1e-12 * ha.Q ** 2
        assert abs(ha.a0 ** 2 - ha.b0 ** 2 - 1.0) < 1e-12
        assert ha.crossing_speed > 0
        d = ha.as_dict()
        assert set(d) == {"Q", "omega", "bracket_lo", "bracket_hi", "tau0",
                          "a0", "b0", "crossing_speed"}
