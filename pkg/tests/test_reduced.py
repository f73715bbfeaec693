import math

import numpy as np
import pytest
import scipy.special

from spinwell.reduced import (
    FixedPointFamily,
    ReducedParams,
    ReducedState,
    Regime,
    analytic_magnetization,
    analytic_period,
    classify_regime,
    conserved_quantity,
    elliptic_k,
    fixed_points,
    integrate_reduced,
    jacobi_cn_dn,
    jacobian,
    reduced_rhs,
    stability_eigenvalues,
    trajectory_relation_r0,
)

TRAPPED = ReducedParams(0.001, -0.01)
OSCILLATING = ReducedParams(0.0051, -0.01)

# independent high-precision references (30-digit arithmetic)
K_02 = 1.58686784745416623730800803383
K_04 = 1.63999986586451120686525832975
TAU_TRAPPED = 317.373569490833247461601606766
TAU_OSC = 1188.42325864877659846518884459
MIN_M_TRAPPED = 0.979795897113271239278913629882


def elliptic_k_series(k: float, n_terms: int = 60) -> float:
    """Ascending hypergeometric series for K, valid for small modulus."""
    m = k * k
    total = 0.0
    coeff = 1.0
    for n in range(n_terms):
        if n > 0:
            coeff *= ((2 * n - 1) / (2 * n)) ** 2 * m
        total += coeff
    return math.pi / 2.0 * total


def elliptic_k_asymptote(k: float) -> float:
    """Logarithmic expansion of K about k = 1, through (k')^6 terms."""
    kp2 = (1.0 - k) * (1.0 + k)
    lam = math.log(4.0 / math.sqrt(kp2))
    return (
        lam
        + 0.25 * kp2 * (lam - 1.0)
        + (9.0 / 64.0) * kp2**2 * (lam - 7.0 / 6.0)
        + (25.0 / 256.0) * kp2**3 * (lam - 37.0 / 30.0)
    )


class TestReducedRhs:
    def test_center_fixed_point(self):
        d = reduced_rhs(ReducedState(0.0, 0.37, 0.0), TRAPPED)
        assert d.as_array().tolist() == [0.0, 0.0, 0.0]

    def test_direct_substitution(self):
        d = reduced_rhs(ReducedState(1.0, 0.0, 0.0), TRAPPED)
        assert d.m == 0.0
        assert d.r0 == 0.0
        assert abs(d.i0 + 0.001) < 1e-18

    def test_second_family_fixed_point(self):
        r0 = TRAPPED.j / (2.0 * TRAPPED.lambda_a)
        for m in (-0.9, 0.2, 1.0):
            d = reduced_rhs(ReducedState(m, r0, 0.0), TRAPPED)
            assert np.linalg.norm(d.as_array()) < 1e-18


class TestConservedQuantity:
    def test_polar_start(self):
        assert conserved_quantity(ReducedState(1.0, 0.0, 0.0)) == 0.25
        assert conserved_quantity(ReducedState(0.0, 0.5, 0.0)) == 0.25

    def test_constant_along_flow(self):
        traj = integrate_reduced(
            ReducedState(1.0, 0.0, 0.0), OSCILLATING, TAU_OSC * 3.0, 0.5
        )
        assert np.max(np.abs(traj.conserved - 0.25)) < 1e-10


class TestEllipticK:
    def test_k_zero(self):
        assert abs(elliptic_k(0.0) - math.pi / 2.0) < 1e-15

    def test_against_reference_values(self):
        assert abs(elliptic_k(0.2) - K_02) < 1e-15
        assert abs(elliptic_k(0.4) - K_04) < 1e-15

    def test_against_ascending_series(self):
        for k in np.linspace(0.0, 0.3, 16):
            assert abs(elliptic_k(float(k)) - elliptic_k_series(float(k))) < 1e-12

    def test_against_log_asymptote(self):
        for k in (0.99, 0.995, 0.999, 0.9999):
            assert abs(elliptic_k(k) - elliptic_k_asymptote(k)) < 1e-6

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            elliptic_k(1.0)
        with pytest.raises(ValueError):
            elliptic_k(-0.1)


class TestJacobiCnDn:
    def test_u_zero(self):
        assert jacobi_cn_dn(0.0, 0.5) == (1.0, 1.0)

    def test_degenerate_modulus(self):
        for u in np.linspace(0.0, 10.0, 31):
            cn, dn = jacobi_cn_dn(float(u), 0.0)
            assert abs(cn - math.cos(u)) < 1e-13
            assert dn == 1.0

    def test_periodicity(self):
        for k in (0.3, 0.7, 0.95):
            period = 4.0 * elliptic_k(k)
            for u in (0.0, 1.3, 2.9):
                cn1, dn1 = jacobi_cn_dn(u, k)
                cn2, dn2 = jacobi_cn_dn(u + period, k)
                assert abs(cn1 - cn2) < 1e-10
                assert abs(dn1 - dn2) < 1e-10

    def test_range_bounds(self):
        for k in (0.2, 0.8, 0.99):
            kp = math.sqrt(1.0 - k * k)
            for u in np.linspace(-20, 20, 101):
                cn, dn = jacobi_cn_dn(float(u), k)
                assert abs(cn) <= 1.0 + 1e-12
                assert kp - 1e-12 <= dn <= 1.0 + 1e-12

    def test_against_scipy(self):
        for k in (0.1, 0.5, 0.8, 0.98):
            for u in np.linspace(-8, 8, 41):
                cn, dn = jacobi_cn_dn(float(u), k)
                _, cn_ref, dn_ref, _ = scipy.special.ellipj(u, k * k)
                assert abs(cn - cn_ref) < 1e-12
                assert abs(dn - dn_ref) < 1e-12

    def test_frozen_reference_point(self):
        cn, dn = jacobi_cn_dn(2.7, 0.8)
        assert abs(cn - (-0.430205805624518708459504028455)) < 1e-14
        assert abs(dn - 0.691700298195357402145241368854) < 1e-14

    def test_domain_error(self):
        with pytest.raises(ValueError):
            jacobi_cn_dn(1.0, 1.0)


class TestAnalyticPeriod:
    def test_trapped_branch(self):
        assert abs(analytic_period(TRAPPED) - TAU_TRAPPED) < 1e-10

    def test_oscillating_branch(self):
        assert abs(analytic_period(OSCILLATING) - TAU_OSC) < 1e-9

    def test_linear_rabi_limit(self):
        assert abs(analytic_period(ReducedParams(0.01, 0.0)) - math.pi / 0.01) < 1e-12

    def test_critical_divergence(self):
        with pytest.raises(ValueError, match="critical"):
            analytic_period(ReducedParams(0.005, -0.01))

    def test_sign_invariance(self):
        assert analytic_period(ReducedParams(0.003, -0.01)) == analytic_period(
            ReducedParams(0.003, 0.01)
        )


class TestAnalyticMagnetization:
    def test_initial_value(self):
        assert analytic_magnetization(0.0, TRAPPED) == 1.0
        assert analytic_magnetization(0.0, OSCILLATING) == 1.0

    def test_trapped_turning_point(self):
        ts = np.linspace(0.0, TAU_TRAPPED, 4001)
        m = np.array([analytic_magnetization(float(t), TRAPPED) for t in ts])
        assert abs(m.min() - MIN_M_TRAPPED) < 1e-8
        assert abs(m.max() - 1.0) < 1e-12

    def test_full_oscillation_half_period(self):
        m_half = analytic_magnetization(TAU_OSC / 2.0, OSCILLATING)
        assert abs(m_half + 1.0) < 1e-8

    def test_satisfies_reduced_ode(self):
        # M'' = 4 J dI0/dt with R0 eliminated through the trajectory relation
        for p in (TRAPPED, OSCILLATING):
            h = 1e-4
            for t in np.linspace(3.0, 500.0, 40):
                m0 = analytic_magnetization(t - h, p)
                m1 = analytic_magnetization(t, p)
                m2 = analytic_magnetization(t + h, p)
                second = (m0 - 2.0 * m1 + m2) / h**2
                r0 = trajectory_relation_r0(m1, p)
                expected = 4.0 * p.j * (2.0 * p.lambda_a * r0 - p.j) * m1
                assert abs(second - expected) < 1e-6

    def test_matches_integrated_flow(self):
        for p, tau in ((TRAPPED, TAU_TRAPPED), (OSCILLATING, TAU_OSC)):
            traj = integrate_reduced(ReducedState(1.0, 0.0, 0.0), p, tau, tau / 500)
            m_exact = np.array(
                [analytic_magnetization(float(t), p) for t in traj.times]
            )
            assert np.max(np.abs(traj.m - m_exact)) < 1e-8


class TestClassifyRegime:
    def test_examples(self):
        assert classify_regime(TRAPPED) is Regime.SELF_TRAPPED
        assert classify_regime(OSCILLATING) is Regime.FULL_OSCILLATION
        assert classify_regime(ReducedParams(0.005, -0.01)) is Regime.CRITICAL


class TestFixedPoints:
    def test_second_family_location(self):
        reports = fixed_points(TRAPPED)
        second = [r for r in reports if r.family is FixedPointFamily.SECOND]
        assert second
        for r in second:
            assert abs(r.location.r0 - (-0.05)) < 1e-15

    def test_second_family_absent_for_large_j(self):
        reports = fixed_points(ReducedParams(0.02, -0.01))
        assert all(r.family is FixedPointFamily.CENTER for r in reports)

    def test_lambda_a_zero(self):
        reports = fixed_points(ReducedParams(0.01, 0.0))
        assert all(r.family is FixedPointFamily.CENTER for r in reports)

    def test_reported_points_are_fixed(self):
        for r in fixed_points(TRAPPED):
            d = reduced_rhs(r.location, TRAPPED)
            assert np.linalg.norm(d.as_array()) < 1e-12


class TestJacobianAndStability:
    def test_center_eigenvalues(self):
        p = TRAPPED
        for r0 in (-0.3, 0.0, 0.4):
            ev = np.sort_complex(stability_eigenvalues(ReducedState(0.0, r0, 0.0), p))
            root = 4.0 * p.j * (2.0 * p.lambda_a * r0 - p.j)
            expected = np.sort_complex(
                np.array([0.0, np.sqrt(complex(root)), -np.sqrt(complex(root))])
            )
            assert np.max(np.abs(ev - expected)) < 1e-12
            if 2.0 * p.lambda_a * r0 < p.j:
                assert np.max(np.abs(ev.real)) < 1e-12  # purely imaginary pair

    def test_second_family_eigenvalues(self):
        p = TRAPPED
        r0 = p.j / (2.0 * p.lambda_a)
        for m in (0.2, -0.7):
            ev = stability_eigenvalues(ReducedState(m, r0, 0.0), p)
            expected = {0.0, 2.0 * abs(p.lambda_a * m), -2.0 * abs(p.lambda_a * m)}
            assert np.max(np.abs(np.sort(ev.real))) < 1e-14
            assert set(np.round(np.sort(ev.imag), 12)) == {
                round(v, 12) for v in sorted([-2.0 * abs(p.lambda_a * m), 0.0, 2.0 * abs(p.lambda_a * m)])
            }

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(21)
        h = 1e-6
        for _ in range(100):
            s = rng.uniform(-1.0, 1.0, size=3)
            state = ReducedState(*s)
            jac = jacobian(state, OSCILLATING)
            fd = np.empty((3, 3))
            for col in range(3):
                sp = s.copy()
                sm = s.copy()
                sp[col] += h
                sm[col] -= h
                fp = reduced_rhs(ReducedState(*sp), OSCILLATING).as_array()
                fm = reduced_rhs(ReducedState(*sm), OSCILLATING).as_array()
                fd[:, col] = (fp - fm) / (2.0 * h)
            assert np.max(np.abs(jac - fd)) < 1e-6


class TestTrajectoryRelation:
    def test_edge_values(self):
        assert trajectory_relation_r0(1.0, OSCILLATING) == 0.0
        assert trajectory_relation_r0(-1.0, OSCILLATING) == 0.0

    def test_midpoint(self):
        val = trajectory_relation_r0(0.0, OSCILLATING)
        assert abs(val - (-0.01 / (4 * 0.0051))) < 1e-15
        assert abs(val - (-0.49019607843137253)) < 1e-15

    def test_holds_along_flow(self):
        traj = integrate_reduced(
            ReducedState(1.0, 0.0, 0.0), OSCILLATING, TAU_OSC, 0.5
        )
        expected = np.array([trajectory_relation_r0(m, OSCILLATING) for m in traj.m])
        assert np.max(np.abs(traj.r0 - expected)) < 1e-9


class TestIntegrateReduced:
    def test_measured_period_matches_analytic(self):
        from spinwell.analysis import measure_period

        for p, tau in ((TRAPPED, TAU_TRAPPED), (OSCILLATING, TAU_OSC)):
            traj = integrate_reduced(ReducedState(1.0, 0.0, 0.0), p, 3.3 * tau, tau / 800)
            est = measure_period(traj, "M")
            assert abs(est.period - tau) / tau < 1e-3

    def test_stays_on_level_set(self):
        # closed paths: C constant for generic physical initial conditions
        p = ReducedParams(0.02, -0.01)
        s0 = ReducedState(0.6, -0.3, 0.0)
        traj = integrate_reduced(s0, p, 500.0, 0.25)
        c0 = conserved_quantity(s0)
        assert np.max(np.abs(traj.conserved - c0)) < 1e-10

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            ReducedParams(-0.001, -0.01)
        with pytest.raises(ValueError):
            ReducedParams(0.0, -0.01)
