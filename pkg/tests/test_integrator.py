import math

import numpy as np
import pytest

from spinwell.integrator import (
    IntegrationError,
    IntegratorConfig,
    Trajectory,
    integrate,
    integrate_fixed,
    step_fixed,
)
from spinwell.model import SpinorPair, SystemParams, energy, spin_flip
from spinwell.reduced import ReducedParams, analytic_period

TAU_TRAPPED = 317.373569490833247461601606766  # J = 0.001, lambda_a = -0.01
TAU_OSC = 1188.42325864877659846518884459  # J = 0.0051, lambda_a = -0.01

FIG4_STATE = SpinorPair.initial((1, 0, 0), (0, 0, 1))


def linear_two_level_exact(t: float, j: float) -> SpinorPair:
    # eps = lambdas = 0: xi(t) = cos(Jt) xi0 - i sin(Jt) eta0
    c, s = math.cos(j * t), math.sin(j * t)
    xi0 = np.array([1, 0, 0], dtype=complex)
    eta0 = np.array([0, 0, 1], dtype=complex)
    return SpinorPair(c * xi0 - 1j * s * eta0, c * eta0 - 1j * s * xi0)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            IntegratorConfig(t_max=-1.0, sample_dt=0.5)
        with pytest.raises(ValueError):
            IntegratorConfig(t_max=1.0, sample_dt=0.0)
        with pytest.raises(ValueError):
            IntegratorConfig(t_max=1.0, sample_dt=0.5, rtol=0.0)
        with pytest.raises(ValueError):
            IntegratorConfig(t_max=1.0, sample_dt=0.5, dt_init=1e-15, dt_min=1e-3)


class TestStepFixed:
    def test_population_transfer_linear_problem(self):
        j = 0.01
        p = SystemParams.symmetric(0.0, 0.0, 0.0, j)
        t_half = math.pi / (2.0 * j)
        n_steps = 2000
        dt = t_half / n_steps
        state = FIG4_STATE
        _, amps = integrate_fixed(state, p, dt, n_steps, sample_stride=n_steps)
        final = amps[-1]
        # full population transfer: |xi(t)| pattern swaps wells
        assert abs(abs(final[5]) ** 2 + abs(final[2]) ** 2 - 1.0) < 1e-10
        exact = linear_two_level_exact(t_half, j).packed
        assert np.max(np.abs(final - exact)) < 1e-10

    def test_fourth_order_convergence(self):
        j = 0.01
        p = SystemParams.symmetric(0.0, 0.0, 0.0, j)
        t_end = 50.0
        errs = []
        for n in (100, 200):
            _, amps = integrate_fixed(FIG4_STATE, p, t_end / n, n, sample_stride=n)
            exact = linear_two_level_exact(t_end, j).packed
            errs.append(np.max(np.abs(amps[-1] - exact)))
        ratio = errs[0] / errs[1]
        assert 12.0 < ratio < 20.0

    def test_tiny_step_returns_input(self):
        p = SystemParams.symmetric(1.0, 1.0, -0.01, 0.001)
        out = step_fixed(FIG4_STATE, 1e-200, p)
        assert np.max(np.abs(out.packed - FIG4_STATE.packed)) < 1e-150

    def test_rejects_bad_input(self):
        p = SystemParams.symmetric(1.0, 1.0, -0.01, 0.001)
        with pytest.raises(ValueError):
            step_fixed(FIG4_STATE, -0.1, p)
        with pytest.raises(ValueError):
            step_fixed(SpinorPair((np.nan, 0, 0), (0, 0, 1)), 0.1, p)


@pytest.fixture(scope="module")
def fig4_oscillating():
    p = SystemParams.symmetric(1.0, 1.0, -0.01, 0.0051)
    cfg = IntegratorConfig(t_max=2.2 * TAU_OSC, sample_dt=TAU_OSC / 2000.0)
    return integrate(FIG4_STATE, p, cfg)


@pytest.fixture(scope="module")
def fig4_trapped():
    p = SystemParams.symmetric(1.0, 1.0, -0.01, 0.001)
    cfg = IntegratorConfig(t_max=3.2 * TAU_TRAPPED, sample_dt=TAU_TRAPPED / 2000.0)
    return integrate(FIG4_STATE, p, cfg)


class TestIntegrate:
    def test_full_oscillation_reaches_minus_one(self, fig4_oscillating):
        m = fig4_oscillating.column("M_left")
        assert m.min() <= -0.999
        assert m.max() <= 1.0 + 1e-9

    def test_self_trapped_band(self, fig4_trapped):
        m = fig4_trapped.column("M_left")
        assert 0.9797 <= m.min() <= 0.9799
        assert m.max() <= 1.0 + 1e-9

    def test_conserved_ledger(self, fig4_oscillating):
        drift = fig4_oscillating.ledger_drift()
        for name, value in drift.items():
            assert value < 1e-9, (name, value)

    def test_energy_column_matches_model_energy(self, fig4_oscillating):
        p = fig4_oscillating.params
        for i in (0, 137, 2000, -1):
            st = fig4_oscillating.state(i)
            assert abs(fig4_oscillating.energy_series[i] - energy(st, p)) < 1e-12

    def test_spin_flip_symmetric_norms(self, fig4_oscillating):
        # special state: per-well norms pinned at 1, M_left = -M_right
        norm_l = fig4_oscillating.column("norm_left")
        norm_r = fig4_oscillating.column("norm_right")
        assert np.max(np.abs(norm_l - 1.0)) < 1e-9
        assert np.max(np.abs(norm_r - 1.0)) < 1e-9
        assert np.max(
            np.abs(fig4_oscillating.column("M_left") + fig4_oscillating.column("M_right"))
        ) < 1e-9

    def test_sample_grid_structure(self):
        p = SystemParams.symmetric(1.0, 1.0, -0.01, 0.0051)
        cfg = IntegratorConfig(t_max=10.3, sample_dt=0.5)
        traj = integrate(FIG4_STATE, p, cfg)
        diffs = np.diff(traj.times)
        assert np.all(diffs > 0)
        assert np.allclose(diffs[:-1], 0.5)
        assert diffs[-1] < 0.5  # short last interval
        assert traj.times[-1] == 10.3

    def test_deterministic(self):
        p = SystemParams.symmetric(1.0, 1.0, -0.01, 0.0051)
        cfg = IntegratorConfig(t_max=200.0, sample_dt=0.5)
        a = integrate(FIG4_STATE, p, cfg)
        b = integrate(FIG4_STATE, p, cfg)
        assert np.array_equal(a.amplitudes, b.amplitudes)

    def test_r_plus_conserved_for_spin_flip_state(self):
        raw = np.array([0.9962, 0.0872, 0.0])
        xi0 = raw / np.linalg.norm(raw)
        state0 = SpinorPair.initial(xi0, spin_flip(xi0))
        p = SystemParams.symmetric(1.0, 1.0, -0.01, 0.001)
        cfg = IntegratorConfig(t_max=2000.0, sample_dt=1.0)
        traj = integrate(state0, p, cfg)
        r_plus = traj.column("R_plus")
        assert abs(r_plus[0]) > 0.05  # nontrivial reference
        assert np.max(np.abs(r_plus - r_plus[0])) < 1e-9

    def test_fixed_and_adaptive_agree(self):
        j = 0.0051
        p = SystemParams.symmetric(1.0, 1.0, -0.01, j)
        t_end = 0.5 * TAU_OSC
        cfg = IntegratorConfig(t_max=t_end, sample_dt=t_end / 100.0)
        adaptive = integrate(FIG4_STATE, p, cfg)
        dt = t_end / 237700  # fixed-step global error O(dt^4) ~ 1e-7 here
        n = 237700
        stride = n // 100
        times_f, amps_f = integrate_fixed(FIG4_STATE, p, dt, n, sample_stride=stride)
        m_fixed = np.abs(amps_f[:, 0]) ** 2 - np.abs(amps_f[:, 2]) ** 2
        m_adaptive = np.interp(times_f, adaptive.times, adaptive.column("M_left"))
        assert np.max(np.abs(m_fixed - m_adaptive)) < 3e-6

    def test_gauge_shift_is_exact_change_of_variables(self):
        p = SystemParams.symmetric(1.0, 1.0, -0.01, 0.0051)
        cfg_auto = IntegratorConfig(t_max=300.0, sample_dt=0.5)
        cfg_lab = IntegratorConfig(t_max=300.0, sample_dt=0.5, gauge_shift=0.0,
                                   rtol=1e-12, atol=1e-14)
        a = integrate(FIG4_STATE, p, cfg_auto)
        b = integrate(FIG4_STATE, p, cfg_lab)
        assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-7

    def test_underflow_failure_carries_time(self):
        p = SystemParams.symmetric(1.0, 1.0, -0.01, 0.0051)
        cfg = IntegratorConfig(
            t_max=100.0, sample_dt=1.0, gauge_shift=0.0,
            rtol=1e-13, atol=1e-15, dt_init=1.0, dt_min=0.5,
        )
        with pytest.raises(IntegrationError) as exc_info:
            integrate(FIG4_STATE, p, cfg)
        assert exc_info.value.t_reached < 100.0

    def test_rejects_non_finite_initial_state(self):
        p = SystemParams.symmetric(1.0, 1.0, -0.01, 0.0051)
        cfg = IntegratorConfig(t_max=1.0, sample_dt=0.5)
        with pytest.raises(ValueError):
            integrate(SpinorPair((np.inf, 0, 0), (0, 0, 1)), p, cfg)


class TestTrajectoryAccessors:
    def test_unknown_column(self, fig4_oscillating):
        with pytest.raises(KeyError, match="valid names"):
            fig4_oscillating.column("bogus")

    def test_observables_accessors(self, fig4_oscillating):
        o = fig4_oscillating.observables_left(0)
        assert o.m == 1.0
        o_r = fig4_oscillating.observables_right(0)
        assert o_r.m == -1.0

    def test_state_accessor(self, fig4_oscillating):
        st = fig4_oscillating.state(0)
        assert np.allclose(st.packed, FIG4_STATE.packed)
