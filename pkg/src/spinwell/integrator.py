"""Time integration of the six-amplitude two-well system.

Adaptive embedded Dormand-Prince 4(5) pair with PI step-size control is the
default; a classical fixed-step RK4 is kept for convergence studies.  Samples
are produced exactly on a uniform output grid by splitting steps at sample
times (no interpolation).

The stiff part of the problem is a global phase rotation at rate roughly
eps + lambda_s.  integrate() removes a constant phase rate mu0 (an exact
change of variables) before stepping and restores the phase exp(-i mu0 t) on
the sampled amplitudes, so step sizes track the slow tunnelling/spin-mixing
dynamics instead of the fast phase.  Conserved quantities are monitored, not
enforced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .model import (
    Observables,
    SpinorPair,
    SystemParams,
    energy,
    observables,
)
from .reduced import sample_grid


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances, step bounds and the uniform output grid."""

    t_max: float
    sample_dt: float
    rtol: float = 1e-10
    atol: float = 1e-12
    dt_init: float = 1e-3
    dt_min: float = 1e-14
    gauge_shift: float | None = None  # None: remove mean(eps) + mean(lambda_s) automatically

    def __post_init__(self):
        if not (self.rtol > 0.0 and self.atol > 0.0):
            raise ValueError("rtol and atol must be positive")
        if not self.dt_min < self.dt_init:
            raise ValueError("dt_min must be smaller than dt_init")
        if not self.sample_dt > 0.0:
            raise ValueError("sample_dt must be positive")
        if not self.t_max > 0.0:
            raise ValueError("t_max must be positive")


class IntegrationError(RuntimeError):
    """Integration failure carrying the time reached."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (t reached: {t_reached:g})")
        self.t_reached = t_reached


@nb.njit(cache=True, nogil=True, inline="always")
def _rhs6(y, p, out):
    # p = (eps_l, eps_r, ls_l, ls_r, la_l, la_r, j); y = (xi, eta) packed
    for w in range(2):
        o = 3 * w
        f0 = y[o]
        f1 = y[o + 1]
        f2 = y[o + 2]
        n = (
            (f0 * f0.conjugate()).real
            + (f1 * f1.conjugate()).real
            + (f2 * f2.conjugate()).real
        )
        th = 2.0 * f0 * f2 - f1 * f1
        a = p[w] + (p[2 + w] + p[4 + w]) * n
        la = p[4 + w]
        j = p[6]
        out[o] = -1j * (a * f0 - la * th * f2.conjugate() + j * y[3 - o])
        out[o + 1] = -1j * (a * f1 + la * th * f1.conjugate() + j * y[4 - o])
        out[o + 2] = -1j * (a * f2 - la * th * f0.conjugate() + j * y[5 - o])


@nb.njit(cache=True, nogil=True)
def _integrate6_nb(y0, t_grid, p, rtol, atol, h0, h_min):
    n_out = t_grid.shape[0]
    out = np.empty((n_out, 6), np.complex128)
    out[0] = y0
    y = y0.copy()
    k1 = np.empty(6, np.complex128); k2 = np.empty(6, np.complex128)
    k3 = np.empty(6, np.complex128); k4 = np.empty(6, np.complex128)
    k5 = np.empty(6, np.complex128); k6 = np.empty(6, np.complex128)
    k7 = np.empty(6, np.complex128); ytmp = np.empty(6, np.complex128)
    y5 = np.empty(6, np.complex128)
    t = t_grid[0]
    h = h0
    err_prev = 1.0
    n_steps = 0
    have_k1 = False
    for idx in range(1, n_out):
        t_next = t_grid[idx]
        while t < t_next:
            rem = t_next - t
            clamped = h >= rem
            h_step = rem if clamped else h
            if not clamped and h_step < h_min:
                return out, 1, t, idx - 1, n_steps
            if not have_k1:
                _rhs6(y, p, k1)
                have_k1 = True
            for i in range(6):
                ytmp[i] = y[i] + h_step * 0.2 * k1[i]
            _rhs6(ytmp, p, k2)
            for i in range(6):
                ytmp[i] = y[i] + h_step * (3.0 / 40.0 * k1[i] + 9.0 / 40.0 * k2[i])
            _rhs6(ytmp, p, k3)
            for i in range(6):
                ytmp[i] = y[i] + h_step * (
                    44.0 / 45.0 * k1[i] - 56.0 / 15.0 * k2[i] + 32.0 / 9.0 * k3[i]
                )
            _rhs6(ytmp, p, k4)
            for i in range(6):
                ytmp[i] = y[i] + h_step * (
                    19372.0 / 6561.0 * k1[i] - 25360.0 / 2187.0 * k2[i]
                    + 64448.0 / 6561.0 * k3[i] - 212.0 / 729.0 * k4[i]
                )
            _rhs6(ytmp, p, k5)
            for i in range(6):
                ytmp[i] = y[i] + h_step * (
                    9017.0 / 3168.0 * k1[i] - 355.0 / 33.0 * k2[i]
                    + 46732.0 / 5247.0 * k3[i] + 49.0 / 176.0 * k4[i]
                    - 5103.0 / 18656.0 * k5[i]
                )
            _rhs6(ytmp, p, k6)
            for i in range(6):
                y5[i] = y[i] + h_step * (
                    35.0 / 384.0 * k1[i] + 500.0 / 1113.0 * k3[i]
                    + 125.0 / 192.0 * k4[i] - 2187.0 / 6784.0 * k5[i]
                    + 11.0 / 84.0 * k6[i]
                )
            _rhs6(y5, p, k7)
            err = 0.0
            for i in range(6):
                e = h_step * (
                    71.0 / 57600.0 * k1[i] - 71.0 / 16695.0 * k3[i]
                    + 71.0 / 1920.0 * k4[i] - 17253.0 / 339200.0 * k5[i]
                    + 22.0 / 525.0 * k6[i] - 1.0 / 40.0 * k7[i]
                )
                sc = atol + rtol * max(abs(y[i]), abs(y5[i]))
                q = abs(e) / sc
                err += q * q
            err = math.sqrt(err / 6.0)
            if not math.isfinite(err):
                return out, 2, t, idx - 1, n_steps
            n_steps += 1
            if err <= 1.0:
                t = t_next if clamped else t + h_step
                for i in range(6):
                    y[i] = y5[i]
                    k1[i] = k7[i]  # FSAL
                fac = 0.9 * err ** -0.17 * err_prev ** 0.04 if err > 1e-300 else 5.0
                err_prev = max(err, 1e-10)
            else:
                # rejected: y unchanged, k1 still valid
                fac = max(0.2, min(1.0, 0.9 * err ** -0.2))
            if fac > 5.0:
                fac = 5.0
            if fac < 0.2:
                fac = 0.2
            h = h_step * fac
            if h > 1e12:
                h = 1e12
        out[idx] = y
    return out, 0, t, n_out - 1, n_steps


@nb.njit(cache=True, nogil=True)
def _rk4_loop_nb(y0, p, dt, n_steps, stride):
    n_out = n_steps // stride + 1
    out = np.empty((n_out, 6), np.complex128)
    out[0] = y0
    y = y0.copy()
    k1 = np.empty(6, np.complex128); k2 = np.empty(6, np.complex128)
    k3 = np.empty(6, np.complex128); k4 = np.empty(6, np.complex128)
    ytmp = np.empty(6, np.complex128)
    row = 1
    for s in range(1, n_steps + 1):
        _rhs6(y, p, k1)
        for i in range(6):
            ytmp[i] = y[i] + 0.5 * dt * k1[i]
        _rhs6(ytmp, p, k2)
        for i in range(6):
            ytmp[i] = y[i] + 0.5 * dt * k2[i]
        _rhs6(ytmp, p, k3)
        for i in range(6):
            ytmp[i] = y[i] + dt * k3[i]
        _rhs6(ytmp, p, k4)
        for i in range(6):
            y[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if s % stride == 0:
            out[row] = y
            row += 1
    return out[:row]


def step_fixed(state: SpinorPair, dt: float, params: SystemParams) -> SpinorPair:
    """One classical RK4 step of size dt (global error O(dt^4))."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if not state.is_finite():
        raise ValueError("non-finite spinor state")
    y = _rk4_loop_nb(state.packed, params.as_array(), dt, 1, 1)[-1]
    if not np.all(np.isfinite(y.view(float))):
        raise IntegrationError("non-finite state after fixed step", 0.0)
    return SpinorPair.from_packed(y)


def integrate_fixed(
    state0: SpinorPair,
    params: SystemParams,
    dt: float,
    n_steps: int,
    sample_stride: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-step RK4 run; returns (times, amplitudes) sampled every stride steps."""
    if dt <= 0.0 or n_steps < 1 or sample_stride < 1:
        raise ValueError("dt, n_steps and sample_stride must be positive")
    amps = _rk4_loop_nb(state0.packed, params.as_array(), dt, n_steps, sample_stride)
    times = dt * sample_stride * np.arange(amps.shape[0], dtype=float)
    return times, amps


@dataclass
class Trajectory:
    """Uniformly sampled run: amplitudes, per-well observables, conserved ledger.

    Column arrays follow the data-file schema; amplitudes are stored in the
    lab frame (any integration gauge already removed).
    """

    times: np.ndarray
    amplitudes: np.ndarray  # (n, 6) complex, (xi+, xi0, xi-, eta+, eta0, eta-)
    params: SystemParams
    n_accepted_steps: int = 0

    _cols: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        xi = self.amplitudes[:, :3]
        eta = self.amplitudes[:, 3:]
        cols = {}
        cols["t"] = self.times
        for prefix, f in (("", xi), ("eta_", eta)):
            rho_pz = f[:, 0].conj() * f[:, 1]
            rho_zm = f[:, 1].conj() * f[:, 2]
            rho_pm = f[:, 0].conj() * f[:, 2]
            cols[prefix + "M"] = np.abs(f[:, 0]) ** 2 - np.abs(f[:, 2]) ** 2
            cols[prefix + "n0"] = np.abs(f[:, 1]) ** 2
            cols[prefix + "R_plus"] = (rho_pz + rho_zm).real
            cols[prefix + "R_minus"] = (rho_pz - rho_zm).real
            cols[prefix + "I_plus"] = (rho_pz + rho_zm).imag
            cols[prefix + "I_minus"] = (rho_pz - rho_zm).imag
            cols[prefix + "R0"] = rho_pm.real
            cols[prefix + "I0"] = rho_pm.imag
            cols[prefix + "theta"] = np.arctan2(rho_pm.imag, rho_pm.real)
        norm_l = (np.abs(xi) ** 2).sum(axis=1)
        norm_r = (np.abs(eta) ** 2).sum(axis=1)
        self._cols = {
            "t": self.times,
            "M_left": cols["M"],
            "M_right": cols["eta_M"],
            "n0_left": cols["n0"],
            "n0_right": cols["eta_n0"],
            "R_plus": cols["R_plus"],
            "R_minus": cols["R_minus"],
            "I_plus": cols["I_plus"],
            "I_minus": cols["I_minus"],
            "R0": cols["R0"],
            "I0": cols["I0"],
            "theta": cols["theta"],
            "norm_left": norm_l,
            "norm_right": norm_r,
            "total_norm": norm_l + norm_r,
            "total_Fz": cols["M"] + cols["eta_M"],
            "energy": self._energy_column(xi, eta),
            "rho_pp_minus_rho00": np.abs(xi[:, 0]) ** 2 - np.abs(xi[:, 1]) ** 2,
        }

    def _energy_column(self, xi, eta) -> np.ndarray:
        p = self.params
        total = np.zeros(len(self.times))
        for f, eps, lam_s, lam_a in (
            (xi, p.eps_left, p.lambda_s_left, p.lambda_a_left),
            (eta, p.eps_right, p.lambda_s_right, p.lambda_a_right),
        ):
            n = (np.abs(f) ** 2).sum(axis=1)
            # <F_x> = sqrt(2) R_plus, <F_y> = sqrt(2) I_plus, <F_z> = M
            rp = f[:, 0].conj() * f[:, 1] + f[:, 1].conj() * f[:, 2]
            m = np.abs(f[:, 0]) ** 2 - np.abs(f[:, 2]) ** 2
            spin_sq = m**2 + 2.0 * (rp.real**2 + rp.imag**2)
            total += eps * n + 0.5 * lam_s * n**2 + 0.5 * lam_a * spin_sq
        total += 2.0 * p.j * (xi.conj() * eta).sum(axis=1).real
        return total

    # ledger / analysis accessors -------------------------------------------------
    COLUMN_NAMES = (
        "t", "M_left", "M_right", "n0_left", "n0_right",
        "R_plus", "R_minus", "I_plus", "I_minus", "R0", "I0", "theta",
        "norm_left", "norm_right", "total_norm", "total_Fz", "energy",
        "rho_pp_minus_rho00",
    )

    def column(self, name: str) -> np.ndarray:
        try:
            return self._cols[name]
        except KeyError:
            raise KeyError(
                f"unknown observable {name!r}; valid names: {sorted(self._cols)}"
            ) from None

    @property
    def r_plus(self) -> np.ndarray:
        return self._cols["R_plus"]

    @property
    def energy_series(self) -> np.ndarray:
        return self._cols["energy"]

    @property
    def total_norm(self) -> np.ndarray:
        return self._cols["total_norm"]

    @property
    def total_magnetization(self) -> np.ndarray:
        return self._cols["total_Fz"]

    def state(self, i: int) -> SpinorPair:
        return SpinorPair.from_packed(self.amplitudes[i])

    def observables_left(self, i: int) -> Observables:
        return observables(self.amplitudes[i, :3])

    def observables_right(self, i: int) -> Observables:
        return observables(self.amplitudes[i, 3:])

    def ledger_drift(self) -> dict[str, float]:
        """Max deviation of each conserved column from its initial value,
        relative to max(|initial|, 1)."""
        drift = {}
        for name in ("total_norm", "energy", "total_Fz", "R_plus"):
            col = self._cols[name]
            ref = col[0]
            drift[name] = float(np.max(np.abs(col - ref)) / max(abs(ref), 1.0))
        return drift


def default_gauge_shift(state0: SpinorPair, params: SystemParams) -> float:
    """Constant phase rate removed before stepping: mean eps plus mean
    lambda_s times the mean well occupation."""
    n_mean = 0.5 * state0.total_norm_sq()
    eps_mean = 0.5 * (params.eps_left + params.eps_right)
    ls_mean = 0.5 * (params.lambda_s_left + params.lambda_s_right)
    return eps_mean + ls_mean * n_mean


def integrate(state0: SpinorPair, params: SystemParams, cfg: IntegratorConfig) -> Trajectory:
    """Integrate the coupled two-well equations to cfg.t_max.

    Deterministic for identical inputs.  Raises IntegrationError on step-size
    underflow or a non-finite state, carrying the time reached.
    """
    if not state0.is_finite():
        raise ValueError("non-finite initial state")
    grid = sample_grid(cfg.t_max, cfg.sample_dt)
    mu0 = cfg.gauge_shift
    if mu0 is None:
        mu0 = default_gauge_shift(state0, params)
    p = params.as_array()
    p[0] -= mu0
    p[1] -= mu0
    amps, status, t_reached, _, n_steps = _integrate6_nb(
        state0.packed, grid, p, cfg.rtol, cfg.atol, cfg.dt_init, cfg.dt_min
    )
    if status == 1:
        raise IntegrationError("step size underflow", t_reached)
    if status == 2:
        raise IntegrationError("non-finite state", t_reached)
    if mu0 != 0.0:
        amps = amps * np.exp(-1j * mu0 * grid)[:, None]
    return Trajectory(times=grid, amplitudes=amps, params=params, n_accepted_steps=n_steps)
