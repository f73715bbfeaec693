"""Reduced three-variable Bloch system for the well magnetization, its fixed
points and conserved quantity, and the analytic solution machinery: complete
elliptic integral K via the arithmetic-geometric mean, Jacobi cn/dn via the
descending Landen recursion, oscillation period and closed-form magnetization.

Elliptic-integral arguments use the modulus convention: K(k), not K(m=k^2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numba as nb
import numpy as np

_AGM_RTOL = 1e-15


@dataclass(frozen=True)
class ReducedParams:
    """Tunnelling strength j > 0 and spin-asymmetric interaction lambda_a."""

    j: float
    lambda_a: float

    def __post_init__(self):
        if not (math.isfinite(self.j) and self.j > 0.0):
            raise ValueError(f"j must be finite and positive, got {self.j!r}")
        if not math.isfinite(self.lambda_a):
            raise ValueError("lambda_a must be finite")


@dataclass(frozen=True)
class ReducedState:
    """(M, R0, I0): magnetization and the real/imag parts of rho(+,-)."""

    m: float
    r0: float
    i0: float

    def as_array(self) -> np.ndarray:
        return np.array([self.m, self.r0, self.i0], dtype=float)

    @classmethod
    def from_array(cls, a) -> "ReducedState":
        a = np.asarray(a, dtype=float).reshape(3)
        return cls(float(a[0]), float(a[1]), float(a[2]))


def reduced_rhs(s: ReducedState, p: ReducedParams) -> ReducedState:
    """(dM/dt, dR0/dt, dI0/dt) of the magnetization Bloch system."""
    return ReducedState(
        m=4.0 * p.j * s.i0,
        r0=-2.0 * p.lambda_a * s.i0 * s.m,
        i0=2.0 * p.lambda_a * s.r0 * s.m - p.j * s.m,
    )


def conserved_quantity(s: ReducedState) -> float:
    """First integral C = R0^2 + I0^2 + M^2/4 of the reduced flow."""
    return s.r0**2 + s.i0**2 + 0.25 * s.m**2


def trajectory_relation_r0(m: float, p: ReducedParams) -> float:
    """R0 on the trajectory through M=1, R0=I0=0: lambda_a (1 - M^2) / (4 J)."""
    return p.lambda_a * (1.0 - m * m) / (4.0 * p.j)


def elliptic_k(k: float) -> float:
    """Complete elliptic integral of the first kind, modulus convention.

    K(k) = pi / (2 agm(1, sqrt(1 - k^2))); diverges as k -> 1.
    """
    if not (0.0 <= k < 1.0):
        raise ValueError(f"modulus must satisfy 0 <= k < 1, got {k!r}")
    a = 1.0
    g = math.sqrt(1.0 - k * k)
    while abs(a - g) > _AGM_RTOL * a:
        a, g = 0.5 * (a + g), math.sqrt(a * g)
    return math.pi / (2.0 * a)


def jacobi_cn_dn(u: float, k: float) -> tuple[float, float]:
    """Jacobi elliptic cn(u, k) and dn(u, k), modulus convention.

    Descending AGM/Landen recursion; exact degenerate case cn = cos, dn = 1
    at k = 0.
    """
    if not (0.0 <= k < 1.0):
        raise ValueError(f"modulus must satisfy 0 <= k < 1, got {k!r}")
    if k == 0.0:
        return math.cos(u), 1.0
    a = [1.0]
    c = [k]
    g = math.sqrt(1.0 - k * k)
    n = 0
    while abs(c[n]) > _AGM_RTOL * a[n] and n < 60:
        a.append(0.5 * (a[n] + g))
        c.append(0.5 * (a[n] - g))
        g = math.sqrt(a[n] * g)
        n += 1
    phi = (2.0**n) * a[n] * u
    for m in range(n, 0, -1):
        s = max(-1.0, min(1.0, c[m] / a[m] * math.sin(phi)))
        phi = 0.5 * (phi + math.asin(s))
    sn = math.sin(phi)
    cn = math.cos(phi)
    dn = math.sqrt(max(0.0, 1.0 - (k * sn) ** 2))
    return cn, dn


class Regime(enum.Enum):
    SELF_TRAPPED = "SelfTrapped"
    CRITICAL = "Critical"
    FULL_OSCILLATION = "FullOscillation"


_CRITICAL_ATOL = 1e-12


def classify_regime(p: ReducedParams) -> Regime:
    """Self-trapped iff 2J < |lambda_a|; critical at equality (within 1e-12)."""
    gap = 2.0 * p.j - abs(p.lambda_a)
    if abs(gap) <= _CRITICAL_ATOL:
        return Regime.CRITICAL
    return Regime.SELF_TRAPPED if gap < 0.0 else Regime.FULL_OSCILLATION


def analytic_period(p: ReducedParams) -> float:
    """Oscillation period of the reduced system for the M(0)=1, R0=I0=0 start.

    2 K(2J/|l_a|)/|l_a| below the critical coupling, 4 K(|l_a|/2J)/(2J) above;
    reduces to the linear Rabi period pi/J when lambda_a = 0.
    """
    if p.lambda_a == 0.0:
        return math.pi / p.j
    la = abs(p.lambda_a)
    regime = classify_regime(p)
    if regime is Regime.CRITICAL:
        raise ValueError(
            "period diverges at the critical coupling 2J = |lambda_a|"
        )
    if regime is Regime.SELF_TRAPPED:
        return 2.0 * elliptic_k(2.0 * p.j / la) / la
    return 4.0 * elliptic_k(la / (2.0 * p.j)) / (2.0 * p.j)


def analytic_magnetization(t: float, p: ReducedParams) -> float:
    """Closed-form M(t) for the initial state M=1, R0=I0=0.

    dn(|l_a| t, 2J/|l_a|) in the self-trapped regime, cn(2J t, |l_a|/2J) in
    the oscillating regime (cos(2J t) at lambda_a = 0).
    """
    if p.lambda_a == 0.0:
        return math.cos(2.0 * p.j * t)
    la = abs(p.lambda_a)
    regime = classify_regime(p)
    if regime is Regime.CRITICAL:
        raise ValueError("no periodic solution at the critical coupling")
    if regime is Regime.SELF_TRAPPED:
        _, dn = jacobi_cn_dn(la * t, 2.0 * p.j / la)
        return dn
    cn, _ = jacobi_cn_dn(2.0 * p.j * t, la / (2.0 * p.j))
    return cn


def jacobian(s: ReducedState, p: ReducedParams) -> np.ndarray:
    """Analytic Jacobian of reduced_rhs in variable order (M, R0, I0)."""
    la = p.lambda_a
    return np.array(
        [
            [0.0, 0.0, 4.0 * p.j],
            [-2.0 * la * s.i0, 0.0, -2.0 * la * s.m],
            [2.0 * la * s.r0 - p.j, 2.0 * la * s.m, 0.0],
        ]
    )


def stability_eigenvalues(s: ReducedState, p: ReducedParams) -> np.ndarray:
    """Eigenvalues of the linearization at s (three complex numbers)."""
    return np.linalg.eigvals(jacobian(s, p))


class FixedPointFamily(enum.Enum):
    CENTER = "CenterFamily"
    SECOND = "SecondFamily"


@dataclass(frozen=True)
class FixedPointReport:
    location: ReducedState
    family: FixedPointFamily
    eigenvalues: np.ndarray


def fixed_points(p: ReducedParams) -> list[FixedPointReport]:
    """Representative members of the fixed-point families.

    The center family (I0 = M = 0, any R0) always exists and is reported at
    R0 in {0, +-1/2}.  The second family (I0 = 0, R0 = J/(2 lambda_a), any M)
    exists iff J <= |lambda_a| so that |R0| <= 1/2 is realizable; reported at
    M in {0, +-1/2}.
    """
    reports = []
    for r0 in (0.0, 0.5, -0.5):
        loc = ReducedState(0.0, r0, 0.0)
        reports.append(_checked_report(loc, FixedPointFamily.CENTER, p))
    if p.lambda_a != 0.0 and p.j <= abs(p.lambda_a):
        r0_star = p.j / (2.0 * p.lambda_a)
        for m in (0.0, 0.5, -0.5):
            loc = ReducedState(m, r0_star, 0.0)
            reports.append(_checked_report(loc, FixedPointFamily.SECOND, p))
    return reports


def _checked_report(loc: ReducedState, family: FixedPointFamily, p: ReducedParams) -> FixedPointReport:
    d = reduced_rhs(loc, p).as_array()
    res = float(np.linalg.norm(d))
    if res >= 1e-12:
        raise AssertionError(f"reported fixed point has residual {res:g}")
    return FixedPointReport(loc, family, stability_eigenvalues(loc, p))


# ---------------------------------------------------------------------------
# Direct integration of the reduced system (embedded 4(5) pair, PI control).

@nb.njit(cache=True, nogil=True)
def _reduced_rhs_nb(y, j, la, out):
    out[0] = 4.0 * j * y[2]
    out[1] = -2.0 * la * y[2] * y[0]
    out[2] = 2.0 * la * y[1] * y[0] - j * y[0]


@nb.njit(cache=True, nogil=True)
def _integrate_reduced_nb(y0, t_grid, j, la, rtol, atol, h0, h_min):
    n_out = t_grid.shape[0]
    out = np.empty((n_out, 3))
    out[0] = y0
    y = y0.copy()
    k1 = np.empty(3); k2 = np.empty(3); k3 = np.empty(3)
    k4 = np.empty(3); k5 = np.empty(3); k6 = np.empty(3)
    k7 = np.empty(3); ytmp = np.empty(3); y5 = np.empty(3)
    t = t_grid[0]
    h = h0
    err_prev = 1.0
    have_k1 = False
    for idx in range(1, n_out):
        t_next = t_grid[idx]
        while t < t_next:
            rem = t_next - t
            clamped = h >= rem
            h_step = rem if clamped else h
            if not clamped and h_step < h_min:
                return out, 1, t, idx - 1
            if not have_k1:
                _reduced_rhs_nb(y, j, la, k1)
                have_k1 = True
            for i in range(3):
                ytmp[i] = y[i] + h_step * 0.2 * k1[i]
            _reduced_rhs_nb(ytmp, j, la, k2)
            for i in range(3):
                ytmp[i] = y[i] + h_step * (3.0 / 40.0 * k1[i] + 9.0 / 40.0 * k2[i])
            _reduced_rhs_nb(ytmp, j, la, k3)
            for i in range(3):
                ytmp[i] = y[i] + h_step * (44.0 / 45.0 * k1[i] - 56.0 / 15.0 * k2[i] + 32.0 / 9.0 * k3[i])
            _reduced_rhs_nb(ytmp, j, la, k4)
            for i in range(3):
                ytmp[i] = y[i] + h_step * (
                    19372.0 / 6561.0 * k1[i] - 25360.0 / 2187.0 * k2[i]
                    + 64448.0 / 6561.0 * k3[i] - 212.0 / 729.0 * k4[i]
                )
            _reduced_rhs_nb(ytmp, j, la, k5)
            for i in range(3):
                ytmp[i] = y[i] + h_step * (
                    9017.0 / 3168.0 * k1[i] - 355.0 / 33.0 * k2[i]
                    + 46732.0 / 5247.0 * k3[i] + 49.0 / 176.0 * k4[i]
                    - 5103.0 / 18656.0 * k5[i]
                )
            _reduced_rhs_nb(ytmp, j, la, k6)
            for i in range(3):
                y5[i] = y[i] + h_step * (
                    35.0 / 384.0 * k1[i] + 500.0 / 1113.0 * k3[i]
                    + 125.0 / 192.0 * k4[i] - 2187.0 / 6784.0 * k5[i]
                    + 11.0 / 84.0 * k6[i]
                )
            _reduced_rhs_nb(y5, j, la, k7)
            err = 0.0
            for i in range(3):
                e = h_step * (
                    71.0 / 57600.0 * k1[i] - 71.0 / 16695.0 * k3[i]
                    + 71.0 / 1920.0 * k4[i] - 17253.0 / 339200.0 * k5[i]
                    + 22.0 / 525.0 * k6[i] - 1.0 / 40.0 * k7[i]
                )
                sc = atol + rtol * max(abs(y[i]), abs(y5[i]))
                q = e / sc
                err += q * q
            err = math.sqrt(err / 3.0)
            if not math.isfinite(err):
                return out, 2, t, idx - 1
            if err <= 1.0:
                t = t_next if clamped else t + h_step
                for i in range(3):
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
    return out, 0, t, n_out - 1


@dataclass
class ReducedTrajectory:
    """Uniformly sampled reduced flow with its conserved-quantity ledger."""

    times: np.ndarray
    m: np.ndarray
    r0: np.ndarray
    i0: np.ndarray

    @property
    def conserved(self) -> np.ndarray:
        return self.r0**2 + self.i0**2 + 0.25 * self.m**2

    @property
    def theta(self) -> np.ndarray:
        return np.arctan2(self.i0, self.r0)

    def column(self, name: str) -> np.ndarray:
        cols = {"M": self.m, "R0": self.r0, "I0": self.i0,
                "theta": self.theta, "C": self.conserved, "t": self.times}
        if name not in cols:
            raise KeyError(f"unknown column {name!r}; valid: {sorted(cols)}")
        return cols[name]


class ReducedIntegrationError(RuntimeError):
    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (t reached: {t_reached:g})")
        self.t_reached = t_reached


def sample_grid(t_max: float, sample_dt: float) -> np.ndarray:
    """Uniform grid 0, dt, 2dt, ... t_max (last interval may be short)."""
    if t_max <= 0 or sample_dt <= 0:
        raise ValueError("t_max and sample_dt must be positive")
    n_full = int(math.floor(t_max / sample_dt + 1e-9))
    grid = sample_dt * np.arange(n_full + 1, dtype=float)
    if grid[-1] < t_max - 1e-9 * sample_dt:
        grid = np.append(grid, t_max)
    return grid


def integrate_reduced(
    state0: ReducedState,
    params: ReducedParams,
    t_max: float,
    sample_dt: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> ReducedTrajectory:
    """Integrate the reduced Bloch system on a uniform sample grid."""
    grid = sample_grid(t_max, sample_dt)
    y0 = state0.as_array()
    out, status, t_reached, _ = _integrate_reduced_nb(
        y0, grid, params.j, params.lambda_a, rtol, atol, min(sample_dt, 1e-3), 1e-14
    )
    if status == 1:
        raise ReducedIntegrationError("step size underflow", t_reached)
    if status == 2:
        raise ReducedIntegrationError("non-finite state", t_reached)
    return ReducedTrajectory(times=grid, m=out[:, 0], r0=out[:, 1], i0=out[:, 2])
