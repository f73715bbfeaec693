"""Two-well spin-1 mean-field model: state types, spin algebra, equations of
motion, energy, collective observables and stationary-state search.

Spinor components are ordered (+, 0, -) everywhere.  Units: hbar = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SQRT2 = math.sqrt(2.0)


def as_spinor(values) -> np.ndarray:
    """Coerce to a (3,) complex array, component order (+, 0, -)."""
    f = np.asarray(values, dtype=complex).reshape(3)
    return f


def norm_sq(f: np.ndarray) -> float:
    return float(np.sum(np.abs(f) ** 2))


def spin_flip(f: np.ndarray) -> np.ndarray:
    """Exchange the +1 and -1 components: (f+, f0, f-) -> (f-, f0, f+)."""
    return np.asarray(f)[::-1].copy()


def spin_matrices():
    """Spin-1 matrices (F_x, F_y, F_z) in the (+, 0, -) basis."""
    fx = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / SQRT2
    fy = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / SQRT2
    fz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    return fx, fy, fz


def density_matrix(f) -> np.ndarray:
    """Single-particle density matrix rho_ij = f_i* f_j."""
    f = as_spinor(f)
    return np.outer(f.conj(), f)


def singlet_amplitude(f) -> complex:
    """Scalar 2 f+ f- - f0**2 driving spin mixing."""
    f = as_spinor(f)
    return complex(2.0 * f[0] * f[2] - f[1] ** 2)


@dataclass(frozen=True)
class Observables:
    """Collective variables of one well, from the single-particle density matrix."""

    m: float
    n0: float
    r_plus: float
    r_minus: float
    i_plus: float
    i_minus: float
    r0: float
    i0: float
    theta: float


def observables(f) -> Observables:
    """All collective variables of a single spinor.

    theta = atan2(i0, r0), zero when both vanish.
    """
    f = as_spinor(f)
    rho_pz = f[0].conjugate() * f[1]  # rho(+,0)
    rho_zm = f[1].conjugate() * f[2]  # rho(0,-)
    rho_pm = f[0].conjugate() * f[2]  # rho(+,-)
    r0 = rho_pm.real
    i0 = rho_pm.imag
    return Observables(
        m=float(abs(f[0]) ** 2 - abs(f[2]) ** 2),
        n0=float(abs(f[1]) ** 2),
        r_plus=float((rho_pz + rho_zm).real),
        r_minus=float((rho_pz - rho_zm).real),
        i_plus=float((rho_pz + rho_zm).imag),
        i_minus=float((rho_pz - rho_zm).imag),
        r0=float(r0),
        i0=float(i0),
        theta=math.atan2(i0, r0),
    )


@dataclass(frozen=True)
class SpinorPair:
    """Full dynamical state: left-well and right-well spinors."""

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "left", as_spinor(self.left))
        object.__setattr__(self, "right", as_spinor(self.right))

    @classmethod
    def initial(cls, left, right, tol: float = 1e-12) -> "SpinorPair":
        """Construct an initial state, enforcing unit norm of each well spinor."""
        pair = cls(left, right)
        for name, f in (("left", pair.left), ("right", pair.right)):
            n = norm_sq(f)
            if abs(n - 1.0) > tol:
                raise ValueError(
                    f"{name} spinor squared norm {n!r} differs from 1 by more than {tol:g}"
                )
        return pair

    @property
    def packed(self) -> np.ndarray:
        """Concatenated 6-vector (xi+, xi0, xi-, eta+, eta0, eta-)."""
        return np.concatenate([self.left, self.right])

    @classmethod
    def from_packed(cls, y) -> "SpinorPair":
        y = np.asarray(y, dtype=complex).reshape(6)
        return cls(y[:3], y[3:])

    def total_norm_sq(self) -> float:
        return norm_sq(self.left) + norm_sq(self.right)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.left)) and np.all(np.isfinite(self.right)))


@dataclass(frozen=True)
class SystemParams:
    """Model coefficients (hbar = 1): on-site energies, interactions, tunnelling."""

    eps_left: float
    eps_right: float
    lambda_s_left: float
    lambda_s_right: float
    lambda_a_left: float
    lambda_a_right: float
    j: float

    def __post_init__(self):
        vals = (
            self.eps_left, self.eps_right,
            self.lambda_s_left, self.lambda_s_right,
            self.lambda_a_left, self.lambda_a_right, self.j,
        )
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite system parameters: {vals}")

    @classmethod
    def symmetric(cls, eps: float, lambda_s: float, lambda_a: float, j: float) -> "SystemParams":
        """Symmetric double well: identical coefficients in both wells."""
        return cls(eps, eps, lambda_s, lambda_s, lambda_a, lambda_a, j)

    @property
    def is_symmetric(self) -> bool:
        return (
            self.eps_left == self.eps_right
            and self.lambda_s_left == self.lambda_s_right
            and self.lambda_a_left == self.lambda_a_right
        )

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.eps_left, self.eps_right,
                self.lambda_s_left, self.lambda_s_right,
                self.lambda_a_left, self.lambda_a_right, self.j,
            ],
            dtype=float,
        )


# SI constants used only for physical-scale conversions.
HBAR_SI = 1.054571817e-34  # J s
BOHR_RADIUS_SI = 5.29177210903e-11  # m
ATOMIC_MASS_SI = 1.66053906660e-27  # kg


@dataclass(frozen=True)
class CouplingConstants:
    """Interaction strengths from s-wave scattering lengths (SI units).

    a0, a2: scattering lengths in the total-spin-0 and -2 channels [m];
    atom_mass: atomic mass [kg].
    """

    a0: float
    a2: float
    atom_mass: float

    def __post_init__(self):
        if self.atom_mass <= 0:
            raise ValueError("atom_mass must be positive")

    @property
    def c_s(self) -> float:
        """Spin-symmetric interaction strength, 4 pi hbar^2 (a0 + 2 a2) / (3 M)."""
        return 4.0 * math.pi * HBAR_SI**2 * (self.a0 + 2.0 * self.a2) / (3.0 * self.atom_mass)

    @property
    def c_a(self) -> float:
        """Spin-asymmetric interaction strength, 4 pi hbar^2 (a2 - a0) / (3 M)."""
        return 4.0 * math.pi * HBAR_SI**2 * (self.a2 - self.a0) / (3.0 * self.atom_mass)

    @classmethod
    def rubidium87(cls) -> "CouplingConstants":
        """Ferromagnetic reference case: a0 = 101.8 a_B, a2 = 100.4 a_B (external inputs)."""
        return cls(
            a0=101.8 * BOHR_RADIUS_SI,
            a2=100.4 * BOHR_RADIUS_SI,
            atom_mass=86.909180527 * ATOMIC_MASS_SI,
        )


def _flipped_conj(f: np.ndarray) -> np.ndarray:
    # (f-, -f0, f+) conjugated; the direction along which spin mixing acts.
    return np.array([f[2].conjugate(), -f[1].conjugate(), f[0].conjugate()])


def _require_finite(state: SpinorPair):
    if not state.is_finite():
        raise ValueError("non-finite spinor state")


def _well_rhs(f: np.ndarray, g: np.ndarray, eps: float, lam_s: float, lam_a: float, j: float) -> np.ndarray:
    n = norm_sq(f)
    theta = 2.0 * f[0] * f[2] - f[1] ** 2
    return -1j * ((eps + (lam_s + lam_a) * n) * f - lam_a * theta * _flipped_conj(f) + j * g)


def rhs(state: SpinorPair, params: SystemParams) -> SpinorPair:
    """Time derivative (d xi/dt, d eta/dt) of the coupled two-well equations.

    The spin-mixing term is evaluated through the scalar singlet amplitude.
    """
    _require_finite(state)
    xi, eta = state.left, state.right
    dxi = _well_rhs(xi, eta, params.eps_left, params.lambda_s_left, params.lambda_a_left, params.j)
    deta = _well_rhs(eta, xi, params.eps_right, params.lambda_s_right, params.lambda_a_right, params.j)
    return SpinorPair(dxi, deta)


def rhs_spin_form(state: SpinorPair, params: SystemParams) -> SpinorPair:
    """Same derivative computed from the spin-matrix form of the interaction.

    Uses lam_a * sum_j <F_j> F_j f instead of the singlet-amplitude shortcut;
    an independent cross-check of the spin-mixing algebra.
    """
    _require_finite(state)
    fx, fy, fz = spin_matrices()

    def well(f, g, eps, lam_s, lam_a):
        n = norm_sq(f)
        mix = np.zeros(3, dtype=complex)
        for fj in (fx, fy, fz):
            mean = (f.conj() @ (fj @ f)).real
            mix = mix + mean * (fj @ f)
        return -1j * (eps * f + lam_s * n * f + lam_a * mix + params.j * g)

    xi, eta = state.left, state.right
    dxi = well(xi, eta, params.eps_left, params.lambda_s_left, params.lambda_a_left)
    deta = well(eta, xi, params.eps_right, params.lambda_s_right, params.lambda_a_right)
    return SpinorPair(dxi, deta)


def energy(state: SpinorPair, params: SystemParams) -> float:
    """Total mean-field energy of the pair (real)."""
    _require_finite(state)
    fx, fy, fz = spin_matrices()
    total = 0.0
    for f, eps, lam_s, lam_a in (
        (state.left, params.eps_left, params.lambda_s_left, params.lambda_a_left),
        (state.right, params.eps_right, params.lambda_s_right, params.lambda_a_right),
    ):
        n = norm_sq(f)
        spin_sq = sum((f.conj() @ (fj @ f)).real ** 2 for fj in (fx, fy, fz))
        total += eps * n + 0.5 * lam_s * n * n + 0.5 * lam_a * spin_sq
    total += 2.0 * params.j * (state.left.conj() @ state.right).real
    return float(total)


def total_magnetization(state: SpinorPair) -> float:
    """Sum of left and right F_z expectation values (conserved)."""
    xi, eta = state.left, state.right
    return float(
        abs(xi[0]) ** 2 - abs(xi[2]) ** 2 + abs(eta[0]) ** 2 - abs(eta[2]) ** 2
    )


def _apply_h_eff(state: SpinorPair, params: SystemParams) -> np.ndarray:
    # i * d/dt (xi, eta) packed: the effective Hamiltonian applied to the state.
    d = rhs(state, params)
    return 1j * d.packed


def stationary_residual(state: SpinorPair, mu: float, params: SystemParams) -> float:
    """Euclidean norm of i d/dt(xi, eta) - mu (xi, eta)."""
    r = _apply_h_eff(state, params) - mu * state.packed
    return float(np.linalg.norm(r))


@dataclass(frozen=True)
class StationaryResult:
    state: SpinorPair
    mu: float
    residual: float
    converged: bool
    iterations: int


def _normalize_wells(y: np.ndarray) -> np.ndarray:
    y = y.copy()
    for sl in (slice(0, 3), slice(3, 6)):
        n = np.linalg.norm(y[sl])
        if n == 0.0:
            raise ValueError("zero-norm well spinor cannot be normalized")
        y[sl] /= n
    return y


def find_stationary(
    seed: SpinorPair,
    params: SystemParams,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> StationaryResult:
    """Damped Newton search for a stationary state with unit-norm well spinors.

    mu is taken as the Rayleigh quotient at each step; each Newton update is
    followed by per-well renormalization.  Returns converged=False after
    max_iter iterations instead of raising.
    """

    def pack(y: np.ndarray) -> np.ndarray:
        return np.concatenate([y.real, y.imag])

    def unpack(x: np.ndarray) -> np.ndarray:
        return x[:6] + 1j * x[6:]

    def residual_vec(x: np.ndarray) -> np.ndarray:
        y = _normalize_wells(unpack(x))
        st = SpinorPair.from_packed(y)
        hy = _apply_h_eff(st, params)
        mu = float((y.conj() @ hy).real / (y.conj() @ y).real)
        return pack(hy - mu * y), mu

    x = pack(_normalize_wells(seed.packed))
    fvec, mu = residual_vec(x)
    res = float(np.linalg.norm(fvec))
    for it in range(1, max_iter + 1):
        if res < tol:
            y = _normalize_wells(unpack(x))
            return StationaryResult(SpinorPair.from_packed(y), mu, res, True, it - 1)
        # finite-difference Jacobian of the normalized residual map
        jac = np.empty((12, 12))
        step = 1e-7
        for k in range(12):
            xp = x.copy()
            xp[k] += step
            fp, _ = residual_vec(xp)
            jac[:, k] = (fp - fvec) / step
        delta, *_ = np.linalg.lstsq(jac, -fvec, rcond=1e-12)
        # backtracking damping
        lam = 1.0
        for _ in range(30):
            f_new, mu_new = residual_vec(x + lam * delta)
            if np.linalg.norm(f_new) < res:
                break
            lam *= 0.5
        else:
            y = _normalize_wells(unpack(x))
            return StationaryResult(SpinorPair.from_packed(y), mu, res, res < tol, it)
        x = x + lam * delta
        fvec, mu = residual_vec(x)
        res = float(np.linalg.norm(fvec))
    y = _normalize_wells(unpack(x))
    return StationaryResult(SpinorPair.from_packed(y), mu, res, res < tol, max_iter)
