import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from spinwell.wellmodes import (
    CouplingConstants1D,
    DoubleWellPotential,
    Grid1D,
    lowest_modes,
    tunnelling_integral,
    well_parameters,
)

GRID = Grid1D(-6.0, 6.0, 1024)
QUARTIC = DoubleWellPotential.quartic(10.0, 2.0)
COUPLINGS = CouplingConstants1D(1.0, -0.01)


@pytest.fixture(scope="module")
def reference_modes():
    return lowest_modes(QUARTIC, GRID)


class TestGrid:
    def test_validation(self):
        with pytest.raises(ValueError):
            Grid1D(-1.0, 1.0, 32)
        with pytest.raises(ValueError):
            Grid1D(1.0, -1.0, 128)

    def test_spacing(self):
        g = Grid1D(0.0, 1.0, 101)
        assert abs(g.dx - 0.01) < 1e-15
        assert len(g.x) == 101


class TestPotential:
    def test_quartic_shape(self):
        v = QUARTIC.evaluate(np.array([-2.0, 0.0, 2.0]))
        assert np.allclose(v, [0.0, 10.0, 0.0])

    def test_quartic_symmetry(self):
        x = GRID.x
        v = QUARTIC.evaluate(x)
        assert np.max(np.abs(v - v[::-1])) < 1e-12

    def test_tabulated_interpolation(self):
        pot = DoubleWellPotential.tabulated([0.0, 1.0, 2.0], [0.0, 2.0, 4.0])
        assert pot.evaluate(np.array([0.5, 1.5])).tolist() == [1.0, 3.0]

    def test_tabulated_validation(self):
        with pytest.raises(ValueError, match="increasing"):
            DoubleWellPotential.tabulated([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            DoubleWellPotential.tabulated([0.0], [1.0])

    def test_from_file(self, tmp_path):
        x = np.linspace(-3, 3, 50)
        v = 0.5 * x**2
        path = tmp_path / "pot.txt"
        np.savetxt(path, np.column_stack([x, v]))
        pot = DoubleWellPotential.from_file(path)
        assert np.allclose(pot.evaluate(x), v)
        with pytest.raises(ValueError, match="two columns"):
            bad = tmp_path / "bad.txt"
            np.savetxt(bad, np.ones((4, 3)))
            DoubleWellPotential.from_file(bad)

    def test_rejects_negative_scales(self):
        with pytest.raises(ValueError):
            DoubleWellPotential.quartic(-1.0, 2.0)


class TestLowestModes:
    def test_ordering_and_small_splitting(self, reference_modes):
        m = reference_modes
        omega = math.sqrt(8.0 * 10.0) / 2.0  # single-well harmonic frequency
        assert m.e_s < m.e_a
        assert m.splitting < 0.01 * omega

    def test_mode_normalization(self, reference_modes):
        m = reference_modes
        for psi in (m.psi_s, m.psi_a, m.sqrt_n_left, m.sqrt_n_right):
            assert abs(trapezoid(psi**2, m.x) - 1.0) < 1e-10

    def test_localized_modes_mirror_each_other(self, reference_modes):
        m = reference_modes
        assert np.max(np.abs(m.sqrt_n_left - m.sqrt_n_right[::-1])) < 1e-9

    def test_left_mode_concentrates_left(self, reference_modes):
        m = reference_modes
        left = m.x < 0
        mass = trapezoid(m.sqrt_n_left[left] ** 2, m.x[left])
        assert mass > 0.999

    def test_modes_positive_where_massive(self, reference_modes):
        # global sign convention: any negative excursion is a tiny
        # orthogonality tail, not a flipped lobe
        m = reference_modes
        for mode in (m.sqrt_n_left, m.sqrt_n_right):
            assert mode.max() > 0.5
            assert mode.min() > -1e-3 * mode.max()
            neg = mode < 0.0
            assert trapezoid(mode[neg] ** 2, m.x[neg]) < 1e-6 if neg.any() else True

    def test_grid_refinement_convergence(self):
        # second-order eigenvalues: quadrupling resolution shrinks the
        # Richardson error by ~16x overall; check against the finest grid
        energies = {}
        for n in (512, 1024, 2048):
            g = Grid1D(-6.0, 6.0, n + 1)
            mm = lowest_modes(QUARTIC, g)
            energies[n] = (mm.e_s, mm.e_a)
        err_coarse = abs(energies[512][0] - energies[2048][0])
        err_fine = abs(energies[1024][0] - energies[2048][0])
        assert err_fine < err_coarse / 3.0
        # doubling the grid moves e_s by < 1e-6 relative
        assert abs(energies[1024][0] - energies[2048][0]) / abs(energies[2048][0]) < 1e-6

    def test_harmonic_oracle(self):
        # tabulated harmonic potential: levels 0.5 and 1.5, spacing omega = 1
        x = np.linspace(-8.0, 8.0, 2001)
        pot = DoubleWellPotential.tabulated(x, 0.5 * x**2)
        grid = Grid1D(-8.0, 8.0, 2001)
        with pytest.warns(UserWarning, match="marginal"):
            m = lowest_modes(pot, grid)
        assert abs(m.e_s - 0.5) < 1e-3
        assert abs(m.e_a - 1.5) < 1e-3
        assert abs(m.splitting - 1.0) < 1e-3

    def test_underresolved_grid_warns(self):
        with pytest.warns(UserWarning, match="resolve"):
            lowest_modes(DoubleWellPotential.quartic(10.0, 2.0), Grid1D(-6.0, 6.0, 64))


class TestWellParameters:
    def test_symmetric_energies(self, reference_modes):
        p = well_parameters(reference_modes, QUARTIC, GRID, COUPLINGS)
        assert abs(p.eps_left - p.eps_right) <= 1e-10 * abs(p.eps_left)
        assert abs(p.lambda_s_left - p.lambda_s_right) <= 1e-10 * abs(p.lambda_s_left)
        assert p.is_symmetric or abs(p.eps_left - p.eps_right) < 1e-12

    def test_couplings_scale(self, reference_modes):
        p = well_parameters(reference_modes, QUARTIC, GRID, COUPLINGS)
        n_sq = trapezoid(reference_modes.sqrt_n_left**4, reference_modes.x)
        assert abs(p.lambda_s_left - n_sq) < 1e-12
        assert abs(p.lambda_a_left + 0.01 * n_sq) < 1e-12

    def test_two_mode_identity(self, reference_modes):
        p = well_parameters(reference_modes, QUARTIC, GRID, COUPLINGS)
        half_split = 0.5 * reference_modes.splitting
        assert reference_modes.overlap < 0.05
        assert abs(p.j - half_split) / half_split < 0.1

    def test_signed_value_negative(self, reference_modes):
        assert tunnelling_integral(reference_modes, QUARTIC, GRID) < 0.0
        p = well_parameters(reference_modes, QUARTIC, GRID, COUPLINGS)
        assert p.j > 0.0

    def test_j_decreases_with_barrier(self):
        js = []
        for v0 in (5.0, 10.0, 20.0, 40.0):
            pot = DoubleWellPotential.quartic(v0, 2.0)
            modes = lowest_modes(pot, GRID)
            js.append(well_parameters(modes, pot, GRID, COUPLINGS).j)
        assert all(a > b for a, b in zip(js, js[1:]))

    def test_mismatched_grid(self, reference_modes):
        other = Grid1D(-6.0, 6.0, 512)
        with pytest.raises(ValueError, match="grid"):
            well_parameters(reference_modes, QUARTIC, other, COUPLINGS)
