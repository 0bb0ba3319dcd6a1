import math

import numpy as np
import pytest
from scipy import integrate

from frac_stein.energies import (
    EnergySpec,
    MeasureSpec,
    brownian_pc_expectation,
    fractional_energy,
    gaussian_abs_moment,
    h1_energy,
    kernel_cell_weight,
    kernel_double_integral,
    l2_energy,
    pair_weight_matrix,
    pc_energy_batch,
    pl_energy_batch,
)
from frac_stein.processes import RealPath, simulate_brownian_values, uniform_grid


def linear_path(cells, horizon=1.0):
    grid = uniform_grid(horizon, cells)
    return RealPath(grid, grid.nodes.copy())


class TestL2Energy:
    def test_zero_path(self):
        grid = uniform_grid(1.0, 16)
        assert l2_energy(RealPath(grid, np.zeros(17))) == 0.0

    def test_linear_path_lebesgue(self):
        for cells in (16, 64, 256):
            value = l2_energy(linear_path(cells))
            assert abs(value - 1.0 / 3.0) <= 1.0 / cells**2

    def test_single_atom(self):
        value = l2_energy(
            linear_path(8), MeasureSpec.discrete([(1.0, 1.0)])
        )
        assert value == pytest.approx(1.0, rel=1e-12)

    def test_atom_between_nodes_interpolates(self):
        value = l2_energy(linear_path(8), MeasureSpec.discrete([(0.3, 2.0)]))
        assert value == pytest.approx(2.0 * 0.3**2, rel=1e-12)

    def test_atom_outside_window_rejected(self):
        with pytest.raises(ValueError):
            l2_energy(linear_path(8), MeasureSpec.discrete([(1.5, 1.0)]))


class TestH1Energy:
    def test_constant_path(self):
        grid = uniform_grid(1.0, 8)
        assert h1_energy(RealPath(grid, np.full(9, 3.2))) == 0.0

    def test_unit_slope_any_grid(self):
        assert h1_energy(linear_path(7)) == pytest.approx(1.0, rel=1e-12)
        grid = uniform_grid(1.0, 5)
        assert h1_energy(RealPath(grid, grid.nodes * 1.0)) == pytest.approx(1.0)

    def test_brownian_mean_is_cell_count(self):
        # each cell contributes a chi-square(1) with unit mean
        cells, reps = 64, 4000
        grid = uniform_grid(1.0, cells)
        values = simulate_brownian_values(grid, 80, range(reps))
        energies = ((np.diff(values, axis=1) ** 2) / grid.widths).sum(axis=1)
        se = energies.std(ddof=1) / math.sqrt(reps)
        assert abs(energies.mean() - cells) <= 3.0 * se


class TestKernelCellWeight:
    def test_touching_cells(self):
        value = kernel_cell_weight((0.0, 0.5), (0.5, 1.0), 1.5)
        assert value == pytest.approx(4.0 * (math.sqrt(2.0) - 1.0), rel=1e-12)

    def test_separated_cells_against_quadrature(self):
        # independent 2-D quadrature gives 0.38550526870925
        value = kernel_cell_weight((0.0, 1.0), (2.0, 3.0), 1.5)
        assert value == pytest.approx(0.3855052687092524, rel=1e-12)
        quad, _ = integrate.dblquad(lambda t, s: (t - s) ** -1.5, 0, 1, 2, 3)
        assert value == pytest.approx(quad, rel=1e-9)

    def test_log_branch_against_quadrature(self):
        value = kernel_cell_weight((0.0, 1.0), (2.0, 3.0), 2.0)
        quad, _ = integrate.dblquad(lambda t, s: (t - s) ** -2.0, 0, 1, 2, 3)
        assert value == pytest.approx(quad, rel=1e-9)

    def test_touching_corner_divergence(self):
        assert kernel_cell_weight((0.0, 0.5), (0.5, 1.0), 2.5) == math.inf
        assert kernel_cell_weight((0.0, 0.5), (0.5, 1.0), 2.0) == math.inf

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            kernel_cell_weight((0.0, 0.6), (0.5, 1.0), 1.5)

    def test_weight_sums_diverge_with_refinement(self):
        # near-diagonal mass grows without bound as the grid refines
        sums = []
        for cells in (64, 128):
            grid = uniform_grid(1.0, cells)
            sums.append(pair_weight_matrix(grid, 1.5).sum())
        assert sums[1] / sums[0] > 1.3


class TestFractionalEnergy:
    def test_constant_path_is_zero(self):
        grid = uniform_grid(1.0, 8)
        path = RealPath(grid, np.full(9, 2.0))
        assert fractional_energy(path, 0.25, 2.0, "piecewise-linear") == 0.0
        assert fractional_energy(path, 0.25, 2.0, "piecewise-constant") == 0.0

    def test_linear_path_piecewise_linear(self):
        # exact energy of t on [0,1]: 2 T^(3-2a)/((2-2a)(3-2a)) = 8/15
        value = fractional_energy(linear_path(16), 0.25, 2.0, "piecewise-linear")
        assert value == pytest.approx(8.0 / 15.0, rel=1e-6)

    def test_linear_path_piecewise_constant_refines(self):
        value = fractional_energy(linear_path(256), 0.25, 2.0, "piecewise-constant")
        assert value == pytest.approx(8.0 / 15.0, rel=0.02)

    def test_regime_alpha_mismatch_rejected(self):
        with pytest.raises(ValueError):
            fractional_energy(linear_path(8), 0.6, 2.0, "piecewise-constant")

    def test_translation_invariance_and_scaling(self):
        rng = np.random.default_rng(0)
        grid = uniform_grid(1.0, 12)
        values = np.concatenate([[0.0], np.cumsum(rng.normal(size=12))])
        for alpha, p, regime in (
            (0.25, 2.0, "piecewise-constant"),
            (0.3, 3.0, "piecewise-constant"),
            (0.25, 2.0, "piecewise-linear"),
            (0.25, 4.0, "piecewise-linear"),
        ):
            base = fractional_energy(RealPath(grid, values), alpha, p, regime)
            shifted = fractional_energy(RealPath(grid, values + 5.0), alpha, p, regime)
            assert shifted == pytest.approx(base, rel=1e-10)
            scaled = fractional_energy(RealPath(grid, -2.0 * values), alpha, p, regime)
            assert scaled == pytest.approx(2.0**p * base, rel=1e-10)

    def test_monotone_in_alpha(self):
        rng = np.random.default_rng(1)
        grid = uniform_grid(1.0, 16)
        values = np.concatenate([[0.0], np.cumsum(rng.normal(size=16))])
        path = RealPath(grid, values)
        alphas = np.arange(0.05, 0.46, 0.05)
        energies = [
            fractional_energy(path, a, 2.0, "piecewise-constant") for a in alphas
        ]
        assert all(b >= a for a, b in zip(energies, energies[1:]))

    def test_dominated_by_h1(self):
        # quadratic fractional energy <= C * H1 energy with
        # C = int int |t-s|^(-2 alpha)
        rng = np.random.default_rng(2)
        grid = uniform_grid(1.0, 16)
        c = kernel_double_integral(1.0, 0.25)
        for _ in range(100):
            values = np.concatenate([[0.0], np.cumsum(rng.normal(size=16))])
            path = RealPath(grid, values)
            frac = fractional_energy(path, 0.25, 2.0, "piecewise-linear")
            assert frac <= c * h1_energy(path) * (1.0 + 1e-9)

    def test_batch_matches_reference_quadrature(self):
        from frac_stein.energies import _pl_energy_single_quad

        rng = np.random.default_rng(3)
        grid = uniform_grid(1.0, 6)
        values = np.concatenate([[0.0], np.cumsum(rng.normal(size=6))])
        for alpha, p in ((0.25, 2.0), (0.6, 2.0), (0.25, 4.0), (0.4, 4.0)):
            batch = pl_energy_batch(values[None, :], grid, alpha, p)[0]
            reference = _pl_energy_single_quad(values, grid, alpha, p)
            assert batch == pytest.approx(reference, rel=1e-8)

    def test_pc_brownian_expectation(self):
        # E|X_t - X_s|^2 = |t - s| makes the discrete expectation exact
        cells, reps = 64, 4000
        grid = uniform_grid(1.0, cells)
        values = simulate_brownian_values(grid, 81, range(reps))
        energies = pc_energy_batch(values, grid, 0.25, 2.0)
        expected = brownian_pc_expectation(grid, 0.25)
        se = energies.std(ddof=1) / math.sqrt(reps)
        assert abs(energies.mean() - expected) <= 3.0 * se

    def test_pc_fft_matches_direct(self):
        rng = np.random.default_rng(4)
        grid = uniform_grid(1.0, 300)  # triggers the FFT fast path
        values = np.cumsum(rng.normal(0, 0.05, size=(4, 301)), axis=1)
        values[:, 0] = 0.0
        fast = pc_energy_batch(values, grid, 0.25, 2.0)
        omega = pair_weight_matrix(grid, 1.5)
        for r in range(values.shape[0]):
            cells = values[r, :-1]
            direct = np.sum((cells[:, None] - cells[None, :]) ** 2 * omega)
            assert fast[r] == pytest.approx(direct, rel=1e-10)


class TestKernelDoubleIntegral:
    def test_reference_values(self):
        assert kernel_double_integral(1.0, 0.25) == pytest.approx(8.0 / 3.0, rel=1e-12)
        assert kernel_double_integral(1.0, 0.5) == math.inf
        assert kernel_double_integral(1.0, 0.75) == math.inf
        assert kernel_double_integral(2.0, 0.25) == pytest.approx(
            2.0 * 2.0**1.5 / 0.75, rel=1e-12
        )

    def test_against_quadrature(self):
        alpha = 0.2
        target, _ = integrate.dblquad(
            lambda t, s: abs(t - s) ** (-2 * alpha), 0, 1, 0, 1
        )
        assert kernel_double_integral(1.0, alpha) == pytest.approx(target, rel=1e-6)

    def test_domain_validation(self):
        with pytest.raises(ValueError):
            kernel_double_integral(1.0, 0.0)
        with pytest.raises(ValueError):
            kernel_double_integral(1.0, 1.0)


class TestGaussianAbsMoment:
    def test_even_moments(self):
        assert gaussian_abs_moment(2.0) == pytest.approx(1.0, rel=1e-12)
        assert gaussian_abs_moment(4.0) == pytest.approx(3.0, rel=1e-12)

    def test_first_moment(self):
        assert gaussian_abs_moment(1.0) == pytest.approx(
            math.sqrt(2.0 / math.pi), rel=1e-12
        )

    def test_against_quadrature(self):
        q = 4.0 / 3.0
        target, _ = integrate.quad(
            lambda y: abs(y) ** q * math.exp(-0.5 * y * y) / math.sqrt(2 * math.pi),
            -12,
            12,
        )
        assert gaussian_abs_moment(q) == pytest.approx(target, rel=1e-10)

    def test_domain(self):
        with pytest.raises(ValueError):
            gaussian_abs_moment(0.0)


class TestEnergySpec:
    def test_pc_alpha_constraint(self):
        with pytest.raises(ValueError):
            EnergySpec("wfrac", alpha=0.3, p=4.0, regime="piecewise-constant")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            EnergySpec("sobolev")
