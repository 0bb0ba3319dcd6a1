import math

import numpy as np
import pytest

from frac_stein.processes import (
    CountingPath,
    DriftSpec,
    IntensitySpec,
    RealPath,
    TimeGrid,
    apply_drift,
    girsanov_weight_cox,
    girsanov_weight_gaussian,
    girsanov_weights_gaussian,
    replication_stream,
    simulate_brownian,
    simulate_brownian_values,
    simulate_cox,
    simulate_cox_counts,
    uniform_grid,
)


class TestTimeGrid:
    def test_uniform_nodes(self):
        grid = uniform_grid(1.0, 4)
        assert np.allclose(grid.nodes, [0, 0.25, 0.5, 0.75, 1.0])
        assert grid.cells == 4 and grid.horizon == 1.0

    def test_uniform_t2(self):
        grid = uniform_grid(2.0, 2)
        assert np.allclose(grid.nodes, [0, 1, 2])

    def test_rejects_single_cell(self):
        with pytest.raises(ValueError):
            uniform_grid(1.0, 1)

    def test_rejects_bad_horizon(self):
        with pytest.raises(ValueError):
            uniform_grid(0.0, 4)

    def test_rejects_nonzero_start(self):
        with pytest.raises(ValueError):
            TimeGrid(np.array([0.1, 0.5, 1.0]))

    def test_rejects_nonincreasing(self):
        with pytest.raises(ValueError):
            TimeGrid(np.array([0.0, 0.5, 0.5, 1.0]))


class TestBrownianSimulation:
    def test_terminal_variance_and_covariance(self):
        grid = uniform_grid(1.0, 64)
        values = simulate_brownian_values(grid, 71, range(100_000))
        var = values[:, -1].var(ddof=1)
        # sample variance of N(0,1) has sd ~ sqrt(2/R)
        assert abs(var - 1.0) <= 3.0 * math.sqrt(2.0 / values.shape[0])
        cov = np.cov(values[:, 32], values[:, -1])[0, 1]
        assert abs(cov - 0.5) <= 3.0 * math.sqrt(2.0 / values.shape[0])

    def test_disjoint_increments_uncorrelated(self):
        grid = uniform_grid(1.0, 8)
        values = simulate_brownian_values(grid, 72, range(100_000))
        a = values[:, 2] - values[:, 1]
        b = values[:, 7] - values[:, 6]
        corr = np.corrcoef(a, b)[0, 1]
        assert abs(corr) <= 3.0 / math.sqrt(values.shape[0])

    def test_deterministic_given_seed(self):
        grid = uniform_grid(1.0, 16)
        one = simulate_brownian(grid, replication_stream(5, 3))
        two = simulate_brownian(grid, replication_stream(5, 3))
        assert np.array_equal(one.values, two.values)
        other = simulate_brownian(grid, replication_stream(5, 4))
        assert not np.array_equal(one.values, other.values)

    def test_starts_at_zero(self):
        grid = uniform_grid(1.0, 16)
        path = simulate_brownian(grid, replication_stream(1, 0))
        assert path.values[0] == 0.0


class TestDrift:
    def test_zero_drift_is_identity(self):
        grid = uniform_grid(1.0, 8)
        path = simulate_brownian(grid, replication_stream(2, 0))
        shifted = apply_drift(path, DriftSpec.zero())
        assert np.array_equal(shifted.values, path.values)

    def test_unit_rate_on_zero_path(self):
        grid = uniform_grid(1.0, 8)
        zero = RealPath(grid, np.zeros(9))
        shifted = apply_drift(zero, DriftSpec.constant_rate(1.0))
        assert np.allclose(shifted.values, grid.nodes)

    def test_mean_of_shifted_terminal_value(self):
        grid = uniform_grid(1.0, 32)
        values = simulate_brownian_values(grid, 73, range(100_000))
        drift = DriftSpec.constant_rate(0.5)
        shifted = values + drift.primitive(grid.nodes)
        mean = shifted[:, -1].mean()
        assert abs(mean - 0.5) <= 3.0 / math.sqrt(values.shape[0])

    def test_grid_mismatch_rejected(self):
        path = simulate_brownian(uniform_grid(1.0, 8), replication_stream(2, 1))
        with pytest.raises(ValueError):
            RealPath(uniform_grid(1.0, 16), path.values)

    def test_sampled_drift_matches_closed_form(self):
        grid = uniform_grid(1.0, 256)
        closed = DriftSpec.constant_rate(2.0)
        sampled = DriftSpec.from_samples(grid.nodes, np.full(257, 2.0))
        assert np.allclose(sampled.primitive(grid.nodes), closed.primitive(grid.nodes))
        assert sampled.primitive(np.array([0.0]))[0] == 0.0


class TestGirsanovGaussian:
    def test_zero_drift_weight_is_one(self):
        grid = uniform_grid(1.0, 64)
        path = simulate_brownian(grid, replication_stream(3, 0))
        assert girsanov_weight_gaussian(path, DriftSpec.zero()) == 1.0

    def test_martingale_property(self):
        grid = uniform_grid(1.0, 512)
        values = simulate_brownian_values(grid, 74, range(100_000))
        weights = girsanov_weights_gaussian(values, grid, DriftSpec.constant_rate(1.0))
        se = weights.std(ddof=1) / math.sqrt(weights.size)
        assert abs(weights.mean() - 1.0) <= 3.0 * se

    def test_zero_path_linear_rate_limit(self):
        # on the null path the weight is exp(-1/2 sum rate(tau_{k-1})^2 dtau);
        # with rate(t) = t the Riemann sum tends to 1/3, so the weight to
        # exp(-1/6) = 0.8464817248906141
        for cells, tol in ((512, 1e-3), (4096, 1e-4)):
            grid = uniform_grid(1.0, cells)
            zero = RealPath(grid, np.zeros(cells + 1))
            weight = girsanov_weight_gaussian(zero, DriftSpec.linear_rate(1.0))
            assert abs(weight - math.exp(-1.0 / 6.0)) <= tol * math.exp(-1.0 / 6.0)

    def test_martingale_for_other_drifts(self):
        grid = uniform_grid(1.0, 512)
        values = simulate_brownian_values(grid, 75, range(50_000))
        for drift in (DriftSpec.linear_rate(1.0), DriftSpec.sine()):
            weights = girsanov_weights_gaussian(values, grid, drift)
            se = weights.std(ddof=1) / math.sqrt(weights.size)
            assert abs(weights.mean() - 1.0) <= 3.0 * se


class TestCoxSimulation:
    def test_poisson_mean_and_variance(self):
        grid = uniform_grid(1.0, 32)
        intensity = IntensitySpec(DriftSpec.constant_rate(2.0))
        counts, _ = simulate_cox_counts(grid, intensity, 76, range(100_000))
        terminal = counts[:, -1]
        se_mean = terminal.std(ddof=1) / math.sqrt(terminal.size)
        assert abs(terminal.mean() - 2.0) <= 3.0 * se_mean
        var = terminal.var(ddof=1)
        fourth = np.mean((terminal - terminal.mean()) ** 4)
        se_var = math.sqrt(max(fourth - var**2, 0.0) / terminal.size)
        assert abs(var - 2.0) <= 3.0 * se_var

    def test_gamma_scaled_variance(self):
        # law of total variance: Var N = E Z + Var Z = 1 + 0.5
        grid = uniform_grid(1.0, 32)
        intensity = IntensitySpec(
            DriftSpec.constant_rate(1.0), multiplier_shape=2.0, multiplier_scale=0.5
        )
        counts, multipliers = simulate_cox_counts(grid, intensity, 77, range(100_000))
        terminal = counts[:, -1]
        var = terminal.var(ddof=1)
        fourth = np.mean((terminal - terminal.mean()) ** 4)
        se_var = math.sqrt(max(fourth - var**2, 0.0) / terminal.size)
        assert abs(var - 1.5) <= 3.0 * se_var
        assert abs(multipliers.mean() - 1.0) <= 3.0 * multipliers.std() / math.sqrt(
            multipliers.size
        )

    def test_counts_convention(self):
        grid = uniform_grid(1.0, 4)
        path = CountingPath(grid, np.array([0.25, 0.6]))
        # a jump exactly at a node is included at that node
        assert np.array_equal(path.counts(), [0, 1, 1, 2, 2])

    def test_deterministic_given_seed(self):
        grid = uniform_grid(1.0, 16)
        intensity = IntensitySpec(DriftSpec.constant_rate(3.0))
        one = simulate_cox(grid, intensity, replication_stream(8, 5))
        two = simulate_cox(grid, intensity, replication_stream(8, 5))
        assert np.array_equal(one.jump_times, two.jump_times)

    def test_rejects_negative_intensity(self):
        grid = uniform_grid(1.0, 16)
        intensity = IntensitySpec(DriftSpec.constant_rate(-1.0))
        with pytest.raises(ValueError):
            simulate_cox(grid, intensity, replication_stream(8, 6))


class TestGirsanovCox:
    def test_identity_intensity_weight_is_one(self):
        grid = uniform_grid(1.0, 64)
        path = simulate_cox(grid, IntensitySpec(DriftSpec.constant_rate(1.0)),
                            replication_stream(9, 0))
        assert girsanov_weight_cox(path, DriftSpec.constant_rate(1.0)) == 1.0

    def test_no_jump_weight(self):
        grid = uniform_grid(1.0, 64)
        empty = CountingPath(grid, np.empty(0))
        weight = girsanov_weight_cox(empty, DriftSpec.constant_rate(2.0))
        assert weight == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_martingale_property(self):
        grid = uniform_grid(1.0, 64)
        intensity = IntensitySpec(DriftSpec.constant_rate(1.0))
        weights = np.empty(100_000)
        for r in range(weights.size):
            path = simulate_cox(grid, intensity, replication_stream(10, r))
            weights[r] = girsanov_weight_cox(path, DriftSpec.constant_rate(2.0))
        se = weights.std(ddof=1) / math.sqrt(weights.size)
        assert abs(weights.mean() - 1.0) <= 3.0 * se

    def test_nonpositive_rate_at_jump_rejected(self):
        grid = uniform_grid(1.0, 8)
        path = CountingPath(grid, np.array([0.5]))
        with pytest.raises(ValueError):
            girsanov_weight_cox(path, DriftSpec.constant_rate(0.0))
