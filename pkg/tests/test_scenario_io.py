import numpy as np
import pytest

from evotree import GarchParams, load_scenarios, save_scenarios, simulate_garch
from evotree.errors import (
    BadProbabilitiesError,
    InvalidCountError,
    MalformedRowError,
    NonFiniteValueError,
    NonStationaryParamsError,
)

from conftest import TEN_RETURNS


class TestLoadScenarios:
    def test_single_column_example(self, tmp_path):
        target = tmp_path / "paths.csv"
        target.write_text("".join(f"{r}\n" for r in TEN_RETURNS))
        paths = load_scenarios(target)
        assert paths.n_paths == 10 and paths.n_stages == 2
        assert np.all(paths.probs == 0.1)
        assert paths.values[:, 0].tolist() == pytest.approx(list(TEN_RETURNS))

    def test_two_hundred_by_two(self, tmp_path, garch_paths_200):
        target = tmp_path / "big.csv"
        save_scenarios(garch_paths_200, target)
        loaded = load_scenarios(target)
        assert loaded.n_paths == 200 and loaded.n_stages == 3

    def test_empty_file(self, tmp_path):
        target = tmp_path / "empty.csv"
        target.write_text("")
        with pytest.raises(MalformedRowError):
            load_scenarios(target)

    def test_ragged_rows(self, tmp_path):
        target = tmp_path / "ragged.csv"
        target.write_text("0.1,0.2\n0.3\n")
        with pytest.raises(MalformedRowError):
            load_scenarios(target)

    def test_non_numeric_cell(self, tmp_path):
        target = tmp_path / "text.csv"
        target.write_text("0.1,abc\n")
        with pytest.raises(MalformedRowError):
            load_scenarios(target)

    def test_non_finite_value(self, tmp_path):
        target = tmp_path / "nan.csv"
        target.write_text("0.1\nnan\n")
        with pytest.raises(NonFiniteValueError):
            load_scenarios(target)

    def test_probability_column(self, tmp_path):
        target = tmp_path / "probs.csv"
        target.write_text("0.02,0.25\n-0.01,0.75\n")
        paths = load_scenarios(target, probs_column=True)
        assert paths.probs.tolist() == [0.25, 0.75]
        assert paths.n_stages == 2

    def test_negative_probability(self, tmp_path):
        target = tmp_path / "negp.csv"
        target.write_text("0.02,-0.25\n-0.01,1.25\n")
        with pytest.raises(BadProbabilitiesError):
            load_scenarios(target, probs_column=True)

    def test_probabilities_not_summing_to_one(self, tmp_path):
        target = tmp_path / "badsum.csv"
        target.write_text("0.02,0.25\n-0.01,0.25\n")
        with pytest.raises(BadProbabilitiesError):
            load_scenarios(target, probs_column=True)


class TestRoundTrip:
    def test_uniform_roundtrip_identity(self, tmp_path, garch_paths_200):
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        save_scenarios(garch_paths_200, first)
        loaded = load_scenarios(first)
        assert np.array_equal(loaded.values, garch_paths_200.values)
        assert np.array_equal(loaded.probs, garch_paths_200.probs)
        save_scenarios(loaded, second)
        assert first.read_text() == second.read_text()

    def test_probability_roundtrip_identity(self, tmp_path):
        from evotree import ScenarioPaths

        rng = np.random.default_rng(3)
        probs = rng.random(8)
        probs /= probs.sum()
        paths = ScenarioPaths(rng.normal(size=(8, 3)), probs)
        target = tmp_path / "p.csv"
        save_scenarios(paths, target, probs_column=True)
        loaded = load_scenarios(target, probs_column=True)
        assert np.array_equal(loaded.values, paths.values)
        assert np.array_equal(loaded.probs, paths.probs)


class TestGarchParams:
    def test_rejects_nonstationary(self):
        with pytest.raises(NonStationaryParamsError):
            GarchParams(mu=0.0, omega=1e-4, alpha=0.6, beta=0.5)

    def test_override_requires_sigma0(self):
        with pytest.raises(NonStationaryParamsError):
            GarchParams(mu=0.0, omega=1e-4, alpha=0.6, beta=0.5,
                        check_stationarity=False)
        params = GarchParams(mu=0.0, omega=1e-4, alpha=0.6, beta=0.5,
                             sigma0=0.02, check_stationarity=False)
        assert params.initial_variance == pytest.approx(4e-4)

    def test_rejects_bad_shape_params(self):
        with pytest.raises(ValueError):
            GarchParams(mu=0.0, omega=0.0, alpha=0.1, beta=0.1)
        with pytest.raises(ValueError):
            GarchParams(mu=0.0, omega=1e-4, alpha=-0.1, beta=0.1)

    def test_stationary_initial_variance(self):
        params = GarchParams(mu=0.0, omega=1e-5, alpha=0.05, beta=0.90)
        assert params.initial_variance == pytest.approx(1e-5 / 0.05)


class TestSimulateGarch:
    def test_constant_variance_case(self):
        # alpha = beta = 0 collapses to r_t = 0.01 z_t
        params = GarchParams(mu=0.0, omega=1e-4, alpha=0.0, beta=0.0)
        paths = simulate_garch(params, 2000, 50, seed=11)
        sample = paths.values.ravel()
        assert sample.size == 100_000
        assert np.var(sample) == pytest.approx(1e-4, rel=0.05)

    def test_mean_recovers_mu(self):
        params = GarchParams(mu=0.001, omega=1e-5, alpha=0.05, beta=0.90)
        paths = simulate_garch(params, 10_000, 1, seed=5)
        sigma = np.sqrt(params.initial_variance)
        se = sigma / np.sqrt(10_000)
        assert abs(paths.values.mean() - 0.001) < 3 * se

    def test_stationary_variance(self):
        params = GarchParams(mu=0.0, omega=1e-5, alpha=0.05, beta=0.90)
        paths = simulate_garch(params, 20_000, 5, seed=7)
        sample = paths.values.ravel()
        assert sample.size == 100_000
        target = params.initial_variance
        var_hat = np.var(sample)
        # standard error of the sample variance, estimated from the sample
        m4 = np.mean((sample - sample.mean()) ** 4)
        se = np.sqrt((m4 - var_hat**2) / sample.size)
        assert abs(var_hat - target) < 5 * se

    def test_deterministic(self):
        params = GarchParams(mu=0.0, omega=1e-5, alpha=0.08, beta=0.90)
        a = simulate_garch(params, 50, 3, seed=123)
        b = simulate_garch(params, 50, 3, seed=123)
        assert np.array_equal(a.values, b.values)

    def test_path_streams_do_not_depend_on_path_count(self):
        params = GarchParams(mu=0.0, omega=1e-5, alpha=0.08, beta=0.90)
        small = simulate_garch(params, 10, 3, seed=123)
        large = simulate_garch(params, 50, 3, seed=123)
        assert np.array_equal(large.values[:10], small.values)

    def test_invalid_counts(self):
        params = GarchParams(mu=0.0, omega=1e-4, alpha=0.0, beta=0.0)
        with pytest.raises(InvalidCountError):
            simulate_garch(params, 0, 3, seed=1)
        with pytest.raises(InvalidCountError):
            simulate_garch(params, 3, 0, seed=1)
