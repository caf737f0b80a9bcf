import numpy as np
import pytest

from evotree import GarchParams, ScenarioPaths, simulate_garch

# Ten single-period example returns with the demo chromosome that splits
# them 1,1,2,2,1,1,1,2,2,2 over two nodes; reused across test modules.
TEN_RETURNS = (0.017, -0.023, -0.008, -0.022, -0.019, 0.024, 0.016, -0.006, 0.032, -0.023)
TEN_CHROMOSOME = (0.4387, 0.3816, 0.7655, 0.7952, 0.1869, 0.4898, 0.4456, 0.6463, 0.7094, 0.7547)
TEN_PARTITION = (1, 1, 2, 2, 1, 1, 1, 2, 2, 2)


@pytest.fixture
def ten_paths() -> ScenarioPaths:
    return ScenarioPaths(np.array(TEN_RETURNS).reshape(-1, 1))


@pytest.fixture
def ten_chromosome() -> np.ndarray:
    return np.array(TEN_CHROMOSOME)


@pytest.fixture(scope="session")
def garch_paths_200() -> ScenarioPaths:
    params = GarchParams(mu=0.0005, omega=1e-5, alpha=0.08, beta=0.90)
    return simulate_garch(params, 200, 2, seed=42)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the one-line-per-criterion acceptance report after the run."""
    import sys

    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if results:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
