"""Shared fixtures: dataset location and the acceptance-result summary."""
import os

import pytest

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_DATA_DIR = os.path.join(REPO_ROOT, "data", "mnist")


def mnist_dir() -> str:
    return os.environ.get("SPIKEKIT_DATA_DIR", DEFAULT_DATA_DIR)


def mnist_available() -> bool:
    from spikekit.data import MNIST_FILES, find_file
    d = mnist_dir()
    return all(find_file(d, name) is not None for name in MNIST_FILES.values())


requires_mnist = pytest.mark.skipif(
    not mnist_available(),
    reason="MNIST files not found; set SPIKEKIT_DATA_DIR or populate data/mnist",
)


@pytest.fixture(scope="session")
def data_dir():
    if not mnist_available():
        pytest.skip("MNIST files not found")
    return mnist_dir()


# One line per acceptance criterion, printed after the run.
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def report_criterion(name: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {name}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
