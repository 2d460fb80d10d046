import pytest

from vpcollapse.config import RunConfig
from vpcollapse.runner import run

# Lines recorded by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES = []


def record(number, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES, key=lambda x: x[0]):
        terminalreporter.write_line(line)


REFERENCE = RunConfig(a0=1.0, epsilon=0.2, N=100_000, dt=1e-3, dt_hist=1e-2,
                      t_end_fraction=0.9, seed=0, n_probes=0, output_dir="unused")


@pytest.fixture(scope="session")
def reference_run():
    """Reference resolution run to 0.9 T_eps, without per-snapshot core probes."""
    return run(REFERENCE)


@pytest.fixture(scope="session")
def small_run():
    """A cheap run used by unit tests of the history-based operations."""
    cfg = RunConfig(N=20_000, t_end_fraction=0.6, n_probes=0, output_dir="unused")
    return run(cfg)
