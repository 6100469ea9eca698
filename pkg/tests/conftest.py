import numpy as np
import pytest

from cashsubrisk import core


def sum_statistic(x):
    """R(X) = +sum X: increasing, so it breaks monotonicity."""
    return np.sum(x, axis=-1)


def neg_min_squared(x):
    """R(X) = -(min X)^2: not convex on boxes away from the origin."""
    return -np.min(x, axis=-1) ** 2


def catalog(n=2):
    """One instance of every catalog kind at dimension n (worst/scaled take any n)."""
    w = np.full(n, 1.0 / n)
    d = np.linspace(0.5, 1.0, n)
    return {
        "worst_case": core.worst_case(),
        "neg_expectation": core.neg_expectation(w),
        "entropic": core.entropic(1.0, w),
        "discounted": core.discounted(core.worst_case(), d),
        "loss_based": core.loss_based(w),
        "scaled_worst_case": core.scaled_worst_case(2.0),
    }


@pytest.fixture
def half():
    return (0.5, 0.5)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    lines = getattr(test_acceptance, "CRITERIA_LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
