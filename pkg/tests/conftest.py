from __future__ import annotations

import numpy as np
import pytest

from spatialnet.distributions import make_uniform, target_as_reference


@pytest.fixture
def flat():
    """Target/reference pair with f == g, so every importance ratio is 1."""
    target = make_uniform(0.0, 1.0)
    return target, target_as_reference(target)


def constant_weights(n: int, r: float = 0.5) -> np.ndarray:
    return np.full((n, n), r)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
