import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.lines:
        terminalreporter.section("acceptance summary")
        for line in acceptance_log.lines:
            terminalreporter.write_line(line)
