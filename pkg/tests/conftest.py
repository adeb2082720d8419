import numpy as np
import pytest

from rssidoa.harness.synthetic import SyntheticPatternSpec, synth_pattern


@pytest.fixture(scope="session")
def cardioid():
    """Four sensors at 0/90/180/270 deg, p=1, knots 10..350 every 20 deg."""
    return synth_pattern(SyntheticPatternSpec())


@pytest.fixture(scope="session")
def cardioid36():
    return synth_pattern(SyntheticPatternSpec(), np.arange(0.0, 360.0, 10.0))


@pytest.fixture(scope="session")
def skewed():
    """Asymmetric pattern: uneven boresights and a sharper lobe."""
    return synth_pattern(SyntheticPatternSpec(4, (0.0, 75.0, 200.0, 290.0), 2.0))


def circ(a, b):
    d = np.abs(np.mod(np.asarray(a) - b, 360.0))
    return np.minimum(d, 360.0 - d)


# one PASS/FAIL line per acceptance criterion, echoed at the end of the run
CRITERIA = []


def report_criterion(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
