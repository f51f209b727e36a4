import math

import pytest

from dipolebounds.config import DESK, DipoleOrientation


@pytest.fixture(scope="session")
def tiny():
    """Coarse pupil and small field of view: fast structural checks."""
    return DESK.replace(pupil_grid_side=65, image_fov_nm=2000.0)


@pytest.fixture(scope="session")
def small():
    """Coarse pupil, full 4 um field of view: for comparisons against the QFI."""
    return DESK.replace(pupil_grid_side=129)


@pytest.fixture(scope="session")
def oblique():
    return DipoleOrientation(math.pi / 3, math.pi / 3)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
