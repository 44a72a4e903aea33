import numpy as np
import pytest

from torquegrasp.env import GraspEnv, load_grasp
from torquegrasp.sim import load_scene

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def scene():
    return load_scene()


@pytest.fixture(scope="session")
def grasp(scene):
    return load_grasp(None, scene.hand)


@pytest.fixture
def env(scene, grasp):
    return GraspEnv(scene, grasp)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance():
    """record(criterion, passed, detail) for the end-of-run acceptance table."""
    def record(n: int, passed: bool, detail: str) -> None:
        _ACCEPTANCE[n] = (bool(passed), detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
