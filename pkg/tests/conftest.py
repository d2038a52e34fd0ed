import numpy as np
import pytest

# One pass/fail line per acceptance criterion, printed in the terminal
# summary regardless of capture settings.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)


def random_quat(rng: np.random.Generator) -> np.ndarray:
    """Uniform random unit quaternion, scalar first."""
    q = rng.normal(size=4)
    while np.linalg.norm(q) < 1e-6:
        q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random proper rotation matrix via QR with sign fixing."""
    a = rng.normal(size=(3, 3))
    q, r = np.linalg.qr(a)
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return q
