import sys
from pathlib import Path

import numpy as np
import pytest

from cloudchamber.channelspace import DetectorConfig

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

# filled by test_acceptance, printed at the end of the session
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def random_detector(rng, n_spins, span=1.0, min_gap=0.01, eps_max=0.1, k0=None):
    """Random mesh with every channel open when ``k0`` is given."""
    free = span - (n_spins - 1) * min_gap
    y = np.sort(rng.uniform(0, free, n_spins)) + min_gap * np.arange(n_spins)
    beta = rng.uniform(-2, 2, n_spins)
    gamma = rng.uniform(-4, 4, n_spins)
    eps = rng.uniform(0, eps_max, n_spins)
    if k0 is not None:
        # keep the highest threshold well below the energy
        eps = eps * min(1.0, 0.9 * k0**2 / max(eps.sum(), 1e-300))
    return DetectorConfig(y, beta, gamma, eps)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def configs_dir():
    return CONFIGS


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
