import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from airis import ChannelSet, Scenario, generate  # noqa: E402


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def unit(x):
    return x / np.linalg.norm(x)


def unit_scenario(m=2, n=4, **kw):
    """Scenario with unit-order noise, for hand-sized channels."""
    return Scenario(m_antennas=m, n_elements=n, p_max=kw.pop("p_max", 1.0), sigma2_irs=kw.pop("sigma2_irs", 0.1),
                    sigma2_user=kw.pop("sigma2_user", 0.2), **kw)


def random_channel(rng, m, n, scale=1.0):
    return ChannelSet(scale * crandn(rng, n, m), scale * crandn(rng, n), scale * crandn(rng, m))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def default32():
    scn = Scenario(n_elements=32)
    return scn, generate(scn, 0)


def pytest_terminal_summary(terminalreporter):
    report = getattr(sys.modules.get("test_acceptance"), "REPORT", None)
    if report:
        terminalreporter.section("acceptance criteria")
        for num in sorted(report):
            terminalreporter.write_line(report[num])
