import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from analog_polar.mixdist import MixedDistribution

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def mixtures(draw, max_atoms=4, max_gauss=3, allow_empty_continuous=True, allow_empty_discrete=True,
             lattice=False):
    """Random normalized atoms + Gaussian mixture."""
    k = draw(st.integers(0 if allow_empty_discrete else 1, max_atoms))
    g = draw(st.integers(0 if allow_empty_continuous else 1, max_gauss))
    if k + g == 0:
        k = 1
    if lattice:
        locs = draw(st.lists(st.integers(-3, 3), min_size=k, max_size=k, unique=True))
    else:
        locs = draw(st.lists(st.floats(-4, 4, allow_nan=False), min_size=k, max_size=k,
                             unique_by=lambda v: round(v, 6)))
    means = draw(st.lists(st.floats(-3, 3), min_size=g, max_size=g))
    var = draw(st.lists(st.floats(0.1, 4.0), min_size=g, max_size=g))
    w = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=k + g, max_size=k + g)))
    w = w / w.sum()
    return MixedDistribution(np.array(locs, dtype=float), w[:k], np.array(means, dtype=float),
                             np.array(var, dtype=float), w[k:])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def report(cid: str, title: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'}  {cid} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
