import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from uentropy import isoelastic_utility, log_utility, make_space, normalize

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def builtins():
    return [log_utility(), isoelastic_utility(0.5), isoelastic_utility(-1.0)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@st.composite
def spaces(draw, min_n=1, max_n=8):
    n = draw(st.integers(min_n, max_n))
    w = draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n))
    w = np.array(w)
    return make_space(w / w.sum())


@st.composite
def densities(draw, min_n=1, max_n=8, allow_zero=True):
    space = draw(spaces(min_n, max_n))
    lo = 0.0 if allow_zero else 0.05
    v = draw(st.lists(st.floats(lo, 5.0), min_size=space.n, max_size=space.n))
    v = np.array(v)
    if not (v > 0).any():
        v[0] = 1.0
    return normalize(v, space)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
