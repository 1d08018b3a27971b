import numpy as np
import pytest
from hypothesis import settings, strategies as st

from regenset.sets import GapSet

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

# endpoints on the 1/1000 grid; the oracle grid 1/10000 contains every endpoint,
# so grid membership decides every set operation exactly
GRID = np.arange(10_001) / 10_000


@st.composite
def gapsets(draw, max_components=8):
    pairs = draw(
        st.lists(
            st.tuples(st.integers(0, 1000), st.integers(0, 1000)).map(sorted),
            max_size=max_components,
        )
    )
    return GapSet.from_components([(a / 1000, b / 1000) for a, b in pairs])


@pytest.fixture
def grid():
    return GRID


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
