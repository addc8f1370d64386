import logging
import math

import hypothesis
import numpy as np
import pytest
from hypothesis import strategies as st

from lmgtherm.sector import SectorParams

hypothesis.settings.register_profile("default", deadline=None, max_examples=60)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_block_warnings(caplog):
    # degenerate sectors log on purpose; keep the test output readable
    caplog.set_level(logging.ERROR, logger="lmgtherm")


@st.composite
def sectors(draw, n_max=40, field_span=2.5):
    N = draw(st.integers(2, n_max))
    two_j = draw(st.sampled_from([t for t in range(N % 2, N + 1, 2) if t >= 2]))
    J = draw(st.floats(0.3, 3.0))
    ratio = draw(st.floats(-field_span, field_span))
    base = SectorParams(N, two_j, J, 0.0)
    return base.with_field(ratio * two_j * J / N)


finite_betas = st.floats(0.05, 20.0)
betas = st.one_of(finite_betas, st.just(math.inf))


def rng(seed=0):
    return np.random.default_rng(seed)
