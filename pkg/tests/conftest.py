import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from mdich.instances import random_hst, random_metric

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def metrics(draw, min_n=2, max_n=7):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**31 - 1))
    return random_metric(n, seed)


@st.composite
def hst_trees(draw, max_leaves=12, k=2.0, max_children=3):
    n = draw(st.integers(2, max_leaves))
    seed = draw(st.integers(0, 2**31 - 1))
    return random_hst(n, k, seed, max_children=max_children)


def line(*xs):
    from mdich.metric import validate_metric

    x = np.asarray(xs, dtype=float)
    return validate_metric(np.abs(x[:, None] - x[None, :]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
