import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdich.errors import AlphaTooSmall
from mdich.extraction import EQUILATERAL, LACUNARY, chain_failures, greedy_equilateral_or_lacunary
from mdich.instances import equilateral_metric, euclidean_metric, geometric_lacunary, random_metric
from mdich.metric import aspect_ratio

from conftest import line, metrics


def test_equilateral_absorbed_by_net():
    res = greedy_equilateral_or_lacunary(equilateral_metric(4), 3, threshold=2)
    assert res.kind == EQUILATERAL
    assert aspect_ratio(res.witness.induced) == 1
    assert res.failures() == []


def test_line_net():
    M = line(0, 10, 11)
    res = greedy_equilateral_or_lacunary(M, 3, threshold=2)
    assert res.kind == EQUILATERAL
    assert res.indices == (0, 1)


def test_alpha_too_small():
    with pytest.raises(AlphaTooSmall):
        greedy_equilateral_or_lacunary(equilateral_metric(3), 2)


def test_chain_on_lacunary_input():
    M = geometric_lacunary(12, 4)
    res = greedy_equilateral_or_lacunary(M, 3, 2, threshold=3)
    assert res.kind == LACUNARY
    assert chain_failures(res) == []
    assert res.failures() == []


@pytest.mark.parametrize("family", ["random", "euclidean"])
def test_random_postconditions(family):
    for seed in range(100):
        M = random_metric(1024, seed) if family == "random" else euclidean_metric(1024, 2, seed)
        res = greedy_equilateral_or_lacunary(M, 3, 2)
        assert res.failures() == []
        assert chain_failures(res) == []


@given(metrics(max_n=30), st.floats(2.1, 6), st.floats(1, 8), st.integers(2, 5))
def test_guarantees_hold(M, alpha, k, T):
    res = greedy_equilateral_or_lacunary(M, alpha, k, T)
    assert res.failures() == []
    assert chain_failures(res) == []
    if res.kind == EQUILATERAL:
        assert res.size >= T
        assert aspect_ratio(res.witness.induced) <= alpha * (1 + 1e-9)


@given(st.integers(4, 40), st.floats(2.5, 4), st.integers(0, 10**6))
def test_thinning_reaches_k(n, alpha, seed):
    M = euclidean_metric(n, 1, seed)
    k = alpha  # above alpha / 2, forces thinning
    res = greedy_equilateral_or_lacunary(M, alpha, k, threshold=n + 1)
    assert res.kind == LACUNARY
    assert res.structure.separation() >= k * (1 - 1e-9)
    assert res.failures() == []
    assert res.guarantee.size == pytest.approx(math.log(n) / math.log(n + 1) / res.guarantee.params["stride"])
