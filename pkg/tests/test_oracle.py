import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdich.errors import BadParameters, CapExceeded
from mdich.instances import composition_power, equilateral_metric, metric_composition, random_hst, random_metric
from mdich.metric import aspect_ratio, restrict
from mdich.oracle import (
    bound_binary_hst_size,
    bound_lacunary_size,
    caps_with,
    four_point_check,
    is_binary_hst_embeddable,
    is_binary_hst_embeddable_slow,
    is_lacunary_embeddable,
    is_lacunary_embeddable_slow,
    max_binary_hst_subset,
    max_binary_hst_subset_slow,
    max_equilateral_subset,
    max_equilateral_subset_slow,
    max_lacunary_subset,
    max_lacunary_subset_slow,
)
from mdich.trees import hst_metric, lacunary_metric

from conftest import line, metrics

ALPHAS = [1.0, 1.3, 2.0, 3.0]
KS = [1.0, 1.5, 2.0, 4.0]


def _two_level():
    P = line(0, 1)
    return metric_composition(P, P, 2).product


def test_equilateral_examples():
    assert max_equilateral_subset(_two_level(), 1.5).optimum == 2
    assert max_equilateral_subset_slow(_two_level(), 1.5) == 2
    assert max_equilateral_subset(equilateral_metric(7), 1).optimum == 7
    assert max_equilateral_subset(line(0, 1, 3), 2).optimum == 2


def test_lacunary_decider_examples():
    tri = equilateral_metric(3)
    ok, (order, seq) = is_lacunary_embeddable(tri, 2, 2)
    assert ok and seq.values == (2, 1)
    assert not is_lacunary_embeddable(tri, 1.9, 2)[0]
    assert is_lacunary_embeddable(lacunary_metric((4, 1)), 1, 4)[0]


def test_lacunary_max_examples():
    rep = max_lacunary_subset(equilateral_metric(5), 2, 2)
    assert rep.optimum == 3 == bound_lacunary_size(2, 2, 1)
    assert rep.verify()
    assert max_lacunary_subset(line(0, 7), 1.0, 9).optimum == 2


def test_lacunary_on_composition_powers():
    alpha, k = 1.5, 2.0
    for seed in range(3):
        for t in (1, 2):
            P = composition_power(random_metric(3, seed), 2, t)
            assert max_lacunary_subset(P, alpha, k).optimum <= t * (1 + math.log(2 * alpha, k))


def test_hst_decider_examples():
    assert not is_binary_hst_embeddable(equilateral_metric(4), 1, 2)[0]
    assert is_binary_hst_embeddable(line(0, 5), 1, 3)[0]
    for seed in range(10):
        T = random_hst(7, 2.5, seed)
        ok, tree = is_binary_hst_embeddable(hst_metric(T, order=range(7)), 1, 2.5)
        assert ok and tree.n_leaves == 7


def test_hst_max_examples():
    assert max_binary_hst_subset(equilateral_metric(5), 1, 2).optimum == 2
    assert max_binary_hst_subset(equilateral_metric(5), 2, 2).optimum == 4
    T = random_hst(9, 3, 4)
    rep = max_binary_hst_subset(hst_metric(T, order=range(9)), 1, 3)
    assert rep.optimum == 9 and rep.verify()


def test_bounds():
    assert bound_lacunary_size(2, 2, 1) == 3
    assert bound_lacunary_size(1, 2, 1) == 2
    assert bound_binary_hst_size(2, 2, 1) == 4
    with pytest.raises(BadParameters):
        bound_lacunary_size(2, 1, 1)
    with pytest.raises(BadParameters):
        bound_binary_hst_size(0.5, 2, 1)


def test_four_point_examples():
    ok, quad = four_point_check(lacunary_metric((8, 4, 2)), 1, 2)
    assert ok and quad is None
    assert four_point_check(equilateral_metric(4), 2, 2)[0]
    ok, quad = four_point_check(equilateral_metric(4), 1.5, 2)
    assert not ok and sorted(quad) == [0, 1, 2, 3]
    assert four_point_check(equilateral_metric(3), 1, 9)[0]


def test_caps():
    with pytest.raises(CapExceeded):
        max_lacunary_subset(random_metric(13, 0), 2, 2)
    with pytest.raises(CapExceeded):
        is_binary_hst_embeddable(random_metric(9, 0), 2, 2)
    with pytest.raises(CapExceeded):
        max_equilateral_subset(random_metric(41, 0), 2)
    assert max_equilateral_subset(random_metric(41, 0), 2, caps={"equilateral": 50}).optimum == 41
    with pytest.raises(BadParameters):
        caps_with({"nope": 1})


def test_hst_needs_k_above_one():
    with pytest.raises(BadParameters):
        is_binary_hst_embeddable(equilateral_metric(3), 2, 1)


@pytest.mark.parametrize("exact", [False, True])
def test_fast_matches_slow(exact):
    for seed in range(40):
        n = 3 + seed % 5
        M = random_metric(n, seed, 1, 2) if seed % 2 else random_metric(n, seed, 1, 1.2)
        for alpha, k in [(1.0, 2.0), (1.5, 2.0), (2.0, 1.5), (3.0, 4.0)]:
            assert max_equilateral_subset(M, alpha, exact=exact).optimum == max_equilateral_subset_slow(M, alpha)
            assert max_lacunary_subset(M, alpha, k, exact=exact).optimum == max_lacunary_subset_slow(M, alpha, k)
            assert max_binary_hst_subset(M, alpha, k, exact=exact).optimum == max_binary_hst_subset_slow(M, alpha, k)


@given(metrics(min_n=2, max_n=6), st.sampled_from(ALPHAS), st.sampled_from([1.5, 2.0, 3.0]))
def test_deciders_match_slow(M, alpha, k):
    assert is_lacunary_embeddable(M, alpha, k)[0] == is_lacunary_embeddable_slow(M, alpha, k)
    assert is_binary_hst_embeddable(M, alpha, k)[0] == is_binary_hst_embeddable_slow(M, alpha, k)


@given(metrics(min_n=2, max_n=7), st.sampled_from(ALPHAS), st.sampled_from([1.5, 2.0, 4.0]))
def test_witnesses_reverify(M, alpha, k):
    for rep in (
        max_equilateral_subset(M, alpha),
        max_lacunary_subset(M, alpha, k),
        max_binary_hst_subset(M, alpha, k),
    ):
        assert rep.failures() == []
        json.dumps(rep.to_json())


@given(metrics(min_n=2, max_n=7), st.sampled_from([1.5, 2.0, 4.0]))
def test_bound_compliance(M, k):
    for alpha in ALPHAS:
        lac = max_lacunary_subset(M, alpha, k)
        hst = max_binary_hst_subset(M, alpha, k)
        for rep, bound in ((lac, bound_lacunary_size), (hst, bound_binary_hst_size)):
            if rep.optimum >= 2:
                phi = aspect_ratio(restrict(M, rep.witness).induced)
                assert rep.optimum <= bound(alpha, k, phi) * (1 + 1e-9)


@given(metrics(min_n=2, max_n=6))
def test_monotonicity(M):
    prev = None
    for alpha in ALPHAS:
        row = [max_lacunary_subset(M, alpha, k).optimum for k in KS]
        assert row == sorted(row, reverse=True)
        eq = max_equilateral_subset(M, alpha).optimum
        hs = [max_binary_hst_subset(M, alpha, k).optimum for k in KS[1:]]
        assert hs == sorted(hs, reverse=True)
        cur = (row, eq, hs)
        if prev is not None:
            assert all(a <= b for a, b in zip(prev[0], row))
            assert prev[1] <= eq
            assert all(a <= b for a, b in zip(prev[2], hs))
        prev = cur


@given(metrics(min_n=4, max_n=7), st.sampled_from([(1.0, 2.0), (1.5, 2.0), (1.2, 3.0)]), st.data())
def test_necessity_chain(M, ak, data):
    alpha, k = ak
    S = data.draw(st.lists(st.integers(0, M.n - 1), min_size=4, max_size=M.n, unique=True))
    sub = restrict(M, S).induced
    if is_lacunary_embeddable(sub, alpha, k)[0]:
        assert four_point_check(sub, alpha, k)[0]


def test_necessity_chain_on_lacunary_spaces():
    for seed in range(50):
        rng = np.random.default_rng(seed)
        vals = np.cumprod(rng.uniform(2.0, 5.0, 5))[::-1]
        M = lacunary_metric(vals)
        assert is_lacunary_embeddable(M, 1, 2)[0]
        assert four_point_check(M, 1, 2)[0]
