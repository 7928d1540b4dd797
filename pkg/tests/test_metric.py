import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdich.errors import (
    DuplicateIndex,
    IndexOutOfRange,
    MalformedInput,
    SizeMismatch,
    SymmetryError,
    TooSmall,
    TriangleViolation,
    ZeroOffDiagonal,
)
from mdich.metric import (
    aspect_ratio,
    distortion_of,
    equilateral_distortion,
    equilateral_space,
    from_json,
    restrict,
    to_json,
    validate_metric,
)
from mdich.trees import LacunarySequence, lacunary_metric

from conftest import line, metrics


def test_equilateral_triple_is_valid():
    M = validate_metric([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    assert M.n == 3
    assert aspect_ratio(M) == 1


def test_triangle_violation_reports_triple():
    with pytest.raises(TriangleViolation) as exc:
        validate_metric([[0, 1, 3], [1, 0, 1], [3, 1, 0]])
    assert sorted(exc.value.triple) == [0, 1, 2]


def test_asymmetric_rejected():
    with pytest.raises(SymmetryError):
        validate_metric([[0, 1], [2, 0]])


def test_zero_off_diagonal_rejected():
    with pytest.raises(ZeroOffDiagonal):
        validate_metric([[0, 0], [0, 0]])


@pytest.mark.parametrize("raw", [[[0, 1]], [[0, np.inf], [np.inf, 0]], [[1, 1], [1, 0]], "abc"])
def test_malformed_matrices(raw):
    with pytest.raises(Exception):
        validate_metric(raw)


def test_restrict_examples():
    M = line(0, 1, 3, 7)
    w = restrict(M, [0, 2])
    assert w.induced.n == 2 and w.induced.d(0, 1) == M.d(0, 2)
    full = restrict(M, range(4))
    assert np.array_equal(full.induced.dist, M.dist)
    single = restrict(M, [3])
    assert single.induced.n == 1


def test_restrict_preserves_order():
    M = line(0, 1, 3, 7)
    w = restrict(M, [3, 0])
    assert w.indices == (3, 0)
    assert w.induced.d(0, 1) == 7


def test_restrict_errors():
    M = line(0, 1, 3)
    with pytest.raises(IndexOutOfRange):
        restrict(M, [0, 3])
    with pytest.raises(DuplicateIndex):
        restrict(M, [1, 1])
    with pytest.raises(TooSmall):
        restrict(M, [])


def test_distortion_examples():
    A = line(0, 1, 3, 7)
    assert distortion_of(range(4), A, A).distortion == 1
    cert = distortion_of(range(4), A, A.scaled(7))
    assert cert.expansion == pytest.approx(7)
    assert cert.contraction == pytest.approx(1 / 7)
    assert cert.distortion == pytest.approx(1)
    tri = equilateral_space(3)
    flat = validate_metric([[0, 1, 1], [1, 0, 2], [1, 2, 0]])
    assert distortion_of(range(3), tri, flat).distortion == pytest.approx(2)


def test_distortion_size_mismatch():
    with pytest.raises(SizeMismatch):
        distortion_of(range(2), equilateral_space(2), equilateral_space(3))


def test_aspect_ratio_examples():
    assert aspect_ratio(equilateral_space(5, 3.3)) == 1
    assert aspect_ratio(line(0, 1, 3)) == 3
    L = lacunary_metric(LacunarySequence((8, 4, 2), 2))
    assert L.n == 4
    assert aspect_ratio(L) == 4 == 2 ** (L.n - 2)
    with pytest.raises(TooSmall):
        aspect_ratio(equilateral_space(1))


def test_equilateral_distortion_examples():
    assert equilateral_distortion(equilateral_space(3)) == 1
    assert equilateral_distortion(validate_metric([[0, 1, 1], [1, 0, 2], [1, 2, 0]])) == 2
    with pytest.raises(TooSmall):
        equilateral_distortion(equilateral_space(1))


def _sweep_equilateral(M):
    best = np.inf
    for w in M.pair_distances():
        E = equilateral_space(M.n, w)
        best = min(best, distortion_of(range(M.n), M, E).distortion)
    return best


@given(metrics(max_n=6))
def test_equilateral_distortion_matches_sweep(M):
    assert equilateral_distortion(M) == pytest.approx(_sweep_equilateral(M), rel=1e-12)


@given(metrics(max_n=6), st.data())
def test_distortion_at_least_one(M, data):
    perm = data.draw(st.permutations(range(M.n)))
    cert = distortion_of(perm, M, M)
    assert cert.distortion >= 1 - 1e-12
    assert cert.verify()
    assert distortion_of(range(M.n), M, M).distortion == 1


@given(metrics(min_n=3, max_n=7), st.data())
def test_aspect_ratio_monotone_under_restriction(M, data):
    S = data.draw(st.lists(st.integers(0, M.n - 1), min_size=2, max_size=M.n, unique=True))
    assert aspect_ratio(restrict(M, S).induced) <= aspect_ratio(M) * (1 + 1e-12)


@given(metrics(max_n=6), st.floats(0.01, 100), st.floats(0.01, 100))
def test_distortion_scale_invariant(M, s, t):
    base = distortion_of(range(M.n), M, M).distortion
    scaled = distortion_of(range(M.n), M.scaled(s), M.scaled(t)).distortion
    assert scaled == pytest.approx(base, rel=1e-9)


@given(metrics(max_n=6))
def test_restrict_bitwise(M):
    idx = list(range(0, M.n, 2))
    w = restrict(M, idx)
    for a, b in itertools.product(range(len(idx)), repeat=2):
        assert w.induced.dist[a, b] == M.dist[idx[a], idx[b]]


def test_json_roundtrip():
    M = line(0, 1.5, 4)
    obj = json.loads(json.dumps(to_json(M)))
    assert obj["format"] == "metric-v1"
    assert from_json(obj) == M
    with pytest.raises(MalformedInput):
        from_json({"format": "nope"})
