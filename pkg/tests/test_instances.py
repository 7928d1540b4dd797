import itertools
import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdich.errors import (
    DegenerateFactor,
    DisconnectedGraph,
    FourPointViolation,
    HypothesisViolated,
    SizeCapExceeded,
    TriesExhausted,
)
from mdich.instances import (
    PRNG_ID,
    cell_seed,
    certified_ramsey_graph,
    certify_graph,
    composition_power,
    decompose_flat,
    decompose_lacunary,
    four_point_violation,
    graph_from_json,
    graph_metric,
    metric_composition,
    random_graph_metric,
    random_metric,
)
from mdich.metric import aspect_ratio, check_triangle, equilateral_space, restrict, validate_metric
from mdich.oracle import is_lacunary_embeddable

from conftest import line, metrics


def test_composition_two_by_two():
    P = line(0, 1)
    rec = metric_composition(P, P, 2)
    assert rec.gamma == 1
    D = rec.product.dist
    assert D[0, 1] == 1 and D[2, 3] == 1
    assert D[0, 2] == D[0, 3] == D[1, 2] == D[1, 3] == 2
    assert rec.product.labels[3] == (1, 1)


def test_composition_gamma():
    M = line(0, 2, 5)
    N = line(0, 6)
    rec = metric_composition(M, N, 1.5)
    assert rec.gamma == 3
    assert rec.product.dist[0, 2] == pytest.approx(3 * 1.5 * 2)
    assert rec.product.dist[1, 4] == pytest.approx(3 * 1.5 * 5)


def test_composition_degenerate():
    with pytest.raises(DegenerateFactor):
        metric_composition(equilateral_space(1), line(0, 1))


def test_composition_with_singleton_inner():
    rec = metric_composition(line(0, 1, 3), equilateral_space(1), 2)
    assert rec.gamma == 1
    assert np.array_equal(rec.product.dist, 2 * line(0, 1, 3).dist)


@given(metrics(max_n=8), metrics(min_n=1, max_n=8), st.floats(1, 5))
def test_composition_is_metric(M, N, beta):
    rec = metric_composition(M, N, beta)
    assert rec.product.n == M.n * N.n
    validate_metric(rec.product.dist)
    for p, q in itertools.combinations(range(rec.product.n), 2):
        a, b = rec.copy_of(p), rec.copy_of(q)
        want = N.dist[rec.point_of(p), rec.point_of(q)] if a == b else beta * rec.gamma * M.dist[a, b]
        assert rec.product.dist[p, q] == pytest.approx(want)


def test_power_examples():
    M = line(0, 1)
    assert composition_power(M, 2, 1) == M.__class__.trusted(M.dist, [(0,), (1,)])
    P2 = composition_power(M, 2, 2)
    assert np.array_equal(P2.dist, metric_composition(M, M, 2).product.dist)
    P3 = composition_power(random_metric(3, 0), 2, 3)
    assert P3.n == 27
    assert check_triangle(P3.dist) is None
    S = composition_power(random_metric(3, 0), 2, 2, base="singleton")
    assert S.n == 9 and S.meta["composition_power"]["base"] == "singleton"
    with pytest.raises(SizeCapExceeded):
        composition_power(random_metric(5, 0), 2, 6)


def test_graph_examples():
    K = graph_metric(list(itertools.combinations(range(5), 2)), 5)
    assert aspect_ratio(K) == 1 and K.dist.max() == 1
    P = graph_metric([(0, 1), (1, 2), (2, 3)], 4)
    assert list(P.dist[0]) == [0, 1, 2, 3]
    assert random_graph_metric(12, 0.5, 7) == random_graph_metric(12, 0.5, 7)
    assert random_graph_metric(5, 1.0, 3).dist.max() == 1
    with pytest.raises(DisconnectedGraph):
        graph_metric([(0, 1)], 3)


def test_c5_certificate():
    cert = certify_graph([(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)], 5)
    assert (cert.diameter, cert.clique, cert.independent, cert.method) == (2, 2, 2, "exact")


def test_complete_graph_not_accepted():
    cert = certify_graph(list(itertools.combinations(range(4), 2)), 4)
    assert cert.diameter == 1
    for seed in range(30):
        space, cert = certified_ramsey_graph(4, seed)
        assert cert.diameter == 2 == space.dist.max()


def _exhaustive_alpha(edges, s):
    G = nx.Graph()
    G.add_nodes_from(range(s))
    G.add_edges_from(edges)
    best_w = best_a = 0
    for mask in range(1, 1 << s):
        S = [v for v in range(s) if mask >> v & 1]
        pairs = list(itertools.combinations(S, 2))
        if all(G.has_edge(*e) for e in pairs):
            best_w = max(best_w, len(S))
        if not any(G.has_edge(*e) for e in pairs):
            best_a = max(best_a, len(S))
    return best_w, best_a


@pytest.mark.parametrize("seed", range(5))
def test_certificate_matches_brute_force(seed):
    space, cert = certified_ramsey_graph(11, seed)
    assert (cert.clique, cert.independent) == _exhaustive_alpha(cert.edges, 11)
    s, E = graph_from_json(json.loads(json.dumps(cert.to_json())))
    assert graph_metric(E, s) == space
    assert space.meta["provenance"]["prng"] == PRNG_ID


def test_uncertified_above_cap():
    _, cert = certified_ramsey_graph(40, 0)
    assert cert.method == "uncertified"
    assert cert.clique >= 2 and cert.independent >= 2


def test_tries_exhausted():
    with pytest.raises(TriesExhausted):
        certified_ramsey_graph(3, 0, max_tries=0)


def test_cell_seed_is_stable():
    assert cell_seed(1, 64) == cell_seed(1, 64)
    assert cell_seed(1, 64) != cell_seed(1, 128)


def test_flat_examples():
    rec = metric_composition(random_metric(3, 1), random_metric(3, 2), 2)
    assert decompose_flat(rec, [3, 4, 5], 1.9).side == "InN"
    out = decompose_flat(rec, [0, 4, 8], 1.9)
    assert out.side == "InM" and out.images == (0, 1, 2)


def _flat_maximal_sets(D, alpha):
    """Every subset with aspect ratio <= alpha sits in one of these (clique per min-distance band)."""
    n = D.shape[0]
    for m in np.unique(D[np.triu_indices(n, 1)]):
        G = nx.Graph()
        G.add_nodes_from(range(n))
        band = (D >= m * (1 - 1e-12)) & (D <= alpha * m * (1 + 1e-12))
        G.add_edges_from((i, j) for i, j in zip(*np.nonzero(np.triu(band, 1))))
        yield from nx.find_cliques(G)


@pytest.mark.parametrize("seed", range(20))
def test_flat_exhaustive_six_by_six(seed):
    rng = np.random.default_rng(seed)
    M = random_metric(int(rng.integers(2, 7)), seed)
    N = random_metric(int(rng.integers(1, 7)), seed + 1000)
    beta, alpha = 2.0, 1.0 + float(rng.uniform(0, 0.99))
    rec = metric_composition(M, N, beta)
    for Q in _flat_maximal_sets(rec.product.dist, alpha):
        Q = sorted(Q)
        decompose_flat(rec, Q, alpha)
        if len(Q) > 2:
            decompose_flat(rec, Q[:-1], alpha)


def test_flat_all_subsets_small():
    rec = metric_composition(random_metric(3, 5), random_metric(3, 6), 2)
    n = rec.product.n
    for mask in range(1, 1 << n):
        S = [p for p in range(n) if mask >> p & 1]
        if len(S) == 1 or aspect_ratio(restrict(rec.product, S).induced) <= 1.9:
            decompose_flat(rec, S, 1.9)


def test_lacunary_examples():
    rec = metric_composition(random_metric(3, 1), random_metric(3, 2), 2)
    out = decompose_lacunary(rec, [3, 4, 5], 1.5, 2)
    assert out.T == () and out.rest == (3, 4, 5)
    out = decompose_lacunary(rec, [0, 4, 8], 1.5, 2)
    assert len(out.rest) == 0 and out.T == (0, 4, 8)
    with pytest.raises(FourPointViolation):
        decompose_lacunary(rec, [0, 1, 3, 4], 1.5, 2)


@pytest.mark.parametrize("shape", [(3, 3), (4, 2), (2, 4)])
def test_lacunary_exhaustive(shape):
    alpha, k = 1.5, 2.0
    M = random_metric(shape[0], sum(shape))
    N = random_metric(shape[1], 7 * sum(shape))
    rec = metric_composition(M, N, 2)
    n = rec.product.n
    certified = 0
    for mask in range(1, 1 << n):
        S = [p for p in range(n) if mask >> p & 1]
        if len(S) >= 2:
            ok, _ = is_lacunary_embeddable(restrict(rec.product, S).induced, alpha, k)
            if not ok:
                continue
        certified += 1
        out = decompose_lacunary(rec, S, alpha, k)
        assert sorted(out.T + out.rest) == S
        assert four_point_violation(rec.product.dist, S, alpha, k) is None
    assert certified > n
