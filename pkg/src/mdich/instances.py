"""Instance generators: metric compositions, graph metrics, certified Ramsey
graphs, random trees and the usual synthetic families.

Every random generator takes an integer seed and draws from
``numpy.random.Generator(PCG64(seed))``; the generator name, parameters, seed
and PRNG id are stored in ``space.meta["provenance"]``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.sparse import csr_array
from scipy.sparse.csgraph import shortest_path

from .errors import (
    BadParameters,
    DegenerateFactor,
    DisconnectedGraph,
    FourPointViolation,
    HypothesisViolated,
    MalformedInput,
    SizeCapExceeded,
    TooSmall,
    TriesExhausted,
)
from .metric import REL_TOL, MetricSpace, aspect_ratio, diameter, equilateral_space, leq, min_distance, restrict
from .trees import HstTree, LacunarySequence, hst_metric, lacunary_metric, point_key

PRNG_ID = "numpy.PCG64"
GRAPH_FORMAT = "graph-v1"
DEFAULT_SIZE_CAP = 4096
DEFAULT_CERT_CAP = 24


def rng_for(seed: int | None) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def cell_seed(seed: int, *key: int) -> int:
    """Derived seed for a sub-task: first word of ``SeedSequence([seed, *key])``."""
    return int(np.random.SeedSequence([int(seed), *[int(x) for x in key]]).generate_state(1, np.uint64)[0])


def provenance(generator: str, params: dict, seed: int | None) -> dict:
    return {"generator": generator, "params": dict(params), "seed": seed, "prng": PRNG_ID}


def _tag(space: MetricSpace, generator: str, params: dict, seed: int | None = None) -> MetricSpace:
    space.meta["provenance"] = provenance(generator, params, seed)
    return space


# compositions -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CompositionRecord:
    """``M_beta[N]``: copies of ``N`` placed at the points of ``M`` scaled by ``beta * gamma``.

    Product point ``i * |N| + j`` is copy ``i``, point ``j``, labelled ``(M-label, N-label)``.
    """

    M: MetricSpace
    N: MetricSpace
    beta: float
    gamma: float
    product: MetricSpace

    def copy_of(self, p: int) -> int:
        return p // self.N.n

    def point_of(self, p: int) -> int:
        return p % self.N.n


def _composition_dist(DM: np.ndarray, DN: np.ndarray, scale: float) -> np.ndarray:
    return scale * np.kron(DM, np.ones_like(DN)) + np.kron(np.eye(DM.shape[0]), DN)


def composition_gamma(M: MetricSpace, N: MetricSpace) -> float:
    """``diam(N) / min d_M``, taken as 1 when ``N`` is a single point."""
    return diameter(N) / min_distance(M) if N.n > 1 else 1.0


def metric_composition(M: MetricSpace, N: MetricSpace, beta: float = 2.0) -> CompositionRecord:
    if M.n < 2:
        raise DegenerateFactor("the outer factor needs at least two points")
    if N.n < 1:
        raise DegenerateFactor("the inner factor is empty")
    if not beta >= 1:
        raise BadParameters("beta must be >= 1")
    gamma = composition_gamma(M, N)
    dist = _composition_dist(M.dist, N.dist, beta * gamma)
    labels = [(a, b) for a in M.labels for b in N.labels]
    product = MetricSpace.trusted(dist, labels, {"composition": {"beta": beta, "gamma": gamma, "outer": M.n, "inner": N.n}})
    return CompositionRecord(M, N, beta, gamma, product)


def composition_power(M: MetricSpace, beta: float = 2.0, t: int = 1, base: str = "copy", cap: int = DEFAULT_SIZE_CAP) -> MetricSpace:
    """``t``-fold iterated composition ``M_i = M_beta[M_{i-1}]``.

    ``base="copy"`` starts from ``M_1 = M``; ``base="singleton"`` starts from a
    one-point ``M_0`` (so ``M_1`` is ``M`` dilated by ``beta``). Both give
    ``|M|**t`` points, labelled by tuples of ``t`` outer-to-inner coordinates.
    """
    if base not in ("copy", "singleton"):
        raise BadParameters(f"unknown base {base!r}")
    if int(t) != t or t < 1:
        raise BadParameters("t must be a positive integer")
    if M.n < 2:
        raise DegenerateFactor("the factor needs at least two points")
    if M.n**t > cap:
        raise SizeCapExceeded(f"|M|^t = {M.n ** t} exceeds the size cap {cap}")
    dist = M.dist.copy() if base == "copy" else beta * M.dist
    labels = [(a,) for a in M.labels]
    for _ in range(t - 1):
        inner = MetricSpace.trusted(dist)
        dist = _composition_dist(M.dist, dist, beta * composition_gamma(M, inner))
        labels = [(a, *rest) for a in M.labels for rest in labels]
    return MetricSpace.trusted(dist, labels, {"composition_power": {"beta": beta, "t": t, "base": base, "factor": M.n}})


@dataclass(frozen=True)
class FlatDecomposition:
    """``side`` is "InN" (one copy) or "InM" (one point per copy); ``images`` index
    that factor and ``d_S = scale * d_factor`` on them."""

    side: str
    images: tuple[int, ...]
    scale: float


def _check_subset(rec: CompositionRecord, S) -> list[int]:
    S = [int(p) for p in S]
    if not S:
        raise TooSmall("subset must be nonempty")
    restrict(rec.product, S)
    return S


def decompose_flat(rec: CompositionRecord, S, alpha: float) -> FlatDecomposition:
    """Isometric copy of a flat subset (aspect ratio <= alpha < beta) inside one factor."""
    if not alpha < rec.beta:
        raise BadParameters(f"need alpha < beta, got alpha={alpha}, beta={rec.beta}")
    S = _check_subset(rec, S)
    if len(S) > 1 and not leq(aspect_ratio(restrict(rec.product, S).induced), alpha):
        raise BadParameters("subset aspect ratio exceeds alpha")
    copies = [rec.copy_of(p) for p in S]
    if len(set(copies)) == 1:
        out = FlatDecomposition("InN", tuple(rec.point_of(p) for p in S), 1.0)
    elif len(set(copies)) == len(S):
        out = FlatDecomposition("InM", tuple(copies), rec.beta * rec.gamma)
    else:
        raise HypothesisViolated("a copy holds two points of the subset while the subset leaves it")
    _check_isometry(rec, S, out)
    return out


def _check_isometry(rec: CompositionRecord, S, dec: FlatDecomposition) -> None:
    if len(S) < 2:
        return
    F = rec.N if dec.side == "InN" else rec.M
    got = rec.product.dist[np.ix_(S, S)]
    want = dec.scale * F.dist[np.ix_(dec.images, dec.images)]
    if not np.allclose(got, want, rtol=REL_TOL, atol=0):
        raise HypothesisViolated("decomposition is not an isometry")


def four_point_violation(dist: np.ndarray, pts, alpha: float, k: float):
    """First ordered quadruple (as positions into ``dist``) violating
    ``max(d12, d34) >= (k/alpha) * min(d13, d14, d23, d24)``, or None."""
    r = k / alpha
    for quad in itertools.combinations(range(len(pts)), 4):
        for a, b, c, d in ((0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2)):
            x1, x2, x3, x4 = (pts[quad[i]] for i in (a, b, c, d))
            lhs = max(dist[x1, x2], dist[x3, x4])
            rhs = min(dist[x1, x3], dist[x1, x4], dist[x2, x3], dist[x2, x4])
            if not leq(r * rhs, lhs):
                return (x1, x2, x3, x4)
    return None


@dataclass(frozen=True)
class LacunaryDecomposition:
    """``T`` (product indices) embeds in ``M`` via ``outer``; ``rest`` lies in copy ``copy``."""

    T: tuple[int, ...]
    rest: tuple[int, ...]
    outer: tuple[int, ...]
    copy: int | None
    scale: float


def decompose_lacunary(rec: CompositionRecord, S, alpha: float, k: float) -> LacunaryDecomposition:
    """Split a lacunary-embeddable subset into an ``M``-transversal and a one-copy remainder."""
    if not (rec.beta >= max(1.0, alpha / k)):
        raise BadParameters("need beta >= max(1, alpha/k)")
    S = _check_subset(rec, S)
    by_copy: dict[int, list[int]] = {}
    for p in S:
        by_copy.setdefault(rec.copy_of(p), []).append(p)
    heavy = [c for c, ps in by_copy.items() if len(ps) > 1]
    if len(heavy) > 1:
        p, q = by_copy[heavy[0]][:2]
        r, s = by_copy[heavy[1]][:2]
        quad = four_point_violation(rec.product.dist, [p, q, r, s], alpha, k)
        if quad is not None:
            raise FourPointViolation(quad)
        raise HypothesisViolated("two copies hold two points each although the four-point inequality holds")
    if heavy:
        c = heavy[0]
        rest = tuple(by_copy[c])
        T = tuple(ps[0] for cc, ps in by_copy.items() if cc != c)
    else:
        c, rest, T = None, (), tuple(S)
    out = LacunaryDecomposition(T, rest, tuple(rec.copy_of(p) for p in T), c, rec.beta * rec.gamma)
    if len(T) > 1:
        _check_isometry(rec, list(T), FlatDecomposition("InM", out.outer, out.scale))
    return out


# graphs ---------------------------------------------------------------------------


def _edge_list(edges, s: int) -> list[tuple[int, int]]:
    out = set()
    for e in edges:
        try:
            i, j = (int(x) for x in e)
        except (TypeError, ValueError):
            raise MalformedInput(f"bad edge {e!r}") from None
        if not (0 <= i < s and 0 <= j < s) or i == j:
            raise MalformedInput(f"edge {e!r} out of range or a loop")
        out.add((min(i, j), max(i, j)))
    return sorted(out)


def graph_metric(edges, s: int) -> MetricSpace:
    """Shortest-path metric of an undirected graph on ``0..s-1``."""
    if s < 1:
        raise TooSmall("graph needs a vertex")
    E = _edge_list(edges, s)
    A = np.zeros((s, s))
    for i, j in E:
        A[i, j] = A[j, i] = 1
    dist = shortest_path(A, method="D", unweighted=True, directed=False)
    if not np.all(np.isfinite(dist)):
        raise DisconnectedGraph("graph is not connected")
    return MetricSpace.trusted(dist)


def random_edges(s: int, p: float, rng: np.random.Generator) -> list[tuple[int, int]]:
    iu, ju = np.triu_indices(s, 1)
    keep = rng.random(len(iu)) < p
    return [(int(i), int(j)) for i, j in zip(iu[keep], ju[keep])]


def random_graph_metric(s: int, p: float = 0.5, seed: int | None = 0) -> MetricSpace:
    if not 0 <= p <= 1:
        raise BadParameters("p must lie in [0, 1]")
    space = graph_metric(random_edges(s, p, rng_for(seed)), s)
    return _tag(space, "random-graph", {"s": s, "p": p}, seed)


@dataclass(frozen=True)
class GraphCertificate:
    s: int
    edges: tuple[tuple[int, int], ...]
    diameter: float
    clique: int
    independent: int
    method: str  # "exact" or "uncertified" (greedy lower bounds)
    tries: int = 1
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "format": GRAPH_FORMAT,
            "s": self.s,
            "edges": [list(e) for e in self.edges],
            "diameter": self.diameter,
            "clique": self.clique,
            "independent": self.independent,
            "method": self.method,
            "tries": self.tries,
            **self.meta,
        }


def graph_from_json(obj: dict) -> tuple[int, list[tuple[int, int]]]:
    if not isinstance(obj, dict) or obj.get("format") != GRAPH_FORMAT:
        raise MalformedInput(f"expected a {GRAPH_FORMAT} object")
    try:
        s = int(obj["s"])
        return s, _edge_list(obj["edges"], s)
    except (KeyError, TypeError) as exc:
        raise MalformedInput(f"malformed graph: {exc}") from None


def max_clique(G: nx.Graph) -> list[int]:
    if G.number_of_nodes() == 0:
        return []
    clique, _ = nx.max_weight_clique(G, weight=None)
    return sorted(clique)


def greedy_clique(G: nx.Graph) -> list[int]:
    """Clique grown by descending degree, lowest index first on ties."""
    order = sorted(G.nodes, key=lambda v: (-G.degree[v], v))
    out: list[int] = []
    for v in order:
        if all(G.has_edge(v, u) for u in out):
            out.append(v)
    return sorted(out)


def certify_graph(edges, s: int, cap: int = DEFAULT_CERT_CAP) -> GraphCertificate:
    """Diameter plus exact clique and independence numbers (greedy bounds above ``cap``)."""
    E = _edge_list(edges, s)
    space = graph_metric(E, s)
    G = nx.Graph()
    G.add_nodes_from(range(s))
    G.add_edges_from(E)
    H = nx.complement(G)
    if s <= cap:
        w, a, method = len(max_clique(G)), len(max_clique(H)), "exact"
    else:
        w, a, method = len(greedy_clique(G)), len(greedy_clique(H)), "uncertified"
    return GraphCertificate(s, tuple(E), diameter(space), w, a, method)


def certified_ramsey_graph(
    s: int, seed: int | None = 0, max_tries: int = 1000, cap: int = DEFAULT_CERT_CAP
) -> tuple[MetricSpace, GraphCertificate]:
    """Sample ``G(s, 1/2)`` until the diameter is exactly 2, then certify it."""
    if s < 3:
        raise BadParameters("a diameter-2 graph needs at least three vertices")
    rng = rng_for(seed)
    for tries in range(1, max_tries + 1):
        E = random_edges(s, 0.5, rng)
        try:
            space = graph_metric(E, s)
        except DisconnectedGraph:
            continue
        if diameter(space) != 2:
            continue
        cert = certify_graph(E, s, cap)
        cert = GraphCertificate(cert.s, cert.edges, cert.diameter, cert.clique, cert.independent, cert.method, tries)
        _tag(space, "ramsey-graph", {"s": s, "max_tries": max_tries, "cap": cap}, seed)
        space.meta["graph"] = cert.to_json()
        return space, cert
    raise TriesExhausted(f"no diameter-2 sample in {max_tries} tries")


# synthetic families -------------------------------------------------------------


def random_metric(n: int, seed: int | None = 0, low: float = 1.0, high: float = 2.0) -> MetricSpace:
    """Independent uniform ``[low, high]`` distances; a metric whenever ``high <= 2 low``."""
    if n < 1:
        raise TooSmall("need at least one point")
    if not (0 < low <= high <= 2 * low):
        raise BadParameters("need 0 < low <= high <= 2 low")
    rng = rng_for(seed)
    iu, ju = np.triu_indices(n, 1)
    dist = np.zeros((n, n))
    dist[iu, ju] = rng.uniform(low, high, len(iu))
    dist[ju, iu] = dist[iu, ju]
    return _tag(MetricSpace.trusted(dist), "random", {"n": n, "low": low, "high": high}, seed)


def euclidean_metric(n: int, dim: int = 2, seed: int | None = 0) -> MetricSpace:
    """Uniform points in the unit cube (re-drawn until distinct)."""
    from scipy.spatial.distance import pdist, squareform

    rng = rng_for(seed)
    X = rng.random((n, dim))
    dist = squareform(pdist(X))
    if n > 1 and dist[np.triu_indices(n, 1)].min() <= 0:
        raise DegenerateFactor("coincident sample points")
    return _tag(MetricSpace.trusted(dist), "euclidean", {"n": n, "dim": dim}, seed)


def path_metric(n: int) -> MetricSpace:
    pts = np.arange(n, dtype=float)
    return _tag(MetricSpace.trusted(np.abs(pts[:, None] - pts[None, :])), "path", {"n": n}, None)


def equilateral_metric(n: int, w: float = 1.0) -> MetricSpace:
    return _tag(equilateral_space(n, w), "equilateral", {"n": n, "w": w}, None)


def geometric_lacunary(n: int, k: float = 2.0) -> MetricSpace:
    """``n``-point k-lacunary space with values ``k^-i``."""
    if n < 2:
        raise TooSmall("need at least two points")
    seq = LacunarySequence(tuple(float(k) ** -i for i in range(n - 1)), k)
    return _tag(lacunary_metric(seq), "lacunary", {"n": n, "k": k}, None)


def random_hst(
    n_leaves: int,
    k: float = 2.0,
    seed: int | None = 0,
    max_children: int | None = 2,
    spread: float = 2.0,
) -> HstTree:
    """Random k-HST over points ``0..n-1``.

    Each block of at least two points is split into between 2 and
    ``max_children`` (None: unbounded) random nonempty parts. Child labels are
    the parent's divided by ``k * U[1, spread]``.
    """
    if n_leaves < 1:
        raise TooSmall("need at least one leaf")
    if max_children is not None and max_children < 2:
        raise BadParameters("max_children must be >= 2")
    rng = rng_for(seed)
    labels, children, points = [], [], []
    stack = [(list(range(n_leaves)), 1.0, -1)]
    while stack:
        block, label, parent = stack.pop()
        u = len(labels)
        children.append([])
        if parent >= 0:
            children[parent].append(u)
        if len(block) == 1:
            labels.append(0.0)
            points.append(block[0])
            continue
        labels.append(label)
        points.append(None)
        top = len(block) if max_children is None else min(max_children, len(block))
        parts = int(rng.integers(2, top + 1))
        perm = [block[i] for i in rng.permutation(len(block))]
        cuts = sorted(rng.choice(np.arange(1, len(block)), size=parts - 1, replace=False).tolist())
        for a, b in zip([0, *cuts], [*cuts, len(block)]):
            stack.append((sorted(perm[a:b]), label / (k * rng.uniform(1.0, spread)), u))
    return HstTree.from_arrays(labels, children, points)


def complete_tree(h: int, depth: int, k: float = 2.0) -> HstTree:
    """Complete h-ary tree of the given depth with labels ``k^(depth - level)``."""
    if h < 1 or depth < 0:
        raise BadParameters("need h >= 1 and depth >= 0")
    if depth == 0:
        return HstTree.from_arrays([0.0], [[]], [0])
    labels, children, points = [], [], []
    stack = [(0, -1)]
    nxt = 0
    while stack:
        level, parent = stack.pop()
        u = len(labels)
        children.append([])
        if parent >= 0:
            children[parent].append(u)
        if level == depth:
            labels.append(0.0)
            points.append(nxt)
            nxt += 1
            continue
        labels.append(float(k) ** (depth - level))
        points.append(None)
        stack.extend([(level + 1, u)] * h)
    return HstTree.from_arrays(labels, children, points)


def perturbed_hst_metric(tree: HstTree, c: float, seed: int | None = 0) -> MetricSpace:
    """Metric ``L`` on the leaves (rows sorted by point) with ``d_L <= d_tree <= c d_L``.

    Each tree distance is shrunk by an independent factor in ``[1, c]`` and the
    result is closed under shortest paths, which keeps both inequalities.
    """
    if not c >= 1:
        raise BadParameters("c must be >= 1")
    T = hst_metric(tree, order=sorted(tree.leaf_points(), key=point_key))
    rng = rng_for(seed)
    n = T.n
    iu, ju = np.triu_indices(n, 1)
    W = np.zeros((n, n))
    W[iu, ju] = T.dist[iu, ju] / rng.uniform(1.0, c, len(iu))
    W[ju, iu] = W[iu, ju]
    # sparse input: the dense converter treats tiny weights as missing edges
    dist = shortest_path(csr_array(W), method="FW", directed=False)
    return MetricSpace.trusted(dist, T.labels)
