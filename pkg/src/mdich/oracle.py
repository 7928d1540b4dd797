"""Exact exponential-time oracles for embeddability into equilateral, k-lacunary
and binary k-HST spaces, and closed-form size bounds.

Scale: distortion and both class constraints are invariant under rescaling
the target, so it suffices to look for non-contractive targets with
``d_S <= d_target <= alpha d_S``. For a lacunary target ``d(pi_i, pi_j) = a_i``
(i < j) this reads ``M_i <= a_i <= alpha m_i`` with ``M_i, m_i`` the max and min
distance from ``pi_i`` to later points, plus ``a_{i+1} <= a_i / k``. Choosing
each ``a_i`` as large as allowed can only loosen the constraints on later
values, so the greedy sequence decides feasibility of a fixed ordering. The
same argument gives greedy-maximal labels for a fixed binary topology.

Each decider has a slow reference path (all orderings / all topologies, solved
as difference constraints in log space) used to cross-check the fast one.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import networkx as nx
import numpy as np

from .errors import BadParameters, CapExceeded, TooSmall
from .extraction.results import BINARY_HST, EQUILATERAL, LACUNARY, DichotomyResult, Guarantee
from .instances import four_point_violation
from .metric import REL_TOL, MetricSpace, aspect_ratio, leq, restrict
from .trees import HstTree, LacunarySequence

DEFAULT_CAPS = {
    "equilateral": 40,
    "lacunary_decide": 9,
    "lacunary_max": 12,
    "hst_decide": 8,
    "hst_max": 10,
}


def caps_with(overrides: dict | None) -> dict:
    caps = dict(DEFAULT_CAPS)
    for key, val in (overrides or {}).items():
        if key not in caps:
            raise BadParameters(f"unknown cap {key!r}")
        caps[key] = int(val)
    return caps


def _check_cap(n: int, caps: dict, key: str) -> None:
    if n > caps[key]:
        raise CapExceeded(f"{n} points exceed the {key} cap of {caps[key]}")


class _Arith:
    """Float arithmetic with relative slack, or exact rationals."""

    def __init__(self, exact: bool):
        self.exact = exact

    def num(self, x):
        return Fraction(str(x)) if self.exact and not isinstance(x, Fraction) else (x if self.exact else float(x))

    def matrix(self, dist: np.ndarray):
        if self.exact:
            return [[Fraction(str(float(v))) for v in row] for row in dist]
        return dist.tolist()

    def le(self, a, b) -> bool:
        return a <= b if self.exact else leq(a, b)


@dataclass
class OracleReport:
    query: str
    alpha: float
    k: float | None
    optimum: int
    witness: tuple[int, ...]
    structure: object = None  # LacunarySequence, HstTree or None
    stats: dict = field(default_factory=dict)
    space: MetricSpace | None = field(default=None, repr=False)

    def result(self) -> DichotomyResult:
        """The witness as a certified result against the queried space."""
        params = {} if self.k is None else {"k": self.k}
        return DichotomyResult.build(self.query, self.space, self.witness, self.structure, Guarantee(self.optimum, self.alpha, params))

    def failures(self) -> list[str]:
        if self.optimum != len(self.witness):
            return ["optimum and witness size differ"]
        if len(self.witness) < 2:
            return []
        return self.result().failures()

    def verify(self) -> bool:
        return not self.failures()

    def to_json(self) -> dict:
        if isinstance(self.structure, HstTree):
            st = self.structure.to_json()
        elif isinstance(self.structure, LacunarySequence):
            st = {"values": list(self.structure.values), "k": self.structure.k}
        else:
            st = None
        return {
            "query": self.query,
            "alpha": float(self.alpha),
            "k": None if self.k is None else float(self.k),
            "optimum": self.optimum,
            "witness": list(self.witness),
            "structure": st,
            "stats": self.stats,
        }


def _validate(alpha, k=None, k_min=1.0, strict=False):
    if not alpha >= 1:
        raise BadParameters("alpha must be >= 1")
    if k is not None and (not k > k_min if strict else not k >= k_min):
        raise BadParameters(f"k must be {'>' if strict else '>='} {k_min}")


def _hereditary_max(n: int, decide: Callable[[tuple[int, ...]], object], stats: dict):
    """Largest subset accepted by a hereditary predicate, grown level by level."""
    best, witness = (1, ((0,), None)) if n else (0, ((), None))
    for size in range(2, n + 1):
        hit = None
        for sub in itertools.combinations(range(n), size):
            stats["subsets"] = stats.get("subsets", 0) + 1
            w = decide(sub)
            if w is not None:
                hit = (sub, w)
                break
        if hit is None:
            break
        best, witness = size, hit
    return best, witness


# equilateral --------------------------------------------------------------------


def max_equilateral_subset(M: MetricSpace, alpha: float, caps: dict | None = None, exact: bool = False) -> OracleReport:
    """Largest subset with aspect ratio at most ``alpha``.

    For each pair ``u, v`` taken as the minimum distance ``d``, the answer is
    ``{u, v}`` plus a maximum clique among common candidates, edges joining
    points at distance in ``[d, alpha d]``.
    """
    caps = caps_with(caps)
    _validate(alpha)
    n = M.n
    if n < 1:
        raise TooSmall("empty space")
    _check_cap(n, caps, "equilateral")
    t0 = time.perf_counter()
    ar = _Arith(exact)
    D = ar.matrix(M.dist)
    a = ar.num(alpha)
    best: tuple[int, ...] = (0,)
    nodes = 0
    pairs = sorted(itertools.combinations(range(n), 2), key=lambda p: (-float(D[p[0]][p[1]]), p))
    for u, v in pairs:
        d = D[u][v]
        ad = a * d
        inband = [w for w in range(n) if w not in (u, v) and ar.le(d, D[u][w]) and ar.le(D[u][w], ad) and ar.le(d, D[v][w]) and ar.le(D[v][w], ad)]
        if 2 + len(inband) <= len(best):
            continue
        G = nx.Graph()
        G.add_nodes_from(inband)
        for x, y in itertools.combinations(inband, 2):
            if ar.le(d, D[x][y]) and ar.le(D[x][y], ad):
                G.add_edge(x, y)
        nodes += 1
        clique, _ = nx.max_weight_clique(G, weight=None) if inband else ([], 0)
        if 2 + len(clique) > len(best):
            best = tuple(sorted([u, v, *clique]))
    stats = {"cliques": nodes, "ms": (time.perf_counter() - t0) * 1e3}
    return OracleReport(EQUILATERAL, alpha, None, len(best), best, None, stats, M)


def max_equilateral_subset_slow(M: MetricSpace, alpha: float) -> int:
    """Reference: all subsets."""
    best = 1
    for size in range(2, M.n + 1):
        if not any(leq(aspect_ratio(restrict(M, s).induced), alpha) for s in itertools.combinations(range(M.n), size)):
            break
        best = size
    return best


# Both searches are monotone in the bound inherited from above (None = unbounded):
# a larger bound only loosens the subproblem, so per point set it suffices to
# remember the largest bound that failed.


def _known_failure(memo: dict, key: int, bound) -> bool:
    if key not in memo:
        return False
    failed = memo[key]
    return failed is None or (bound is not None and bound <= failed)


def _record_failure(memo: dict, key: int, bound) -> None:
    if bound is None or memo.get(key, bound) is None:
        memo[key] = None
    else:
        memo[key] = max(memo.get(key, bound), bound)


# lacunary ---------------------------------------------------------------------------


def _lacunary_search(D, pts: tuple[int, ...], a, k, ar: _Arith, memo: dict, stats: dict):
    """Ordering and greedy values for ``pts``, or None. ``memo`` maps a remaining
    bitmask to the largest previous value known to fail."""

    def diam(rem):
        return max((D[x][y] for x, y in itertools.combinations(rem, 2)), default=0)

    def go(rem: tuple[int, ...], prev):
        if len(rem) == 1:
            return [rem[0]], []
        key = sum(1 << p for p in rem)
        if _known_failure(memo, key, prev):
            return None
        stats["nodes"] = stats.get("nodes", 0) + 1
        big = diam(rem)
        for p in rem:
            rest = tuple(q for q in rem if q != p)
            dists = [D[p][q] for q in rest]
            lo, hi = max(dists), min(dists)
            val = a * hi if prev is None else min(a * hi, prev / k)
            if not (ar.le(lo, val) and ar.le(big, val)):
                continue
            sub = go(rest, val)
            if sub is not None:
                return [p, *sub[0]], [val, *sub[1]]
        _record_failure(memo, key, prev)
        return None

    return go(tuple(pts), None)


def _lacunary_witness(order, values, k):
    return tuple(order), LacunarySequence(tuple(float(v) for v in values), float(k))


def is_lacunary_embeddable(S: MetricSpace, alpha: float, k: float, caps: dict | None = None, exact: bool = False):
    """``(True, (order, sequence))`` when ``S`` is alpha-equivalent to a k-lacunary space, else ``(False, None)``.

    ``order`` lists the points of ``S`` so that point ``order[i]`` maps to
    position ``i`` of ``lacunary_metric(sequence)``.
    """
    caps = caps_with(caps)
    _validate(alpha, k)
    _check_cap(S.n, caps, "lacunary_decide")
    if S.n < 2:
        return True, ((0,), None) if S.n else ((), None)
    ar = _Arith(exact)
    got = _lacunary_search(ar.matrix(S.dist), tuple(range(S.n)), ar.num(alpha), ar.num(k), ar, {}, {})
    if got is None:
        return False, None
    return True, _lacunary_witness(*got, k)


def _difference_feasible(n_vars: int, upper: list, lower: list, chain: list, tol: float = REL_TOL) -> bool:
    """Feasibility of ``lower[i] <= x_i <= upper[i]`` and ``x_j <= x_i - g`` for ``(i, j, g)`` in ``chain``.

    Bellman-Ford from a virtual source (node ``n_vars``) on the constraint graph.
    """
    src = n_vars
    edges = []
    for i in range(n_vars):
        edges.append((src, i, upper[i]))
        edges.append((i, src, -lower[i]))
    for i, j, g in chain:
        edges.append((i, j, -g))
    dist = [math.inf] * (n_vars + 1)
    dist[src] = 0.0
    for _ in range(n_vars):
        for u, v, w in edges:
            if dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
    slack = tol * (2 + max((abs(w) for _, _, w in edges), default=0.0)) * (n_vars + 1)
    return all(dist[u] + w >= dist[v] - slack for u, v, w in edges)


def is_lacunary_embeddable_slow(S: MetricSpace, alpha: float, k: float) -> bool:
    """Reference: every ordering, each solved as log-space difference constraints."""
    n = S.n
    if n < 2:
        return True
    D = S.dist
    la, lk = math.log(alpha), math.log(k)
    for perm in itertools.permutations(range(n)):
        upper, lower = [], []
        for i in range(n - 1):
            later = [D[perm[i], perm[j]] for j in range(i + 1, n)]
            lower.append(math.log(max(later)))
            upper.append(la + math.log(min(later)))
        # a_j <= a_i / k for i < j, and every earlier value dominates later distances
        chain = [(i, i + 1, lk) for i in range(n - 2)]
        ok = _difference_feasible(n - 1, upper, lower, chain)
        if ok:
            return True
    return False


def max_lacunary_subset(M: MetricSpace, alpha: float, k: float, caps: dict | None = None, exact: bool = False) -> OracleReport:
    caps = caps_with(caps)
    _validate(alpha, k)
    _check_cap(M.n, caps, "lacunary_max")
    t0 = time.perf_counter()
    ar = _Arith(exact)
    D = ar.matrix(M.dist)
    a, kk = ar.num(alpha), ar.num(k)
    memo: dict = {}
    stats: dict = {}

    def decide(sub):
        return _lacunary_search(D, sub, a, kk, ar, memo, stats)

    best, (sub, w) = _hereditary_max(M.n, decide, stats)
    stats["ms"] = (time.perf_counter() - t0) * 1e3
    if best < 2:
        return OracleReport(LACUNARY, alpha, k, best, tuple(sub), None, stats, M)
    order, seq = _lacunary_witness(*w, k)
    return OracleReport(LACUNARY, alpha, k, best, order, seq, stats, M)


def max_lacunary_subset_slow(M: MetricSpace, alpha: float, k: float) -> int:
    best = min(M.n, 1)
    for size in range(2, M.n + 1):
        if not any(is_lacunary_embeddable_slow(restrict(M, s).induced, alpha, k) for s in itertools.combinations(range(M.n), size)):
            break
        best = size
    return best


# binary HST --------------------------------------------------------------------------


def _bipartitions(pts: tuple[int, ...]):
    """Unordered splits into two nonempty parts; the first part holds ``pts[0]``."""
    first, rest = pts[0], pts[1:]
    m = len(rest)
    for mask in range(2**m - 1):
        A = [first] + [rest[i] for i in range(m) if mask >> i & 1]
        B = [rest[i] for i in range(m) if not mask >> i & 1]
        yield tuple(A), tuple(B)


def _hst_search(D, pts: tuple[int, ...], a, k, ar: _Arith, memo: dict, stats: dict):
    """Nested ``(label, left, right)`` tree for ``pts`` or None. ``memo`` maps a
    bitmask to the largest parent cap known to fail."""

    def go(X: tuple[int, ...], cap):
        if len(X) == 1:
            return X[0]
        key = sum(1 << p for p in X)
        if _known_failure(memo, key, cap):
            return None
        stats["nodes"] = stats.get("nodes", 0) + 1
        for A, B in _bipartitions(X):
            cross = [D[x][y] for x in A for y in B]
            lo, hi = max(cross), min(cross)
            lab = a * hi if cap is None else min(a * hi, cap / k)
            if not ar.le(lo, lab):
                continue
            left = go(A, lab)
            if left is None:
                continue
            right = go(B, lab)
            if right is None:
                continue
            return (lab, left, right)
        _record_failure(memo, key, cap)
        return None

    return go(tuple(pts), None)


def _nested_to_tree(nested) -> HstTree:
    labels, children, points = [], [], []
    stack = [(nested, -1)]
    while stack:
        t, parent = stack.pop()
        u = len(labels)
        children.append([])
        if parent >= 0:
            children[parent].append(u)
        if isinstance(t, tuple):
            labels.append(float(t[0]))
            points.append(None)
            stack.append((t[2], u))
            stack.append((t[1], u))
        else:
            labels.append(0.0)
            points.append(int(t))
    return HstTree.from_arrays(labels, children, points)


def is_binary_hst_embeddable(S: MetricSpace, alpha: float, k: float, caps: dict | None = None, exact: bool = False):
    """``(True, tree)`` when ``S`` is alpha-equivalent to a binary k-HST (tree leaves are indices of ``S``)."""
    caps = caps_with(caps)
    _validate(alpha, k, strict=True)
    _check_cap(S.n, caps, "hst_decide")
    if S.n < 2:
        return True, None
    ar = _Arith(exact)
    got = _hst_search(ar.matrix(S.dist), tuple(range(S.n)), ar.num(alpha), ar.num(k), ar, {}, {})
    return (False, None) if got is None else (True, _nested_to_tree(got))


def _topologies(pts: tuple[int, ...]):
    """All rooted binary trees with leaves ``pts`` (each exactly once), as nested pairs."""
    if len(pts) == 1:
        yield pts[0]
        return
    for A, B in _bipartitions(pts):
        for left in _topologies(A):
            for right in _topologies(B):
                yield (left, right)


def is_binary_hst_embeddable_slow(S: MetricSpace, alpha: float, k: float) -> bool:
    """Reference: every topology, labels solved as log-space difference constraints."""
    n = S.n
    if n < 2:
        return True
    D = S.dist
    la, lk = math.log(alpha), math.log(k)
    for topo in _topologies(tuple(range(n))):
        upper, lower, chain = [], [], []
        stack = [(topo, -1)]
        while stack:
            t, parent = stack.pop()
            if not isinstance(t, tuple):
                continue
            u = len(upper)
            A, B = _leaves(t[0]), _leaves(t[1])
            cross = [D[x, y] for x in A for y in B]
            lower.append(math.log(max(cross)))
            upper.append(la + math.log(min(cross)))
            if parent >= 0:
                chain.append((parent, u, lk))
            stack.append((t[0], u))
            stack.append((t[1], u))
        if _difference_feasible(len(upper), upper, lower, chain):
            return True
    return False


def _leaves(t) -> list[int]:
    out, stack = [], [t]
    while stack:
        x = stack.pop()
        if isinstance(x, tuple):
            stack.extend(x)
        else:
            out.append(x)
    return out


def max_binary_hst_subset(M: MetricSpace, alpha: float, k: float, caps: dict | None = None, exact: bool = False) -> OracleReport:
    caps = caps_with(caps)
    _validate(alpha, k, strict=True)
    _check_cap(M.n, caps, "hst_max")
    t0 = time.perf_counter()
    ar = _Arith(exact)
    D = ar.matrix(M.dist)
    a, kk = ar.num(alpha), ar.num(k)
    memo: dict = {}
    stats: dict = {}

    def decide(sub):
        return _hst_search(D, sub, a, kk, ar, memo, stats)

    best, (sub, w) = _hereditary_max(M.n, decide, stats)
    stats["ms"] = (time.perf_counter() - t0) * 1e3
    if best < 2:
        return OracleReport(BINARY_HST, alpha, k, best, tuple(sub), None, stats, M)
    tree = _nested_to_tree(w)
    return OracleReport(BINARY_HST, alpha, k, best, tuple(sub), tree, stats, M)


def max_binary_hst_subset_slow(M: MetricSpace, alpha: float, k: float) -> int:
    best = min(M.n, 1)
    for size in range(2, M.n + 1):
        if not any(is_binary_hst_embeddable_slow(restrict(M, s).induced, alpha, k) for s in itertools.combinations(range(M.n), size)):
            break
        best = size
    return best


# bounds and the four-point test -------------------------------------------------------


def _bound_args(alpha, k, phi):
    if not (k > 1 and alpha >= 1 and phi >= 1):
        raise BadParameters("need k > 1, alpha >= 1 and aspect ratio >= 1")


def bound_lacunary_size(alpha: float, k: float, phi: float) -> float:
    """``2 + log_k(alpha * phi)``."""
    _bound_args(alpha, k, phi)
    return 2 + math.log(alpha * phi) / math.log(k)


def bound_binary_hst_size(alpha: float, k: float, phi: float) -> float:
    """``2 ** (1 + log_k(alpha * phi))``."""
    _bound_args(alpha, k, phi)
    return 2 ** (1 + math.log(alpha * phi) / math.log(k))


def four_point_check(S: MetricSpace, alpha: float, k: float):
    """``(True, None)`` or ``(False, quadruple)`` for the inequality
    ``max(d12, d34) >= (k/alpha) min(d13, d14, d23, d24)`` over every pairing."""
    quad = four_point_violation(S.dist, list(range(S.n)), alpha, k)
    return (quad is None), quad
