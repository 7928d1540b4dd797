"""Hierarchically well-separated trees, k-increasing trees and lacunary sequences.

An :class:`HstTree` is stored as flat preorder arrays: node 0 is the root, every
child has a larger index than its parent, and the leaves below any node occupy a
contiguous run of the preorder leaf list. All traversals are iterative, so deep
caterpillars do not hit the recursion limit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import BadParameters, InvalidTree, MalformedInput, NotLacunary, TooFewLeaves
from .metric import REL_TOL, MetricSpace, leq

HST_FORMAT = "hst-v1"


def point_key(p: Any) -> tuple:
    """Sort key for point ids: integers numerically, everything else by JSON text."""
    if isinstance(p, (int, np.integer)) and not isinstance(p, bool):
        return (0, int(p), "")
    if isinstance(p, str):
        return (1, 0, p)
    return (2, 0, json.dumps(p, default=list))


def _canonical_arrays(labels, children, points, root=0, keep=None):
    """Canonical preorder arrays from an arbitrary rooted labelled tree.

    Drops leaves not in ``keep`` (when given) and branches left without leaves,
    collapses unary vertices onto their only child (the branching vertex below
    keeps its own label, so leaf distances are unchanged), and sorts children by
    smallest descendant point key.
    """
    order = []
    stack = [root]
    while stack:
        u = stack.pop()
        order.append(u)
        stack.extend(children[u])
    minkey: dict[int, tuple | None] = {}
    live: dict[int, list[int]] = {}
    for u in reversed(order):
        if not children[u]:
            alive = keep is None or points[u] in keep
            minkey[u] = point_key(points[u]) if alive else None
            live[u] = []
            continue
        kids = [c for c in children[u] if minkey[c] is not None]
        live[u] = sorted(kids, key=lambda c: minkey[c])
        minkey[u] = minkey[live[u][0]] if kids else None
    if minkey[root] is None:
        raise TooFewLeaves("tree has no leaves left")

    def resolve(u):
        while children[u] and len(live[u]) == 1:
            u = live[u][0]
        return u

    new_labels, new_children, new_points = [], [], []
    stack = [(resolve(root), -1)]
    while stack:
        u, parent = stack.pop()
        idx = len(new_labels)
        if parent >= 0:
            new_children[parent].append(idx)
        if children[u]:
            new_labels.append(float(labels[u]))
            new_points.append(None)
        else:
            new_labels.append(0.0)
            new_points.append(points[u])
        new_children.append([])
        for c in reversed(live[u]):
            stack.append((resolve(c), idx))
    return new_labels, new_children, new_points


@dataclass(frozen=True, eq=False)
class HstTree:
    """Rooted tree with positive labels on internal vertices and points on leaves.

    Instances are always canonical (no unary vertices, children sorted by
    smallest descendant point) with strictly decreasing labels along every
    parent/internal-child edge. Use :meth:`from_arrays` or :meth:`from_dict`.
    """

    labels: tuple[float, ...]
    children: tuple[tuple[int, ...], ...]
    points: tuple

    def __post_init__(self):
        n = len(self.labels)
        if not (len(self.children) == len(self.points) == n) or n == 0:
            raise InvalidTree("inconsistent tree arrays")
        seen = set()
        for u in range(n):
            kids = self.children[u]
            if kids:
                if self.points[u] is not None:
                    raise InvalidTree(f"internal vertex {u} carries a point")
                if not self.labels[u] > 0 or not math.isfinite(self.labels[u]):
                    raise InvalidTree(f"internal vertex {u} has non-positive label {self.labels[u]}")
                if len(kids) < 2:
                    raise InvalidTree(f"internal vertex {u} is unary")
                for c in kids:
                    if c <= u:
                        raise InvalidTree("children must follow their parent in preorder")
                    if self.children[c] and not self.labels[c] < self.labels[u]:
                        raise InvalidTree(f"label of vertex {c} does not decrease below its parent {u}")
            else:
                if self.labels[u] != 0:
                    raise InvalidTree(f"leaf {u} has nonzero label")
                if self.points[u] is None:
                    raise InvalidTree(f"leaf {u} has no point")
                if self.points[u] in seen:
                    raise InvalidTree(f"point {self.points[u]!r} appears twice")
                seen.add(self.points[u])

    # construction -------------------------------------------------------

    @classmethod
    def from_arrays(cls, labels, children, points, root: int = 0, keep: Iterable | None = None) -> "HstTree":
        keep_set = None if keep is None else set(keep)
        lab, ch, pts = _canonical_arrays(list(labels), [list(c) for c in children], list(points), root, keep_set)
        return cls(tuple(lab), tuple(tuple(c) for c in ch), tuple(pts))

    @classmethod
    def from_dict(cls, obj: dict) -> "HstTree":
        """Build from the nested ``hst-v1`` dict form (see :func:`node` / :func:`leaf`)."""
        labels, children, points = [], [], []
        stack = [(obj, -1)]
        while stack:
            item, parent = stack.pop()
            if not isinstance(item, dict):
                raise MalformedInput(f"tree nodes must be objects, got {item!r}")
            idx = len(labels)
            children.append([])
            if parent >= 0:
                children[parent].append(idx)
            if "point" in item:
                labels.append(0.0)
                points.append(_json_point(item["point"]))
            elif "children" in item and "label" in item:
                labels.append(float(item["label"]))
                points.append(None)
                for c in item["children"]:
                    stack.append((c, idx))
            else:
                raise MalformedInput("tree node needs either 'point' or 'label' and 'children'")
        for u, kids in enumerate(children):
            if points[u] is None and not kids:
                raise MalformedInput(f"internal node {u} has no children")
        return cls.from_arrays(labels, children, points)

    @classmethod
    def from_json(cls, obj: dict) -> "HstTree":
        if not isinstance(obj, dict) or obj.get("format", HST_FORMAT) != HST_FORMAT:
            raise MalformedInput(f"expected a {HST_FORMAT} object")
        return cls.from_dict(obj)

    # structure ------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def root(self) -> int:
        return 0

    def is_leaf(self, u: int) -> bool:
        return not self.children[u]

    @property
    def internal(self) -> list[int]:
        return [u for u in range(len(self.labels)) if self.children[u]]

    def leaf_points(self) -> list:
        """Points in preorder."""
        return [p for p in self.points if p is not None]

    @property
    def n_leaves(self) -> int:
        return sum(1 for p in self.points if p is not None)

    def leaf_ranges(self) -> tuple[list[int], list[int]]:
        """``lo[u], hi[u]``: the leaves under ``u`` are preorder leaves ``lo..hi-1``."""
        n = len(self.labels)
        lo, hi = [0] * n, [0] * n
        count = 0
        for u in range(n):
            lo[u] = count
            if not self.children[u]:
                count += 1
        for u in range(n - 1, -1, -1):
            hi[u] = lo[u] + 1 if not self.children[u] else hi[self.children[u][-1]]
        return lo, hi

    def parents(self) -> list[int]:
        par = [-1] * len(self.labels)
        for u, kids in enumerate(self.children):
            for c in kids:
                par[c] = u
        return par

    def leaves_under(self, u: int) -> list:
        lo, hi = self.leaf_ranges()
        return self.leaf_points()[lo[u] : hi[u]]

    def restrict(self, points: Iterable) -> "HstTree":
        """Induced tree on a subset of the leaves (distances unchanged)."""
        return HstTree.from_arrays(self.labels, self.children, self.points, keep=points)

    def with_labels(self, labels: Sequence[float]) -> "HstTree":
        return HstTree.from_arrays(labels, self.children, self.points)

    # serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        out: list[dict] = [None] * len(self.labels)  # type: ignore[list-item]
        for u in range(len(self.labels) - 1, -1, -1):
            if self.children[u]:
                out[u] = {"label": self.labels[u], "children": [out[c] for c in self.children[u]]}
            else:
                out[u] = {"point": _point_to_json(self.points[u])}
        return out[0]

    def to_json(self) -> dict:
        d = self.to_dict()
        if "point" in d:
            return {"format": HST_FORMAT, **d}
        return {"format": HST_FORMAT, "label": d["label"], "children": d["children"]}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HstTree):
            return NotImplemented
        return (self.labels, self.children, self.points) == (other.labels, other.children, other.points)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"HstTree(leaves={self.n_leaves}, vertices={len(self.labels)})"


def _json_point(p):
    return tuple(_json_point(x) for x in p) if isinstance(p, list) else p


def _point_to_json(p):
    if isinstance(p, tuple):
        return [_point_to_json(x) for x in p]
    if isinstance(p, np.integer):
        return int(p)
    return p


def leaf(point) -> dict:
    return {"point": point}


def node(label: float, *children: dict) -> dict:
    return {"label": label, "children": list(children)}


def hst(obj: dict) -> HstTree:
    """Shorthand: ``hst(node(4, leaf("a"), node(1, leaf("b"), leaf("c"))))``."""
    return HstTree.from_dict(obj)


# metrics and predicates ------------------------------------------------------


def hst_metric(tree: HstTree, order: Sequence | None = None) -> MetricSpace:
    """Leaf metric ``d(x, y) = label(lca(x, y))``.

    Rows follow preorder leaf order unless ``order`` lists the points explicitly.
    """
    n = tree.n_leaves
    if n < 2:
        raise TooFewLeaves("an HST metric needs at least two leaves")
    lo, hi = tree.leaf_ranges()
    dist = np.zeros((n, n))
    for u in tree.internal:
        lab = tree.labels[u]
        a, b = lo[u], hi[u]
        for c in tree.children[u]:
            ca, cb = lo[c], hi[c]
            dist[ca:cb, a:ca] = lab
            dist[ca:cb, cb:b] = lab
    pts = tree.leaf_points()
    if order is not None:
        pos = {p: i for i, p in enumerate(pts)}
        try:
            perm = [pos[p] for p in order]
        except KeyError as exc:
            raise BadParameters(f"point {exc.args[0]!r} is not a leaf of the tree") from None
        if len(perm) != n:
            raise BadParameters("order must list every leaf exactly once")
        dist = dist[np.ix_(perm, perm)]
        pts = list(order)
    return MetricSpace.trusted(dist, pts)


def hst_separation(tree: HstTree) -> float:
    """Largest k such that the tree is a k-HST (+inf without internal-internal edges)."""
    best = math.inf
    for u in tree.internal:
        for c in tree.children[u]:
            if tree.children[c]:
                best = min(best, tree.labels[u] / tree.labels[c])
    return best


def max_outdegree(tree: HstTree) -> int:
    return max(len(c) for c in tree.children)


def is_binary(tree: HstTree) -> bool:
    return max_outdegree(tree) <= 2


def is_k_increasing(tree: HstTree) -> bool:
    """Every vertex has at most one child that is not a leaf."""
    return all(sum(1 for c in kids if tree.children[c]) <= 1 for kids in tree.children)


def is_k_hst(tree: HstTree, k: float, tol: float = REL_TOL) -> bool:
    return leq(k, hst_separation(tree), tol) if math.isfinite(hst_separation(tree)) else True


def tree_depth(tree: HstTree) -> int:
    depth = [0] * len(tree.labels)
    for u in range(len(tree.labels)):
        for c in tree.children[u]:
            depth[c] = depth[u] + 1
    return max(depth)


# lacunary sequences ------------------------------------------------------


@dataclass(frozen=True)
class LacunarySequence:
    """Decreasing positive values with ``a[i+1] <= a[i] / k``."""

    values: tuple[float, ...]
    k: float = 1.0

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not self.k >= 1:
            raise BadParameters("lacunarity parameter k must be >= 1")
        if not vals:
            raise NotLacunary("sequence is empty")
        if any(not (v > 0 and math.isfinite(v)) for v in vals):
            raise NotLacunary("values must be positive and finite")
        for i in range(len(vals) - 1):
            if not leq(vals[i + 1], vals[i] / self.k):
                raise NotLacunary(f"a[{i + 1}] = {vals[i + 1]} exceeds a[{i}]/k = {vals[i] / self.k}")

    def __len__(self) -> int:
        return len(self.values)

    def separation(self) -> float:
        """Largest k this sequence is lacunary for."""
        v = self.values
        return min((v[i] / v[i + 1] for i in range(len(v) - 1)), default=math.inf)


def _as_values(seq) -> tuple[float, ...]:
    return seq.values if isinstance(seq, LacunarySequence) else tuple(float(v) for v in seq)


def lacunary_metric(seq, *, include_last: bool = True, labels: Sequence | None = None) -> MetricSpace:
    """Metric ``d(i, j) = a[min(i, j)]``.

    With ``include_last`` (default) a sequence of length m yields m + 1 points so
    every value is realised; otherwise m values yield m points and the last value
    is unused.
    """
    vals = _as_values(seq)
    if not isinstance(seq, LacunarySequence):
        LacunarySequence(vals, 1.0)
    m = len(vals) + 1 if include_last else len(vals)
    if m < 2:
        raise TooFewLeaves("lacunary metric needs at least two points")
    dist = np.zeros((m, m))
    for i in range(m - 1):
        dist[i, i + 1 :] = vals[i]
        dist[i + 1 :, i] = vals[i]
    return MetricSpace.trusted(dist, labels)


def caterpillar(seq, points: Sequence | None = None) -> HstTree:
    """k-increasing tree whose leaf metric is ``lacunary_metric(seq)``."""
    vals = _as_values(seq)
    m = len(vals) + 1
    pts = list(range(m)) if points is None else list(points)
    if len(pts) != m:
        raise BadParameters(f"caterpillar over {len(vals)} values needs {m} points")
    labels, children, ptarr = [], [], []
    for i, v in enumerate(vals):
        labels.append(v)
        ptarr.append(None)
        children.append([])
    for i in range(len(vals)):
        leaf_id = len(labels)
        labels.append(0.0)
        ptarr.append(pts[i])
        children.append([])
        children[i].append(leaf_id)
        if i + 1 < len(vals):
            children[i].append(i + 1)
    last = len(labels)
    labels.append(0.0)
    ptarr.append(pts[-1])
    children.append([])
    children[len(vals) - 1].append(last)
    return HstTree.from_arrays(labels, children, ptarr)


def _ceil(x: float, tol: float = REL_TOL) -> int:
    """Ceiling that ignores float noise just above an integer."""
    return math.ceil(x - tol * max(1.0, abs(x)))


def lacunary_subsequence(seq: LacunarySequence, b: float) -> LacunarySequence:
    """Keep every s-th term (starting with the first), ``s = ceil(1 + log_a b)``.

    The result is b-lacunary and has ``ceil(m / s)`` terms.
    """
    a = seq.k
    if not a > 1 or not b > a:
        raise BadParameters(f"need b > a > 1, got a={a}, b={b}")
    s = _ceil(1 + math.log(b) / math.log(a))
    kept = seq.values[::s]
    return LacunarySequence(kept, b)


def subsequence_stride(a: float, b: float) -> int:
    if not a > 1 or not b > a:
        raise BadParameters(f"need b > a > 1, got a={a}, b={b}")
    return _ceil(1 + math.log(b) / math.log(a))


# binary subtrees ----------------------------------------------------------


def _best_pair(values: Sequence[int]) -> tuple[int, int]:
    """Positions (i < j) maximising values[i] + values[j]; lexicographically first on ties."""
    top = max(values)
    at_top = [i for i, v in enumerate(values) if v == top]
    if len(at_top) >= 2:
        return at_top[0], at_top[1]
    p = at_top[0]
    second = max(v for i, v in enumerate(values) if i != p)
    q = next(i for i, v in enumerate(values) if v == second and i != p)
    return (p, q) if p < q else (q, p)


def binary_subtree_sizes(tree: HstTree) -> list[int]:
    """Leaf count of the largest binary subtree rooted at each vertex."""
    best = [0] * len(tree.labels)
    for u in range(len(tree.labels) - 1, -1, -1):
        kids = tree.children[u]
        if not kids:
            best[u] = 1
        else:
            i, j = _best_pair([best[c] for c in kids])
            best[u] = best[kids[i]] + best[kids[j]]
    return best


def binary_subtree(tree: HstTree) -> HstTree:
    """Binary subtree with the most leaves (bottom-up DP), labels inherited."""
    if tree.n_leaves < 2:
        raise TooFewLeaves("binary subtree needs at least two leaves")
    best = binary_subtree_sizes(tree)
    keep = []
    stack = [0]
    while stack:
        u = stack.pop()
        kids = tree.children[u]
        if not kids:
            keep.append(tree.points[u])
            continue
        i, j = _best_pair([best[c] for c in kids])
        stack.extend((kids[i], kids[j]))
    return tree.restrict(keep)


def binary_subtree_bound(n_leaves: int, h: int) -> float:
    """``n ** (1 / log2 h)``, the guaranteed binary-subtree size for out-degree <= h."""
    if h < 2:
        raise BadParameters("out-degree bound h must be >= 2")
    return n_leaves ** (1.0 / math.log2(h))
