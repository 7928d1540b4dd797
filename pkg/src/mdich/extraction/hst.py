"""Binary-HST side of the dichotomies: triangle bipartition, relabeling,
monochromatic subsets and the equilateral-or-binary-HST split of a k-HST."""

from __future__ import annotations

import math
from collections import Counter
from typing import Mapping

import numpy as np

from ..errors import (
    BadParameters,
    CertMismatch,
    IncompleteColoring,
    KTooSmall,
    NotBinary,
    SeparationTooSmall,
    TooSmall,
    TripleTooFlat,
    VerificationError,
)
from ..metric import REL_TOL, EmbeddingCert, MetricSpace, diametrical_pair, distortion_of, leq, restrict
from ..trees import HstTree, binary_subtree, binary_subtree_bound, hst_metric, hst_separation, is_binary
from .increasing import extract_k_increasing
from .results import BINARY_HST, EQUILATERAL, DichotomyResult, Guarantee

COARSE, FINE = "coarse", "fine"


def flattest_triple(M: MetricSpace, k: float, tol: float = REL_TOL):
    """First triple ``(i, j, l)`` whose aspect ratio is below ``k``, with that ratio, or None."""
    D = M.dist
    n = M.n
    for i in range(n - 2):
        rest = np.arange(i + 1, n)
        a = D[i, rest]
        big = np.maximum(np.maximum(a[:, None], a[None, :]), D[np.ix_(rest, rest)])
        small = np.minimum(np.minimum(a[:, None], a[None, :]), D[np.ix_(rest, rest)])
        ratio = np.where(np.triu(np.ones_like(big, dtype=bool), 1), big / np.where(small > 0, small, 1), np.inf)
        bad = np.argwhere(ratio < k * (1 - tol))
        if len(bad):
            j, l = bad[0]
            return (i, int(rest[j]), int(rest[l])), float(ratio[j, l])
    return None


def triangle_to_binary_hst(M: MetricSpace, k: float) -> tuple[HstTree, EmbeddingCert]:
    """Binary ``k/2``-HST over the indices of ``M`` when every triangle has aspect ratio >= k.

    Splits each block by the closed balls of radius ``diam/k`` around a
    diametrical pair. The identity embedding is non-contractive with distortion
    at most ``k/(k-2)``, and the root label is ``diam(M)``.
    """
    if not k > 2:
        raise KTooSmall(f"k must exceed 2, got {k}")
    if M.n < 2:
        raise TooSmall("need at least two points")
    flat = flattest_triple(M, k)
    if flat is not None:
        raise TripleTooFlat(*flat)
    D = M.dist
    labels: list[float] = []
    children: list[list[int]] = []
    points: list = []
    stack = [(np.arange(M.n), -1)]
    while stack:
        block, parent = stack.pop()
        u = len(labels)
        children.append([])
        if parent >= 0:
            children[parent].append(u)
        if len(block) == 1:
            labels.append(0.0)
            points.append(int(block[0]))
            continue
        x, xb, diam = diametrical_pair(D, block)
        r = diam / k * (1 + REL_TOL)
        near_x = D[x, block] <= r
        near_xb = ~near_x & (D[xb, block] <= r)
        if not np.all(near_x | near_xb):
            raise VerificationError("balls around the diametrical pair do not cover the block")
        labels.append(diam)
        points.append(None)
        stack.append((block[near_xb], u))
        stack.append((block[near_x], u))
    tree = HstTree.from_arrays(labels, children, points)
    cert = distortion_of(range(M.n), M, hst_metric(tree, order=list(range(M.n))))
    return tree, cert


def _check_domination(M: MetricSpace, tree: HstTree, c: float | None, tol: float = REL_TOL) -> float:
    """Verify ``d_M <= d_tree <= c d_M`` on the tree's points; returns the realised factor."""
    pts = tree.leaf_points()
    if any(not isinstance(p, (int, np.integer)) or not 0 <= p < M.n for p in pts):
        raise CertMismatch("tree leaves must be indices into the metric space")
    if len(pts) < 2:
        return 1.0
    T = hst_metric(tree, order=pts)
    sub = M.dist[np.ix_(pts, pts)]
    iu = np.triu_indices(len(pts), 1)
    ratio = T.dist[iu] / sub[iu]
    if ratio.min() < 1 - tol:
        raise CertMismatch(f"tree contracts some pair (ratio {ratio.min()})")
    got = float(ratio.max())
    if c is not None and not leq(got, c, tol):
        raise CertMismatch(f"tree expands some pair by {got} > c = {c}")
    return got if c is None else c


def hst_relabel(L: MetricSpace, tree: HstTree, c: float, k: float) -> tuple[HstTree, EmbeddingCert]:
    """Replace every label by the largest cross distance between the two child blocks.

    ``tree`` is a binary ``c*k``-HST over the indices of ``L`` dominating ``L``
    within factor ``c``. The relabelled tree is a binary k-HST and the identity
    is non-contractive with distortion at most ``k/(k-2)``.
    """
    if not k > 2:
        raise KTooSmall(f"k must exceed 2, got {k}")
    if not c >= 1:
        raise BadParameters("c must be >= 1")
    if not is_binary(tree):
        raise NotBinary("relabeling needs a binary tree")
    sep = hst_separation(tree)
    if not leq(c * k, sep):
        raise SeparationTooSmall(f"separation {sep} below c*k = {c * k}")
    _check_domination(L, tree, c)
    lo, hi = tree.leaf_ranges()
    pts = np.asarray(tree.leaf_points(), dtype=np.int64)
    new = list(tree.labels)
    for u in tree.internal:
        a, b = tree.children[u]
        A, B = pts[lo[a] : hi[a]], pts[lo[b] : hi[b]]
        new[u] = float(L.dist[np.ix_(A, B)].max())
    out = tree.with_labels(new)
    order = [int(p) for p in sorted(pts)]
    cert = distortion_of(range(len(order)), restrict(L, order).induced, hst_metric(out, order=order))
    return out, cert


# Ramsey-style monochromatic subsets -------------------------------------------


def _coloring_matrix(coloring, D: int | None) -> tuple[np.ndarray, int]:
    if isinstance(coloring, Mapping):
        verts = sorted({v for e in coloring for v in e})
        if verts != list(range(len(verts))):
            raise IncompleteColoring("vertices must be 0..n-1")
        n = len(verts)
        C = np.zeros((n, n), dtype=np.int64)
        for (i, j), col in coloring.items():
            if i == j:
                continue
            if C[i, j] and C[i, j] != col:
                raise IncompleteColoring(f"edge ({i}, {j}) has two colors")
            C[i, j] = C[j, i] = col
    else:
        C = np.array(coloring, dtype=np.int64)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise IncompleteColoring("coloring must be a square matrix")
        if not np.array_equal(C, C.T):
            raise IncompleteColoring("coloring matrix is not symmetric")
    n = C.shape[0]
    if n == 0:
        raise IncompleteColoring("empty vertex set")
    off = C[~np.eye(n, dtype=bool)]
    if len(off) and off.min() < 1:
        raise IncompleteColoring("some edge is uncolored")
    used = int(off.max()) if len(off) else 1
    if D is None:
        D = used
    elif used > D:
        raise IncompleteColoring(f"color {used} outside 1..{D}")
    return C, D


def monochromatic_bound(h: int, D: int) -> int:
    """``max(1, floor(floor(log_D h) / D))``; every vertex when ``D == 1``."""
    if D <= 1:
        return h + 1
    if h < 1:
        return 1
    lg = 0
    while D ** (lg + 1) <= h:
        lg += 1
    return max(1, lg // D)


def monochromatic_subset(coloring, D: int | None = None) -> list[int]:
    """Vertices whose pairs all share one color, found by majority-color peeling.

    ``coloring`` is a symmetric matrix of colors ``1..D`` (diagonal ignored) or a
    mapping ``{(i, j): color}`` over vertices ``0..n-1``.
    """
    C, D = _coloring_matrix(coloring, D)
    remaining = list(range(C.shape[0]))
    picked: list[tuple[int, int]] = []
    last = None
    while remaining:
        v, rest = remaining[0], remaining[1:]
        if not rest:
            last = v
            break
        cols = C[v, rest]
        counts = np.bincount(cols, minlength=D + 1)
        col = int(np.argmax(counts))
        picked.append((v, col))
        remaining = [w for w, cw in zip(rest, cols) if cw == col]
    by_color = Counter(col for _, col in picked)
    if not by_color:
        return [last]
    best = min(by_color, key=lambda col: (-by_color[col], col))
    return [v for v, col in picked if col == best] + [last]


def band_coloring(dist: np.ndarray, top: float, eps: float) -> tuple[np.ndarray, int]:
    """Color ``i, j`` by the t with ``top / d(i, j) in [(1+eps)^t, (1+eps)^(t+1))``, shifted to 1..D."""
    n = dist.shape[0]
    ratio = top / np.where(np.eye(n, dtype=bool), top, dist)
    t = np.floor(np.log(ratio) / math.log1p(eps) + REL_TOL).astype(np.int64)
    t = np.maximum(t, 0)
    np.fill_diagonal(t, 0)
    return t + 1, int(t.max()) + 1


# the dichotomy -----------------------------------------------------------------


def fine_separation(eps: float, k: float) -> float:
    """``k' = max(k, 2 + 2/eps)``, the smallest separation with ``k'/(k'-2) <= 1 + eps``."""
    return max(k, 2 + 2 / eps)


def hst_dichotomy(
    M: MetricSpace,
    tree: HstTree,
    c: float | None = None,
    eps: float = 0.5,
    h: int = 2,
    k: float = 1.0,
    mode: str = COARSE,
) -> DichotomyResult:
    """Equilateral or binary-HST subspace of ``M`` from a dominating k-HST over its points.

    ``tree`` has indices of ``M`` as leaves and must satisfy
    ``d_M <= d_tree <= c d_M`` (``c`` defaults to the realised factor). If some
    vertex has more than ``h`` children, one leaf per child gives an equilateral
    candidate; otherwise the largest binary subtree is used.

    ``mode="coarse"`` keeps the tree's labels, so distortion is at most ``c``.
    ``mode="fine"`` needs separation ``>= c * k'`` with ``k' = max(k, 2 + 2/eps)``
    and brings the distortion down to ``1 + eps`` by Ramsey coloring (equilateral
    case) or relabeling (binary case).
    """
    if mode not in (COARSE, FINE):
        raise BadParameters(f"unknown mode {mode!r}")
    if not eps > 0:
        raise BadParameters("eps must be positive")
    if int(h) != h or h < 2:
        raise BadParameters("h must be an integer >= 2")
    if not k >= 1:
        raise BadParameters("k must be >= 1")
    if tree.n_leaves < 2:
        raise TooSmall("tree needs at least two leaves")
    c = _check_domination(M, tree, c)
    sep = hst_separation(tree)
    kp = fine_separation(eps, k) if mode == FINE else k
    need = c * kp if mode == FINE else k
    if math.isfinite(sep) and not leq(need, sep):
        raise SeparationTooSmall(f"tree separation {sep} below the required {need}")
    params = {"mode": mode, "c": c, "eps": eps, "h": int(h), "k": k, "separation": sep}
    degs = [len(ch) for ch in tree.children]
    u = int(np.argmax(degs))
    if degs[u] > h:
        lo, _ = tree.leaf_ranges()
        pts = tree.leaf_points()
        reps = [pts[lo[ch]] for ch in tree.children[u]]
        params.update(case=1, vertex=u, outdegree=degs[u])
        if mode == COARSE:
            return DichotomyResult.build(EQUILATERAL, M, reps, None, Guarantee(h + 1, c, params))
        sub = M.dist[np.ix_(reps, reps)]
        colors, D = band_coloring(sub, tree.labels[u], eps)
        picked = monochromatic_subset(colors, D)
        params["colors"] = D
        g = Guarantee(monochromatic_bound(len(reps) - 1, D), 1 + eps, params)
        return DichotomyResult.build(EQUILATERAL, M, [reps[i] for i in picked], None, g)
    params.update(case=2)
    sub = binary_subtree(tree)
    size = binary_subtree_bound(tree.n_leaves, int(h))
    if mode == COARSE:
        pts = sub.leaf_points()
        return DichotomyResult.build(BINARY_HST, M, pts, sub, Guarantee(size, c, params))
    relabelled, _ = hst_relabel(M, sub, c, kp)
    params["k_prime"] = kp
    pts = relabelled.leaf_points()
    g = Guarantee(size, max(1 + eps, kp / (kp - 2)), params)
    return DichotomyResult.build(BINARY_HST, M, pts, relabelled, g)


def default_h(s: int, mode: str) -> int:
    """Out-degree threshold balancing the two cases for an ``s``-leaf tree."""
    if s < 4:
        return 2
    lg = math.log2(s)
    if mode == COARSE:
        return max(2, math.ceil(2 ** math.sqrt(lg)))
    return max(2, math.ceil(s ** (1 / math.log2(lg)))) if lg > 2 else 2


def equilateral_or_binary_hst(
    M: MetricSpace,
    eps: float = 0.5,
    k: float = 2.0,
    h: int | None = None,
    mode: str = FINE,
) -> DichotomyResult:
    """Pipeline: k-increasing extraction as the HST provider, then :func:`hst_dichotomy`.

    In fine mode the provider is asked for separation ``(1+eps) * k'`` so the
    relabeling step applies; the final distortion is at most ``1 + eps``.
    """
    if mode not in (COARSE, FINE):
        raise BadParameters(f"unknown mode {mode!r}")
    if mode == FINE:
        c = 1 + eps
        ext = extract_k_increasing(M, eps, c * fine_separation(eps, k))
    else:
        ext = extract_k_increasing(M, eps, k)
        c = 1 + eps
    hh = default_h(ext.size, mode) if h is None else h
    if ext.size < 2:
        idx = list(ext.witness.indices)
        return DichotomyResult.build(EQUILATERAL, M, idx, None, Guarantee(1, 1.0, {"mode": mode, "extracted": 1}))
    res = hst_dichotomy(M, ext.tree, c, eps, hh, k, mode)
    res.guarantee.params.update(extracted=ext.size, extract_bound=ext.guarantee.size)
    return res
