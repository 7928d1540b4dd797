"""k-increasing extraction and the equilateral-or-lacunary split built on it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import BadParameters, NotIncreasing, TooSmall
from ..metric import REL_TOL, EmbeddingCert, MetricSpace, SubspaceWitness, distortion_of, leq, restrict
from ..trees import HstTree, LacunarySequence, hst_metric, hst_separation, is_k_increasing, _ceil
from .annulus import find_dense_annulus, residue_classes, sparsify_chain, sparsify_sequence
from .results import EQUILATERAL, LACUNARY, DichotomyResult, Guarantee

SPARSIFIERS = {"chain": sparsify_chain, "residue": sparsify_sequence}


def internal_eps(eps: float) -> float:
    """Per-step slack whose square meets the advertised ``1 + eps``."""
    return math.sqrt(1 + eps) - 1


def iteration_bound(n: int, eps_internal: float) -> float:
    """Guaranteed number of annulus iterations, ``log n / log(4 / eps')``."""
    return math.log(n) / math.log(4 / eps_internal)


def increasing_size_bound(m: int, eps_internal: float, k: float) -> int:
    """``ceil(m / (ceil(log_{1+eps'}(2k)) + 1))``."""
    return _ceil(m / residue_classes(eps_internal, k))


@dataclass(frozen=True, eq=False)
class IncreasingExtraction:
    """A subset of ``M`` with a non-contractive, at most ``1+eps`` distortion
    bijection onto the leaves of a k-increasing tree."""

    witness: SubspaceWitness
    tree: HstTree
    cert: EmbeddingCert
    eps: float
    eps_internal: float
    k: float
    centers: tuple[int, ...]
    scales: tuple[float, ...]
    kept: tuple[int, ...]
    guarantee: Guarantee = field(default=None)  # type: ignore[assignment]

    @property
    def m(self) -> int:
        """Number of points produced by the annulus iteration (centers plus the last point)."""
        return len(self.centers) + 1

    @property
    def size(self) -> int:
        return len(self.witness)

    def failures(self, tol: float = REL_TOL) -> list[str]:
        out = []
        M = self.witness.parent
        if not is_k_increasing(self.tree):
            out.append("tree is not k-increasing")
        if not leq(self.k, hst_separation(self.tree), tol):
            out.append(f"tree separation {hst_separation(self.tree)} below k = {self.k}")
        if not self.cert.verify(tol):
            out.append("certificate does not recompute")
        if hst_metric(self.tree, order=list(self.witness.indices)) != self.cert.target:
            out.append("certificate target is not the tree metric")
        if not self.cert.non_contractive:
            out.append("embedding contracts some pair")
        if not leq(self.cert.distortion, 1 + self.eps, tol):
            out.append(f"distortion {self.cert.distortion} exceeds 1 + eps")
        if not leq(iteration_bound(M.n, self.eps_internal), self.m, tol):
            out.append(f"m = {self.m} below log n / log(4/eps')")
        if self.size < increasing_size_bound(self.m, self.eps_internal, self.k):
            out.append(f"size {self.size} below ceil(m / r)")
        if self.witness.induced.n > 1:
            iu = np.triu_indices(self.size, 1)
            ratio = self.cert.target.dist[iu] / self.witness.induced.dist[iu]
            if ratio.min() < 1 - tol or ratio.max() > (1 + self.eps_internal) ** 2 * (1 + tol):
                out.append("some pair ratio outside [1, (1+eps')^2]")
        return out

    def verify(self, tol: float = REL_TOL) -> bool:
        return not self.failures(tol)


def _increasing_tree(centers, final, kept, rounded):
    """Caterpillar-with-bunches: one internal vertex per distinct rounded scale."""
    groups: list[tuple[float, list[int]]] = []
    for h, b in zip(kept, rounded):
        if groups and groups[-1][0] == b:
            groups[-1][1].append(centers[h])
        else:
            groups.append((b, [centers[h]]))
    labels, children, points = [], [], []
    spine = []
    for b, _ in groups:
        spine.append(len(labels))
        labels.append(b)
        children.append([])
        points.append(None)
    for g, (_, members) in enumerate(groups):
        for p in members:
            children[spine[g]].append(len(labels))
            labels.append(0.0)
            children.append([])
            points.append(p)
        if g + 1 < len(groups):
            children[spine[g]].append(spine[g + 1])
    children[spine[-1]].append(len(labels))
    labels.append(0.0)
    children.append([])
    points.append(final)
    return HstTree.from_arrays(labels, children, points)


def extract_k_increasing(M: MetricSpace, eps: float = 0.5, k: float = 2.0, sparsify: str = "chain") -> IncreasingExtraction:
    """Subset of ``M`` that embeds into a k-increasing space with distortion at most ``1 + eps``.

    Repeats the dense-annulus step (with ``eps' = sqrt(1+eps) - 1``) until one
    point is left, then sparsifies the recorded scales so that the surviving
    centers hang off a k-separated spine. ``sparsify`` selects the scale
    selection rule: ``"chain"`` (longest valid subsequence, default) or
    ``"residue"`` (most populous exponent class).
    """
    if M.n < 2:
        raise TooSmall("extraction needs at least two points")
    if not eps > 0:
        raise BadParameters("eps must be positive")
    if not k >= 1:
        raise BadParameters("k must be >= 1")
    try:
        select = SPARSIFIERS[sparsify]
    except KeyError:
        raise BadParameters(f"unknown sparsifier {sparsify!r}") from None
    e = internal_eps(eps)
    active = np.arange(M.n)
    centers, scales = [], []
    while len(active) >= 2:
        ann = find_dense_annulus(M, e, active)
        centers.append(ann.center)
        scales.append(ann.radius)
        active = np.asarray(ann.subset, dtype=np.int64)
    final = int(active[0])
    kept, rounded = select(scales, e, k)
    tree = _increasing_tree(centers, final, kept, rounded)
    order = [centers[h] for h in kept] + [final]
    witness = restrict(M, order)
    cert = distortion_of(range(len(order)), witness.induced, hst_metric(tree, order=order))
    m = len(centers) + 1
    guarantee = Guarantee(
        increasing_size_bound(m, e, k),
        1 + eps,
        {"eps": eps, "eps_internal": e, "k": k, "m": m, "m_bound": iteration_bound(M.n, e), "sparsify": sparsify},
    )
    return IncreasingExtraction(witness, tree, cert, eps, e, k, tuple(centers), tuple(scales), tuple(kept), guarantee)


# dichotomy on a k-increasing tree --------------------------------------------


@dataclass(frozen=True)
class _Split:
    kind: str
    points: list
    sequence: LacunarySequence | None
    scale: float | None


def split_increasing(tree: HstTree, k: float | None = None) -> _Split:
    """Largest equilateral bunch or the spine's lacunary transversal, whichever is bigger."""
    if not is_k_increasing(tree):
        raise NotIncreasing("tree has a vertex with two internal children")
    if tree.n_leaves == 1:
        return _Split(EQUILATERAL, tree.leaf_points(), None, None)
    if k is None:
        sep = hst_separation(tree)
        k = sep if math.isfinite(sep) else 1.0
    spine = []
    u = 0
    while True:
        spine.append(u)
        inner = [c for c in tree.children[u] if tree.children[c]]
        if not inner:
            break
        u = inner[0]
    best_eq: list = []
    best_scale = None
    for v in spine:
        leaves = [tree.points[c] for c in tree.children[v] if not tree.children[c]]
        inner = [c for c in tree.children[v] if tree.children[c]]
        if inner:
            leaves = leaves + [tree.leaves_under(inner[0])[0]]
        if len(leaves) > len(best_eq):
            best_eq, best_scale = leaves, tree.labels[v]
    lac = []
    for v in spine:
        lac.append(next(tree.points[c] for c in tree.children[v] if not tree.children[c]))
    tail = [tree.points[c] for c in tree.children[spine[-1]] if not tree.children[c]]
    lac.append(tail[1])
    if len(best_eq) >= len(lac):
        return _Split(EQUILATERAL, best_eq, None, best_scale)
    seq = LacunarySequence(tuple(tree.labels[v] for v in spine), k)
    return _Split(LACUNARY, lac, seq, None)


def increasing_dichotomy(tree: HstTree, k: float | None = None) -> DichotomyResult:
    """Isometric equilateral or k-lacunary subspace of a k-increasing tree metric.

    Returns at least ``floor(sqrt(m))`` of the ``m`` leaves. The result is
    expressed against ``hst_metric(tree)`` (rows in preorder leaf order).
    """
    split = split_increasing(tree, k)
    m = tree.n_leaves
    if m == 1:
        space = MetricSpace.trusted(np.zeros((1, 1)), tree.leaf_points())
    else:
        space = hst_metric(tree)
    pos = {p: i for i, p in enumerate(space.labels)}
    idx = [pos[p] for p in split.points]
    params = {"m": m}
    if split.sequence is not None:
        params["k"] = split.sequence.k
    g = Guarantee(math.isqrt(m), 1.0, params)
    return DichotomyResult.build(split.kind, space, idx, split.sequence, g, split.scale)


def equilateral_or_lacunary(M: MetricSpace, eps: float = 0.5, k: float = 2.0, sparsify: str = "chain") -> DichotomyResult:
    """Subset of ``M`` that is ``(1+eps)``-equivalent to an equilateral or a k-lacunary space."""
    ext = extract_k_increasing(M, eps, k, sparsify)
    split = split_increasing(ext.tree, k)
    g = Guarantee(
        math.isqrt(ext.size),
        1 + eps,
        {"eps": eps, "k": k, "extracted": ext.size, "extract_bound": ext.guarantee.size, "m": ext.m},
    )
    return DichotomyResult.build(split.kind, M, split.points, split.sequence, g, split.scale)
