"""Dense annuli and scale sparsification, the two building blocks of the
k-increasing extraction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import BadParameters, PrefixDominanceViolated, TooSmall
from ..metric import REL_TOL, MetricSpace, diametrical_pair, leq
from ..trees import _ceil


@dataclass(frozen=True)
class AnnulusResult:
    center: int
    subset: tuple[int, ...]
    scale: float  # lambda in [1, 2]
    diameter: float
    n_layers: int
    far_size: int  # |W|, the far half-set the layers were cut from

    @property
    def radius(self) -> float:
        """Outer radius ``lambda * diameter / 2``; every annulus point is within it."""
        return self.scale * self.diameter / 2


def annulus_layers(eps: float) -> int:
    """``ceil(log_{1+eps} 2)``."""
    return max(1, _ceil(math.log(2) / math.log1p(eps)))


def find_dense_annulus(M: MetricSpace, eps: float, subset: Sequence[int] | None = None) -> AnnulusResult:
    """Center ``x`` and a large set ``A`` whose distances to ``x`` lie in one ``(1+eps)`` band.

    Works on the far half-sets ``{y : d(y, x) >= diam/2}`` of a diametrical pair,
    which together cover the space; the larger one is cut into
    ``ceil(log_{1+eps} 2)`` layers and the most populous layer is returned.
    The top layer is closed so the diametrical partner is always layered.
    """
    if not eps > 0:
        raise BadParameters("eps must be positive")
    idx = np.arange(M.n) if subset is None else np.sort(np.asarray(subset, dtype=np.int64))
    if len(idx) < 2:
        raise TooSmall("dense annulus needs at least two points")
    D = M.dist
    x, xb, diam = diametrical_pair(D, idx)
    half = diam / 2
    dx, dxb = D[x, idx], D[xb, idx]
    far_x, far_xb = dx >= half, dxb >= half
    if far_xb.sum() > far_x.sum():
        center, dist, far = xb, dxb[far_xb], idx[far_xb]
    else:
        center, dist, far = x, dx[far_x], idx[far_x]
    r = annulus_layers(eps)
    bounds = half * (1 + eps) ** np.arange(r + 1)
    layer = np.clip(np.searchsorted(bounds, dist, side="right"), 1, r)
    counts = np.bincount(layer, minlength=r + 1)[1:]
    best = int(np.argmax(counts)) + 1
    lam = min(2.0, (1 + eps) ** best)
    members = far[layer == best]
    return AnnulusResult(int(center), tuple(int(i) for i in members), lam, diam, r, int(len(far)))


def annulus_failures(M: MetricSpace, res: AnnulusResult, eps: float, n: int | None = None, tol: float = REL_TOL) -> list[str]:
    """Postcondition checker for :func:`find_dense_annulus`."""
    n = M.n if n is None else n
    out = []
    if not 1 - tol <= res.scale <= 2 + tol:
        out.append(f"scale {res.scale} outside [1, 2]")
    if not leq(eps * n / 4, len(res.subset), tol):
        out.append(f"|A| = {len(res.subset)} < eps n / 4 = {eps * n / 4}")
    if not leq(res.far_size / res.n_layers, len(res.subset), tol):
        out.append("|A| below the pigeonhole bound |W| / layers")
    lo = res.scale * res.diameter / (2 * (1 + eps))
    hi = res.scale * res.diameter / 2
    for z in res.subset:
        d = M.dist[res.center, z]
        if not (leq(lo, d, tol) and leq(d, hi, tol)):
            out.append(f"d(x, {z}) = {d} outside [{lo}, {hi}]")
    if res.center in res.subset:
        out.append("center lies in its own annulus")
    return out


# sparsification -------------------------------------------------------------


def scale_exponent(a: float, eps: float) -> int:
    """The integer t with ``a in ((1+eps)^(t-1), (1+eps)^t]``."""
    base = 1 + eps
    t = math.ceil(math.log(a) / math.log(base))
    while base ** (t - 1) >= a:
        t -= 1
    while base**t < a:
        t += 1
    return t


def _check_prefix(a: Sequence[float]) -> None:
    low = math.inf
    for j, v in enumerate(a):
        if not v > 0:
            raise BadParameters("sequence values must be positive")
        if not leq(v, 2 * low):
            raise PrefixDominanceViolated(f"a[{j}] = {v} exceeds twice an earlier value {low}")
        low = min(low, v)


def residue_classes(eps: float, k: float) -> int:
    """``r = ceil(log_{1+eps}(2k)) + 1``."""
    return _ceil(math.log(2 * k) / math.log1p(eps)) + 1


def sparsify_sequence(a: Sequence[float], eps: float, k: float) -> tuple[list[int], list[float]]:
    """Residue-class sparsification.

    Rounds every value up to a power of ``1+eps`` and keeps the most populous
    class of exponents modulo ``r``. Returns the kept positions and rounded values;
    any two kept values are equal or differ by a factor of at least ``k``.
    """
    if not eps > 0 or not k >= 1:
        raise BadParameters("need eps > 0 and k >= 1")
    _check_prefix(a)
    if not a:
        return [], []
    r = residue_classes(eps, k)
    t = [scale_exponent(v, eps) for v in a]
    counts = [0] * r
    for ti in t:
        counts[ti % r] += 1
    j = counts.index(max(counts))
    keep = [i for i, ti in enumerate(t) if ti % r == j]
    return keep, [(1 + eps) ** t[i] for i in keep]


def sparsify_chain(a: Sequence[float], eps: float, k: float) -> tuple[list[int], list[float]]:
    """Longest subsequence with equal-or-k-separated rounded values.

    Same rounding as :func:`sparsify_sequence`, but picks the longest index chain
    whose exponents either repeat or drop by at least ``ceil(log_{1+eps} k)``.
    Every residue class is such a chain, so the result is never shorter.
    """
    if not eps > 0 or not k >= 1:
        raise BadParameters("need eps > 0 and k >= 1")
    _check_prefix(a)
    m = len(a)
    if m == 0:
        return [], []
    base = 1 + eps
    q = max(0, math.ceil(math.log(k) / math.log(base)))
    while base**q < k:
        q += 1
    t = [scale_exponent(v, eps) for v in a]
    best = [1] * m
    prev = [-1] * m
    for j in range(m):
        for i in range(j):
            if (t[j] == t[i] or t[j] <= t[i] - q) and best[i] + 1 > best[j]:
                best[j], prev[j] = best[i] + 1, i
    j = best.index(max(best))
    keep = []
    while j >= 0:
        keep.append(j)
        j = prev[j]
    keep.reverse()
    return keep, [base ** t[i] for i in keep]


def sparsify_failures(a, keep, b, eps, k, r=None, tol: float = REL_TOL) -> list[str]:
    """Postcondition checker shared by both sparsifiers."""
    out = []
    m = len(a)
    r = residue_classes(eps, k) if r is None else r
    if not leq(m / r, len(keep), tol):
        out.append(f"|L| = {len(keep)} < m / r = {m / r}")
    if list(keep) != sorted(set(keep)):
        out.append("kept positions are not increasing")
    for i, bi in zip(keep, b):
        if not (leq(a[i], bi, tol) and leq(bi, a[i] * (1 + eps), tol)):
            out.append(f"b at {i} not in [a, (1+eps) a]")
    for x in range(len(b)):
        for y in range(x + 1, len(b)):
            if b[x] != b[y] and not leq(b[y], b[x] / k, tol):
                out.append(f"positions {keep[x]}, {keep[y]} neither equal nor k-separated")
    return out
