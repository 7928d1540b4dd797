"""Net-or-chain dichotomy for distortion above 2."""

from __future__ import annotations

import math

import numpy as np

from ..errors import AlphaTooSmall, BadParameters, TooSmall
from ..metric import REL_TOL, MetricSpace, diametrical_pair, leq
from ..trees import LacunarySequence, subsequence_stride
from .results import EQUILATERAL, LACUNARY, DichotomyResult, Guarantee


def default_threshold(n: int) -> int:
    return max(2, math.ceil(math.log2(n)))


def greedy_net(D: np.ndarray, F: np.ndarray, first: int, radius: float) -> list[int]:
    """Maximal ``radius``-separated subset of ``F`` grown from ``first``, then ``F`` in order."""
    net = [first]
    gap = D[first, F].copy()
    for i, p in enumerate(F):
        if gap[i] >= radius:
            net.append(int(p))
            np.minimum(gap, D[p, F], out=gap)
    return net


def greedy_equilateral_or_lacunary(M: MetricSpace, alpha: float = 3.0, k: float = 2.0, threshold: int | None = None) -> DichotomyResult:
    """Equilateral net or lacunary chain, distortion at most ``alpha`` (needs ``alpha > 2``).

    At each level take a diametrical pair ``x, x'`` of the current set ``F`` and a
    maximal ``diam(F)/alpha``-net grown from ``x``. A net of ``threshold`` points is
    returned as an equilateral witness. Otherwise ``F`` moves to the largest net
    cell, and the level's far point (``x`` unless the cell is ``x``'s own ball, in
    which case ``x'``) joins the chain. The chain's diameters are
    ``alpha/2``-lacunary; when ``k > alpha/2`` the chain is thinned to a
    k-lacunary subsequence.
    """
    if not alpha > 2:
        raise AlphaTooSmall(f"alpha must exceed 2, got {alpha}")
    if not k >= 1:
        raise BadParameters("k must be >= 1")
    n = M.n
    if n < 2:
        raise TooSmall("greedy dichotomy needs at least two points")
    T = default_threshold(n) if threshold is None else int(threshold)
    if T < 1:
        raise BadParameters("threshold must be a positive integer")
    D = M.dist
    F = np.arange(n)
    chain: list[int] = []
    diams: list[float] = []
    while len(F) >= 2:
        x, xb, diam = diametrical_pair(D, F)
        radius = diam / alpha
        net = greedy_net(D, F, x, radius)
        if len(net) >= T:
            g = Guarantee(T, alpha, {"alpha": alpha, "k": k, "threshold": T, "branch": "net", "level": len(chain)})
            return DichotomyResult.build(EQUILATERAL, M, net, None, g)
        near = D[np.ix_(net, F)] < radius
        cell_of = np.argmax(near, axis=0)
        sizes = np.bincount(cell_of, minlength=len(net))
        best = int(np.argmax(sizes))
        chain.append(x if best > 0 else xb)
        diams.append(diam)
        F = F[cell_of == best]
    chain.append(int(F[0]))
    half = alpha / 2
    base = math.log(n) / math.log(T) if T >= 2 else math.inf
    params = {"alpha": alpha, "k": k, "threshold": T, "branch": "chain", "chain": chain, "chain_diameters": diams}
    if k > half:
        s = subsequence_stride(half, k)
        keep = list(range(0, len(diams), s))
        seq = LacunarySequence(tuple(diams[i] for i in keep), k)
        points = [chain[i] for i in keep] + [chain[-1]]
        params["stride"] = s
        bound = base / s
    else:
        seq = LacunarySequence(tuple(diams), half)
        points = list(chain)
        bound = base
    params["chain_bound"] = base
    return DichotomyResult.build(LACUNARY, M, points, seq, Guarantee(bound, alpha, params))


def chain_failures(result: DichotomyResult, tol: float = REL_TOL) -> list[str]:
    """Recheck the chain inequalities recorded by :func:`greedy_equilateral_or_lacunary`."""
    p = result.guarantee.params
    if p.get("branch") != "chain":
        return []
    M = result.witness.parent
    alpha = p["alpha"]
    chain, diams = p["chain"], p["chain_diameters"]
    out = []
    if len(chain) != len(diams) + 1:
        out.append("chain and diameter records disagree")
    for i in range(1, len(diams)):
        if not leq(diams[i], 2 / alpha * diams[i - 1], tol):
            out.append(f"diam(F_{i + 1}) > (2/alpha) diam(F_{i})")
    for i in range(len(diams)):
        for j in range(i + 1, len(chain)):
            d = M.dist[chain[i], chain[j]]
            if not (leq(diams[i] / alpha, d, tol) and leq(d, diams[i], tol)):
                out.append(f"d(z_{i + 1}, z_{j + 1}) = {d} outside [diam/alpha, diam]")
    if not leq(p["chain_bound"], len(chain), tol):
        out.append(f"chain length {len(chain)} below log n / log T = {p['chain_bound']}")
    return out
