"""Finite metric spaces, subspaces and bijection certificates.

Distances are float64. Inequalities coming from the theory are checked with a
relative slack of ``REL_TOL``; equalities that hold by construction (restriction,
isometric copies) are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import (
    BadParameters,
    DuplicateIndex,
    IndexOutOfRange,
    MalformedInput,
    SizeMismatch,
    SymmetryError,
    TooSmall,
    TriangleViolation,
    ZeroOffDiagonal,
)

REL_TOL = 1e-9
METRIC_FORMAT = "metric-v1"


def leq(a: float, b: float, tol: float = REL_TOL) -> bool:
    """``a <= b`` up to relative slack ``tol`` (scaled by ``|b|``)."""
    return a <= b + tol * abs(b)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


def _hashable(label: Any) -> Any:
    if isinstance(label, list):
        return tuple(_hashable(x) for x in label)
    return label


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """A finite metric space: ordered point labels plus a distance matrix.

    Build instances through :func:`validate_metric`; ``MetricSpace.trusted`` skips
    validation and is reserved for constructions that are metrics by proof.
    """

    labels: tuple
    dist: np.ndarray
    meta: dict = field(default_factory=dict)

    @classmethod
    def trusted(cls, dist, labels: Sequence | None = None, meta: dict | None = None) -> "MetricSpace":
        dist = _freeze(dist)
        if labels is None:
            labels = range(dist.shape[0])
        return cls(tuple(labels), dist, dict(meta or {}))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MetricSpace):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.dist, other.dist)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"MetricSpace(n={self.n})"

    def d(self, i: int, j: int) -> float:
        return float(self.dist[i, j])

    def pair_distances(self) -> np.ndarray:
        """Upper-triangle distances in row-major order."""
        return self.dist[np.triu_indices(self.n, 1)]

    def scaled(self, t: float) -> "MetricSpace":
        if not t > 0:
            raise BadParameters("scale factor must be positive")
        return MetricSpace.trusted(self.dist * t, self.labels)


def check_triangle(dist: np.ndarray, tol: float = REL_TOL) -> tuple[int, int, int] | None:
    """Return the first triple ``(i, j, k)`` with ``d(i,k) > d(i,j) + d(j,k)``, or None.

    Triples are scanned by middle point ``j`` first; O(n^3) work in n numpy passes.
    """
    n = dist.shape[0]
    for j in range(n):
        bound = (dist[:, j : j + 1] + dist[j : j + 1, :]) * (1.0 + tol)
        bad = dist > bound
        if bad.any():
            i, k = np.argwhere(bad)[0]
            return int(i), j, int(k)
    return None


def validate_metric(raw, labels: Sequence | None = None, *, check_triangle_ineq: bool = True) -> MetricSpace:
    """Validate a square matrix and wrap it as a :class:`MetricSpace`.

    >>> validate_metric([[0, 1], [1, 0]]).n
    2
    """
    try:
        dist = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"distance matrix is not numeric: {exc}") from None
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise MalformedInput(f"distance matrix must be square, got shape {dist.shape}")
    n = dist.shape[0]
    if n == 0:
        raise TooSmall("a metric space needs at least one point")
    if not np.all(np.isfinite(dist)):
        raise MalformedInput("distance matrix has non-finite entries")
    if labels is None:
        labels = list(range(n))
    labels = [_hashable(x) for x in labels]
    if len(labels) != n:
        raise SizeMismatch(f"{len(labels)} labels for {n} points")
    if len(set(labels)) != n:
        raise DuplicateIndex("point labels must be distinct")
    if np.any(np.diag(dist) != 0):
        raise MalformedInput("diagonal entries must be zero")
    asym = np.argwhere(dist != dist.T)
    if len(asym):
        i, j = asym[0]
        raise SymmetryError(f"dist[{i}][{j}] = {dist[i, j]} but dist[{j}][{i}] = {dist[j, i]}")
    off = ~np.eye(n, dtype=bool)
    bad = np.argwhere(off & (dist <= 0))
    if len(bad):
        i, j = bad[0]
        raise ZeroOffDiagonal(f"points {i} and {j} are at non-positive distance {dist[i, j]}")
    if check_triangle_ineq:
        triple = check_triangle(dist)
        if triple is not None:
            raise TriangleViolation(triple)
    return MetricSpace.trusted(dist, labels)


@dataclass(frozen=True, eq=False)
class SubspaceWitness:
    parent: MetricSpace
    indices: tuple[int, ...]
    induced: MetricSpace

    def __len__(self) -> int:
        return len(self.indices)


def restrict(space: MetricSpace, subset: Sequence[int]) -> SubspaceWitness:
    """Induced subspace on ``subset``; the order of ``subset`` is preserved."""
    idx = [int(i) for i in subset]
    if not idx:
        raise TooSmall("subset must be nonempty")
    for i in idx:
        if not 0 <= i < space.n:
            raise IndexOutOfRange(f"index {i} outside 0..{space.n - 1}")
    if len(set(idx)) != len(idx):
        raise DuplicateIndex("subset indices must be distinct")
    sub = space.dist[np.ix_(idx, idx)]
    induced = MetricSpace.trusted(sub, [space.labels[i] for i in idx])
    return SubspaceWitness(space, tuple(idx), induced)


@dataclass(frozen=True, eq=False)
class EmbeddingCert:
    """Bijection ``source -> target`` with its expansion, contraction and distortion.

    ``mapping[i]`` is the target index of source point ``i``.
    """

    source: MetricSpace
    target: MetricSpace
    mapping: tuple[int, ...]
    expansion: float
    contraction: float
    distortion: float

    def recompute(self) -> "EmbeddingCert":
        return distortion_of(self.mapping, self.source, self.target)

    def verify(self, tol: float = REL_TOL) -> bool:
        fresh = self.recompute()
        for name in ("expansion", "contraction", "distortion"):
            a, b = getattr(self, name), getattr(fresh, name)
            if abs(a - b) > tol * max(abs(a), abs(b)):
                return False
        return self.distortion >= 1.0 - tol

    @property
    def non_contractive(self) -> bool:
        """True when ``d_target >= d_source`` for every pair (up to slack)."""
        return leq(self.contraction, 1.0)

    def to_json(self) -> dict:
        return {
            "mapping": list(self.mapping),
            "expansion": self.expansion,
            "contraction": self.contraction,
            "distortion": self.distortion,
        }


def distortion_of(mapping: Sequence[int], A: MetricSpace, B: MetricSpace) -> EmbeddingCert:
    """Exact expansion, contraction and distortion of the bijection ``mapping``."""
    if A.n != B.n:
        raise SizeMismatch(f"cannot biject {A.n} points onto {B.n}")
    f = np.asarray(mapping, dtype=np.int64)
    if f.shape != (A.n,) or sorted(f.tolist()) != list(range(B.n)):
        raise BadParameters("mapping is not a bijection onto the target")
    if A.n < 2:
        return EmbeddingCert(A, B, tuple(f.tolist()), 1.0, 1.0, 1.0)
    iu, ju = np.triu_indices(A.n, 1)
    ratio = B.dist[f[iu], f[ju]] / A.dist[iu, ju]
    expansion = float(ratio.max())
    contraction = float(1.0 / ratio.min())
    return EmbeddingCert(A, B, tuple(f.tolist()), expansion, contraction, expansion * contraction)


def identity_cert(A: MetricSpace, B: MetricSpace) -> EmbeddingCert:
    return distortion_of(range(A.n), A, B)


def diameter(space: MetricSpace) -> float:
    return float(space.dist.max()) if space.n > 1 else 0.0


def min_distance(space: MetricSpace) -> float:
    if space.n < 2:
        raise TooSmall("minimum distance needs two points")
    return float(space.pair_distances().min())


def aspect_ratio(space: MetricSpace) -> float:
    """Diameter over minimum distance."""
    if space.n < 2:
        raise TooSmall("aspect ratio needs at least two points")
    d = space.pair_distances()
    return float(d.max() / d.min())


def equilateral_distortion(space: MetricSpace) -> float:
    """Least distortion of a bijection onto an equilateral space.

    Mapping onto an equilateral space with common distance ``w`` expands by
    ``w / min d`` and contracts by ``max d / w``; the product is the aspect ratio
    whatever ``w`` is.
    """
    return aspect_ratio(space)


def equilateral_space(n: int, w: float = 1.0, labels: Sequence | None = None) -> MetricSpace:
    if n < 1:
        raise TooSmall("need at least one point")
    if not w > 0:
        raise BadParameters("common distance must be positive")
    dist = np.full((n, n), float(w))
    np.fill_diagonal(dist, 0.0)
    return MetricSpace.trusted(dist, labels)


def diametrical_pair(dist: np.ndarray, idx: Sequence[int] | None = None) -> tuple[int, int, float]:
    """First pair (row-major over ``idx``) realising the diameter of ``idx``."""
    if idx is None:
        sub = dist
        idx = np.arange(dist.shape[0])
    else:
        idx = np.asarray(idx)
        sub = dist[np.ix_(idx, idx)]
    a, b = np.unravel_index(int(np.argmax(sub)), sub.shape)
    return int(idx[a]), int(idx[b]), float(sub[a, b])


# --- JSON -----------------------------------------------------------------


def _label_to_json(label: Any) -> Any:
    if isinstance(label, tuple):
        return [_label_to_json(x) for x in label]
    if isinstance(label, np.integer):
        return int(label)
    return label


def to_json(space: MetricSpace, provenance: dict | None = None) -> dict:
    obj = {
        "format": METRIC_FORMAT,
        "labels": [_label_to_json(x) for x in space.labels],
        "dist": [[float(x) for x in row] for row in space.dist],
    }
    prov = provenance if provenance is not None else space.meta.get("provenance")
    if prov is not None:
        obj["provenance"] = prov
    return obj


def from_json(obj: dict, *, check_triangle_ineq: bool = True) -> MetricSpace:
    if not isinstance(obj, dict) or obj.get("format") != METRIC_FORMAT:
        raise MalformedInput(f"expected a {METRIC_FORMAT} object")
    if "dist" not in obj:
        raise MalformedInput("missing 'dist'")
    space = validate_metric(obj["dist"], obj.get("labels"), check_triangle_ineq=check_triangle_ineq)
    if "provenance" in obj:
        space.meta["provenance"] = obj["provenance"]
    return space
