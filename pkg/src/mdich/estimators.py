"""scikit-learn style wrappers: ``fit`` on a precomputed distance matrix selects a
subspace, ``transform`` returns its distance sub-matrix."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import SizeMismatch, VerificationError
from .extraction.greedy import greedy_equilateral_or_lacunary
from .extraction.hst import FINE, equilateral_or_binary_hst, triangle_to_binary_hst
from .extraction.increasing import equilateral_or_lacunary, extract_k_increasing
from .extraction.results import BINARY_HST, DichotomyResult, Guarantee
from .metric import MetricSpace, validate_metric


def check_metric(X, check_triangle: bool = True) -> MetricSpace:
    """Accept a :class:`MetricSpace` or anything array-like holding a distance matrix."""
    if isinstance(X, MetricSpace):
        return X
    return validate_metric(np.asarray(X, dtype=float), check_triangle_ineq=check_triangle)


class _SubspaceSelector(TransformerMixin, BaseEstimator):
    check_triangle = True

    def _run(self, space: MetricSpace):
        raise NotImplementedError

    def fit(self, X, y=None):
        space = check_metric(X, self.check_triangle)
        out = self._run(space)
        bad = out.failures()
        if bad:
            raise VerificationError("; ".join(bad))
        self.result_ = out
        self.support_ = np.asarray(out.witness.indices, dtype=np.int64)
        self.n_points_in_ = space.n
        self.distortion_ = float(out.cert.distortion)
        self.kind_ = getattr(out, "kind", "k-increasing")
        return self

    def get_support(self, indices: bool = False):
        check_is_fitted(self, "support_")
        if indices:
            return self.support_.copy()
        mask = np.zeros(self.n_points_in_, dtype=bool)
        mask[self.support_] = True
        return mask

    def transform(self, X):
        """Rows and columns of the selected points, in witness order."""
        check_is_fitted(self, "support_")
        D = X.dist if isinstance(X, MetricSpace) else np.asarray(X, dtype=float)
        if D.shape != (self.n_points_in_, self.n_points_in_):
            raise SizeMismatch(f"fitted on {self.n_points_in_} points, got shape {D.shape}")
        return D[np.ix_(self.support_, self.support_)]


class KIncreasingExtractor(_SubspaceSelector):
    def __init__(self, eps: float = 0.5, k: float = 2.0, sparsify: str = "chain"):
        self.eps = eps
        self.k = k
        self.sparsify = sparsify

    def _run(self, space):
        ext = extract_k_increasing(space, self.eps, self.k, self.sparsify)
        self.tree_ = ext.tree
        return ext


class EquilateralOrLacunary(_SubspaceSelector):
    """Distortion ``1 + eps`` dichotomy through a k-increasing extraction."""

    def __init__(self, eps: float = 0.5, k: float = 2.0, sparsify: str = "chain"):
        self.eps = eps
        self.k = k
        self.sparsify = sparsify

    def _run(self, space):
        return equilateral_or_lacunary(space, self.eps, self.k, self.sparsify)


class GreedyDichotomy(_SubspaceSelector):
    """Net-or-chain dichotomy with distortion ``alpha > 2``."""

    def __init__(self, alpha: float = 3.0, k: float = 2.0, threshold: int | None = None):
        self.alpha = alpha
        self.k = k
        self.threshold = threshold

    def _run(self, space):
        return greedy_equilateral_or_lacunary(space, self.alpha, self.k, self.threshold)


class EquilateralOrBinaryHst(_SubspaceSelector):
    def __init__(self, eps: float = 0.5, k: float = 2.0, h: int | None = None, mode: str = FINE):
        self.eps = eps
        self.k = k
        self.h = h
        self.mode = mode

    def _run(self, space):
        return equilateral_or_binary_hst(space, self.eps, self.k, self.h, self.mode)


class TriangleHst(_SubspaceSelector):
    """Every point, embedded into a binary ``k/2``-HST (needs all triangles to have aspect ratio >= k)."""

    def __init__(self, k: float = 4.0):
        self.k = k

    def _run(self, space):
        tree, cert = triangle_to_binary_hst(space, self.k)
        self.tree_ = tree
        g = Guarantee(space.n, self.k / (self.k - 2), {"k": self.k / 2})
        return DichotomyResult.build(BINARY_HST, space, range(space.n), tree, g)
