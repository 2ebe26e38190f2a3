"""Estimator-style wrappers around the functional solvers.

Each ordering estimator follows the familiar fit/transform pattern: ``fit``
stores the recovered ordering (``permutation_``, ``ordering_``,
``positions_``, ``report_``) and ``transform`` symmetrically reorders a
square matrix by it.  Hyperparameters stay exactly as passed (resolution of
data-dependent defaults happens at fit time), so cloning and grid search
work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .core import SimilarityMatrix, as_similarity_matrix
from .duplication import alt_proj_dupli
from .solvers import eta_spectral, faq, fwtb, ubi
from .spectral import spectral_order

__all__ = [
    "SpectralOrdering",
    "EtaSpectralOrdering",
    "UbiOrdering",
    "FaqOrdering",
    "FwtbOrdering",
    "DupliSeriation",
]


def _as_matrix(X):
    if isinstance(X, SimilarityMatrix):
        return X
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("X must be a square similarity matrix")
    return as_similarity_matrix(X)


class _OrderingMixin(TransformerMixin):
    def _finish(self, A, report):
        self.report_ = report
        self.permutation_ = report.permutation
        self.positions_ = report.permutation.positions
        self.ordering_ = report.permutation.order
        self.objective_ = report.objective
        self.n_features_in_ = A.n
        return self

    def transform(self, X):
        if not hasattr(self, "permutation_"):
            raise RuntimeError("estimator is not fitted")
        A = _as_matrix(X)
        if A.n != self.n_features_in_:
            raise ValueError(
                f"X has {A.n} rows, fitted for {self.n_features_in_}"
            )
        return self.permutation_.apply_to(A.dense())


class SpectralOrdering(_OrderingMixin, BaseEstimator):
    """Order by the second Laplacian eigenvector."""

    def __init__(self, tol=1e-8, max_iter=None):
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        A = _as_matrix(X)
        return self._finish(A, spectral_order(A, tol=self.tol,
                                              max_iter=self.max_iter))


class EtaSpectralOrdering(_OrderingMixin, BaseEstimator):
    """Iteratively reweighted spectral ordering (Huber loss)."""

    def __init__(self, delta=None, t_outer=20, gamma=0.5, tol=1e-8, max_iter=None):
        self.delta = delta
        self.t_outer = t_outer
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        A = _as_matrix(X)
        report = eta_spectral(A, delta=self.delta, t_outer=self.t_outer,
                              gamma=self.gamma, tol=self.tol,
                              max_iter=self.max_iter)
        return self._finish(A, report)


class UbiOrdering(_OrderingMixin, BaseEstimator):
    """Unconstrained smooth relaxation with iterative re-biasing.

    ``kind=None`` selects the Huber loss at the estimated bandwidth.
    """

    def __init__(self, kind=None, t_outer=10, mu=None, lam_sig=None):
        self.kind = kind
        self.t_outer = t_outer
        self.mu = mu
        self.lam_sig = lam_sig

    def fit(self, X, y=None):
        A = _as_matrix(X)
        report = ubi(A, kind=self.kind, t_outer=self.t_outer, mu=self.mu,
                     lam_sig=self.lam_sig)
        return self._finish(A, report)


class FaqOrdering(_OrderingMixin, BaseEstimator):
    """Frank-Wolfe QAP ordering with a Toeplitz target."""

    def __init__(self, kind=None, max_iter=100, tol=1e-8):
        self.kind = kind
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        from .solvers import TwoSumB

        A = _as_matrix(X)
        kind = self.kind if self.kind is not None else TwoSumB()
        return self._finish(A, faq(A, kind=kind, max_iter=self.max_iter,
                                   tol=self.tol))


class FwtbOrdering(_OrderingMixin, BaseEstimator):
    """Away-step Frank-Wolfe over tie-broken permutation vectors."""

    def __init__(self, kind=None, tiebreak="naive", max_iter=1000, tol=1e-7):
        self.kind = kind
        self.tiebreak = tiebreak
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        A = _as_matrix(X)
        report = fwtb(A, kind=self.kind, tiebreak=self.tiebreak,
                      max_iter=self.max_iter, tol=self.tol)
        return self._finish(A, report)


class DupliSeriation(BaseEstimator):
    """Alternating-projection seriation with duplication counts.

    ``fit(X, counts)`` recovers the expanded matrix ``S_`` and the fragment
    assignment ``assignment_``; ``counts`` may also be passed as ``y``.
    """

    def __init__(self, inner="eta-spectral", t_max=100, bounds=None):
        self.inner = inner
        self.t_max = t_max
        self.bounds = bounds

    def fit(self, X, y=None, counts=None):
        if counts is None:
            counts = y
        if counts is None:
            raise ValueError("counts are required")
        A = _as_matrix(X)
        report = alt_proj_dupli(A, counts, inner=self.inner, T=self.t_max,
                                bounds=self.bounds)
        self.report_ = report
        self.assignment_ = report.assignment
        self.S_ = report.S
        self.residual_ = report.feasibility_residual
        self.n_features_in_ = A.n
        return self
