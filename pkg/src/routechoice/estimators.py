"""Estimator wrappers with the scikit-learn ``fit`` / ``predict`` protocol.

``X`` is a :class:`~routechoice.network.RoutingInstance`; ``y`` is ignored.
After fitting, ``predict(X)`` returns arc flows for every arc of ``X`` and
``score(X)`` the negated misfit on the measured arcs of ``X``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .flow_model import aggregate_flows
from .identification import FlowColumnCache
from .qp import DEFAULT_MAX_ITERS, DEFAULT_TOL
from .search import SearchConfig, search
from .validation import check_instance, check_weight_set


class _FlowPredictorMixin:
    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, ("weights_", "alpha_"))
        X = check_instance(X)
        cache = FlowColumnCache(X, tol=self.tol, max_iters=self.max_iter)
        return aggregate_flows(cache.flow_matrix(self.weights_), self.alpha_)

    def score(self, X, y=None) -> float:
        check_is_fitted(self, ("weights_", "alpha_"))
        X = check_instance(X)
        x = self.predict(X)[X.measured.arc_indices]
        return -float(((x - X.measured.values) ** 2).sum())


class WeightSetIdentifier(_FlowPredictorMixin, BaseEstimator):
    """Group probabilities for a known weight set.

    Parameters
    ----------
    weights : array-like of shape (q, r)
        Candidate weight vectors, each on the unit simplex.
    tol : float, default=1e-8
        KKT tolerance of the simplex least-squares solve.
    max_iter : int, default=50000

    Attributes
    ----------
    weights_ : ndarray of shape (q, r)
    alpha_ : ndarray of shape (q,)
        Fitted probability of each weight.
    g_ : float
        Squared misfit on the measured arcs.
    flow_matrix_ : FlowMatrix
    """

    def __init__(self, weights=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITERS):
        self.weights = weights
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        X = check_instance(X)
        if self.weights is None:
            raise ValueError("weights must be given")
        weights = check_weight_set(self.weights, X.network.criteria_count)
        cache = FlowColumnCache(X, tol=self.tol, max_iters=self.max_iter)
        res = cache.identify(weights)
        self.weights_ = res.weights
        self.alpha_ = res.alpha
        self.g_ = res.g_value
        self.flow_matrix_ = res.flow_matrix
        self.converged_ = res.solution.converged
        return self


class RouteChoiceSearch(_FlowPredictorMixin, BaseEstimator):
    """Search for the weight set and probabilities that best explain the counts.

    Parameters mirror :class:`~routechoice.search.SearchConfig`.

    Attributes
    ----------
    weights_, alpha_, g_ :
        Final weight set, its probabilities and the misfit.
    trace_ : dict
        ``g`` after each phase plus per-iteration records.
    counters_ : Counters
        Shortest-path and QP call counts and cumulative timings.
    """

    def __init__(self, tol1=0.01, tol2=0.85, tol3=0.005, epsilon0=1e-5,
                 grid_resolution=2, cluster_cutoff=0.04, max_outer_iterations=30,
                 stopping_rule="improvement_based", tol=DEFAULT_TOL,
                 max_iter=DEFAULT_MAX_ITERS):
        self.tol1 = tol1
        self.tol2 = tol2
        self.tol3 = tol3
        self.epsilon0 = epsilon0
        self.grid_resolution = grid_resolution
        self.cluster_cutoff = cluster_cutoff
        self.max_outer_iterations = max_outer_iterations
        self.stopping_rule = stopping_rule
        self.tol = tol
        self.max_iter = max_iter

    def _config(self) -> SearchConfig:
        return SearchConfig(
            tol1=self.tol1, tol2=self.tol2, tol3=self.tol3, epsilon0=self.epsilon0,
            grid_resolution=self.grid_resolution, cluster_cutoff=self.cluster_cutoff,
            max_outer_iterations=self.max_outer_iterations,
            stopping_rule=self.stopping_rule,
        )

    def fit(self, X, y=None):
        X = check_instance(X)
        config = self._config()
        cache = FlowColumnCache(X, tol=self.tol, max_iters=self.max_iter)
        result = search(cache, config)
        self.weights_ = result.weights
        self.alpha_ = result.alpha
        self.g_ = result.g
        self.trace_ = result.trace()
        self.result_ = result
        self.counters_ = cache.counters
        return self
