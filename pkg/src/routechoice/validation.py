"""Input checks shared by the estimators and the functional API."""

from __future__ import annotations

import numpy as np

from .network import NetworkError, RoutingInstance

SIMPLEX_TOL = 1e-12


def check_weight_vector(p, r: int | None = None, tol: float = 1e-9) -> np.ndarray:
    """Return ``p`` as a float array on the simplex, clamping round-off.

    Raises ``ValueError`` if ``p`` is off the simplex by more than ``tol``.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"weight vector must be 1-d, got shape {p.shape}")
    if r is not None and p.shape[0] != r:
        raise NetworkError(f"weight vector has {p.shape[0]} entries, expected {r}")
    if not np.all(np.isfinite(p)) or p.min() < -tol or abs(p.sum() - 1.0) > tol:
        raise ValueError(f"weight vector {p.tolist()} is not on the unit simplex")
    return clamp_to_simplex(p)


def clamp_to_simplex(p) -> np.ndarray:
    p = np.where(np.asarray(p, dtype=np.float64) < 0, 0.0, p)
    return p / p.sum()


def check_weight_set(weights, r: int | None = None, tol: float = 1e-9) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim == 1:
        weights = weights[None, :]
    if weights.ndim != 2 or weights.shape[0] == 0:
        raise ValueError("weight set must be a non-empty (q, r) array")
    return np.array([check_weight_vector(p, r, tol) for p in weights])


def check_instance(X) -> RoutingInstance:
    if not isinstance(X, RoutingInstance):
        raise TypeError(
            f"expected a RoutingInstance, got {type(X).__name__}; build one with "
            "RoutingInstance(network, od_pairs, measured)"
        )
    return X


def check_probability_vector(alpha, q: int, tol: float = 1e-9) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (q,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({q},)")
    if alpha.min() < -tol or abs(alpha.sum() - 1.0) > tol:
        raise ValueError("alpha is not a probability vector")
    return alpha
