"""Least squares over the probability simplex.

Solves ``min ||A alpha - b||^2`` subject to ``alpha >= 0, sum(alpha) = 1`` with
accelerated projected gradient (FISTA, adaptive restart). Once the iterate has
settled on a support, a primal active-set pass solves the problem exactly on
that support, which is what drives the KKT residual down to rounding level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 50_000
CLAMP = 1e-12

# FISTA iterations between attempts to finish with the active-set pass
_FIRST_POLISH = 20
_POLISH_EVERY = 200


@dataclass(frozen=True, eq=False)
class SimplexLSProblem:
    matrix: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        A = np.array(self.matrix, dtype=np.float64, ndmin=2)
        b = np.asarray(self.target, dtype=np.float64).ravel()
        if A.shape[0] < 1 or A.shape[1] < 1:
            raise ValueError("matrix must have at least one row and one column")
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"matrix has {A.shape[0]} rows, target has {b.shape[0]}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("matrix and target must be finite")
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "target", b)

    @property
    def q(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True, eq=False)
class SimplexLSSolution:
    alpha: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool


def project_onto_simplex(v) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum(x) = 1}`` by sort and threshold."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a non-empty 1-d vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector must be finite")
    # shifting by the max keeps the threshold arithmetic near unit scale
    v = v - v.max()
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / k > 0)[-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def objective_value(problem: SimplexLSProblem, alpha) -> float:
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (problem.q,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({problem.q},)")
    r = problem.matrix @ alpha - problem.target
    return float(r @ r)


def gradient(problem: SimplexLSProblem, alpha) -> np.ndarray:
    A = problem.matrix
    return 2.0 * (A.T @ (A @ alpha - problem.target))


def kkt_residual(problem: SimplexLSProblem, alpha) -> float:
    """``||alpha - proj(alpha - grad f(alpha))||_inf``; zero exactly at the optimum."""
    alpha = np.asarray(alpha, dtype=np.float64)
    step = alpha - project_onto_simplex(alpha - gradient(problem, alpha))
    return float(np.abs(step).max())


def _rounding_floor(problem: SimplexLSProblem, alpha) -> float:
    # size of the rounding error in a computed gradient entry
    absA = np.abs(problem.matrix)
    bound = 2.0 * absA.T @ (absA @ np.abs(alpha) + np.abs(problem.target))
    return 1e-13 * max(1.0, float(bound.max()))


def lipschitz_constant(gram: np.ndarray, iters: int = 50, rtol: float = 1e-8) -> float:
    """``2 * lambda_max(gram)`` by power iteration."""
    q = gram.shape[0]
    v = np.full(q, 1.0 / np.sqrt(q))
    lam = 0.0
    for _ in range(iters):
        w = gram @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        new = float(v @ gram @ v)
        if abs(new - lam) <= rtol * abs(new):
            lam = new
            break
        lam = new
    # power iteration approaches lambda_max from below
    return 2.0 * lam * (1.0 + 1e-3)


def _equality_ls(A, b, free):
    """Minimize ``||A_F beta - b||`` subject to ``sum(beta) = 1`` on the free set."""
    if free.size == 1:
        return np.ones(1)
    AF = A[:, free]
    last = AF[:, -1]
    B = AF[:, :-1] - last[:, None]
    y = np.linalg.lstsq(B, b - last, rcond=None)[0]
    return np.append(y, 1.0 - y.sum())


def _active_set(problem: SimplexLSProblem, alpha, tol, max_steps):
    """Primal active-set method started from a feasible ``alpha``."""
    A, b = problem.matrix, problem.target
    q = problem.q
    alpha = alpha.copy()
    free = np.zeros(q, dtype=bool)
    free[alpha > 0] = True
    if not free.any():
        free[np.argmax(alpha)] = True
    for _ in range(max_steps):
        idx = np.flatnonzero(free)
        beta = _equality_ls(A, b, idx)
        if np.all(beta > 0):
            alpha = np.zeros(q)
            alpha[idx] = beta
            g = gradient(problem, alpha)
            mu = g[idx].mean()
            if free.all():
                return alpha
            bound = np.flatnonzero(~free)
            j = bound[np.argmin(g[bound])]
            if g[j] - mu >= -tol:
                return alpha
            free[j] = True
            continue
        cur = alpha[idx]
        neg = beta <= 0
        ratios = cur[neg] / (cur[neg] - beta[neg])
        t = float(ratios.min())
        step = cur + t * (beta - cur)
        step[np.flatnonzero(neg)[ratios <= t]] = 0.0
        step[step < 0] = 0.0
        alpha = np.zeros(q)
        alpha[idx] = step
        free = alpha > 0
        if not free.any():
            free[idx[np.argmax(beta)]] = True
            alpha[idx[np.argmax(beta)]] = 1.0
        alpha /= alpha.sum()
    return alpha


def _finish(problem, alpha, iterations, tol):
    alpha = np.where(alpha < CLAMP, 0.0, alpha)
    alpha = alpha / alpha.sum()
    kkt = kkt_residual(problem, alpha)
    converged = kkt <= max(tol, _rounding_floor(problem, alpha))
    return SimplexLSSolution(alpha, objective_value(problem, alpha), kkt, iterations, converged)


def solve_simplex_ls(problem: SimplexLSProblem, tol: float = DEFAULT_TOL,
                     max_iters: int = DEFAULT_MAX_ITERS, alpha0=None) -> SimplexLSSolution:
    """Minimize ``||A alpha - b||^2`` over the probability simplex.

    Parameters
    ----------
    problem : SimplexLSProblem
    tol : float
        Target KKT residual. On badly scaled problems the residual cannot go
        below the rounding error of the gradient; ``converged`` accounts for
        that floor.
    max_iters : int
        Cap on FISTA iterations. When reached, the best iterate is returned
        with ``converged=False``.
    alpha0 : array-like, optional
        Warm start; projected onto the simplex before use.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    q = problem.q
    if q == 1:
        return _finish(problem, np.ones(1), 0, tol)
    A, b = problem.matrix, problem.target
    gram = A.T @ A
    atb = A.T @ b
    L = lipschitz_constant(gram)
    x = project_onto_simplex(np.full(q, 1.0 / q) if alpha0 is None else np.asarray(alpha0, float))
    if L == 0.0:
        return _finish(problem, x, 0, tol)

    def grad(z):
        return 2.0 * (gram @ z - atb)

    bb = float(b @ b)

    def fast_objective(z):
        return float(z @ gram @ z - 2.0 * atb @ z + bb)

    y = x
    t = 1.0
    best, best_f = x, fast_objective(x)
    it = 0
    while it < max_iters:
        it += 1
        gy = grad(y)
        x_new = project_onto_simplex(y - gy / L)
        if gy @ (x_new - x) > 0:
            # adaptive restart: momentum points uphill
            t = 1.0
            y = x_new
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            y = x_new + ((t - 1.0) / t_new) * (x_new - x)
            t = t_new
        x = x_new
        f = fast_objective(x)
        if f < best_f:
            best, best_f = x, f
        if it == _FIRST_POLISH or it % _POLISH_EVERY == 0 or it == max_iters:
            thr = max(0.1 * tol, _rounding_floor(problem, best))
            polished = _active_set(problem, best, thr, max_steps=4 * q + 20)
            sol = _finish(problem, polished, it, tol)
            if sol.converged:
                return sol
            if fast_objective(sol.alpha) < best_f:
                best, best_f = sol.alpha, fast_objective(sol.alpha)
            if kkt_residual(problem, best) <= tol:
                break
    return _finish(problem, best, it, tol)
