"""Search for an unknown weight set.

The search starts from a coarse lattice on the simplex and alternates
identification with local densification: weights carrying probability above a
threshold ``eps`` spawn neighbours at step ``1/2^t``, while negligible weights
far from them are dropped. The surviving support is then collapsed to one
probability-weighted barycenter per cluster, and each barycenter is refined by
a neighbourhood search whose radius halves whenever no neighbour improves the
fit.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from .identification import FlowColumnCache, IdentificationResult, weight_key
from .network import RoutingInstance
from .validation import SIMPLEX_TOL

logger = logging.getLogger(__name__)

StoppingRule = Literal["improvement_based", "literal_until"]

# relative margin below which a change in g counts as rounding noise
IMPROVEMENT_RTOL = 1e-12


@dataclass(frozen=True)
class SearchConfig:
    tol1: float = 0.01
    tol2: float = 0.85
    tol3: float = 0.005
    epsilon0: float = 1e-5
    grid_resolution: int = 2
    cluster_cutoff: float = 0.04
    max_outer_iterations: int = 30
    stopping_rule: StoppingRule = "improvement_based"
    max_local_steps: int = 500

    def __post_init__(self):
        if not (0 < self.tol1 <= 1 and 0 < self.tol3 <= 1):
            raise ValueError("tol1 and tol3 must lie in (0, 1]")
        if not 0 < self.tol2 < 1:
            raise ValueError("tol2 must lie in (0, 1)")
        if self.epsilon0 <= 0:
            raise ValueError("epsilon0 must be positive")
        if self.grid_resolution < 1:
            raise ValueError("grid_resolution must be at least 1")
        if self.cluster_cutoff < 0:
            raise ValueError("cluster_cutoff must be non-negative")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be at least 1")
        if self.stopping_rule not in ("improvement_based", "literal_until"):
            raise ValueError(f"unknown stopping rule {self.stopping_rule!r}")


@dataclass(frozen=True, eq=False)
class Cluster:
    members: np.ndarray
    barycenter: np.ndarray
    radius: float


@dataclass
class SearchResult:
    weights: np.ndarray
    alpha: np.ndarray
    g: float
    g_initial: float
    g_after_refine: float
    g_after_cluster: float
    iterations: list[dict] = field(default_factory=list)
    local_steps: list[dict] = field(default_factory=list)
    refine_weights: np.ndarray | None = None
    refine_alpha: np.ndarray | None = None

    @property
    def g_final(self) -> float:
        return self.g

    def trace(self) -> dict:
        return {
            "g_initial": self.g_initial,
            "g_after_refine": self.g_after_refine,
            "g_after_cluster": self.g_after_cluster,
            "g_final": self.g,
            "iterations": self.iterations,
            "local_search": self.local_steps,
        }


def improves(new: float, old: float) -> bool:
    return new < old - IMPROVEMENT_RTOL * abs(old)


# ---------------------------------------------------------------------------
# weight-set primitives


def initial_grid(r: int, resolution: int) -> np.ndarray:
    """Simplex lattice ``{k / s : k >= 0 integer, sum(k) = s}``."""
    if r < 1 or resolution < 1:
        raise ValueError("r and resolution must be positive")
    s = resolution
    points = []
    # bars-and-stars: choose r-1 cut positions among s+r-1 slots
    for cuts in itertools.combinations(range(s + r - 1), r - 1):
        bounds = (-1,) + cuts + (s + r - 1,)
        points.append([bounds[i + 1] - bounds[i] - 1 for i in range(r)])
    return np.array(points, dtype=np.float64)[::-1] / s


def _directions(r: int) -> np.ndarray:
    if r == 3:
        return np.array([(i, j, -i - j) for i in (-1, 0, 1) for j in (-1, 0, 1)
                         if i != 0 or j != 0], dtype=np.float64)
    dirs = []
    for a in range(r):
        for b in range(r):
            if a != b:
                d = np.zeros(r)
                d[a], d[b] = 1.0, -1.0
                dirs.append(d)
    return np.array(dirs).reshape(-1, r)


def perturbation(weights, step: float) -> np.ndarray:
    """Neighbours ``p + d * step`` of every weight that stay on the simplex.

    For three criteria ``d`` ranges over the eight directions ``(i, j, -i-j)``
    with ``i, j`` in ``{-1, 0, 1}``; otherwise over the exchanges ``e_a - e_b``.
    Duplicates are removed, first occurrence kept.
    """
    weights = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    if weights.shape[0] == 0:
        return weights.reshape(0, weights.shape[1])
    r = weights.shape[1]
    out, seen = [], set()
    for p in weights:
        for d in _directions(r):
            cand = p + d * step
            if cand.min() < -SIMPLEX_TOL:
                continue
            cand = np.where(cand < 0, 0.0, cand)
            cand = cand / cand.sum()
            key = weight_key(cand)
            if key not in seen:
                seen.add(key)
                out.append(cand)
    return np.array(out).reshape(-1, r)


def _min_distances(points: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    if anchors.shape[0] == 0:
        return np.full(points.shape[0], np.inf)
    diff = points[:, None, :] - anchors[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=2)).min(axis=1)


def prune_mask(weights, kept_mask, threshold: float) -> np.ndarray:
    """Mask of non-kept weights farther than ``threshold`` from every kept weight."""
    weights = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    kept_mask = np.asarray(kept_mask, dtype=bool)
    anchors = weights[kept_mask]
    mask = np.zeros(weights.shape[0], dtype=bool)
    if anchors.shape[0] == 0:
        return mask
    others = np.flatnonzero(~kept_mask)
    mask[others] = _min_distances(weights[others], anchors) > threshold
    return mask


def prune(weights, kept, threshold: float) -> np.ndarray:
    """Weights of ``weights`` not in ``kept`` whose distance to ``kept`` exceeds ``threshold``."""
    weights = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    kept = np.atleast_2d(np.asarray(kept, dtype=np.float64))
    kept_keys = {weight_key(p) for p in kept}
    kept_mask = np.array([weight_key(p) in kept_keys for p in weights])
    others = ~kept_mask
    dist = _min_distances(weights, kept) if kept.shape[0] else np.full(len(weights), -np.inf)
    return weights[others & (dist > threshold)]


def _union(base: np.ndarray, extra: np.ndarray) -> tuple[np.ndarray, int]:
    keys = {weight_key(p) for p in base}
    fresh = [p for p in extra if weight_key(p) not in keys]
    if not fresh:
        return base, 0
    return np.vstack([base, np.array(fresh)]), len(fresh)


# ---------------------------------------------------------------------------
# algorithm phases


def _should_stop(rule: StoppingRule, eps: float, g_new: float, g_old: float,
                 n_new: int, config: SearchConfig) -> bool:
    if rule == "literal_until":
        return eps < config.tol1 and g_new <= config.tol2 * g_old
    if eps >= config.tol1:
        return True
    # a step that added no weight cannot change g; judge progress on the next one
    return n_new > 0 and g_new > config.tol2 * g_old


def refine_loop(cache: FlowColumnCache, config: SearchConfig):
    """Grid densification phase.

    Returns ``(first, last, iterations)``: the identification results of the
    initial grid and of the final weight set, and one trace record per outer
    iteration.
    """
    r = cache.instance.network.criteria_count
    weights = initial_grid(r, config.grid_resolution)
    first = res = cache.identify(weights)
    eps = config.epsilon0
    t = 1
    iterations = []
    logger.info("initial grid: %d weights, g=%.6g", len(weights), res.g_value)
    for _ in range(config.max_outer_iterations):
        alpha = res.alpha
        kept = alpha > eps
        new = perturbation(weights[kept], 1.0 / 2 ** t)
        dropped = prune_mask(weights, kept, 1.0 / 2 ** (t - 1))
        base = weights[~dropped]
        next_weights, n_new = _union(base, new)
        alpha0 = np.concatenate([alpha[~dropped], np.zeros(n_new)])
        if alpha0.sum() <= 0:
            alpha0 = None
        nxt = cache.identify(next_weights, alpha0=alpha0)
        iterations.append({
            "t": t,
            "epsilon": eps,
            "size": int(len(next_weights)),
            "added": int(n_new),
            "pruned": int(dropped.sum()),
            "g": nxt.g_value,
        })
        logger.info("t=%d eps=%.3g |P|=%d g=%.6g", t, eps, len(next_weights), nxt.g_value)
        g_old = res.g_value
        eps *= 2.0
        t += 1
        weights, res = next_weights, nxt
        if _should_stop(config.stopping_rule, eps, nxt.g_value, g_old, n_new, config):
            break
    return first, res, iterations


def find_clusters(weights, alpha, cutoff: float) -> list[Cluster]:
    """Single-linkage clusters cut at ``cutoff``, with probability-weighted barycenters.

    Clusters are ordered by their first member. A cluster without probability
    mass gets the plain mean of its members as barycenter.
    """
    weights = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    alpha = np.asarray(alpha, dtype=np.float64)
    if weights.shape[0] == 0:
        raise ValueError("cannot cluster an empty weight set")
    if weights.shape[0] == 1:
        labels = np.zeros(1, dtype=int)
    else:
        labels = fcluster(linkage(weights, method="single", metric="euclidean"),
                          t=cutoff, criterion="distance")
    clusters = []
    for lab in sorted(set(labels.tolist()), key=lambda v: int(np.argmax(labels == v))):
        members = np.flatnonzero(labels == lab)
        mass = alpha[members].sum()
        if mass > 0:
            center = (alpha[members, None] * weights[members]).sum(axis=0) / mass
        else:
            center = weights[members].mean(axis=0)
        center = np.where(center < 0, 0.0, center)
        center = center / center.sum()
        radius = float(np.sqrt(((weights[members] - center) ** 2).sum(axis=1)).max())
        clusters.append(Cluster(members, center, radius))
    return clusters


def local_search(cache: FlowColumnCache, weights: np.ndarray, ell: int, rho: float,
                 current: IdentificationResult):
    """One neighbourhood step around ``weights[ell]``.

    Every neighbour at distance ``rho`` replaces ``weights[ell]`` in turn; the
    best strict improvement is adopted. Without one the radius is halved.
    Returns ``(weights, rho, result)``.
    """
    neighbours = perturbation(weights[ell:ell + 1], rho)
    others = {weight_key(p) for i, p in enumerate(weights) if i != ell}
    best, best_res = weights, current
    for p in neighbours:
        if weight_key(p) in others:
            continue
        cand = weights.copy()
        cand[ell] = p
        res = cache.identify(cand, alpha0=current.alpha)
        if improves(res.g_value, best_res.g_value):
            best, best_res = cand, res
    if best is weights:
        return weights, rho / 2.0, current
    return best, rho, best_res


def search(instance: RoutingInstance | FlowColumnCache,
           config: SearchConfig | None = None) -> SearchResult:
    """Run the full search and return the weight set, probabilities and trace."""
    config = config or SearchConfig()
    cache = instance if isinstance(instance, FlowColumnCache) else FlowColumnCache(instance)
    first, refined, iterations = refine_loop(cache, config)

    support = refined.support()
    clusters = find_clusters(refined.weights[support], refined.alpha[support],
                             config.cluster_cutoff)
    weights = np.array([c.barycenter for c in clusters])
    current = cache.identify(weights)
    g_after_cluster = current.g_value
    logger.info("%d clusters, g=%.6g", len(clusters), g_after_cluster)

    local_steps = []
    for ell, cluster in enumerate(clusters):
        rho = cluster.radius
        steps = 0
        while rho > config.tol3 and steps < config.max_local_steps:
            weights, rho_out, current = local_search(cache, weights, ell, rho, current)
            local_steps.append({"index": ell, "rho": rho, "improved": rho_out == rho,
                                "g": current.g_value})
            rho = rho_out
            steps += 1

    final = cache.identify(weights)
    if final.g_value > current.g_value:
        final = current
    return SearchResult(
        weights=final.weights,
        alpha=final.alpha,
        g=final.g_value,
        g_initial=first.g_value,
        g_after_refine=refined.g_value,
        g_after_cluster=g_after_cluster,
        iterations=iterations,
        local_steps=local_steps,
        refine_weights=refined.weights,
        refine_alpha=refined.alpha,
    )


def config_dict(config: SearchConfig) -> dict:
    return asdict(config)
