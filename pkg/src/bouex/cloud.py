"""Exact simulation of branching Brownian / branching OU clouds.

Genealogy is a rate-1 binary Yule tree; motion between branch events is one
exact OU transition, so there is no time discretization anywhere.  Trees are
stored as flat node arrays in wave (generation) order, which keeps the
genealogy available for ancestry queries while letting everything vectorize.

A Forest batches many independent replicas into one set of arrays; a
ParticleCloud is the single-replica view required by the public API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceLimitError
from .gaussian import SQRT2, SpringParams, gamma_constants, normalization_factor, \
    ou_variance, sample_ou_bridge
from .measure import Centering, PointMeasure

HORIZON_CAP = 16.0
_NODE_CAP = 80_000_000


@dataclass
class Forest:
    """n_reps independent clouds in flat node arrays (wave order).

    Node i is the particle segment from its birth to its branch time (or the
    horizon).  `xi` holds the segment's standard-normal innovation so that
    positions can be re-derived for any spring constant on the same tree.
    """

    mu: float
    horizon_t: float
    n_reps: int
    rep: np.ndarray        # replica index per node
    parent: np.ndarray     # node index, -1 for roots
    t_end: np.ndarray      # branch time, or horizon for leaves
    duration: np.ndarray   # segment duration
    xi: np.ndarray         # innovation of the segment's OU step
    x_end: np.ndarray      # position at t_end under spring constant mu
    is_leaf: np.ndarray
    wave_edges: list = field(default_factory=list)  # [start, end) node ranges per wave

    @property
    def n_nodes(self) -> int:
        return int(self.rep.size)

    @property
    def t_birth(self) -> np.ndarray:
        birth = np.zeros(self.n_nodes)
        has_parent = self.parent >= 0
        birth[has_parent] = self.t_end[self.parent[has_parent]]
        return birth

    def leaf_counts(self) -> np.ndarray:
        return np.bincount(self.rep[self.is_leaf], minlength=self.n_reps)

    def leaf_positions(self):
        """(replica index, raw position) of every leaf."""
        return self.rep[self.is_leaf], self.x_end[self.is_leaf]

    def positions_for(self, mu) -> np.ndarray:
        """Leaf positions on the same tree under another spring constant.

        Re-uses each segment's innovation, so positions for different mu are
        coupled through shared randomness; mu = inf gives the i.i.d.
        N(0, horizon_t) leaves that the tree supports in that limit.
        """
        if math.isinf(mu):
            out = np.empty(self.n_nodes)
            out[self.is_leaf] = math.sqrt(self.horizon_t) * self.xi[self.is_leaf]
            return out[self.is_leaf]
        x = np.empty(self.n_nodes)
        sd = np.sqrt(ou_variance(np.full(self.n_nodes, mu), self.duration))
        decay = np.exp(-mu * self.duration)
        for start, end in self.wave_edges:
            sl = slice(start, end)
            par = self.parent[sl]
            x_par = np.where(par >= 0, x[np.maximum(par, 0)], 0.0)
            x[sl] = x_par * decay[sl] + sd[sl] * self.xi[sl]
        return x[self.is_leaf]


def simulate_forest(mu: float, horizon_t: float, n_reps: int, rng,
                    horizon_cap: float = HORIZON_CAP) -> Forest:
    """Draw n_reps independent clouds with one exact-law batched traversal."""
    if not horizon_t > 0:
        raise ValueError("horizon_t must be positive")
    if mu < 0:
        raise ValueError("negative spring constant is out of scope")
    if horizon_t > horizon_cap:
        raise ResourceLimitError(
            f"horizon {horizon_t} exceeds cap {horizon_cap}: expected leaf count "
            f"is e^t = {math.exp(horizon_t):.3g} per replica")

    rep_parts, par_parts, tend_parts, dur_parts, xi_parts, xend_parts, leaf_parts = \
        [], [], [], [], [], [], []
    wave_edges = []
    n_nodes = 0

    w_rep = np.arange(n_reps, dtype=np.int64)
    w_parent = np.full(n_reps, -1, dtype=np.int64)
    w_birth = np.zeros(n_reps)
    w_x = np.zeros(n_reps)

    while w_rep.size:
        m = w_rep.size
        if n_nodes + m > _NODE_CAP:
            raise ResourceLimitError(
                f"forest exceeds node cap {_NODE_CAP} (mu={mu}, t={horizon_t}, "
                f"n_reps={n_reps})")
        life = rng.exponential(size=m)
        xi = rng.standard_normal(m)
        leaf = w_birth + life >= horizon_t
        dur = np.where(leaf, horizon_t - w_birth, life)
        sd = np.sqrt(ou_variance(np.full(m, mu), dur))
        x_new = w_x * np.exp(-mu * dur) + sd * xi
        t_end = np.where(leaf, horizon_t, w_birth + life)

        ids = np.arange(n_nodes, n_nodes + m, dtype=np.int64)
        rep_parts.append(w_rep)
        par_parts.append(w_parent)
        tend_parts.append(t_end)
        dur_parts.append(dur)
        xi_parts.append(xi)
        xend_parts.append(x_new)
        leaf_parts.append(leaf)
        wave_edges.append((n_nodes, n_nodes + m))
        n_nodes += m

        splitting = ~leaf
        w_rep = np.repeat(w_rep[splitting], 2)
        w_parent = np.repeat(ids[splitting], 2)
        w_birth = np.repeat(t_end[splitting], 2)
        w_x = np.repeat(x_new[splitting], 2)

    return Forest(
        mu=mu, horizon_t=horizon_t, n_reps=n_reps,
        rep=np.concatenate(rep_parts), parent=np.concatenate(par_parts),
        t_end=np.concatenate(tend_parts), duration=np.concatenate(dur_parts),
        xi=np.concatenate(xi_parts), x_end=np.concatenate(xend_parts),
        is_leaf=np.concatenate(leaf_parts), wave_edges=wave_edges)


class ParticleCloud:
    """One branching-diffusion realization with its full genealogy."""

    def __init__(self, spring: SpringParams, forest: Forest):
        self.spring = spring
        self._forest = forest

    @property
    def leaf_count(self) -> int:
        return int(np.count_nonzero(self._forest.is_leaf))

    @property
    def leaf_positions(self) -> np.ndarray:
        return self._forest.x_end[self._forest.is_leaf]

    @property
    def forest(self) -> Forest:
        return self._forest

    def mrca_time(self, u: int, v: int) -> float:
        """Branch time of the most recent common ancestor of leaves u, v.

        Leaves are indexed in storage order; the MRCA of a leaf with itself
        is the horizon.
        """
        f = self._forest
        leaves = np.flatnonzero(f.is_leaf)
        a, b = int(leaves[u]), int(leaves[v])
        if a == b:
            return f.horizon_t
        anc = {}
        node = a
        while node >= 0:
            anc[node] = True
            node = int(f.parent[node])
        node = b
        while node >= 0:
            if node in anc:
                return float(f.t_end[node]) if not f.is_leaf[node] else f.horizon_t
            node = int(f.parent[node])
        raise AssertionError("leaves share no root")  # pragma: no cover


def simulate_cloud(spring: SpringParams, rng, horizon_cap: float = HORIZON_CAP) -> ParticleCloud:
    """Exact-law sample of one cloud run to spring.horizon_t."""
    forest = simulate_forest(spring.mu, spring.horizon_t, 1, rng, horizon_cap=horizon_cap)
    return ParticleCloud(spring, forest)


def extremal_measure(cloud: ParticleCloud, centering: Centering) -> PointMeasure:
    """Centred, variance-normalized leaf positions as a point measure."""
    if not math.isclose(centering.t, cloud.spring.horizon_t, rel_tol=1e-12):
        raise ValueError("centering horizon must match the cloud horizon")
    lam = normalization_factor(cloud.spring.mu, cloud.spring.horizon_t)
    return PointMeasure(lam * cloud.leaf_positions - centering.value)


def additive_martingale(cloud: ParticleCloud, beta: float) -> float:
    """Sum of exp(beta X - (beta^2/2 + 1) t) over leaves (Brownian clouds only)."""
    if cloud.spring.mu != 0.0:
        raise ValueError("the additive martingale is defined for mu = 0")
    t = cloud.spring.horizon_t
    return float(np.sum(np.exp(beta * cloud.leaf_positions - (0.5 * beta * beta + 1.0) * t)))


def derivative_martingale(cloud: ParticleCloud) -> float:
    """Sum of (sqrt(2) t - X) exp(sqrt(2) X - 2t) over leaves (mu = 0 only)."""
    if cloud.spring.mu != 0.0:
        raise ValueError("the derivative martingale is defined for mu = 0")
    t = cloud.spring.horizon_t
    x = cloud.leaf_positions
    return float(np.sum((SQRT2 * t - x) * np.exp(SQRT2 * x - 2.0 * t)))


def additive_martingale_per_rep(forest: Forest, beta: float) -> np.ndarray:
    if forest.mu != 0.0:
        raise ValueError("the additive martingale is defined for mu = 0")
    t = forest.horizon_t
    rep, x = forest.leaf_positions()
    w = np.exp(beta * x - (0.5 * beta * beta + 1.0) * t)
    return np.bincount(rep, weights=w, minlength=forest.n_reps)


def derivative_martingale_per_rep(forest: Forest) -> np.ndarray:
    if forest.mu != 0.0:
        raise ValueError("the derivative martingale is defined for mu = 0")
    t = forest.horizon_t
    rep, x = forest.leaf_positions()
    w = (SQRT2 * t - x) * np.exp(SQRT2 * x - 2.0 * t)
    return np.bincount(rep, weights=w, minlength=forest.n_reps)


def variable_speed_view(cloud: ParticleCloud, gamma: float, s: float, rng) -> np.ndarray:
    """Time-changed positions Y_s of all lineages alive at time s.

    Requires the cloud to have been run with mu = gamma / t; interior times
    are filled in by exact OU bridges between stored segment endpoints, so
    Var(Y_s) = t (e^{2 gamma s/t} - 1)/(e^{2 gamma} - 1).
    """
    t = cloud.spring.horizon_t
    if not math.isclose(cloud.spring.mu * t, gamma, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError("cloud must satisfy mu * horizon_t = gamma")
    if not 0.0 <= s <= t:
        raise ValueError("s must lie in [0, horizon_t]")
    scale = gamma_constants(gamma).c_gamma * math.exp(gamma * s / t)
    f = cloud.forest
    birth = f.t_birth
    if s == 0.0:
        return np.zeros(1)
    alive = (birth < s) & (s <= f.t_end)
    if s == t:
        alive = f.is_leaf.copy()
    idx = np.flatnonzero(alive)
    x_birth = np.where(f.parent[idx] >= 0, f.x_end[np.maximum(f.parent[idx], 0)], 0.0)
    at_end = np.isclose(f.t_end[idx], s)
    pos = np.empty(idx.size)
    pos[at_end] = f.x_end[idx[at_end]]
    mid = ~at_end
    if np.any(mid):
        i = idx[mid]
        pos[mid] = sample_ou_bridge(
            x_birth[mid], f.x_end[i], cloud.spring.mu,
            s - birth[i], f.t_end[i] - s, rng)
    return scale * pos
