"""Spine point process, large-deviation constant estimation, and the
limiting decorated Poisson point processes.

The spine realization is a standard Brownian motion B observed at the atoms
sigma_k of a rate-2 Poisson process on [0, T]; branch k carries an
independent Brownian cloud of age sigma_k, each of whose leaves X places an
atom at B_{sigma_k} - sqrt(2) rho sigma_k + X, on top of the fixed atom at 0.

The fraction of realizations with no strictly positive atom, divided by
sqrt(4 pi), estimates the large-deviation prefactor c(rho) of the maximal
displacement; conditioning on that void event samples the decoration law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cloud import simulate_forest, additive_martingale_per_rep
from .errors import RejectionBudgetError
from .gaussian import SQRT2, INV_SQRT_4PI, gamma_constants
from .measure import PointMeasure
from .rng import substream, spawn_seed
from .window import collect_atoms_above

CHUNK = 4096


@dataclass(frozen=True)
class SpineRealization:
    rho: float
    horizon_T: float
    window_a: float
    atoms: PointMeasure          # all atoms >= window_a, the one at 0 included
    count_above_zero: int        # strictly positive atoms
    pruned_mass: float = 0.0

    def __post_init__(self):
        if self.atoms.count_above(self.window_a) != len(self.atoms):
            raise ValueError("atoms below the window")


@dataclass(frozen=True)
class EstimatorResult:
    estimate: float
    stderr: float
    n_samples: int
    n_accepted: int = 0
    warning: Optional[str] = None
    pruned_mass: float = 0.0
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class LimitProcessSample:
    gamma: float
    window_a: float
    atoms: PointMeasure
    intensity_mass: float


def _split_fraction(rho: float) -> float:
    # equalizes the decay rates of the Brownian and cloud-max bound terms
    return (-1.0 + math.sqrt(1.0 + 2.0 * (rho - 1.0))) / (rho - 1.0)


def truncation_miss_bound(rho: float, window_a: float, T: float) -> float:
    """Certified bound on P(any branch after T contributes an atom >= window_a).

    Splits the slack a + sqrt(2)(rho-1)s between the spine (Gaussian
    Chernoff bound) and the cloud maximum (first-moment envelope
    e^{-sqrt(2) y - y^2/2s} / (2 sqrt(pi))), integrated in closed form.
    """
    if rho <= 1.0:
        raise ValueError("no finite horizon certificate exists for rho <= 1")
    beta = _split_fraction(rho)
    d = rho - 1.0
    if window_a + SQRT2 * d * T <= 0:
        return 1.0
    r_m = 2.0 * (1.0 - beta) * d
    a_m = math.exp(-SQRT2 * (1.0 - beta) * window_a) / (math.sqrt(math.pi) * r_m)
    r_b = beta * beta * d * d
    a_b = 2.0 * math.exp(-SQRT2 * window_a * beta * beta * d) / r_b
    return a_m * math.exp(-r_m * T) + a_b * math.exp(-r_b * T)


def truncation_horizon(rho: float, window_a: float, eps: float) -> float:
    """Smallest certified horizon with truncation miss probability <= eps."""
    if rho <= 1.0:
        raise ValueError("no finite horizon certificate exists for rho <= 1")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    lo = max(0.0, -window_a / (SQRT2 * (rho - 1.0))) + 1e-9
    hi = max(lo + 1.0, 1.0)
    while truncation_miss_bound(rho, window_a, hi) > eps:
        hi *= 2.0
        if hi > 1e7:  # pragma: no cover
            raise ArithmeticError("horizon search failed to bracket")
    if truncation_miss_bound(rho, window_a, lo) <= eps:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if truncation_miss_bound(rho, window_a, mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


def _draw_branches(n_reps: int, horizon_T: float, rng):
    """Branch times and spine values for a chunk of realizations.

    Returns flat arrays (rep, sigma, b) sorted by (rep, sigma), plus the
    spine value at the horizon for each realization.
    """
    counts = rng.poisson(2.0 * horizon_T, size=n_reps)
    total = int(counts.sum())
    rep = np.repeat(np.arange(n_reps, dtype=np.int64), counts)
    sigma = rng.uniform(0.0, horizon_T, size=total)
    order = np.lexsort((sigma, rep))
    rep, sigma = rep[order], sigma[order]
    b = np.zeros(total)
    if total:
        # Brownian increments between consecutive branch times of one replica,
        # cumulated per block (blocks restart where the replica id changes)
        block_start = np.concatenate(([True], rep[1:] != rep[:-1]))
        prev = np.concatenate(([0.0], sigma[:-1]))
        dt = np.where(block_start, sigma, sigma - prev)
        db = rng.standard_normal(total) * np.sqrt(np.maximum(dt, 0.0))
        cs = np.cumsum(db)
        first_idx = np.flatnonzero(block_start)
        offsets = np.zeros(first_idx.size)
        offsets[1:] = cs[first_idx[1:] - 1]
        block_ids = np.cumsum(block_start) - 1
        b = cs - offsets[block_ids]
    # spine value at the horizon (one extra independent increment per replica)
    last_sigma = np.zeros(n_reps)
    last_b = np.zeros(n_reps)
    if total:
        last_idx = np.concatenate((np.flatnonzero(block_start)[1:] - 1, [total - 1]))
        last_sigma[rep[last_idx]] = sigma[last_idx]
        last_b[rep[last_idx]] = b[last_idx]
    b_T = last_b + rng.standard_normal(n_reps) * np.sqrt(np.maximum(horizon_T - last_sigma, 0.0))
    return rep, sigma, b, b_T


def sample_spine(rho: float, horizon_T: float, window_a: float, rng,
                 prune_tol: float = 1e-9) -> SpineRealization:
    """One spine realization truncated at horizon_T, atoms kept above window_a."""
    if rho < 1.0:
        raise ValueError("rho must be >= 1")
    if not horizon_T > 0:
        raise ValueError("horizon_T must be positive")
    rep, sigma, b, _ = _draw_branches(1, horizon_T, rng)
    drift = SQRT2 * rho * sigma
    res = collect_atoms_above(
        mu=0.0, horizons=sigma, x0=np.zeros(sigma.size),
        levels=window_a + drift - b, scales=np.ones(sigma.size),
        offsets=b - drift, groups=rep, n_groups=1, rng=rng, prune_tol=prune_tol)
    atoms = np.concatenate(([0.0], res.atoms)) if window_a <= 0.0 else res.atoms
    pm = PointMeasure(atoms)
    return SpineRealization(rho=rho, horizon_T=horizon_T, window_a=window_a,
                            atoms=pm, count_above_zero=pm.count_strictly_above(0.0),
                            pruned_mass=float(res.pruned_mass[0]))


def estimate_C(rho: float, horizon_T: float, n: int, seed: int,
               prune_tol: float = 1e-8, chunk: int = CHUNK) -> EstimatorResult:
    """Monte Carlo estimate of the large-deviation prefactor c(rho).

    estimate = P(no strictly positive atom) / sqrt(4 pi); the void check
    early-exits a realization as soon as any branch emits a positive atom.
    """
    if rho < 1.0:
        raise ValueError("rho must be >= 1")
    if n < 1:
        raise ValueError("need n >= 1")
    void_total = 0
    pruned_total = 0.0
    done = 0
    j = 0
    while done < n:
        m = min(chunk, n - done)
        rng = substream(seed, j)
        rep, sigma, b, _ = _draw_branches(m, horizon_T, rng)
        drift = SQRT2 * rho * sigma
        res = collect_atoms_above(
            mu=0.0, horizons=sigma, x0=np.zeros(sigma.size),
            levels=drift - b, scales=np.ones(sigma.size),
            offsets=b - drift, groups=rep, n_groups=m, rng=rng,
            prune_tol=prune_tol, stop_level=0.0)
        nonvoid = res.stopped.copy()
        # atoms emitted exactly at 0 do not break voidness
        pos = res.atoms > 0.0
        np.logical_or.at(nonvoid, res.group[pos], True)
        void_total += int(m - np.count_nonzero(nonvoid))
        pruned_total += float(res.pruned_mass.sum())
        done += m
        j += 1
    p = void_total / n
    se = math.sqrt(max(p * (1.0 - p), 1e-300) / n)
    warning = "rho_at_one" if rho <= 1.0 + 1e-12 else None
    return EstimatorResult(estimate=p * INV_SQRT_4PI, stderr=se * INV_SQRT_4PI,
                           n_samples=n, n_accepted=void_total, warning=warning,
                           pruned_mass=pruned_total / n)


def estimate_C_curve(rho_grid, horizon_T: float, n: int, seed: int,
                     prune_tol: float = 1e-8, chunk: int = CHUNK):
    """Coupled estimates over an ascending rho grid (common random numbers).

    Each realization is summarized by its critical speed
    rho* = max_k (B_k + M_k) / (sqrt(2) sigma_k); the void indicator at rho
    is exactly {rho >= rho*}, so the coupled curve is monotone by
    construction.  Returns one EstimatorResult per grid point, with the
    empirical right derivative at 1 attached to the first result's extras.
    """
    grid = np.asarray(rho_grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) < 0):
        raise ValueError("rho_grid must be ascending and non-empty")
    if np.any(grid < 1.0):
        raise ValueError("rho must be >= 1")
    rho_min = float(grid[0])
    void_counts = np.zeros(grid.size, dtype=np.int64)
    pruned_total = 0.0
    rho_star_all = []
    done = 0
    j = 0
    while done < n:
        m = min(chunk, n - done)
        rng = substream(seed, j)
        rep, sigma, b, _ = _draw_branches(m, horizon_T, rng)
        sig = np.maximum(sigma, 1e-300)
        res = collect_atoms_above(
            mu=0.0, horizons=sigma, x0=np.zeros(sigma.size),
            levels=SQRT2 * rho_min * sig - b,
            scales=1.0 / (SQRT2 * sig), offsets=b / (SQRT2 * sig),
            groups=rep, n_groups=m, rng=rng, prune_tol=prune_tol)
        rho_star = np.full(m, -np.inf)
        if res.group.size:
            np.maximum.at(rho_star, res.group, res.atoms)
        void_counts += (grid[None, :] >= rho_star[:, None]).sum(axis=0)
        rho_star_all.append(rho_star)
        pruned_total += float(res.pruned_mass.sum())
        done += m
        j += 1
    rho_star_all = np.concatenate(rho_star_all)
    results = []
    slope = _right_derivative_at_one(grid, void_counts / n)
    for i, rho in enumerate(grid):
        p = void_counts[i] / n
        se = math.sqrt(max(p * (1.0 - p), 1e-300) / n)
        warning = "rho_at_one" if rho <= 1.0 + 1e-12 else None
        extra = {"coupled": True}
        if i == 0:
            extra["right_derivative_at_one"] = slope
        results.append(EstimatorResult(
            estimate=p * INV_SQRT_4PI, stderr=se * INV_SQRT_4PI, n_samples=n,
            n_accepted=int(void_counts[i]), warning=warning,
            pruned_mass=pruned_total / n, extra=extra))
    return results


def _right_derivative_at_one(grid, void_fracs):
    """Finite-difference slope of c at rho = 1+ from the two lowest grid points."""
    if grid.size < 2:
        return math.nan
    c = void_fracs * INV_SQRT_4PI
    return float((c[1] - c[0]) / (grid[1] - grid[0])) if grid[0] > 1.0 else \
        float(c[1] / (grid[1] - 1.0))


def sample_decoration(rho: float, horizon_T: float, window_a: float,
                      max_attempts: int, rng, prune_tol: float = 1e-9) -> PointMeasure:
    """Rejection sample of the decoration law: spine conditioned on voidness.

    Returns atoms in [window_a, 0] with the atom at 0 included; raises after
    max_attempts rejections, reporting the running acceptance estimate.
    """
    if rho <= 1.0:
        raise ValueError("the decoration sampler needs rho > 1")
    if window_a > 0.0:
        raise ValueError("window_a must be <= 0 (decorations live on (-inf, 0])")
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    for attempt in range(1, max_attempts + 1):
        rep, sigma, b, _ = _draw_branches(1, horizon_T, rng)
        drift = SQRT2 * rho * sigma
        res = collect_atoms_above(
            mu=0.0, horizons=sigma, x0=np.zeros(sigma.size),
            levels=window_a + drift - b, scales=np.ones(sigma.size),
            offsets=b - drift, groups=rep, n_groups=1, rng=rng,
            prune_tol=prune_tol, stop_level=0.0)
        if res.stopped[0] or np.any(res.atoms > 0.0):
            continue
        return PointMeasure(np.concatenate(([0.0], res.atoms)))
    raise RejectionBudgetError(
        f"no void realization in {max_attempts} attempts at rho={rho} "
        f"(acceptance estimate < {1.0 / max_attempts:.2e})",
        acceptance_estimate=0.0)


def sample_limit_process(gamma: float, window_a: float, rng,
                         c_value: Optional[float] = None,
                         proxy_horizon: float = 12.0,
                         max_attempts: int = 10_000,
                         prune_tol: float = 1e-9,
                         decoration_horizon: Optional[float] = None) -> LimitProcessSample:
    """Draw the limiting decorated Poisson point process above window_a.

    gamma = inf is exact: the mixing weight is a unit exponential, the
    intensity constant is 1/sqrt(4 pi), and decorations are single atoms.
    Finite gamma uses the additive martingale at `proxy_horizon` as the
    mixing-weight proxy (documented bias source) and dilated decoration
    draws; the window restriction is exact because decorations only move
    atoms down.
    """
    if not gamma > 0:
        raise ValueError("gamma must lie in (0, inf]")
    if math.isinf(gamma):
        w = float(rng.exponential())
        c = INV_SQRT_4PI
        d_gamma = math.inf
    else:
        gc = gamma_constants(gamma)
        d_gamma = gc.d_gamma
        forest = simulate_forest(0.0, proxy_horizon, 1, rng)
        w = float(additive_martingale_per_rep(forest, SQRT2 * gc.c_gamma)[0])
        if c_value is None:
            t_dec = truncation_horizon(d_gamma, 0.0, 1e-2)
            c = estimate_C(d_gamma, t_dec, 2000, spawn_seed(rng)).estimate
        else:
            c = float(c_value)
    mass = c * w * math.exp(-SQRT2 * window_a)
    count = int(rng.poisson(mass))
    poisson_atoms = window_a + rng.exponential(size=count) / SQRT2
    if math.isinf(gamma):
        atoms = poisson_atoms
    else:
        pieces = []
        for xi in poisson_atoms:
            dec_window = min(0.0, (window_a - xi) / d_gamma)
            t_dec = decoration_horizon if decoration_horizon is not None \
                else truncation_horizon(d_gamma, dec_window, 1e-2)
            dec = sample_decoration(d_gamma, t_dec, dec_window, max_attempts, rng,
                                    prune_tol=prune_tol)
            shifted = xi + d_gamma * dec.atoms
            pieces.append(shifted[shifted >= window_a])
        atoms = np.concatenate(pieces) if pieces else np.zeros(0)
    return LimitProcessSample(gamma=gamma, window_a=window_a,
                              atoms=PointMeasure(atoms), intensity_mass=mass)
