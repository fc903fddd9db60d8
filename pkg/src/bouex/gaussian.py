"""Exact Gaussian/Ornstein-Uhlenbeck transition laws and analytic tail bounds.

This is the shared numerical core: every simulation module builds on the
closed-form OU transition N(x e^{-mu s}, (1-e^{-2 mu s})/(2 mu)), the
variance-t normalization, the pairwise covariance induced by a shared
ancestry time, and the classical one- and two-dimensional Gaussian tail
bounds.  All formulas with a 2*mu (or 2*gamma) denominator are evaluated
through expm1, which is cancellation-free down to mu = 0+; mu = 0 itself
takes the exact Brownian branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQRT2 = math.sqrt(2.0)
INV_SQRT_4PI = 1.0 / math.sqrt(4.0 * math.pi)


@dataclass(frozen=True)
class SpringParams:
    """Spring constant and simulation horizon of one branching-diffusion run."""

    mu: float
    horizon_t: float

    def __post_init__(self):
        if not self.horizon_t > 0:
            raise ValueError(f"horizon_t must be positive, got {self.horizon_t}")
        if self.mu < 0:
            raise ValueError("negative spring constant is out of scope")


@dataclass(frozen=True)
class GammaConstants:
    """Start/end slope constants of the limiting variance profile.

    For gamma = inf, d_gamma is stored as the float 'inf' sentinel; any
    downstream dilation by d_gamma must branch on it explicitly.
    """

    gamma: float
    c_gamma: float
    d_gamma: float


@dataclass(frozen=True)
class TailBoundPair:
    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper):
            raise ValueError("need 0 <= lower <= upper")


def ou_variance(mu, s):
    """Variance of the OU transition over duration s (array-friendly)."""
    mu_arr = np.asarray(mu, dtype=float)
    s_arr = np.asarray(s, dtype=float)
    out = np.where(mu_arr > 0,
                   -np.expm1(-2.0 * mu_arr * np.maximum(s_arr, 0.0))
                   / np.where(mu_arr > 0, 2.0 * mu_arr, 1.0),
                   s_arr)
    if np.ndim(mu) == 0 and np.ndim(s) == 0:
        return float(out)
    return out


def ou_transition(x, mu, s):
    """Mean and variance of the transition started at x over duration s.

    Returns (x e^{-mu s}, (1-e^{-2 mu s})/(2 mu)); the mu = 0 limit is
    (x, s) taken analytically, never by division.
    """
    if np.any(np.asarray(s) < 0):
        raise ValueError("duration must be non-negative")
    if np.any(np.asarray(mu) < 0):
        raise ValueError("spring constant must be non-negative")
    mean = np.asarray(x, dtype=float) * np.exp(-np.asarray(mu, float) * np.asarray(s, float))
    var = ou_variance(mu, s)
    if np.ndim(x) == 0 and np.ndim(mu) == 0 and np.ndim(s) == 0:
        return float(mean), float(var)
    return mean, var


def sample_ou_step(x, mu, s, rng):
    """One exact draw of the transition; deterministic given the rng state."""
    mean, var = ou_transition(x, mu, s)
    return mean + np.sqrt(var) * rng.standard_normal(np.shape(mean) or None)


def normalization_factor(mu: float, t: float) -> float:
    """Dilation lambda_{mu t} making the time-t position have variance t."""
    if not t > 0:
        raise ValueError("t must be positive")
    if mu < 0:
        raise ValueError("spring constant must be non-negative")
    if mu == 0.0:
        return 1.0
    return math.sqrt(2.0 * mu * t / -math.expm1(-2.0 * mu * t))


def pair_covariance(mu: float, t: float, tau) -> float:
    """Covariance of two normalized positions that split at time tau.

    Equals t (e^{2 mu tau}-1)/(e^{2 mu t}-1), evaluated in the overflow-free
    form t e^{-2 mu (t-tau)} (1-e^{-2 mu tau})/(1-e^{-2 mu t}); the mu = 0
    limit is tau.
    """
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0) or np.any(tau_arr > t * (1 + 1e-12)):
        raise ValueError("split time must lie in [0, t]")
    if mu < 0:
        raise ValueError("spring constant must be non-negative")
    if mu == 0.0:
        out = tau_arr
    else:
        out = (t * np.exp(-2.0 * mu * (t - tau_arr))
               * np.expm1(-2.0 * mu * tau_arr) / np.expm1(-2.0 * mu * t))
    return float(out) if np.ndim(tau) == 0 else out


def gamma_constants(gamma: float) -> GammaConstants:
    """Slope constants c_gamma = sqrt(2g/(e^{2g}-1)), d_gamma = sqrt(2g/(1-e^{-2g}))."""
    if not gamma > 0:
        raise ValueError("gamma must lie in (0, inf]")
    if math.isinf(gamma):
        return GammaConstants(gamma=math.inf, c_gamma=0.0, d_gamma=math.inf)
    two_g = 2.0 * gamma
    c = math.sqrt(two_g / math.expm1(two_g)) if two_g < 700 else 0.0
    d = math.sqrt(two_g / -math.expm1(-two_g))
    return GammaConstants(gamma=gamma, c_gamma=c, d_gamma=d)


def gaussian_tail_bounds(x: float) -> TailBoundPair:
    """Classical standard-normal tail sandwich at level x > 0."""
    if not x > 0:
        raise ValueError("x must be positive")
    upper = math.exp(-0.5 * x * x) / (x * math.sqrt(2.0 * math.pi))
    lower = max(0.0, (1.0 - 1.0 / (x * x)) * upper)
    return TailBoundPair(lower=lower, upper=min(upper, 1.0))


def bivariate_tail_bound(x: float, alpha: float) -> float:
    """Upper bound on P(X1 >= x, X2 >= x) for unit-variance correlation-alpha pairs."""
    if not x > 0:
        raise ValueError("x must be positive")
    if alpha >= 1.0 or alpha < -1.0:
        raise ValueError("correlation must lie in [-1, 1)")
    if alpha == -1.0:
        return 0.0
    one_plus = 1.0 + alpha
    return (one_plus * one_plus * math.exp(-x * x / one_plus)
            / (2.0 * math.pi * x * x * math.sqrt(1.0 - alpha * alpha)))


def ou_bridge_moments(x_a, x_b, mu, d_as, d_sb):
    """Conditional mean/variance at an interior time of an OU path.

    The path starts at x_a, is pinned to x_b after total duration
    d_as + d_sb, and is queried after d_as.
    """
    m_s = np.asarray(x_a, float) * np.exp(-mu * d_as)
    v_s = ou_variance(mu, d_as)
    m_b = np.asarray(x_a, float) * np.exp(-mu * (d_as + d_sb))
    v_b = ou_variance(mu, d_as + d_sb)
    cov = np.exp(-mu * d_sb) * v_s
    with np.errstate(invalid="ignore", divide="ignore"):
        gain = np.where(v_b > 0, cov / np.where(v_b > 0, v_b, 1.0), 0.0)
    mean = m_s + gain * (np.asarray(x_b, float) - m_b)
    var = np.maximum(v_s - gain * cov, 0.0)
    return mean, var


def sample_ou_bridge(x_a, x_b, mu, d_as, d_sb, rng):
    mean, var = ou_bridge_moments(x_a, x_b, mu, d_as, d_sb)
    return mean + np.sqrt(var) * rng.standard_normal(np.shape(mean) or None)
