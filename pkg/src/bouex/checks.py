"""Statistical acceptance harness: limit laws and exact identities as
pass/fail checks with explicit error budgets.

Every check is deterministic given (seed, config), parallelizes over
replica chunks internally, and returns a machine-readable CheckReport.
Finite-horizon allowances (0.2 first-moment band, 0.05 KS and Laplace
levels, the +-0.5 slope window) are calibrations of this artifact, not
limit-theorem constants; the reports carry the trend data that justifies
them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

import numpy as np
from scipy import integrate, stats
from scipy.special import expit, ndtri

from .cloud import simulate_forest
from .gaussian import SQRT2, normalization_factor, ou_variance, pair_covariance
from .measure import Centering, PointMeasure
from .rng import substream
from .window import windowed_extremal_atoms, collect_atoms_above
from .spine import _draw_branches

CHUNK = 2048


# ---------------------------------------------------------------------------
# test functions


@dataclass(frozen=True)
class TestFunction:
    """Non-negative test function with support bounded from the left.

    kinds: smooth_step(y, eps, height) rises C1-smoothly from 0 at y to a
    plateau at y+eps; exponential_window(beta, a) is e^{beta (x-a)} on
    [a, inf); indicator(a) is 1 on [a, inf) (a = -inf gives the constant 1).
    """

    kind: str
    y: float = 0.0
    eps: float = 1.0
    height: float = 1.0
    beta: float = 1.0
    a: float = 0.0

    def __post_init__(self):
        if self.kind not in ("smooth_step", "exponential_window", "indicator"):
            raise ValueError(f"unknown test-function kind {self.kind!r}")
        if self.kind == "smooth_step" and not (self.eps > 0 and self.height > 0):
            raise ValueError("smooth_step needs eps > 0, height > 0")

    @property
    def support_left(self) -> float:
        return self.y if self.kind == "smooth_step" else self.a

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "smooth_step":
            u = np.clip((x - self.y) / self.eps, 0.0, 1.0)
            out = self.height * u * u * (3.0 - 2.0 * u)
        elif self.kind == "exponential_window":
            # exponent clip keeps quadrature finite far in the tail
            out = np.where(x >= self.a,
                           np.exp(np.minimum(self.beta * (x - self.a), 700.0)), 0.0)
        else:
            out = (x >= self.a).astype(float)
        return out

    def label(self) -> str:
        if self.kind == "smooth_step":
            return f"smooth_step({self.y},{self.eps},h={self.height})"
        if self.kind == "exponential_window":
            return f"exp_window(b={self.beta},a={self.a})"
        return f"indicator({self.a})"


def smooth_step(y, eps, height=1.0):
    return TestFunction(kind="smooth_step", y=y, eps=eps, height=height)


def exponential_window(beta, a):
    return TestFunction(kind="exponential_window", beta=beta, a=a)


def indicator(a):
    return TestFunction(kind="indicator", a=a)


def laplace_functional(measure: PointMeasure, phi) -> float:
    """exp(-sum phi(atom)); finite because atoms above any level are finite."""
    if not len(measure):
        return 1.0
    return float(np.exp(-np.sum(phi(measure.atoms))))


# ---------------------------------------------------------------------------
# reports


@dataclass
class CheckReport:
    name: str
    statistic: float
    threshold: float
    n: int
    passed: bool
    inconclusive: bool = False
    details: dict = field(default_factory=dict)

    @classmethod
    def make(cls, name, statistic, threshold, n, inconclusive=False, **details):
        return cls(name=name, statistic=float(statistic), threshold=float(threshold),
                   n=int(n), passed=bool(statistic <= threshold),
                   inconclusive=inconclusive, details=details)

    @property
    def failed(self) -> bool:
        return not self.passed and not self.inconclusive

    def to_dict(self) -> dict:
        return asdict(self)


def reports_to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, default=float)


# ---------------------------------------------------------------------------
# oracle-side expectations


def gaussian_expectation(f: Callable, var: float, lo: Optional[float] = None) -> float:
    """E[f(X)] for X ~ N(0, var), by adaptive quadrature."""
    sd = math.sqrt(var)
    a = -np.inf if lo is None else lo
    val, _ = integrate.quad(lambda x: f(x) * stats.norm.pdf(x, scale=sd), a, np.inf,
                            limit=200)
    return val


def _bvn_upper(b1: float, b2: float, v: float, c: float) -> float:
    """P(X1 >= b1, X2 >= b2) for a centred bivariate normal."""
    sd = math.sqrt(v)
    if b1 == -np.inf and b2 == -np.inf:
        return 1.0
    if b1 == -np.inf:
        return float(stats.norm.sf(b2, scale=sd))
    if b2 == -np.inf:
        return float(stats.norm.sf(b1, scale=sd))
    cov = np.array([[v, c], [c, v]])
    return float(stats.multivariate_normal(mean=[0.0, 0.0], cov=cov,
                                           allow_singular=True).cdf([-b1, -b2]))


def pair_expectation(f: TestFunction, v: float, c: float) -> float:
    """E[f(X1) f(X2)] for a centred bivariate normal with variance v, covariance c."""
    if f.kind == "indicator":
        return _bvn_upper(f.a, f.a, v, c)
    if f.kind == "exponential_window":
        b, a = f.beta, f.a
        # exponential tilting: E[e^{b(X1+X2)} 1{X1>=a, X2>=a}]
        shift = b * (v + c)
        log_pref = b * b * (v + c) - 2.0 * b * a
        return math.exp(log_pref) * _bvn_upper(a - shift, a - shift, v, c)
    # smooth_step: 2-d quadrature through a Cholesky transform
    sd = math.sqrt(v)
    rho = min(max(c / v, -1.0), 1.0)
    a21 = sd * rho
    a22 = sd * math.sqrt(max(1.0 - rho * rho, 0.0))

    def inner(z1):
        x1 = sd * z1
        f1 = float(f(x1))
        if f1 == 0.0:
            return 0.0
        lo = (f.support_left - a21 * z1) / a22 if a22 > 0 else -np.inf
        val, _ = integrate.quad(lambda z2: float(f(a21 * z1 + a22 * z2))
                                * stats.norm.pdf(z2), lo, np.inf, limit=100)
        return f1 * val * stats.norm.pdf(z1)

    lo1 = f.support_left / sd
    val, _ = integrate.quad(inner, lo1, np.inf, limit=100)
    return val


def iid_limit_functional(phi: TestFunction) -> float:
    """Closed-form limiting Laplace functional of the uncorrelated case."""
    y0 = phi.support_left
    val, _ = integrate.quad(
        lambda y: (1.0 - math.exp(-float(phi(y)))) * math.exp(-SQRT2 * y),
        y0, np.inf, limit=200)
    return 1.0 / (1.0 + val / math.sqrt(2.0 * math.pi))


def iid_finite_t_functional(phi: TestFunction, t: float) -> float:
    """Exact finite-horizon Laplace functional of the uncorrelated case."""
    m_t = Centering("bou_onehalf", t).value
    sd = math.sqrt(t)
    q, _ = integrate.quad(
        lambda x: (1.0 - math.exp(-float(phi(x - m_t)))) * stats.norm.pdf(x, scale=sd),
        m_t + phi.support_left, np.inf, limit=200)
    return (1.0 - q) / (math.exp(t) * q + 1.0 - q)


# ---------------------------------------------------------------------------
# checks


def _chunked(n, chunk=CHUNK):
    done = 0
    j = 0
    while done < n:
        m = min(chunk, n - done)
        yield j, m
        done += m
        j += 1


def check_max_limit_law(mu: float, t: float, n: int, seed: int,
                        threshold: float = 0.05, window: float = -8.0,
                        name: str = "max_limit_law") -> CheckReport:
    """KS distance of the centred maximum against (1 + e^{-sqrt2 z})^{-1}."""
    maxima = np.empty(n)
    centering = Centering("bou_tilde", t)
    pos = 0
    missing = 0
    for j, m in _chunked(n):
        rng = substream(seed, j)
        res = windowed_extremal_atoms(mu, t, centering, window, m, rng, prune_tol=1e-9)
        mx = np.full(m, -np.inf)
        if res.group.size:
            np.maximum.at(mx, res.group, res.atoms)
        missing += int(np.count_nonzero(~np.isfinite(mx)))
        maxima[pos:pos + m] = mx
        pos += m

    def cdf(z):
        return expit(SQRT2 * np.asarray(z, dtype=float))

    ks = stats.kstest(maxima, cdf).statistic
    return CheckReport.make(name, ks, threshold, n,
                            median=float(np.median(maxima)),
                            below_window=missing, t=t, mu=mu)


def check_slepian_monotonicity(mu_list, phi: TestFunction, t: float, n: int,
                               seed: int, threshold: float = 3.0,
                               name: str = "slepian_monotonicity") -> CheckReport:
    """Laplace functionals must not increase with the spring constant.

    Common Yule trees (and shared edge innovations) couple the spring
    constants; passes when no adjacent pair increases by more than
    `threshold` paired standard errors.
    """
    mus = list(mu_list)
    if sorted(mus) != mus:
        raise ValueError("mu_list must be ascending")
    k = len(mus)
    m_t = Centering("bou_onehalf", t).value
    lams = [1.0 if math.isinf(mu) else normalization_factor(mu, t) for mu in mus]
    sums = np.zeros(k)
    dsum = np.zeros(max(k - 1, 0))
    dsq = np.zeros(max(k - 1, 0))
    base_mu = next((mu for mu in mus if not math.isinf(mu)), 0.0)
    for j, m in _chunked(n, chunk=256):
        rng = substream(seed, j)
        forest = simulate_forest(base_mu, t, m, rng)
        rep = forest.rep[forest.is_leaf]
        vals = np.empty((m, k))
        for i, mu in enumerate(mus):
            leaves = forest.x_end[forest.is_leaf] if mu == base_mu \
                else forest.positions_for(mu)
            atoms = lams[i] * leaves - m_t
            tot = np.bincount(rep, weights=phi(atoms), minlength=m)
            vals[:, i] = np.exp(-tot)
        sums += vals.sum(axis=0)
        d = np.diff(vals, axis=1)
        dsum += d.sum(axis=0)
        dsq += (d * d).sum(axis=0)
    means = sums / n
    stat = -np.inf
    zs = []
    for i in range(k - 1):
        md = dsum[i] / n
        var = max(dsq[i] / n - md * md, 0.0) * n / max(n - 1, 1)
        se = math.sqrt(var / n) + 1e-15
        zs.append(md / se)
        stat = max(stat, md / se)
    if k < 2:
        return CheckReport.make(name, 0.0, threshold, n, note="single point")
    return CheckReport.make(name, stat, threshold, n,
                            mus=[float(mu) for mu in mus],
                            laplace=[float(v) for v in means],
                            pair_z=[float(z) for z in zs], phi=phi.label(), t=t)


def check_many_to_one(mu: float, t: float, f, n: int, seed: int,
                      threshold: float = 4.0,
                      name: str = "many_to_one") -> CheckReport:
    """Replica mean of sum_u f(X_t(u)) against e^t E[f(X_t)] by quadrature."""
    v = ou_variance(mu, t)
    lo = getattr(f, "support_left", None)
    target = math.exp(t) * gaussian_expectation(f, v, lo)
    total = 0.0
    totsq = 0.0
    for j, m in _chunked(n, chunk=512):
        rng = substream(seed, j)
        forest = simulate_forest(mu, t, m, rng)
        rep, x = forest.leaf_positions()
        s = np.bincount(rep, weights=f(x), minlength=m)
        total += s.sum()
        totsq += (s * s).sum()
    mean = total / n
    var = max(totsq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    se = math.sqrt(var / n) + 1e-15
    stat = abs(mean - target) / se
    return CheckReport.make(name, stat, threshold, n, mean=mean, target=target,
                            stderr=se, mu=mu, t=t,
                            f=getattr(f, "label", lambda: repr(f))())


def check_many_to_two(mu: float, t: float, f: TestFunction, n: int, seed: int,
                      threshold: float = 4.0,
                      name: str = "many_to_two") -> CheckReport:
    """Replica mean of (sum_u f)^2 against the two-diffusion moment formula."""
    v = ou_variance(mu, t)
    single = math.exp(t) * gaussian_expectation(f, v, f.support_left)

    def integrand(s):
        c = math.exp(-2.0 * mu * (t - s)) * ou_variance(mu, s)
        return math.exp(2.0 * t - s) * pair_expectation(f, v, c)

    pair_term, _ = integrate.quad(integrand, 0.0, t, limit=100)
    # square the test function analytically where naive squaring overflows
    f_sq = exponential_window(2.0 * f.beta, f.a) if f.kind == "exponential_window" \
        else (lambda x: f(x) ** 2)
    target = math.exp(t) * gaussian_expectation(f_sq, v, f.support_left) \
        + 2.0 * pair_term
    total = 0.0
    totsq = 0.0
    for j, m in _chunked(n, chunk=512):
        rng = substream(seed, j)
        forest = simulate_forest(mu, t, m, rng)
        rep, x = forest.leaf_positions()
        s = np.bincount(rep, weights=f(x), minlength=m)
        total += (s * s).sum()
        totsq += (s ** 4).sum()
    mean = total / n
    var = max(totsq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    se = math.sqrt(var / n) + 1e-15
    stat = abs(mean - target) / se
    return CheckReport.make(name, stat, threshold, n, mean=mean, target=target,
                            stderr=se, mu=mu, t=t, f=f.label())


_SPINE_WINDOW = -2.0


def _functional_values(group, atoms, n_groups, battery):
    """Battery values per replica from flat (group, atom) arrays.

    Battery entries: ("one",), ("void", lo, hi), ("laplace", phi).
    """
    out = np.empty((n_groups, len(battery)))
    for idx, spec in enumerate(battery):
        if spec[0] == "one":
            out[:, idx] = 1.0
        elif spec[0] == "void":
            lo, hi = spec[1], spec[2]
            inside = (atoms > lo) & (atoms < hi)
            counts = np.bincount(group[inside], minlength=n_groups)
            out[:, idx] = counts == 0
        else:
            phi = spec[1]
            tot = np.bincount(group, weights=phi(atoms), minlength=n_groups)
            out[:, idx] = np.exp(-tot)
    return out


def default_spine_battery():
    return [("one",),
            ("void", -1.0, 0.0),
            ("laplace", smooth_step(-0.5, 0.5)),
            ("laplace", exponential_window(1.0, -1.5))]


def spine_identity_sides(rho: float, t: float, n: int, seed: int,
                         battery=None, drift_sign: float = -1.0):
    """Monte Carlo estimates of both sides of the tip-decomposition identity.

    Left: direct clouds, E[F(atoms - max) 1{max >= sqrt2 rho t}].  Right:
    importance-weighted spine, e^{(1-rho^2) t} E[e^{sqrt2 rho B_t} 1{B_t<=0}
    F(truncated spine measure) 1{no positive atom}].  `drift_sign` flips the
    spine drift for mutation testing; -1 is the real construction.
    """
    battery = battery or default_spine_battery()
    nf = len(battery)
    lsum = np.zeros(nf)
    lsq = np.zeros(nf)
    rsum = np.zeros(nf)
    rsq = np.zeros(nf)
    thresh = SQRT2 * rho * t
    for j, m in _chunked(n, chunk=4096):
        rng = substream(seed, 2 * j)
        forest = simulate_forest(0.0, t, m, rng)
        rep, x = forest.leaf_positions()
        mx = np.full(m, -np.inf)
        np.maximum.at(mx, rep, x)
        centred = x - mx[rep]
        keep = centred >= _SPINE_WINDOW
        vals = _functional_values(rep[keep], centred[keep], m, battery)
        vals *= (mx >= thresh)[:, None]
        lsum += vals.sum(axis=0)
        lsq += (vals * vals).sum(axis=0)

        rng = substream(seed, 2 * j + 1)
        srep, sigma, b, b_T = _draw_branches(m, t, rng)
        drift = -drift_sign * SQRT2 * rho * sigma
        res = collect_atoms_above(
            mu=0.0, horizons=sigma, x0=np.zeros(sigma.size),
            levels=_SPINE_WINDOW + drift - b, scales=np.ones(sigma.size),
            offsets=b - drift, groups=srep, n_groups=m, rng=rng, prune_tol=1e-10)
        pos = np.bincount(res.group[res.atoms > 0.0], minlength=m)
        void = pos == 0
        weight = np.where(b_T <= 0.0, np.exp(SQRT2 * rho * b_T), 0.0)
        # the spine's own atom at 0 enters every functional
        g = np.concatenate((res.group, np.arange(m, dtype=np.int64)))
        a = np.concatenate((res.atoms, np.zeros(m)))
        vals = _functional_values(g, a, m, battery)
        vals *= (weight * void * math.exp((1.0 - rho * rho) * t))[:, None]
        rsum += vals.sum(axis=0)
        rsq += (vals * vals).sum(axis=0)
    res = []
    for i in range(nf):
        lm, rm = lsum[i] / n, rsum[i] / n
        lv = max(lsq[i] / n - lm * lm, 0.0) / n
        rv = max(rsq[i] / n - rm * rm, 0.0) / n
        res.append((lm, rm, math.sqrt(lv), math.sqrt(rv)))
    return res


def check_spine_identity(rho: float, t: float, n: int, seed: int,
                         threshold: float = 4.0, battery=None,
                         drift_sign: float = -1.0,
                         name: str = "spine_identity") -> CheckReport:
    sides = spine_identity_sides(rho, t, n, seed, battery=battery,
                                 drift_sign=drift_sign)
    stat = -np.inf
    rows = []
    for lm, rm, ls, rs in sides:
        z = abs(lm - rm) / math.sqrt(ls * ls + rs * rs + 1e-300)
        rows.append({"left": lm, "right": rm, "se_left": ls, "se_right": rs, "z": z})
        stat = max(stat, z)
    return CheckReport.make(name, stat, threshold, n, rho=rho, t=t, rows=rows)


def _counts_above(mu, t, z_grid, n, seed, prune_tol=1e-7):
    """Per-replica counts of tilde-centred atoms at each grid level."""
    z_grid = np.asarray(z_grid, dtype=float)
    window = float(z_grid.min())
    centering = Centering("bou_tilde", t)
    counts = np.zeros((n, z_grid.size), dtype=np.int64)
    pos = 0
    for j, m in _chunked(n):
        rng = substream(seed, j)
        res = windowed_extremal_atoms(mu, t, centering, window, m, rng,
                                      prune_tol=prune_tol)
        for i, z in enumerate(z_grid):
            sel = res.atoms >= z
            counts[pos:pos + m, i] = np.bincount(res.group[sel], minlength=m)
        pos += m
    return counts


def check_first_moment(mu: float, t: float, z_grid, n: int, seed: int,
                       allowance: float = 0.2,
                       name: str = "first_moment") -> CheckReport:
    """max_z |e^{sqrt2 z} mean count(z) - 1| <= allowance, MC error folded in."""
    z_grid = np.asarray(z_grid, dtype=float)
    if np.any(np.abs(z_grid) > t ** 0.49):
        raise ValueError("levels must satisfy |z| <= t^0.49")
    counts = _counts_above(mu, t, z_grid, n, seed)
    mean = counts.mean(axis=0)
    se = counts.std(axis=0, ddof=1) / math.sqrt(n)
    scale = np.exp(SQRT2 * z_grid)
    dev = np.maximum(np.abs(scale * mean - 1.0) - 3.0 * scale * se, 0.0)
    stat = float(dev.max())
    return CheckReport.make(name, stat, allowance, n, z=z_grid.tolist(),
                            normalized_mean=(scale * mean).tolist(),
                            stderr=(scale * se).tolist(), mu=mu, t=t)


def check_second_moment_gap(mu: float, t: float, z_grid, n: int, seed: int,
                            slope_tol: float = 0.5,
                            name: str = "second_moment_gap") -> CheckReport:
    """log E[Z(Z-1)] must fall with slope -2 sqrt2 (+- slope_tol) in z."""
    z_grid = np.asarray(z_grid, dtype=float)
    counts = _counts_above(mu, t, z_grid, n, seed)
    gaps = (counts * (counts - 1)).mean(axis=0)
    positive = gaps > 0
    if np.count_nonzero(positive) < 3:
        return CheckReport.make(name, math.inf, slope_tol, n, inconclusive=True,
                                gaps=gaps.tolist(), z=z_grid.tolist(),
                                note="too few positive gap estimates")
    zs = z_grid[positive]
    slope, intercept = np.polyfit(zs, np.log(gaps[positive]), 1)
    stat = abs(slope + 2.0 * SQRT2)
    return CheckReport.make(name, stat, slope_tol, n, slope=float(slope),
                            gaps=gaps.tolist(), z=z_grid.tolist(), mu=mu, t=t)


def default_iid_battery():
    return [smooth_step(0.0, 1.0, height=20.0), smooth_step(0.0, 1.0, height=1.0),
            exponential_window(1.0, 0.0), indicator(0.5)]


def simulate_iid_laplace(phi: TestFunction, t: float, n: int, seed: int):
    """Mean/se of the uncorrelated-case Laplace functional at horizon t.

    Exact law: geometric leaf count, binomial thinning to the region where
    phi is positive, inverse-CDF Gaussian tail positions.
    """
    m_t = Centering("bou_onehalf", t).value
    sd = math.sqrt(t)
    cut = m_t + phi.support_left
    p_tail = float(stats.norm.sf(cut, scale=sd))
    p_leaf = math.exp(-t)
    total = 0.0
    totsq = 0.0
    for j, m in _chunked(n, chunk=65536):
        rng = substream(seed, j)
        counts = rng.geometric(p_leaf, size=m)
        k = rng.binomial(counts, p_tail)
        vals = np.ones(m)
        idx = np.flatnonzero(k)
        if idx.size:
            tot_atoms = int(k[idx].sum())
            u = rng.uniform(size=tot_atoms)
            x = -sd * ndtri(np.maximum(u * p_tail, 1e-320))
            grp = np.repeat(np.arange(idx.size), k[idx])
            s = np.bincount(grp, weights=phi(x - m_t), minlength=idx.size)
            vals[idx] = np.exp(-s)
        total += vals.sum()
        totsq += (vals * vals).sum()
    mean = total / n
    var = max(totsq / n - mean * mean, 0.0)
    return mean, math.sqrt(var / n)


def check_iid_limit(t: float, n: int, seed: int, tol: float = 0.05,
                    battery=None, name: str = "iid_limit") -> CheckReport:
    """Uncorrelated-case Laplace functionals against the closed-form limit."""
    battery = battery or default_iid_battery()
    rows = []
    stat = -np.inf
    for i, phi in enumerate(battery):
        mean, se = simulate_iid_laplace(phi, t, n, seed + 131 * i)
        limit = iid_limit_functional(phi)
        exact_t = iid_finite_t_functional(phi, t)
        diff = abs(mean - limit)
        rows.append({"phi": phi.label(), "simulated": mean, "stderr": se,
                     "limit": limit, "exact_finite_t": exact_t,
                     "z_vs_exact": abs(mean - exact_t) / (se + 1e-15)})
        stat = max(stat, diff)
    return CheckReport.make(name, stat, tol, n, t=t, rows=rows)


def check_yule_counts(t: float, n: int, seed: int, alpha: float = 0.01,
                      name: str = "yule_geometric_counts") -> CheckReport:
    """Chi-square fit of simulated leaf counts to the geometric law."""
    counts = np.empty(n, dtype=np.int64)
    pos = 0
    for j, m in _chunked(n, chunk=512):
        rng = substream(seed, j)
        forest = simulate_forest(0.0, t, m, rng)
        counts[pos:pos + m] = forest.leaf_counts()
        pos += m
    p = math.exp(-t)
    # geometric bins with expected count >= 5, tail merged
    kmax = 1
    while n * p * (1 - p) ** (kmax - 1) >= 5 and kmax < 10_000_000:
        kmax += 1
    edges = np.arange(1, kmax + 1)
    probs = p * (1 - p) ** (edges - 1)
    obs = np.bincount(np.minimum(counts, kmax), minlength=kmax + 1)[1:]
    obs[-1] = np.count_nonzero(counts >= kmax)
    probs = np.append(probs[:-1], (1 - p) ** (kmax - 1))
    chi2, pvalue = stats.chisquare(obs, f_exp=n * probs)
    stat = -math.log10(max(pvalue, 1e-300))
    return CheckReport.make(name, stat, -math.log10(alpha), n,
                            chi2=float(chi2), pvalue=float(pvalue), t=t,
                            bins=int(kmax))


def check_limit_process_law(n: int, seed: int, z_grid=(-1.0, 0.0, 1.0),
                            threshold: float = 3.0,
                            name: str = "limit_process_void_law") -> CheckReport:
    """gamma = inf limit process: P(no atom >= z) vs the exponential-mixed form."""
    from .spine import sample_limit_process

    z_grid = np.asarray(z_grid, dtype=float)
    window = float(z_grid.min())
    hits = np.zeros(z_grid.size)
    for j, m in _chunked(n, chunk=8192):
        rng = substream(seed, j)
        for _ in range(m):
            s = sample_limit_process(math.inf, window, rng)
            for i, z in enumerate(z_grid):
                hits[i] += s.atoms.count_above(z) == 0
    emp = hits / n
    target = 1.0 / (1.0 + np.exp(-SQRT2 * z_grid) / math.sqrt(4.0 * math.pi))
    se = np.sqrt(np.maximum(emp * (1 - emp), 1e-12) / n)
    zscores = np.abs(emp - target) / se
    return CheckReport.make(name, float(zscores.max()), threshold, n,
                            z=z_grid.tolist(), empirical=emp.tolist(),
                            target=target.tolist())
