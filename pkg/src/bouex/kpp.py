"""Deterministic front oracle: the Fisher-KPP tail equation in log domain.

u(x, t) = P(max displacement at t > x) solves  u_t = u_xx/2 + u - u^2  from a
step initial condition.  The far tail decays like e^{-(rho^2-1)t} along the
ray x = sqrt(2) rho t, so the solver works on w = log u, where the equation
reads  w_t = w_xx/2 + (w_x)^2/2 + 1 - e^w.

The step IC is handled exactly: the first `t_switch` time units are
integrated in u space (where the step is representable), then the field is
transferred to log space.  Grid points whose u value is too small to carry
relative accuracy at the switch are continued with the exact linearized
tail; a saddle-point argument shows they are beyond the reach of every probe
ray, so this does not touch the extracted front values.  A log-ramp IC mode
is kept for sensitivity studies; note that a ramp of slope b inflates the
tail on the ray x = sqrt(2) rho t by roughly 1 + sqrt(2) rho/(b - sqrt(2) rho),
which is why it is not the default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import log_ndtr

from .errors import NumericalFailureError
from .gaussian import SQRT2

_SWITCH_FLOOR = 1e-11


@dataclass(frozen=True)
class KppParams:
    dx: float = 0.05
    dt: Optional[float] = None          # default: stability-limited, see dt_value
    t_max: float = 10.0
    rho_max: float = 2.0
    ic_mode: str = "step"               # "step" | "ramp" | "uniform"
    ic_slope: float = 50.0              # ramp mode regularization slope
    ic_value: float = 0.5               # uniform mode level
    t_switch: float = 0.5               # u-phase length in step mode
    x_lo: float = -8.0
    margin: float = 8.0
    nonlinear: bool = True              # False: solver-verification (pure growth) mode
    checkpoints: tuple = ()

    def __post_init__(self):
        if self.dx <= 0 or self.t_max <= 0 or self.rho_max <= 0:
            raise ValueError("dx, t_max, rho_max must be positive")
        if self.ic_mode not in ("step", "ramp", "uniform"):
            raise ValueError(f"unknown ic_mode {self.ic_mode!r}")
        if self.ic_mode == "uniform" and not 0.0 < self.ic_value < 1.0:
            raise ValueError("uniform IC level must lie in (0, 1)")
        if self.dt is not None and self.dt > self.stability_dt * (1 + 1e-9):
            raise ValueError(
                f"dt={self.dt} exceeds the gradient-CFL stability bound "
                f"{self.stability_dt:.3g} for this domain")

    @property
    def x_hi(self) -> float:
        return SQRT2 * self.rho_max * self.t_max + self.margin

    @property
    def stability_dt(self) -> float:
        # the explicit (w_x)^2 term advects at speed |w_x|, which is at most
        # x_hi / t_switch once log space is entered
        grad = max(self.x_hi / max(self.t_switch, 1e-6), self.ic_slope)
        return 0.5 * self.dx / grad

    @property
    def dt_value(self) -> float:
        return self.dt if self.dt is not None else min(0.25 * self.dx**2,
                                                       self.stability_dt)

    @property
    def checkpoint_times(self) -> tuple:
        if self.checkpoints:
            return tuple(sorted(self.checkpoints))
        lo = max(2.0, math.ceil(self.t_max / 2.0))
        return tuple(float(t) for t in np.arange(lo, self.t_max + 1e-9, 1.0))


@dataclass
class KppField:
    x: np.ndarray
    times: list
    w: list                      # one array per checkpoint time
    params: KppParams
    meta: dict = field(default_factory=dict)

    def w_at(self, t: float) -> np.ndarray:
        for tk, wk in zip(self.times, self.w):
            if math.isclose(tk, t, rel_tol=0, abs_tol=1e-9):
                return wk
        raise ValueError(f"t={t} is not a stored checkpoint (have {self.times})")

    def validate(self, tol: float = 1e-8):
        for tk, wk in zip(self.times, self.w):
            if np.any(wk > tol):
                raise NumericalFailureError(f"w > 0 at checkpoint t={tk}")
            if np.any(np.diff(wk) > tol):
                raise NumericalFailureError(f"w increasing in x at checkpoint t={tk}")


def _banded_matrix(n: int, r: float, right_extrapolation: bool) -> np.ndarray:
    ab = np.zeros((4, n))
    ab[1, :] = 1.0 + 2.0 * r
    ab[0, 1:] = -r
    ab[2, :-1] = -r
    ab[1, 0] = 1.0
    ab[0, 1] = 0.0
    if right_extrapolation:
        ab[1, n - 1] = 1.0
        ab[2, n - 2] = -2.0
        ab[3, n - 3] = 1.0
    else:
        ab[1, n - 1] = 1.0
        ab[2, n - 2] = 0.0
    return ab


def _log_tail(x: np.ndarray, t: float) -> np.ndarray:
    """log of the exact linearized tail e^t P(N(0, t) > x)."""
    return t + log_ndtr(-x / math.sqrt(t))


def solve_kpp(params: KppParams) -> KppField:
    """Advance the field to t_max, storing the requested checkpoints."""
    dx, dt = params.dx, params.dt_value
    n = int(round((params.x_hi - params.x_lo) / dx)) + 1
    x = params.x_lo + dx * np.arange(n)
    r = 0.5 * dt / dx**2
    ab_u = _banded_matrix(n, r, right_extrapolation=False)
    ab_w = _banded_matrix(n, r, right_extrapolation=True)
    nonlin = params.nonlinear

    cps = list(params.checkpoint_times)
    if cps and cps[-1] > params.t_max + 1e-9:
        raise ValueError("checkpoint beyond t_max")
    stored_t, stored_w = [], []

    def left_bc_w(t: float) -> float:
        if params.ic_mode == "uniform":
            u0 = params.ic_value
            return math.log(u0) + t - math.log1p(u0 * math.expm1(t)) if nonlin \
                else math.log(u0) + t
        if not nonlin:
            return float(_log_tail(np.array([params.x_lo]), max(t, 1e-12))[0])
        return 0.0

    t = 0.0
    if params.ic_mode == "step":
        u = np.where(x < 0, 1.0, 0.0)
        i0 = int(np.argmin(np.abs(x)))
        u[i0] = 0.5
        n_u = int(round(params.t_switch / dt))
        for _ in range(n_u):
            rhs = u + dt * (u - (u * u if nonlin else 0.0))
            rhs[0] = math.exp(left_bc_w(t + dt))
            rhs[-1] = 0.0
            u = solve_banded((2, 1), ab_u, rhs)
            t += dt
        w = np.where(u > _SWITCH_FLOOR, np.log(np.maximum(u, 1e-300)), 0.0)
        w_tail = np.minimum(_log_tail(x, t), math.log(_SWITCH_FLOOR))
        w = np.where(u > _SWITCH_FLOOR, w, w_tail)
        w = np.minimum(w, 0.0) if nonlin else w
    elif params.ic_mode == "ramp":
        w = -params.ic_slope * np.maximum(x, 0.0)
    else:
        w = np.full(n, math.log(params.ic_value))

    ci = 0
    while ci < len(cps) and cps[ci] < t - 1e-9:
        ci += 1
    total_steps = int(round((params.t_max - t) / dt))
    check_every = max(1, total_steps // 50)
    wx = np.zeros(n)
    for k in range(total_steps):
        wx[1:-1] = (w[2:] - w[:-2]) / (2.0 * dx)
        rhs = w + dt * (0.5 * wx * wx + 1.0 - (np.exp(np.minimum(w, 50.0)) if nonlin else 0.0))
        rhs[0] = left_bc_w(t + dt)
        rhs[-1] = 0.0
        w = solve_banded((2, 1), ab_w, rhs)
        t += dt
        if k % check_every == 0 or k == total_steps - 1:
            tail = w[int(0.9 * n):]
            if np.any(~np.isfinite(w)) or (nonlin and np.any(tail > 1e-6)):
                raise NumericalFailureError(
                    f"instability at t={t:.4f} (step {k}): "
                    f"max w={np.nanmax(w):.3g}, dt={dt:.3g}, dx={dx}")
        while ci < len(cps) and t >= cps[ci] - 1e-9:
            stored_t.append(cps[ci])
            stored_w.append(w.copy())
            ci += 1
    return KppField(x=x, times=stored_t, w=stored_w, params=params,
                    meta={"dt": dt, "dx": dx, "scheme": "semi-implicit log-domain",
                          "ic_mode": params.ic_mode})


def front_tail(field: KppField, rho: float, t: float) -> float:
    """w at the probe point (sqrt(2) rho t, t) by local cubic interpolation."""
    if rho < 1.0:
        raise ValueError("rho must be >= 1")
    w = field.w_at(t)
    xp = SQRT2 * rho * t
    x = field.x
    i = int(np.searchsorted(x, xp))
    if i < 4 or i > x.size - 4:
        raise ValueError(f"probe x={xp:.3f} too close to the domain edge")
    idx = slice(i - 2, i + 2)
    coeffs = np.polyfit(x[idx] - xp, w[idx], 3)
    return float(coeffs[-1])


def prefactor_of_t(field: KppField, rho: float, t: float) -> float:
    """c(t) = rho sqrt(t) e^{(rho^2-1) t + w(sqrt(2) rho t, t)}."""
    return rho * math.sqrt(t) * math.exp((rho * rho - 1.0) * t + front_tail(field, rho, t))


def estimate_C_pde(field: KppField, rho: float, t_list=None):
    """Extrapolated prefactor with a Richardson-spread uncertainty.

    Fits c(t) = C + a/t on the last three checkpoints; the uncertainty is
    the spread between the two most recent pairwise 1/t extrapolations.
    """
    from .spine import EstimatorResult

    if rho <= 1.0:
        raise ValueError("rho must be > 1")
    ts = list(t_list) if t_list is not None else list(field.times)
    if len(ts) < 2:
        raise ValueError("need at least two checkpoints")
    cs = np.array([prefactor_of_t(field, rho, t) for t in ts])
    diffs = np.abs(np.diff(cs))
    if diffs.size >= 3 and np.all(np.diff(diffs[-3:]) > 0):
        raise NumericalFailureError(
            f"prefactor sequence diverging at rho={rho}: c(t)={cs.tolist()}")

    def richardson(i, j):
        return cs[j] + (cs[j] - cs[i]) * (1.0 / ts[j]) / (1.0 / ts[i] - 1.0 / ts[j])

    if len(ts) >= 3:
        tt = np.array(ts[-3:], dtype=float)
        design = np.vstack([np.ones(3), 1.0 / tt]).T
        coef, *_ = np.linalg.lstsq(design, cs[-3:], rcond=None)
        estimate = float(coef[0])
        spread = abs(richardson(-2, -1) - richardson(-3, -2))
    else:
        estimate = float(richardson(-2, -1))
        spread = float(diffs[-1])
    return EstimatorResult(estimate=estimate, stderr=spread, n_samples=len(ts),
                           extra={"c_of_t": dict(zip(map(float, ts), map(float, cs)))})


def phi_conversion(c_value: float, rho: float) -> float:
    """Convert the prefactor to the front-expansion convention value at 2 rho."""
    if rho <= 1.0:
        raise ValueError("rho must be > 1")
    return c_value * math.sqrt(4.0 * math.pi) / rho


def dump_checkpoints(field: KppField, path: str):
    """CSV with columns t, x, w for every stored checkpoint."""
    with open(path, "w") as fh:
        fh.write("t,x,w\n")
        for tk, wk in zip(field.times, field.w):
            for xi, wi in zip(field.x, wk):
                fh.write(f"{float(tk)!r},{float(xi)!r},{float(wi)!r}\n")
