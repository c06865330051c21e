"""Logistic approximation of the perceived edge value.

    sigma(f) = d1 / (1 + exp((d2 - f) / d3)) + d4

Fitting minimizes the mean squared difference to a target curve on a uniform
grid over ``[0, domain_end]`` with BFGS from a fixed set of starting points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .behavior import BehaviorParams, ReferencePoint, pt_edge_cost
from .network import Edge

Target = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SigmoidParams:
    d1: float
    d2: float
    d3: float
    d4: float
    domain_end: float = 1.5

    def __post_init__(self):
        if self.d3 == 0:
            raise ValueError("d3 must be nonzero")
        if not self.domain_end > 0:
            raise ValueError("domain_end must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.d1, self.d2, self.d3, self.d4])

    @classmethod
    def from_array(cls, x, domain_end: float) -> "SigmoidParams":
        return cls(*(float(v) for v in x), domain_end=domain_end)


@dataclass(frozen=True)
class FitConfig:
    grid_size: int = 301
    fd_step: float = 1e-7
    gtol: float = 1e-8
    max_iter: int = 500
    # "analytic" uses the closed-form parameter gradient; "forward" uses differences of size fd_step
    gradient: str = "analytic"
    # explicit (d1, d2, d3, d4) starting points; None uses the default schedule
    starts: tuple | None = None


@dataclass(frozen=True)
class FitResult:
    params: SigmoidParams
    max_error: float
    min_error: float
    mean_error: float
    grid_size: int
    converged: bool
    iterations: int
    objective: float = float("nan")
    start_objectives: tuple = field(default=(), repr=False)
    best_start: int = 0


@dataclass(frozen=True)
class ErrorBound:
    gamma: float
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")


@dataclass(frozen=True)
class ConcavityCertificate:
    concave: bool
    condition: str | None  # "i" (d1 > 0, d2 below interval), "ii" (d1 < 0, d2 above), or None


@dataclass(frozen=True)
class BoundReport:
    gamma: float
    epsilon: float
    max_signed_error: float
    argmax_flow: float
    margin: float  # gamma + epsilon - max_signed_error; >= 0 means the bound holds
    passed: bool
    gamma_positive: bool


def _halves(u):
    """Return (1/(1+e^u), 1/(1+e^-u)) without overflow for any u."""
    e = np.exp(-np.abs(u))
    small = e / (1.0 + e)  # logistic of -|u|
    big = 1.0 / (1.0 + e)  # logistic of +|u|
    q = np.where(u >= 0, small, big)
    qc = np.where(u >= 0, big, small)
    return q, qc


def _u(params: SigmoidParams, f):
    if params.d3 == 0:
        raise ValueError("d3 must be nonzero")
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("flow must be nonnegative")
    return (params.d2 - f) / params.d3


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def sigmoid(params: SigmoidParams, f):
    q, _ = _halves(_u(params, f))
    return _out(params.d1 * q + params.d4)


def sigmoid_derivatives(params: SigmoidParams, f):
    """First and second derivatives in flow.

    With q = 1/(1+e^u) and u = (d2 - f)/d3:
    sigma' = (d1/d3) q (1-q) and sigma'' = (d1/d3^2) q (1-q) (1-2q).
    A decreasing curve (d1 < 0, d3 > 0) is concave left of d2, convex right of it.
    """
    q, qc = _halves(_u(params, f))
    s = q * qc
    first = params.d1 / params.d3 * s
    second = params.d1 / params.d3**2 * s * (qc - q)
    return _out(first), _out(second)


def _normalized(params: SigmoidParams) -> tuple[float, float]:
    """(d1, d2) of the equivalent curve with a positive scale d3."""
    return (params.d1, params.d2) if params.d3 > 0 else (-params.d1, params.d2)


def concavity_certificate(params: SigmoidParams, lo: float, hi: float) -> ConcavityCertificate:
    """Sufficient parameter conditions for strict concavity on ``[lo, hi]``.

    With a positive scale, the curve is strictly concave on one side of its
    inflection point d2: (i) d1 > 0 and d2 < lo (rising, past the inflection),
    (ii) d1 < 0 and d2 > hi (falling, before the inflection).  A negative scale
    is handled through the equivalent curve with d1 negated.
    """
    if params.d3 == 0:
        raise ValueError("d3 must be nonzero")
    if not (0 <= lo < hi):
        raise ValueError("need 0 <= lo < hi")
    d1, d2 = _normalized(params)
    if d1 > 0 and d2 < lo:
        return ConcavityCertificate(True, "i")
    if d1 < 0 and d2 > hi:
        return ConcavityCertificate(True, "ii")
    return ConcavityCertificate(False, None)


def pt_target(edge: Edge, ref: ReferencePoint, behavior: BehaviorParams) -> Target:
    """The exact perceived-value curve of one edge, as a fit target."""

    def target(f):
        return np.asarray(pt_edge_cost(edge, ref, behavior, f), dtype=float)

    return target


def _grid(domain_end: float, grid_size: int) -> np.ndarray:
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    return np.linspace(0.0, domain_end, grid_size)


def default_starts(y0: float, yk: float, domain_end: float) -> list[np.ndarray]:
    """Eight starts: both signs of the drop, inflection at a quarter steps of the domain."""
    span = yk - y0
    mag = abs(span) if span != 0 else 1.0
    sign = 1.0 if span >= 0 else -1.0
    starts = []
    for s in (sign, -sign):
        d1 = s * mag
        for frac in (0.5, 0.25, 0.75, 1.0):
            starts.append(np.array([d1, frac * domain_end, domain_end / 10.0, y0 - d1]))
    return starts


def fit_sigmoid(target: Target, domain_end: float, config: FitConfig = FitConfig()) -> FitResult:
    """Least-squares fit of the logistic to ``target`` on ``[0, domain_end]``."""
    if not domain_end > 0:
        raise ValueError("domain_end must be positive")
    f = _grid(domain_end, config.grid_size)
    y = np.asarray(target(f), dtype=float)
    if y.shape != f.shape or not np.all(np.isfinite(y)):
        raise ValueError("target must be finite on the fit grid")

    def residual(x):
        if x[2] == 0:
            return np.full_like(f, np.inf)
        u = (x[1] - f) / x[2]
        q, _ = _halves(u)
        return x[0] * q + x[3] - y

    def objective(x):
        return float(np.mean(residual(x) ** 2))

    def gradient(x):
        u = (x[1] - f) / x[2]
        q, qc = _halves(u)
        r = x[0] * q + x[3] - y
        s = x[0] * q * qc / x[2]
        jac = np.stack([q, -s, s * u, np.ones_like(f)])
        return 2.0 * (jac @ r) / f.size

    if config.gradient not in ("analytic", "forward"):
        raise ValueError(f"unknown gradient mode {config.gradient!r}")
    jac = gradient if config.gradient == "analytic" else None

    if config.starts is not None:
        starts = [np.asarray(s, dtype=float) for s in config.starts]
    else:
        starts = default_starts(y[0], y[-1], domain_end)

    start_obj = tuple(objective(x0) for x0 in starts)
    best = None
    for k, x0 in enumerate(starts):
        res = minimize(
            objective,
            x0,
            jac=jac,
            method="BFGS",
            options={"gtol": config.gtol, "maxiter": config.max_iter, "eps": config.fd_step},
        )
        x, val = res.x, float(res.fun)
        if not np.isfinite(val) or x[2] == 0:
            continue
        if val > start_obj[k]:
            x, val = x0, start_obj[k]
        if best is None or val < best[1]:
            best = (x, val, bool(res.success), int(res.nit), k)

    if best is None:
        raise RuntimeError("every start failed to produce a finite objective")
    x, val, ok, nit, k = best
    params = SigmoidParams.from_array(x, domain_end)
    err = np.abs(residual(x))
    return FitResult(
        params=params,
        max_error=float(err.max()),
        min_error=float(err.min()),
        mean_error=float(err.mean()),
        grid_size=config.grid_size,
        converged=ok,
        iterations=nit,
        objective=val,
        start_objectives=start_obj,
        best_start=k,
    )


def error_profile(target: Target, params: SigmoidParams, domain_end: float, grid_size: int = 301) -> np.ndarray:
    """Rows ``(f, target, sigma, |target - sigma|)`` on a uniform grid."""
    f = _grid(domain_end, grid_size)
    t = np.asarray(target(f), dtype=float)
    s = np.asarray(sigmoid(params, f), dtype=float)
    return np.column_stack([f, t, s, np.abs(t - s)])


def bound_constant(params: SigmoidParams, critical_flow: float = 1.0) -> float:
    """gamma = d1 / (1 + exp((d2 - f_crt) / d3))."""
    q, _ = _halves((params.d2 - critical_flow) / params.d3)
    return float(params.d1 * q)


def check_error_bound(
    target: Target,
    params: SigmoidParams,
    bound: ErrorBound,
    domain_end: float,
    grid_size: int = 301,
) -> BoundReport:
    """Compare the largest signed error ``target - sigma`` on the grid with gamma + epsilon."""
    rows = error_profile(target, params, domain_end, grid_size)
    signed = rows[:, 1] - rows[:, 2]
    k = int(np.argmax(signed))
    margin = bound.gamma + bound.epsilon - float(signed[k])
    return BoundReport(
        gamma=bound.gamma,
        epsilon=bound.epsilon,
        max_signed_error=float(signed[k]),
        argmax_flow=float(rows[k, 0]),
        margin=margin,
        passed=margin >= 0,
        gamma_positive=bound.gamma > 0,
    )
