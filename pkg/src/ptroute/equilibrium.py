"""Nash equilibria of the smoothed routing game.

Every player's perceived value is ``sum_r sum_{e in r} sigma_e(f_e)`` over the
whole route set, so it depends on the profile only through the aggregate route
flows.  Players maximize it over their scaled simplex.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .approx import SigmoidParams, _halves
from .network import FlowProfile, Network, PlayerSpec, feasible_point, project_to_action_set

SigmoidMap = Mapping[object, SigmoidParams]

# largest brute-force instance: players, routes
BRUTE_FORCE_LIMITS = (2, 3)


@dataclass(frozen=True)
class SolverConfig:
    max_outer_iterations: int = 200
    step_size: float = 1.0
    convergence_tol: float = 1e-9
    deviation_samples: int = 64
    max_inner_iterations: int = 5000
    seed: int = 42

    def __post_init__(self):
        for name in ("max_outer_iterations", "step_size", "convergence_tol", "deviation_samples", "max_inner_iterations"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.convergence_tol < 1:
            raise ValueError("convergence_tol must be < 1")


@dataclass(frozen=True)
class BestResponse:
    x: np.ndarray
    value: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class VIReport:
    residual: float
    per_player: tuple[float, ...]
    certified: bool


@dataclass(frozen=True)
class EquilibriumResult:
    profile: FlowProfile
    vi_residual: float
    iterations: int
    converged: bool
    per_player_values: tuple[float, ...]
    edge_flows: np.ndarray


class SmoothedGame:
    """Vectorized evaluation of the common perceived value and its route gradient."""

    def __init__(self, net: Network, sigmoids: SigmoidMap):
        missing = [e.id for e in net.edges if e.id not in sigmoids]
        if missing:
            raise KeyError(f"no sigmoid parameters for edges {missing!r}")
        self.net = net
        self.A = net.incidence()
        self.mult = self.A.sum(axis=0)
        self.P = np.array([sigmoids[e.id].as_array() for e in net.edges]).T

    def _sigma(self, f):
        d1, d2, d3, d4 = self.P
        u = (d2 - f) / d3
        q, qc = _halves(u)
        return d1 * q + d4, d1 / d3 * q * qc

    def value(self, y) -> np.ndarray:
        """Perceived value at aggregate route flows ``y`` (last axis = routes)."""
        s, _ = self._sigma(np.asarray(y) @ self.A)
        return s @ self.mult

    def route_gradient(self, y) -> np.ndarray:
        _, ds = self._sigma(np.asarray(y) @ self.A)
        return self.A @ (self.mult * ds)


def player_gradient(net: Network, sigmoids: SigmoidMap, profile: FlowProfile, player: int) -> np.ndarray:
    """Gradient of the player's smoothed value with respect to their route flows.

    Component r is ``sum_{e in r} m_e sigma_e'(f_e)``, where ``m_e`` counts the
    routes through e; for edge-disjoint routes ``m_e = 1``.
    """
    if not 0 <= player < profile.n_players:
        raise IndexError(f"player index {player} out of range")
    game = SmoothedGame(net, sigmoids)
    return game.route_gradient(profile.flows.sum(axis=0))


def _ascend(game: SmoothedGame, others, x, demand, cfg: SolverConfig):
    """Projected gradient ascent with backtracking.

    A step is accepted on sufficient increase; once value differences are at
    roundoff level, only when the directional derivative at the new point still
    points along the step.
    """
    val = float(game.value(others + x))
    g = game.route_gradient(others + x)
    t = cfg.step_size
    for it in range(cfg.max_inner_iterations):
        if np.linalg.norm(x - project_to_action_set(x + g, demand)) < cfg.convergence_tol:
            return x, val, True, it
        while True:
            xn = project_to_action_set(x + t * g, demand)
            d = xn - x
            if np.max(np.abs(d)) <= 1e-15 * max(1.0, demand):
                return x, val, True, it
            vn = float(game.value(others + xn))
            gn = game.route_gradient(others + xn)
            if abs(vn - val) <= 1e-13 * (1.0 + abs(val)):
                # centered: d sums to zero only up to rounding, which swamps tiny slopes
                m = d != 0
                if float((gn[m] - gn[m].mean()) @ d[m]) >= 0:
                    break
            elif vn >= val + 1e-4 * float(g @ d):
                break
            t *= 0.5
        x, val, g = xn, vn, gn
        t = min(2.0 * t, cfg.step_size)
    return x, val, False, cfg.max_inner_iterations


def _best_response(game: SmoothedGame, flows: np.ndarray, i: int, cfg: SolverConfig) -> BestResponse:
    x_inc = flows[i]
    demand = float(x_inc.sum())
    n = x_inc.size
    if demand == 0 or n == 1:
        return BestResponse(x_inc.copy(), float(game.value(flows.sum(axis=0))), True, 0)
    others = flows.sum(axis=0) - x_inc
    starts = [x_inc, np.full(n, demand / n)] + [demand * np.eye(n)[r] for r in range(n)]
    best = None
    total_it = 0
    for x0 in starts:
        x, val, ok, it = _ascend(game, others, x0.copy(), demand, cfg)
        total_it += it
        # later starts must beat the incumbent's ascent by more than rounding noise
        if best is None or val > best.value + 1e-12 * (1.0 + abs(best.value)):
            best = BestResponse(x, val, ok, total_it)
    return BestResponse(best.x, best.value, best.converged, total_it)


def best_response(
    net: Network,
    sigmoids: SigmoidMap,
    profile: FlowProfile,
    player: int,
    config: SolverConfig = SolverConfig(),
) -> BestResponse:
    """Maximize player ``player``'s smoothed value with everyone else fixed.

    Projected gradient ascent from the incumbent, the barycenter and every
    vertex of the player's simplex; the incumbent's result wins ties.
    """
    game = SmoothedGame(net, sigmoids)
    return _best_response(game, np.array(profile.flows), player, config)


def _player_order(players: Sequence[PlayerSpec]) -> list[int]:
    try:
        return sorted(range(len(players)), key=lambda i: players[i].id)
    except TypeError:
        return sorted(range(len(players)), key=lambda i: str(players[i].id))


def vi_certificate(
    net: Network,
    sigmoids: SigmoidMap,
    profile: FlowProfile,
    config: SolverConfig = SolverConfig(),
) -> VIReport:
    """Smallest ``<grad_i, x_i* - x_i>`` over sampled feasible deviations.

    Nonnegative means no sampled deviation is an ascent direction.  Deviations are
    the simplex vertices plus ``deviation_samples`` uniform points per player.
    """
    game = SmoothedGame(net, sigmoids)
    rng = np.random.default_rng(config.seed)
    g = game.route_gradient(profile.flows.sum(axis=0))
    n = profile.n_routes
    per_player = []
    for i in range(profile.n_players):
        x_star = profile.flows[i]
        demand = float(x_star.sum())
        devs = np.vstack([demand * np.eye(n), demand * rng.dirichlet(np.ones(n), size=config.deviation_samples)])
        per_player.append(float(np.min((x_star - devs) @ g)))
    residual = min(per_player) if per_player else 0.0
    return VIReport(residual, tuple(per_player), residual >= -config.convergence_tol)


def solve_nash(
    net: Network,
    players: Sequence[PlayerSpec],
    sigmoids: SigmoidMap,
    config: SolverConfig = SolverConfig(),
) -> EquilibriumResult:
    """Gauss-Seidel iterated best response from the all-on-first-route profile."""
    game = SmoothedGame(net, sigmoids)
    flows = np.array([feasible_point(p, net.n_routes) for p in players], dtype=float)
    order = _player_order(players)
    converged = False
    it = 0
    for it in range(1, config.max_outer_iterations + 1):
        change = 0.0
        for i in order:
            br = _best_response(game, flows, i, config)
            change = max(change, float(np.max(np.abs(br.x - flows[i]))))
            flows[i] = br.x
        if change < config.convergence_tol:
            converged = True
            break
    profile = FlowProfile(flows)
    cert = vi_certificate(net, sigmoids, profile, config)
    value = float(game.value(flows.sum(axis=0)))
    return EquilibriumResult(
        profile=profile,
        vi_residual=cert.residual,
        iterations=it,
        converged=converged,
        per_player_values=tuple(value for _ in players),
        edge_flows=flows.sum(axis=0) @ game.A,
    )


def simplex_grid(demand: float, n_routes: int, resolution: float) -> np.ndarray:
    """All points of the scaled simplex whose coordinates are multiples of ``demand / N``."""
    if demand == 0:
        return np.zeros((1, n_routes))
    if n_routes == 1:
        return np.array([[float(demand)]])
    steps = max(1, int(round(demand / resolution)))
    head = np.array(
        [c for c in itertools.product(range(steps + 1), repeat=n_routes - 1) if sum(c) <= steps],
        dtype=float,
    ).reshape(-1, n_routes - 1) * (demand / steps)
    # the last route takes the remainder so every row sums to the demand
    last = np.maximum(demand - head.sum(axis=1), 0.0)
    return np.column_stack([head, last])


def _grid_value(net: Network, sigmoids: SigmoidMap, y: np.ndarray) -> np.ndarray:
    """Perceived value by direct route-by-route summation (no incidence algebra)."""
    flows = {e.id: np.zeros(y.shape[:-1]) for e in net.edges}
    for r, route in enumerate(net.routes):
        for eid in route:
            flows[eid] = flows[eid] + y[..., r]
    total = np.zeros(y.shape[:-1])
    for route in net.routes:
        for eid in route:
            p = sigmoids[eid]
            total = total + p.d1 / (1.0 + np.exp(np.clip((p.d2 - flows[eid]) / p.d3, -700, 700))) + p.d4
    return total


def brute_force_nash(
    net: Network,
    players: Sequence[PlayerSpec],
    sigmoids: SigmoidMap,
    resolution: float = 0.01,
    tol: float = 1e-9,
) -> list[FlowProfile]:
    """Grid profiles at which no player gains more than ``tol`` by moving to another grid point."""
    max_players, max_routes = BRUTE_FORCE_LIMITS
    if len(players) > max_players or net.n_routes > max_routes:
        raise ValueError(f"brute force limited to {max_players} players and {max_routes} routes")
    if not players:
        return []
    grids = [simplex_grid(p.total_demand, net.n_routes, resolution) for p in players]

    if len(players) == 1:
        vals = _grid_value(net, sigmoids, grids[0])
        keep = np.nonzero(vals >= vals.max() - tol)[0]
        return [FlowProfile(grids[0][k][None, :]) for k in keep]

    g1, g2 = grids
    n1 = len(g1)
    col_max = np.full(len(g2), -np.inf)
    row_max = np.empty(n1)
    chunk = max(1, 2_000_000 // max(1, len(g2)))
    for a in range(0, n1, chunk):
        v = _grid_value(net, sigmoids, g1[a : a + chunk, None, :] + g2[None, :, :])
        col_max = np.maximum(col_max, v.max(axis=0))
        row_max[a : a + chunk] = v.max(axis=1)
    out = []
    for a in range(0, n1, chunk):
        v = _grid_value(net, sigmoids, g1[a : a + chunk, None, :] + g2[None, :, :])
        ok = (v >= col_max[None, :] - tol) & (v >= row_max[a : a + chunk, None] - tol)
        for ia, ib in zip(*np.nonzero(ok)):
            out.append(FlowProfile(np.vstack([g1[a + ia], g2[ib]])))
    return out
