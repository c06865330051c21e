"""Objective BPR costs and their prospect-theoretic perception.

All perceived quantities are *values*: positive for gains (travel time below
the reference), negative for losses.  Players prefer larger values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Mapping

import numpy as np

from .network import Edge, FlowProfile, Network, edge_flows

BPR_ALPHA = 3.0 / 20.0
BPR_POWER = 4

# bases at or below this are treated as exact zeros before exponentiation
TINY_BASE = 1e-300

Weighting = Literal["prelec", "unit"]


@dataclass(frozen=True)
class BehaviorParams:
    beta: float = 0.5
    lam: float = 2.0
    beta3: float = 0.65
    weighting: Weighting = "unit"

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.lam >= 1:
            raise ValueError(f"lambda must be >= 1, got {self.lam}")
        if not 0 < self.beta3 < 1:
            raise ValueError(f"beta3 must lie in (0, 1), got {self.beta3}")
        if self.weighting not in ("prelec", "unit"):
            raise ValueError(f"weighting must be 'prelec' or 'unit', got {self.weighting!r}")


@dataclass(frozen=True)
class ReferencePoint:
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"reference cost must be > 0, got {self.value}")


def _nonneg(f):
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("flow must be nonnegative")
    return f


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def bpr_cost(edge: Edge, f):
    f = _nonneg(f)
    return _out(edge.free_flow_time * (1.0 + BPR_ALPHA * (f / edge.critical_flow) ** BPR_POWER))


def bpr_cost_derivative(edge: Edge, f):
    f = _nonneg(f)
    return _out(edge.free_flow_time * BPR_ALPHA * BPR_POWER * f**3 / edge.critical_flow**BPR_POWER)


def default_reference(edge: Edge) -> ReferencePoint:
    if edge.reference is not None:
        return ReferencePoint(edge.reference)
    return ReferencePoint(bpr_cost(edge, edge.critical_flow))


def reference_map(net: Network, overrides: Mapping | None = None) -> dict:
    refs = {e.id: default_reference(e) for e in net.edges}
    if overrides:
        refs.update(overrides)
    return refs


def prelec_weight(p, beta3: float):
    """w(p) = exp(-(-ln p)^beta3), with w(0) = 0 and w(1) = 1 exactly."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError("probability must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        logs = -np.log(np.where(p > 0, p, 1.0))
    w = np.exp(-(logs**beta3))
    w = np.where(p == 0, 0.0, np.where(p == 1, 1.0, w))
    return _out(w)


def _power(x, beta):
    x = np.asarray(x, dtype=float)
    return np.where(x <= TINY_BASE, 0.0, np.abs(x) ** beta)


def value_function(z, z0: float, beta: float, lam: float):
    """S-shaped value: concave (z - z0)^beta above the reference, -lam (z0 - z)^beta below."""
    if not 0 < beta < 1 or not lam >= 1:
        raise ValueError("need 0 < beta < 1 and lambda >= 1")
    d = np.asarray(z, dtype=float) - z0
    return _out(np.where(d >= 0, _power(d, beta), -lam * _power(-d, beta)))


def reference_relative_cost(edge: Edge, ref: ReferencePoint, f) -> tuple[float, str]:
    """Distance of the BPR cost from the reference and which side it falls on."""
    f = _nonneg(f)
    if f.ndim:
        raise ValueError("reference_relative_cost takes a scalar flow")
    c = bpr_cost(edge, float(f))
    if c < ref.value:
        return ref.value - c, "gain"
    if c > ref.value:
        return c - ref.value, "loss"
    return 0.0, "zero"


def outcome_weights(edge: Edge, params: BehaviorParams) -> tuple[float, float]:
    """Decision weights of the uncongested and congested outcomes."""
    if params.weighting == "unit":
        return 1.0, 1.0
    p = edge.congestion_prob
    return prelec_weight(p, params.beta3), prelec_weight(1.0 - p, params.beta3)


def pt_edge_cost(edge: Edge, ref: ReferencePoint, params: BehaviorParams, f):
    """Perceived value of travelling on ``edge`` at flow ``f``.

    Piecewise: the gain branch ``w(pi) lam (ref - c)^beta`` when the BPR cost is
    below the reference, the loss branch ``-w(1 - pi) (c - ref)^beta`` above it,
    and exactly zero at the reference.
    """
    f = _nonneg(f)
    c = np.asarray(bpr_cost(edge, f))
    w_gain, w_loss = outcome_weights(edge, params)
    d = c - ref.value
    gain = w_gain * params.lam * _power(-d, params.beta)
    loss = -w_loss * _power(d, params.beta)
    return _out(np.where(d < 0, gain, np.where(d > 0, loss, 0.0)))


def _route_index(net: Network, route) -> int:
    if isinstance(route, (int, np.integer)):
        if not 0 <= route < net.n_routes:
            raise KeyError(f"unknown route index {route}")
        return int(route)
    route = tuple(route)
    try:
        return net.routes.index(route)
    except ValueError:
        raise KeyError(f"route {route!r} is not in the network") from None


def _edge_pt_values(net, refs, params, profile) -> np.ndarray:
    refs = refs or reference_map(net)
    f = edge_flows(net, profile)
    return np.array(
        [pt_edge_cost(e, refs[e.id], params, f[k]) for k, e in enumerate(net.edges)]
    )


def pt_route_cost(net: Network, refs, params: BehaviorParams, profile: FlowProfile, route) -> float:
    r = _route_index(net, route)
    vals = _edge_pt_values(net, refs, params, profile)
    return float(net.incidence()[r] @ vals)


def pt_player_cost(net: Network, refs, params: BehaviorParams, profile: FlowProfile, player: int) -> float:
    """Perceived value of player ``player``: summed over every route in the network."""
    if not 0 <= player < profile.n_players:
        raise IndexError(f"player index {player} out of range")
    vals = _edge_pt_values(net, refs, params, profile)
    return float(net.incidence().sum(axis=0) @ vals)


def objective_player_cost(net: Network, profile: FlowProfile, player: int) -> float:
    if not 0 <= player < profile.n_players:
        raise IndexError(f"player index {player} out of range")
    f = edge_flows(net, profile)
    costs = np.array([bpr_cost(e, f[k]) for k, e in enumerate(net.edges)])
    return float(net.incidence().sum(axis=0) @ costs)
