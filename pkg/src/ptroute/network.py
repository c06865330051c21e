"""Transportation multigraph, route set, player action sets and edge-flow aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

# Absolute tolerance on the per-player sum constraint for supplied profiles.
FEASIBILITY_TOL = 1e-9

EdgeId = Hashable


@dataclass(frozen=True)
class Edge:
    id: EdgeId
    free_flow_time: float
    critical_flow: float
    max_flow: float
    congestion_prob: float = 0.5
    # optional reference-cost override; None means BPR cost at critical_flow
    reference: float | None = None
    # endpoints are optional; without them route connectivity is not checked
    tail: Hashable | None = None
    head: Hashable | None = None


@dataclass(frozen=True)
class PlayerSpec:
    id: Hashable
    total_demand: float

    def __post_init__(self):
        if not self.total_demand >= 0:
            raise ValueError(f"player {self.id!r}: total_demand must be >= 0, got {self.total_demand}")


@dataclass(frozen=True)
class Network:
    nodes: tuple
    edges: tuple[Edge, ...]
    od_pair: tuple
    routes: tuple[tuple[EdgeId, ...], ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "od_pair", tuple(self.od_pair))
        object.__setattr__(self, "routes", tuple(tuple(r) for r in self.routes))
        object.__setattr__(self, "_index", {e.id: k for k, e in enumerate(self.edges)})

    @property
    def edge_ids(self) -> list:
        return [e.id for e in self.edges]

    @property
    def n_routes(self) -> int:
        return len(self.routes)

    def edge(self, edge_id) -> Edge:
        try:
            return self.edges[self._index[edge_id]]
        except KeyError:
            raise KeyError(f"unknown edge id {edge_id!r}") from None

    def edge_index(self, edge_id) -> int:
        try:
            return self._index[edge_id]
        except KeyError:
            raise KeyError(f"unknown edge id {edge_id!r}") from None

    def incidence(self) -> np.ndarray:
        """Route-by-edge count matrix ``A[r, e]`` (number of times route r uses edge e)."""
        A = np.zeros((self.n_routes, len(self.edges)))
        for r, route in enumerate(self.routes):
            for eid in route:
                A[r, self.edge_index(eid)] += 1.0
        return A


@dataclass(frozen=True)
class FlowProfile:
    """Route flows, one row per player (rows follow the player list order)."""

    flows: np.ndarray

    def __post_init__(self):
        arr = np.array(self.flows, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"flows must be 2-D (players x routes), got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "flows", arr)

    @property
    def n_players(self) -> int:
        return self.flows.shape[0]

    @property
    def n_routes(self) -> int:
        return self.flows.shape[1]

    def with_player(self, i: int, x_i) -> "FlowProfile":
        flows = self.flows.copy()
        flows[i] = x_i
        return FlowProfile(flows)

    @classmethod
    def from_rows(cls, rows, players: Sequence[PlayerSpec], tol: float = FEASIBILITY_TOL) -> "FlowProfile":
        """Build a validated profile; rows within ``tol`` of feasibility are renormalized."""
        arr = np.array(rows, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != len(players):
            raise ValueError(f"expected {len(players)} rows of route flows, got shape {arr.shape}")
        if np.any(arr < -tol):
            raise ValueError("route flows must be nonnegative")
        arr = np.clip(arr, 0.0, None)
        for i, p in enumerate(players):
            s = arr[i].sum()
            if abs(s - p.total_demand) > tol:
                raise ValueError(
                    f"player {p.id!r}: route flows sum to {s}, expected {p.total_demand}"
                )
            if s > 0:
                arr[i] *= p.total_demand / s
        return cls(arr)


def validate_network(net: Network) -> list[str]:
    """Return a list of violations; an empty list means the network is valid."""
    problems = []
    node_set = set(net.nodes)
    seen = set()
    for e in net.edges:
        if e.id in seen:
            problems.append(f"duplicate edge id {e.id!r}")
        seen.add(e.id)
        if not e.free_flow_time > 0:
            problems.append(f"edge {e.id!r}: free_flow_time must be > 0")
        if not 0 < e.critical_flow < e.max_flow:
            problems.append(
                f"edge {e.id!r}: need 0 < critical_flow < max_flow, got {e.critical_flow}, {e.max_flow}"
            )
        if not 0.0 <= e.congestion_prob <= 1.0:
            problems.append(f"edge {e.id!r}: congestion_prob outside [0, 1]")
        if e.reference is not None and not e.reference > 0:
            problems.append(f"edge {e.id!r}: reference must be > 0")
        for end in (e.tail, e.head):
            if end is not None and end not in node_set:
                problems.append(f"edge {e.id!r}: endpoint {end!r} is not a node")
    if len(net.od_pair) != 2:
        problems.append("od pair must have exactly two nodes")
    else:
        for n in net.od_pair:
            if n not in node_set:
                problems.append(f"od node {n!r} is not a node")
    if not net.routes:
        problems.append("route set is empty")
    index = {e.id: e for e in net.edges}
    for k, route in enumerate(net.routes):
        if not route:
            problems.append(f"route {k}: empty")
            continue
        missing = [eid for eid in route if eid not in index]
        if missing:
            problems.append(f"route {k}: unknown edge ids {missing!r}")
            continue
        edges = [index[eid] for eid in route]
        if any(e.tail is None or e.head is None for e in edges):
            continue
        at = net.od_pair[0] if len(net.od_pair) == 2 else None
        for e in edges:
            if e.tail != at:
                problems.append(f"route {k}: edge {e.id!r} does not start at {at!r}")
                break
            at = e.head
        else:
            if len(net.od_pair) == 2 and at != net.od_pair[1]:
                problems.append(f"route {k}: ends at {at!r}, not at destination {net.od_pair[1]!r}")
    return problems


def _check_dims(net: Network, profile: FlowProfile):
    if profile.n_routes != net.n_routes:
        raise ValueError(
            f"profile has {profile.n_routes} route columns but network has {net.n_routes} routes"
        )


def edge_flows(net: Network, profile: FlowProfile) -> np.ndarray:
    """Flow on every edge, ordered as ``net.edges``."""
    _check_dims(net, profile)
    route_totals = profile.flows.sum(axis=0)
    return route_totals @ net.incidence()


def edge_flow(net: Network, profile: FlowProfile, edge_id) -> float:
    return float(edge_flows(net, profile)[net.edge_index(edge_id)])


def feasible_point(spec: PlayerSpec, n_routes: int) -> np.ndarray:
    """All of the player's demand on the first route."""
    if n_routes < 1:
        raise ValueError("need at least one route")
    x = np.zeros(n_routes)
    x[0] = spec.total_demand
    return x


def project_to_action_set(v, demand: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{x >= 0, sum(x) = demand}``.

    Sort-and-threshold algorithm; exact up to rounding, with the sum corrected
    onto the active coordinates afterwards.
    """
    if demand < 0:
        raise ValueError("demand must be >= 0")
    v = np.asarray(v, dtype=float)
    n = v.size
    if demand == 0:
        return np.zeros(n)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - demand
    k = np.arange(1, n + 1)
    # the first index always qualifies in exact arithmetic; rounding can hide it
    hits = np.nonzero(u - css / k > 0)[0]
    rho = hits[-1] if hits.size else 0
    theta = css[rho] / (rho + 1)
    x = np.maximum(v - theta, 0.0)
    active = x > 0
    if not active.any():  # demand below the resolution of v
        active[np.argmax(v)] = True
    x[active] += (demand - x.sum()) / active.sum()
    return np.maximum(x, 0.0)
