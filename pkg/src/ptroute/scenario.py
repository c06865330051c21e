"""Scenario files: JSON in, validated dataclasses out."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .approx import FitConfig, SigmoidParams
from .behavior import BehaviorParams
from .equilibrium import SolverConfig
from .network import Edge, Network, PlayerSpec, validate_network

# default fit window, as a multiple of the edge's critical flow
DEFAULT_DOMAIN_FACTOR = 1.5


class ScenarioError(ValueError):
    """Raised for unreadable or invalid scenario files; carries every problem found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class FitSettings:
    domain_end: float | None = None
    config: FitConfig = FitConfig()
    overrides: dict = field(default_factory=dict)  # edge id -> SigmoidParams, skips fitting

    def domain_for(self, edge: Edge) -> float:
        if self.domain_end is not None:
            return self.domain_end
        kappa = DEFAULT_DOMAIN_FACTOR * edge.critical_flow
        if kappa >= edge.max_flow:
            kappa = 0.5 * (edge.critical_flow + edge.max_flow)
        return kappa


@dataclass(frozen=True)
class ScenarioConfig:
    network: Network
    players: tuple[PlayerSpec, ...]
    behavior: BehaviorParams = BehaviorParams()
    fit: FitSettings = FitSettings()
    solver: SolverConfig = SolverConfig()
    outputs: str = "out"


def _known(cls, raw: dict, where: str, problems: list) -> dict:
    names = {f.name for f in fields(cls)}
    extra = sorted(set(raw) - names)
    if extra:
        problems.append(f"{where}: unknown fields {extra}")
    return {k: v for k, v in raw.items() if k in names}


def parse_scenario(raw: dict) -> ScenarioConfig:
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ScenarioError(["scenario must be a JSON object"])
    for key in ("nodes", "edges", "od", "routes", "players"):
        if key not in raw:
            problems.append(f"missing required field {key!r}")
    if problems:
        raise ScenarioError(problems)

    edges = []
    for k, e in enumerate(raw["edges"]):
        try:
            edges.append(
                Edge(
                    id=e["id"],
                    free_flow_time=float(e["free_flow_time"]),
                    critical_flow=float(e["critical_flow"]),
                    max_flow=float(e["max_flow"]),
                    congestion_prob=float(e.get("congestion_prob", 0.5)),
                    reference=None if e.get("reference") is None else float(e["reference"]),
                    tail=e.get("tail"),
                    head=e.get("head"),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(f"edge #{k}: {exc!r}")
    net = Network(nodes=raw["nodes"], edges=edges, od_pair=raw["od"], routes=raw["routes"])
    problems += validate_network(net)

    players = []
    for k, p in enumerate(raw["players"]):
        try:
            players.append(PlayerSpec(p["id"], float(p["demand"])))
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(f"player #{k}: {exc}")
    if not players:
        problems.append("at least one player is required")
    if len({p.id for p in players}) != len(players):
        problems.append("player ids must be unique")

    behavior = BehaviorParams()
    if "behavior" in raw:
        b = dict(raw["behavior"])
        if "lambda" in b:
            b["lam"] = b.pop("lambda")
        try:
            behavior = BehaviorParams(**_known(BehaviorParams, b, "behavior", problems))
        except (TypeError, ValueError) as exc:
            problems.append(f"behavior: {exc}")

    fit = FitSettings()
    if "fit" in raw:
        f = dict(raw["fit"])
        domain_end = f.pop("domain_end", None)
        overrides = {}
        for eid, p in (f.pop("overrides", None) or {}).items():
            match = [e.id for e in edges if str(e.id) == str(eid)]
            if not match:
                problems.append(f"fit override for unknown edge {eid!r}")
                continue
            try:
                overrides[match[0]] = SigmoidParams(
                    float(p["d1"]), float(p["d2"]), float(p["d3"]), float(p["d4"]),
                    domain_end=float(p.get("domain_end", domain_end or 1.5)),
                )
            except (KeyError, TypeError, ValueError) as exc:
                problems.append(f"fit override {eid!r}: {exc}")
        if "starts" in f and f["starts"] is not None:
            f["starts"] = tuple(tuple(s) for s in f["starts"])
        try:
            fit = FitSettings(
                domain_end=None if domain_end is None else float(domain_end),
                config=FitConfig(**_known(FitConfig, f, "fit", problems)),
                overrides=overrides,
            )
        except (TypeError, ValueError) as exc:
            problems.append(f"fit: {exc}")
    for e in edges:
        kappa = fit.domain_for(e)
        if not 0 < kappa < e.max_flow:
            problems.append(f"edge {e.id!r}: fit domain_end {kappa} must lie in (0, max_flow={e.max_flow})")

    solver = SolverConfig()
    if "solver" in raw:
        try:
            solver = SolverConfig(**_known(SolverConfig, dict(raw["solver"]), "solver", problems))
        except (TypeError, ValueError) as exc:
            problems.append(f"solver: {exc}")

    if problems:
        raise ScenarioError(problems)
    return ScenarioConfig(
        network=net,
        players=tuple(players),
        behavior=behavior,
        fit=fit,
        solver=solver,
        outputs=str(raw.get("outputs", "out")),
    )


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ScenarioError([f"scenario file not found: {path}"]) from None
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{path}: invalid JSON ({exc})"]) from None
    return parse_scenario(raw)


GOLDEN_SCENARIO = {
    "nodes": ["o", "d"],
    "edges": [
        {
            "id": "e1",
            "free_flow_time": 13.0,
            "critical_flow": 1.0,
            "max_flow": 2.0,
            "congestion_prob": 0.5,
            "reference": 14.95,
            "tail": "o",
            "head": "d",
        }
    ],
    "od": ["o", "d"],
    "routes": [["e1"]],
    "players": [{"id": 1, "demand": 1.0}],
    "behavior": {"beta": 0.5, "lambda": 2.0, "beta3": 0.65, "weighting": "unit"},
    "fit": {"domain_end": 1.5, "grid_size": 301},
}
