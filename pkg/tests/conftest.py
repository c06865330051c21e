import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ptroute import (
    BehaviorParams,
    Edge,
    FitConfig,
    Network,
    PlayerSpec,
    fit_sigmoid,
    pt_target,
    default_reference,
)

settings.register_profile("ci", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("dev", max_examples=50, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "dev"))

GOLDEN_EDGE = Edge("e1", free_flow_time=13.0, critical_flow=1.0, max_flow=2.0, congestion_prob=0.5, reference=14.95)
GOLDEN_BEHAVIOR = BehaviorParams(beta=0.5, lam=2.0, beta3=0.65, weighting="unit")


def parallel_network(edges):
    """One origin, one destination, one single-edge route per edge."""
    edges = [Edge(e.id, e.free_flow_time, e.critical_flow, e.max_flow, e.congestion_prob, e.reference, "o", "d") for e in edges]
    return Network(nodes=["o", "d"], edges=edges, od_pair=["o", "d"], routes=[[e.id] for e in edges])


def braess_network(edges_by_id):
    """Four-node network with the oa-ab-bd bridge route; ``edges_by_id`` maps oa/ad/ob/bd/ab to Edge."""
    ends = {"oa": ("o", "a"), "ad": ("a", "d"), "ob": ("o", "b"), "bd": ("b", "d"), "ab": ("a", "b")}
    edges = []
    for eid, (t, h) in ends.items():
        e = edges_by_id[eid]
        edges.append(Edge(eid, e.free_flow_time, e.critical_flow, e.max_flow, e.congestion_prob, e.reference, t, h))
    return Network(
        nodes=["o", "a", "b", "d"],
        edges=edges,
        od_pair=["o", "d"],
        routes=[["oa", "ad"], ["ob", "bd"], ["oa", "ab", "bd"]],
    )


def random_edge(rng, eid):
    crit = float(rng.uniform(0.6, 1.2))
    return Edge(eid, float(rng.uniform(5, 20)), crit, 2.0 * crit, float(rng.uniform(0.2, 0.8)))


def random_behavior(rng):
    return BehaviorParams(beta=float(rng.uniform(0.3, 0.8)), lam=float(rng.uniform(1.0, 3.0)), weighting="unit")


def fitted_pool(seed, size):
    """Edges with random BPR and PT parameters and their fitted sigmoids."""
    rng = np.random.default_rng(seed)
    pool = []
    for k in range(size):
        e = random_edge(rng, f"p{k}")
        b = random_behavior(rng)
        kappa = 1.5 * e.critical_flow
        fit = fit_sigmoid(pt_target(e, default_reference(e), b), kappa, FitConfig())
        pool.append((e, fit.params))
    return pool


@pytest.fixture(scope="session")
def golden_fit():
    return fit_sigmoid(pt_target(GOLDEN_EDGE, default_reference(GOLDEN_EDGE), GOLDEN_BEHAVIOR), 1.5, FitConfig())


@pytest.fixture(scope="session")
def edge_pool():
    return fitted_pool(seed=7, size=8)


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion; printed in the terminal summary."""

    def record(number, name, passed, detail, elapsed, budget):
        in_time = elapsed < budget
        ok = passed and in_time
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number} {name}: {detail} ({elapsed:.2f}s, budget {budget:g}s)"
        _ACCEPTANCE.append((number, line))
        print(line)
        assert passed, line
        assert in_time, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
