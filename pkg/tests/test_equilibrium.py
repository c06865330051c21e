import numpy as np
import pytest

from ptroute import (
    Edge,
    FlowProfile,
    Network,
    PlayerSpec,
    SigmoidParams,
    SolverConfig,
    best_response,
    brute_force_nash,
    edge_flows,
    player_gradient,
    sigmoid,
    sigmoid_derivatives,
    solve_nash,
    vi_certificate,
)
from ptroute.equilibrium import simplex_grid

from conftest import braess_network, parallel_network

# falling and concave on [0, 1.6]
CONCAVE = SigmoidParams(-3.0, 2.0, 0.3, 1.0)
RISING = SigmoidParams(2.0, 0.5, 0.3, 0.0)


def identical_pair(sig=CONCAVE):
    e = Edge("a", 10.0, 1.0, 2.0)
    net = parallel_network([e, Edge("b", 10.0, 1.0, 2.0)])
    return net, {"a": sig, "b": sig}


def smoothed_value(net, sigmoids, flows):
    """Direct route-by-route sum of sigma at the edge flows."""
    f = dict(zip(net.edge_ids, edge_flows(net, FlowProfile(flows))))
    return sum(sigmoid(sigmoids[k], f[k]) for route in net.routes for k in route)


def grid_best(net, sigmoids, flows, i, step):
    demand = flows[i].sum()
    best_v, best_x = -np.inf, None
    for x in simplex_grid(demand, net.n_routes, step):
        trial = np.array(flows, dtype=float)
        trial[i] = x
        v = smoothed_value(net, sigmoids, trial)
        if v > best_v:
            best_v, best_x = v, x
    return best_x, best_v


class TestGradient:
    def test_singleton_route(self):
        net, sig = identical_pair()
        g = player_gradient(net, sig, FlowProfile([[0.3, 0.7]]), 0)
        np.testing.assert_allclose(g, [sigmoid_derivatives(CONCAVE, 0.3)[0], sigmoid_derivatives(CONCAVE, 0.7)[0]])

    def test_two_identical_edges(self):
        es = [Edge("x", 10.0, 1.0, 2.0, tail="o", head="m"), Edge("y", 10.0, 1.0, 2.0, tail="m", head="d")]
        net = Network(["o", "m", "d"], es, ["o", "d"], [["x", "y"]])
        g = player_gradient(net, {"x": CONCAVE, "y": CONCAVE}, FlowProfile([[0.4]]), 0)
        assert g[0] == pytest.approx(2 * sigmoid_derivatives(CONCAVE, 0.4)[0], rel=1e-14)

    def test_missing_sigmoid(self):
        net, sig = identical_pair()
        with pytest.raises(KeyError):
            player_gradient(net, {"a": CONCAVE}, FlowProfile([[0.5, 0.5]]), 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_braess_central_differences(self, seed, edge_pool):
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(edge_pool), 5, replace=False)
        specs = {k: edge_pool[j][0] for k, j in zip(("oa", "ad", "ob", "bd", "ab"), picks)}
        sig = {k: edge_pool[j][1] for k, j in zip(("oa", "ad", "ob", "bd", "ab"), picks)}
        net = braess_network(specs)
        flows = rng.uniform(0.05, 0.4, size=(2, 3))
        g = player_gradient(net, sig, FlowProfile(flows), 1)
        h = 1e-6
        for r in range(3):
            up, dn = flows.copy(), flows.copy()
            up[1, r] += h
            dn[1, r] -= h
            fd = (smoothed_value(net, sig, up) - smoothed_value(net, sig, dn)) / (2 * h)
            assert g[r] == pytest.approx(fd, rel=1e-5, abs=1e-8)


class TestBestResponse:
    def test_even_split_on_identical_concave_routes(self):
        net, sig = identical_pair()
        br = best_response(net, sig, FlowProfile([[1.0, 0.0]]), 0)
        np.testing.assert_allclose(br.x, [0.5, 0.5], atol=1e-8)
        assert br.converged

    def test_dominating_marginal_value(self):
        # route a's marginal value is positive everywhere, route b's negative
        net, _ = identical_pair()
        br = best_response(net, {"a": RISING, "b": CONCAVE}, FlowProfile([[0.0, 1.0]]), 0)
        np.testing.assert_allclose(br.x, [1.0, 0.0], atol=1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_random_two_route_grid_oracle(self, seed, edge_pool):
        rng = np.random.default_rng(100 + seed)
        j, k = rng.choice(len(edge_pool), 2, replace=False)
        net = parallel_network([edge_pool[j][0], edge_pool[k][0]])
        sig = {edge_pool[j][0].id: edge_pool[j][1], edge_pool[k][0].id: edge_pool[k][1]}
        d_me, d_other = rng.uniform(0.2, 1.0, 2).round(2)
        other = rng.dirichlet([1, 1]) * d_other
        flows = np.array([[d_me, 0.0], other])
        br = best_response(net, sig, FlowProfile(flows), 0)
        x_grid, v_grid = grid_best(net, sig, flows, 0, 1e-3)
        assert br.value >= v_grid - 1e-12
        np.testing.assert_allclose(br.x, x_grid, atol=1e-3)

    def test_zero_demand(self):
        net, sig = identical_pair()
        br = best_response(net, sig, FlowProfile([[0.0, 0.0], [1.0, 0.0]]), 0)
        assert br.x.tolist() == [0.0, 0.0]


class TestSolveNash:
    def test_single_player_even_split(self):
        net, sig = identical_pair()
        res = solve_nash(net, [PlayerSpec(1, 1.0)], sig)
        assert res.converged
        np.testing.assert_allclose(res.profile.flows, [[0.5, 0.5]], atol=1e-8)
        assert res.vi_residual >= -1e-6

    def test_two_identical_players_even_edge_flows(self):
        net, sig = identical_pair()
        res = solve_nash(net, [PlayerSpec(1, 0.8), PlayerSpec(2, 0.8)], sig)
        assert res.converged
        np.testing.assert_allclose(res.edge_flows, [0.8, 0.8], atol=1e-8)
        np.testing.assert_allclose(res.profile.flows.sum(axis=1), [0.8, 0.8])

    def test_asymmetric_matches_brute_force(self, edge_pool):
        (ea, sa), (eb, sb) = edge_pool[0], edge_pool[3]
        net = parallel_network([ea, eb])
        sig = {ea.id: sa, eb.id: sb}
        players = [PlayerSpec(1, 0.7), PlayerSpec(2, 0.4)]
        res = solve_nash(net, players, sig)
        oracle = brute_force_nash(net, players, sig, resolution=0.01)
        assert oracle
        gap = min(np.max(np.abs(res.edge_flows - edge_flows(net, p))) for p in oracle)
        assert gap <= 1e-2

    def test_iteration_cap(self):
        net, sig = identical_pair()
        res = solve_nash(net, [PlayerSpec(1, 1.0)], sig, SolverConfig(max_outer_iterations=1))
        assert not res.converged
        np.testing.assert_allclose(res.profile.flows.sum(), 1.0)

    def test_braess_converges(self, edge_pool):
        specs = {k: edge_pool[j][0] for j, k in enumerate(("oa", "ad", "ob", "bd", "ab"))}
        sig = {k: edge_pool[j][1] for j, k in enumerate(("oa", "ad", "ob", "bd", "ab"))}
        net = braess_network(specs)
        players = [PlayerSpec(1, 0.6), PlayerSpec(2, 0.4)]
        res = solve_nash(net, players, sig)
        assert res.converged and res.vi_residual >= -1e-6
        oracle = brute_force_nash(net, players, sig, resolution=0.02)
        gap = min(np.max(np.abs(res.edge_flows - edge_flows(net, p))) for p in oracle)
        assert gap <= 0.02 + 1e-3


class TestVICertificate:
    def test_worse_route_is_strongly_negative(self):
        net, _ = identical_pair()
        rep = vi_certificate(net, {"a": RISING, "b": CONCAVE}, FlowProfile([[0.0, 1.0]]))
        assert rep.residual < -1.0
        assert not rep.certified

    @pytest.mark.parametrize("seed", range(5))
    def test_sign_agrees_with_improvement_search(self, seed, edge_pool):
        rng = np.random.default_rng(200 + seed)
        j, k = rng.choice(len(edge_pool), 2, replace=False)
        net = parallel_network([edge_pool[j][0], edge_pool[k][0]])
        sig = {edge_pool[j][0].id: edge_pool[j][1], edge_pool[k][0].id: edge_pool[k][1]}
        flows = rng.dirichlet([1, 1], size=2) * np.array([[0.6], [0.5]])
        rep = vi_certificate(net, sig, FlowProfile(flows))
        here = smoothed_value(net, sig, flows)
        improves = any(grid_best(net, sig, flows, i, 1e-3)[1] > here + 1e-9 for i in range(2))
        assert (rep.residual < 0) == improves

    def test_deterministic(self, edge_pool):
        net = parallel_network([edge_pool[1][0], edge_pool[2][0], edge_pool[4][0]])
        sig = {edge_pool[i][0].id: edge_pool[i][1] for i in (1, 2, 4)}
        prof = FlowProfile([[0.2, 0.3, 0.1]])
        assert vi_certificate(net, sig, prof) == vi_certificate(net, sig, prof)


class TestBruteForce:
    def test_single_player_identical_routes(self):
        net, sig = identical_pair()
        found = brute_force_nash(net, [PlayerSpec(1, 1.0)], sig)
        assert any(np.allclose(p.flows, [[0.5, 0.5]]) for p in found)

    def test_single_route(self):
        net = parallel_network([Edge("a", 10.0, 1.0, 2.0)])
        found = brute_force_nash(net, [PlayerSpec(1, 0.7)], {"a": CONCAVE})
        assert len(found) == 1 and found[0].flows.tolist() == [[0.7]]

    def test_too_large(self):
        net, sig = identical_pair()
        with pytest.raises(ValueError):
            brute_force_nash(net, [PlayerSpec(i, 0.1) for i in range(3)], sig)

    def test_grid_is_feasible(self):
        g = simplex_grid(0.37, 3, 0.01)
        np.testing.assert_allclose(g.sum(axis=1), 0.37)
        assert g.min() >= 0 and len(g) == 38 * 39 // 2
