"""Equilibrium edge flows of a scenario as total demand is scaled, checked against brute force.

Each player's demand is multiplied by every factor in --factors; the solver's edge
flows and the distance to the nearest grid equilibrium go to sweep.csv.
"""

import argparse
import csv
import dataclasses
from pathlib import Path

import numpy as np

from ptroute import PlayerSpec, brute_force_nash, edge_flows, solve_nash
from ptroute.cli import fit_edges
from ptroute.scenario import load_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="scenarios/braess.json")
    ap.add_argument("--out", default="results/sweep")
    ap.add_argument("--factors", type=float, nargs="+", default=[0.25, 0.5, 0.75, 1.0, 1.25])
    ap.add_argument("--resolution", type=float, default=0.02)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cfg = load_scenario(args.scenario)
    sig = {eid: r.params for eid, r in fit_edges(cfg).items()}
    net = cfg.network
    rows = []
    for factor in args.factors:
        players = [dataclasses.replace(p, total_demand=round(p.total_demand * factor, 6)) for p in cfg.players]
        res = solve_nash(net, players, sig, cfg.solver)
        oracle = brute_force_nash(net, players, sig, resolution=args.resolution)
        gap = min(float(np.max(np.abs(res.edge_flows - edge_flows(net, p)))) for p in oracle) if oracle else float("nan")
        rows.append([factor, res.converged, res.vi_residual, gap, *res.edge_flows])
        flows = " ".join(f"{eid}={f:.4f}" for eid, f in zip(net.edge_ids, res.edge_flows))
        print(f"x{factor:<5} converged={res.converged} vi={res.vi_residual:.1e} gap={gap:.4f}  {flows}")
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["factor", "converged", "vi_residual", "oracle_gap", *net.edge_ids])
        w.writerows(rows)
    print(f"wrote {out / 'sweep.csv'}")


if __name__ == "__main__":
    main()
