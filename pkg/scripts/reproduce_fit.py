"""Fit the single-edge golden scenario and write the data behind the fit figure.

Outputs (in --out):
  published_fit.json    computed vs published parameters and errors, plus the error-bound margin
  curves.csv     f, exact perceived value, fitted sigmoid, published sigmoid
"""

import argparse
import csv
import json
from pathlib import Path

import numpy as np

from ptroute import SigmoidParams, default_reference, pt_target, sigmoid
from ptroute.cli import PUBLISHED_PARAMS, _format_reproduce, reproduce
from ptroute.scenario import GOLDEN_SCENARIO, parse_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/published_fit")
    ap.add_argument("--points", type=int, default=301)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rep = reproduce()
    (out / "published_fit.json").write_text(json.dumps(rep, indent=2) + "\n")
    print(_format_reproduce(rep))

    cfg = parse_scenario(GOLDEN_SCENARIO)
    edge = cfg.network.edges[0]
    target = pt_target(edge, default_reference(edge), cfg.behavior)
    fitted = SigmoidParams(**{k: rep["fit"]["params"][k] for k in ("d1", "d2", "d3", "d4")})
    published = SigmoidParams(**PUBLISHED_PARAMS)
    f = np.linspace(0.0, 1.5, args.points)
    with open(out / "curves.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["f", "pt_value", "sigma_fitted", "sigma_published"])
        for row in zip(f, target(f), sigmoid(fitted, f), sigmoid(published, f)):
            w.writerow([repr(float(v)) for v in row])
    print(f"wrote {out / 'published_fit.json'} and {out / 'curves.csv'}")


if __name__ == "__main__":
    main()
