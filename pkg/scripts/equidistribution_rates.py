"""Measure horosphere equidistribution rates for the built-in groups.

    python scripts/equidistribution_rates.py psl2z --out out/rates
    python scripts/equidistribution_rates.py picard --draws 0

Writes one CSV per run plus a summary line per run on stdout.
"""
import argparse
import os

import numpy as np

from horolab.groups import get_group
from horolab.horosphere import build_pointpair_test_function, run_equidistribution
from horolab.mobius import UpperHalfPoint

PRESETS = {
    # centre, radius, kappa, gamma, q, quad_res, smallest y exponent
    "psl2z": ([0.1], 1.3, 0.8, 1.0, [0.0], 64.0, 256, 14),
    "picard": ([0.3, 0.1], 0.9, 0.8, 0.5, [0.2, 0.1], 16.0, 192, 10),
}


def write_csv(path, res):
    with open(path, "w") as fh:
        fh.write("\n".join(res.csv_rows()) + "\n")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("group", choices=sorted(PRESETS))
    ap.add_argument("--out", default="out/rates")
    ap.add_argument("--draws", type=int, default=10, help="extra runs with random gamma and kappa")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    x, y0, radius, kappa, gamma, q, quad_res, jmax = PRESETS[args.group]
    G = get_group(args.group)
    f = build_pointpair_test_function(G, UpperHalfPoint(np.array(x), y0), radius)
    ys = [2.0**-j for j in range(4, jmax + 1)]
    os.makedirs(args.out, exist_ok=True)

    runs = [("base", kappa, gamma)]
    rng = np.random.default_rng(args.seed)
    for k in range(args.draws):
        runs.append((f"draw{k}", float(rng.uniform(0.25, 1.0)), list(rng.uniform(-0.5, 0.5, G.n))))
    for tag, kap, gam in runs:
        res = run_equidistribution(G, f, "bump", ys, kappa=kap, gamma=gam, q=q, quad_res=quad_res)
        write_csv(os.path.join(args.out, f"{args.group}_{tag}.csv"), res)
        g = ",".join(f"{t:.3f}" for t in gam)
        print(f"{tag:7s} kappa={kap:.3f} gamma=({g}) rho={res.rho:.3f} residual={res.residual:.3f} "
              f"predicted={res.predicted:.2f} {res.runtime:.0f}s", flush=True)


if __name__ == "__main__":
    main()
