"""Spread of the normalized Rankin-Selberg sum for E(., 1/2 + iT) on PSL(2, Z).

For each T, prints max / min of S(X) / (X (1 + log X)) over X in [1, Xmax],
both over the continuum (left limits at the integers included) and over
the integers only.
"""
import argparse

import numpy as np

from horolab.automorphic import eisenstein_expansion_n1, rankin_selberg_profile


def spread(T, X_max):
    ex = eisenstein_expansion_n1(0.5 + 1j * T, X_max)
    ms = np.arange(1, X_max + 1, dtype=float)
    S = rankin_selberg_profile(ex, ms)
    if not np.any(S):
        return None, None
    norm = ms * (1 + np.log(ms))
    at = S / norm
    below = S[:-1] / norm[1:]
    both = np.concatenate([at, below])
    return both.max() / both.min(), at.max() / at.min()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, nargs="+", default=[0.0, 1.0, 5.0])
    ap.add_argument("--xmax", type=int, default=100)
    args = ap.parse_args(argv)
    for T in args.T:
        cont, grid = spread(T, args.xmax)
        if cont is None:
            print(f"T={T:g}: series vanishes identically")
        else:
            print(f"T={T:g}: continuum {cont:.3f}  integers {grid:.3f}")


if __name__ == "__main__":
    main()
