"""Long-run secure rate against the number of keyed minislots M.

Prints a CSV of M, simulated rate and the closed form (Rs + C M) / (M + 1)
for a static ideal pipe.
"""

import argparse

import numpy as np

from keybuf.scheme import SchemeConfig, run_session, steady_state_rate_formula


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=8)
    parser.add_argument("--rs", type=float, default=0.25)
    parser.add_argument("--c", type=float, default=1.0)
    parser.add_argument("--max-m", type=int, default=16)
    parser.add_argument("--slots", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    print("M,simulated,formula")
    for M in range(0, args.max_m + 1):
        cfg = SchemeConfig(n=args.n, M=M, Rs=args.rs, Rr=0.0, C=args.c)
        rep = run_session(cfg, args.slots, np.random.default_rng(args.seed))
        rate = rep.steady_state_rate if rep.steady_state_rate is not None else rep.long_run_rate
        print(f"{M},{rate:.6f},{steady_state_rate_formula(args.rs, args.c, M):.6f}")


if __name__ == "__main__":
    main()
