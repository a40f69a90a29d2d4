"""Per-slot message error rate against the k eps + (k - 1) delta bound.

Runs many short sessions with a Hamming(7,4) keyed part over a binary
symmetric pair and prints the empirical slot error rate next to the bound,
showing the reset at each restart.
"""

import argparse

import numpy as np

from keybuf.channels import make_flip_pair
from keybuf.scheme import SchemeConfig, error_bound_trace, keyed_part_error, make_state, slot_error_counts
from keybuf.wiretap_code import error_probability


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--p1", type=float, default=0.02)
    parser.add_argument("--p2", type=float, default=0.25)
    parser.add_argument("--restart", type=int, default=5)
    parser.add_argument("--slots", type=int, default=10)
    parser.add_argument("--runs", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    cfg = SchemeConfig(n=7, M=2, Rs=2 / 7, Rr=2 / 7, code="hamming74", channel=make_flip_pair(args.p1, args.p2),
                       restart_period=args.restart)
    eps = error_probability(make_state(cfg).code, cfg.channel, 1).probability
    errs, trials = keyed_part_error(cfg, 20_000, np.random.default_rng(args.seed))
    delta = errs / trials
    counts = slot_error_counts(cfg, args.slots, args.runs, seed=args.seed)
    bound = error_bound_trace(eps, delta, args.slots, args.restart)
    print(f"# eps = {eps:.5f}, delta = {delta:.5f}")
    print("slot,empirical,bound")
    for k in range(args.slots):
        print(f"{k + 1},{counts[k] / args.runs:.5f},{bound[k]:.5f}")


if __name__ == "__main__":
    main()
