"""Entropy and mutual-information helpers shared by the channel and audit code.

All quantities are in bits.
"""

import math

import numpy as np


def entropy(p):
    """Shannon entropy of a probability vector (any shape, summed over all cells)."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def binary_entropy(p):
    """h(p) = -p log p - (1-p) log (1-p), vectorised; h(0) = h(1) = 0."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    mask = (p > 0) & (p < 1)
    q = p[mask]
    out[mask] = -q * np.log2(q) - (1 - q) * np.log2(1 - q)
    return out if out.ndim else float(out)


def channel_mutual_information(px, transition):
    """I(X;Y) for input law ``px`` and row-stochastic ``transition[x, y]``."""
    px = np.asarray(px, dtype=float)
    transition = np.asarray(transition, dtype=float)
    py = px @ transition
    h_y_given_x = sum(px[i] * entropy(transition[i]) for i in range(len(px)) if px[i] > 0)
    return entropy(py) - h_y_given_x


def mutual_information_joint(joint):
    """I(A;B) from a 2-D joint probability table ``joint[a, b]``."""
    joint = np.asarray(joint, dtype=float)
    return entropy(joint.sum(axis=1)) + entropy(joint.sum(axis=0)) - entropy(joint)


def wilson_interval(successes, trials, z=1.959963984540054):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)
