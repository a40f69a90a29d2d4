"""Degraded wiretap channel models, sampling and single-letter capacities.

Discrete channels are built as physical cascades X -> Y -> Z, so the joint
law p(y, z | x) is available as a finite table and Eve's output can be sampled
from Bob's.  Binary input throughout; the erasure symbol is 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .infotheory import channel_mutual_information

ERASURE = 2

_GRID_STEP = 1e-4
_GOLDEN_TOL = 1e-10


@dataclass(frozen=True)
class ChannelState:
    """Per-slot fading power gains (H to Bob, G to Eve)."""

    H: float
    G: float

    def __post_init__(self):
        if not (self.H >= 0 and self.G >= 0):
            raise ValueError(f"channel gains must be non-negative, got H={self.H}, G={self.G}")


@dataclass(frozen=True, eq=False)
class WiretapChannel:
    """A degraded wiretap channel.

    ``kind`` is ``"erasure"``, ``"flip"`` or ``"gaussian"``.  For the
    discrete kinds ``p1``/``p2`` are Bob's and Eve's erasure (or crossover)
    probabilities and ``transition[x, y, z]`` is the joint law.
    """

    kind: str
    p1: float = 0.0
    p2: float = 0.0
    sigma1_sq: float = 1.0
    sigma2_sq: float = 1.0
    transition: np.ndarray | None = field(default=None, repr=False)

    @property
    def discrete(self) -> bool:
        return self.kind in ("erasure", "flip")

    @property
    def degrade(self) -> float:
        """Probability of the extra Y -> Z step (erasure or flip)."""
        if self.kind == "erasure":
            return 0.0 if self.p1 >= 1 else (self.p2 - self.p1) / (1 - self.p1)
        if self.kind == "flip":
            return 0.0 if self.p1 >= 0.5 else (self.p2 - self.p1) / (1 - 2 * self.p1)
        raise ValueError("gaussian channels have no cascade parameter")

    @property
    def bob(self) -> np.ndarray:
        """Bob's marginal p(y|x)."""
        return self.transition.sum(axis=2)

    @property
    def eve(self) -> np.ndarray:
        """Eve's marginal p(z|x)."""
        return self.transition.sum(axis=1)

    @property
    def output_size(self) -> int:
        return self.transition.shape[1]

    def to_dict(self) -> dict:
        if self.kind == "erasure":
            return {"kind": "erasure", "eps1": self.p1, "eps2": self.p2}
        if self.kind == "flip":
            return {"kind": "flip", "p1": self.p1, "p2": self.p2}
        return {"kind": "gaussian", "sigma1_sq": self.sigma1_sq, "sigma2_sq": self.sigma2_sq}

    @classmethod
    def from_dict(cls, d: dict) -> "WiretapChannel":
        kind = d.get("kind")
        if kind == "erasure":
            return make_erasure_pair(float(d["eps1"]), float(d["eps2"]))
        if kind == "flip":
            return make_flip_pair(float(d["p1"]), float(d["p2"]))
        if kind == "gaussian":
            return make_gaussian(float(d.get("sigma1_sq", 1.0)), float(d.get("sigma2_sq", 1.0)))
        raise ValueError(f"unknown channel kind {kind!r}")


def make_erasure_pair(eps1: float, eps2: float) -> WiretapChannel:
    """Binary erasure pair; Eve's output erases Bob's with extra probability."""
    if not 0 <= eps1 <= 1 or not 0 <= eps2 <= 1:
        raise ValueError("erasure probabilities must lie in [0, 1]")
    if eps2 < eps1:
        raise ValueError(f"not degraded: eps2={eps2} < eps1={eps1}")
    q = 0.0 if eps1 >= 1 else (eps2 - eps1) / (1 - eps1)
    t = np.zeros((2, 3, 3))
    for x in (0, 1):
        t[x, x, x] = (1 - eps1) * (1 - q)
        t[x, x, ERASURE] = (1 - eps1) * q
        t[x, ERASURE, ERASURE] = eps1
    return WiretapChannel("erasure", eps1, eps2, transition=t)


def make_flip_pair(p1: float, p2: float) -> WiretapChannel:
    """Binary symmetric pair with Eve's output a further BSC of Bob's."""
    if not 0 <= p1 <= p2 <= 0.5:
        raise ValueError(f"need 0 <= p1 <= p2 <= 1/2, got p1={p1}, p2={p2}")
    q = 0.0 if p1 >= 0.5 else (p2 - p1) / (1 - 2 * p1)
    t = np.zeros((2, 2, 2))
    for x in (0, 1):
        for y in (0, 1):
            py = 1 - p1 if y == x else p1
            for z in (0, 1):
                t[x, y, z] = py * (1 - q if z == y else q)
    return WiretapChannel("flip", p1, p2, transition=t)


def make_gaussian(sigma1_sq: float = 1.0, sigma2_sq: float = 1.0) -> WiretapChannel:
    if sigma1_sq <= 0 or sigma2_sq <= 0:
        raise ValueError("noise variances must be positive")
    return WiretapChannel("gaussian", sigma1_sq=sigma1_sq, sigma2_sq=sigma2_sq)


def transmit(ch: WiretapChannel, x, rng: np.random.Generator, state: ChannelState | None = None):
    """Send ``x`` once; returns Bob's and Eve's outputs ``(y, z)``.

    Discrete kinds draw two uniforms per coordinate (Bob's event, then Eve's
    extra degradation), so runs sharing a seed share noise.
    """
    if ch.kind == "gaussian":
        if state is None:
            raise ValueError("gaussian transmission needs a ChannelState")
        x = np.asarray(x, dtype=float)
        y = math.sqrt(state.H) * x + rng.normal(0.0, math.sqrt(ch.sigma1_sq), x.shape)
        z = math.sqrt(state.G) * x + rng.normal(0.0, math.sqrt(ch.sigma2_sq), x.shape)
        return y, z

    x = np.asarray(x)
    if x.size and not np.isin(x, (0, 1)).all():
        raise ValueError("channel input must be binary")
    x = x.astype(np.uint8)
    u1 = rng.random(x.shape)
    u2 = rng.random(x.shape)
    q = ch.degrade
    if ch.kind == "erasure":
        y = np.where(u1 < ch.p1, ERASURE, x).astype(np.uint8)
        z = np.where((y == ERASURE) | (u2 < q), ERASURE, y).astype(np.uint8)
    else:
        y = (x ^ (u1 < ch.p1)).astype(np.uint8)
        z = (y ^ (u2 < q)).astype(np.uint8)
    return y, z


def _binary_input_mi(p, transition):
    """I(X;Y) for P(X=1) = p (array or scalar) over a binary-input channel."""
    p = np.asarray(p, dtype=float)
    py = np.multiply.outer(1 - p, transition[0]) + np.multiply.outer(p, transition[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        h_y = -np.sum(np.where(py > 0, py * np.log2(py), 0.0), axis=-1)
    h_rows = [-np.sum(r[r > 0] * np.log2(r[r > 0])) for r in transition]
    return h_y - ((1 - p) * h_rows[0] + p * h_rows[1])


def _maximise_binary(objective) -> float:
    """Max of ``objective(p)`` over p in [0, 1]: grid, then golden-section refine."""
    grid = np.linspace(0.0, 1.0, int(round(1 / _GRID_STEP)) + 1)
    values = objective(grid)
    i = int(np.argmax(values))
    best = float(values[i])
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = float(objective(c)), float(objective(d))
    while b - a > _GOLDEN_TOL:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = float(objective(c))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = float(objective(d))
    return max(best, fc, fd)


def _require_discrete(ch: WiretapChannel):
    if not ch.discrete:
        raise ValueError("capacity optimisation needs a discrete channel")


def secrecy_capacity(ch: WiretapChannel) -> float:
    """max over p(x) of I(X;Y) - I(X;Z), clipped at zero."""
    _require_discrete(ch)
    bob, eve = ch.bob, ch.eve
    return max(0.0, _maximise_binary(lambda p: _binary_input_mi(p, bob) - _binary_input_mi(p, eve)))


def main_capacity(ch: WiretapChannel) -> float:
    """Capacity of the Alice-Bob marginal."""
    _require_discrete(ch)
    bob = ch.bob
    return max(0.0, _maximise_binary(lambda p: _binary_input_mi(p, bob)))


def input_mutual_informations(ch: WiretapChannel, p: float) -> tuple[float, float]:
    """(I(X;Y), I(X;Z)) at P(X=1) = p."""
    _require_discrete(ch)
    px = np.array([1 - p, p])
    return channel_mutual_information(px, ch.bob), channel_mutual_information(px, ch.eve)
