"""Fading wiretap layer: water-filling power control, ergodic rates and the
slow-fading key-buffer session.

Rates are in bits per channel use (log base 2).  Rayleigh fading is handled
two ways: expectations use a quantile grid of the exponential power gain,
simulation draws from the continuous law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelState
from .key_buffer import KeyBuffer
from .scheme import SessionReport, SlotRecord

QUAD_NODES = 10_000
QUAD_NODES_2D = 2_000
_BISECT_ITERS = 200


@dataclass(frozen=True, eq=False)
class FadingDistribution:
    """Law of the per-slot power gains (H, G), with H independent of G.

    Discrete laws keep their joint support; Rayleigh laws are exponential
    power gains with means ``mean_h`` and ``mean_g``.
    """

    kind: str
    h: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    mean_h: float | None = None
    mean_g: float | None = None

    @classmethod
    def discrete(cls, support) -> "FadingDistribution":
        arr = np.asarray(support, dtype=float).reshape(-1, 3)
        h, g, p = arr[:, 0], arr[:, 1], arr[:, 2]
        if np.any(h < 0) or np.any(g < 0):
            raise ValueError("gains must be non-negative")
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise ValueError("probabilities must be non-negative and sum to 1")
        return cls("discrete", h, g, p)

    @classmethod
    def deterministic(cls, H: float, G: float = 0.0) -> "FadingDistribution":
        return cls.discrete([(H, G, 1.0)])

    @classmethod
    def rayleigh(cls, mean_h: float = 1.0, mean_g: float = 1.0) -> "FadingDistribution":
        if mean_h <= 0 or mean_g < 0:
            raise ValueError("Rayleigh means must be positive")
        empty = np.zeros(0)
        return cls("rayleigh", empty, empty, empty, float(mean_h), float(mean_g))

    @classmethod
    def from_dict(cls, d: dict) -> "FadingDistribution":
        kind = d.get("kind")
        if kind == "rayleigh":
            return cls.rayleigh(float(d.get("meanH", 1.0)), float(d.get("meanG", 1.0)))
        if kind == "deterministic":
            return cls.deterministic(float(d["H"]), float(d.get("G", 0.0)))
        if kind == "discrete":
            return cls.discrete(d["support"])
        raise ValueError(f"unknown fading kind {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "rayleigh":
            return {"kind": "rayleigh", "meanH": self.mean_h, "meanG": self.mean_g}
        return {"kind": "discrete", "support": [[float(a), float(b), float(c)] for a, b, c in zip(self.h, self.g, self.p)]}

    def h_marginal(self, nodes: int = QUAD_NODES) -> tuple[np.ndarray, np.ndarray]:
        """Support and weights of H (quantile midpoints for Rayleigh)."""
        if self.kind == "rayleigh":
            return _exp_quantiles(self.mean_h, nodes), np.full(nodes, 1.0 / nodes)
        return _merge(self.h, self.p)

    def g_marginal(self, nodes: int = QUAD_NODES) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "rayleigh":
            return _exp_quantiles(self.mean_g, nodes), np.full(nodes, 1.0 / nodes)
        return _merge(self.g, self.p)

    def check_independent(self, tol: float = 1e-12) -> None:
        if self.kind == "rayleigh":
            return
        hv, hp = self.h_marginal()
        gv, gp = self.g_marginal()
        joint = np.zeros((len(hv), len(gv)))
        for a, b, c in zip(self.h, self.g, self.p):
            joint[np.searchsorted(hv, a), np.searchsorted(gv, b)] += c
        if np.abs(joint - np.outer(hp, gp)).max() > tol:
            raise ValueError("H and G are not independent under this law")

    def prob_main_better(self) -> float:
        """P(H > G)."""
        if self.kind == "rayleigh":
            if self.mean_g == 0:
                return 1.0
            return self.mean_h / (self.mean_h + self.mean_g)
        return float(self.p[self.h > self.g].sum())

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "rayleigh":
            return rng.exponential(self.mean_h, size), rng.exponential(self.mean_g, size) if self.mean_g else np.zeros(size)
        idx = rng.choice(len(self.p), size=size, p=self.p)
        return self.h[idx], self.g[idx]


def _exp_quantiles(mean: float, nodes: int) -> np.ndarray:
    u = (np.arange(nodes) + 0.5) / nodes
    return -mean * np.log1p(-u)


def _merge(values, probs):
    vals, inv = np.unique(values, return_inverse=True)
    return vals, np.bincount(inv, weights=probs, minlength=len(vals))


@dataclass(frozen=True)
class PowerPolicy:
    """P(H) = max(0, level - sigma1_sq / H), with ``level`` = 1/lambda."""

    water_level: float
    sigma1_sq: float
    avg_power: float
    exact_powers: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def lam(self) -> float:
        return 1.0 / self.water_level if self.water_level > 0 else math.inf

    def power(self, H):
        H = np.asarray(H, dtype=float)
        with np.errstate(divide="ignore"):
            floor = np.where(H > 0, self.sigma1_sq / np.where(H > 0, H, 1.0), np.inf)
        out = np.maximum(0.0, self.water_level - floor)
        if self.exact_powers:
            for h, p in self.exact_powers.items():
                out = np.where(H == h, p, out)
        return out if out.ndim else float(out)


def water_fill(dist: FadingDistribution, P_bar: float, sigma1_sq: float = 1.0,
               nodes: int = QUAD_NODES) -> PowerPolicy:
    """Water level with E[max(0, level - sigma1_sq/H)] = P_bar.

    Bisection brackets the level; the active set at the bracket then gives
    the level in closed form, (P_bar + sum_active p sigma/H) / sum_active p.
    """
    if P_bar <= 0:
        raise ValueError("average power must be positive")
    hv, hp = dist.h_marginal(nodes)
    positive = (hv > 0) & (hp > 0)
    if not positive.any():
        raise ValueError("all channel gains are zero")
    hv, hp = hv[positive], hp[positive]
    inv = sigma1_sq / hv

    def spent(level):
        return float(np.sum(hp * np.maximum(0.0, level - inv)))

    lo, hi = 0.0, float(inv.min()) + P_bar / float(hp.sum()) + 1.0
    while spent(hi) < P_bar:
        hi *= 2
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if spent(mid) < P_bar:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    active = inv < hi
    level = (P_bar + float(np.sum(hp[active] * inv[active]))) / float(hp[active].sum())
    exact = {}
    if len(np.unique(hv[active])) == 1:
        # a single active gain receives exactly P_bar / P(active)
        exact[float(hv[active][0])] = P_bar / float(hp[active].sum())
    policy = PowerPolicy(level, sigma1_sq, 0.0, exact)
    avg = float(np.sum(hp * policy.power(hv)))
    return PowerPolicy(level, sigma1_sq, avg, exact)


def inst_rates(state: ChannelState, P: float, sigma1_sq: float = 1.0, sigma2_sq: float = 1.0):
    """(C, C_e, [C - C_e]^+) in bits for one fading state at power P."""
    if P < 0:
        raise ValueError("power must be non-negative")
    c = 0.5 * math.log2(1 + state.H * P / sigma1_sq)
    ce = 0.5 * math.log2(1 + state.G * P / sigma2_sq)
    return c, ce, max(0.0, c - ce)


def ergodic_main_rate(policy: PowerPolicy, dist: FadingDistribution, sigma1_sq: float | None = None,
                      nodes: int = QUAD_NODES) -> float:
    """E_H[1/2 log2(1 + H P(H) / sigma1_sq)]."""
    s1 = policy.sigma1_sq if sigma1_sq is None else sigma1_sq
    hv, hp = dist.h_marginal(nodes)
    return float(np.sum(hp * 0.5 * np.log2(1 + hv * policy.power(hv) / s1)))


def no_csi_secrecy_rate(policy: PowerPolicy, dist: FadingDistribution, sigma1_sq: float | None = None,
                        sigma2_sq: float = 1.0, nodes: int = QUAD_NODES_2D) -> float:
    """1/2 E_{H,G}[log2(1 + H P(H)/s1) - log2(1 + G P(H)/s2)]^+ over the product law."""
    s1 = policy.sigma1_sq if sigma1_sq is None else sigma1_sq
    dist.check_independent()
    hv, hp = dist.h_marginal(nodes)
    gv, gp = dist.g_marginal(nodes)
    ph = policy.power(hv)
    main = np.log2(1 + hv * ph / s1)
    total = 0.0
    step = max(1, 2_000_000 // max(len(gv), 1))
    for i in range(0, len(hv), step):
        eve = np.log2(1 + np.multiply.outer(ph[i:i + step], gv) / sigma2_sq)
        excess = np.maximum(0.0, main[i:i + step, None] - eve)
        total += float(hp[i:i + step] @ (excess @ gp))
    return 0.5 * total


def fading_session_rate(policy: PowerPolicy, dist: FadingDistribution, M: int, sigma1_sq: float | None = None,
                        sigma2_sq: float = 1.0, nodes: int = QUAD_NODES_2D) -> float:
    """Long-run rate of :func:`simulate_fading_session` once the buffer never binds.

    Minislot 1 earns E[C - C_e]^+ and the other M earn E[C], so the rate is
    (E[C - C_e]^+ + M E[C]) / (M + 1); it tends to E[C] only as M grows.
    """
    excess = no_csi_secrecy_rate(policy, dist, sigma1_sq, sigma2_sq, nodes)
    main = ergodic_main_rate(policy, dist, sigma1_sq)
    return (excess + M * main) / (M + 1)


@dataclass
class FadingConfig:
    dist: FadingDistribution
    P_bar: float = 1.0
    sigma1_sq: float = 1.0
    sigma2_sq: float = 1.0
    n: int = 10_000
    M: int = 9
    N1: int = 1
    key_cap_bits: int | None = None
    buffer_capacity: int | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "FadingConfig":
        known = {"P_bar", "sigma1_sq", "sigma2_sq", "n", "M", "N1", "key_cap_bits", "buffer_capacity"}
        unknown = set(d) - known - {"dist", "seed", "slots"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(FadingDistribution.from_dict(d["dist"]), **{k: v for k, v in d.items() if k in known})


def simulate_fading_session(config: FadingConfig, slots: int, rng: np.random.Generator,
                            policy: PowerPolicy | None = None) -> SessionReport:
    """Rate-level slow-fading session.

    Nothing is sent until the first slot with H > G, which is wiretap coded
    in all M + 1 minislots.  Afterwards minislot 1 carries [C - C_e]^+ when
    H > G and the other M minislots carry min(B_k, cap, n M C) key-encrypted
    bits.  Every delivered bit is pushed to the buffer.
    """
    if policy is None:
        policy = water_fill(config.dist, config.P_bar, config.sigma1_sq)
    n, M = config.n, config.M
    uses = n * (M + 1)
    H, G = config.dist.sample(rng, slots)
    P = policy.power(H) if slots else np.zeros(0)
    c_main = 0.5 * np.log2(1 + H * P / config.sigma1_sq)
    c_eve = 0.5 * np.log2(1 + G * P / config.sigma2_sq)
    excess = np.maximum(0.0, c_main - c_eve)
    buf = KeyBuffer(config.buffer_capacity)
    cap = config.key_cap_bits
    started = False
    records = []
    total = 0
    for k in range(slots):
        slot = k + 1
        level, head = buf.level, buf.oldest_origin
        better = bool(H[k] > G[k])
        wiretap_bits = key_bits = 0
        newest = -1
        if not started:
            if better:
                started = True
                wiretap_bits = int(math.floor(uses * excess[k]))
        else:
            if better:
                wiretap_bits = int(math.floor(n * excess[k]))
            want = int(math.floor(n * M * c_main[k]))
            key_bits = min(level, want) if cap is None else min(level, cap, want)
            if key_bits:
                newest = max(o for o, _ in buf.take_runs(key_bits))
        delivered = wiretap_bits + key_bits
        dropped = buf.push(delivered, slot) if delivered else 0
        total += delivered
        records.append(SlotRecord(
            slot=slot, rate=delivered / uses, delivered_bits=delivered, errors=0, B_k=level, pushed=delivered,
            taken=key_bits, dropped=dropped, oldest_origin=head, newest_key_origin=newest,
            H=float(H[k]), G=float(G[k]), P=float(P[k])))
    long_run = total / (slots * uses) if slots else 0.0
    extra = {
        "avg_power": float(np.mean(P)) if slots else 0.0,
        "mean_inst_capacity": float(np.mean(c_main)) if slots else 0.0,
        "water_level": policy.water_level,
        "P_bar": config.P_bar,
    }
    return SessionReport(records, uses, long_run, None, 0, kind="fading", extra=extra)
