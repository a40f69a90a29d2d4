"""Wiretap encoder/decoder (random binning and nested linear coset codes)
and exact leakage computation at small blocklength.

Codeword index ``i`` belongs to message bin ``i >> k_r``; for coset codes
codeword ``(w << k_r) | r`` is ``w·G_s xor r·G_r`` with ``G_r`` spanning a
subspace of ker(parity_check) and ``parity_check @ G_s.T = I``, so the
syndrome of every codeword in bin ``w`` is ``w``.
"""

from __future__ import annotations

import base64
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .channels import ERASURE, WiretapChannel, transmit
from .infotheory import entropy, wilson_interval

MAX_BLOCKLENGTH = 16
ENUMERATION_BUDGET = 2 ** 30
_MAX_REDRAWS = 100


class RankError(RuntimeError):
    """No full-rank matrix found within the redraw limit."""


class EnumerationBudgetError(RuntimeError):
    """Exact computation refused: state space exceeds the budget."""


def bits_to_int(bits) -> int:
    out = 0
    for b in np.asarray(bits).tolist():
        out = (out << 1) | int(b)
    return out


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - j)) & 1 for j in range(width)], dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class BinningCode:
    """A blocklength-``n`` wiretap code with ``2**k_s`` bins of ``2**k_r`` codewords."""

    n: int
    k_s: int
    k_r: int
    structure: str  # "coset" or "random"
    codebook: np.ndarray = field(repr=False)
    parity_check: np.ndarray | None = field(default=None, repr=False)
    message_gen: np.ndarray | None = field(default=None, repr=False)
    random_gen: np.ndarray | None = field(default=None, repr=False)
    seed: int | None = None

    @property
    def num_messages(self) -> int:
        return 1 << self.k_s

    @property
    def bin_size(self) -> int:
        return 1 << self.k_r

    def bin_of(self, index):
        return np.asarray(index) >> self.k_r

    def bin(self, w: int) -> np.ndarray:
        return self.codebook[w << self.k_r:(w + 1) << self.k_r]

    def to_dict(self) -> dict:
        d = {"structure": self.structure, "n": self.n, "k_s": self.k_s, "k_r": self.k_r, "seed": self.seed}
        if self.structure == "coset":
            width = (self.n + 3) // 4
            for key in ("parity_check", "message_gen", "random_gen"):
                d[key] = [format(v, f"0{width}x") for v in gf2.rows_to_ints(getattr(self, key))]
        else:
            d["codebook"] = base64.b64encode(np.packbits(self.codebook, axis=None).tobytes()).decode("ascii")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BinningCode":
        n, k_s, k_r = int(d["n"]), int(d["k_s"]), int(d["k_r"])
        if d["structure"] == "coset":
            mats = {key: gf2.ints_to_rows([int(h, 16) for h in d[key]], n)
                    for key in ("parity_check", "message_gen", "random_gen")}
            return _coset_code(n, k_s, k_r, seed=d.get("seed"), **mats)
        raw = np.frombuffer(base64.b64decode(d["codebook"]), dtype=np.uint8)
        size = (1 << (k_s + k_r)) * n
        book = np.unpackbits(raw)[:size].reshape(-1, n)
        return cls(n, k_s, k_r, "random", book, seed=d.get("seed"))


def _coset_code(n, k_s, k_r, parity_check, message_gen, random_gen, seed=None) -> BinningCode:
    k = k_s + k_r
    gen = np.vstack([message_gen, random_gen]).astype(np.uint8)
    coeffs = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.uint8).reshape(-1, k)
    book = gf2.matmul(coeffs, gen) if k else np.zeros((1, n), dtype=np.uint8)
    return BinningCode(n, k_s, k_r, "coset", book, parity_check.astype(np.uint8),
                       message_gen.astype(np.uint8), random_gen.astype(np.uint8), seed)


def _full_rank_draw(rng, rows, cols):
    for _ in range(_MAX_REDRAWS):
        m = rng.integers(0, 2, size=(rows, cols), dtype=np.uint8)
        if gf2.rank(m) == rows:
            return m
    raise RankError(f"no full-rank {rows}x{cols} matrix after {_MAX_REDRAWS} draws")


def build_binning_code(n: int, R_s: float, R_r: float, rng: np.random.Generator,
                       structure: str = "coset", seed: int | None = None) -> BinningCode:
    """Draw a wiretap code with ``k_s = round(n R_s)`` and ``k_r = round(n R_r)``."""
    k_s, k_r = int(round(n * R_s)), int(round(n * R_r))
    if n < 1 or n > MAX_BLOCKLENGTH:
        raise ValueError(f"blocklength must be in 1..{MAX_BLOCKLENGTH}, got {n}")
    if k_s + k_r > n:
        raise ValueError(f"rate overflow: k_s + k_r = {k_s + k_r} > n = {n}")
    if k_s < 0 or k_r < 0:
        raise ValueError("rates must be non-negative")
    if structure == "random":
        book = rng.integers(0, 2, size=(1 << (k_s + k_r), n), dtype=np.uint8)
        return BinningCode(n, k_s, k_r, "random", book, seed=seed)
    if structure != "coset":
        raise ValueError(f"unknown code structure {structure!r}")

    parity = _full_rank_draw(rng, k_s, n) if k_s else np.zeros((0, n), dtype=np.uint8)
    kernel = gf2.nullspace(parity)
    mix = _full_rank_draw(rng, k_r, kernel.shape[0]) if k_r else np.zeros((0, kernel.shape[0]), dtype=np.uint8)
    random_gen = gf2.matmul(mix, kernel) if k_r else np.zeros((0, n), dtype=np.uint8)
    message_gen = np.zeros((k_s, n), dtype=np.uint8)
    for i in range(k_s):
        unit = np.zeros(k_s, dtype=np.uint8)
        unit[i] = 1
        shift = gf2.matmul(rng.integers(0, 2, size=(1, kernel.shape[0]), dtype=np.uint8), kernel)[0]
        message_gen[i] = gf2.solve(parity, unit) ^ shift
    return _coset_code(n, k_s, k_r, parity, message_gen, random_gen, seed)


def wiretap_encode(code: BinningCode, w: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random codeword from bin ``w``."""
    if not 0 <= w < code.num_messages:
        raise ValueError(f"message {w} out of range 0..{code.num_messages - 1}")
    r = int(rng.integers(0, code.bin_size))
    return code.codebook[(w << code.k_r) | r].copy()


def _likelihood_scores(codebook, y, transition):
    # Scores depend only on per-codeword counts of (x, y) pairs, so codewords
    # with equal likelihood get bitwise-equal scores and argmax ties resolve
    # to the lowest index.
    with np.errstate(divide="ignore"):
        logw = np.log(transition)
    y = np.asarray(y)
    scores = np.zeros(len(codebook))
    for xv in range(transition.shape[0]):
        for yv in range(transition.shape[1]):
            count = ((codebook == xv) & (y == yv)).sum(axis=1)
            if np.isneginf(logw[xv, yv]):
                scores = np.where(count > 0, -np.inf, scores)
            else:
                scores = scores + count * logw[xv, yv]
    return scores


def wiretap_decode(code: BinningCode, y, ch: WiretapChannel | None = None) -> int:
    """Maximum-likelihood bin of ``y`` (Bob's channel law; noiseless if ``ch`` is None)."""
    y = np.asarray(y)
    if ch is None:
        transition = np.eye(2)
        if np.any(y == ERASURE):
            transition = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    else:
        transition = ch.bob
    scores = _likelihood_scores(code.codebook, y, transition)
    return int(code.bin_of(int(np.argmax(scores))))


@dataclass(frozen=True)
class LeakageReport:
    mutual_info_bits: float
    n: int
    method: str  # "exhaustive", "rank" or "montecarlo"
    samples: int | None = None
    std_err: float | None = None

    @property
    def per_symbol(self) -> float:
        return self.mutual_info_bits / self.n


def _output_law(words: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Sum over ``words`` of the product law prod_i kernel[x_i, :] on outputs.

    Recurses on the leading coordinate so shared prefixes are combined once;
    output index has coordinate 0 as the most significant digit.
    """
    if words.shape[1] == 0:
        return np.array([float(len(words))])
    acc = None
    for b in range(kernel.shape[0]):
        sub = words[words[:, 0] == b, 1:]
        if len(sub):
            term = np.kron(kernel[b], _output_law(sub, kernel))
            acc = term if acc is None else acc + term
    return acc


def bin_output_laws(code: BinningCode, kernel: np.ndarray) -> np.ndarray:
    """``laws[w, z] = p(z | w)`` for every output pattern ``z``."""
    return np.stack([_output_law(code.bin(w), kernel) / code.bin_size for w in range(code.num_messages)])


def _exhaustive_leakage(code, kernel):
    laws = bin_output_laws(code, kernel)
    marginal = laws.mean(axis=0)
    return entropy(marginal) - float(np.mean([entropy(row) for row in laws]))


def rank_leakage(code: BinningCode, eve_erasure: float) -> float:
    """I(W; Z^n) for a coset code seen through an erasure channel.

    For an unerased set S, I(W; X_S) = rank(G_S) - rank(G_r,S); the erasure
    pattern is independent of W, so the leakage is its expectation over S.
    """
    if code.structure != "coset":
        raise ValueError("rank-based leakage needs a linear coset code")
    n = code.n
    full = gf2.rows_to_ints(np.vstack([code.message_gen, code.random_gen]))
    rand = gf2.rows_to_ints(code.random_gen)
    total = 0.0
    keep = 1.0 - eve_erasure
    for mask in range(1 << n):
        seen = bin(mask).count("1")
        prob = keep ** seen * eve_erasure ** (n - seen)
        if prob == 0.0:
            continue
        gap = gf2.rank_ints([r & mask for r in full]) - gf2.rank_ints([r & mask for r in rand])
        if gap:
            total += prob * gap
    return total


def exact_leakage(code: BinningCode, ch: WiretapChannel, method: str = "exhaustive") -> LeakageReport:
    """Exact I(W; Z^n) for uniform W through Eve's marginal channel."""
    if not ch.discrete:
        raise ValueError("exact leakage needs a discrete channel")
    if method == "rank":
        if ch.kind != "erasure":
            raise ValueError("rank-based leakage is defined for erasure channels")
        return LeakageReport(rank_leakage(code, ch.p2), code.n, "rank")
    if method != "exhaustive":
        raise ValueError(f"unknown method {method!r}")
    eve = ch.eve
    states = len(code.codebook) * eve.shape[1] ** code.n
    if states > ENUMERATION_BUDGET:
        raise EnumerationBudgetError(f"{states} states exceeds budget {ENUMERATION_BUDGET}")
    return LeakageReport(_exhaustive_leakage(code, eve), code.n, "exhaustive")


@dataclass(frozen=True)
class ErrorEstimate:
    probability: float
    low: float
    high: float
    method: str  # "exact" or "montecarlo"
    trials: int | None = None


def exact_error_probability(code: BinningCode, ch: WiretapChannel) -> float:
    """P(decoded bin != W) under uniform W, by enumerating Bob's outputs."""
    bob = ch.bob
    outputs = np.array(list(itertools.product(range(bob.shape[1]), repeat=code.n)), dtype=np.uint8)
    decoded = np.array([wiretap_decode(code, y, ch) for y in outputs])
    laws = bin_output_laws(code, bob)
    correct = sum(laws[w, decoded == w].sum() for w in range(code.num_messages))
    return float(1.0 - correct / code.num_messages)


def error_probability(code: BinningCode, ch: WiretapChannel, trials: int,
                      rng: np.random.Generator | None = None, exact: bool | None = None) -> ErrorEstimate:
    """Message error probability of ML decoding at Bob.

    Exact enumeration is used when ``exact`` is True, or when it is None and
    the output space is small (at most 3**8 patterns); otherwise Monte Carlo
    with a Wilson 95% interval.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if exact is None:
        exact = ch.bob.shape[1] ** code.n <= 3 ** 8 and rng is None
    if exact:
        p = exact_error_probability(code, ch)
        return ErrorEstimate(p, p, p, "exact")
    if rng is None:
        rng = np.random.default_rng(0)
    errors = 0
    for _ in range(trials):
        w = int(rng.integers(0, code.num_messages))
        y, _ = transmit(ch, wiretap_encode(code, w, rng), rng)
        errors += wiretap_decode(code, y, ch) != w
    low, high = wilson_interval(errors, trials)
    return ErrorEstimate(errors / trials, low, high, "montecarlo", trials)
