"""Channel codes for the keyed minislots.

Each code maps a payload of ``payload_bits(n)`` bits into ``n`` channel
symbols and back.  Decoders accept the erasure symbol 2 and decode by
minimum disagreement on unerased positions (ML for BSC and BEC, ties to the
lowest codeword).
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .channels import ERASURE


class IdealBitPipe:
    """Error-free transport at ``rate`` bits per channel use."""

    ideal = True

    def __init__(self, rate: float = 1.0):
        if not 0 < rate <= 1:
            raise ValueError("a binary-input bit pipe carries at most 1 bit per use")
        self.rate = rate

    def payload_bits(self, n: int) -> int:
        return int(math.floor(n * self.rate + 1e-9))

    def encode(self, bits, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=np.uint8)
        bits = np.asarray(bits, dtype=np.uint8)
        out[:len(bits)] = bits
        return out

    def decode(self, y, n: int) -> np.ndarray:
        y = np.asarray(y)[: self.payload_bits(n)]
        return np.where(y == ERASURE, 0, y).astype(np.uint8)

    def to_dict(self):
        return {"kind": "ideal", "rate": self.rate}


class Repetition:
    ideal = False

    def __init__(self, r: int = 3):
        if r < 1:
            raise ValueError("repetition factor must be >= 1")
        self.r = r

    @property
    def rate(self) -> float:
        return 1 / self.r

    def payload_bits(self, n: int) -> int:
        return n // self.r

    def encode(self, bits, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=np.uint8)
        rep = np.repeat(np.asarray(bits, dtype=np.uint8), self.r)
        out[:len(rep)] = rep
        return out

    def decode(self, y, n: int) -> np.ndarray:
        k = self.payload_bits(n)
        blocks = np.asarray(y)[: k * self.r].reshape(k, self.r)
        ones = (blocks == 1).sum(axis=1)
        zeros = (blocks == 0).sum(axis=1)
        return (ones > zeros).astype(np.uint8)

    def to_dict(self):
        return {"kind": "repetition", "r": self.r}


_H74_GEN = np.array([
    [1, 0, 0, 0, 1, 1, 0],
    [0, 1, 0, 0, 1, 0, 1],
    [0, 0, 1, 0, 0, 1, 1],
    [0, 0, 0, 1, 1, 1, 1],
], dtype=np.uint8)
_H74_MESSAGES = np.array(list(itertools.product((0, 1), repeat=4)), dtype=np.uint8)
_H74_BOOK = (_H74_MESSAGES.astype(int) @ _H74_GEN % 2).astype(np.uint8)


class Hamming74:
    """Systematic Hamming(7,4); 4 payload bits per 7 channel uses."""

    ideal = False
    rate = 4 / 7

    def payload_bits(self, n: int) -> int:
        return 4 * (n // 7)

    def encode(self, bits, n: int) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8)
        k = self.payload_bits(n)
        padded = np.zeros(k, dtype=np.uint8)
        padded[:len(bits)] = bits
        out = np.zeros(n, dtype=np.uint8)
        blocks = (padded.reshape(-1, 4).astype(int) @ _H74_GEN % 2).astype(np.uint8)
        out[: blocks.size] = blocks.ravel()
        return out

    def decode(self, y, n: int) -> np.ndarray:
        nb = n // 7
        blocks = np.asarray(y)[: nb * 7].reshape(nb, 7)
        out = np.zeros((nb, 4), dtype=np.uint8)
        for i, blk in enumerate(blocks):
            seen = blk != ERASURE
            disagree = ((_H74_BOOK != blk) & seen).sum(axis=1)
            out[i] = _H74_MESSAGES[int(np.argmin(disagree))]
        return out.ravel()

    def to_dict(self):
        return {"kind": "hamming74"}


def make_channel_code(spec) -> IdealBitPipe | Repetition | Hamming74:
    """Build from a name (``"ideal"``, ``"hamming74"``, ``"repetition"``) or dict."""
    if isinstance(spec, (IdealBitPipe, Repetition, Hamming74)):
        return spec
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind", "ideal")
    if kind == "ideal":
        return IdealBitPipe(float(spec.get("rate", 1.0)))
    if kind == "repetition":
        return Repetition(int(spec.get("r", 3)))
    if kind == "hamming74":
        return Hamming74()
    raise ValueError(f"unknown channel code {kind!r}")
