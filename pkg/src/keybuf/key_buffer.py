"""FIFO use-once key buffer with origin-slot tags.

Bits are stored as segments ``[origin, bits]``; ``bits`` may be ``None`` for
content-free accounting (the fading simulator only tracks counts).  Overflow
drops from the tail of the incoming push, never stored bits.
"""

from __future__ import annotations

import hashlib
from collections import deque

import numpy as np


class BufferUnderflow(RuntimeError):
    """``take`` asked for more bits than the buffer holds."""


class OriginRegression(ValueError):
    """A push was tagged with an origin slot older than stored bits."""


class KeyBuffer:
    def __init__(self, capacity: int | None = None):
        if capacity is not None and capacity < 0:
            raise ValueError("capacity must be non-negative")
        self.capacity = capacity
        self._segments: deque[list] = deque()  # [origin, bits-or-None, length]
        self._level = 0
        self.pushed_total = 0
        self.taken_total = 0
        self.dropped_total = 0
        self._newest_origin: int | None = None
        self._chain = hashlib.sha256()

    def __len__(self) -> int:
        return self._level

    @property
    def level(self) -> int:
        return self._level

    @property
    def oldest_origin(self) -> int:
        """Origin slot of the head bit, or -1 when empty."""
        return self._segments[0][0] if self._segments else -1

    def push(self, bits, origin_slot: int) -> int:
        """Append ``bits`` (0/1 array, or an int count of untracked bits); returns bits dropped."""
        if self._newest_origin is not None and origin_slot < self._newest_origin:
            raise OriginRegression(f"origin {origin_slot} older than stored origin {self._newest_origin}")
        if isinstance(bits, (int, np.integer)):
            length, content = int(bits), None
        else:
            content = np.asarray(bits, dtype=np.uint8).ravel()
            length = len(content)
        if length < 0:
            raise ValueError("cannot push a negative number of bits")
        room = length if self.capacity is None else max(0, min(length, self.capacity - self._level))
        dropped = length - room
        self.dropped_total += dropped
        if room == 0:
            return dropped
        if content is not None:
            content = content[:room].copy()
            self._chain.update(content.tobytes())
        else:
            self._chain.update(b"#%d" % room)
        self._segments.append([origin_slot, content, room])
        self._level += room
        self.pushed_total += room
        self._newest_origin = origin_slot
        return dropped

    def take_runs(self, m: int) -> list[tuple[int, int]]:
        """Remove the ``m`` oldest bits, returning ``(origin, count)`` runs only."""
        return [(origin, count) for origin, _, count in self._pop(m)]

    def take(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """Remove and return the ``m`` oldest bits and their origin tags."""
        pieces = self._pop(m)
        bits = [p[1] if p[1] is not None else np.zeros(p[2], dtype=np.uint8) for p in pieces]
        origins = [np.full(p[2], p[0], dtype=np.int64) for p in pieces]
        if not pieces:
            return np.zeros(0, dtype=np.uint8), np.zeros(0, dtype=np.int64)
        return np.concatenate(bits), np.concatenate(origins)

    def _pop(self, m: int) -> list:
        if m < 0:
            raise ValueError("cannot take a negative number of bits")
        if m > self._level:
            raise BufferUnderflow(f"take({m}) with only {self._level} bits stored")
        out = []
        need = m
        while need:
            seg = self._segments[0]
            origin, content, length = seg
            if length <= need:
                self._segments.popleft()
                out.append((origin, content, length))
                need -= length
            else:
                head = None if content is None else content[:need]
                seg[1] = None if content is None else content[need:]
                seg[2] = length - need
                out.append((origin, head, need))
                need = 0
        self._level -= m
        self.taken_total += m
        return out

    def clear(self) -> int:
        """Discard all stored bits (restart flush); returns the count discarded."""
        n = self._level
        self._segments.clear()
        self._level = 0
        self._chain = hashlib.sha256(b"|clear|")
        return n

    def flip(self, index: int) -> None:
        """Fault injection: invert the stored bit at ``index`` (0 = oldest)."""
        if not 0 <= index < self._level:
            raise IndexError(index)
        for seg in self._segments:
            if index < seg[2]:
                if seg[1] is None:
                    raise ValueError("cannot flip an untracked bit")
                seg[1][index] ^= 1
                self._chain.update(b"!%d" % index)
                return
            index -= seg[2]

    def contents(self) -> tuple[np.ndarray, np.ndarray]:
        """Copy of stored bits and origins without consuming them."""
        if not self._segments:
            return np.zeros(0, dtype=np.uint8), np.zeros(0, dtype=np.int64)
        bits = np.concatenate([s[1] if s[1] is not None else np.zeros(s[2], dtype=np.uint8) for s in self._segments])
        origins = np.concatenate([np.full(s[2], s[0], dtype=np.int64) for s in self._segments])
        return bits, origins

    def digest(self) -> str:
        """Fingerprint of the stored stream.

        The hash chains every push and fault since the last flush, so two
        buffers fed identical histories agree; combined with ``taken_total``
        this pins the stored contents without rehashing them each slot.
        """
        return f"{self._chain.copy().hexdigest()[:16]}:{self.taken_total}:{self._level}"

    def copy(self) -> "KeyBuffer":
        other = KeyBuffer(self.capacity)
        other._segments = deque([s[0], None if s[1] is None else s[1].copy(), s[2]] for s in self._segments)
        other._level = self._level
        other.pushed_total = self.pushed_total
        other.taken_total = self.taken_total
        other.dropped_total = self.dropped_total
        other._newest_origin = self._newest_origin
        other._chain = self._chain.copy()
        return other


def key_age_ok(origins, slot: int, window: int) -> bool:
    """True when every key bit used in ``slot`` comes from a slot before ``slot - window``."""
    origins = np.asarray(origins)
    return bool(origins.size == 0 or origins.max() < slot - window)
