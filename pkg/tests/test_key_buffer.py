import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.stateful import RuleBasedStateMachine, invariant, precondition, rule

from keybuf.key_buffer import BufferUnderflow, KeyBuffer, OriginRegression, key_age_ok


def bits(n, value=1):
    return np.full(n, value, dtype=np.uint8)


def test_push_unbounded():
    buf = KeyBuffer()
    buf.push(bits(5), 1)
    assert buf.push(bits(3), 2) == 0
    assert buf.level == 8


def test_overflow_drops_newest_bits():
    buf = KeyBuffer(capacity=10)
    buf.push(bits(9, 0), 1)
    assert buf.push(np.array([1, 0, 1, 1], dtype=np.uint8), 2) == 3
    stored, origins = buf.contents()
    assert buf.level == 10
    assert stored.tolist() == [0] * 9 + [1]
    assert origins.tolist() == [1] * 9 + [2]


def test_push_nothing():
    buf = KeyBuffer()
    buf.push(bits(2), 1)
    before = buf.digest()
    assert buf.push(bits(0), 3) == 0
    assert buf.level == 2 and buf.digest() == before


def test_origin_regression():
    buf = KeyBuffer()
    buf.push(bits(1), 4)
    with pytest.raises(OriginRegression):
        buf.push(bits(1), 3)


def test_take_is_fifo_across_segments():
    buf = KeyBuffer()
    buf.push(bits(3, 0), 1)
    buf.push(bits(3, 1), 2)
    taken, origins = buf.take(5)
    assert taken.tolist() == [0, 0, 0, 1, 1]
    assert origins.tolist() == [1, 1, 1, 2, 2]
    assert buf.oldest_origin == 2 and buf.level == 1


def test_take_everything_and_underflow():
    buf = KeyBuffer()
    buf.push(bits(4), 1)
    buf.take(4)
    assert buf.level == 0 and buf.oldest_origin == -1
    with pytest.raises(BufferUnderflow):
        buf.take(1)


def test_recursion_push_take_push():
    buf = KeyBuffer()
    buf.push(bits(3), 1)
    buf.take(2)
    buf.push(bits(4), 2)
    assert buf.level == 5


def test_count_only_segments():
    buf = KeyBuffer()
    buf.push(1000, 1)
    buf.push(500, 2)
    assert buf.take_runs(1200) == [(1, 1000), (2, 200)]
    with pytest.raises(ValueError):
        buf.flip(0)


def test_digest_tracks_history():
    a, b = KeyBuffer(), KeyBuffer()
    for buf in (a, b):
        buf.push(np.array([1, 0, 1], dtype=np.uint8), 1)
    assert a.digest() == b.digest()
    b.flip(1)
    assert a.digest() != b.digest()
    c = a.copy()
    c.take(1)
    assert c.digest() != a.digest() and a.level == 3


def test_clear_counts_bits():
    buf = KeyBuffer()
    buf.push(bits(6), 1)
    assert buf.clear() == 6 and buf.level == 0


def test_key_age_helper():
    assert key_age_ok([1, 2], slot=4, window=1)
    assert not key_age_ok([1, 3], slot=4, window=1)
    assert key_age_ok([], slot=1, window=3)


class BufferMachine(RuleBasedStateMachine):
    """Model-based check against a plain Python list of (bit, origin)."""

    def __init__(self):
        super().__init__()
        self.capacity = 12
        self.buf = KeyBuffer(self.capacity)
        self.model = []
        self.slot = 0

    @rule(data=st.lists(st.integers(0, 1), max_size=6))
    def push(self, data):
        self.slot += 1
        room = self.capacity - len(self.model)
        dropped = self.buf.push(np.array(data, dtype=np.uint8), self.slot)
        assert dropped == max(0, len(data) - room)
        self.model += [(b, self.slot) for b in data[:room]]

    @precondition(lambda self: self.model)
    @rule(data=st.data())
    def take(self, data):
        m = data.draw(st.integers(0, len(self.model)))
        taken, origins = self.buf.take(m)
        expect, self.model = self.model[:m], self.model[m:]
        assert taken.tolist() == [b for b, _ in expect]
        assert origins.tolist() == [o for _, o in expect]

    @invariant()
    def level_matches(self):
        assert self.buf.level == len(self.model) == len(self.buf)
        _, origins = self.buf.contents()
        assert np.all(np.diff(origins) >= 0)
        assert self.buf.pushed_total - self.buf.taken_total == self.buf.level


TestBufferMachine = BufferMachine.TestCase
TestBufferMachine.settings = settings(max_examples=60, stateful_step_count=30, deadline=None)


@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 30)), max_size=40), st.integers(1, 50))
def test_level_never_exceeds_capacity(ops, capacity):
    buf = KeyBuffer(capacity)
    for slot, (push, take) in enumerate(ops, start=1):
        buf.take(min(take, buf.level))
        buf.push(push, slot)
        assert 0 <= buf.level <= capacity
    assert buf.pushed_total + buf.dropped_total - buf.taken_total >= buf.level


def test_flush_resynchronises_digests():
    a, b = KeyBuffer(), KeyBuffer()
    a.push(bits(3, 0), 1)
    b.push(bits(3, 1), 1)
    assert a.digest() != b.digest()
    a.clear()
    b.clear()
    assert a.digest() == b.digest()
