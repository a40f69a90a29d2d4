"""Slotted key-buffer wiretap protocol.

Every slot has ``M + 1`` minislots of ``n`` channel uses.  Minislot 1 carries
one wiretap-coded message; minislots 2..M+1 carry messages XORed with the
oldest key bits in the buffer and sent through an ordinary channel code.
Every delivered message is pushed to the key buffer at the end of the slot.
Transmitter and receiver each run their own ``SchemeState``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .channel_codes import IdealBitPipe, make_channel_code
from .channels import WiretapChannel, main_capacity, transmit
from .key_buffer import KeyBuffer
from .wiretap_code import (MAX_BLOCKLENGTH, BinningCode, bits_to_int, build_binning_code, int_to_bits,
                           wiretap_decode, wiretap_encode)

log = logging.getLogger(__name__)


@dataclass
class SchemeConfig:
    n: int
    M: int
    Rs: float
    Rr: float = 0.0
    N1: int = 1
    C: float | None = None
    code: str | dict = "ideal"
    channel: WiretapChannel | None = None
    wiretap: str | None = None  # "coset", "random" or "ideal"; default coset when n <= 16
    restart_period: int | None = None
    restart_flush: bool = True
    key_cap_bits: int | None = None
    buffer_capacity: int | None = None
    initial_key_bits: int = 0
    quantize: bool = False
    code_seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.M < 0 or self.N1 < 0:
            raise ValueError("need n >= 1, M >= 0, N1 >= 0")
        self.k_s = int(round(self.n * self.Rs))
        if self.k_s < 1:
            raise ValueError(f"n*Rs = {self.n * self.Rs} gives an empty wiretap message")
        if self.wiretap is None:
            self.wiretap = "coset" if self.n <= MAX_BLOCKLENGTH else "ideal"
        if self.wiretap not in ("coset", "random", "ideal"):
            raise ValueError(f"unknown wiretap mode {self.wiretap!r}")
        if self.code == "ideal" or (isinstance(self.code, dict) and self.code.get("kind") == "ideal"):
            rate = self.C
            if rate is None:
                rate = main_capacity(self.channel) if self.channel is not None and self.channel.discrete else 1.0
            self.C = rate
            self.channel_code = IdealBitPipe(rate)
        else:
            self.channel_code = make_channel_code(self.code)
            self.C = self.channel_code.rate
        self.payload_bits = self.channel_code.payload_bits(self.n)
        if self.payload_bits % self.k_s and not self.quantize:
            raise ValueError(
                f"C/Rs must be an integer: minislot payload {self.payload_bits} bits is not a multiple of "
                f"the {self.k_s}-bit message (set quantize=True to floor)")
        self.per_minislot = self.payload_bits // self.k_s
        if self.restart_period is not None and self.restart_period < 1:
            raise ValueError("restart_period must be >= 1")

    @property
    def max_messages(self) -> int:
        """M1 = 1 + (C/Rs) M."""
        return 1 + self.per_minislot * self.M

    @property
    def slot_uses(self) -> int:
        return self.n * (self.M + 1)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "M": self.M, "N1": self.N1, "Rs": self.Rs, "Rr": self.Rr, "C": self.C,
            "code": self.channel_code.to_dict(), "wiretap": self.wiretap,
            "channel": None if self.channel is None else self.channel.to_dict(),
            "restart_period": self.restart_period, "restart_flush": self.restart_flush,
            "key_cap_bits": self.key_cap_bits, "buffer_capacity": self.buffer_capacity,
            "initial_key_bits": self.initial_key_bits, "quantize": self.quantize, "code_seed": self.code_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SchemeConfig":
        known = {"n", "M", "Rs", "Rr", "N1", "C", "code", "wiretap", "restart_period", "restart_flush",
                 "key_cap_bits", "buffer_capacity", "initial_key_bits", "quantize", "code_seed"}
        unknown = set(d) - known - {"channel", "seed", "slots"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {k: v for k, v in d.items() if k in known}
        if d.get("channel") is not None:
            kwargs["channel"] = WiretapChannel.from_dict(d["channel"])
        return cls(**kwargs)


@dataclass
class SlotPlan:
    slot: int
    ramp: int
    wiretap_count: int
    keyed_count: int
    key_bits: int
    restart: bool

    @property
    def message_count(self) -> int:
        return self.wiretap_count + self.keyed_count


@dataclass
class SchemeState:
    config: SchemeConfig
    buffer: KeyBuffer
    code: BinningCode | None
    slot: int = 1
    ramp: int = 1
    last_key_origins: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    last_pushed: int = 0
    last_dropped: int = 0
    last_flushed: int = 0


def make_state(config: SchemeConfig) -> SchemeState:
    """Fresh endpoint state; both endpoints derive the same code and prefill."""
    rng = np.random.default_rng(config.code_seed)
    code = None
    if config.wiretap != "ideal":
        code = build_binning_code(config.n, config.Rs, config.Rr, rng, structure=config.wiretap,
                                  seed=config.code_seed)
    buf = KeyBuffer(config.buffer_capacity)
    if config.initial_key_bits:
        buf.push(rng.integers(0, 2, config.initial_key_bits, dtype=np.uint8), origin_slot=0)
    return SchemeState(config, buf, code)


def restart_policy(state: SchemeState) -> bool:
    """True when the current slot closes a restart period."""
    period = state.config.restart_period
    return period is not None and state.slot % period == 0


def plan_slot(state: SchemeState) -> SlotPlan:
    cfg = state.config
    keyed = 0
    if state.ramp > 1:
        available = state.buffer.level
        if cfg.key_cap_bits is not None:
            available = min(available, cfg.key_cap_bits)
        keyed = min(state.ramp - 1, cfg.per_minislot * cfg.M, available // cfg.k_s)
    return SlotPlan(state.slot, state.ramp, 1, keyed, keyed * cfg.k_s, restart_policy(state))


def _end_slot(state: SchemeState, messages) -> None:
    restart = restart_policy(state)
    bits = np.concatenate(messages) if messages else np.zeros(0, dtype=np.uint8)
    state.last_pushed = len(bits)
    state.last_dropped = state.buffer.push(bits, state.slot)
    state.last_flushed = 0
    if restart:
        if state.config.restart_flush:
            state.last_flushed = state.buffer.clear()
        state.ramp = 1
    else:
        state.ramp += 1
    state.slot += 1


def encode_slot(state: SchemeState, messages, rng: np.random.Generator) -> np.ndarray:
    """Channel input for one slot, length ``n (M + 1)``; consumes keys and
    pushes ``messages`` (wiretap message first) to the buffer."""
    cfg = state.config
    plan = plan_slot(state)
    messages = [np.asarray(m, dtype=np.uint8) for m in messages]
    if len(messages) != plan.message_count:
        raise ValueError(f"slot {plan.slot} plans {plan.message_count} messages, got {len(messages)}")
    if any(len(m) != cfg.k_s for m in messages):
        raise ValueError(f"every message must have {cfg.k_s} bits")
    key, origins = state.buffer.take(plan.key_bits)
    state.last_key_origins = origins

    if state.code is None:
        first = np.zeros(cfg.n, dtype=np.uint8)
        first[:cfg.k_s] = messages[0]
    else:
        first = wiretap_encode(state.code, bits_to_int(messages[0]), rng)

    payload = np.concatenate(messages[1:]) ^ key if plan.keyed_count else np.zeros(0, dtype=np.uint8)
    chunk = cfg.per_minislot * cfg.k_s
    minislots = [first]
    for j in range(cfg.M):
        minislots.append(cfg.channel_code.encode(payload[j * chunk:(j + 1) * chunk], cfg.n))
    _end_slot(state, messages)
    return np.concatenate(minislots)


@dataclass
class SlotDecode:
    messages: list
    flags: list | None = None

    @property
    def errors(self) -> int:
        return 0 if self.flags is None else int(sum(self.flags))


def decode_slot(state: SchemeState, y, reference=None) -> SlotDecode:
    """Receiver side of one slot.  With ``reference`` (the sent messages)
    each decoded message gets an error flag."""
    cfg = state.config
    plan = plan_slot(state)
    y = np.asarray(y)
    if state.code is None:
        first = np.where(y[:cfg.k_s] == 2, 0, y[:cfg.k_s]).astype(np.uint8)
    else:
        w_hat = wiretap_decode(state.code, y[:cfg.n], cfg.channel)
        first = int_to_bits(w_hat, cfg.k_s)
    decoded = [first]
    if plan.keyed_count:
        chunk = cfg.per_minislot * cfg.k_s
        parts = []
        for j in range(cfg.M):
            seg = y[(j + 1) * cfg.n:(j + 2) * cfg.n]
            parts.append(cfg.channel_code.decode(seg, cfg.n)[:chunk])
        cipher = np.concatenate(parts)[:plan.key_bits]
        key, origins = state.buffer.take(plan.key_bits)
        state.last_key_origins = origins
        plain = cipher ^ key
        decoded += [plain[i * cfg.k_s:(i + 1) * cfg.k_s] for i in range(plan.keyed_count)]
    else:
        state.last_key_origins = np.zeros(0, dtype=np.int64)
    flags = None
    if reference is not None:
        flags = [not np.array_equal(d, np.asarray(r, dtype=np.uint8)) for d, r in zip(decoded, reference)]
    _end_slot(state, decoded)
    return SlotDecode(decoded, flags)


@dataclass
class SlotRecord:
    """One row of the session trace.

    ``B_k`` is the level at the start of the slot; ``dropped`` counts overflow
    losses plus bits discarded by a restart flush, so that
    ``B_{k+1} = B_k + pushed - taken - dropped`` on every row.
    """

    slot: int
    rate: float
    delivered_bits: int
    errors: int
    B_k: int
    pushed: int
    taken: int
    dropped: int
    oldest_origin: int
    newest_key_origin: int = -1
    keyed: int = 0
    restart: bool = False
    wiretap_error: bool = False
    keyed_error: bool = False
    in_sync: bool = True
    H: float | None = None
    G: float | None = None
    P: float | None = None


@dataclass
class SessionReport:
    records: list
    slot_uses: int
    long_run_rate: float
    steady_state_rate: float | None
    full_load_messages: int
    kind: str = "static"
    extra: dict = field(default_factory=dict)

    @property
    def slots(self) -> int:
        return len(self.records)

    @property
    def delivered_bits(self) -> int:
        return sum(r.delivered_bits for r in self.records)

    def slot_errors(self) -> np.ndarray:
        return np.array([r.errors > 0 for r in self.records], dtype=bool)

    def first_age_slot(self, window: int) -> int | None:
        """First slot k > window from which every later slot's keys predate k - window."""
        first = None
        for r in self.records:
            ok = r.newest_key_origin < r.slot - window
            if r.slot <= window or not ok:
                first = None
            elif first is None:
                first = r.slot
        return first

    def summary(self) -> dict:
        out = {
            "kind": self.kind,
            "slots": self.slots,
            "delivered_bits": self.delivered_bits,
            "long_run_rate": self.long_run_rate,
            "steady_state_rate": self.steady_state_rate,
            "message_errors": int(sum(r.errors for r in self.records)),
            "slot_errors": int(self.slot_errors().sum()),
            "final_level": self.records[-1].B_k + self.records[-1].pushed - self.records[-1].taken
            - self.records[-1].dropped if self.records else 0,
        }
        out.update(self.extra)
        return out


def error_bound_trace(eps: float, delta: float, slots: int, restart_period: int | None = None) -> np.ndarray:
    """k eps + (k - 1) delta per slot, with k counted from the last restart."""
    k = np.arange(1, slots + 1)
    if restart_period is not None:
        k = (k - 1) % restart_period + 1
    return k * eps + (k - 1) * delta


def min_buffer_for_window(config: SchemeConfig) -> tuple[int, float]:
    """Key-buffer size C M N1 n and the slot C M N1 / Rs by which it fills."""
    bits = config.payload_bits * config.M * config.N1
    return bits, bits / config.k_s


def run_session(config: SchemeConfig, slots: int, rng: np.random.Generator) -> SessionReport:
    """Run the transmit/channel/receive loop for ``slots`` slots."""
    if slots < 0:
        raise ValueError("slots must be non-negative")
    if slots < config.max_messages:
        log.warning("session of %d slots ends before the ramp reaches %d messages", slots, config.max_messages)
    msg_rng, enc_rng, ch_rng = rng.spawn(3)
    tx, rx = make_state(config), make_state(config)
    n, ks = config.n, config.k_s
    full = config.per_minislot * config.M
    records = []
    steady_bits, steady_slots = 0, 0
    for _ in range(slots):
        level, head = tx.buffer.level, tx.buffer.oldest_origin
        plan = plan_slot(tx)
        messages = [msg_rng.integers(0, 2, ks, dtype=np.uint8) for _ in range(plan.message_count)]
        x = encode_slot(tx, messages, enc_rng)
        if config.channel is None:
            y = x.copy()
        else:
            y, _ = transmit(config.channel, x, ch_rng)
            if config.wiretap == "ideal":
                y[:n] = x[:n]
            if config.channel_code.ideal:
                y[n:] = x[n:]
        dec = decode_slot(rx, y, reference=messages)
        delivered = plan.message_count * ks
        origins = tx.last_key_origins
        records.append(SlotRecord(
            slot=plan.slot, rate=delivered / config.slot_uses, delivered_bits=delivered, errors=dec.errors,
            B_k=level, pushed=tx.last_pushed, taken=plan.key_bits, dropped=tx.last_dropped + tx.last_flushed,
            oldest_origin=head, newest_key_origin=int(origins.max()) if origins.size else -1,
            keyed=plan.keyed_count, restart=plan.restart, wiretap_error=bool(dec.flags[0]),
            keyed_error=bool(any(dec.flags[1:])), in_sync=tx.buffer.digest() == rx.buffer.digest()))
        if plan.keyed_count == full:
            steady_bits += delivered
            steady_slots += 1
    total = sum(r.delivered_bits for r in records)
    long_run = total / (slots * config.slot_uses) if slots else 0.0
    steady = float(Fraction(steady_bits, steady_slots * config.slot_uses)) if steady_slots else None
    return SessionReport(records, config.slot_uses, long_run, steady, config.max_messages,
                         extra={"rx_pushed": rx.buffer.pushed_total, "rx_dropped": rx.buffer.dropped_total})


def steady_state_rate_formula(Rs: float, C: float, M: int) -> float:
    """(Rs + C M) / (M + 1)."""
    return (Rs + C * M) / (M + 1)


def fill_slot_bound(config: SchemeConfig) -> int:
    """First slot from which FIFO keys are guaranteed older than the N1 window
    for a session starting from an empty, unbounded buffer: (N1 + 1) M1."""
    return (config.N1 + 1) * config.max_messages


def keyed_part_error(config: SchemeConfig, trials: int, rng: np.random.Generator) -> tuple[int, int]:
    """Monte Carlo count of slots whose full keyed part (M minislots) decodes wrongly.

    Returns ``(errors, trials)``.  Keys cancel in the XOR, so only the channel
    code and Bob's channel matter.
    """
    cc, n, M = config.channel_code, config.n, config.M
    if cc.ideal or config.channel is None or M == 0:
        return 0, trials
    bits = config.payload_bits
    errors = 0
    for _ in range(trials):
        payload = rng.integers(0, 2, (M, bits), dtype=np.uint8)
        x = np.concatenate([cc.encode(p, n) for p in payload])
        y, _ = transmit(config.channel, x, rng)
        decoded = np.stack([cc.decode(y[i * n:(i + 1) * n], n)[:bits] for i in range(M)])
        errors += bool(np.any(decoded != payload))
    return errors, trials


def slot_error_counts(config: SchemeConfig, slots: int, runs: int, seed: int) -> np.ndarray:
    """Number of runs, out of ``runs`` independent sessions, with a message error in each slot."""
    counts = np.zeros(slots, dtype=np.int64)
    for rng in np.random.default_rng(seed).spawn(runs):
        counts += run_session(config, slots, rng).slot_errors()
    return counts
