"""Exhaustive audit of the multi-slot joint leakage of the key-buffer scheme.

The auditor has its own forward model of the protocol and does not import
:mod:`keybuf.scheme`.  A scenario fixes a small wiretap code, the number of
keyed bits per slot and an explicit key schedule.  Every key bit is either a
reference to an earlier message bit or a fresh bit with its own bias.

Eve's view of slot ``j`` is the wiretap-coded output ``Z_{j,1}`` of the
first-minislot message and the one-time-pad ciphertext ``C_j`` of the keyed
message, which she is assumed to see without channel noise.  That is
conservative: any channel between the ciphertext and Eve can only lower the
leakage.

``Z_{j,1}`` is replaced by its likelihood class, i.e. the normalised vector
``p(z | w)`` over messages.  Because ``Z_{j,1}`` depends on the rest of the
protocol only through ``W_{j,1}``, the class is a sufficient statistic and
every mutual information below is unchanged by the reduction.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channels import WiretapChannel
from .infotheory import entropy
from .wiretap_code import BinningCode, EnumerationBudgetError, build_binning_code, wiretap_encode

AUDIT_BUDGET = 2 ** 34
MAX_AUDIT_SLOTS = 4
MAX_AUDIT_BLOCKLENGTH = 8
MAX_KEYED_BITS = 4


@dataclass(frozen=True)
class KeyRef:
    """One key bit: ``("msg", slot, part, bit)`` or ``("fresh", p0[, ident])``.

    Fresh bits sharing an ``ident`` are the same bit; without one every fresh
    reference is a new independent bit.
    """

    kind: str
    slot: int = 0
    part: int = 0
    bit: int = 0
    p0: float = 0.5
    ident: int | None = None

    @classmethod
    def parse(cls, obj) -> "KeyRef":
        if isinstance(obj, KeyRef):
            return obj
        if obj[0] == "msg":
            return cls("msg", int(obj[1]), int(obj[2]), int(obj[3]))
        if obj[0] == "fresh":
            return cls("fresh", p0=float(obj[1]) if len(obj) > 1 else 0.5,
                       ident=int(obj[2]) if len(obj) > 2 and obj[2] is not None else None)
        raise ValueError(f"bad key reference {obj!r}")

    def to_json(self):
        if self.kind == "msg":
            return ["msg", self.slot, self.part, self.bit]
        return ["fresh", self.p0] if self.ident is None else ["fresh", self.p0, self.ident]


@dataclass(eq=False)
class AuditScenario:
    """A small multi-slot instance of the protocol.

    Slot ``j`` (1-based) sends a ``k_s``-bit wiretap message through ``code``
    and a ``keyed_bits[j-1]``-bit message masked by ``key_schedule[j-1]``.
    """

    slots: int
    N1: int
    code: BinningCode
    channel: WiretapChannel
    keyed_bits: list
    key_schedule: list

    def __post_init__(self):
        if not 1 <= self.slots <= MAX_AUDIT_SLOTS:
            raise ValueError(f"audit scenarios have 1..{MAX_AUDIT_SLOTS} slots")
        if self.N1 < 0:
            raise ValueError("N1 must be non-negative")
        if self.code.n > MAX_AUDIT_BLOCKLENGTH:
            raise ValueError(f"audit codes have n <= {MAX_AUDIT_BLOCKLENGTH}")
        if not self.channel.discrete:
            raise ValueError("audit needs a discrete channel")
        self.keyed_bits = [int(b) for b in self.keyed_bits]
        if len(self.keyed_bits) != self.slots or any(not 0 <= b <= MAX_KEYED_BITS for b in self.keyed_bits):
            raise ValueError(f"keyed_bits needs one entry in 0..{MAX_KEYED_BITS} per slot")
        sched = [[KeyRef.parse(r) for r in refs] for refs in self.key_schedule]
        if len(sched) != self.slots or any(len(s) != b for s, b in zip(sched, self.keyed_bits)):
            raise ValueError("key_schedule must list one key per keyed bit in every slot")
        for j, refs in enumerate(sched, start=1):
            for r in refs:
                if r.kind == "msg":
                    size = self.code.k_s if r.part == 1 else self.keyed_bits[r.slot - 1] if 1 <= r.slot <= self.slots else 0
                    if not 1 <= r.slot < j or r.part not in (1, 2) or not 0 <= r.bit < size:
                        raise ValueError(f"slot {j} key {r.to_json()} does not name an earlier message bit")
                elif not 0 <= r.p0 <= 1:
                    raise ValueError("fresh key bias must be a probability")
        self.key_schedule = sched

    @property
    def window(self) -> list[int]:
        k = self.slots
        return list(range(max(1, k - self.N1), k + 1))

    @property
    def schedule_compliant(self) -> bool:
        """Keys of window slots come from before the window, and no key bit is used twice."""
        first = self.window[0]
        seen = set()
        for j, refs in enumerate(self.key_schedule, start=1):
            for r in refs:
                if r.kind == "msg":
                    if j >= first and r.slot >= first:
                        return False
                    ident = (r.slot, r.part, r.bit)
                elif r.ident is not None:
                    ident = ("fresh", r.ident)
                else:
                    continue
                if ident in seen:
                    return False
                seen.add(ident)
        return True

    @property
    def fresh_bits(self) -> int:
        named = {r.ident for refs in self.key_schedule for r in refs if r.kind == "fresh" and r.ident is not None}
        return len(named) + sum(r.kind == "fresh" and r.ident is None for refs in self.key_schedule for r in refs)

    def state_space(self) -> int:
        fresh = self.fresh_bits
        msg_bits = self.slots * self.code.k_s + sum(self.keyed_bits)
        outputs = self.channel.eve.shape[1] ** self.code.n
        return (2 ** (msg_bits + fresh)) * (self.code.bin_size * outputs) ** self.slots

    def to_dict(self) -> dict:
        return {
            "slots": self.slots, "N1": self.N1, "code": self.code.to_dict(), "channel": self.channel.to_dict(),
            "keyed_bits": list(self.keyed_bits),
            "key_schedule": [[r.to_json() for r in refs] for refs in self.key_schedule],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AuditScenario":
        code_spec = d["code"]
        if "structure" in code_spec and ("parity_check" in code_spec or "codebook" in code_spec):
            code = BinningCode.from_dict(code_spec)
        else:
            seed = int(code_spec.get("seed", 0))
            code = build_binning_code(int(code_spec["n"]), float(code_spec["Rs"]), float(code_spec.get("Rr", 0.0)),
                                      np.random.default_rng(seed), structure=code_spec.get("structure", "coset"),
                                      seed=seed)
        slots = int(d["slots"])
        keyed = d.get("keyed_bits", [0] * slots)
        sched = d.get("key_schedule", "fifo")
        if sched == "fifo":
            sched = fifo_schedule(slots, keyed, code.k_s, int(d.get("prefill", 0)))
        return cls(slots, int(d.get("N1", 1)), code, WiretapChannel.from_dict(d["channel"]), keyed, sched)


def fifo_schedule(slots: int, keyed_bits, k_s: int, prefill: int = 0) -> list:
    """Key schedule of the FIFO buffer.

    The buffer starts with ``prefill`` fresh uniform bits and receives each
    slot's wiretap message, then its keyed message, at the end of the slot.
    Slots whose demand exceeds the stored bits raise ``ValueError``.
    """
    queue = [KeyRef("fresh", ident=i) for i in range(prefill)]
    out = []
    for j in range(1, slots + 1):
        b = int(keyed_bits[j - 1])
        if b > len(queue):
            raise ValueError(f"slot {j} needs {b} key bits but the buffer holds {len(queue)}")
        out.append(queue[:b])
        queue = queue[b:]
        queue += [KeyRef("msg", j, 1, i) for i in range(k_s)]
        queue += [KeyRef("msg", j, 2, i) for i in range(b)]
    return out


def negative_control(scn: AuditScenario) -> AuditScenario:
    """Copy of ``scn`` whose last keyed slot reuses the previous keyed slot's keys.

    Needs at least two slots with keyed bits.
    """
    keyed = [j for j in range(scn.slots) if scn.keyed_bits[j]]
    if len(keyed) < 2:
        raise ValueError("key reuse needs two slots with keyed bits")
    sched = [list(refs) for refs in scn.key_schedule]
    last, prev = keyed[-1], sched[keyed[-2]]
    sched[last] = [prev[i % len(prev)] for i in range(scn.keyed_bits[last])]
    return AuditScenario(scn.slots, scn.N1, scn.code, scn.channel, list(scn.keyed_bits), sched)


def code_output_law(code: BinningCode, ch: WiretapChannel) -> np.ndarray:
    """p(z | w) for every Eve output word, by direct enumeration of the codebook."""
    eve = ch.eve
    q = eve.shape[1]
    outputs = np.array(list(itertools.product(range(q), repeat=code.n)), dtype=np.intp)
    book = np.asarray(code.codebook, dtype=np.intp)
    probs = np.ones((len(book), len(outputs)))
    for i in range(code.n):
        probs *= eve[book[:, i][:, None], outputs[:, i][None, :]]
    return probs.reshape(code.num_messages, code.bin_size, -1).mean(axis=1)


def likelihood_classes(law: np.ndarray, decimals: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Collapse outputs with proportional likelihood vectors.

    Returns ``(class_law, z_to_class)``: ``class_law[w, t]`` is the probability
    of class ``t`` under message ``w``, ``z_to_class`` maps each output word to
    its class (-1 for impossible outputs).
    """
    total = law.sum(axis=0)
    live = total > 0
    shape = np.round(law[:, live] / total[live], decimals)
    _, cls = np.unique(shape.T, axis=0, return_inverse=True)
    cls = cls.ravel()
    z_to_class = np.full(law.shape[1], -1, dtype=np.intp)
    z_to_class[live] = cls
    class_law = np.zeros((law.shape[0], int(cls.max()) + 1))
    for w in range(law.shape[0]):
        class_law[w] = np.bincount(cls, weights=law[w, live], minlength=class_law.shape[1])
    return class_law, z_to_class


@dataclass
class JointLeakageReport:
    I_joint: float
    I_wiretap_part: float
    I_keyed_part: float
    single_slot_eps: float
    n: int
    N1: int
    window: list
    chain_terms: list = field(default_factory=list)
    otp_leakage: float = 0.0
    lemma1_dependence: float = 0.0
    schedule_compliant: bool = True
    state_space: int = 0

    @property
    def per_symbol(self) -> float:
        return self.I_joint / self.n

    @property
    def chain_sum(self) -> float:
        return float(sum(t for _, t in self.chain_terms))

    def to_dict(self) -> dict:
        passed, slack = theorem1_bound_check(self, self.N1)
        return {
            "i_joint": self.I_joint, "i_wiretap_part": self.I_wiretap_part, "i_keyed_part": self.I_keyed_part,
            "single_slot_eps": self.single_slot_eps, "n": self.n, "n1": self.N1, "window": list(self.window),
            "per_symbol": self.per_symbol, "chain_sum": self.chain_sum,
            "chain_terms": [{"message": name, "bits": t} for name, t in self.chain_terms],
            "otp_leakage": self.otp_leakage, "lemma1_dependence": self.lemma1_dependence,
            "schedule_compliant": self.schedule_compliant, "state_space": self.state_space,
            "bound_pass": passed, "bound_slack": slack,
        }


class _Enumerator:
    """Joint law of all message bits, fresh key bits and Eve's likelihood classes."""

    def __init__(self, scn: AuditScenario):
        self.scn = scn
        code = scn.code
        self.class_law, self.z_to_class = likelihood_classes(code_output_law(code, scn.channel))
        # bit layout of u: per slot the k_s wiretap bits then the keyed bits, then fresh key bits
        self.msg_pos = {}
        pos = 0
        for j in range(1, scn.slots + 1):
            for i in range(code.k_s):
                self.msg_pos[(j, 1, i)] = pos
                pos += 1
            for i in range(scn.keyed_bits[j - 1]):
                self.msg_pos[(j, 2, i)] = pos
                pos += 1
        fresh_bias = []
        named = {}
        key_cols = []
        for refs in scn.key_schedule:
            cols = []
            for r in refs:
                if r.kind == "msg":
                    cols.append(self.msg_pos[(r.slot, r.part, r.bit)])
                elif r.ident is not None and r.ident in named:
                    cols.append(named[r.ident])
                else:
                    cols.append(pos + len(fresh_bias))
                    if r.ident is not None:
                        named[r.ident] = cols[-1]
                    fresh_bias.append(r.p0)
            key_cols.append(cols)
        self.n_msg = pos
        total = pos + len(fresh_bias)
        self.u = ((np.arange(2 ** total)[:, None] >> np.arange(total - 1, -1, -1)) & 1).astype(np.uint8)
        weight = np.full(len(self.u), 0.5 ** pos)
        for f, p0 in enumerate(fresh_bias):
            weight = weight * np.where(self.u[:, pos + f] == 0, p0, 1 - p0)
        self.weight = weight
        self.cipher = []
        for j in range(1, scn.slots + 1):
            bits = [self.u[:, self.msg_pos[(j, 2, i)]] ^ self.u[:, c] for i, c in enumerate(key_cols[j - 1])]
            self.cipher.append(np.stack(bits, axis=1) if bits else np.zeros((len(self.u), 0), dtype=np.uint8))
        powers = 1 << np.arange(code.k_s - 1, -1, -1)
        self.w1 = [self.u[:, [self.msg_pos[(j, 1, i)] for i in range(code.k_s)]].astype(np.int64) @ powers
                   if code.k_s else np.zeros(len(self.u), dtype=np.int64) for j in range(1, scn.slots + 1)]

    def wiretap_bits(self, j):
        return self.u[:, [self.msg_pos[(j, 1, i)] for i in range(self.scn.code.k_s)]]

    def keyed_msg_bits(self, j):
        return self.u[:, [self.msg_pos[(j, 2, i)] for i in range(self.scn.keyed_bits[j - 1])]]

    def entropy(self, columns: list, classes) -> float:
        """H(columns, T_j for j in classes), with ``columns`` a list of 0/1 arrays."""
        classes = sorted(set(classes))
        cols = [c for c in columns if c.shape[1]]
        if cols:
            _, label = np.unique(np.concatenate(cols, axis=1), axis=0, return_inverse=True)
            label = label.ravel()
            n_label = int(label.max()) + 1
        else:
            label = np.zeros(len(self.u), dtype=np.int64)
            n_label = 1
        K = self.scn.code.num_messages
        index = label.astype(np.int64)
        for j in classes:
            index = index * K + self.w1[j - 1]
        q = np.bincount(index, weights=self.weight, minlength=n_label * K ** len(classes))
        q = q.reshape((n_label,) + (K,) * len(classes))
        for _ in classes:
            q = np.tensordot(q, self.class_law, axes=([1], [0]))
        return entropy(q.ravel())

    def mutual_information(self, a_cols, a_cls, b_cols, b_cls) -> float:
        return (self.entropy(a_cols, a_cls) + self.entropy(b_cols, b_cls)
                - self.entropy(a_cols + b_cols, list(a_cls) + list(b_cls)))


def _require_budget(scn: AuditScenario) -> int:
    size = scn.state_space()
    if size > AUDIT_BUDGET:
        raise EnumerationBudgetError(f"joint state space {size} exceeds {AUDIT_BUDGET}")
    return size


def joint_leakage_exhaustive(scn: AuditScenario) -> JointLeakageReport:
    """Exact joint leakage of the window messages to Eve's whole history."""
    size = _require_budget(scn)
    en = _Enumerator(scn)
    all_slots = list(range(1, scn.slots + 1))
    window = scn.window
    eve_cols = [en.cipher[j - 1] for j in all_slots]
    wire = [en.wiretap_bits(j) for j in window]
    keyed = [en.keyed_msg_bits(j) for j in window]

    h_eve = en.entropy(eve_cols, all_slots)

    def cond_mi(target, given):
        # I(target; Eve | given)
        return (en.entropy(target + given, []) + en.entropy(given + eve_cols, all_slots)
                - en.entropy(target + given + eve_cols, all_slots) - en.entropy(given, []))

    i_joint = en.entropy(wire + keyed, []) + h_eve - en.entropy(wire + keyed + eve_cols, all_slots)
    i_wire = cond_mi(wire, [])
    i_keyed = cond_mi(keyed, wire)

    order = [(f"W[{j},1]", en.wiretap_bits(j)) for j in reversed(window)]
    order += [(f"W[{j},2]", en.keyed_msg_bits(j)) for j in reversed(window) if scn.keyed_bits[j - 1]]
    chain = []
    given = []
    for name, bits in order:
        chain.append((name, cond_mi([bits], given)))
        given = given + [bits]

    eps = max(en.mutual_information([en.wiretap_bits(j)], [], [], [j]) for j in all_slots) / scn.code.n
    otp = en.mutual_information(keyed, [], [en.cipher[j - 1] for j in window], [])
    k = scn.slots
    lemma1 = en.mutual_information([en.cipher[j - 1] for j in all_slots[:-1]] + [en.cipher[k - 1]], all_slots[:-1],
                                   [en.wiretap_bits(k)], [k])
    return JointLeakageReport(
        I_joint=i_joint, I_wiretap_part=i_wire, I_keyed_part=i_keyed, single_slot_eps=eps, n=scn.code.n,
        N1=scn.N1, window=window, chain_terms=chain, otp_leakage=otp, lemma1_dependence=lemma1,
        schedule_compliant=scn.schedule_compliant, state_space=size)


def theorem1_bound_check(report: JointLeakageReport, N1: int, tol: float = 1e-9) -> tuple[bool, float]:
    """Check I_joint / n <= (2 N1 + 1) eps; returns (pass, slack)."""
    slack = (2 * N1 + 1) * report.single_slot_eps - report.per_symbol
    return bool(slack >= -tol), float(slack)


def otp_component_leakage(scn: AuditScenario) -> float:
    """Exact I(keyed window messages; their ciphertexts)."""
    _require_budget(scn)
    en = _Enumerator(scn)
    window = scn.window
    return en.mutual_information([en.keyed_msg_bits(j) for j in window], [],
                                 [en.cipher[j - 1] for j in window], [])


# ---------------------------------------------------------------- Monte Carlo

@dataclass
class MCEstimate:
    value: float
    std_err: float
    samples: int
    cells: int


def _mm_entropy(labels: np.ndarray) -> float:
    _, counts = np.unique(labels, return_counts=True)
    n = counts.sum()
    return entropy(counts / n) + (len(counts) - 1) / (2 * n * np.log(2))


def _plugin_mi(a, b) -> float:
    joint = a.astype(np.int64) * (int(b.max()) + 1) + b
    return _mm_entropy(a) + _mm_entropy(b) - _mm_entropy(joint)


def mc_mi_estimate(generator, samples: int, rng: np.random.Generator, batches: int = 10) -> MCEstimate:
    """Miller-Madow corrected plug-in estimate of I(A; B).

    ``generator(rng, size)`` returns integer label arrays ``(a, b)``.  The
    standard error comes from ``batches`` equal sub-samples.
    """
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    a, b = generator(rng, samples)
    a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
    cells = len(np.unique(a)) * len(np.unique(b))
    if cells * 10 > samples:
        warnings.warn(f"histogram underfilled: {cells} cells for {samples} samples", RuntimeWarning, stacklevel=2)
    value = _plugin_mi(a, b)
    size = samples // batches
    parts = [_plugin_mi(a[i * size:(i + 1) * size], b[i * size:(i + 1) * size]) for i in range(batches)]
    std_err = float(np.std(parts, ddof=1) / np.sqrt(batches)) if batches > 1 else float("nan")
    return MCEstimate(float(value), std_err, samples, cells)


def scenario_sampler(scn: AuditScenario):
    """Generator of (window messages, Eve view) labels by forward simulation.

    Eve's wiretap output is sampled symbol by symbol from her marginal
    channel and reported as its likelihood class.
    """
    code = scn.code
    _, z_to_class = likelihood_classes(code_output_law(code, scn.channel))
    eve_cdf = np.cumsum(scn.channel.eve, axis=1)
    q = eve_cdf.shape[1]
    z_weights = q ** np.arange(code.n - 1, -1, -1)
    book = np.asarray(code.codebook, dtype=np.intp)
    window = set(scn.window)

    def generate(rng, size):
        msgs, fresh = {}, {}
        a_cols, b_cols = [], []
        for j in range(1, scn.slots + 1):
            w1 = rng.integers(0, 2, (size, code.k_s))
            w2 = rng.integers(0, 2, (size, scn.keyed_bits[j - 1]))
            msgs[(j, 1)], msgs[(j, 2)] = w1, w2
            key = np.zeros_like(w2)
            for i, r in enumerate(scn.key_schedule[j - 1]):
                if r.kind == "msg":
                    key[:, i] = msgs[(r.slot, r.part)][:, r.bit]
                elif r.ident is not None and r.ident in fresh:
                    key[:, i] = fresh[r.ident]
                else:
                    key[:, i] = rng.random(size) >= r.p0
                    if r.ident is not None:
                        fresh[r.ident] = key[:, i]
            w_index = w1 @ (1 << np.arange(code.k_s - 1, -1, -1)) if code.k_s else np.zeros(size, dtype=np.int64)
            x = book[(w_index << code.k_r) | rng.integers(0, code.bin_size, size)]
            u = rng.random(x.shape)
            z = np.minimum((u[..., None] >= eve_cdf[x]).sum(axis=-1), q - 1)
            b_cols.append(z_to_class[z @ z_weights][:, None])
            b_cols.append(w2 ^ key)
            if j in window:
                a_cols += [w1, w2]
        a = np.unique(np.concatenate(a_cols, axis=1), axis=0, return_inverse=True)[1].ravel()
        b = np.unique(np.concatenate(b_cols, axis=1), axis=0, return_inverse=True)[1].ravel()
        return a, b

    return generate


def load_scenario(path) -> AuditScenario:
    with open(path) as fh:
        return AuditScenario.from_dict(json.load(fh))
