"""Independent brute-force oracles used to pin regression constants.

These deliberately avoid the library's fast paths: code laws are built by
looping over codewords and output words, and joint leakage keeps Eve's raw
output words instead of likelihood classes.
"""

import itertools
import math

import numpy as np


def code_law_bruteforce(codebook, k_s, k_r, eve):
    """p(z | w) by explicit loops; rows are messages, columns output words in lexicographic order."""
    n = len(codebook[0])
    q = len(eve[0])
    outputs = list(itertools.product(range(q), repeat=n))
    law = np.zeros((1 << k_s, len(outputs)))
    for idx, word in enumerate(codebook):
        w = idx >> k_r
        for zi, z in enumerate(outputs):
            p = 1.0
            for x, y in zip(word, z):
                p *= eve[x][y]
            law[w, zi] += p / (1 << k_r)
    return law


def _entropy(p):
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def leakage_bruteforce(codebook, k_s, k_r, eve):
    """I(W; Z) for uniform W."""
    law = code_law_bruteforce(codebook, k_s, k_r, eve)
    pz = law.mean(axis=0)
    return _entropy(pz) - float(np.mean([_entropy(row) for row in law]))


def joint_leakage_bruteforce(scn):
    """I(window messages; raw Eve view) by enumerating every message and key bit."""
    code = scn.code
    eve = scn.channel.eve.tolist()
    law = code_law_bruteforce([list(map(int, r)) for r in code.codebook], code.k_s, code.k_r, eve)
    layout = []
    for j in range(1, scn.slots + 1):
        layout += [(j, 1, i) for i in range(code.k_s)]
        layout += [(j, 2, i) for i in range(scn.keyed_bits[j - 1])]
    fresh_ids, fresh_p0 = [], []
    for refs in scn.key_schedule:
        for r in refs:
            if r.kind == "fresh":
                key = ("named", r.ident) if r.ident is not None else ("anon", len(fresh_ids))
                if key not in fresh_ids:
                    fresh_ids.append(key)
                    fresh_p0.append(r.p0)
    window = set(scn.window)
    views = {}
    by_label = {}
    p_label = {}
    for bits in itertools.product((0, 1), repeat=len(layout) + len(fresh_ids)):
        msg = dict(zip(layout, bits[:len(layout)]))
        fresh = bits[len(layout):]
        weight = 0.5 ** len(layout)
        for b, p0 in zip(fresh, fresh_p0):
            weight *= p0 if b == 0 else 1 - p0
        if weight == 0:
            continue
        cipher = []
        anon = 0
        for j, refs in enumerate(scn.key_schedule, start=1):
            for i, r in enumerate(refs):
                if r.kind == "msg":
                    k = msg[(r.slot, r.part, r.bit)]
                else:
                    if r.ident is not None:
                        k = fresh[fresh_ids.index(("named", r.ident))]
                    else:
                        k = fresh[fresh_ids.index(("anon", anon))]
                        anon += 1
                cipher.append(msg[(j, 2, i)] ^ k)
        tensor = np.array([weight])
        for j in range(1, scn.slots + 1):
            w = 0
            for i in range(code.k_s):
                w = 2 * w + msg[(j, 1, i)]
            tensor = np.multiply.outer(tensor, law[w]).ravel()
        label = tuple(v for (j, _, _), v in msg.items() if j in window)
        c = tuple(cipher)
        views[c] = views.get(c, 0) + tensor
        slot = by_label.setdefault(label, {})
        slot[c] = slot.get(c, 0) + tensor
        p_label[label] = p_label.get(label, 0) + weight
    h_view = _entropy(np.concatenate([v for v in views.values()]))
    h_joint = _entropy(np.concatenate([v for blocks in by_label.values() for v in blocks.values()]))
    h_label = _entropy(list(p_label.values()))
    return h_label + h_view - h_joint


def two_state_waterfill():
    """Hand algebra for H in {1, 4} with probability 1/2 each, P_bar = 1, sigma^2 = 1.

    Both states active: (L - 1) + (L - 1/4) = 2 P_bar, so L = 13/8.
    """
    level = 13 / 8
    p1, p4 = level - 1, level - 0.25
    rate = 0.5 * (0.5 * math.log2(1 + p1)) + 0.5 * (0.5 * math.log2(1 + 4 * p4))
    return level, p1, p4, rate


def four_point_no_csi():
    """Explicit four-term sum over (H, G) in {1, 4} x {1, 4}, uniform."""
    _, p1, p4, _ = two_state_waterfill()
    power = {1: p1, 4: p4}
    total = 0.0
    for h in (1, 4):
        for g in (1, 4):
            p = power[h]
            total += 0.25 * max(0.0, math.log2(1 + h * p) - math.log2(1 + g * p))
    return 0.5 * total
