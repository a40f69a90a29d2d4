import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from keybuf.channels import (ERASURE, ChannelState, WiretapChannel, input_mutual_informations, main_capacity,
                             make_erasure_pair, make_flip_pair, make_gaussian, secrecy_capacity, transmit)
from keybuf.infotheory import binary_entropy

probs = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
half = st.floats(min_value=0.0, max_value=0.5, allow_nan=False)


@st.composite
def erasure_pairs(draw):
    a, b = sorted((draw(probs), draw(probs)))
    return make_erasure_pair(a, b)


@st.composite
def flip_pairs(draw):
    a, b = sorted((draw(half), draw(half)))
    return make_flip_pair(a, b)


discrete_channels = st.one_of(erasure_pairs(), flip_pairs())


def test_erasure_eve_marginal():
    ch = make_erasure_pair(0.1, 0.5)
    assert ch.eve[0, ERASURE] == pytest.approx(0.5, abs=1e-15)
    assert ch.eve[1, ERASURE] == pytest.approx(0.5, abs=1e-15)
    assert ch.bob[0, ERASURE] == pytest.approx(0.1, abs=1e-15)
    assert ch.degrade == pytest.approx(0.4 / 0.9)


def test_equal_erasures_are_identical():
    ch = make_erasure_pair(0.3, 0.3)
    np.testing.assert_allclose(ch.bob, ch.eve)
    assert secrecy_capacity(ch) == 0.0


@pytest.mark.parametrize("eps1, eps2", [(0.5, 0.2), (-0.1, 0.5), (0.2, 1.5)])
def test_erasure_rejects_bad_pairs(eps1, eps2):
    with pytest.raises(ValueError):
        make_erasure_pair(eps1, eps2)


def test_flip_cascade():
    assert make_flip_pair(0.05, 0.2).degrade == pytest.approx(1 / 6, abs=1e-15)
    assert make_flip_pair(0.1, 0.1).degrade == 0.0


@pytest.mark.parametrize("p1, p2", [(0.2, 0.1), (0.1, 0.6)])
def test_flip_rejects_bad_pairs(p1, p2):
    with pytest.raises(ValueError):
        make_flip_pair(p1, p2)


@given(discrete_channels)
def test_transition_rows_sum_to_one(ch):
    sums = ch.transition.sum(axis=(1, 2))
    np.testing.assert_allclose(sums, 1.0, atol=1e-12)


@given(discrete_channels, st.floats(0, 1))
def test_degradedness_of_input_informations(ch, p):
    i_bob, i_eve = input_mutual_informations(ch, p)
    assert i_bob >= i_eve - 1e-12


@settings(max_examples=30, deadline=None)
@given(discrete_channels)
def test_secrecy_capacity_below_main(ch):
    cs, c = secrecy_capacity(ch), main_capacity(ch)
    assert 0.0 <= cs <= c + 1e-12


def test_noiseless_and_dead_transmission():
    rng = np.random.default_rng(0)
    y, z = transmit(make_erasure_pair(0, 0), np.array([0, 1, 1]), rng)
    assert y.tolist() == [0, 1, 1] and z.tolist() == [0, 1, 1]
    y, z = transmit(make_erasure_pair(1, 1), np.array([0, 1, 1, 0]), rng)
    assert (y == ERASURE).all() and (z == ERASURE).all()


def test_flip_rate_monte_carlo():
    ch = make_flip_pair(0.1, 0.3)
    x = np.zeros(100_000, dtype=np.uint8)
    y, z = transmit(ch, x, np.random.default_rng(3))
    assert abs(y.mean() - 0.1) < 0.01
    assert abs(z.mean() - 0.3) < 0.01


def test_eve_erasures_contain_bobs():
    y, z = transmit(make_erasure_pair(0.2, 0.6), np.ones(5000, dtype=np.uint8), np.random.default_rng(1))
    assert np.all(z[y == ERASURE] == ERASURE)


def test_transmit_is_reproducible():
    ch = make_flip_pair(0.1, 0.3)
    x = np.random.default_rng(0).integers(0, 2, 500)
    a = transmit(ch, x, np.random.default_rng(11))
    b = transmit(ch, x, np.random.default_rng(11))
    assert all(np.array_equal(u, v) for u, v in zip(a, b))


def test_transmit_rejects_non_binary():
    with pytest.raises(ValueError):
        transmit(make_flip_pair(0.1, 0.2), np.array([0, 2]), np.random.default_rng(0))


def test_gaussian_transmit():
    ch = make_gaussian(1.0, 2.0)
    with pytest.raises(ValueError):
        transmit(ch, np.ones(4), np.random.default_rng(0))
    y, z = transmit(ch, np.ones(200_000), np.random.default_rng(0), ChannelState(H=4.0, G=0.0))
    assert y.mean() == pytest.approx(2.0, abs=0.01)
    assert z.var() == pytest.approx(2.0, rel=0.02)


def test_channel_state_rejects_negative_gain():
    with pytest.raises(ValueError):
        ChannelState(H=-1.0, G=0.0)


def test_capacity_examples():
    ch = make_erasure_pair(0.1, 0.5)
    assert secrecy_capacity(ch) == pytest.approx(0.4, abs=1e-6)
    assert main_capacity(ch) == pytest.approx(0.9, abs=1e-6)
    assert main_capacity(make_erasure_pair(1, 1)) == pytest.approx(0.0, abs=1e-12)
    fl = make_flip_pair(0.05, 0.2)
    assert secrecy_capacity(fl) == pytest.approx(binary_entropy(0.2) - binary_entropy(0.05), abs=1e-6)
    assert main_capacity(fl) == pytest.approx(1 - binary_entropy(0.05), abs=1e-6)
    assert main_capacity(fl) == pytest.approx(0.7136, abs=1e-4)


def test_capacity_needs_discrete():
    with pytest.raises(ValueError):
        secrecy_capacity(make_gaussian())


@pytest.mark.parametrize("spec", [
    {"kind": "erasure", "eps1": 0.1, "eps2": 0.5},
    {"kind": "flip", "p1": 0.05, "p2": 0.2},
    {"kind": "gaussian", "sigma1_sq": 1.0, "sigma2_sq": 3.0},
])
def test_json_round_trip(spec):
    assert WiretapChannel.from_dict(spec).to_dict() == spec
