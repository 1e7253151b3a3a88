import math

import pytest
from hypothesis import given, strategies as st

from csma154 import model
from csma154.model import NodeState
from csma154.timing import MacParams
from csma154.topology import NetworkSpec, NodeSpec, adjacency_from_pairs, interference_sets


def test_eta_g():
    eta, g = model.eta_g_no_hidden(2.0, 2.0)
    assert (eta, g) == (0.5, 0.25)
    with pytest.raises(ValueError):
        model.eta_g_no_hidden(0.0, 1.0)


def test_dilated_period_limits():
    assert model.dilated_period(0.0, 186) == 186
    assert model.dilated_period(1e-12, 186) == pytest.approx(186, rel=1e-9)
    z = 1 / 186
    assert model.dilated_period(z, 186) == pytest.approx((math.e - 1) * 186)


@given(st.floats(0, 1e-2), st.floats(1, 500))
def test_dilated_period_at_least_T(z, T):
    assert model.dilated_period(z, T) >= T * (1 - 1e-12)


def test_packet_failure():
    assert model.packet_failure(0.1, 0.0) == 0.1
    assert model.packet_failure(0.1, 0.5) == pytest.approx(0.55)


def test_discard_closed_form():
    p = MacParams()
    a, g = 0.3, 0.2
    aK = a ** 5
    x = (1 - aK) * g
    ref = aK * sum(x ** k for k in range(4)) + x ** 4
    assert model.discard_prob(a, g, p) == pytest.approx(ref, rel=1e-12)
    assert model.discard_prob(a, g, MacParams(ack_enabled=False)) == aK


@given(st.floats(0, 0.99), st.floats(0, 0.99))
def test_discard_in_unit_interval(a, g):
    d = model.discard_prob(a, g, MacParams())
    assert 0 <= d <= 1


def test_lone_node_service_rate():
    p = MacParams()
    z, y, sigma = model.service_stats(0.0, 0.0, p)
    assert (z, y) == (90.0, 186.0)
    assert sigma == pytest.approx(1 / 276)


def test_ackless_goodput_counts_failures():
    p = MacParams(ack_enabled=False)
    th = model.hop_goodput(1e-3, 2e-3, 0.1, 0.2, p)
    assert th == pytest.approx(1e-3 * 0.9 * 0.8)


def test_saturated_goodput_choices():
    p = MacParams()
    assert model.hop_goodput(2.0, 1.0, 0.1, 0.0, p) == pytest.approx(0.9)
    assert model.hop_goodput(2.0, 1.0, 0.1, 0.0, p, "service-rate") == 1.0


def test_hidden_collision_arithmetic():
    # sink 0 hears 1, 2 and 3; node 3 also hears 1; node 2 is hidden from 1
    nodes = {k: NodeSpec(k, 0, 1e-4) for k in (1, 2, 3)}
    net = NetworkSpec(nodes, adjacency_from_pairs([0, 1, 2, 3],
                                                  [(0, 1), (0, 2), (0, 3), (1, 3)]), 0)
    sets = interference_sets(net)[1]
    assert (sets.c1, sets.c2) == (frozenset({0, 3}), frozenset({2}))
    T = 186.0
    states = {1: NodeState(alpha=0.1, q=0.5, b=0.4, beta=0.01),
              2: NodeState(alpha=0.05, q=0.3, b=0.4, beta=0.012, h_bar=0.91),
              3: NodeState(alpha=0.2, q=0.6, b=0.5, beta=0.02)}
    # hand evaluation
    tau3 = 0.02 * 0.5 * 0.6 * 0.8            # 0.0048
    tau2 = 0.012 * 0.4 * 0.3 * 0.95          # 0.001368
    eta = 0.01 / (0.01 + tau3)
    c = 1 - math.exp(-12 * 0.01)
    r1 = eta * (1 - 0.91)
    r2 = (1 - eta) * c * (1 - 0.91)
    r3 = eta * 0.91 * (1 - math.exp(-12 * tau3) * math.exp(-T * tau2))
    r4 = tau3 / (0.01 + tau3) * c * 0.91
    ref = (r1 + r2 + r3 + r4) / (eta + (1 - eta) * c)
    assert model.collision_prob_hidden(1, states, sets, T) == pytest.approx(ref, rel=1e-12)
    assert 0.09 < ref < 0.5


def test_hidden_reduces_without_hidden_nodes():
    # C2 empty: R1 = R2 = 0 and only in-range interference remains
    r1, r2, r3, r4 = model.collision_terms(0.6, 0.1, 0.01, 0.005, 0.005, 0.0, 1.0, 186)
    assert r1 == r2 == 0.0
    assert r3 == pytest.approx(0.6 * (1 - math.exp(-12 * 0.005)))
    assert r4 == pytest.approx(0.005 / 0.015 * 0.1)


def test_receiver_silent_gives_no_collisions():
    assert sum(model.collision_terms(1.0, 0.1, 0.01, 0.0, 0.0, 0.0, 1.0, 186)) == 0.0


def test_not_transmitting_fraction():
    assert model.unconditional_not_transmitting(0.3, 0.0) == 1.0
    h = model.not_transmitting_fraction(0.5, 0.1, 100.0, 186.0, 200.0)
    ref = (100 + 0.5 * 0.9 * 200) / (100 + 0.5 * 186 + 0.05 * 186 + 0.5 * 0.9 * 200)
    assert h == pytest.approx(ref)
