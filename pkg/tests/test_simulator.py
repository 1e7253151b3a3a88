import math

import pytest

from csma154.config import bundled, load_config
from csma154.pipeline import sim_config
from csma154.simulator import SimConfig, replicate, run
from csma154.solver import solve
from csma154.timing import MacParams, SYMBOLS_PER_SECOND
from csma154.topology import NetworkSpec, NodeSpec, adjacency_from_pairs, full_adjacency

S = SYMBOLS_PER_SECOND


def cfg_for(net, params=MacParams(), seconds=20.0, **kw):
    return SimConfig(net=net, params=params, measurement=seconds * S, **kw)


def test_lone_saturated_node_renewal():
    net = NetworkSpec({1: NodeSpec(1, 0, 1000 / S)}, full_adjacency([0, 1]), 0)
    r = run(cfg_for(net, seconds=50))
    m = r.node[1]
    assert m["alpha"] == 0 and m["delta"] == 0
    assert m["theta"] == pytest.approx(S / (90 + 186), rel=0.01)
    assert m["q"] == pytest.approx(1.0)


def test_two_saturated_nodes_collide():
    net = NetworkSpec({1: NodeSpec(1, 0, 1000 / S), 2: NodeSpec(2, 0, 1000 / S)},
                      full_adjacency([0, 1, 2]), 0)
    r = run(cfg_for(net, seconds=30))
    for i in (1, 2):
        assert r.node[i]["alpha"] > 0.1
        assert 0 < r.node[i]["p"] < 0.2


def test_hidden_node_ablation():
    # 1 and 2 both send to 0 and cannot hear each other
    pairs = [(0, 1), (0, 2)]
    lam = 20 / S
    hidden = NetworkSpec({1: NodeSpec(1, 0, lam), 2: NodeSpec(2, 0, lam)},
                         adjacency_from_pairs([0, 1, 2], pairs), 0)
    silent = NetworkSpec({1: NodeSpec(1, 0, lam), 2: NodeSpec(2, 0, 0.0)},
                         adjacency_from_pairs([0, 1, 2], pairs), 0)
    p_hidden = run(cfg_for(hidden, seconds=60)).node[1]["p"]
    p_silent = run(cfg_for(silent, seconds=60)).node[1]["p"]
    assert p_silent == 0
    assert p_hidden > 0.1


def test_zero_load():
    net = NetworkSpec({1: NodeSpec(1, 0, 0.0)}, full_adjacency([0, 1]), 0)
    r = run(cfg_for(net, seconds=1))
    assert r.node[1]["q"] == 0
    assert all(v == 0 for v in r.counters[1].values())


def test_determinism_and_conservation():
    cfg = load_config(bundled("fig12"))
    sc = sim_config(cfg, cfg.network_at(3), reps=1)
    sc.measurement = 20 * S
    a, b = run(sc, 5), run(sc, 5)
    assert a == b
    assert a.conservation_ok()
    c = run(sc, 6)
    assert c != a


def test_debug_mode_checks_channel():
    cfg = load_config(bundled("fig12"))
    sc = sim_config(cfg, cfg.network_at(3), reps=1)
    sc.measurement = 5 * S
    sc.debug = True
    assert run(sc).conservation_ok()


@pytest.mark.parametrize("ack", [True, False])
def test_analysis_close_at_light_load(ack):
    params = MacParams(ack_enabled=ack)
    lam = 10 / S
    net = NetworkSpec({k: NodeSpec(k, 0, lam) for k in (1, 2, 3)},
                      full_adjacency([0, 1, 2, 3]), 0)
    st = replicate(cfg_for(net, params, seconds=200, replications=3))
    res = solve(net, params)
    for i in (1, 2, 3):
        # about 6000 packets per node: Poisson noise is near 1.3%
        assert st.node[i]["theta"].mean == pytest.approx(res.states[i].theta * S, rel=0.05)
        assert st.node[i]["q"].mean == pytest.approx(res.states[i].q, rel=0.15)


def test_replicate_estimates():
    net = NetworkSpec({1: NodeSpec(1, 0, 5 / S)}, full_adjacency([0, 1]), 0)
    st = replicate(cfg_for(net, seconds=10, replications=4))
    e = st.node[1]["theta"]
    assert e.n == 4 and e.half_width >= 0
    assert [r.seed for r in st.runs] == [1, 2, 3, 4]
    assert 0 <= st.source[1]["delivery"].mean <= 1


def test_cca_sample_start_option():
    net = NetworkSpec({1: NodeSpec(1, 0, 50 / S), 2: NodeSpec(2, 0, 50 / S)},
                      full_adjacency([0, 1, 2]), 0)
    r = run(cfg_for(net, seconds=10, cca_sample="start"))
    assert r.conservation_ok() and not math.isnan(r.node[1]["alpha"])


def test_config_validation():
    net = NetworkSpec({1: NodeSpec(1, 0, 0.0)}, full_adjacency([0, 1]), 0)
    with pytest.raises(ValueError):
        SimConfig(net, MacParams(), measurement=0)
    with pytest.raises(ValueError):
        SimConfig(net, MacParams(), measurement=1, replications=0)
