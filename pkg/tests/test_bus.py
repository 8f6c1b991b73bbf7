import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from h2vtol.bus import (
    ACTUATOR_NODES,
    BUSES,
    MISSED_CYCLES_LIMIT,
    NODES,
    BusFrame,
    BusTopology,
    CommandNetwork,
    FailureSpecError,
    inject_failure,
    node_failsafe,
    publish,
)
from h2vtol.config import ConfigError

FRAME = BusFrame(sequence=0, payload=tuple(np.linspace(0.1, 0.9, 16)), timestamp=0.0)
CONTROL_DT = 1.0 / 500.0


def _cuts(*specs):
    topo = BusTopology()
    for s in specs:
        topo = inject_failure(topo, s)
    return topo


def test_frame_payload_limit():
    BusFrame(0, (0.0,) * 16, 0.0)
    with pytest.raises(ValueError):
        BusFrame(0, (0.0,) * 17, 0.0)
    with pytest.raises(ValueError):
        BusFrame(0, (0.0,), 0.0, bus_id="C")


def test_healthy_topology_reaches_everyone_on_both_buses():
    topo = BusTopology()
    assert topo.reach.all()
    report = publish(topo, FRAME)
    assert {d.via for d in report.nodes.values()} == {"both"}
    net = CommandNetwork(topo)
    net.broadcast(FRAME.payload, 0.0)
    np.testing.assert_array_equal(net.applied, 1)
    assert net.duplicates == len(NODES)


def test_single_cut_falls_back_to_other_bus():
    report = publish(_cuts("cut:A:node5"), FRAME)
    assert report.nodes["node5"].via == "B"
    assert report.lost == []
    net = CommandNetwork(_cuts("cut:A:node5"))
    net.broadcast(FRAME.payload, 0.0)
    assert net.applied[NODES.index("node5")] == 1
    np.testing.assert_allclose(net.actuator_outputs(0.0), FRAME.payload)


def test_chain_cut_isolates_downstream_nodes_on_that_bus():
    topo = _cuts("cut:A:node5")
    a = topo.reach[0]
    assert a[: NODES.index("node5")].all() and not a[NODES.index("node5"):].any()
    assert topo.reach[1].all()
    unplugged = _cuts("unplug:A:node5")
    assert unplugged.reach[0].sum() == len(NODES) - 1
    assert not unplugged.reachable("A", "node5")


@pytest.mark.parametrize("specs", [("cut:A:node5", "cut:B:node5"), ("unplug:A:node5", "unplug:B:node5")])
def test_node_cut_from_both_buses_goes_to_failsafe(specs):
    topo = _cuts(*specs)
    report = publish(topo, FRAME)
    assert report.lost == ["node5"]
    assert report.nodes["node5"].latency is None
    net = CommandNetwork(BusTopology())
    net.broadcast(np.full(16, 0.6), 0.0)
    for s in specs:
        net.inject(s)
    k = ACTUATOR_NODES.index("node5")
    for step in range(1, 300):
        net.broadcast(np.full(16, 0.6), step * CONTROL_DT)
    out_hold = net.actuator_outputs(0.05)
    assert out_hold[k] == pytest.approx(0.6)
    assert net.actuator_outputs(0.5)[k] == 0.0
    assert net.actuator_outputs(0.5)[k + 1] == pytest.approx(0.6)
    assert not net.health()[k]
    assert net.health().sum() == 15


def test_cut_marks_only_that_link():
    topo = _cuts("cut:A:node3")
    assert topo.cut_links == frozenset({("A", "node3")})
    assert topo.unplugged == frozenset() and topo.dead == frozenset()


def test_kill_node_drops_health_after_missed_cycles():
    net = CommandNetwork(_cuts("kill:node7"))
    k = ACTUATOR_NODES.index("node7")
    assert not net.topology.reach[:, NODES.index("node7")].any()
    for step in range(MISSED_CYCLES_LIMIT):
        assert net.health()[k]
        net.broadcast(np.zeros(16), step * CONTROL_DT)
    assert not net.health()[k]
    assert net.health().sum() == 15
    assert net.lost_commands == 0  # a dead node is not a live node missing commands


def test_reverse_is_invisible_to_the_bus():
    topo = _cuts("reverse:motor1")
    assert topo.reversed_motors == frozenset({0})
    assert topo.reach.all()
    assert {d.via for d in publish(topo, FRAME).nodes.values()} == {"both"}


def test_fuel_cell_kill():
    topo = _cuts("kill:fuelcell")
    assert not topo.fuel_cell_alive
    assert publish(topo, FRAME).lost == ["fc"]


@pytest.mark.parametrize("spec", ["cut:C:node1", "cut:A:node17", "kill:node0", "kill:motor13",
                                  "drop:A:1.5", "drop:A:x", "reverse:servo1", "explode:node1", "cut:A"])
def test_bad_failure_specs(spec):
    with pytest.raises(FailureSpecError):
        inject_failure(BusTopology(), spec)
    assert issubclass(FailureSpecError, ConfigError)


def test_element_aliases():
    assert _cuts("kill:servo1").dead == frozenset({"node13"})
    assert _cuts("kill:motor12").dead == frozenset({"node12"})
    assert _cuts("drop:B:0.01").drop_rate == (0.0, 0.01)


def test_node_failsafe_schedule():
    assert node_failsafe(0.7, 0.0) == 0.7
    assert node_failsafe(0.7, 0.05) == 0.7
    # oracle: halfway down the 0.2 s ramp that starts after the 0.1 s hold
    assert node_failsafe(0.7, 0.2) == pytest.approx(0.35)
    assert node_failsafe(0.7, 0.3) == pytest.approx(0.0, abs=1e-12)  # end of ramp
    assert node_failsafe(0.7, 0.5) == 0.0


def test_network_outputs_follow_failsafe_schedule():
    net = CommandNetwork(_cuts("unplug:A:node2", "unplug:B:node2"))
    net2 = CommandNetwork()
    net2.broadcast(np.full(16, 0.8), 0.0)
    for t in (0.0, 0.05, 0.15, 0.2, 0.25, 0.4):
        assert net2.actuator_outputs(t)[1] == pytest.approx(node_failsafe(0.8, t))
    net.broadcast(np.full(16, 0.8), 0.0)
    assert net.actuator_outputs(0.0)[1] == 0.0  # never heard a command


def _single_failures():
    topo = BusTopology()
    for bus, node in topo.links():
        yield f"cut:{bus}:{node}"
        yield f"unplug:{bus}:{node}"


@pytest.mark.parametrize("spec", list(_single_failures()))
def test_single_failure_completeness(spec):
    net = CommandNetwork(_cuts(spec), seed=3)
    rng = np.random.default_rng(1)
    n = 50
    for step in range(n):
        cmd = rng.random(16)
        net.broadcast(cmd, step * CONTROL_DT)
        np.testing.assert_array_equal(net.actuator_outputs(step * CONTROL_DT), cmd)
    np.testing.assert_array_equal(net.applied, n)
    assert net.lost_commands == 0
    assert net.health().all()


def test_failure_enumeration_size():
    assert len(list(_single_failures())) == 2 * len(BUSES) * len(NODES)


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_drop_rate_determinism_and_dedup(seed, pa, pb):
    topo = _cuts(f"drop:A:{pa}", f"drop:B:{pb}")

    def run():
        net = CommandNetwork(topo, seed=seed)
        for step in range(40):
            net.broadcast(np.full(16, step / 40), step * CONTROL_DT)
        return net

    a, b = run(), run()
    for field in ("applied", "missed", "last_command", "last_time", "last_sequence"):
        assert getattr(a, field).tobytes() == getattr(b, field).tobytes()
    assert (a.lost_commands, a.duplicates) == (b.lost_commands, b.duplicates)
    # each frame is applied at most once per node
    assert a.applied.max() <= 40
    assert a.applied.sum() + a.lost_commands == 40 * len(NODES)


def test_dedup_on_repeated_sequence():
    net = CommandNetwork()
    net.broadcast(np.full(16, 0.3), 0.0)
    net.sequence = 0  # replay the same frame
    net.broadcast(np.full(16, 0.9), 0.001)
    np.testing.assert_array_equal(net.applied, 1)
    np.testing.assert_allclose(net.actuator_outputs(0.001), 0.3)


@given(st.floats(1e-4, 5e-3))
def test_latency_bound(latency):
    topo = BusTopology(latency=latency)
    for d in publish(topo, FRAME).nodes.values():
        assert d.latency <= latency + CONTROL_DT
