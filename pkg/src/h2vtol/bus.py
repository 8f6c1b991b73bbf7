"""Redundant dual command network between the flight controller and the actuator nodes.

Both buses daisy-chain every node, in opposite orders, so a single cut wire
leaves each node reachable on the other bus. Frames are semantic events, not
bit-level CAN traffic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from numba import njit

from .config import ConfigError
from .plant.params import N_ACTUATORS, N_MOTORS

BUSES = ("A", "B")
SENDER = "fcc"
# fuel-cell node, 12 motor nodes, 4 servo nodes
NODES = ("fc",) + tuple(f"node{i}" for i in range(1, N_ACTUATORS + 1))
ACTUATOR_NODES = NODES[1:]
MAX_PAYLOAD_BYTES = 64
BYTES_PER_COMMAND = 4
FAILSAFE_HOLD_S = 0.1
FAILSAFE_RAMP_S = 0.2
MISSED_CYCLES_LIMIT = 3


class FailureSpecError(ConfigError):
    pass


@dataclass(frozen=True)
class BusFrame:
    sequence: int
    payload: tuple[float, ...]
    timestamp: float
    bus_id: str = "A"
    target: str = "broadcast"
    sender: str = SENDER

    def __post_init__(self):
        if len(self.payload) * BYTES_PER_COMMAND > MAX_PAYLOAD_BYTES:
            raise ValueError(f"payload of {len(self.payload)} commands exceeds {MAX_PAYLOAD_BYTES} bytes")
        if self.bus_id not in BUSES:
            raise ValueError(f"unknown bus {self.bus_id!r}")


@dataclass(frozen=True)
class BusTopology:
    """Wiring and failure state. Chains run from the flight controller through ``order[bus]``."""
    order: dict = field(default_factory=lambda: {"A": NODES, "B": tuple(reversed(NODES))})
    cut_links: frozenset = frozenset()  # (bus, node): the wire feeding ``node`` on ``bus``
    unplugged: frozenset = frozenset()  # (bus, node): the node's own connector to ``bus``
    dead: frozenset = frozenset()  # nodes that no longer respond or drive their actuator
    drop_rate: tuple[float, float] = (0.0, 0.0)  # per-frame loss probability on A and B
    reversed_motors: frozenset = frozenset()  # motor indices spinning backwards
    latency: float = 1e-3  # s per delivery

    def reachable(self, bus: str, node: str) -> bool:
        if node in self.dead or (bus, node) in self.unplugged:
            return False
        for hop in self.order[bus]:
            if (bus, hop) in self.cut_links:
                return False
            if hop == node:
                return True
        raise KeyError(node)

    def links(self) -> list[tuple[str, str]]:
        return [(bus, node) for bus in BUSES for node in self.order[bus]]

    @cached_property
    def reach(self) -> np.ndarray:
        """(2, nodes) reachability table, rows in bus order, columns in node order."""
        return np.array([[self.reachable(bus, n) for n in NODES] for bus in BUSES])

    @cached_property
    def alive(self) -> np.ndarray:
        return np.array([n not in self.dead for n in NODES])

    @property
    def fuel_cell_alive(self) -> bool:
        return "fc" not in self.dead


@dataclass(frozen=True)
class Delivery:
    via: str  # "A", "B", "both" or "none"
    latency: float | None  # s, None when not delivered


@dataclass(frozen=True)
class DeliveryReport:
    sequence: int
    nodes: dict

    @property
    def lost(self) -> list[str]:
        return [n for n, d in self.nodes.items() if d.via == "none"]


def _delivered(topology: BusTopology, rng: np.random.Generator | None) -> np.ndarray:
    """(2, nodes) received flags for one frame. Drops are drawn bus A first, then in
    node order, so a seeded generator gives the same losses every run."""
    got = topology.reach.copy()
    for k in range(len(BUSES)):
        p = topology.drop_rate[k]
        if p > 0.0 and rng is not None:
            got[k] &= rng.random(len(NODES)) >= p
    return got


def _report(topology: BusTopology, sequence: int, got: np.ndarray) -> DeliveryReport:
    nodes = {}
    for j, node in enumerate(NODES):
        a, b = got[0, j], got[1, j]
        via = "both" if a and b else "A" if a else "B" if b else "none"
        nodes[node] = Delivery(via, topology.latency if a or b else None)
    return DeliveryReport(sequence, nodes)


def publish(topology: BusTopology, frame: BusFrame, rng: np.random.Generator | None = None) -> DeliveryReport:
    """Send ``frame`` on both buses and report how each node received it."""
    return _report(topology, frame.sequence, _delivered(topology, rng))


def _resolve_node(name: str, text: str) -> str:
    if name in ("fuelcell", "fc"):
        return "fc"
    for prefix, offset, count in (("node", 0, N_ACTUATORS), ("motor", 0, N_MOTORS),
                                  ("servo", N_MOTORS, N_ACTUATORS - N_MOTORS)):
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            i = int(name[len(prefix):])
            if 1 <= i <= count:
                return f"node{i + offset}"
    raise FailureSpecError(f"unknown element {name!r} in {text!r}")


def _resolve_bus(name: str, text: str) -> str:
    if name not in BUSES:
        raise FailureSpecError(f"unknown bus {name!r} in {text!r}")
    return name


def inject_failure(topology: BusTopology, spec: str) -> BusTopology:
    """Apply a failure spec: ``cut:A:node5``, ``unplug:A:node5``, ``kill:node7``,
    ``kill:fuelcell``, ``drop:B:0.01`` or ``reverse:motor1``."""
    parts = spec.strip().split(":")
    kind = parts[0]
    if kind in ("cut", "unplug") and len(parts) == 3:
        key = (_resolve_bus(parts[1], spec), _resolve_node(parts[2], spec))
        if kind == "cut":
            return replace(topology, cut_links=topology.cut_links | {key})
        return replace(topology, unplugged=topology.unplugged | {key})
    if kind == "kill" and len(parts) == 2:
        return replace(topology, dead=topology.dead | {_resolve_node(parts[1], spec)})
    if kind == "drop" and len(parts) == 3:
        bus = _resolve_bus(parts[1], spec)
        try:
            p = float(parts[2])
        except ValueError:
            raise FailureSpecError(f"bad drop rate in {spec!r}") from None
        if not 0.0 <= p <= 1.0:
            raise FailureSpecError(f"drop rate must lie in [0, 1] in {spec!r}")
        rates = list(topology.drop_rate)
        rates[BUSES.index(bus)] = p
        return replace(topology, drop_rate=tuple(rates))
    if kind == "reverse" and len(parts) == 2:
        node = _resolve_node(parts[1], spec)
        index = ACTUATOR_NODES.index(node) if node != "fc" else N_MOTORS
        if index >= N_MOTORS:
            raise FailureSpecError(f"only motors can be reversed: {spec!r}")
        return replace(topology, reversed_motors=topology.reversed_motors | {index})
    raise FailureSpecError(f"unrecognized failure spec {spec!r}")


def node_failsafe(last_command: float, time_since_last_command: float) -> float:
    """Output of a node that stops hearing commands: hold, then ramp to zero."""
    t = time_since_last_command
    if t <= FAILSAFE_HOLD_S:
        return last_command
    if t >= FAILSAFE_HOLD_S + FAILSAFE_RAMP_S:
        return 0.0
    return last_command * (1.0 - (t - FAILSAFE_HOLD_S) / FAILSAFE_RAMP_S)


@njit(cache=True)
def _apply_frame(got, sequence, time, commands, last_sequence, last_time, applied, last_command,
                 missed, alive):
    """Offer each bus copy in bus order; the sequence check applies the first and drops the second."""
    dups = 0
    lost = 0
    for j in range(got.shape[1]):
        heard = False
        for k in range(got.shape[0]):
            if not got[k, j]:
                continue
            heard = True
            if last_sequence[j] >= sequence:
                dups += 1
                continue
            last_sequence[j] = sequence
            last_time[j] = time
            applied[j] += 1
            if j > 0:
                last_command[j] = commands[j - 1]
        if heard:
            missed[j] = 0
        else:
            missed[j] += 1
            if alive[j]:
                lost += 1
    return dups, lost


@njit(cache=True)
def _outputs(time, last_command, last_time, alive):
    n = last_command.shape[0] - 1
    out = np.zeros(n)
    for i in range(n):
        if alive[i + 1]:
            stale = time - last_time[i + 1]
            scale = 1.0 - (stale - FAILSAFE_HOLD_S) / FAILSAFE_RAMP_S
            out[i] = last_command[i + 1] * min(max(scale, 0.0), 1.0)
    return out


class CommandNetwork:
    """Per-run network state: node memories, acknowledgement tracking and the drop RNG.

    Node memories are arrays in ``NODES`` order; the fuel-cell node carries no actuator command.
    """

    def __init__(self, topology: BusTopology = BusTopology(), seed: int = 0):
        self.topology = topology
        self.rng = np.random.default_rng(seed)
        n = len(NODES)
        self.last_command = np.zeros(n)
        self.last_time = np.full(n, -math.inf)
        self.last_sequence = np.full(n, -1, dtype=np.int64)
        self.applied = np.zeros(n, dtype=np.int64)
        self.missed = np.zeros(n, dtype=np.int64)
        self.sequence = 0
        self.lost_commands = 0
        self.duplicates = 0

    def inject(self, spec: str):
        self.topology = inject_failure(self.topology, spec)

    def broadcast(self, commands, time: float, report: bool = False) -> DeliveryReport | None:
        """Send the full actuator vector on both buses and update node state.

        Each bus copy is offered to the node in bus order; the sequence check
        applies the first copy and discards the second.
        """
        sequence = self.sequence
        self.sequence += 1
        got = _delivered(self.topology, self.rng)
        dups, lost = _apply_frame(got, sequence, time, np.asarray(commands, dtype=float),
                                  self.last_sequence, self.last_time, self.applied, self.last_command,
                                  self.missed, self.topology.alive)
        self.duplicates += dups
        self.lost_commands += lost
        if not report:
            return None
        if len(commands) * BYTES_PER_COMMAND > MAX_PAYLOAD_BYTES:
            raise ValueError(f"payload of {len(commands)} commands exceeds {MAX_PAYLOAD_BYTES} bytes")
        return _report(self.topology, sequence, got)

    def actuator_outputs(self, time: float) -> np.ndarray:
        return _outputs(time, self.last_command, self.last_time, self.topology.alive)

    def health(self) -> np.ndarray:
        """Controller-side health: a node is dropped after three unacknowledged cycles."""
        return self.missed[1:] < MISSED_CYCLES_LIMIT
