"""Network layout, state snapshots, and the per-slot update rules.

The model is a slotted fluid approximation: backlogs and battery levels are
nonnegative floats, service and harvest are applied once per slot.  Everything
here is policy-agnostic; the control layer only sees these two update rules.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class BatteryOverdraw(RuntimeError):
    """A node was asked to spend more energy than its battery holds.

    The control layer is responsible for never letting this happen, so the
    simulator treats it as a hard failure rather than clamping.
    """

    def __init__(self, node: int, slot: int, deficit: float):
        self.node = node
        self.slot = slot
        self.deficit = deficit
        super().__init__(
            f"node {node} overdraws its battery at slot {slot} "
            f"(deficit {deficit:.6g} J)"
        )


@dataclass(frozen=True, eq=False)
class NetworkTopology:
    """Directed multi-hop layout plus the beacon-facing geometry.

    Node ids run 0..n_nodes-1.  ``links`` are distinct (tx, rx) pairs,
    ``streams`` are (source, sink) pairs, and ``node_angles`` (radians,
    measured from array broadside) place each node for the energy channel.
    """

    n_nodes: int
    n_antennas: int
    links: tuple[tuple[int, int], ...]
    streams: tuple[tuple[int, int], ...]
    node_angles: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "links", tuple((int(a), int(b)) for a, b in self.links))
        object.__setattr__(self, "streams", tuple((int(a), int(b)) for a, b in self.streams))
        object.__setattr__(self, "node_angles", tuple(float(a) for a in self.node_angles))
        if self.n_nodes < 1:
            raise ValueError("need at least one node")
        if self.n_antennas < 1:
            raise ValueError("need at least one beacon antenna")
        if len(self.node_angles) != self.n_nodes:
            raise ValueError("one angle per node required")
        seen = set()
        for tx, rx in self.links:
            if not (0 <= tx < self.n_nodes and 0 <= rx < self.n_nodes):
                raise ValueError(f"link ({tx},{rx}) references unknown node")
            if tx == rx:
                raise ValueError(f"self-loop link at node {tx}")
            if (tx, rx) in seen:
                raise ValueError(f"duplicate link ({tx},{rx})")
            seen.add((tx, rx))
        for src, sink in self.streams:
            if not (0 <= src < self.n_nodes and 0 <= sink < self.n_nodes):
                raise ValueError(f"stream ({src},{sink}) references unknown node")
            if src == sink:
                raise ValueError("stream source equals sink")
        if not self.streams:
            raise ValueError("need at least one stream")

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_streams(self) -> int:
        return len(self.streams)

    @cached_property
    def tx(self) -> np.ndarray:
        return np.array([l[0] for l in self.links], dtype=np.intp)

    @cached_property
    def rx(self) -> np.ndarray:
        return np.array([l[1] for l in self.links], dtype=np.intp)

    @cached_property
    def out_inc(self) -> np.ndarray:
        """(n_nodes, n_links) 0/1 matrix selecting each node's outgoing links."""
        inc = np.zeros((self.n_nodes, self.n_links))
        inc[self.tx, np.arange(self.n_links)] = 1.0
        return inc

    @cached_property
    def in_inc(self) -> np.ndarray:
        """(n_nodes, n_links) 0/1 matrix selecting each node's incoming links."""
        inc = np.zeros((self.n_nodes, self.n_links))
        inc[self.rx, np.arange(self.n_links)] = 1.0
        return inc

    @cached_property
    def max_out_degree(self) -> int:
        return int(self.out_inc.sum(axis=1).max(initial=0.0))

    @cached_property
    def max_in_degree(self) -> int:
        return int(self.in_inc.sum(axis=1).max(initial=0.0))

    @cached_property
    def sink_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Index pair (node ids, stream ids) of every stream's sink queue."""
        sinks = np.array([sink for _, sink in self.streams], dtype=np.intp)
        return sinks, np.arange(self.n_streams)

    @cached_property
    def angles(self) -> np.ndarray:
        return np.array(self.node_angles, dtype=float)


@dataclass(frozen=True, eq=False)
class NetworkState:
    """Snapshot at the start of a slot: backlogs (bits) and batteries (J)."""

    queues: np.ndarray     # (n_nodes, n_streams)
    batteries: np.ndarray  # (n_nodes,)
    slot: int = 0

    def __post_init__(self):
        q = np.array(self.queues, dtype=float)
        b = np.array(self.batteries, dtype=float)
        if np.any(q < 0) or np.any(b < 0):
            raise ValueError("backlogs and batteries must be nonnegative")
        q.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "queues", q)
        object.__setattr__(self, "batteries", b)

    @classmethod
    def zeros(cls, topo: NetworkTopology) -> "NetworkState":
        return cls(np.zeros((topo.n_nodes, topo.n_streams)), np.zeros(topo.n_nodes))


def step_queues(topo, queues, rates, arrivals, absorb=True):
    """Advance every backlog one slot.

    Service is truncated at zero before inflow and fresh arrivals are added:
    next = max(backlog - outflow, 0) + inflow + arrivals.  A link's full rate
    is booked at the receiver even if the transmitter queue ran dry; that is
    the fluid-model convention and keeps the update decoupled per node.

    With ``absorb`` set, each stream's queue at its own sink is pinned to zero
    and the booked inflow there is returned as delivered bits per stream.
    """
    rates = np.asarray(rates, dtype=float)
    if np.any(rates < 0):
        raise ValueError("negative link rate")
    outflow = topo.out_inc @ rates
    inflow = topo.in_inc @ rates
    nxt = np.maximum(queues - outflow, 0.0) + inflow + arrivals
    delivered = np.zeros(topo.n_streams)
    if absorb:
        sinks, streams = topo.sink_index
        delivered = inflow[sinks, streams] + np.asarray(arrivals)[sinks, streams]
        nxt[sinks, streams] = 0.0
    return nxt, delivered


def step_batteries(topo, batteries, link_powers, harvest, slot):
    """Advance every battery one slot: debit transmit energy, credit harvest.

    Spending above the stored level raises BatteryOverdraw identifying the
    worst offending node; nothing is clamped.
    """
    link_powers = np.asarray(link_powers, dtype=float)
    harvest = np.asarray(harvest, dtype=float)
    if np.any(link_powers < 0):
        raise ValueError("negative link power")
    if np.any(harvest < 0):
        raise ValueError("negative harvest")
    spend = topo.out_inc @ link_powers
    deficit = spend - batteries
    if np.any(deficit > 0):
        node = int(np.argmax(deficit))
        raise BatteryOverdraw(node, slot, float(deficit[node]))
    return batteries - spend + harvest
