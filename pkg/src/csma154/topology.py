"""Network description: routing tree, carrier-sense neighbourhoods and
interference sets around each receiver."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class NodeSpec:
    id: int
    parent: int | None
    lam: float = 0.0          # packets per symbol time
    link_error: float = 0.0

    def __post_init__(self):
        if self.lam < 0:
            raise TopologyError(f"node {self.id}: arrival rate must be >= 0")
        if not 0.0 <= self.link_error <= 1.0:
            raise TopologyError(f"node {self.id}: link_error must be in [0, 1]")


@dataclass(frozen=True)
class InterferenceSets:
    omega: frozenset
    c1: frozenset
    c2: frozenset


@dataclass
class NetworkSpec:
    """A tree network rooted at ``sink``.

    ``nodes`` holds the transmitting nodes only; the sink has no entry.
    ``neighbors`` maps every node id (sink included) to its CS-range set.
    """

    nodes: dict[int, NodeSpec]
    neighbors: dict[int, frozenset]
    sink: int
    _order: list[int] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self._validate()
        self._order = _leaf_to_root(self)

    # -- structure -------------------------------------------------------
    @property
    def ids(self) -> list[int]:
        return sorted(self.nodes)

    @property
    def all_ids(self) -> list[int]:
        return sorted(set(self.nodes) | {self.sink})

    def parent(self, i: int) -> int:
        return self.nodes[i].parent

    def children(self, i: int) -> list[int]:
        return sorted(k for k, n in self.nodes.items() if n.parent == i)

    def omega(self, i: int) -> frozenset:
        return self.neighbors[i]

    def leaf_to_root(self) -> list[int]:
        """Nodes ordered so that every child precedes its parent."""
        return list(self._order)

    def path(self, j: int) -> list[int]:
        """Transmitting nodes from ``j`` up to (excluding) the sink."""
        out = []
        while j != self.sink:
            out.append(j)
            j = self.nodes[j].parent
        return out

    def is_leaf(self, i: int) -> bool:
        return not self.children(i)

    def sources(self) -> list[int]:
        return [i for i in self.ids if self.nodes[i].lam > 0]

    def in_range(self, a: int, b: int) -> bool:
        return b in self.neighbors[a]

    def _validate(self):
        if self.sink in self.nodes:
            raise TopologyError("sink must not be listed among transmitting nodes")
        everyone = set(self.nodes) | {self.sink}
        for i in everyone:
            if i not in self.neighbors:
                raise TopologyError(f"node {i} has no adjacency entry")
        for i, nb in self.neighbors.items():
            if i not in everyone:
                raise TopologyError(f"adjacency mentions unknown node {i}")
            if i in nb:
                raise TopologyError(f"node {i} is listed as its own neighbour")
            for j in nb:
                if j not in everyone:
                    raise TopologyError(f"adjacency of {i} mentions unknown node {j}")
                if i not in self.neighbors[j]:
                    raise TopologyError(f"adjacency is not symmetric: {i}-{j}")
        for i, n in self.nodes.items():
            if n.parent is None:
                raise TopologyError(f"node {i} has no parent")
            if n.parent not in everyone:
                raise TopologyError(f"node {i}: parent {n.parent} does not exist")
            if n.parent not in self.neighbors[i]:
                raise TopologyError(f"node {i}: parent {n.parent} is not in CS range")
        for i in self.nodes:
            seen = {i}
            j = self.nodes[i].parent
            while j != self.sink:
                if j in seen:
                    raise TopologyError(f"routing cycle through node {j}")
                seen.add(j)
                j = self.nodes[j].parent


def _leaf_to_root(net: NetworkSpec) -> list[int]:
    depth = {i: len(net.path(i)) for i in net.nodes}
    return sorted(net.nodes, key=lambda i: (-depth[i], i))


def adjacency_from_pairs(ids: Iterable[int], pairs: Iterable[tuple[int, int]]
                         ) -> dict[int, frozenset]:
    nb = {i: set() for i in ids}
    for a, b in pairs:
        if a == b:
            raise TopologyError(f"self-loop {a}-{b} in adjacency")
        if a not in nb or b not in nb:
            raise TopologyError(f"adjacency pair {a}-{b} mentions unknown node")
        nb[a].add(b)
        nb[b].add(a)
    return {i: frozenset(s) for i, s in nb.items()}


def full_adjacency(ids: Iterable[int]) -> dict[int, frozenset]:
    ids = list(ids)
    return {i: frozenset(j for j in ids if j != i) for i in ids}


def adjacency_from_coordinates(coords: Mapping[int, tuple[float, float]],
                               cs_range: float) -> dict[int, frozenset]:
    # strict inequality: a node exactly at cs_range is out of range
    nb = {i: set() for i in coords}
    for i, (xi, yi) in coords.items():
        for j, (xj, yj) in coords.items():
            if i != j and math.hypot(xi - xj, yi - yj) < cs_range:
                nb[i].add(j)
    return {i: frozenset(s) for i, s in nb.items()}


def interference_sets(net: NetworkSpec) -> dict[int, InterferenceSets]:
    """Split the interferers of each node's receiver into those the node can
    hear (``c1``) and those hidden from it (``c2``)."""
    out = {}
    for i in net.ids:
        r = net.parent(i)
        omega = net.omega(i)
        region = (net.omega(r) | {r}) - {i}
        out[i] = InterferenceSets(omega=omega,
                                  c1=frozenset(region & omega),
                                  c2=frozenset(region - omega))
    return out


def has_hidden_nodes(net: NetworkSpec) -> bool:
    sets = interference_sets(net)
    if any(s.c2 for s in sets.values()):
        return True
    for i in net.ids:
        active = [j for j in net.omega(i) if j in net.nodes]
        for a in active:
            for b in active:
                if a < b and not net.in_range(a, b):
                    return True
    return False
