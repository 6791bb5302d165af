"""Memristor-network topologies and their incidence matrices.

A topology is a directed multigraph: every memristor branch and every voltage
source is an edge ``(start, end)`` between circuit nodes.  Edge orientation is
the device polarity.  Node ``ground_node`` is the potential/flux reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

UNIDIRECTIONAL = "unidirectional"
RANDOM = "random"
POLARITIES = (UNIDIRECTIONAL, RANDOM)

# Names of the four shipped network families.
RING_UP = "ring-up"
RING_RP = "ring-rp"
RAND_UP = "rand-up"
RAND_RP = "rand-rp"
NETWORK_TYPES = (RING_UP, RING_RP, RAND_UP, RAND_RP)


class TopologyError(ValueError):
    """Raised for invalid or unsatisfiable network topologies."""


def _is_connected(n_nodes: int, edges) -> bool:
    if n_nodes == 1:
        return True
    if not edges:
        return False
    e = np.asarray(edges, dtype=int)
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n_nodes, n_nodes))
    n_comp, _ = connected_components(adj, directed=False)
    return n_comp == 1


@dataclass(frozen=True)
class NetworkTopology:
    """Memristor branches plus voltage-source placement on ``n_nodes`` nodes."""

    n_nodes: int
    memristor_edges: tuple[tuple[int, int], ...]
    source_edges: tuple[tuple[int, int], ...]
    ground_node: int = 0
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(
            self, "memristor_edges", tuple((int(s), int(e)) for s, e in self.memristor_edges)
        )
        object.__setattr__(
            self, "source_edges", tuple((int(s), int(e)) for s, e in self.source_edges)
        )
        if self.n_nodes < 2:
            raise TopologyError("a circuit needs at least two nodes")
        if not 0 <= self.ground_node < self.n_nodes:
            raise TopologyError(f"ground node {self.ground_node} out of range")
        if not self.memristor_edges:
            raise TopologyError("no memristor branches")
        if not self.source_edges:
            raise TopologyError("no voltage source")
        for kind, edges in (("memristor", self.memristor_edges), ("source", self.source_edges)):
            for m, (s, e) in enumerate(edges):
                if s == e:
                    raise TopologyError(f"{kind} edge {m} is a self-loop at node {s}")
                if not (0 <= s < self.n_nodes and 0 <= e < self.n_nodes):
                    raise TopologyError(f"{kind} edge {m} = ({s}, {e}) out of range")
        if not _is_connected(self.n_nodes, self.memristor_edges + self.source_edges):
            raise TopologyError("network graph is not connected")

    @property
    def n_memristors(self) -> int:
        return len(self.memristor_edges)

    @property
    def n_sources(self) -> int:
        return len(self.source_edges)

    def memristors_connected(self) -> bool:
        """True when the memristor branches alone connect every node."""
        return _is_connected(self.n_nodes, self.memristor_edges)


@dataclass(frozen=True)
class IncidenceMatrices:
    E_m: np.ndarray  # (n_nodes, n_memristors)
    E_i: np.ndarray  # (n_nodes, n_sources)


def _incidence(n_nodes: int, edges) -> np.ndarray:
    E = np.zeros((n_nodes, len(edges)))
    for m, (s, e) in enumerate(edges):
        if s == e:
            raise TopologyError(f"edge {m} is a self-loop")
        if not (0 <= s < n_nodes and 0 <= e < n_nodes):
            raise TopologyError(f"edge {m} = ({s}, {e}) out of range")
        E[s, m] = -1.0
        E[e, m] = 1.0
    return E


def build_incidence(topology: NetworkTopology) -> IncidenceMatrices:
    """Incidence matrices: -1 at the start node, +1 at the end node of each edge."""
    E_m = _incidence(topology.n_nodes, topology.memristor_edges)
    E_i = _incidence(topology.n_nodes, topology.source_edges)
    E_m.flags.writeable = False
    E_i.flags.writeable = False
    return IncidenceMatrices(E_m, E_i)


def _orient(edge, polarity, rng):
    if polarity == RANDOM and rng.random() < 0.5:
        return (edge[1], edge[0])
    return edge


def _check_polarity(polarity):
    if polarity not in POLARITIES:
        raise ValueError(f"polarity must be one of {POLARITIES}, got {polarity!r}")


def generate_ring(n_nodes: int = 10, polarity: str = UNIDIRECTIONAL, seed=None) -> NetworkTopology:
    """Double ring: two parallel memristors between each pair (k, k+1 mod n).

    With ``polarity='random'`` every branch orientation is an independent fair
    coin flip.  The source spans node 0 (ground) and node ``n_nodes // 2``.
    """
    if n_nodes < 3:
        raise TopologyError("a ring needs at least 3 nodes")
    _check_polarity(polarity)
    rng = np.random.default_rng(seed)
    edges = []
    for k in range(n_nodes):
        for _ in range(2):
            edges.append(_orient((k, (k + 1) % n_nodes), polarity, rng))
    name = RING_UP if polarity == UNIDIRECTIONAL else RING_RP
    return NetworkTopology(n_nodes, tuple(edges), ((0, n_nodes // 2),), 0, name)


def _ring_adjacent(i: int, j: int, n: int) -> bool:
    d = (i - j) % n
    return d in (0, 1, n - 1)


def generate_random(
    n_nodes: int = 20,
    n_memristors: int = 20,
    polarity: str = UNIDIRECTIONAL,
    rewire_fraction: float = 0.3,
    seed=None,
    max_attempts: int = 1000,
) -> NetworkTopology:
    """Ring with a fraction of branches rewired to random non-local node pairs.

    Starts from a single ring of ``n_nodes`` branches (extra branches are added
    in parallel, round-robin, until ``n_memristors``), then rewires
    ``ceil(rewire_fraction * n_memristors)`` distinct randomly chosen branches.
    A rewire that would leave the memristor graph disconnected is redrawn, up
    to ``max_attempts`` times per branch.
    """
    if n_nodes < 4:
        raise TopologyError("random networks need at least 4 nodes for non-local branches")
    if n_memristors < n_nodes:
        raise TopologyError("n_memristors must be >= n_nodes")
    if not 0.0 <= rewire_fraction <= 1.0:
        raise ValueError("rewire_fraction must lie in [0, 1]")
    _check_polarity(polarity)
    rng = np.random.default_rng(seed)

    pairs = [(k, (k + 1) % n_nodes) for k in range(n_nodes)]
    pairs += [pairs[j % n_nodes] for j in range(n_memristors - n_nodes)]

    n_rewire = math.ceil(rewire_fraction * n_memristors - 1e-9)
    chosen = rng.choice(n_memristors, size=n_rewire, replace=False) if n_rewire else []
    for m in chosen:
        for _ in range(max_attempts):
            i, j = (int(x) for x in rng.choice(n_nodes, size=2, replace=False))
            if _ring_adjacent(i, j, n_nodes):
                continue
            trial = pairs.copy()
            trial[m] = (min(i, j), max(i, j))
            if _is_connected(n_nodes, trial):
                pairs = trial
                break
        else:
            raise TopologyError(
                f"could not rewire branch {m} in {max_attempts} attempts; "
                "topology constraints unsatisfiable"
            )

    edges = tuple(_orient(p, polarity, rng) for p in pairs)
    name = RAND_UP if polarity == UNIDIRECTIONAL else RAND_RP
    return NetworkTopology(n_nodes, edges, ((0, n_nodes // 2),), 0, name)


def make_network(kind: str, seed=None) -> NetworkTopology:
    """One of the four shipped network families with its default sizes."""
    if kind == RING_UP:
        return generate_ring(10, UNIDIRECTIONAL, seed)
    if kind == RING_RP:
        return generate_ring(10, RANDOM, seed)
    if kind == RAND_UP:
        return generate_random(20, 20, UNIDIRECTIONAL, 0.3, seed)
    if kind == RAND_RP:
        return generate_random(20, 20, RANDOM, 0.3, seed)
    raise ValueError(f"unknown network type {kind!r}; expected one of {NETWORK_TYPES}")


# -- plain-text netlist -----------------------------------------------------

def format_netlist(topology: NetworkTopology) -> str:
    lines = [
        f"# {topology.name}: {topology.n_nodes} nodes, "
        f"{topology.n_memristors} memristors, {topology.n_sources} sources",
        f"# ground {topology.ground_node}",
    ]
    lines += [f"M {s} {e}" for s, e in topology.memristor_edges]
    lines += [f"V {s} {e}" for s, e in topology.source_edges]
    return "\n".join(lines) + "\n"


def parse_netlist(text: str, n_nodes: int | None = None, ground_node: int = 0,
                  name: str = "custom") -> NetworkTopology:
    """Parse ``M <start> <end>`` / ``V <start> <end>`` lines; ``#`` starts a comment.

    ``n_nodes`` defaults to one more than the largest node index used.
    """
    mem, src = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0].upper() not in ("M", "V"):
            raise TopologyError(f"line {lineno}: expected 'M|V <start> <end>', got {raw!r}")
        try:
            edge = (int(parts[1]), int(parts[2]))
        except ValueError as exc:
            raise TopologyError(f"line {lineno}: non-integer node index") from exc
        if min(edge) < 0:
            raise TopologyError(f"line {lineno}: negative node index")
        (mem if parts[0].upper() == "M" else src).append(edge)
    if n_nodes is None:
        n_nodes = 1 + max((max(e) for e in mem + src), default=0)
    return NetworkTopology(n_nodes, tuple(mem), tuple(src), ground_node, name)


def write_netlist(topology: NetworkTopology, path) -> None:
    Path(path).write_text(format_netlist(topology))


def read_netlist(path, n_nodes: int | None = None, ground_node: int = 0) -> NetworkTopology:
    path = Path(path)
    return parse_netlist(path.read_text(), n_nodes, ground_node, name=path.stem)
