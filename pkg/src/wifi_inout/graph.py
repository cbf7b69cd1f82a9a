"""Cluster transition graph and bounded-hop neighborhood queries.

Nodes are clusters; an undirected edge joins two distinct clusters
whenever they contain fingerprints collected back to back. The graph is
simple and unweighted; a node's weight is its fingerprint count. Indoor
dwells condense into heavy, densely connected nodes while outdoor walks
string out into chains, which is what the node features pick up.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import List, Optional, Set

from .clustering import ClusterAssignment, check_coverage
from .errors import NodeRangeError
from .model import FingerprintMatrix


@dataclass
class TransitionGraph:
    adjacency: List[Set[int]]       # node -> neighbor set (symmetric, no loops)
    node_weight: List[int]          # node -> member fingerprint count
    node_members: List[List[int]]   # node -> fingerprint indices

    @property
    def n_nodes(self) -> int:
        return len(self.adjacency)

    def degree(self, x: int) -> int:
        return len(self.adjacency[x])


@dataclass(frozen=True)
class Neighborhood:
    center: int
    d: int
    members: Set[int]


def build_graph(
    assignment: ClusterAssignment,
    m: FingerprintMatrix,
    max_gap_ms: Optional[int] = None,
) -> TransitionGraph:
    """Edges come exactly from consecutive-index fingerprint pairs that sit
    in distinct clusters. With max_gap_ms set, pairs separated by a longer
    timestamp gap contribute nothing (guards multi-hour collection holes;
    off by default)."""
    check_coverage(assignment, m)
    n = assignment.n_clusters
    adjacency: List[Set[int]] = [set() for _ in range(n)]
    cluster_of = assignment.cluster_of
    ts = m.timestamps_ms
    for i in range(m.T - 1):
        u = int(cluster_of[i])
        v = int(cluster_of[i + 1])
        if u == v:
            continue
        if max_gap_ms is not None and ts[i + 1] - ts[i] > max_gap_ms:
            continue
        adjacency[u].add(v)
        adjacency[v].add(u)
    return TransitionGraph(
        adjacency=adjacency,
        node_weight=[len(c) for c in assignment.clusters],
        node_members=[list(c) for c in assignment.clusters],
    )


def neighborhood(g: TransitionGraph, x: int, d: int) -> Neighborhood:
    """Nodes reachable from x within d hops (breadth-first, includes x)."""
    if not 0 <= x < g.n_nodes:
        raise NodeRangeError(f"node {x} out of range [0, {g.n_nodes})")
    if d < 0:
        raise NodeRangeError(f"hop bound must be >= 0, got {d}")
    members = {x}
    frontier = deque([(x, 0)])
    while frontier:
        node, depth = frontier.popleft()
        if depth == d:
            continue
        for nb in g.adjacency[node]:
            if nb not in members:
                members.add(nb)
                frontier.append((nb, depth + 1))
    return Neighborhood(center=x, d=d, members=members)


def bfs_layers(g: TransitionGraph, x: int, max_d: int) -> List[Set[int]]:
    """Layer l holds the nodes first reached at exactly l hops; used to
    accumulate features for several hop bounds in one traversal."""
    if not 0 <= x < g.n_nodes:
        raise NodeRangeError(f"node {x} out of range [0, {g.n_nodes})")
    seen = {x}
    layers = [{x}]
    current = {x}
    for _ in range(max_d):
        nxt: Set[int] = set()
        for node in current:
            for nb in g.adjacency[node]:
                if nb not in seen:
                    seen.add(nb)
                    nxt.add(nb)
        layers.append(nxt)
        if not nxt:
            break
        current = nxt
    return layers


# --- graph export: one "u v" edge per line + a node table -------------------

def write_graph(g: TransitionGraph, edges_path, nodes_path) -> None:
    with open(edges_path, "w", encoding="utf-8") as f:
        for u in range(g.n_nodes):
            for v in sorted(g.adjacency[u]):
                if u < v:
                    f.write(f"{u} {v}\n")
    with open(nodes_path, "w", encoding="utf-8") as f:
        f.write("id weight size\n")
        for u in range(g.n_nodes):
            f.write(f"{u} {g.node_weight[u]} {len(g.node_members[u])}\n")
