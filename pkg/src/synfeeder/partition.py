"""Splitting a road graph into per-substation radial trees.

Pipeline: label every node with its nearest substation, cut the graph along
edges whose endpoints disagree, keep the largest (strongly) connected piece of
each cell, reattach everything else, then reduce each cell to a spanning tree.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import networkx as nx
import numpy as np

from .errors import DisconnectedError, EmptyCellError, NotRadialError
from .geo import GeoPoint, haversine_m, haversine_many
from .road_ingest import RoadEdge, RoadGraph, Substation


@dataclass(frozen=True)
class VoronoiLabeling:
    assignment: dict[str, str]
    cross_edges: frozenset[str]
    substation_ids: tuple[str, ...]

    def restricted_to(self, substation_ids: Iterable[str]) -> "VoronoiLabeling":
        """Same labeling with the substation list narrowed (e.g. to drop empty cells)."""
        keep = tuple(s for s in self.substation_ids if s in set(substation_ids))
        return VoronoiLabeling(self.assignment, self.cross_edges, keep)

    def cell_sizes(self) -> dict[str, int]:
        sizes = dict.fromkeys(self.substation_ids, 0)
        for label in self.assignment.values():
            if label in sizes:
                sizes[label] += 1
        return sizes


@dataclass
class Subgraph:
    nodes: set[str]
    edges: list[RoadEdge]


@dataclass
class SubgraphSet:
    subgraphs: dict[str, Subgraph]
    isolated: set[str]
    # passes of the adjacency rule and number of nearest-node fallbacks used
    passes: int = 0
    fallbacks: int = 0

    def owner(self) -> dict[str, str]:
        return {n: sid for sid, sg in self.subgraphs.items() for n in sg.nodes}


@dataclass
class FeederTree:
    """Rooted radial tree. Each non-root node is identified with the edge feeding it."""

    root: str
    points: dict[str, GeoPoint]
    parent: dict[str, str]
    length_m: dict[str, float]
    _order: list[str] | None = field(default=None, repr=False, compare=False)
    _children: dict[str, list[str]] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.root not in self.points:
            raise NotRadialError(f"root {self.root!r} is not a tree node")
        if self.root in self.parent:
            raise NotRadialError("root must not have a parent")
        if set(self.parent) != set(self.points) - {self.root}:
            raise NotRadialError("every non-root node needs exactly one parent")
        self.order()

    def __len__(self) -> int:
        return len(self.points)

    @property
    def children(self) -> dict[str, list[str]]:
        if self._children is None:
            kids: dict[str, list[str]] = {n: [] for n in self.points}
            for child, par in self.parent.items():
                if par not in kids:
                    raise NotRadialError(f"parent {par!r} of {child!r} is not a tree node")
                kids[par].append(child)
            for lst in kids.values():
                lst.sort()
            self._children = kids
        return self._children

    def order(self) -> list[str]:
        """Breadth-first order from the root (parents before children)."""
        if self._order is None:
            kids = self.children
            seen = {self.root}
            out = [self.root]
            queue = deque([self.root])
            while queue:
                for c in kids[queue.popleft()]:
                    if c in seen:
                        raise NotRadialError(f"node {c!r} reached twice")
                    seen.add(c)
                    out.append(c)
                    queue.append(c)
            if len(out) != len(self.points):
                stray = sorted(set(self.points) - seen)[:5]
                raise NotRadialError(f"nodes not reachable from root (cycle?): {stray}")
            self._order = out
        return self._order

    def edges(self) -> list[tuple[str, str, float]]:
        """(parent, child, length_m) in breadth-first order."""
        return [(self.parent[c], c, self.length_m[c]) for c in self.order()[1:]]

    def degree(self, node: str) -> int:
        return len(self.children[node]) + (0 if node == self.root else 1)

    def leaves(self) -> list[str]:
        return sorted(n for n in self.points if n != self.root and not self.children[n])

    def without(self, drop: Iterable[str]) -> "FeederTree":
        drop = set(drop)
        if self.root in drop:
            raise ValueError("cannot remove the root")
        for n in drop:
            if self.children[n] and not set(self.children[n]) <= drop:
                raise ValueError(f"removing {n!r} would disconnect its subtree")
        return FeederTree(
            root=self.root,
            points={n: p for n, p in self.points.items() if n not in drop},
            parent={c: p for c, p in self.parent.items() if c not in drop},
            length_m={c: x for c, x in self.length_m.items() if c not in drop},
        )


def voronoi_label(g: RoadGraph, subs: list[Substation]) -> VoronoiLabeling:
    if not subs:
        raise ValueError("need at least one substation")
    ordered = sorted(subs, key=lambda s: s.id)
    assignment = {}
    for node, pt in g.nodes.items():
        assignment[node] = min(ordered, key=lambda s: (haversine_m(pt, s.location), s.id)).id
    cross = frozenset(e.edge_id for e in g.edges if assignment[e.source] != assignment[e.target])
    return VoronoiLabeling(assignment, cross, tuple(s.id for s in ordered))


def _pick_component(components: Iterable[set[str]]) -> set[str]:
    return min(components, key=lambda c: (-len(c), min(c)))


def split_subgraphs(g: RoadGraph, lab: VoronoiLabeling) -> SubgraphSet:
    cells: dict[str, set[str]] = {sid: set() for sid in lab.substation_ids}
    for node, sid in lab.assignment.items():
        if sid in cells:
            cells[sid].add(node)
    for sid in lab.substation_ids:
        if not cells[sid]:
            raise EmptyCellError(sid)

    by_cell: dict[str, list[RoadEdge]] = {sid: [] for sid in cells}
    for e in g.edges:
        if e.edge_id in lab.cross_edges:
            continue
        sid = lab.assignment[e.source]
        if sid in by_cell:
            by_cell[sid].append(e)

    subgraphs = {}
    for sid, members in cells.items():
        h = nx.DiGraph() if g.directed else nx.Graph()
        h.add_nodes_from(members)
        h.add_edges_from((e.source, e.target) for e in by_cell[sid])
        comps = nx.strongly_connected_components(h) if g.directed else nx.connected_components(h)
        keep = _pick_component(comps)
        edges = [e for e in by_cell[sid] if e.source in keep and e.target in keep]
        subgraphs[sid] = Subgraph(set(keep), edges)

    covered = set().union(*(sg.nodes for sg in subgraphs.values()))
    labeled = {n for n, sid in lab.assignment.items() if sid in cells}
    return SubgraphSet(subgraphs, labeled - covered)


def connect_isolated(s: SubgraphSet, g: RoadGraph) -> SubgraphSet:
    """Attach every isolated node to a subgraph.

    Each pass attaches an isolated node to its smallest-id neighbour (in the
    full road graph) that already belonged to a subgraph when the pass began.
    When a pass attaches nothing, the remaining isolated node closest to any
    subgraph node is joined to it by a synthetic straight edge, and passes
    resume.
    """
    subgraphs = {sid: Subgraph(set(sg.nodes), list(sg.edges)) for sid, sg in s.subgraphs.items()}
    owner = {n: sid for sid, sg in subgraphs.items() for n in sg.nodes}
    isolated = set(s.isolated)
    if not isolated:
        return SubgraphSet(subgraphs, set(), s.passes, s.fallbacks)

    best: dict[tuple[str, str], RoadEdge] = {}
    for e in g.edges:
        if e.is_self_loop:
            continue
        key = (min(e.source, e.target), max(e.source, e.target))
        if key not in best or (e.length_m, e.edge_id) < (best[key].length_m, best[key].edge_id):
            best[key] = e
    adj = g.adjacency()

    passes, fallbacks = s.passes, s.fallbacks
    while isolated:
        passes += 1
        moves = []
        for i in sorted(isolated):
            anchors = sorted(a for a in adj[i] if a in owner)
            if anchors:
                a = anchors[0]
                moves.append((i, owner[a], best[(min(a, i), max(a, i))]))
        if not moves:
            i, a, dist = _nearest_attachment(isolated, owner, g)
            moves.append((i, owner[a], RoadEdge(f"synthetic:{a}->{i}", a, i, dist)))
            fallbacks += 1
        for i, sid, edge in moves:
            owner[i] = sid
            subgraphs[sid].nodes.add(i)
            subgraphs[sid].edges.append(edge)
            isolated.discard(i)
    return SubgraphSet(subgraphs, set(), passes, fallbacks)


def _nearest_attachment(isolated: set[str], owner: dict[str, str], g: RoadGraph) -> tuple[str, str, float]:
    members = sorted(owner)
    lats = np.array([g.nodes[n].lat for n in members])
    lons = np.array([g.nodes[n].lon for n in members])
    best = None
    for i in sorted(isolated):
        p = g.nodes[i]
        d = haversine_many(p.lat, p.lon, lats, lons)
        k = int(np.argmin(d))  # first minimum = smallest id among ties
        cand = (float(d[k]), i, members[k])
        if best is None or cand < best:
            best = cand
    dist, i, a = best
    # coincident points still need a positive edge length
    return i, a, max(dist, 1e-3)


class _UnionFind:
    def __init__(self, items: Iterable[str]):
        self.parent = {x: x for x in items}
        self.rank = dict.fromkeys(self.parent, 0)

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def kruskal(nodes: Iterable[str], edges: Iterable[RoadEdge]) -> list[tuple[str, str, float]]:
    """Minimum spanning forest as (lo_id, hi_id, length) triples.

    Self-loops are dropped and parallel edges collapse to their shortest
    member; ties in length are broken by the (lo_id, hi_id) pair.
    """
    shortest: dict[tuple[str, str], float] = {}
    for e in edges:
        if e.is_self_loop:
            continue
        key = (min(e.source, e.target), max(e.source, e.target))
        if key not in shortest or e.length_m < shortest[key]:
            shortest[key] = e.length_m
    uf = _UnionFind(nodes)
    chosen = []
    for (lo, hi), length in sorted(shortest.items(), key=lambda kv: (kv[1], kv[0])):
        if uf.union(lo, hi):
            chosen.append((lo, hi, length))
    return chosen


def mst_reduce(points: Mapping[str, GeoPoint], edges: Iterable[RoadEdge], root: str) -> FeederTree:
    if root not in points:
        raise ValueError(f"root {root!r} not among subgraph nodes")
    chosen = kruskal(points, edges)
    if len(chosen) != len(points) - 1:
        raise DisconnectedError(
            f"subgraph with {len(points)} nodes has only {len(chosen)} spanning edges"
        )
    adj: dict[str, list[tuple[str, float]]] = {n: [] for n in points}
    for lo, hi, length in chosen:
        adj[lo].append((hi, length))
        adj[hi].append((lo, length))
    parent, lengths = {}, {}
    queue = deque([root])
    seen = {root}
    while queue:
        u = queue.popleft()
        for v, length in sorted(adj[u]):
            if v not in seen:
                seen.add(v)
                parent[v] = u
                lengths[v] = length
                queue.append(v)
    return FeederTree(root, dict(points), parent, lengths)


def pick_root(points: Mapping[str, GeoPoint], sub: Substation) -> str:
    if not points:
        raise ValueError("empty node set")
    return min(points, key=lambda n: (haversine_m(points[n], sub.location), n))
