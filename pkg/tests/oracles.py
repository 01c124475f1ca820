"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools
from fractions import Fraction
import math

import numpy as np


def reachability_components(nodes, arcs):
    """Strongly connected components by transitive closure (O(n^3), small graphs only)."""
    nodes = sorted(nodes)
    reach = {u: {u} for u in nodes}
    for u, v in arcs:
        reach[u].add(v)
    changed = True
    while changed:
        changed = False
        for u in nodes:
            new = set().union(*(reach[v] for v in reach[u]))
            if not new <= reach[u]:
                reach[u] |= new
                changed = True
    comps, seen = [], set()
    for u in nodes:
        if u in seen:
            continue
        comp = {v for v in reach[u] if u in reach[v]}
        seen |= comp
        comps.append(comp)
    return comps


def is_spanning_tree(nodes, chosen):
    parent = {n: n for n in nodes}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for u, v, _ in chosen:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return len({find(n) for n in nodes}) == 1


def brute_force_mst_weight(nodes, edges):
    """Minimum total weight over every (n-1)-subset of edges that spans; None if disconnected."""
    nodes = list(nodes)
    best = None
    for subset in itertools.combinations(edges, len(nodes) - 1):
        if is_spanning_tree(nodes, subset):
            w = math.fsum(e[2] for e in subset)
            if best is None or w < best:
                best = w
    return best


def winding_number(px, py, ring):
    """Winding number of a closed ring around (px, py)."""
    wn = 0
    for (x0, y0), (x1, y1) in zip(ring, ring[1:]):
        cross = (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)
        if y0 <= py < y1 and cross > 0:
            wn += 1
        elif y1 <= py < y0 and cross < 0:
            wn -= 1
    return wn


def brute_force_balance(loads):
    """(objective, labels) minimising |A-B|+|B-C|+|C-A| in exact rational arithmetic.

    The lexicographically first optimal labelling wins; the objective is
    returned rounded to the nearest float.
    """
    exact = [Fraction(p) for p in loads]
    best = None
    for labels in itertools.product(range(3), repeat=len(loads)):
        sums = [sum((p for p, l in zip(exact, labels) if l == k), Fraction(0)) for k in range(3)]
        obj = abs(sums[0] - sums[1]) + abs(sums[1] - sums[2]) + abs(sums[2] - sums[0])
        if best is None or obj < best[0]:
            best = (obj, labels)
    return float(best[0]), best[1]


def min_parallels_exhaustive(capacities, l_max, s):
    """Smallest l in 1..l_max such that some cable satisfies cap*l > s; None if none."""
    feasible = [l for l in range(1, l_max + 1) for c in capacities if c * l > s]
    return min(feasible) if feasible else None


def parse_dss(text):
    """Minimal OpenDSS reader: {kind: {name: {key: value}}} plus the ordered kinds seen."""
    model, kinds = {}, []
    for line in text.splitlines():
        parts = line.split()
        if not parts or parts[0] != "New":
            continue
        kind, name = parts[1].split(".", 1)
        kinds.append(kind)
        props = dict(p.split("=", 1) for p in parts[2:])
        model.setdefault(kind, {})[name] = props
    return model, kinds


def dss_closure_errors(model):
    """Dangling references in a parsed model: lines to unknown linecodes, loads on unknown buses."""
    buses = set()
    for kind in ("Circuit", "Line"):
        for props in model.get(kind, {}).values():
            for key in ("bus1", "bus2"):
                if key in props:
                    buses.add(props[key].split(".")[0])
    codes = set(model.get("Linecode", {}))
    errors = []
    for name, props in model.get("Line", {}).items():
        if props["linecode"] not in codes:
            errors.append(f"Line.{name} -> Linecode.{props['linecode']}")
    for name, props in model.get("Load", {}).items():
        if props["bus1"].split(".")[0] not in buses:
            errors.append(f"Load.{name} -> bus {props['bus1']}")
    return errors


def brute_force_balance_int(loads):
    """Vectorised 3^n enumeration for integer loads: (objective, labels) of the lexicographically first optimum."""
    n = len(loads)
    labels = np.array(list(itertools.product(range(3), repeat=n)), dtype=np.int64).reshape(-1, n)
    w = np.asarray(loads, dtype=np.int64)
    sums = np.stack([((labels == k) * w).sum(axis=1) for k in range(3)], axis=1)
    obj = np.abs(sums[:, 0] - sums[:, 1]) + np.abs(sums[:, 1] - sums[:, 2]) + np.abs(sums[:, 2] - sums[:, 0])
    best = int(np.argmin(obj))  # argmin returns the first minimum, i.e. the lexicographic one
    return int(obj[best]), tuple(int(k) for k in labels[best])


def undirected_connected(nodes, pairs):
    """Breadth-first connectivity of ``nodes`` using only ``pairs`` with both ends inside."""
    nodes = set(nodes)
    if not nodes:
        return False
    adj = {n: [] for n in nodes}
    for u, v in pairs:
        if u in nodes and v in nodes:
            adj[u].append(v)
            adj[v].append(u)
    start = min(nodes)
    seen, stack = {start}, [start]
    while stack:
        for v in adj[stack.pop()]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen == nodes
