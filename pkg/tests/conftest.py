from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

from synfeeder.geo import GeoPoint
from synfeeder.partition import FeederTree
from synfeeder.road_ingest import RoadEdge, RoadGraph

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def chain_tree(n: int, seg_m: float = 1000.0, prefix: str = "c") -> FeederTree:
    """Root c0 followed by c1..c{n-1} in a line, spaced eastwards along the equator."""
    ids = [f"{prefix}{i}" for i in range(n)]
    points = {nid: GeoPoint(0.0, 0.01 * i) for i, nid in enumerate(ids)}
    parent = {ids[i]: ids[i - 1] for i in range(1, n)}
    return FeederTree(ids[0], points, parent, {c: seg_m for c in parent})


def tree_from_parents(parent: dict[str, str], root: str, length: float = 100.0) -> FeederTree:
    nodes = {root, *parent, *parent.values()}
    points = {n: GeoPoint(0.0, 0.001 * k) for k, n in enumerate(sorted(nodes))}
    return FeederTree(root, points, dict(parent), {c: length for c in parent})


def random_tree(rng: random.Random, n: int) -> FeederTree:
    """Random recursive tree on n nodes with string ids t0000.. (t0000 is the root)."""
    ids = [f"t{i:04d}" for i in range(n)]
    parent = {ids[i]: ids[rng.randrange(i)] for i in range(1, n)}
    points = {nid: GeoPoint(rng.uniform(-1, 1), rng.uniform(-1, 1)) for nid in ids}
    lengths = {c: rng.uniform(10.0, 800.0) for c in parent}
    return FeederTree(ids[0], points, parent, lengths)


def make_graph(node_pts: dict[str, tuple[float, float]], edges, directed: bool = True) -> RoadGraph:
    """edges: iterable of (u, v) or (u, v, length)."""
    nodes = {n: GeoPoint(*p) for n, p in node_pts.items()}
    out = []
    for i, e in enumerate(edges):
        length = e[2] if len(e) > 2 else 100.0
        out.append(RoadEdge(f"e{i}", e[0], e[1], length))
    return RoadGraph(nodes, out, directed)


@pytest.fixture
def region_config() -> Path:
    return FIXTURES / "region" / "region.toml"


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.report_line(number))
