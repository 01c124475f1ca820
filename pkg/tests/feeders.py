"""Small solved-and-phased feeders with hand-written golden DSS files."""

from __future__ import annotations

from synfeeder.distflow import CableSpec, solve_feeder
from synfeeder.geo import GeoPoint
from synfeeder.loads import LoadAssignment
from synfeeder.partition import FeederTree
from synfeeder.phasing import phase_feeder

CATALOG = [CableSpec("AL_1_0", 0.603, 0.412, 4.0), CableSpec("AL_4_0", 0.306, 0.381, 6.5)]
BASE_KV = 12.47


def _build(parent, lengths, p, q, fraction):
    nodes = ["sub", *sorted(parent)]
    points = {n: GeoPoint(33.3, -111.7 + 0.001 * k) for k, n in enumerate(nodes)}
    tree = FeederTree("sub", points, dict(parent), dict(lengths))
    la = LoadAssignment({n: p.get(n, 0.0) for n in nodes}, {n: q.get(n, 0.0) for n in nodes},
                        sum(p.values()), sum(q.values()))
    sol = solve_feeder(tree, la, CATALOG, l_max=5, base_kv=BASE_KV)
    plan = phase_feeder(tree, sol.S, la.p_mw, fraction)
    return tree, sol, plan


def root_only():
    return _build({}, {}, {}, {}, 0.3) + ("feeder_s1",)


def two_node():
    return _build({"n1": "sub"}, {"n1": 1500.0}, {"n1": 2.5}, {"n1": 0.8}, 1.0) + ("feeder_s2",)


def lateral_b():
    """Three root laterals a, b(+b1), c with loads 5, 2.5, 1 MW: balanced as A, B, C."""
    parent = {"a": "sub", "b": "sub", "c": "sub", "b1": "b"}
    lengths = {"a": 1000.0, "b": 2000.0, "c": 500.0, "b1": 750.0}
    p = {"a": 5.0, "b": 2.0, "b1": 0.5, "c": 1.0}
    q = {"a": 0.5, "b": 0.2, "b1": 0.05, "c": 0.1}
    return _build(parent, lengths, p, q, 0.0) + ("feeder_s3",)


GOLDEN_CASES = {"root_only": root_only, "two_node": two_node, "lateral_b": lateral_b}
