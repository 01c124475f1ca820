from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synfeeder.census import BlockIndex, contains, locate_node, node_weights, parse_blocks
from synfeeder.errors import GeometryError, SchemaError
from synfeeder.geo import GeoPoint

from oracles import winding_number


def square(x0, y0, size=1.0):
    return [[x0, y0], [x0 + size, y0], [x0 + size, y0 + size], [x0, y0 + size], [x0, y0]]


def fc(*features):
    return json.dumps({"type": "FeatureCollection", "features": list(features)}).encode()


def feature(coords, population=100, block_id=None, gtype="Polygon"):
    props = {"population": population}
    if block_id is not None:
        props["block_id"] = block_id
    return {"type": "Feature", "properties": props, "geometry": {"type": gtype, "coordinates": coords}}


def test_unit_square_block():
    (b,) = parse_blocks(fc(feature([square(0, 0)])))
    assert b.population == 100 and b.block_id == "0"


def test_many_features():
    feats = [feature([square(i, 0)], population=i, block_id=f"b{i}") for i in range(662)]
    assert len(parse_blocks(fc(*feats))) == 662


def test_missing_population_names_feature():
    bad = feature([square(0, 0)])
    del bad["properties"]["population"]
    with pytest.raises(SchemaError, match="feature 1"):
        parse_blocks(fc(feature([square(5, 5)]), bad))


def test_unclosed_ring():
    with pytest.raises(GeometryError):
        parse_blocks(fc(feature([[[0, 0], [1, 0], [1, 1], [0, 1]]])))


def test_negative_population():
    with pytest.raises(SchemaError):
        parse_blocks(fc(feature([square(0, 0)], population=-1)))


def test_multipolygon_population_on_largest_part():
    blocks = parse_blocks(fc(feature([[square(0, 0, 0.5)], [square(3, 3, 2.0)]], population=70,
                                     block_id="m", gtype="MultiPolygon")))
    assert [(b.block_id, b.population) for b in blocks] == [("m#0", 0), ("m#1", 70)]


def test_locate_centroid_outside_and_shared_edge():
    blocks = parse_blocks(fc(feature([square(0, 0)], block_id="b2"), feature([square(1, 0)], block_id="b1")))
    assert locate_node(GeoPoint(0.5, 0.5), blocks) == "b2"
    assert locate_node(GeoPoint(5.0, 5.0), blocks) is None
    assert locate_node(GeoPoint(0.5, 1.0), blocks) == "b1"  # on the shared edge x = 1


def test_hole_excludes_interior_but_keeps_boundary():
    ring = square(0, 0, 4)
    hole = square(1, 1, 2)
    (b,) = parse_blocks(fc(feature([ring, hole])))
    assert not contains(b, GeoPoint(2, 2))
    assert contains(b, GeoPoint(1, 2))  # hole boundary is polygon boundary
    assert contains(b, GeoPoint(0.5, 0.5))


def _convex(rng):
    import math
    k = rng.randint(3, 9)
    angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(k))
    cx, cy, r = rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0.5, 3)
    pts = [[cx + r * math.cos(a), cy + r * math.sin(a)] for a in angles]
    return pts + [pts[0]]


def test_agrees_with_winding_number_oracle():
    rng = random.Random(4)
    for _ in range(40):
        ring = _convex(rng)
        (b,) = parse_blocks(fc(feature([ring])))
        for _ in range(50):
            lon, lat = rng.uniform(-9, 9), rng.uniform(-9, 9)
            expected = winding_number(lon, lat, [tuple(p) for p in ring]) != 0
            assert contains(b, GeoPoint(lat, lon)) == expected


def test_denominator_counts_all_blocks():
    feats = [feature([square(0, 0)], population=100, block_id="b0"),
             feature([square(1, 0)], population=25015 - 100, block_id="b1")]
    table = node_weights({"n": GeoPoint(0.5, 0.5)}, parse_blocks(fc(*feats)))
    assert table.total_population == 25015
    assert table.weights["n"] == pytest.approx(100 / 25015)
    assert table.weights["n"] == pytest.approx(0.003998, abs=5e-7)


def test_zero_population_falls_back_to_one():
    blocks = parse_blocks(fc(feature([square(0, 0)], population=0), feature([square(1, 0)], population=0)))
    table = node_weights({"a": GeoPoint(0.5, 0.5), "b": GeoPoint(0.5, 1.5)}, blocks)
    assert table.weights == {"a": 1.0, "b": 1.0}


def test_empty_block_list_falls_back(caplog):
    table = node_weights({"a": GeoPoint(0, 0)}, [])
    assert table.weights == {"a": 1.0}
    assert "no census blocks" in caplog.text


def test_two_block_shares():
    blocks = parse_blocks(fc(feature([square(0, 0)], population=30), feature([square(1, 0)], population=70)))
    table = node_weights({"a": GeoPoint(0.5, 0.5), "b": GeoPoint(0.5, 1.5)}, blocks)
    assert table.weights["a"] == pytest.approx(0.3) and table.weights["b"] == pytest.approx(0.7)


def test_outside_node_takes_nearest_block():
    blocks = parse_blocks(fc(feature([square(0, 0)], population=30, block_id="w"),
                             feature([square(10, 0)], population=70, block_id="e")))
    table = node_weights({"x": GeoPoint(0.5, 12.0)}, blocks)
    assert table.block_of["x"] == "e"
    assert table.weights["x"] == pytest.approx(0.7)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1000), min_size=2, max_size=6).filter(lambda p: sum(p) > 0),
       st.integers(2, 50))
def test_weights_scale_invariant(pops, k):
    def blocks(scale):
        return parse_blocks(fc(*[feature([square(i, 0)], population=p * scale) for i, p in enumerate(pops)]))
    nodes = {f"n{i}": GeoPoint(0.5, i + 0.5) for i in range(len(pops))}
    a, b = node_weights(nodes, blocks(1)), node_weights(nodes, blocks(k))
    for n in nodes:
        assert a.weights[n] == pytest.approx(b.weights[n], rel=1e-12)
        assert a.weights[n] >= 0


def test_index_reuse():
    blocks = parse_blocks(fc(feature([square(0, 0)], population=5)))
    idx = BlockIndex(blocks)
    assert locate_node(GeoPoint(0.2, 0.2), idx) == "0"
