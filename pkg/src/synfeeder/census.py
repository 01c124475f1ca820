"""Census-block polygons and population weights for feeder nodes."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import GeometryError, ParseError, SchemaError
from .geo import GeoPoint, haversine_many

log = logging.getLogger(__name__)

Ring = list[tuple[float, float]]  # (lon, lat) vertices, closed


@dataclass(frozen=True)
class CensusBlock:
    block_id: str
    rings: tuple[tuple[tuple[float, float], ...], ...]  # outer ring first, then holes
    population: int

    @property
    def outer(self):
        return self.rings[0]

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        xs = [x for x, _ in self.outer]
        ys = [y for _, y in self.outer]
        return min(xs), min(ys), max(xs), max(ys)

    def area(self) -> float:
        """Planar lon/lat area with holes removed."""
        return abs(_signed_area(self.outer)) - sum(abs(_signed_area(h)) for h in self.rings[1:])

    def centroid(self) -> GeoPoint:
        ring = self.outer
        a = _signed_area(ring)
        if a == 0:
            pts = ring[:-1]
            return GeoPoint(sum(y for _, y in pts) / len(pts), sum(x for x, _ in pts) / len(pts))
        cx = cy = 0.0
        for (x0, y0), (x1, y1) in zip(ring, ring[1:]):
            cross = x0 * y1 - x1 * y0
            cx += (x0 + x1) * cross
            cy += (y0 + y1) * cross
        return GeoPoint(cy / (6 * a), cx / (6 * a))


@dataclass
class WeightTable:
    weights: dict[str, float]
    total_population: int
    block_of: dict[str, str | None]
    fallback: bool = False


def _signed_area(ring) -> float:
    return 0.5 * math.fsum(x0 * y1 - x1 * y0 for (x0, y0), (x1, y1) in zip(ring, ring[1:]))


def _ring(coords, where: str) -> tuple[tuple[float, float], ...]:
    try:
        pts = tuple((float(c[0]), float(c[1])) for c in coords)
    except (TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"{where}: malformed coordinates") from exc
    if len(pts) < 4:
        raise GeometryError(f"{where}: ring needs at least 4 points, got {len(pts)}")
    if pts[0] != pts[-1]:
        raise GeometryError(f"{where}: ring is not closed")
    return pts


def _population(props: dict, index: int) -> int:
    if "population" not in props or props["population"] is None:
        raise SchemaError(f"feature {index} has no 'population' property")
    value = props["population"]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value) or value < 0:
        raise SchemaError(f"feature {index}: population must be a non-negative integer, got {value!r}")
    return int(value)


def parse_blocks(data: bytes) -> list[CensusBlock]:
    """Read a GeoJSON FeatureCollection of Polygon/MultiPolygon census blocks.

    MultiPolygon features become one block per part; the whole population is
    attached to the part with the largest area and the others get zero. Part
    ids are ``<block_id>#<k>``.
    """
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise SchemaError("census blocks must be a GeoJSON FeatureCollection")
    blocks: list[CensusBlock] = []
    for index, feat in enumerate(doc.get("features", [])):
        props = feat.get("properties") or {}
        pop = _population(props, index)
        base = str(props.get("block_id", index))
        geom = feat.get("geometry") or {}
        gtype = geom.get("type")
        where = f"feature {index}"
        if gtype == "Polygon":
            rings = tuple(_ring(r, where) for r in geom["coordinates"])
            if not rings:
                raise GeometryError(f"{where}: polygon has no rings")
            blocks.append(CensusBlock(base, rings, pop))
        elif gtype == "MultiPolygon":
            parts = [tuple(_ring(r, f"{where} part {k}") for r in poly) for k, poly in enumerate(geom["coordinates"])]
            if not parts or any(not p for p in parts):
                raise GeometryError(f"{where}: empty multipolygon part")
            areas = [CensusBlock("", p, 0).area() for p in parts]
            biggest = max(range(len(parts)), key=lambda k: (areas[k], -k))
            for k, rings in enumerate(parts):
                blocks.append(CensusBlock(f"{base}#{k}", rings, pop if k == biggest else 0))
        else:
            raise SchemaError(f"{where}: unsupported geometry type {gtype!r}")
    return blocks


def _on_segment(px: float, py: float, a, b) -> bool:
    (x0, y0), (x1, y1) = a, b
    if px < min(x0, x1) or px > max(x0, x1) or py < min(y0, y1) or py > max(y0, y1):
        return False
    return (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0) == 0


def _ring_test(px: float, py: float, ring) -> int:
    """1 inside, 0 outside, -1 on the boundary (even-odd rule)."""
    inside = False
    for a, b in zip(ring, ring[1:]):
        if _on_segment(px, py, a, b):
            return -1
        (x0, y0), (x1, y1) = a, b
        if (y0 > py) != (y1 > py):
            x_cross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
            if px < x_cross:
                inside = not inside
    return 1 if inside else 0


def contains(block: CensusBlock, p: GeoPoint) -> bool:
    x, y = p.lon, p.lat
    outer = _ring_test(x, y, block.outer)
    if outer == -1:
        return True
    if outer == 0:
        return False
    for hole in block.rings[1:]:
        t = _ring_test(x, y, hole)
        if t == -1:
            return True
        if t == 1:
            return False
    return True


class BlockIndex:
    """Bounding-box prefilter over a fixed block list, ordered by block_id."""

    def __init__(self, blocks: Sequence[CensusBlock]):
        self.blocks = sorted(blocks, key=lambda b: b.block_id)
        boxes = np.array([b.bbox for b in self.blocks], dtype=float).reshape(-1, 4)
        self.xmin, self.ymin, self.xmax, self.ymax = boxes.T
        cents = [b.centroid() for b in self.blocks]
        self.clat = np.array([c.lat for c in cents])
        self.clon = np.array([c.lon for c in cents])

    def locate(self, p: GeoPoint) -> CensusBlock | None:
        if not self.blocks:
            return None
        hits = np.nonzero(
            (self.xmin <= p.lon) & (p.lon <= self.xmax) & (self.ymin <= p.lat) & (p.lat <= self.ymax)
        )[0]
        for k in hits:
            if contains(self.blocks[k], p):
                return self.blocks[k]
        return None

    def nearest(self, p: GeoPoint) -> CensusBlock:
        d = haversine_many(p.lat, p.lon, self.clat, self.clon)
        return self.blocks[int(np.argmin(d))]


def locate_node(p: GeoPoint, blocks: Sequence[CensusBlock] | BlockIndex) -> str | None:
    index = blocks if isinstance(blocks, BlockIndex) else BlockIndex(blocks)
    hit = index.locate(p)
    return None if hit is None else hit.block_id


def node_weights(
    tree_nodes: Mapping[str, GeoPoint], blocks: Sequence[CensusBlock] | BlockIndex
) -> WeightTable:
    """Population weight of each node: its block's population over the total of all blocks.

    Nodes outside every block take the block with the nearest centroid. An
    empty block list or a zero total population gives every node weight 1.
    """
    index = blocks if isinstance(blocks, BlockIndex) else BlockIndex(blocks)
    total = sum(b.population for b in index.blocks)
    if not index.blocks:
        log.warning("no census blocks supplied; all node weights set to 1.0")
        return WeightTable(dict.fromkeys(tree_nodes, 1.0), 0, dict.fromkeys(tree_nodes), True)
    block_of = {}
    for n, p in tree_nodes.items():
        hit = index.locate(p)
        block_of[n] = (hit or index.nearest(p)).block_id
    if total == 0:
        return WeightTable(dict.fromkeys(tree_nodes, 1.0), 0, block_of, True)
    pop = {b.block_id: b.population for b in index.blocks}
    weights = {n: pop[block_of[n]] / total for n in tree_nodes}
    return WeightTable(weights, total, block_of)
