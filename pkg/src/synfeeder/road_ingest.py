"""Loading road networks and substation records from files.

Two road-graph encodings are understood:

* ``node-link-json``::

      {"directed": true,
       "nodes": [{"id": "a", "lat": 33.34, "lon": -111.67}, ...],
       "edges": [{"from": "a", "to": "b", "length_m": 120.5}, ...]}

  ``length_m`` and ``id`` are optional on edges.

* ``graphml-xml``: standard GraphML. Node coordinates are read from keys named
  ``lat``/``lon`` (or osmnx-style ``y``/``x``); edge lengths from ``length_m``
  (or ``length``).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterable

from .errors import EmptyGraphError, ParseError, SchemaError
from .geo import GeoPoint, haversine_m

log = logging.getLogger(__name__)

FORMATS = ("node-link-json", "graphml-xml")
SUBSTATION_COLUMNS = ("id", "lat", "lon", "p_mw", "q_mvar", "base_kv")

_GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"


@dataclass(frozen=True)
class RoadEdge:
    edge_id: str
    source: str
    target: str
    length_m: float

    @property
    def is_self_loop(self) -> bool:
        return self.source == self.target


@dataclass
class RoadGraph:
    nodes: dict[str, GeoPoint]
    edges: list[RoadEdge]
    directed: bool = True

    def __post_init__(self) -> None:
        if not self.nodes:
            raise EmptyGraphError("road graph has no nodes")
        seen: set[str] = set()
        for e in self.edges:
            if e.edge_id in seen:
                raise SchemaError(f"duplicate edge id {e.edge_id!r}")
            seen.add(e.edge_id)
            for end in (e.source, e.target):
                if end not in self.nodes:
                    raise SchemaError(f"edge {e.edge_id!r} references unknown node {end!r}")
            if not math.isfinite(e.length_m) or e.length_m < 0:
                raise SchemaError(f"edge {e.edge_id!r} has invalid length {e.length_m!r}")
            if not e.is_self_loop and e.length_m <= 0:
                raise SchemaError(f"edge {e.edge_id!r} has non-positive length")

    @property
    def total_length_m(self) -> float:
        return math.fsum(e.length_m for e in self.edges)

    def adjacency(self) -> dict[str, set[str]]:
        """Undirected neighbour sets, self-loops excluded."""
        adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for e in self.edges:
            if not e.is_self_loop:
                adj[e.source].add(e.target)
                adj[e.target].add(e.source)
        return adj


@dataclass(frozen=True)
class Substation:
    id: str
    location: GeoPoint
    p_mw: float
    q_mvar: float
    base_kv: float

    def __post_init__(self) -> None:
        if not self.p_mw > 0:
            raise SchemaError(f"substation {self.id!r} has non-positive demand {self.p_mw}")
        if not self.base_kv > 0:
            raise SchemaError(f"substation {self.id!r} has non-positive base_kv {self.base_kv}")
        if not math.isfinite(self.q_mvar):
            raise SchemaError(f"substation {self.id!r} has non-finite q_mvar")


class SubstationList(list):
    """List of accepted substations; ``dropped`` counts rows with p_mw <= 0."""

    def __init__(self, items: Iterable[Substation] = (), dropped: int = 0):
        super().__init__(items)
        self.dropped = dropped


def _point(lat, lon, where: str) -> GeoPoint:
    try:
        lat_f, lon_f = float(lat), float(lon)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: non-numeric coordinate ({lat!r}, {lon!r})") from exc
    try:
        return GeoPoint(lat_f, lon_f)
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def _finish_edges(raw: list[tuple[str, str, str, float | None]], nodes: dict[str, GeoPoint]) -> list[RoadEdge]:
    edges = []
    for edge_id, u, v, length in raw:
        for end in (u, v):
            if end not in nodes:
                raise SchemaError(f"edge {edge_id!r} references unknown node {end!r}")
        if length is None:
            length = haversine_m(nodes[u], nodes[v])
            if u != v and length <= 0:
                raise SchemaError(f"edge {edge_id!r} joins coincident nodes and has no length")
        edges.append(RoadEdge(edge_id, u, v, length))
    return edges


def _parse_node_link(data: bytes) -> RoadGraph:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"road graph is not UTF-8: {exc}") from exc
    if not isinstance(doc, dict) or "nodes" not in doc:
        raise SchemaError("node-link JSON must be an object with a 'nodes' list")
    nodes: dict[str, GeoPoint] = {}
    for i, rec in enumerate(doc["nodes"]):
        try:
            nid = str(rec["id"])
            point = _point(rec["lat"], rec["lon"], f"nodes[{i}]")
        except KeyError as exc:
            raise SchemaError(f"nodes[{i}] missing field {exc.args[0]!r}") from exc
        if nid in nodes:
            raise SchemaError(f"nodes[{i}]: duplicate node id {nid!r}")
        nodes[nid] = point
    if not nodes:
        raise EmptyGraphError("road graph has no nodes")
    raw = []
    for i, rec in enumerate(doc.get("edges", doc.get("links", []))):
        try:
            u, v = str(rec["from"]), str(rec["to"])
        except KeyError as exc:
            raise SchemaError(f"edges[{i}] missing field {exc.args[0]!r}") from exc
        length = rec.get("length_m")
        if length is not None:
            try:
                length = float(length)
            except (TypeError, ValueError) as exc:
                raise ParseError(f"edges[{i}]: non-numeric length_m {length!r}") from exc
        raw.append((str(rec.get("id", f"e{i}")), u, v, length))
    return RoadGraph(nodes, _finish_edges(raw, nodes), bool(doc.get("directed", True)))


def _strip_ns(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _parse_graphml(data: bytes) -> RoadGraph:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"invalid GraphML at line {line} column {col}: {exc}") from exc
    keys: dict[str, str] = {}
    for el in root.iter():
        if _strip_ns(el.tag) == "key":
            keys[el.get("id", "")] = el.get("attr.name", el.get("id", ""))
    graph = next((el for el in root.iter() if _strip_ns(el.tag) == "graph"), None)
    if graph is None:
        raise SchemaError("GraphML document has no <graph> element")
    directed = graph.get("edgedefault", "directed") == "directed"

    def attrs(el) -> dict[str, str]:
        return {
            keys.get(d.get("key", ""), d.get("key", "")): (d.text or "").strip()
            for d in el
            if _strip_ns(d.tag) == "data"
        }

    nodes: dict[str, GeoPoint] = {}
    raw = []
    n_edges = 0
    for el in graph:
        tag = _strip_ns(el.tag)
        if tag == "node":
            nid = el.get("id")
            if nid is None:
                raise SchemaError("<node> without id attribute")
            a = attrs(el)
            lat = a.get("lat", a.get("y"))
            lon = a.get("lon", a.get("x"))
            if lat is None or lon is None:
                raise SchemaError(f"<node id={nid!r}> lacks lat/lon data")
            if nid in nodes:
                raise SchemaError(f"duplicate node id {nid!r}")
            nodes[nid] = _point(lat, lon, f"<node id={nid!r}>")
        elif tag == "edge":
            u, v = el.get("source"), el.get("target")
            if u is None or v is None:
                raise SchemaError(f"<edge> #{n_edges} lacks source/target")
            a = attrs(el)
            length = a.get("length_m", a.get("length"))
            if length is not None:
                try:
                    length = float(length)
                except ValueError as exc:
                    raise ParseError(f"<edge> #{n_edges}: non-numeric length {length!r}") from exc
            raw.append((el.get("id") or f"e{n_edges}", u, v, length))
            n_edges += 1
    if not nodes:
        raise EmptyGraphError("road graph has no nodes")
    return RoadGraph(nodes, _finish_edges(raw, nodes), directed)


def parse_road_graph(data: bytes, format_tag: str = "node-link-json") -> RoadGraph:
    if format_tag == "node-link-json":
        return _parse_node_link(data)
    if format_tag == "graphml-xml":
        return _parse_graphml(data)
    raise ValueError(f"unknown road graph format {format_tag!r}; expected one of {FORMATS}")


def dump_road_graph(g: RoadGraph, format_tag: str = "node-link-json") -> bytes:
    """Serialize a RoadGraph; floats are written with repr so they round-trip exactly."""
    if format_tag == "node-link-json":
        doc = {
            "directed": g.directed,
            "nodes": [{"id": n, "lat": p.lat, "lon": p.lon} for n, p in g.nodes.items()],
            "edges": [
                {"id": e.edge_id, "from": e.source, "to": e.target, "length_m": e.length_m}
                for e in g.edges
            ],
        }
        return json.dumps(doc, indent=1).encode()
    if format_tag == "graphml-xml":
        ET.register_namespace("", _GRAPHML_NS)
        q = lambda t: f"{{{_GRAPHML_NS}}}{t}"  # noqa: E731
        root = ET.Element(q("graphml"))
        for kid, target in (("lat", "node"), ("lon", "node"), ("length_m", "edge")):
            ET.SubElement(root, q("key"), {"id": kid, "for": target, "attr.name": kid, "attr.type": "double"})
        graph = ET.SubElement(root, q("graph"), {"edgedefault": "directed" if g.directed else "undirected"})
        for n, p in g.nodes.items():
            el = ET.SubElement(graph, q("node"), {"id": n})
            ET.SubElement(el, q("data"), {"key": "lat"}).text = repr(p.lat)
            ET.SubElement(el, q("data"), {"key": "lon"}).text = repr(p.lon)
        for e in g.edges:
            el = ET.SubElement(graph, q("edge"), {"id": e.edge_id, "source": e.source, "target": e.target})
            ET.SubElement(el, q("data"), {"key": "length_m"}).text = repr(e.length_m)
        return ET.tostring(root, encoding="utf-8", xml_declaration=True)
    raise ValueError(f"unknown road graph format {format_tag!r}")


def _float_field(value, row_no: int, column: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"row {row_no}: non-numeric {column} {value!r}") from exc
    if not math.isfinite(out):
        raise ParseError(f"row {row_no}: non-finite {column} {value!r}")
    return out


def parse_substations(data: bytes) -> SubstationList:
    """Parse substation records from CSV (or a JSON list of objects).

    Rows whose ``p_mw`` is not strictly positive are skipped; the number skipped
    is reported on the returned list as ``dropped``.
    """
    text = data.decode("utf-8-sig") if isinstance(data, bytes) else data
    if not text.strip():
        return SubstationList()
    if text.lstrip()[0] in "[{":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        rows = doc if isinstance(doc, list) else doc.get("substations", [])
        first_row = 1
    else:
        reader = csv.reader(io.StringIO(text))
        header = [h.strip() for h in next(reader)]
        if tuple(header) != SUBSTATION_COLUMNS:
            missing = [c for c in SUBSTATION_COLUMNS if c not in header]
            raise SchemaError(
                f"substation CSV header must be {','.join(SUBSTATION_COLUMNS)}; "
                f"got {','.join(header)}" + (f" (missing {missing})" if missing else "")
            )
        rows = [dict(zip(header, r)) for r in reader if any(c.strip() for c in r)]
        first_row = 2

    subs: list[Substation] = []
    dropped = 0
    for i, row in enumerate(rows):
        row_no = i + first_row
        missing = [c for c in SUBSTATION_COLUMNS if c not in row or row[c] is None]
        if missing:
            raise SchemaError(f"row {row_no}: missing column(s) {missing}")
        p_mw = _float_field(row["p_mw"], row_no, "p_mw")
        if p_mw <= 0:
            dropped += 1
            continue
        subs.append(
            Substation(
                id=str(row["id"]).strip(),
                location=_point(
                    _float_field(row["lat"], row_no, "lat"),
                    _float_field(row["lon"], row_no, "lon"),
                    f"row {row_no}",
                ),
                p_mw=p_mw,
                q_mvar=_float_field(row["q_mvar"], row_no, "q_mvar"),
                base_kv=_float_field(row["base_kv"], row_no, "base_kv"),
            )
        )
    ids = [s.id for s in subs]
    if len(set(ids)) != len(ids):
        raise SchemaError("duplicate substation id")
    if dropped:
        log.warning("dropped %d substation(s) with non-positive net real power", dropped)
    return SubstationList(subs, dropped)
