"""Synthetic grid regions for demos, fixtures and benchmarks."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .geo import GeoPoint, haversine_m
from .road_ingest import RoadEdge, RoadGraph, dump_road_graph

DEFAULT_CATALOG = """name,r_ohm_per_km,x_ohm_per_km,s_capacity_mva
AL_1_0,0.6030,0.4120,4.0
AL_4_0,0.3060,0.3810,6.5
AL_500,0.1280,0.3520,10.0
CU_1000,0.0700,0.3300,15.0
"""


def grid_road_graph(
    rows: int,
    cols: int,
    origin: tuple[float, float] = (33.320, -111.700),
    step: tuple[float, float] = (0.0030, 0.0036),
    seed: int = 0,
    one_way_fraction: float = 0.1,
    drop_fraction: float = 0.05,
) -> RoadGraph:
    """Jittered street grid as a directed graph.

    Most streets get an edge in each direction; ``one_way_fraction`` of them keep
    only one and ``drop_fraction`` are removed, which leaves some nodes outside
    the strongly connected core. Lengths are left to the haversine default.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    nodes = {}
    for r in range(rows):
        for c in range(cols):
            jitter = rng.uniform(-0.15, 0.15, size=2)
            nodes[f"n{r:03d}_{c:03d}"] = GeoPoint(
                round(origin[0] + (r + jitter[0]) * step[0], 7),
                round(origin[1] + (c + jitter[1]) * step[1], 7),
            )
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = f"n{r:03d}_{c:03d}"
            for dr, dc in ((0, 1), (1, 0)):
                if r + dr >= rows or c + dc >= cols:
                    continue
                v = f"n{r + dr:03d}_{c + dc:03d}"
                roll = rng.uniform()
                if roll < drop_fraction:
                    continue
                length = round(haversine_m(nodes[u], nodes[v]), 3)
                if roll < drop_fraction + one_way_fraction:
                    pair = [(u, v)] if rng.uniform() < 0.5 else [(v, u)]
                else:
                    pair = [(u, v), (v, u)]
                for a, b in pair:
                    edges.append(RoadEdge(f"e{len(edges)}", a, b, length))
    return RoadGraph(nodes, edges, directed=True)


def grid_blocks(
    south: float, west: float, north: float, east: float, ny: int, nx: int, seed: int = 0,
    max_population: int = 400,
) -> dict:
    """Rectangular census blocks tiling a bounding box, as a GeoJSON dict."""
    rng = np.random.Generator(np.random.PCG64(seed))
    lat = np.linspace(south, north, ny + 1)
    lon = np.linspace(west, east, nx + 1)
    feats = []
    for i in range(ny):
        for j in range(nx):
            s, n = round(float(lat[i]), 7), round(float(lat[i + 1]), 7)
            w, e = round(float(lon[j]), 7), round(float(lon[j + 1]), 7)
            feats.append({
                "type": "Feature",
                "properties": {"block_id": f"b{i:02d}{j:02d}", "population": int(rng.integers(0, max_population))},
                "geometry": {"type": "Polygon", "coordinates": [[[w, s], [e, s], [e, n], [w, n], [w, s]]]},
            })
    return {"type": "FeatureCollection", "features": feats}


def write_region(
    out_dir: Path,
    rows: int,
    cols: int,
    substations: list[tuple[str, float, float, float, float, float]],
    seed: int = 0,
    blocks: tuple[int, int] = (4, 4),
    config_extra: dict | None = None,
    **grid_kw,
) -> Path:
    """Write road graph, substations, blocks, catalog and config; return the config path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    g = grid_road_graph(rows, cols, seed=seed, **grid_kw)
    (out_dir / "roads.json").write_bytes(dump_road_graph(g))
    lats = [p.lat for p in g.nodes.values()]
    lons = [p.lon for p in g.nodes.values()]
    pad = 0.001
    fc = grid_blocks(min(lats) - pad, min(lons) - pad, max(lats) + pad, max(lons) + pad, *blocks, seed=seed)
    (out_dir / "blocks.geojson").write_text(json.dumps(fc, indent=1) + "\n")
    rows_txt = "".join(f"{s[0]},{s[1]},{s[2]},{s[3]},{s[4]},{s[5]}\n" for s in substations)
    (out_dir / "substations.csv").write_text("id,lat,lon,p_mw,q_mvar,base_kv\n" + rows_txt)
    (out_dir / "cables.csv").write_text(DEFAULT_CATALOG)
    cfg = {
        "road_graph": "roads.json",
        "substations": "substations.csv",
        "census_blocks": "blocks.geojson",
        "cable_catalog": "cables.csv",
        "output_dir": "out",
        "rng_seed": seed,
    }
    cfg.update(config_extra or {})
    lines = []
    for k, v in cfg.items():
        if isinstance(v, bool):
            lines.append(f"{k} = {'true' if v else 'false'}")
        elif isinstance(v, str):
            lines.append(f'{k} = "{v}"')
        else:
            lines.append(f"{k} = {v}")
    path = out_dir / "region.toml"
    path.write_text("\n".join(lines) + "\n")
    return path
