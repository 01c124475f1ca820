"""Synthetic radial distribution feeders from road networks, census blocks and substations."""

from .errors import SynFeederError
from .geo import GeoPoint, haversine_m
from .road_ingest import RoadGraph, Substation, parse_road_graph, parse_substations

__all__ = ["GeoPoint", "RoadGraph", "Substation", "SynFeederError", "haversine_m", "parse_road_graph",
           "parse_substations"]
__version__ = "0.1.0"
