"""End-to-end feeder generation for every substation of a region."""

from __future__ import annotations

import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from . import census, distflow, export, loads, partition, phasing
from .errors import ConfigError, SynFeederError
from .road_ingest import FORMATS, RoadGraph, Substation, parse_road_graph, parse_substations

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

PATH_KEYS = ("road_graph", "substations", "census_blocks", "cable_catalog", "output_dir")


@dataclass
class PipelineConfig:
    road_graph: Path
    substations: Path
    cable_catalog: Path
    output_dir: Path
    census_blocks: Path | None = None
    road_format: str | None = None
    v_th: float = 0.95
    l_max: int = 5
    max_iters: int = 50
    three_phase_fraction: float = 0.3
    epsilon_dist: str = "t_location_scale"
    epsilon_lo: float = -0.1
    epsilon_hi: float = 0.1
    epsilon_mu: float = 0.0
    epsilon_sigma: float = 0.1
    epsilon_nu: float = 3.0
    zero_load_fraction: float = 0.0
    use_population: bool = True
    rng_seed: int = 0
    substation_filter: tuple[str, ...] = ()
    balance_node_limit: int = phasing.DEFAULT_NODE_LIMIT
    # paths exactly as written in the config file, used for the config hash
    source_paths: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0 < self.v_th < 1:
            raise ConfigError("v_th must lie in (0, 1)")
        if self.l_max < 1:
            raise ConfigError("l_max must be >= 1")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if not 0 <= self.three_phase_fraction <= 1:
            raise ConfigError("three_phase_fraction must lie in [0, 1]")
        if self.epsilon_dist not in ("uniform", "t_location_scale"):
            raise ConfigError(f"epsilon_dist must be 'uniform' or 't_location_scale', got {self.epsilon_dist!r}")
        try:
            self.load_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.road_format is not None and self.road_format not in FORMATS:
            raise ConfigError(f"road_format must be one of {FORMATS}")

    def load_config(self, seed: int | None = None) -> loads.LoadConfig:
        if self.epsilon_dist == "uniform":
            eps = loads.Uniform(self.epsilon_lo, self.epsilon_hi)
        else:
            eps = loads.TLocationScale(self.epsilon_mu, self.epsilon_sigma, self.epsilon_nu)
        return loads.LoadConfig(eps, self.zero_load_fraction, self.rng_seed if seed is None else seed,
                                self.use_population)

    def resolved_road_format(self) -> str:
        if self.road_format:
            return self.road_format
        return "graphml-xml" if self.road_graph.suffix.lower() in (".graphml", ".xml") else "node-link-json"

    def check_paths(self) -> None:
        for key in ("road_graph", "substations", "cable_catalog", "census_blocks"):
            p = getattr(self, key)
            if p is not None and not p.is_file():
                raise ConfigError(f"{key}: file not found: {p}")

    def digest(self) -> str:
        """Hash of every setting that influences output bytes."""
        data = {k: v for k, v in asdict(self).items() if k not in PATH_KEYS + ("source_paths",)}
        data["paths"] = {k: v for k, v in sorted(self.source_paths.items()) if k != "output_dir"}
        data["substation_filter"] = list(self.substation_filter)
        blob = json.dumps(data, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


def load_config(path: Path, **overrides: Any) -> PipelineConfig:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raw.update({k: v for k, v in overrides.items() if v is not None})
    known = {f for f in PipelineConfig.__dataclass_fields__ if f != "source_paths"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config key(s): {unknown}")
    for key in ("road_graph", "substations", "cable_catalog"):
        if key not in raw:
            raise ConfigError(f"config is missing required key {key!r}")
    raw.setdefault("output_dir", "out")
    sources = {}
    for key in PATH_KEYS:
        if raw.get(key) is not None:
            sources[key] = str(raw[key])
            p = Path(raw[key])
            raw[key] = p if p.is_absolute() else path.parent / p
    if "substation_filter" in raw:
        raw["substation_filter"] = tuple(raw["substation_filter"])
    try:
        return PipelineConfig(**raw, source_paths=sources)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class FeederResult:
    substation: str
    status: str
    seed: int
    files: list[str] = field(default_factory=list)
    error: str | None = None
    summary: export.FeederSummary | None = None


@dataclass
class Region:
    """Everything a run needs, after parsing and partitioning."""

    graph: RoadGraph
    subs: list[Substation]
    blocks: census.BlockIndex
    catalog: list[distflow.CableSpec]
    subgraphs: partition.SubgraphSet | None
    cell_errors: dict[str, str]


def prepare_region(cfg: PipelineConfig) -> Region:
    graph = parse_road_graph(cfg.road_graph.read_bytes(), cfg.resolved_road_format())
    subs = list(parse_substations(cfg.substations.read_bytes()))
    blocks = census.BlockIndex(census.parse_blocks(cfg.census_blocks.read_bytes()) if cfg.census_blocks else [])
    catalog = distflow.parse_catalog(cfg.cable_catalog.read_bytes())
    if not subs:
        return Region(graph, subs, blocks, catalog, None, {})
    labeling = partition.voronoi_label(graph, subs)
    sizes = labeling.cell_sizes()
    cell_errors = {sid: f"EmptyCellError: no road nodes fall in the region of substation {sid!r}"
                   for sid, size in sizes.items() if size == 0}
    labeling = labeling.restricted_to([sid for sid, size in sizes.items() if size > 0])
    split = partition.split_subgraphs(graph, labeling)
    return Region(graph, subs, blocks, catalog, partition.connect_isolated(split, graph), cell_errors)


@dataclass
class Feeder:
    substation: Substation
    tree: partition.FeederTree
    solution: distflow.DistFlowSolution
    plan: phasing.PhasePlan


def build_feeder(region: Region, sub: Substation, cfg: PipelineConfig, seed: int) -> Feeder:
    sg = region.subgraphs.subgraphs[sub.id]
    points = {n: region.graph.nodes[n] for n in sorted(sg.nodes)}
    root = partition.pick_root(points, sub)
    tree = partition.mst_reduce(points, sg.edges, root)
    weights = census.node_weights(tree.points, region.blocks)
    tree, sol = distflow.prune_and_iterate(
        tree, weights, cfg.load_config(seed), region.catalog, sub,
        v_th=cfg.v_th, max_iters=cfg.max_iters, l_max=cfg.l_max, seed=seed,
    )
    plan = phasing.phase_feeder(tree, sol.S, sol.loads.p_mw, cfg.three_phase_fraction, cfg.balance_node_limit)
    return Feeder(sub, tree, sol, plan)


def circuit_name(substation_id: str) -> str:
    return f"feeder_{export.dss_name(substation_id)}"


def run_pipeline(cfg: PipelineConfig) -> list[FeederResult]:
    """Generate and write every selected feeder; one failure never stops the others.

    Writes ``<circuit>.dss``, ``<circuit>.geojson`` and ``<circuit>.summary.json``
    per substation and a line-delimited ``manifest.jsonl``.
    """
    cfg.check_paths()
    region = prepare_region(cfg)
    out_dir = cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()
    selected = [s for s in sorted(region.subs, key=lambda s: s.id)
                if not cfg.substation_filter or s.id in cfg.substation_filter]
    if not selected:
        log.warning("no substations to process")

    results = []
    for sub in selected:
        seed = loads.feeder_seed(cfg.rng_seed, sub.id)
        res = FeederResult(sub.id, "ok", seed)
        if sub.id in region.cell_errors:
            res.status, res.error = "failed", region.cell_errors[sub.id]
            results.append(res)
            continue
        try:
            feeder = build_feeder(region, sub, cfg, seed)
            name = circuit_name(sub.id)
            summ = export.summary(feeder.tree, feeder.solution, feeder.plan, sub.id)
            outputs = {
                f"{name}.dss": export.write_dss(feeder.tree, feeder.solution, feeder.plan, name),
                f"{name}.geojson": export.write_geojson(feeder.tree, feeder.solution, feeder.plan),
                f"{name}.summary.json": summ.to_json(),
            }
            for fname, text in outputs.items():
                (out_dir / fname).write_text(text, newline="\n")
            res.files, res.summary = sorted(outputs), summ
        except SynFeederError as exc:
            log.error("feeder %s failed: %s", sub.id, exc)
            res.status, res.error = "failed", f"{type(exc).__name__}: {exc}"
        results.append(res)

    with open(out_dir / "manifest.jsonl", "w", newline="\n") as fh:
        for res in results:
            record = {
                "substation": res.substation,
                "status": res.status,
                "seed": res.seed,
                "global_seed": cfg.rng_seed,
                "config_hash": digest,
                "files": res.files,
                "error": res.error,
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return results
