"""Lossless linearised DistFlow on a radial feeder, cable sizing and pruning.

Per-unit convention: s_base = 1 MVA, so MW/MVAr flows are numerically per-unit
and Z_base = base_kv**2 ohm.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

from .census import WeightTable
from .errors import (
    CapacityExceededError,
    ExhaustedError,
    NotRadialError,
    ParseError,
    SchemaError,
    VoltageCollapseError,
)
from .loads import LoadAssignment, LoadConfig, assign_loads
from .partition import FeederTree
from .road_ingest import Substation

log = logging.getLogger(__name__)

CATALOG_COLUMNS = ("name", "r_ohm_per_km", "x_ohm_per_km", "s_capacity_mva")
S_BASE_MVA = 1.0


@dataclass(frozen=True)
class CableSpec:
    name: str
    r_ohm_per_km: float
    x_ohm_per_km: float
    s_capacity_mva: float

    def __post_init__(self) -> None:
        for attr in ("r_ohm_per_km", "x_ohm_per_km", "s_capacity_mva"):
            v = getattr(self, attr)
            if not (math.isfinite(v) and v > 0):
                raise SchemaError(f"cable {self.name!r}: {attr} must be positive, got {v!r}")


@dataclass(frozen=True)
class CableChoice:
    cable: CableSpec
    parallels: int
    r_pu: float
    x_pu: float

    @property
    def capacity_mva(self) -> float:
        return self.cable.s_capacity_mva * self.parallels

    @property
    def code(self) -> str:
        return f"{self.cable.name}_{self.parallels}"


@dataclass
class DistFlowSolution:
    P: dict[str, float]  # keyed by child node of each edge
    Q: dict[str, float]
    S: dict[str, float]
    choice: dict[str, CableChoice]
    v2: dict[str, float]
    loads: LoadAssignment
    base_kv: float
    v0: float = 1.0
    v_th: float = 0.95
    s_base_mva: float = S_BASE_MVA
    prune_iterations: int = 0
    pruned: list[str] = field(default_factory=list)

    @property
    def v(self) -> dict[str, float]:
        return {n: math.sqrt(x) for n, x in self.v2.items()}

    @property
    def min_v(self) -> float:
        return math.sqrt(min(self.v2.values()))

    @property
    def min_v_node(self) -> str:
        return min(self.v2, key=lambda n: (self.v2[n], n))


def parse_catalog(data: bytes) -> list[CableSpec]:
    text = data.decode("utf-8-sig") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text))
    try:
        header = tuple(h.strip() for h in next(reader))
    except StopIteration:
        raise SchemaError("cable catalog is empty") from None
    if header != CATALOG_COLUMNS:
        raise SchemaError(f"cable catalog header must be {','.join(CATALOG_COLUMNS)}; got {','.join(header)}")
    out = []
    for row_no, row in enumerate(reader, start=2):
        if not any(c.strip() for c in row):
            continue
        if len(row) != len(CATALOG_COLUMNS):
            raise SchemaError(f"catalog row {row_no}: expected {len(CATALOG_COLUMNS)} fields")
        try:
            nums = [float(c) for c in row[1:]]
        except ValueError as exc:
            raise ParseError(f"catalog row {row_no}: {exc}") from exc
        out.append(CableSpec(row[0].strip(), *nums))
    if not out:
        raise SchemaError("cable catalog has no cables")
    return out


def _subtree_sums(order: list[str], parent: dict[str, str], values: dict[str, float]) -> dict[str, float]:
    """Correctly rounded subtree sums, independent of summation order.

    Floats are dyadic rationals, so scaling every value to an integer over the
    largest denominator makes the accumulation exact; each sum is rounded once.
    """
    ratios = {n: float(values.get(n, 0.0)).as_integer_ratio() for n in order}
    den = max(d for _, d in ratios.values())
    acc = {n: num * (den // d) for n, (num, d) in ratios.items()}
    for n in reversed(order[1:]):
        acc[parent[n]] += acc[n]
    return {n: acc[n] / den for n in order}


def accumulate_flows(tree: FeederTree, loads: LoadAssignment) -> tuple[dict[str, float], dict[str, float]]:
    """Edge flows (keyed by child node) as exact child-subtree load sums."""
    order = tree.order()
    if len(order) != len(tree.points):
        raise NotRadialError("tree order does not cover every node")
    sub_p = _subtree_sums(order, tree.parent, loads.p_mw)
    sub_q = _subtree_sums(order, tree.parent, loads.q_mvar)
    return {n: sub_p[n] for n in order[1:]}, {n: sub_q[n] for n in order[1:]}


def root_injection(tree: FeederTree, loads: LoadAssignment) -> tuple[float, float]:
    """Power drawn from the substation: the whole tree's load, rounded once."""
    order = tree.order()
    return (_subtree_sums(order, tree.parent, loads.p_mw)[tree.root],
            _subtree_sums(order, tree.parent, loads.q_mvar)[tree.root])


def sort_catalog(catalog: Sequence[CableSpec]) -> list[CableSpec]:
    return sorted(catalog, key=lambda c: (c.s_capacity_mva, c.name))


def choose_cable(s_mva: float, catalog: Sequence[CableSpec], l_max: int) -> tuple[CableSpec, int] | None:
    """First (cable, parallels) with capacity strictly above s_mva.

    Scans parallel counts in the outer loop and cables (ascending capacity) in
    the inner loop, so the parallel count is minimal. ``catalog`` must be sorted.
    """
    for parallels in range(1, l_max + 1):
        for cable in catalog:
            if cable.s_capacity_mva * parallels > s_mva:
                return cable, parallels
    return None


def choose_cables(
    tree: FeederTree,
    P: dict[str, float],
    Q: dict[str, float],
    catalog: Sequence[CableSpec],
    l_max: int,
    base_kv: float,
) -> dict[str, CableChoice]:
    if not catalog:
        raise ValueError("cable catalog is empty")
    if l_max < 1:
        raise ValueError("l_max must be at least 1")
    ordered = sort_catalog(catalog)
    z_base = base_kv**2 / S_BASE_MVA
    out = {}
    for child in tree.order()[1:]:
        s = math.hypot(P[child], Q[child])
        hit = choose_cable(s, ordered, l_max)
        if hit is None:
            raise CapacityExceededError((tree.parent[child], child), s, ordered[-1].s_capacity_mva * l_max)
        cable, parallels = hit
        km = tree.length_m[child] / 1000.0
        out[child] = CableChoice(
            cable,
            parallels,
            cable.r_ohm_per_km * km / parallels / z_base,
            cable.x_ohm_per_km * km / parallels / z_base,
        )
    return out


def solve_voltages(
    tree: FeederTree,
    P: dict[str, float],
    Q: dict[str, float],
    impedances: dict[str, CableChoice] | dict[str, tuple[float, float]],
    v0: float = 1.0,
) -> dict[str, float]:
    """Squared voltage magnitudes, root to leaves."""
    v2 = {tree.root: v0 * v0}
    for child in tree.order()[1:]:
        z = impedances[child]
        r, x = (z.r_pu, z.x_pu) if isinstance(z, CableChoice) else z
        par = tree.parent[child]
        val = v2[par] - 2.0 * (r * P[child] + x * Q[child])
        if val <= 0:
            raise VoltageCollapseError((par, child), val)
        v2[child] = val
    return v2


def solve_feeder(
    tree: FeederTree,
    loads: LoadAssignment,
    catalog: Sequence[CableSpec],
    l_max: int,
    base_kv: float,
    v0: float = 1.0,
    v_th: float = 0.95,
) -> DistFlowSolution:
    P, Q = accumulate_flows(tree, loads)
    choice = choose_cables(tree, P, Q, catalog, l_max, base_kv)
    v2 = solve_voltages(tree, P, Q, choice, v0)
    S = {n: math.hypot(P[n], Q[n]) for n in P}
    return DistFlowSolution(P, Q, S, choice, v2, loads, base_kv, v0, v_th)


def prune_and_iterate(
    tree: FeederTree,
    weights: WeightTable | None,
    load_cfg: LoadConfig,
    catalog: Sequence[CableSpec],
    sub: Substation,
    v_th: float = 0.95,
    max_iters: int = 50,
    l_max: int = 5,
    seed: int | None = None,
) -> tuple[FeederTree, DistFlowSolution]:
    """Solve, and while the lowest voltage is under ``v_th`` strip every leaf and re-solve.

    Loads are reassigned from the same seed on each reduced tree, so the
    substation totals are preserved. A voltage collapse counts as a violation.
    ``max_iters`` bounds the number of solves.
    """
    if not 0 < v_th < 1:
        raise ValueError("v_th must lie in (0, 1)")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    pruned: list[str] = []
    current = tree
    for iteration in range(max_iters):
        if len(current) == 1:
            raise ExhaustedError(f"feeder {sub.id!r} pruned down to its root without meeting v_th={v_th}")
        loads = assign_loads(current, weights, load_cfg, sub.p_mw, sub.q_mvar, seed)
        try:
            sol = solve_feeder(current, loads, catalog, l_max, sub.base_kv, 1.0, v_th)
            low = sol.min_v
        except VoltageCollapseError as exc:
            sol, low = None, 0.0
            log.info("feeder %s: voltage collapse on %s, pruning", sub.id, exc.edge)
        if sol is not None and low >= v_th:
            sol.prune_iterations = iteration
            sol.pruned = pruned
            return current, sol
        leaves = current.leaves()
        log.info("feeder %s: min v %.4f < %.4f, removing %d leaves", sub.id, low, v_th, len(leaves))
        pruned.extend(leaves)
        current = current.without(leaves)
    raise ExhaustedError(f"feeder {sub.id!r} still below v_th={v_th} after {max_iters} solves")
