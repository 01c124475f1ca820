"""OpenDSS and GeoJSON writers plus a per-feeder summary record."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass

from .distflow import DistFlowSolution
from .errors import IncompleteModelError
from .partition import FeederTree
from .phasing import PHASES, TERMINAL, THREE_PHASE, PhasePlan

_UNSAFE = re.compile(r"[^A-Za-z0-9_\-]")


def dss_name(raw: str) -> str:
    """OpenDSS-safe element/bus name: anything outside [A-Za-z0-9_-] becomes '_'."""
    return _UNSAFE.sub("_", raw) or "_"


def _f(x: float) -> str:
    out = f"{x:.6f}"
    return "0.000000" if out == "-0.000000" else out


def _bus_names(tree: FeederTree) -> dict[str, str]:
    names: dict[str, str] = {}
    taken: set[str] = set()
    for n in sorted(tree.points):
        base = dss_name(n)
        name, k = base, 1
        while name.lower() in taken:  # OpenDSS names are case-insensitive
            name = f"{base}_{k}"
            k += 1
        taken.add(name.lower())
        names[n] = name
    return names


def _check_complete(tree: FeederTree, solution: DistFlowSolution, plan: PhasePlan) -> None:
    for child in tree.parent:
        if child not in solution.choice:
            raise IncompleteModelError(f"edge into {child!r} has no cable assignment")
        if child not in plan.edge_phase:
            raise IncompleteModelError(f"edge into {child!r} has no phase")
        if child not in solution.v2:
            raise IncompleteModelError(f"node {child!r} has no voltage")


def write_dss(tree: FeederTree, solution: DistFlowSolution, plan: PhasePlan, circuit_name: str) -> str:
    _check_complete(tree, solution, plan)
    bus = _bus_names(tree)
    kv = solution.base_kv
    lines = [
        f"New Circuit.{dss_name(circuit_name)} basekv={_f(kv)} pu={_f(solution.v0)} "
        f"phases=3 bus1={bus[tree.root]}"
    ]

    codes = {}
    for child in tree.parent:
        ch = solution.choice[child]
        codes.setdefault(dss_name(ch.code), ch)
    for name in sorted(codes):
        ch = codes[name]
        lines.append(
            f"New Linecode.{name} R1={_f(ch.cable.r_ohm_per_km / ch.parallels)} "
            f"X1={_f(ch.cable.x_ohm_per_km / ch.parallels)} units=km"
        )

    for child in tree.order()[1:]:
        par = tree.parent[child]
        ph = plan.edge_phase[child]
        term = TERMINAL[ph]
        lines.append(
            f"New Line.{bus[child]} bus1={bus[par]}{term} bus2={bus[child]}{term} "
            f"length={_f(tree.length_m[child] / 1000.0)} units=km "
            f"linecode={dss_name(solution.choice[child].code)} phases={3 if ph == THREE_PHASE else 1}"
        )

    p, q = solution.loads.p_mw, solution.loads.q_mvar
    for n in sorted(tree.points):
        if n == tree.root or (p.get(n, 0.0) == 0 and q.get(n, 0.0) == 0):
            continue
        ph = plan.node_phase.get(n, THREE_PHASE)
        three = ph == THREE_PHASE
        lines.append(
            f"New Load.{bus[n]} bus1={bus[n]}{TERMINAL[ph]} phases={3 if three else 1} conn=wye "
            f"kV={_f(kv if three else kv / math.sqrt(3))} kW={_f(1000.0 * p[n])} "
            f"kvar={_f(1000.0 * q[n])} model=1"
        )

    lines += [f"Set voltagebases=[{_f(kv)}]", "calcvoltagebases", "solve"]
    return "\n".join(lines) + "\n"


def _r6(x: float) -> float:
    return round(x, 6) + 0.0


def write_geojson(tree: FeederTree, solution: DistFlowSolution, plan: PhasePlan) -> str:
    features = []
    for n in sorted(tree.points):
        pt = tree.points[n]
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [pt.lon, pt.lat]},
            "properties": {
                "id": n,
                "is_root": n == tree.root,
                "p_mw": _r6(solution.loads.p_mw.get(n, 0.0)),
                "q_mvar": _r6(solution.loads.q_mvar.get(n, 0.0)),
                "v_pu": _r6(math.sqrt(solution.v2[n])),
                "phase": plan.node_phase.get(n, THREE_PHASE),
            },
        })
    for par, child, length in tree.edges():
        ch = solution.choice.get(child)
        a, b = tree.points[par], tree.points[child]
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": [[a.lon, a.lat], [b.lon, b.lat]]},
            "properties": {
                "from": par,
                "to": child,
                "phase": plan.edge_phase.get(child),
                "cable": ch.cable.name if ch else None,
                "parallels": ch.parallels if ch else None,
                "length_m": _r6(length),
                "p_mw_flow": _r6(solution.P[child]),
                "q_mvar_flow": _r6(solution.Q[child]),
                "s_mva": _r6(solution.S[child]),
            },
        })
    return json.dumps({"type": "FeatureCollection", "features": features}, sort_keys=True, indent=1) + "\n"


@dataclass
class FeederSummary:
    substation: str
    nodes: int
    edges: int
    total_p_mw: float
    total_q_mvar: float
    P_N: float
    Q_N: float
    min_v_pu: float
    min_v_node: str
    v_th: float
    prune_iterations: int
    pruned_nodes: int
    three_phase_edges: int
    laterals: int
    phase_totals_mw: dict[str, float]
    balance_objective_mw: float
    balance_optimal: bool
    cable_usage: dict[str, int]

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True, indent=1) + "\n"


def summary(tree: FeederTree, solution: DistFlowSolution, plan: PhasePlan, substation: str = "") -> FeederSummary:
    usage = Counter(solution.choice[c].code for c in tree.parent)
    return FeederSummary(
        substation=substation,
        nodes=len(tree),
        edges=len(tree) - 1,
        total_p_mw=math.fsum(solution.loads.p_mw.values()),
        total_q_mvar=math.fsum(solution.loads.q_mvar.values()),
        P_N=solution.loads.P_N,
        Q_N=solution.loads.Q_N,
        min_v_pu=solution.min_v,
        min_v_node=solution.min_v_node,
        v_th=solution.v_th,
        prune_iterations=solution.prune_iterations,
        pruned_nodes=len(solution.pruned),
        three_phase_edges=sum(1 for ph in plan.edge_phase.values() if ph == THREE_PHASE),
        laterals=len(plan.laterals),
        phase_totals_mw={ph: plan.totals[ph] for ph in PHASES},
        balance_objective_mw=plan.objective,
        balance_optimal=plan.optimal,
        cable_usage=dict(sorted(usage.items())),
    )
